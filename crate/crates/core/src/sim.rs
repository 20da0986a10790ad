//! Cosine similarity matrices and top-k retrieval.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("zero vector for `{0}`")]
    ZeroVector(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("need at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("k = {k} exceeds the {available} other cases")]
    KTooLarge { k: usize, available: usize },
    #[error("matrix file: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SimError> {
    if u.len() != v.len() {
        return Err(SimError::DimMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 {
        return Err(SimError::ZeroVector("u".into()));
    }
    if nv == 0.0 {
        return Err(SimError::ZeroVector("v".into()));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Symmetric matrix of pairwise cosines with labels in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.labels.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn by_label(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.get(self.index_of(a)?, self.index_of(b)?))
    }

    /// Writes a CSV with a header row and a leading label column, values in
    /// 6-decimal fixed notation.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), SimError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to(&self, w: &mut impl Write) -> Result<(), SimError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec![String::from("case_id")];
        header.extend(self.labels.iter().cloned());
        wtr.write_record(&header).map_err(csv_err)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.row(i).iter().map(|v| format!("{v:.6}")));
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(csv_err)?;
        let header = rdr.headers().map_err(csv_err)?.clone();
        let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let n = labels.len();
        let mut values = Vec::with_capacity(n * n);
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != n + 1 || rec.get(0) != labels.get(rows).map(String::as_str) {
                return Err(SimError::Parse(format!(
                    "row {} does not match header",
                    rows + 1
                )));
            }
            for cell in rec.iter().skip(1) {
                values.push(
                    cell.parse::<f64>()
                        .map_err(|_| SimError::Parse(format!("bad value `{cell}`")))?,
                );
            }
            rows += 1;
        }
        if rows != n {
            return Err(SimError::Parse(format!("{rows} rows for {n} labels")));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::Parse("labels not strictly sorted".into()));
        }
        Ok(Self { labels, values })
    }
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::Parse(e.to_string())
}

/// Full pairwise cosine over labeled vectors.
pub fn similarity_matrix<L, V>(vectors: &[(L, V)]) -> Result<SimilarityMatrix, SimError>
where
    L: AsRef<str>,
    V: AsRef<[f64]>,
{
    if vectors.len() < 2 {
        return Err(SimError::TooFewVectors(vectors.len()));
    }
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| vectors[a].0.as_ref().cmp(vectors[b].0.as_ref()));
    for w in order.windows(2) {
        if vectors[w[0]].0.as_ref() == vectors[w[1]].0.as_ref() {
            return Err(SimError::DuplicateLabel(
                vectors[w[0]].0.as_ref().to_owned(),
            ));
        }
    }

    let dim = vectors[0].1.as_ref().len();
    let mut unit: Vec<Vec<f64>> = Vec::with_capacity(order.len());
    for &i in &order {
        let (label, v) = (&vectors[i].0, vectors[i].1.as_ref());
        if v.len() != dim {
            return Err(SimError::DimMismatch(dim, v.len()));
        }
        let n = norm(v);
        if n == 0.0 {
            return Err(SimError::ZeroVector(label.as_ref().to_owned()));
        }
        unit.push(v.iter().map(|x| x / n).collect());
    }

    let n = order.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let s = dot(&unit[i], &unit[j]).clamp(-1.0, 1.0);
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix {
        labels: order
            .iter()
            .map(|&i| vectors[i].0.as_ref().to_owned())
            .collect(),
        values,
    })
}

/// The `k` most similar other cases, best first, ties by id.
pub fn top_k(
    matrix: &SimilarityMatrix,
    case_id: &str,
    k: usize,
) -> Result<Vec<(String, f64)>, SimError> {
    let q = matrix
        .index_of(case_id)
        .ok_or_else(|| SimError::UnknownCase(case_id.to_owned()))?;
    let available = matrix.len() - 1;
    if k > available {
        return Err(SimError::KTooLarge { k, available });
    }
    let row = matrix.row(q);
    let mut others: Vec<usize> = (0..matrix.len()).filter(|&j| j != q).collect();
    // Labels are sorted, so index order is the lexicographic tie-break.
    others.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    Ok(others
        .into_iter()
        .take(k)
        .map(|j| (matrix.labels[j].clone(), row[j]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1., 2., 3.], &[1., 2., 3.]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1., 0.], &[0., 1.]).unwrap(), 0.0);
        let s = cosine(&[1., 1., 0.], &[1., 0., 0.]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine(&[0., 0.], &[1., 0.]),
            Err(SimError::ZeroVector(_))
        ));
        assert!(matches!(
            cosine(&[1.], &[1., 0.]),
            Err(SimError::DimMismatch(1, 2))
        ));
    }

    #[test]
    fn identical_and_orthogonal() {
        let m = similarity_matrix(&[("a", vec![1., 2.]), ("b", vec![1., 2.])]).unwrap();
        assert!((m.get(0, 1) - 1.0).abs() < 1e-15);
        assert_eq!(m.get(0, 1), m.get(1, 0));
        let m = similarity_matrix(&[
            ("z", vec![0., 0., 1.]),
            ("x", vec![1., 0., 0.]),
            ("y", vec![0., 1., 0.]),
        ])
        .unwrap();
        assert_eq!(m.labels(), &["x", "y", "z"]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn matrix_rejects_zero_and_duplicates() {
        assert!(matches!(
            similarity_matrix(&[("a", vec![1., 0.]), ("b", vec![0., 0.])]),
            Err(SimError::ZeroVector(l)) if l == "b"
        ));
        assert!(matches!(
            similarity_matrix(&[("a", vec![1., 0.]), ("a", vec![0., 1.])]),
            Err(SimError::DuplicateLabel(_))
        ));
        assert!(similarity_matrix(&[("a", vec![1., 0.])]).is_err());
    }

    fn five() -> SimilarityMatrix {
        similarity_matrix(&[
            ("a", vec![1.0, 0.0]),
            ("b", vec![1.0, 0.1]),
            ("c", vec![1.0, 0.1]),
            ("d", vec![0.0, 1.0]),
            ("e", vec![-1.0, 0.2]),
        ])
        .unwrap()
    }

    #[test]
    fn top_k_basics() {
        let m = five();
        assert!(top_k(&m, "a", 0).unwrap().is_empty());
        let r = top_k(&m, "a", 4).unwrap();
        assert!(r.iter().all(|(id, _)| id != "a"));
        // b and c tie; b first.
        assert_eq!(r[0].0, "b");
        assert_eq!(r[1].0, "c");
        assert_eq!(r[3].0, "e");
        assert!(matches!(top_k(&m, "zz", 1), Err(SimError::UnknownCase(_))));
        assert!(matches!(top_k(&m, "a", 5), Err(SimError::KTooLarge { .. })));
    }

    #[test]
    fn top_k_matches_sort_oracle() {
        let m = five();
        for q in m.labels().to_vec() {
            let mut oracle: Vec<(String, f64)> = m
                .labels()
                .iter()
                .filter(|l| **l != q)
                .map(|l| (l.clone(), m.by_label(&q, l).unwrap()))
                .collect();
            oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
            assert_eq!(top_k(&m, &q, 4).unwrap(), oracle);
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = five();
        let f = tempfile::NamedTempFile::new().unwrap();
        m.write_csv(f.path()).unwrap();
        let back = SimilarityMatrix::read_csv(f.path()).unwrap();
        assert_eq!(back.labels(), m.labels());
        for i in 0..5 {
            for j in 0..5 {
                assert!((back.get(i, j) - m.get(i, j)).abs() <= 5e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn scale_invariance(
            vs in prop::collection::vec(prop::collection::vec(0.1f64..1.0, 4), 3..6),
            which in 0usize..3,
            scale in 0.01f64..100.0,
        ) {
            let labeled: Vec<(String, Vec<f64>)> =
                vs.iter().enumerate().map(|(i, v)| (format!("c{i}"), v.clone())).collect();
            let mut scaled = labeled.clone();
            for x in scaled[which].1.iter_mut() { *x *= scale; }
            let a = similarity_matrix(&labeled).unwrap();
            let b = similarity_matrix(&scaled).unwrap();
            for i in 0..a.len() {
                for j in 0..a.len() {
                    prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn top_k_prefix_monotone(
            vs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 4..8),
        ) {
            let labeled: Vec<(String, Vec<f64>)> = vs.iter().enumerate()
                .map(|(i, v)| (format!("c{i}"), v.iter().map(|x| x + 2.5).collect()))
                .collect();
            let m = similarity_matrix(&labeled).unwrap();
            let full = top_k(&m, "c0", m.len() - 1).unwrap();
            prop_assert!(full.windows(2).all(|w| w[0].1 >= w[1].1));
            for k in 0..m.len() {
                prop_assert_eq!(&top_k(&m, "c0", k).unwrap()[..], &full[..k]);
            }
        }
    }
}
