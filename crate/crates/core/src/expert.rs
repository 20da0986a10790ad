//! Expert-labeled feature table and its cosine similarity.
//!
//! Numeric features are min-max scaled to [0, 1], booleans map to 0/1 and
//! categoricals are one-hot encoded over the categories observed in the
//! table. Missing cells are imputed so that every case keeps a
//! well-defined vector: numeric with the scaled column median, boolean
//! with 0.5, categorical with an all-zero group.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{self, SimError, SimilarityMatrix};

const DEFAULT_SCHEMA: &str = include_str!("../schema/default_schema.json");

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("bad value `{value}` at row {row}, column `{column}`")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate case id `{0}`")]
    DuplicateCaseId(String),
    #[error("column has no observed values")]
    AllMissing,
    #[error("all-zero feature vector for case `{0}`")]
    ZeroVector(String),
    #[error("need at least 2 cases, got {0}")]
    TooFewCases(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Boolean,
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureSpec>", into = "Vec<FeatureSpec>")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self, ExpertError> {
        if features.is_empty() {
            return Err(ExpertError::Schema("no features".into()));
        }
        let mut names = HashSet::new();
        for f in &features {
            if f.name == "case_id" || !names.insert(f.name.as_str()) {
                return Err(ExpertError::Schema(format!(
                    "duplicate feature `{}`",
                    f.name
                )));
            }
        }
        Ok(Self { features })
    }

    /// The bundled alimony-case schema (34 features).
    pub fn bundled() -> Self {
        serde_json::from_str(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }

    pub fn bundled_json() -> &'static str {
        DEFAULT_SCHEMA
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExpertError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ExpertError::Schema(e.to_string()))
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

impl TryFrom<Vec<FeatureSpec>> for FeatureSchema {
    type Error = ExpertError;
    fn try_from(v: Vec<FeatureSpec>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<FeatureSchema> for Vec<FeatureSpec> {
    fn from(s: FeatureSchema) -> Self {
        s.features
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Bool(bool),
    Real(f64),
    Category(String),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertFeatureTable {
    pub schema: FeatureSchema,
    pub case_ids: Vec<String>,
    pub rows: Vec<Vec<FeatureValue>>,
}

impl ExpertFeatureTable {
    fn column(&self, f: usize) -> impl Iterator<Item = &FeatureValue> {
        self.rows.iter().map(move |r| &r[f])
    }
}

fn parse_cell(kind: FeatureKind, cell: &str) -> Option<FeatureValue> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Some(FeatureValue::Missing);
    }
    match kind {
        FeatureKind::Boolean => match cell {
            "1" | "true" => Some(FeatureValue::Bool(true)),
            "0" | "false" => Some(FeatureValue::Bool(false)),
            _ => None,
        },
        FeatureKind::Numeric => cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(FeatureValue::Real),
        FeatureKind::Categorical => Some(FeatureValue::Category(cell.to_owned())),
    }
}

pub fn load_features(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
) -> Result<ExpertFeatureTable, ExpertError> {
    let mut rdr = csv::ReaderBuilder::new().from_path(path)?;
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("case_id")
        .chain(schema.features.iter().map(|f| f.name.as_str()))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(ExpertError::HeaderMismatch {
            expected: expected.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut case_ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_no = r + 1;
        let id = rec.get(0).unwrap_or("").to_owned();
        if !seen.insert(id.clone()) {
            return Err(ExpertError::DuplicateCaseId(id));
        }
        let row = schema
            .features
            .iter()
            .enumerate()
            .map(|(f, spec)| {
                let cell = rec.get(f + 1).unwrap_or("");
                parse_cell(spec.kind, cell).ok_or_else(|| ExpertError::BadValue {
                    row: row_no,
                    column: spec.name.clone(),
                    value: cell.to_owned(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        case_ids.push(id);
        rows.push(row);
    }
    Ok(ExpertFeatureTable {
        schema: schema.clone(),
        case_ids,
        rows,
    })
}

/// Writes a table in the same CSV layout [`load_features`] reads.
pub fn write_features(
    table: &ExpertFeatureTable,
    path: impl AsRef<Path>,
) -> Result<(), ExpertError> {
    let mut wtr = csv::Writer::from_path(path)?;
    let header: Vec<&str> = std::iter::once("case_id")
        .chain(table.schema.features.iter().map(|f| f.name.as_str()))
        .collect();
    wtr.write_record(&header)?;
    for (id, row) in table.case_ids.iter().zip(&table.rows) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| match v {
            FeatureValue::Bool(b) => (if *b { "1" } else { "0" }).to_owned(),
            FeatureValue::Real(x) => x.to_string(),
            FeatureValue::Category(c) => c.clone(),
            FeatureValue::Missing => String::new(),
        }));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when max == min; every value is then 0.5.
    pub constant: bool,
}

/// `(y - min) / (max - min)` over the observed values; missing entries get
/// the median of the scaled observed values.
pub fn minmax_normalize(column: &[Option<f64>]) -> Result<Normalized, ExpertError> {
    let observed: Vec<f64> = column.iter().flatten().copied().collect();
    if observed.is_empty() {
        return Err(ExpertError::AllMissing);
    }
    let min = observed.iter().copied().fold(f64::INFINITY, f64::min);
    let max = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(Normalized {
            values: vec![0.5; column.len()],
            constant: true,
        });
    }
    let range = max - min;
    let scale = |y: f64| ((y - min) / range).clamp(0.0, 1.0);

    let mut scaled: Vec<f64> = observed.iter().map(|&y| scale(y)).collect();
    scaled.sort_by(f64::total_cmp);
    let mid = scaled.len() / 2;
    let median = if scaled.len() % 2 == 1 {
        scaled[mid]
    } else {
        0.5 * (scaled[mid - 1] + scaled[mid])
    };

    Ok(Normalized {
        values: column.iter().map(|v| v.map_or(median, scale)).collect(),
        constant: false,
    })
}

/// Dense encoded features, one row per case.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub case_ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn encode(table: &ExpertFeatureTable) -> Result<FeatureMatrix, ExpertError> {
    let n = table.case_ids.len();
    let mut columns = Vec::new();
    let mut rows = vec![Vec::new(); n];
    let mut warnings = Vec::new();

    for (f, spec) in table.schema.features.iter().enumerate() {
        match spec.kind {
            FeatureKind::Numeric => {
                let col: Vec<Option<f64>> = table
                    .column(f)
                    .map(|v| match v {
                        FeatureValue::Real(x) => Some(*x),
                        _ => None,
                    })
                    .collect();
                let normalized = match minmax_normalize(&col) {
                    Ok(n) => n,
                    Err(ExpertError::AllMissing) => {
                        warnings.push(format!("`{}` has no values; encoded as 0.5", spec.name));
                        Normalized {
                            values: vec![0.5; n],
                            constant: true,
                        }
                    }
                    Err(e) => return Err(e),
                };
                if normalized.constant {
                    let msg = format!("`{}` is constant; encoded as 0.5", spec.name);
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                for (row, v) in rows.iter_mut().zip(normalized.values) {
                    row.push(v);
                }
                columns.push(spec.name.clone());
            }
            FeatureKind::Boolean => {
                for (row, v) in rows.iter_mut().zip(table.column(f)) {
                    row.push(match v {
                        FeatureValue::Bool(true) => 1.0,
                        FeatureValue::Bool(false) => 0.0,
                        _ => 0.5,
                    });
                }
                columns.push(spec.name.clone());
            }
            FeatureKind::Categorical => {
                let categories: BTreeSet<&str> = table
                    .column(f)
                    .filter_map(|v| match v {
                        FeatureValue::Category(c) => Some(c.as_str()),
                        _ => None,
                    })
                    .collect();
                for (row, v) in rows.iter_mut().zip(table.column(f)) {
                    for cat in &categories {
                        let hit = matches!(v, FeatureValue::Category(c) if c == cat);
                        row.push(if hit { 1.0 } else { 0.0 });
                    }
                }
                columns.extend(categories.iter().map(|c| format!("{}={}", spec.name, c)));
            }
        }
    }

    Ok(FeatureMatrix {
        case_ids: table.case_ids.clone(),
        columns,
        rows,
        warnings,
    })
}

/// Cosine similarity between encoded case rows.
pub fn expert_similarity(matrix: &FeatureMatrix) -> Result<SimilarityMatrix, ExpertError> {
    if matrix.case_ids.len() < 2 {
        return Err(ExpertError::TooFewCases(matrix.case_ids.len()));
    }
    for (id, row) in matrix.case_ids.iter().zip(&matrix.rows) {
        if row.iter().all(|&x| x == 0.0) {
            return Err(ExpertError::ZeroVector(id.clone()));
        }
    }
    let labeled: Vec<(&str, &[f64])> = matrix
        .case_ids
        .iter()
        .map(String::as_str)
        .zip(matrix.rows.iter().map(Vec::as_slice))
        .collect();
    Ok(sim::similarity_matrix(&labeled)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn schema(specs: &[(&str, FeatureKind)]) -> FeatureSchema {
        FeatureSchema::new(
            specs
                .iter()
                .map(|(n, k)| FeatureSpec {
                    name: (*n).into(),
                    kind: *k,
                })
                .collect(),
        )
        .unwrap()
    }

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn bundled_schema_has_34_features() {
        let s = FeatureSchema::bundled();
        assert_eq!(s.len(), 34);
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        assert!(FeatureSchema::new(vec![]).is_err());
        let dup = vec![
            FeatureSpec {
                name: "a".into(),
                kind: FeatureKind::Boolean,
            },
            FeatureSpec {
                name: "a".into(),
                kind: FeatureKind::Numeric,
            },
        ];
        assert!(FeatureSchema::new(dup).is_err());
    }

    #[test]
    fn loads_booleans() {
        let s = schema(&[("has_lawyer", FeatureKind::Boolean)]);
        let f = csv_file("case_id,has_lawyer\nc1,1\nc2,0\n");
        let t = load_features(f.path(), &s).unwrap();
        assert_eq!(t.rows[0][0], FeatureValue::Bool(true));
        assert_eq!(t.rows[1][0], FeatureValue::Bool(false));
    }

    #[test]
    fn bad_numeric_cell() {
        let s = schema(&[("income", FeatureKind::Numeric)]);
        let f = csv_file("case_id,income\nc1,abc\n");
        assert!(matches!(
            load_features(f.path(), &s),
            Err(ExpertError::BadValue { row: 1, .. })
        ));
    }

    #[test]
    fn header_mismatch() {
        let s = schema(&[("a", FeatureKind::Numeric), ("b", FeatureKind::Boolean)]);
        let f = csv_file("case_id,a\nc1,1\n");
        assert!(matches!(
            load_features(f.path(), &s),
            Err(ExpertError::HeaderMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_case_id() {
        let s = schema(&[("a", FeatureKind::Numeric)]);
        let f = csv_file("case_id,a\nc1,1\nc1,2\n");
        assert!(matches!(
            load_features(f.path(), &s),
            Err(ExpertError::DuplicateCaseId(_))
        ));
    }

    #[test]
    fn empty_cell_is_missing() {
        let s = schema(&[("a", FeatureKind::Numeric), ("b", FeatureKind::Categorical)]);
        let f = csv_file("case_id,a,b\nc1,,\n");
        let t = load_features(f.path(), &s).unwrap();
        assert_eq!(
            t.rows[0],
            vec![FeatureValue::Missing, FeatureValue::Missing]
        );
    }

    #[test]
    fn minmax_examples() {
        let n = minmax_normalize(&[Some(2.), Some(4.), Some(6.)]).unwrap();
        assert_eq!(n.values, vec![0.0, 0.5, 1.0]);
        assert!(!n.constant);

        let n = minmax_normalize(&[Some(5.), Some(5.), Some(5.)]).unwrap();
        assert_eq!(n.values, vec![0.5; 3]);
        assert!(n.constant);

        let n = minmax_normalize(&[Some(0.), Some(10.), None]).unwrap();
        assert_eq!(n.values, vec![0.0, 1.0, 0.5]);

        assert!(matches!(
            minmax_normalize(&[None]),
            Err(ExpertError::AllMissing)
        ));
    }

    fn table(s: &FeatureSchema, rows: Vec<Vec<FeatureValue>>) -> ExpertFeatureTable {
        ExpertFeatureTable {
            schema: s.clone(),
            case_ids: (0..rows.len()).map(|i| format!("c{i}")).collect(),
            rows,
        }
    }

    #[test]
    fn encode_kinds() {
        use FeatureValue::*;
        let s = schema(&[
            ("flag", FeatureKind::Boolean),
            ("who", FeatureKind::Categorical),
            ("amount", FeatureKind::Numeric),
        ]);
        let t = table(
            &s,
            vec![
                vec![Bool(true), Category("son".into()), Real(2.)],
                vec![Bool(false), Category("daughter".into()), Real(4.)],
                vec![Missing, Missing, Real(6.)],
            ],
        );
        let m = encode(&t).unwrap();
        assert_eq!(m.columns, vec!["flag", "who=daughter", "who=son", "amount"]);
        assert_eq!(m.rows[0], vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(m.rows[1], vec![0.0, 1.0, 0.0, 0.5]);
        assert_eq!(m.rows[2], vec![0.5, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_column_warns() {
        let s = schema(&[("a", FeatureKind::Numeric)]);
        let t = table(
            &s,
            vec![vec![FeatureValue::Real(3.)], vec![FeatureValue::Real(3.)]],
        );
        let m = encode(&t).unwrap();
        assert_eq!(m.warnings.len(), 1);
        assert_eq!(m.rows, vec![vec![0.5], vec![0.5]]);
    }

    #[test]
    fn similarity_examples() {
        let m = FeatureMatrix {
            case_ids: vec!["a".into(), "b".into()],
            columns: vec!["x".into(), "y".into()],
            rows: vec![vec![0.3, 0.4], vec![0.3, 0.4]],
            warnings: vec![],
        };
        assert_eq!(expert_similarity(&m).unwrap().get(0, 1), 1.0);
        let m = FeatureMatrix {
            rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ..m
        };
        assert_eq!(expert_similarity(&m).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn zero_row_names_case() {
        let m = FeatureMatrix {
            case_ids: vec!["a".into(), "b".into()],
            columns: vec!["x".into()],
            rows: vec![vec![1.0], vec![0.0]],
            warnings: vec![],
        };
        assert!(matches!(expert_similarity(&m), Err(ExpertError::ZeroVector(id)) if id == "b"));
    }

    proptest! {
        #[test]
        fn encode_column_count(cats in prop::collection::vec(0usize..4, 3..10)) {
            use FeatureValue::*;
            let s = schema(&[
                ("n", FeatureKind::Numeric),
                ("b", FeatureKind::Boolean),
                ("c", FeatureKind::Categorical),
            ]);
            let rows: Vec<Vec<FeatureValue>> = cats.iter().enumerate()
                .map(|(i, c)| vec![Real(i as f64), Bool(i % 2 == 0), Category(format!("k{c}"))])
                .collect();
            let distinct: BTreeSet<_> = cats.iter().collect();
            let m = encode(&table(&s, rows)).unwrap();
            prop_assert_eq!(m.columns.len(), 2 + distinct.len());
            for row in &m.rows {
                prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                prop_assert_eq!(row[2..].iter().filter(|&&v| v == 1.0).count(), 1);
            }
        }
    }
}
