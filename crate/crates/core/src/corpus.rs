//! Judgment corpus ingestion and document-term matrices.
//!
//! A corpus is read from JSON lines, tokenized either from pre-segmented
//! tokens or by character bigrams, and turned into a sparse count matrix
//! over a lexicographically ordered vocabulary. TF-IDF weights are used
//! only to prune that vocabulary; topic models always consume raw counts.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate judgment id `{0}`")]
    DuplicateId(String),
    #[error("missing field `{field}` at line {line}")]
    MissingField { field: &'static str, line: usize },
    #[error("judgment `{0}` has no pre-segmented tokens")]
    NoTokens(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no term survives min_df = {0}")]
    EmptyVocabulary(usize),
    #[error("top_m = {top_m} outside 1..={vocab}")]
    InvalidTopM { top_m: usize, vocab: usize },
}

/// One court decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub id: String,
    pub year: i32,
    pub court: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default)]
    pub articles: Vec<String>,
}

pub type Corpus = Vec<Judgment>;

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    year: Option<i32>,
    court: Option<String>,
    text: Option<String>,
    tokens: Option<Vec<String>>,
    articles: Option<Vec<String>>,
}

/// Reads a JSON-lines corpus. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut corpus = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let judgment = parse_record(&line, line_no)?;
        if !seen.insert(judgment.id.clone()) {
            return Err(CorpusError::DuplicateId(judgment.id));
        }
        corpus.push(judgment);
    }
    Ok(corpus)
}

fn parse_record(line: &str, line_no: usize) -> Result<Judgment, CorpusError> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
        line: line_no,
        reason: e.to_string(),
    })?;
    let missing = |field| CorpusError::MissingField {
        field,
        line: line_no,
    };
    let id = raw.id.ok_or_else(|| missing("id"))?;
    if id.is_empty() {
        return Err(CorpusError::MalformedRecord {
            line: line_no,
            reason: "empty id".into(),
        });
    }
    let year = raw.year.ok_or_else(|| missing("year"))?;
    let court = raw.court.ok_or_else(|| missing("court"))?;
    let articles = raw.articles.ok_or_else(|| missing("articles"))?;
    if raw.text.is_none() && raw.tokens.is_none() {
        return Err(missing("text"));
    }
    let mut labels = HashSet::new();
    for a in &articles {
        if !labels.insert(a.as_str()) {
            return Err(CorpusError::MalformedRecord {
                line: line_no,
                reason: format!("duplicate article label `{a}`"),
            });
        }
    }
    Ok(Judgment {
        id,
        year,
        court,
        text: raw.text,
        tokens: raw.tokens,
        articles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// Use the record's `tokens` array verbatim.
    #[default]
    Pretokenized,
    /// Overlapping character 2-grams of `text` with whitespace and
    /// punctuation removed.
    CharBigram,
    /// Split `text` on whitespace.
    Whitespace,
}

impl std::str::FromStr for TokenizerMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pretokenized" => Ok(Self::Pretokenized),
            "char_bigram" => Ok(Self::CharBigram),
            "whitespace" => Ok(Self::Whitespace),
            other => Err(format!("unknown tokenizer mode `{other}`")),
        }
    }
}

pub fn tokenize(judgment: &Judgment, mode: TokenizerMode) -> Result<Vec<String>, CorpusError> {
    match mode {
        TokenizerMode::Pretokenized => judgment
            .tokens
            .clone()
            .ok_or_else(|| CorpusError::NoTokens(judgment.id.clone())),
        TokenizerMode::CharBigram => Ok(char_bigrams(judgment.text.as_deref().unwrap_or(""))),
        TokenizerMode::Whitespace => Ok(judgment
            .text
            .as_deref()
            .unwrap_or("")
            .split_whitespace()
            .map(str::to_owned)
            .collect()),
    }
}

pub fn char_bigrams(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().filter(|c| c.is_alphanumeric()).collect();
    match chars.len() {
        0 => Vec::new(),
        1 => vec![chars[0].to_string()],
        _ => chars.windows(2).map(|w| w.iter().collect()).collect(),
    }
}

/// Terms in lexicographic order with their document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub doc_freq: Vec<usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }
}

/// Sparse document-term counts. Each row is sorted by column index and
/// holds only nonzero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    pub vocab: Vocabulary,
    pub rows: Vec<Vec<(usize, u32)>>,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn count(&self, doc: usize, term: usize) -> u32 {
        let row = &self.rows[doc];
        row.binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    pub fn doc_len(&self, doc: usize) -> u64 {
        self.rows[doc].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total_tokens(&self) -> u64 {
        (0..self.n_docs()).map(|d| self.doc_len(d)).sum()
    }
}

/// Builds raw counts over every term whose document frequency is at least
/// `min_df`.
pub fn build_dtm(
    corpus: &[Judgment],
    mode: TokenizerMode,
    min_df: usize,
) -> Result<DocTermMatrix, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut per_doc: Vec<BTreeMap<String, u32>> = Vec::with_capacity(corpus.len());
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for judgment in corpus {
        let mut counts = BTreeMap::new();
        for tok in tokenize(judgment, mode)? {
            *counts.entry(tok).or_insert(0u32) += 1;
        }
        for term in counts.keys() {
            *df.entry(term.clone()).or_insert(0) += 1;
        }
        per_doc.push(counts);
    }

    let (terms, doc_freq): (Vec<String>, Vec<usize>) =
        df.into_iter().filter(|&(_, n)| n >= min_df.max(1)).unzip();
    if terms.is_empty() {
        return Err(CorpusError::EmptyVocabulary(min_df));
    }
    let vocab = Vocabulary { terms, doc_freq };

    let rows = per_doc
        .into_iter()
        .map(|counts| {
            counts
                .into_iter()
                .filter_map(|(term, c)| vocab.index_of(&term).map(|col| (col, c)))
                .collect()
        })
        .collect();

    Ok(DocTermMatrix {
        doc_ids: corpus.iter().map(|j| j.id.clone()).collect(),
        vocab,
        rows,
    })
}

/// TF-IDF weights aligned with a [`DocTermMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub n_terms: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl WeightedMatrix {
    pub fn weight(&self, doc: usize, term: usize) -> f64 {
        let row = &self.rows[doc];
        row.binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_terms];
        for row in &self.rows {
            for &(t, w) in row {
                sums[t] += w;
            }
        }
        sums
    }
}

/// `count · ln(D / df)`, unsmoothed.
pub fn tfidf_transform(dtm: &DocTermMatrix) -> WeightedMatrix {
    let n_docs = dtm.n_docs() as f64;
    let idf: Vec<f64> = dtm
        .vocab
        .doc_freq
        .iter()
        .map(|&df| (n_docs / df as f64).ln())
        .collect();
    let rows = dtm
        .rows
        .iter()
        .map(|row| row.iter().map(|&(t, c)| (t, c as f64 * idf[t])).collect())
        .collect();
    WeightedMatrix {
        n_terms: dtm.n_terms(),
        rows,
    }
}

/// Keeps the `top_m` columns with the largest summed TF-IDF weight. Ties go
/// to the lexicographically smaller term; surviving columns keep their
/// original order and counts.
pub fn filter_vocabulary(
    dtm: &DocTermMatrix,
    weighted: &WeightedMatrix,
    top_m: usize,
) -> Result<DocTermMatrix, CorpusError> {
    let v = dtm.n_terms();
    if top_m == 0 || top_m > v {
        return Err(CorpusError::InvalidTopM { top_m, vocab: v });
    }
    let sums = weighted.column_sums();
    let mut order: Vec<usize> = (0..v).collect();
    // Column index order is lexicographic term order, so it doubles as the tie-break.
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[..top_m].to_vec();
    keep.sort_unstable();

    let mut remap = vec![usize::MAX; v];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let vocab = Vocabulary {
        terms: keep.iter().map(|&t| dtm.vocab.terms[t].clone()).collect(),
        doc_freq: keep.iter().map(|&t| dtm.vocab.doc_freq[t]).collect(),
    };
    let rows = dtm
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&(t, _)| remap[t] != usize::MAX)
                .map(|&(t, c)| (remap[t], c))
                .collect()
        })
        .collect();
    Ok(DocTermMatrix {
        doc_ids: dtm.doc_ids.clone(),
        vocab,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn doc(id: &str, text: &str) -> Judgment {
        Judgment {
            id: id.into(),
            year: 2015,
            court: "Taipei".into(),
            text: Some(text.into()),
            tokens: None,
            articles: vec![],
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_in_file_order() {
        let f = write_lines(&[
            r#"{"id":"a","year":2014,"court":"X","text":"t","articles":["1118-1"]}"#,
            r#"{"id":"b","year":2015,"court":"Y","tokens":["u"],"articles":[]}"#,
        ]);
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].id, "a");
        assert_eq!(c[1].id, "b");
        assert_eq!(c[0].articles, vec!["1118-1"]);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let f = write_lines(&[
            r#"{"id":"a","year":2014,"court":"X","text":"t","articles":[]}"#,
            r#"{"id":"a","year":2015,"court":"Y","text":"u","articles":[]}"#,
        ]);
        assert!(matches!(load_corpus(f.path()), Err(CorpusError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn rejects_record_without_text_or_tokens() {
        let f = write_lines(&[r#"{"id":"a","year":2014,"court":"X","articles":[]}"#]);
        assert!(matches!(
            load_corpus(f.path()),
            Err(CorpusError::MissingField { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_lines(&[
            r#"{"id":"a","year":2014,"court":"X","text":"t","articles":[]}"#,
            "{not json",
        ]);
        assert!(matches!(
            load_corpus(f.path()),
            Err(CorpusError::MalformedRecord { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_article_labels_rejected() {
        let f =
            write_lines(&[r#"{"id":"a","year":1,"court":"X","text":"t","articles":["1","1"]}"#]);
        assert!(load_corpus(f.path()).is_err());
    }

    #[test]
    fn bigrams() {
        assert_eq!(char_bigrams("abcd"), vec!["ab", "bc", "cd"]);
        assert_eq!(char_bigrams("a"), vec!["a"]);
        assert_eq!(char_bigrams(""), Vec::<String>::new());
        assert_eq!(char_bigrams("法院，裁定"), vec!["法院", "院裁", "裁定"]);
        assert_eq!(char_bigrams("a b.c"), vec!["ab", "bc"]);
    }

    #[test]
    fn pretokenized_passthrough() {
        let mut j = doc("a", "");
        j.tokens = Some(vec!["法院".into(), "裁定".into()]);
        assert_eq!(
            tokenize(&j, TokenizerMode::Pretokenized).unwrap(),
            vec!["法院", "裁定"]
        );
        j.tokens = None;
        assert!(matches!(
            tokenize(&j, TokenizerMode::Pretokenized),
            Err(CorpusError::NoTokens(_))
        ));
    }

    #[test]
    fn dtm_counts_by_hand() {
        let corpus = vec![doc("d0", "a b a"), doc("d1", "b c")];
        let dtm = build_dtm(&corpus, TokenizerMode::Whitespace, 1).unwrap();
        assert_eq!(dtm.vocab.terms, vec!["a", "b", "c"]);
        assert_eq!(dtm.vocab.doc_freq, vec![1, 2, 1]);
        assert_eq!(dtm.rows[0], vec![(0, 2), (1, 1)]);
        assert_eq!(dtm.rows[1], vec![(1, 1), (2, 1)]);

        let dtm2 = build_dtm(&corpus, TokenizerMode::Whitespace, 2).unwrap();
        assert_eq!(dtm2.vocab.terms, vec!["b"]);
        assert_eq!(dtm2.rows, vec![vec![(0, 1)], vec![(0, 1)]]);
    }

    #[test]
    fn empty_doc_gives_zero_row() {
        let corpus = vec![doc("d0", "a b"), doc("d1", "")];
        let dtm = build_dtm(&corpus, TokenizerMode::Whitespace, 1).unwrap();
        assert!(dtm.rows[1].is_empty());
    }

    #[test]
    fn empty_vocabulary() {
        let corpus = vec![doc("d0", "a"), doc("d1", "b")];
        assert!(matches!(
            build_dtm(&corpus, TokenizerMode::Whitespace, 2),
            Err(CorpusError::EmptyVocabulary(2))
        ));
        assert!(matches!(
            build_dtm(&[], TokenizerMode::Whitespace, 1),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    // D = 4 docs; "rare" appears twice in d0 only, "all" once in every doc.
    fn four_doc_dtm() -> DocTermMatrix {
        let corpus = vec![
            doc("d0", "rare rare all mid"),
            doc("d1", "all mid"),
            doc("d2", "all"),
            doc("d3", "all"),
        ];
        build_dtm(&corpus, TokenizerMode::Whitespace, 1).unwrap()
    }

    #[test]
    fn tfidf_values() {
        let dtm = four_doc_dtm();
        let w = tfidf_transform(&dtm);
        let all = dtm.vocab.index_of("all").unwrap();
        let rare = dtm.vocab.index_of("rare").unwrap();
        for d in 0..4 {
            assert_eq!(w.weight(d, all), 0.0);
        }
        assert!((w.weight(0, rare) - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert!((w.weight(0, rare) - 2.7726).abs() < 1e-4);
    }

    #[test]
    fn tfidf_zero_row_stays_zero() {
        let corpus = vec![doc("d0", "a b"), doc("d1", "")];
        let dtm = build_dtm(&corpus, TokenizerMode::Whitespace, 1).unwrap();
        assert!(tfidf_transform(&dtm).rows[1].is_empty());
    }

    #[test]
    fn filter_identity_when_top_m_is_v() {
        let dtm = four_doc_dtm();
        let w = tfidf_transform(&dtm);
        assert_eq!(filter_vocabulary(&dtm, &w, dtm.n_terms()).unwrap(), dtm);
    }

    #[test]
    fn filter_keeps_highest_weight_term() {
        let dtm = four_doc_dtm();
        let w = tfidf_transform(&dtm);
        // Brute-force ranking of column sums.
        let sums = w.column_sums();
        let best = (0..sums.len())
            .max_by(|&a, &b| sums[a].partial_cmp(&sums[b]).unwrap().then(b.cmp(&a)))
            .unwrap();
        assert_eq!(dtm.vocab.terms[best], "rare");
        let f = filter_vocabulary(&dtm, &w, 1).unwrap();
        assert_eq!(f.vocab.terms, vec!["rare"]);
        assert_eq!(f.rows[0], vec![(0, 2)]);
        assert!(f.rows[1].is_empty());
    }

    #[test]
    fn filter_tie_break_lexicographic() {
        let corpus = vec![doc("d0", "zeta"), doc("d1", "alpha")];
        let dtm = build_dtm(&corpus, TokenizerMode::Whitespace, 1).unwrap();
        let w = tfidf_transform(&dtm);
        let f = filter_vocabulary(&dtm, &w, 1).unwrap();
        assert_eq!(f.vocab.terms, vec!["alpha"]);
    }

    #[test]
    fn filter_rejects_bad_top_m() {
        let dtm = four_doc_dtm();
        let w = tfidf_transform(&dtm);
        assert!(filter_vocabulary(&dtm, &w, 0).is_err());
        assert!(filter_vocabulary(&dtm, &w, dtm.n_terms() + 1).is_err());
    }
}
