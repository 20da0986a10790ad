//! Node2vec embeddings: biased walks fed to skip-gram with negative
//! sampling. Case-node vectors are the judgment embeddings.

pub mod alias;
pub mod sgns;
pub mod walk;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alias::AliasTable;
pub use sgns::{sgns_gradient, sgns_loss, SgnsGradient};
pub use walk::{generate_walks, precompute_transitions, Transitions, WalkCorpus, WalkGraph};

use crate::graph::{KnowledgeGraph, NodeKind};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid node2vec config: {0}")]
    InvalidConfig(String),
    #[error("walk corpus has no (center, context) pairs")]
    EmptyWalks,
    #[error("graph has no case nodes")]
    NoCaseNodes,
    #[error("embedding file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Node2vecConfig {
    pub p: f64,
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Lock-free multi-threaded training; results are not reproducible.
    pub parallel: bool,
}

impl Default for Node2vecConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
            dim: 128,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 42,
            parallel: false,
        }
    }
}

impl Node2vecConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::InvalidConfig(m.into()));
        if !(self.p > 0.0 && self.p.is_finite()) || !(self.q > 0.0 && self.q.is_finite()) {
            return bad("p and q must be positive");
        }
        if self.walk_length == 0 || self.walks_per_node == 0 || self.window == 0 {
            return bad("walk_length, walks_per_node and window must be >= 1");
        }
        if self.dim < 2 {
            return bad("dim must be >= 2");
        }
        if self.negatives == 0 || self.epochs == 0 {
            return bad("negatives and epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    fn sgns_params(&self) -> sgns::SgnsParams {
        sgns::SgnsParams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.seed,
            parallel: self.parallel,
        }
    }
}

/// Node id → input vector, ids in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: Vec<(String, Vec<f64>)>) -> Result<Self, EmbedError> {
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let dim = rows.first().map_or(0, |r| r.1.len());
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(EmbedError::Parse {
                    line: 0,
                    reason: format!("duplicate id `{}`", w[0].0),
                });
            }
        }
        if rows.iter().any(|r| r.1.len() != dim) {
            return Err(EmbedError::Parse {
                line: 0,
                reason: "ragged vectors".into(),
            });
        }
        let (ids, vecs): (Vec<String>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        Ok(Self {
            ids,
            dim,
            data: vecs.concat(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        let i = self.ids.binary_search_by(|x| x.as_str().cmp(id)).ok()?;
        Some(self.vector(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks(self.dim.max(1)))
    }

    /// Keeps the rows whose id satisfies `keep`.
    pub fn retain(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (id, v) in self.rows() {
            if keep(id) {
                ids.push(id.to_owned());
                data.extend_from_slice(v);
            }
        }
        Self {
            ids,
            dim: self.dim,
            data,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.ids.len(), self.dim)?;
        for (id, v) in self.rows() {
            write!(w, "{id}")?;
            for x in v {
                write!(w, " {x:.6}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Parses the text format. Values are taken from the right of each
    /// line, so ids may contain single spaces.
    pub fn read_from(r: impl BufRead) -> Result<Self, EmbedError> {
        let mut lines = r.lines();
        let err = |line: usize, reason: &str| EmbedError::Parse {
            line,
            reason: reason.into(),
        };
        let header = lines.next().ok_or_else(|| err(1, "missing header"))??;
        let mut parts = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(count)), Some(Ok(dim)), None) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(err(1, "header must be `<count> <dim>`"));
        };
        let mut rows = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line_no = i + 2;
            if line.is_empty() {
                continue;
            }
            let mut fields: Vec<&str> = line.rsplitn(dim + 1, ' ').collect();
            if fields.len() != dim + 1 {
                return Err(err(line_no, "wrong number of values"));
            }
            let id = fields.pop().unwrap().to_owned();
            let v = fields
                .iter()
                .rev()
                .map(|s| s.parse::<f64>().map_err(|_| err(line_no, "bad value")))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push((id, v));
        }
        if rows.len() != count {
            return Err(err(0, "row count does not match header"));
        }
        let m = Self::new(rows)?;
        if count > 0 && m.dim != dim {
            return Err(err(0, "dimension does not match header"));
        }
        Ok(Self { dim, ..m })
    }
}

/// Skip-gram training with its per-epoch mean loss.
pub fn train_skipgram_with_losses(
    walks: &WalkCorpus,
    config: &Node2vecConfig,
) -> Result<(EmbeddingMatrix, Vec<f64>), EmbedError> {
    config.validate()?;
    if walks.walks.iter().all(|w| w.len() < 2) {
        return Err(EmbedError::EmptyWalks);
    }
    let out = sgns::train(walks, &config.sgns_params()).ok_or(EmbedError::EmptyWalks)?;
    let dim = config.dim;
    // WalkCorpus ids come sorted from WalkGraph.
    let matrix = EmbeddingMatrix {
        ids: walks.ids.clone(),
        dim,
        data: out.input,
    };
    Ok((matrix, out.epoch_losses))
}

pub fn train_skipgram(
    walks: &WalkCorpus,
    config: &Node2vecConfig,
) -> Result<EmbeddingMatrix, EmbedError> {
    train_skipgram_with_losses(walks, config).map(|(m, _)| m)
}

/// Transitions, walks and training over any walk graph.
pub fn node2vec(graph: &WalkGraph, config: &Node2vecConfig) -> Result<EmbeddingMatrix, EmbedError> {
    config.validate()?;
    let transitions = precompute_transitions(graph, config.p, config.q);
    let walks = generate_walks(
        graph,
        &transitions,
        config.walk_length,
        config.walks_per_node,
        config.seed,
    );
    train_skipgram(&walks, config)
}

/// Embeds every node of the knowledge graph.
pub fn embed_graph(
    graph: &KnowledgeGraph,
    config: &Node2vecConfig,
) -> Result<EmbeddingMatrix, EmbedError> {
    node2vec(&WalkGraph::from_knowledge_graph(graph), config)
}

/// Full node2vec pipeline, keeping only Case-node vectors.
pub fn judgment2vec(
    graph: &KnowledgeGraph,
    config: &Node2vecConfig,
) -> Result<EmbeddingMatrix, EmbedError> {
    if graph.case_ids().next().is_none() {
        return Err(EmbedError::NoCaseNodes);
    }
    let all = embed_graph(graph, config)?;
    Ok(all.retain(|id| graph.kind_of(id) == Some(NodeKind::Case)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Judgment;
    use crate::graph::{build_graph, GraphOptions};

    fn small_config() -> Node2vecConfig {
        Node2vecConfig {
            walk_length: 10,
            walks_per_node: 5,
            window: 3,
            dim: 8,
            epochs: 2,
            ..Node2vecConfig::default()
        }
    }

    fn case(id: &str, articles: &[&str]) -> Judgment {
        Judgment {
            id: id.into(),
            year: 2017,
            court: "Kaohsiung".into(),
            text: Some(String::new()),
            tokens: None,
            articles: articles.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn config_validation() {
        assert!(Node2vecConfig::default().validate().is_ok());
        assert!(Node2vecConfig {
            p: 0.0,
            ..Node2vecConfig::default()
        }
        .validate()
        .is_err());
        assert!(Node2vecConfig {
            dim: 1,
            ..Node2vecConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn judgment2vec_projects_onto_cases() {
        let corpus = vec![case("c1", &["1118-1"]), case("c2", &["1118-1", "1117"])];
        let opts = GraphOptions {
            include_topics: false,
            ..GraphOptions::default()
        };
        let (g, _) = build_graph(&corpus, None, &opts).unwrap();
        let m = judgment2vec(&g, &small_config()).unwrap();
        assert_eq!(m.ids(), &["c1", "c2"]);
        assert_eq!(m.dim(), 8);
        assert!(m.get("article:1118-1").is_none());
    }

    #[test]
    fn no_cases_is_an_error() {
        let g = KnowledgeGraph::from_parts(vec![("article:x".into(), NodeKind::Article)], vec![])
            .unwrap();
        assert!(matches!(
            judgment2vec(&g, &small_config()),
            Err(EmbedError::NoCaseNodes)
        ));
    }

    #[test]
    fn empty_walks_rejected() {
        let g = WalkGraph::new(&["a", "b"], &[]);
        let t = precompute_transitions(&g, 1.0, 1.0);
        let w = generate_walks(&g, &t, 5, 2, 1);
        assert!(matches!(
            train_skipgram(&w, &small_config()),
            Err(EmbedError::EmptyWalks)
        ));
    }

    #[test]
    fn isolated_node_still_embedded() {
        let g = WalkGraph::new(&["solo"], &[("a", "b", 1.0)]);
        let m = node2vec(&g, &small_config()).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.get("solo").unwrap().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn file_round_trip() {
        let g = WalkGraph::new(
            &["court:Taipei District"],
            &[("x", "court:Taipei District", 1.0), ("x", "y", 2.0)],
        );
        let m = node2vec(&g, &small_config()).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = EmbeddingMatrix::read_from(&buf[..]).unwrap();
        assert_eq!(back.ids(), m.ids());
        assert_eq!(back.dim(), m.dim());
        for (a, b) in back.rows().zip(m.rows()) {
            assert!(a.1.iter().zip(b.1).all(|(x, y)| (x - y).abs() <= 5e-7));
        }
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn bad_embedding_file() {
        assert!(EmbeddingMatrix::read_from("2 3\na 1 2 3\n".as_bytes()).is_err());
        assert!(EmbeddingMatrix::read_from("1 3\na 1 2\n".as_bytes()).is_err());
        assert!(EmbeddingMatrix::read_from("x\n".as_bytes()).is_err());
    }
}
