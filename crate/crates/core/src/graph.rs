//! Heterogeneous case–article–topic–court knowledge graph.
//!
//! Edges are undirected and always join a Case node to a node of another
//! kind, so the graph is multipartite by construction. Case nodes use the
//! judgment id verbatim; other kinds are namespaced (`article:1118-1`,
//! `topic:3`, `court:Taipei`) so that labels from different kinds never
//! collide.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Judgment;
use crate::topics::TopicAssignment;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("assignment references unknown case `{0}`")]
    UnknownCaseId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Case,
    Article,
    Topic,
    Court,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Case => "Case",
            NodeKind::Article => "Article",
            NodeKind::Topic => "Topic",
            NodeKind::Court => "Court",
        })
    }
}

impl FromStr for NodeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Case" => Ok(NodeKind::Case),
            "Article" => Ok(NodeKind::Article),
            "Topic" => Ok(NodeKind::Topic),
            "Court" => Ok(NodeKind::Court),
            other => Err(format!("unknown node kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "CITES")]
    Cites,
    #[serde(rename = "HAS_TOPIC")]
    HasTopic,
    #[serde(rename = "HEARD_IN")]
    HeardIn,
}

impl EdgeKind {
    /// The non-case endpoint kind this edge kind requires.
    fn partner(self) -> NodeKind {
        match self {
            EdgeKind::Cites => NodeKind::Article,
            EdgeKind::HasTopic => NodeKind::Topic,
            EdgeKind::HeardIn => NodeKind::Court,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Cites => "CITES",
            EdgeKind::HasTopic => "HAS_TOPIC",
            EdgeKind::HeardIn => "HEARD_IN",
        })
    }
}

impl FromStr for EdgeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CITES" => Ok(EdgeKind::Cites),
            "HAS_TOPIC" => Ok(EdgeKind::HasTopic),
            "HEARD_IN" => Ok(EdgeKind::HeardIn),
            other => Err(format!("unknown edge kind `{other}`")),
        }
    }
}

pub fn article_node(label: &str) -> String {
    format!("article:{label}")
}

pub fn topic_node(k: usize) -> String {
    format!("topic:{k}")
}

pub fn court_node(name: &str) -> String {
    format!("court:{name}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

/// Edge between node indices `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

/// Immutable validated graph. Nodes are sorted by id, edges by endpoint
/// indices, and every adjacency list by neighbor id.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl KnowledgeGraph {
    pub fn from_parts(
        nodes: Vec<(String, NodeKind)>,
        edges: Vec<(String, String, EdgeKind, f64)>,
    ) -> Result<Self, GraphError> {
        let mut nodes: Vec<Node> = nodes
            .into_iter()
            .map(|(id, kind)| Node { id, kind })
            .collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(GraphError::SchemaViolation(format!(
                "duplicate node `{}`",
                w[0].id
            )));
        }
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();

        let mut out = Vec::with_capacity(edges.len());
        for (a, b, kind, weight) in edges {
            let ia = *index
                .get(a.as_str())
                .ok_or_else(|| GraphError::UnknownNode(a.clone()))?;
            let ib = *index
                .get(b.as_str())
                .ok_or_else(|| GraphError::UnknownNode(b.clone()))?;
            if ia == ib {
                return Err(GraphError::SchemaViolation(format!("self-loop on `{a}`")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(GraphError::SchemaViolation(format!(
                    "edge `{a}`–`{b}` has weight {weight}"
                )));
            }
            let kinds = (nodes[ia].kind, nodes[ib].kind);
            let partner = kind.partner();
            if kinds != (NodeKind::Case, partner) && kinds != (partner, NodeKind::Case) {
                return Err(GraphError::SchemaViolation(format!(
                    "{kind} edge cannot join {} `{a}` and {} `{b}`",
                    kinds.0, kinds.1
                )));
            }
            let (u, v) = if ia < ib { (ia, ib) } else { (ib, ia) };
            out.push(Edge { u, v, kind, weight });
        }
        out.sort_by_key(|e| (e.u, e.v, e.kind));
        if let Some(w) = out
            .windows(2)
            .find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v))
        {
            return Err(GraphError::SchemaViolation(format!(
                "duplicate edge `{}`–`{}`",
                nodes[w[0].u].id, nodes[w[0].v].id
            )));
        }

        let mut adj = vec![Vec::new(); nodes.len()];
        for e in &out {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
        }
        Ok(Self {
            nodes,
            edges: out,
            adj,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn kind_of(&self, id: &str) -> Option<NodeKind> {
        self.index_of(id).map(|i| self.nodes[i].kind)
    }

    /// Neighbor indices and edge weights of node `i`, sorted by index.
    pub fn adjacency(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, id: &str) -> Option<usize> {
        self.index_of(id).map(|i| self.adj[i].len())
    }

    pub fn neighbors(&self, id: &str) -> Result<Vec<(String, f64)>, GraphError> {
        let i = self
            .index_of(id)
            .ok_or_else(|| GraphError::UnknownNode(id.to_owned()))?;
        Ok(self.adj[i]
            .iter()
            .map(|&(n, w)| (self.nodes[n].id.clone(), w))
            .collect())
    }

    pub fn case_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Case)
            .map(|n| n.id.as_str())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_tsv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_tsv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# nodes")?;
        for n in &self.nodes {
            writeln!(w, "{}\t{}", n.id, n.kind)?;
        }
        writeln!(w, "# edges")?;
        for e in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.nodes[e.u].id,
                self.nodes[e.v].id,
                e.kind,
                format_weight(e.weight)
            )?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::read_tsv(BufReader::new(File::open(path)?))
    }

    pub fn read_tsv(r: impl BufRead) -> Result<Self, GraphError> {
        #[derive(PartialEq)]
        enum Section {
            Start,
            Nodes,
            Edges,
        }
        let mut section = Section::Start;
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            let parse_err = |reason: String| GraphError::Parse {
                line: line_no,
                reason,
            };
            match line.as_str() {
                "# nodes" if section == Section::Start => section = Section::Nodes,
                "# edges" if section == Section::Nodes => section = Section::Edges,
                "" => {}
                _ => {
                    let fields: Vec<&str> = line.split('\t').collect();
                    match section {
                        Section::Start => {
                            return Err(parse_err("expected `# nodes` header".into()))
                        }
                        Section::Nodes => {
                            let [id, kind] = fields[..] else {
                                return Err(parse_err("node line needs 2 fields".into()));
                            };
                            nodes.push((id.to_owned(), kind.parse().map_err(parse_err)?));
                        }
                        Section::Edges => {
                            let [u, v, kind, weight] = fields[..] else {
                                return Err(parse_err("edge line needs 4 fields".into()));
                            };
                            let weight: f64 = weight
                                .parse()
                                .map_err(|_| parse_err(format!("bad weight `{weight}`")))?;
                            edges.push((
                                u.to_owned(),
                                v.to_owned(),
                                kind.parse().map_err(parse_err)?,
                                weight,
                            ));
                        }
                    }
                }
            }
        }
        if section != Section::Edges {
            return Err(GraphError::Parse {
                line: 0,
                reason: "missing `# nodes` / `# edges` sections".into(),
            });
        }
        Self::from_parts(nodes, edges).map_err(|e| match e {
            GraphError::UnknownNode(id) => {
                GraphError::SchemaViolation(format!("edge references undeclared node `{id}`"))
            }
            other => other,
        })
    }
}

/// Shortest round-trip decimal, padded to at least six significant digits.
fn format_weight(w: f64) -> String {
    let mut s = format!("{w}");
    let significant = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count();
    if significant < 6 {
        if !s.contains('.') {
            s.push('.');
        }
        let pad = if significant == 0 { 6 } else { 6 - significant };
        s.extend(std::iter::repeat_n('0', pad));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopicEdgeWeight {
    #[default]
    Theta,
    Unit,
}

impl FromStr for TopicEdgeWeight {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theta" => Ok(Self::Theta),
            "unit" => Ok(Self::Unit),
            other => Err(format!("unknown topic edge weight `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphOptions {
    pub include_topics: bool,
    pub include_courts: bool,
    pub topic_edge_weight: TopicEdgeWeight,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            include_topics: true,
            include_courts: false,
            topic_edge_weight: TopicEdgeWeight::Theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuildReport {
    pub isolated_cases: Vec<String>,
}

pub fn build_graph(
    corpus: &[Judgment],
    assignment: Option<&TopicAssignment>,
    options: &GraphOptions,
) -> Result<(KnowledgeGraph, BuildReport), GraphError> {
    let mut nodes: BTreeMap<String, NodeKind> = BTreeMap::new();
    let mut edges = Vec::new();

    for j in corpus {
        nodes.insert(j.id.clone(), NodeKind::Case);
    }
    let mut extra = |id: String, kind: NodeKind| -> Result<String, GraphError> {
        match nodes.get(&id) {
            Some(&k) if k != kind => Err(GraphError::SchemaViolation(format!(
                "id `{id}` used by both {k} and {kind}"
            ))),
            _ => {
                nodes.insert(id.clone(), kind);
                Ok(id)
            }
        }
    };

    for j in corpus {
        for a in &j.articles {
            let id = extra(article_node(a), NodeKind::Article)?;
            edges.push((j.id.clone(), id, EdgeKind::Cites, 1.0));
        }
        if options.include_courts {
            let id = extra(court_node(&j.court), NodeKind::Court)?;
            edges.push((j.id.clone(), id, EdgeKind::HeardIn, 1.0));
        }
    }

    if let Some(assignment) = assignment {
        let cases: BTreeSet<&str> = corpus.iter().map(|j| j.id.as_str()).collect();
        if let Some(e) = assignment
            .edges
            .iter()
            .find(|e| !cases.contains(e.case_id.as_str()))
        {
            return Err(GraphError::UnknownCaseId(e.case_id.clone()));
        }
        if options.include_topics {
            for e in &assignment.edges {
                let id = extra(topic_node(e.topic), NodeKind::Topic)?;
                let weight = match options.topic_edge_weight {
                    TopicEdgeWeight::Theta => e.weight,
                    TopicEdgeWeight::Unit => 1.0,
                };
                edges.push((e.case_id.clone(), id, EdgeKind::HasTopic, weight));
            }
        }
    }

    let graph = KnowledgeGraph::from_parts(nodes.into_iter().collect(), edges)?;
    let isolated_cases: Vec<String> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| n.kind == NodeKind::Case && graph.adj[*i].is_empty())
        .map(|(_, n)| n.id.clone())
        .collect();
    for id in &isolated_cases {
        log::warn!("case `{id}` has no edges");
    }
    Ok((graph, BuildReport { isolated_cases }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes_by_kind: BTreeMap<String, usize>,
    pub edges_by_kind: BTreeMap<String, usize>,
    pub components: usize,
    pub isolated_cases: Vec<String>,
}

pub fn graph_stats(graph: &KnowledgeGraph) -> GraphStats {
    let mut nodes_by_kind = BTreeMap::new();
    for n in &graph.nodes {
        *nodes_by_kind.entry(n.kind.to_string()).or_insert(0) += 1;
    }
    let mut edges_by_kind = BTreeMap::new();
    for e in &graph.edges {
        *edges_by_kind.entry(e.kind.to_string()).or_insert(0) += 1;
    }

    let mut seen = vec![false; graph.node_count()];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..graph.node_count() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &graph.adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
    }

    GraphStats {
        nodes_by_kind,
        edges_by_kind,
        components,
        isolated_cases: graph
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| n.kind == NodeKind::Case && graph.adj[*i].is_empty())
            .map(|(_, n)| n.id.clone())
            .collect(),
    }
}
