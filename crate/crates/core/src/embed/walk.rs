//! Second-order biased random walks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::alias::AliasTable;
use crate::graph::KnowledgeGraph;

/// Undirected weighted graph in the shape the walker needs. Node ids are
/// sorted and adjacency lists are sorted by neighbor index.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkGraph {
    ids: Vec<String>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WalkGraph {
    /// Builds from an explicit node list and undirected edges. Unknown
    /// endpoints are added as nodes; parallel edges have their weights
    /// summed and self-loops are dropped.
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S, f64)]) -> Self {
        let mut ids: Vec<String> = nodes
            .iter()
            .map(|s| s.as_ref().to_owned())
            .chain(
                edges
                    .iter()
                    .flat_map(|(a, b, _)| [a.as_ref().to_owned(), b.as_ref().to_owned()]),
            )
            .collect();
        ids.sort();
        ids.dedup();
        let index = |s: &str| ids.binary_search_by(|x| x.as_str().cmp(s)).unwrap();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
        for (a, b, w) in edges {
            let (u, v) = (index(a.as_ref()), index(b.as_ref()));
            if u == v {
                continue;
            }
            adj[u].push((v, *w));
            adj[v].push((u, *w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
            list.dedup_by(|later, kept| {
                if later.0 == kept.0 {
                    kept.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }
        Self { ids, adj }
    }

    pub fn from_knowledge_graph(graph: &KnowledgeGraph) -> Self {
        Self {
            ids: graph.nodes().iter().map(|n| n.id.clone()).collect(),
            adj: (0..graph.node_count())
                .map(|i| graph.adjacency(i).to_vec())
                .collect(),
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|x| x.as_str().cmp(id)).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search_by_key(&v, |&(n, _)| n).is_ok()
    }
}

/// Precomputed first- and second-order transition tables.
///
/// The second-order table for the directed edge `prev → cur` lives at
/// `offsets[prev] + position of cur in adj[prev]` and ranges over
/// `adj[cur]`.
#[derive(Debug, Clone)]
pub struct Transitions {
    offsets: Vec<usize>,
    first: Vec<Option<AliasTable>>,
    second: Vec<AliasTable>,
}

/// Unnormalized node2vec bias over `adj[cur]` given the previous node:
/// `w/p` for returning to `prev`, `w` for common neighbors of `prev` and
/// `cur`, `w/q` otherwise.
pub fn biased_weights(graph: &WalkGraph, prev: usize, cur: usize, p: f64, q: f64) -> Vec<f64> {
    graph
        .neighbors(cur)
        .iter()
        .map(|&(x, w)| {
            if x == prev {
                w / p
            } else if graph.has_edge(x, prev) {
                w
            } else {
                w / q
            }
        })
        .collect()
}

pub fn precompute_transitions(graph: &WalkGraph, p: f64, q: f64) -> Transitions {
    let mut offsets = Vec::with_capacity(graph.len() + 1);
    let mut total = 0;
    for i in 0..graph.len() {
        offsets.push(total);
        total += graph.neighbors(i).len();
    }
    offsets.push(total);

    let first = (0..graph.len())
        .map(|i| {
            let w: Vec<f64> = graph.neighbors(i).iter().map(|&(_, w)| w).collect();
            AliasTable::new(&w)
        })
        .collect();

    let second = (0..graph.len())
        .into_par_iter()
        .flat_map_iter(|prev| {
            graph.neighbors(prev).iter().map(move |&(cur, _)| {
                AliasTable::new(&biased_weights(graph, prev, cur, p, q))
                    .expect("cur has at least the edge back to prev")
            })
        })
        .collect();

    Transitions {
        offsets,
        first,
        second,
    }
}

impl Transitions {
    fn edge_slot(&self, graph: &WalkGraph, prev: usize, cur: usize) -> Option<usize> {
        graph
            .neighbors(prev)
            .binary_search_by_key(&cur, |&(n, _)| n)
            .ok()
            .map(|pos| self.offsets[prev] + pos)
    }

    /// Normalized second-order distribution over `adj[cur]`, as
    /// `(neighbor, probability)`. `None` if `prev – cur` is not an edge.
    pub fn distribution(
        &self,
        graph: &WalkGraph,
        prev: usize,
        cur: usize,
    ) -> Option<Vec<(usize, f64)>> {
        let slot = self.edge_slot(graph, prev, cur)?;
        let probs = self.second[slot].probabilities();
        Some(
            graph
                .neighbors(cur)
                .iter()
                .map(|&(n, _)| n)
                .zip(probs)
                .collect(),
        )
    }

    pub fn sample_first(
        &self,
        graph: &WalkGraph,
        cur: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<usize> {
        let table = self.first[cur].as_ref()?;
        Some(graph.neighbors(cur)[table.sample(rng)].0)
    }

    pub fn sample_next(
        &self,
        graph: &WalkGraph,
        prev: usize,
        cur: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<usize> {
        let slot = self.edge_slot(graph, prev, cur)?;
        Some(graph.neighbors(cur)[self.second[slot].sample(rng)].0)
    }
}

/// Walks as node-index sequences over a [`WalkGraph`]'s id list.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub ids: Vec<String>,
    pub walks: Vec<Vec<usize>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn walk_ids(&self, i: usize) -> Vec<&str> {
        self.walks[i]
            .iter()
            .map(|&n| self.ids[n].as_str())
            .collect()
    }
}

fn walk_rng(seed: u64, node: usize, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 40) ^ node as u64);
    rng
}

/// One walk of at most `length` nodes starting at `start`. The first step
/// is weight-proportional; later steps use the second-order tables.
pub fn walk_from(
    graph: &WalkGraph,
    transitions: &Transitions,
    start: usize,
    length: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start);
    if length < 2 {
        return walk;
    }
    let Some(next) = transitions.sample_first(graph, start, rng) else {
        return walk;
    };
    walk.push(next);
    while walk.len() < length {
        let (prev, cur) = (walk[walk.len() - 2], walk[walk.len() - 1]);
        match transitions.sample_next(graph, prev, cur, rng) {
            Some(n) => walk.push(n),
            None => break,
        }
    }
    walk
}

/// `walks_per_node` rounds, each visiting every node in index order. Each
/// walk draws from its own stream keyed by `(seed, node, round)`, so the
/// result does not depend on thread scheduling.
pub fn generate_walks(
    graph: &WalkGraph,
    transitions: &Transitions,
    walk_length: usize,
    walks_per_node: usize,
    seed: u64,
) -> WalkCorpus {
    let n = graph.len();
    let walks = (0..n * walks_per_node)
        .into_par_iter()
        .map(|i| {
            let (round, node) = (i / n, i % n);
            let mut rng = walk_rng(seed, node, round);
            walk_from(graph, transitions, node, walk_length, &mut rng)
        })
        .collect();
    WalkCorpus {
        ids: graph.ids.clone(),
        walks,
    }
}
