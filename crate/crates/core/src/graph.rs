//! Vertex-featured graphs, their JSON form, and the synthetic generators.
//!
//! A [`Graph`] is an undirected simple graph on vertices `0..n` with one
//! feature vector per vertex. All feature rows share a dimension `d >= 1` and
//! every graph has at least one vertex. Edges are stored normalized (`i < j`)
//! and sorted, so two graphs compare equal exactly when they have the same
//! vertex count, edge set and features.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("malformed graph document: {0}")]
    Malformed(String),
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("feature dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} feature rows, found {found}")]
    FeatureCount { expected: usize, found: usize },
    #[error("ragged feature rows: row {row} has dimension {found}, expected {expected}")]
    RaggedFeatures {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("edge [{0}, {1}]: index out of range for {2} vertices")]
    IndexOutOfRange(usize, usize, usize),
    #[error("edge [{0}, {0}] is a self-loop")]
    SelfLoop(usize),
    #[error("duplicate edge [{0}, {1}]")]
    DuplicateEdge(usize, usize),
    #[error("non-finite feature value at vertex {0}")]
    NonFinite(usize),
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("permutation of length {found} is not a permutation of 0..{expected}")]
    BadPermutation { expected: usize, found: usize },
    #[error("radius {0} out of range ({1})")]
    RadiusOutOfRange(usize, &'static str),
    #[error("enumeration supports 1 <= n <= 6, got {0}")]
    EnumerationTooLarge(usize),
}

/// An undirected vertex-featured graph `G = (V, E, X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    features: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates and normalizes the input. Edges may be given in either
    /// orientation; `[1, 0]` and `[0, 1]` together count as a duplicate.
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Vec<Vec<f64>>,
    ) -> Result<Self, GraphError> {
        if num_vertices == 0 {
            return Err(GraphError::Empty);
        }
        if features.len() != num_vertices {
            return Err(GraphError::FeatureCount {
                expected: num_vertices,
                found: features.len(),
            });
        }
        let d = features[0].len();
        if d == 0 {
            return Err(GraphError::ZeroDimension);
        }
        for (row, f) in features.iter().enumerate() {
            if f.len() != d {
                return Err(GraphError::RaggedFeatures {
                    row,
                    expected: d,
                    found: f.len(),
                });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(GraphError::NonFinite(row));
            }
        }

        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            if a >= num_vertices || b >= num_vertices {
                return Err(GraphError::IndexOutOfRange(a, b, num_vertices));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        let edges: Vec<_> = seen.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_vertices];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            features,
            edges,
            adjacency,
        })
    }

    /// Graph with every vertex carrying the same feature vector.
    pub fn with_constant_features(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        feature: &[f64],
    ) -> Result<Self, GraphError> {
        Self::new(num_vertices, edges, vec![feature.to_vec(); num_vertices])
    }

    pub fn num_vertices(&self) -> usize {
        self.features.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature(&self, v: usize) -> &[f64] {
        &self.features[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency
            .get(a)
            .is_some_and(|nbrs| nbrs.binary_search(&b).is_ok())
    }

    /// Dense 0/1 adjacency matrix, row-major.
    pub fn adjacency_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_vertices();
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j) in &self.edges {
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
        a
    }

    /// Returns the same graph with features replaced by `map(feature)`.
    pub fn map_features(&self, mut map: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self, GraphError> {
        let features = self.features.iter().map(|f| map(f)).collect();
        Self::new(self.num_vertices(), self.edges.iter().copied(), features)
    }

    /// Relabels vertices: old vertex `v` becomes `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        if perm.len() != n || !perm.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true)) {
            return Err(GraphError::BadPermutation {
                expected: n,
                found: perm.len(),
            });
        }
        let mut features = vec![Vec::new(); n];
        for (old, f) in self.features.iter().enumerate() {
            features[perm[old]] = f.clone();
        }
        Self::new(
            n,
            self.edges.iter().map(|&(a, b)| (perm[a], perm[b])),
            features,
        )
    }

    /// BFS hop distances from `source`; `None` for unreachable vertices.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_vertices()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let next = dist[v].map(|d| d + 1);
            for &u in self.neighbors(v) {
                if dist[u].is_none() {
                    dist[u] = next;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            num_vertices: self.num_vertices(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            features: self.features.clone(),
            label: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph serialization cannot fail")
    }
}

/// Wire form of a graph: `{"num_vertices", "edges", "features"}` with an
/// optional free-form `"label"` used by corpus files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub num_vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TryFrom<GraphDocument> for Graph {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, GraphError> {
        Graph::new(
            doc.num_vertices,
            doc.edges.into_iter().map(|[a, b]| (a, b)),
            doc.features,
        )
    }
}

/// Parses a single graph from its JSON document.
pub fn load_graph(text: &str) -> Result<Graph, GraphError> {
    let doc: GraphDocument =
        serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
    Graph::try_from(doc)
}

/// Ordered graphs sharing one feature dimension, with optional labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphCorpus {
    graphs: Vec<Graph>,
    labels: Vec<Option<String>>,
}

impl GraphCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, graph: Graph, label: Option<String>) -> Result<(), GraphError> {
        if let Some(first) = self.graphs.first() {
            if first.feature_dim() != graph.feature_dim() {
                return Err(GraphError::DimensionMismatch(
                    first.feature_dim(),
                    graph.feature_dim(),
                ));
            }
        }
        self.graphs.push(graph);
        self.labels.push(label);
        Ok(())
    }

    pub fn from_graphs(graphs: impl IntoIterator<Item = Graph>) -> Result<Self, GraphError> {
        let mut corpus = Self::new();
        for g in graphs {
            corpus.push(g, None)?;
        }
        Ok(corpus)
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).and_then(|l| l.as_deref())
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.graphs.first().map(Graph::feature_dim)
    }

    /// Largest vertex count in the corpus (the bound `N`).
    pub fn max_vertices(&self) -> usize {
        self.graphs.iter().map(Graph::num_vertices).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let docs: Vec<GraphDocument> = self
            .graphs
            .iter()
            .zip(&self.labels)
            .map(|(g, l)| GraphDocument {
                label: l.clone(),
                ..g.to_document()
            })
            .collect();
        serde_json::to_string(&docs).expect("corpus serialization cannot fail")
    }
}

/// Parses a corpus: a JSON array of graph documents.
pub fn load_corpus(text: &str) -> Result<GraphCorpus, GraphError> {
    let docs: Vec<GraphDocument> =
        serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
    let mut corpus = GraphCorpus::new();
    for doc in docs {
        let label = doc.label.clone();
        corpus.push(Graph::try_from(doc)?, label)?;
    }
    Ok(corpus)
}

/// Vertex-disjoint union; vertices of `g2` are shifted by `g1.num_vertices()`.
pub fn disjoint_union(g1: &Graph, g2: &Graph) -> Result<Graph, GraphError> {
    if g1.feature_dim() != g2.feature_dim() {
        return Err(GraphError::DimensionMismatch(g1.feature_dim(), g2.feature_dim()));
    }
    let shift = g1.num_vertices();
    let edges = g1
        .edges()
        .iter()
        .copied()
        .chain(g2.edges().iter().map(|&(a, b)| (a + shift, b + shift)));
    let features = g1.features().iter().chain(g2.features()).cloned().collect();
    Graph::new(shift + g2.num_vertices(), edges, features)
}

/// All `2^(n(n-1)/2)` labeled graphs on `n` vertices, one per edge subset of
/// `K_n`, every vertex carrying `feature`. Subsets are enumerated in binary
/// order over the lexicographically sorted pairs, so index 0 is edgeless and
/// the last graph is complete.
pub fn enumerate_small_graphs(n: usize, feature: &[f64]) -> Result<GraphCorpus, GraphError> {
    if n == 0 || n > 6 {
        return Err(GraphError::EnumerationTooLarge(n));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut corpus = GraphCorpus::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e);
        corpus.push(Graph::with_constant_features(n, edges, feature)?, None)?;
    }
    Ok(corpus)
}

/// Topologies for the long-range graph transfer task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Ring,
    CrossRing,
    CliquePath,
}

impl std::str::FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ring" => Ok(Self::Ring),
            "crossring" => Ok(Self::CrossRing),
            "cliquepath" => Ok(Self::CliquePath),
            other => Err(format!("unknown topology {other:?} (ring|crossring|cliquepath)")),
        }
    }
}

/// A transfer-task graph together with its source and target vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferGraph {
    pub graph: Graph,
    pub source: usize,
    pub target: usize,
}

pub const SOURCE_FEATURE: [f64; 2] = [1.0, 0.0];
pub const TARGET_FEATURE: [f64; 2] = [0.0, 1.0];
pub const BLANK_FEATURE: [f64; 2] = [1.0, 1.0];

/// Builds a graph transfer instance of radius `r >= 2`. All three layouts
/// have `2r` vertices, the source is vertex 0 and the target sits at hop
/// distance exactly `r`.
///
/// * `Ring`: cycle `0..2r`, target `r`.
/// * `CrossRing`: the same cycle plus chords `(i, 2r - i)` for `1 <= i < r`
///   joining the two arcs. Chords link vertices equidistant from the source,
///   so the source-target distance is unchanged.
/// * `CliquePath`: a clique on `0..=r` (source 0), then a path of length
///   `r - 1` from clique vertex `r` to the target `2r - 1`.
///
/// Features are two-dimensional: source `[1, 0]`, target `[0, 1]`, every
/// other vertex the blank all-ones vector, so no vertex carries the zero
/// vector.
pub fn gen_transfer_graph(topology: Topology, r: usize) -> Result<TransferGraph, GraphError> {
    if r < 2 {
        return Err(GraphError::RadiusOutOfRange(r, "transfer graphs need r >= 2"));
    }
    let n = 2 * r;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let target = match topology {
        Topology::Ring | Topology::CrossRing => {
            edges.extend((0..n).map(|i| (i, (i + 1) % n)));
            if topology == Topology::CrossRing {
                edges.extend((1..r).map(|i| (i, n - i)).filter(|&(a, b)| a.abs_diff(b) > 1));
            }
            r
        }
        Topology::CliquePath => {
            edges.extend((0..=r).flat_map(|i| (i + 1..=r).map(move |j| (i, j))));
            edges.extend((r..n - 1).map(|i| (i, i + 1)));
            n - 1
        }
    };
    let mut features = vec![BLANK_FEATURE.to_vec(); n];
    features[0] = SOURCE_FEATURE.to_vec();
    features[target] = TARGET_FEATURE.to_vec();
    Ok(TransferGraph {
        graph: Graph::new(n, edges, features)?,
        source: 0,
        target,
    })
}

/// Complete binary tree of depth `r` for the NeighborsMatch task, with
/// `2^(r+1) - 1` vertices in heap order (root 0, children of `v` at `2v+1`,
/// `2v+2`). Features have dimension `2^r + 1`: leaf `k` (left to right)
/// carries the one-hot `e_k`, the root carries the query marker `e_{2^r}`,
/// internal vertices the all-ones blank.
pub fn gen_neighbors_match(r: usize) -> Result<Graph, GraphError> {
    if !(2..=12).contains(&r) {
        return Err(GraphError::RadiusOutOfRange(r, "neighbors-match needs 2 <= r <= 12"));
    }
    let leaves = 1usize << r;
    let n = 2 * leaves - 1;
    let dim = leaves + 1;
    let first_leaf = leaves - 1;
    let edges = (1..n).map(|v| ((v - 1) / 2, v));
    let features = (0..n)
        .map(|v| {
            if v >= first_leaf {
                one_hot(dim, v - first_leaf)
            } else if v == 0 {
                one_hot(dim, leaves)
            } else {
                vec![1.0; dim]
            }
        })
        .collect();
    Graph::new(n, edges, features)
}

fn one_hot(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}

/// Cycle `C_n` with constant features.
pub fn cycle(n: usize, feature: &[f64]) -> Result<Graph, GraphError> {
    Graph::with_constant_features(n, (0..n).map(|i| (i, (i + 1) % n)), feature)
}

/// Path `P_n` with constant features.
pub fn path(n: usize, feature: &[f64]) -> Result<Graph, GraphError> {
    Graph::with_constant_features(n, (1..n).map(|i| (i - 1, i)), feature)
}
