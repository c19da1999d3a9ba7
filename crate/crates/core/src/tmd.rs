//! Tree Mover's Distance between vertex-featured graphs.
//!
//! Tree distance (depth weight 1, W1 transport):
//!
//! ```text
//! TD(Ta, Tb) = |x_ra - x_rb|_1 + W(children(Ta), children(Tb))
//! ```
//!
//! where the smaller child multiset is padded with blank trees (one node,
//! zero feature) and `W` is the optimal assignment under `TD`. A lone root has
//! no children, so two leaves cost only their root distance, and a missing
//! subtree on one side is treated as blank. `TMD^K(Ga, Gb)` is the same
//! padded assignment over the two multisets of depth-`K` computation trees.
//!
//! Trees are never materialized for [`tmd`]: a depth-`k` computation tree is
//! identified by `(vertex, k)` and pair distances are memoized, so one call
//! costs `O(n_a n_b K)` small assignments.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

use crate::assignment::{assignment_min_cost, assignment_value, CostMatrix};
use crate::graph::Graph;
use crate::linalg::l1_distance;
use crate::wl::ComputationTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TmdError {
    #[error("multisets must have equal size ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("feature dimension mismatch ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("depth must be >= 1, got {0}")]
    DepthTooSmall(usize),
    #[error("cannot pad {have} trees down to {target}")]
    PadTooSmall { have: usize, target: usize },
}

/// `W1` between equal-size real multisets: the sorted matching.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64, TmdError> {
    if a.len() != b.len() {
        return Err(TmdError::SizeMismatch(a.len(), b.len()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum())
}

/// Appends blank trees (single node, zero feature of dimension `dim`) until
/// there are `n_target` trees.
pub fn augment_pad(
    mut trees: Vec<ComputationTree>,
    n_target: usize,
    dim: usize,
) -> Result<Vec<ComputationTree>, TmdError> {
    if trees.len() > n_target {
        return Err(TmdError::PadTooSmall {
            have: trees.len(),
            target: n_target,
        });
    }
    trees.resize_with(n_target, || ComputationTree::leaf(vec![0.0; dim]));
    Ok(trees)
}

/// Read-only view of a forest whose nodes are addressed by `Self::Node`.
trait Forest {
    type Node: Copy + Eq + Hash;
    fn feature(&self, node: Self::Node) -> &[f64];
    fn children(&self, node: Self::Node) -> Vec<Self::Node>;
}

/// Computation trees of a graph, node `(v, k)` being the depth-`k` tree of `v`.
struct Unrolled<'a>(&'a Graph);

impl Forest for Unrolled<'_> {
    type Node = (usize, usize);

    fn feature(&self, (v, _): (usize, usize)) -> &[f64] {
        self.0.feature(v)
    }

    fn children(&self, (v, k): (usize, usize)) -> Vec<(usize, usize)> {
        if k > 1 {
            self.0.neighbors(v).iter().map(|&u| (u, k - 1)).collect()
        } else {
            Vec::new()
        }
    }
}

/// A materialized tree flattened into an arena, root at index 0.
struct Arena<'a> {
    nodes: Vec<(&'a [f64], Vec<usize>)>,
}

impl<'a> Arena<'a> {
    fn new(root: &'a ComputationTree) -> Self {
        let mut nodes = Vec::new();
        fn push<'a>(t: &'a ComputationTree, nodes: &mut Vec<(&'a [f64], Vec<usize>)>) -> usize {
            let id = nodes.len();
            nodes.push((&t.feature, Vec::new()));
            let kids = t.children.iter().map(|c| push(c, nodes)).collect();
            nodes[id].1 = kids;
            id
        }
        push(root, &mut nodes);
        Self { nodes }
    }

    fn dims_consistent(&self, d: usize) -> bool {
        self.nodes.iter().all(|(f, _)| f.len() == d)
    }
}

impl Forest for Arena<'_> {
    type Node = usize;

    fn feature(&self, node: usize) -> &[f64] {
        self.nodes[node].0
    }

    fn children(&self, node: usize) -> Vec<usize> {
        self.nodes[node].1.clone()
    }
}

struct TreeDistance<'x, A: Forest, B: Forest> {
    a: &'x A,
    b: &'x B,
    pairs: HashMap<(A::Node, B::Node), f64>,
    blank_a: HashMap<A::Node, f64>,
    blank_b: HashMap<B::Node, f64>,
}

impl<'x, A: Forest, B: Forest> TreeDistance<'x, A, B> {
    fn new(a: &'x A, b: &'x B) -> Self {
        Self {
            a,
            b,
            pairs: HashMap::new(),
            blank_a: HashMap::new(),
            blank_b: HashMap::new(),
        }
    }

    /// Distance from a subtree to the blank tree: every node is transported
    /// to zero, so it is the total l1 mass of the subtree.
    fn blank<F: Forest>(forest: &F, memo: &mut HashMap<F::Node, f64>, node: F::Node) -> f64 {
        if let Some(&v) = memo.get(&node) {
            return v;
        }
        let own: f64 = forest.feature(node).iter().map(|x| x.abs()).sum();
        let below: f64 = forest
            .children(node)
            .into_iter()
            .map(|c| Self::blank(forest, memo, c))
            .sum();
        let v = own + below;
        memo.insert(node, v);
        v
    }

    fn blank_a(&mut self, node: A::Node) -> f64 {
        Self::blank(self.a, &mut self.blank_a, node)
    }

    fn blank_b(&mut self, node: B::Node) -> f64 {
        Self::blank(self.b, &mut self.blank_b, node)
    }

    fn tree(&mut self, x: A::Node, y: B::Node) -> f64 {
        if let Some(&v) = self.pairs.get(&(x, y)) {
            return v;
        }
        let root = l1_distance(self.a.feature(x), self.b.feature(y));
        let v = root + self.padded(&self.a.children(x), &self.b.children(y));
        self.pairs.insert((x, y), v);
        v
    }

    /// Padded assignment between two multisets of subtrees.
    fn padded(&mut self, xs: &[A::Node], ys: &[B::Node]) -> f64 {
        let k = xs.len().max(ys.len());
        match k {
            0 => 0.0,
            1 => self.entry(xs.first().copied(), ys.first().copied()),
            _ => {
                let mut data = Vec::with_capacity(k * k);
                for i in 0..k {
                    for j in 0..k {
                        data.push(self.entry(xs.get(i).copied(), ys.get(j).copied()));
                    }
                }
                let costs = CostMatrix::from_row_major(k, data).expect("tree distances are finite and >= 0");
                assignment_value(&costs)
            }
        }
    }

    fn entry(&mut self, x: Option<A::Node>, y: Option<B::Node>) -> f64 {
        match (x, y) {
            (Some(x), Some(y)) => self.tree(x, y),
            (Some(x), None) => self.blank_a(x),
            (None, Some(y)) => self.blank_b(y),
            (None, None) => 0.0,
        }
    }
}

/// Recursive tree distance between two materialized trees.
pub fn tree_distance(ta: &ComputationTree, tb: &ComputationTree) -> Result<f64, TmdError> {
    let (da, db) = (ta.feature.len(), tb.feature.len());
    let a = Arena::new(ta);
    let b = Arena::new(tb);
    if da != db || !a.dims_consistent(da) || !b.dims_consistent(db) {
        return Err(TmdError::DimensionMismatch(da, db));
    }
    Ok(TreeDistance::new(&a, &b).tree(0, 0))
}

/// `TMD^depth(g1, g2)`. WL-equivalence conclusions need every feature to be
/// nonzero; the function itself accepts any features.
pub fn tmd(g1: &Graph, g2: &Graph, depth: usize) -> Result<f64, TmdError> {
    if g1.feature_dim() != g2.feature_dim() {
        return Err(TmdError::DimensionMismatch(g1.feature_dim(), g2.feature_dim()));
    }
    if depth < 1 {
        return Err(TmdError::DepthTooSmall(depth));
    }
    let (a, b) = (Unrolled(g1), Unrolled(g2));
    let mut td = TreeDistance::new(&a, &b);
    let xs: Vec<_> = (0..g1.num_vertices()).map(|v| (v, depth)).collect();
    let ys: Vec<_> = (0..g2.num_vertices()).map(|v| (v, depth)).collect();
    Ok(td.padded(&xs, &ys))
}

/// Optimal vertex coupling realizing `TMD^depth`: `perm[i]` pairs padded slot
/// `i` of `g1` with padded slot `perm[i]` of `g2`; slots past a graph's vertex
/// count are blank trees.
pub fn tmd_coupling(g1: &Graph, g2: &Graph, depth: usize) -> Result<(f64, Vec<usize>), TmdError> {
    if g1.feature_dim() != g2.feature_dim() {
        return Err(TmdError::DimensionMismatch(g1.feature_dim(), g2.feature_dim()));
    }
    if depth < 1 {
        return Err(TmdError::DepthTooSmall(depth));
    }
    let (a, b) = (Unrolled(g1), Unrolled(g2));
    let mut td = TreeDistance::new(&a, &b);
    let (n1, n2) = (g1.num_vertices(), g2.num_vertices());
    let k = n1.max(n2);
    let mut data = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            data.push(td.entry((i < n1).then_some((i, depth)), (j < n2).then_some((j, depth))));
        }
    }
    let costs = CostMatrix::from_row_major(k, data).expect("tree distances are finite and >= 0");
    let best = assignment_min_cost(&costs);
    Ok((best.value, best.perm))
}
