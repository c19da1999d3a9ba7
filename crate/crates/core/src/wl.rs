//! 1-WL color refinement, WL equivalence, stable partitions and computation
//! trees.
//!
//! Colors are small integers assigned by first occurrence in vertex order, so
//! the same graph always yields the same color table. Iteration-0 colors
//! compare features bitwise; there is no tolerance.

use std::collections::HashMap;

use crate::graph::{disjoint_union, Graph, GraphError};

/// Per-iteration vertex colors `c^0 .. c^T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorAssignment {
    iterations: Vec<Vec<usize>>,
}

impl ColorAssignment {
    /// Colors at iteration `t`.
    pub fn colors(&self, t: usize) -> &[usize] {
        &self.iterations[t]
    }

    /// Number of refinement rounds stored (`T`); iterations run `0..=T`.
    pub fn rounds(&self) -> usize {
        self.iterations.len() - 1
    }

    pub fn num_colors(&self, t: usize) -> usize {
        self.iterations[t].iter().max().map_or(0, |&c| c + 1)
    }

    pub fn last(&self) -> &[usize] {
        self.iterations.last().expect("at least iteration 0")
    }

    pub fn as_table(&self) -> &[Vec<usize>] {
        &self.iterations
    }
}

fn feature_key(f: &[f64]) -> Vec<u64> {
    f.iter().map(|v| v.to_bits()).collect()
}

fn canonical_ids<K: std::hash::Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Vec<usize> {
    let mut ids = HashMap::new();
    keys.into_iter()
        .map(|k| {
            let next = ids.len();
            *ids.entry(k).or_insert(next)
        })
        .collect()
}

fn initial_colors(g: &Graph) -> Vec<usize> {
    canonical_ids(g.features().iter().map(|f| feature_key(f)))
}

fn refine(g: &Graph, prev: &[usize]) -> Vec<usize> {
    canonical_ids((0..g.num_vertices()).map(|v| {
        let mut nbr: Vec<usize> = g.neighbors(v).iter().map(|&u| prev[u]).collect();
        nbr.sort_unstable();
        (prev[v], nbr)
    }))
}

/// Runs `rounds` refinement rounds and returns colors for iterations
/// `0..=rounds`.
pub fn wl_colors(g: &Graph, rounds: usize) -> ColorAssignment {
    let mut iterations = Vec::with_capacity(rounds + 1);
    iterations.push(initial_colors(g));
    for t in 0..rounds {
        let next = refine(g, &iterations[t]);
        iterations.push(next);
    }
    ColorAssignment { iterations }
}

/// Refines until the color count stops growing. The returned assignment ends
/// at the first iteration `s` with `count(s) == count(s - 1)`; since every
/// non-final round adds a color, `s <= n`.
pub fn wl_colors_until_stable(g: &Graph) -> ColorAssignment {
    let mut iterations = vec![initial_colors(g)];
    loop {
        let prev = iterations.last().expect("nonempty");
        let next = refine(g, prev);
        let stable = count(&next) == count(prev);
        iterations.push(next);
        if stable {
            return ColorAssignment { iterations };
        }
    }
}

fn count(colors: &[usize]) -> usize {
    colors.iter().max().map_or(0, |&c| c + 1)
}

/// Outcome of a WL equivalence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WlVerdict {
    pub equivalent: bool,
    /// Refinement rounds run on the disjoint union before it stabilized.
    pub iterations: usize,
}

/// Tests WL equivalence by refining the disjoint union to its fixpoint and
/// comparing the two sides' color multisets at every iteration.
pub fn wl_test(g1: &Graph, g2: &Graph) -> Result<WlVerdict, GraphError> {
    let union = disjoint_union(g1, g2)?;
    let colors = wl_colors_until_stable(&union);
    let split = g1.num_vertices();
    let equivalent = g1.num_vertices() == g2.num_vertices()
        && colors.as_table().iter().all(|c| {
            let mut a = c[..split].to_vec();
            let mut b = c[split..].to_vec();
            a.sort_unstable();
            b.sort_unstable();
            a == b
        });
    Ok(WlVerdict {
        equivalent,
        iterations: colors.rounds(),
    })
}

/// `true` iff no number of WL iterations separates `g1` from `g2`.
pub fn wl_equivalent(g1: &Graph, g2: &Graph) -> Result<bool, GraphError> {
    wl_test(g1, g2).map(|v| v.equivalent)
}

/// The WL fixpoint partition as classes of vertex indices. Classes are
/// ordered by color id, which is the order of each class's smallest vertex.
pub fn stable_partition(g: &Graph) -> Vec<Vec<usize>> {
    let colors = wl_colors_until_stable(g);
    let last = colors.last();
    let mut classes = vec![Vec::new(); count(last)];
    for (v, &c) in last.iter().enumerate() {
        classes[c].push(v);
    }
    classes
}

/// Checks the stable-partition condition: inside each class all features
/// agree and every vertex has the same number of neighbors in each class.
pub fn is_stable_partition(g: &Graph, classes: &[Vec<usize>]) -> bool {
    let mut class_of = vec![usize::MAX; g.num_vertices()];
    for (c, members) in classes.iter().enumerate() {
        for &v in members {
            class_of[v] = c;
        }
    }
    if class_of.contains(&usize::MAX) {
        return false;
    }
    let profile = |v: usize| {
        let mut counts = vec![0usize; classes.len()];
        for &u in g.neighbors(v) {
            counts[class_of[u]] += 1;
        }
        counts
    };
    classes.iter().all(|members| {
        let Some(&first) = members.first() else {
            return true;
        };
        let key = feature_key(g.feature(first));
        let counts = profile(first);
        members
            .iter()
            .all(|&v| feature_key(g.feature(v)) == key && profile(v) == counts)
    })
}

/// Largest depth accepted by [`computation_tree`]; materialized trees grow
/// like `max_degree^depth`.
pub const MAX_TREE_DEPTH: usize = 14;

/// A rooted, feature-labeled tree. Depth counts levels, so a lone root has
/// depth 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputationTree {
    pub feature: Vec<f64>,
    pub children: Vec<ComputationTree>,
}

impl ComputationTree {
    pub fn leaf(feature: Vec<f64>) -> Self {
        Self {
            feature,
            children: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Self::depth).max().unwrap_or(0)
    }

    pub fn num_nodes(&self) -> usize {
        1 + self.children.iter().map(Self::num_nodes).sum::<usize>()
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("computation tree depth must be >= 1, got {0}")]
    DepthTooSmall(usize),
    #[error("computation tree depth {0} exceeds the cap of {MAX_TREE_DEPTH}")]
    DepthTooLarge(usize),
    #[error("vertex {0} out of range for {1} vertices")]
    VertexOutOfRange(usize, usize),
}

/// Depth-`depth` unrolling of `v`'s neighborhood. Each leaf of the previous
/// level gets one child per graph neighbor, parent included.
pub fn computation_tree(g: &Graph, v: usize, depth: usize) -> Result<ComputationTree, TreeError> {
    if depth < 1 {
        return Err(TreeError::DepthTooSmall(depth));
    }
    if depth > MAX_TREE_DEPTH {
        return Err(TreeError::DepthTooLarge(depth));
    }
    if v >= g.num_vertices() {
        return Err(TreeError::VertexOutOfRange(v, g.num_vertices()));
    }
    fn build(g: &Graph, v: usize, depth: usize) -> ComputationTree {
        ComputationTree {
            feature: g.feature(v).to_vec(),
            children: if depth > 1 {
                g.neighbors(v).iter().map(|&u| build(g, u, depth - 1)).collect()
            } else {
                Vec::new()
            },
        }
    }
    Ok(build(g, v, depth))
}
