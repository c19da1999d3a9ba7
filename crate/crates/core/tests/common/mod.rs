#![allow(dead_code)]

use fswgnn::{enumerate_small_graphs, Graph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multiples of `1/denom` in `[lo, hi]`; sums of a handful of these are exact.
pub fn dyadic(rng: &mut TestRng, lo: i64, hi: i64, denom: u32) -> f64 {
    let d = denom as i64;
    rng.random_range(lo * d..=hi * d) as f64 / denom as f64
}

pub fn random_edges(rng: &mut TestRng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Random graph on `n` vertices; each feature row comes from `feature`.
pub fn random_graph(
    rng: &mut TestRng,
    n: usize,
    p: f64,
    mut feature: impl FnMut(&mut TestRng) -> Vec<f64>,
) -> Graph {
    let edges = random_edges(rng, n, p);
    let features = (0..n).map(|_| feature(rng)).collect();
    Graph::new(n, edges, features).unwrap()
}

/// Random graph with `1..=max_n` vertices, random density, and features
/// drawn from a small dyadic palette of dimension `d`.
pub fn random_palette_graph(rng: &mut TestRng, max_n: usize, d: usize) -> Graph {
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(0.2..0.8);
    random_graph(rng, n, p, |r| (0..d).map(|_| dyadic(r, 0, 1, 2)).collect())
}

pub fn random_perm(rng: &mut TestRng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

/// Isomorphism by trying every vertex bijection, for tiny graphs.
pub fn brute_force_isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.num_vertices() != b.num_vertices() || a.num_edges() != b.num_edges() {
        return false;
    }
    permutations(a.num_vertices()).iter().any(|perm| {
        (0..a.num_vertices()).all(|v| a.feature(v) == b.feature(perm[v]))
            && a.edges().iter().all(|&(u, v)| b.has_edge(perm[u], perm[v]))
    })
}

/// Every labeled graph with `1..=max_n` vertices and the given constant
/// feature.
pub fn small_corpus(max_n: usize, feature: &[f64]) -> Vec<Graph> {
    (1..=max_n)
        .flat_map(|n| enumerate_small_graphs(n, feature).unwrap().graphs().to_vec())
        .collect()
}

pub fn cycle(n: usize) -> Graph {
    fswgnn::graph::cycle(n, &[1.0]).unwrap()
}

pub fn path(n: usize) -> Graph {
    fswgnn::graph::path(n, &[1.0]).unwrap()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// `2(1 + xi) * integral_0^1 Q(t) cos(2 pi xi t) dt` for the quantile step
/// function of sorted `y`, integrated numerically one constant piece at a
/// time.
pub fn quadrature_cosine(y: &[f64], xi: f64) -> f64 {
    let n = y.len() as f64;
    let quantile = |t: f64| {
        let idx = (n * t).ceil() as usize;
        y[idx.clamp(1, y.len()) - 1]
    };
    let mut total = 0.0;
    for j in 0..y.len() {
        let (a, b) = (j as f64 / n, (j + 1) as f64 / n);
        let level = quantile(0.5 * (a + b));
        let f = move |t: f64| level * (2.0 * std::f64::consts::PI * xi * t).cos();
        total += adaptive_simpson(&f, a, b, 1e-14);
    }
    2.0 * (1.0 + xi) * total
}

pub fn relative_error(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

/// Proptest strategy: graphs with `1..=max_n` vertices and features of
/// dimension `d` drawn from `palette`.
pub fn graph_strategy(
    max_n: usize,
    d: usize,
    palette: &'static [f64],
) -> impl proptest::strategy::Strategy<Value = Graph> {
    use proptest::prelude::*;
    (1..=max_n).prop_flat_map(move |n| {
        let pairs = n * (n - 1) / 2;
        (
            proptest::collection::vec(any::<bool>(), pairs),
            proptest::collection::vec(proptest::collection::vec(proptest::sample::select(palette), d), n),
        )
            .prop_map(move |(mask, features)| {
                let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
                let edges = all.into_iter().zip(mask).filter(|(_, keep)| *keep).map(|(e, _)| e);
                Graph::new(n, edges, features).unwrap()
            })
    })
}

/// Proptest strategy: a graph together with a relabeling of its vertices.
pub fn graph_and_perm(
    max_n: usize,
    d: usize,
    palette: &'static [f64],
) -> impl proptest::strategy::Strategy<Value = (Graph, Vec<usize>)> {
    use proptest::prelude::*;
    graph_strategy(max_n, d, palette).prop_flat_map(|g| {
        let n = g.num_vertices();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}
