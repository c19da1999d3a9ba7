//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run alone with `cargo test -p fswgnn --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fswgnn::tmd::wasserstein_1d;
use fswgnn::wl::{is_stable_partition, stable_partition};
use fswgnn::{
    assignment_min_cost, dirichlet_energy, disjoint_union, distortion_report, ds_metric_l1, mad,
    quantile_cosine_integral, relative_distance, tmd, wl_colors, wl_equivalent, CostMatrix,
    Floors, FswGnnModel, Graph, GraphCorpus, GraphMetric, Matrix,
};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const CORPUS_MAX_N: usize = 4;

fn corpus() -> Vec<Graph> {
    small_corpus(CORPUS_MAX_N, &[1.0])
}

fn unordered_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
}

fn wl_table(graphs: &[Graph]) -> Vec<bool> {
    unordered_pairs(graphs.len())
        .par_iter()
        .map(|&(i, j)| wl_equivalent(&graphs[i], &graphs[j]).unwrap())
        .collect()
}

fn ac1_fsw_quadrature() -> Check {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = r.random_range(1..=10);
        let mut y: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        y.sort_by(f64::total_cmp);
        let xi = match case % 10 {
            0 => 0.0,
            1 => 1e-10 * r.random::<f64>(),
            2 => r.random_range(5.0..25.0),
            _ => Exp1.sample(&mut r),
        };
        let closed = quantile_cosine_integral(&y, xi).map_err(|e| e.to_string())?;
        let quad = quadrature_cosine(&y, xi);
        let scaled = (closed - quad).abs() / (1.0 + closed.abs());
        worst = worst.max(scaled);
        ensure(scaled <= 1e-9, || format!("y={y:?} xi={xi}: closed {closed} vs quadrature {quad}"))?;
    }
    Ok(format!("1000 cases, worst scaled error {worst:.2e}"))
}

fn ac2_wasserstein_vs_assignment() -> Check {
    let mut r = rng(202);
    for _ in 0..500 {
        let n = r.random_range(1..=5);
        let a: Vec<f64> = (0..n).map(|_| dyadic(&mut r, -4, 4, 16)).collect();
        let b: Vec<f64> = (0..n).map(|_| dyadic(&mut r, -4, 4, 16)).collect();
        let w = wasserstein_1d(&a, &b).map_err(|e| e.to_string())?;
        let c = CostMatrix::from_fn(n, |i, j| (a[i] - b[j]).abs()).unwrap();
        let h = assignment_min_cost(&c).value;
        let brute = permutations(n)
            .iter()
            .map(|p| c.cost_of(p))
            .fold(f64::INFINITY, f64::min);
        ensure(w == h && h == brute, || format!("a={a:?} b={b:?}: w1 {w}, hungarian {h}, brute {brute}"))?;
    }
    Ok("500 instances, n <= 5, all equal".into())
}

fn ac3_hungarian_vs_brute() -> Check {
    let perms = permutations(5);
    let mut r = rng(303);
    for case in 0..200 {
        // Half continuous, half small integers so that ties are common.
        let c = if case % 2 == 0 {
            CostMatrix::from_fn(5, |_, _| r.random_range(0.0..10.0)).unwrap()
        } else {
            CostMatrix::from_fn(5, |_, _| r.random_range(0..4) as f64).unwrap()
        };
        let got = assignment_min_cost(&c);
        let best = perms.iter().map(|p| c.cost_of(p)).fold(f64::INFINITY, f64::min);
        let first = perms.iter().find(|p| c.cost_of(p) == best).unwrap();
        ensure(got.value == best && &got.perm == first, || {
            format!("case {case}: got {:?} ({}), expected {first:?} ({best})", got.perm, got.value)
        })?;
    }
    Ok("200 random 5x5 matrices, value and tie-break exact".into())
}

fn ac4_ds_axioms() -> Check {
    let mut r = rng(404);
    let triples: Vec<[Graph; 3]> = (0..200)
        .map(|_| std::array::from_fn(|_| random_palette_graph(&mut r, 6, 2)))
        .collect();
    let results = triples
        .par_iter()
        .map(|[a, b, c]| -> Result<(f64, f64), String> {
            let d = |x: &Graph, y: &Graph| ds_metric_l1(x, y).map(|res| res.value).map_err(|e| e.to_string());
            let (ab, ba, bc, ac) = (d(a, b)?, d(b, a)?, d(b, c)?, d(a, c)?);
            Ok(((ab - ba).abs(), ac - ab - bc))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let worst_sym = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_tri = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    ensure(worst_sym <= 1e-8, || format!("symmetry gap {worst_sym:e}"))?;
    ensure(worst_tri <= 1e-7, || format!("triangle excess {worst_tri:e}"))?;
    Ok(format!("200 triples, max |d(a,b)-d(b,a)| {worst_sym:.1e}, max triangle excess {worst_tri:.1e}"))
}

/// Compares a zero test on every corpus pair against WL equivalence.
fn zero_set_agreement(graphs: &[Graph], is_zero: &[bool]) -> Result<(usize, usize), String> {
    let wl = wl_table(graphs);
    let pairs = unordered_pairs(graphs.len());
    let mut equivalent = 0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if wl[k] != is_zero[k] {
            return Err(format!(
                "pair ({i}, {j}): wl_equivalent={} but zero test={}",
                wl[k], is_zero[k]
            ));
        }
        equivalent += wl[k] as usize;
    }
    Ok((pairs.len(), equivalent))
}

fn ac5_ds_zero_set() -> Check {
    let graphs = corpus();
    let values = unordered_pairs(graphs.len())
        .par_iter()
        .map(|&(i, j)| ds_metric_l1(&graphs[i], &graphs[j]).map(|r| r.value))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let zero: Vec<bool> = values.iter().map(|&v| v <= 1e-7).collect();
    let (pairs, eq) = zero_set_agreement(&graphs, &zero)?;
    let c6 = cycle(6);
    let c3c3 = disjoint_union(&cycle(3), &cycle(3)).unwrap();
    let wl_pair = ds_metric_l1(&c6, &c3c3).map_err(|e| e.to_string())?.value;
    let sep_pair = ds_metric_l1(&path(3), &cycle(3)).map_err(|e| e.to_string())?.value;
    ensure(wl_pair <= 1e-7, || format!("rho(C6, C3+C3) = {wl_pair:e}"))?;
    ensure(sep_pair >= 1e-3, || format!("rho(P3, C3) = {sep_pair:e}"))?;
    let min_pos = values.iter().copied().filter(|&v| v > 1e-7).fold(f64::INFINITY, f64::min);
    Ok(format!(
        "{} graphs, {pairs} pairs ({eq} WL-equivalent), min nonzero {min_pos:.3e}; C6/C3+C3 {wl_pair:.1e}, P3/C3 {sep_pair:.4}",
        graphs.len()
    ))
}

fn ac6_tmd_zero_set() -> Check {
    let graphs = corpus();
    let depth = CORPUS_MAX_N + 1;
    let values = unordered_pairs(graphs.len())
        .par_iter()
        .map(|&(i, j)| tmd(&graphs[i], &graphs[j], depth))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let zero: Vec<bool> = values.iter().map(|&v| v <= 1e-8).collect();
    let (pairs, eq) = zero_set_agreement(&graphs, &zero)?;
    let min_pos = values.iter().copied().filter(|&v| v > 1e-8).fold(f64::INFINITY, f64::min);
    Ok(format!("depth {depth}, {pairs} pairs ({eq} WL-equivalent), min nonzero {min_pos:.3e}"))
}

fn ac7_tmd_homogeneity() -> Check {
    let mut r = rng(707);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut g = || {
            let n = r.random_range(1..=5);
            random_graph(&mut r, n, 0.5, |r| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)])
        };
        let (a, b) = (g(), g());
        let depth = r.random_range(1..=3);
        let base = tmd(&a, &b, depth).map_err(|e| e.to_string())?;
        for alpha in [0.5, 2.0, 10.0] {
            let scale = |x: &Graph| x.map_features(|f| f.iter().map(|v| alpha * v).collect()).unwrap();
            let scaled = tmd(&scale(&a), &scale(&b), depth).map_err(|e| e.to_string())?;
            let err = if base == 0.0 { scaled.abs() } else { relative_error(scaled, alpha * base) };
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("alpha {alpha}: {scaled} vs {}", alpha * base))?;
        }
    }
    Ok(format!("100 pairs x 3 scales, worst relative error {worst:.1e}"))
}

fn ac8_gnn_zero_set() -> Check {
    let graphs = corpus();
    let m = fswgnn::default_hidden_dim(CORPUS_MAX_N, 1);
    let wl = wl_table(&graphs);
    let pairs = unordered_pairs(graphs.len());
    let mut passed = 0;
    let mut notes = Vec::new();
    for seed in 0..10u64 {
        let model = FswGnnModel::new(1, m, CORPUS_MAX_N, seed).map_err(|e| e.to_string())?;
        let emb: Vec<Vec<f64>> = graphs
            .iter()
            .map(|g| model.graph_embedding(g))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let mismatches = pairs
            .iter()
            .zip(&wl)
            .filter(|(&(i, j), &eq)| (relative_distance(&emb[i], &emb[j]) <= 1e-8) != eq)
            .count();
        if mismatches == 0 {
            passed += 1;
        } else {
            notes.push(format!("seed {seed}: {mismatches} mismatches"));
        }
    }
    ensure(passed >= 9, || format!("{passed}/10 seeds agree; {}", notes.join(", ")))?;
    Ok(format!("m = {m}, T = {CORPUS_MAX_N}: {passed}/10 seeds with exact zero-set agreement"))
}

fn ac9_permutation_invariance() -> Check {
    let mut r = rng(909);
    for case in 0..100 {
        let n = r.random_range(1..=8);
        let g = random_graph(&mut r, n, 0.4, |r| vec![r.random_range(-1.0..1.0), dyadic(r, 0, 1, 1)]);
        let perm = random_perm(&mut r, n);
        let pg = g.permute(&perm).unwrap();
        let model = FswGnnModel::new(2, 8, 3, r.random()).map_err(|e| e.to_string())?;
        let (e1, e2) = (model.graph_embedding(&g).unwrap(), model.graph_embedding(&pg).unwrap());
        ensure(e1 == e2, || format!("case {case}: graph embedding changed"))?;
        let (h1, h2) = (model.node_embeddings(&g).unwrap(), model.node_embeddings(&pg).unwrap());
        for (t, (a, b)) in h1.iter().zip(&h2).enumerate() {
            for (v, &pv) in perm.iter().enumerate() {
                ensure(a.row(v) == b.row(pv), || format!("case {case}: H^({t}) row {v} not permuted"))?;
            }
        }
    }
    Ok("100 random (graph, permutation) pairs, bit-exact".into())
}

fn ac10_distortion() -> Check {
    let graphs = corpus();
    let corpus = GraphCorpus::from_graphs(graphs).unwrap();
    let m = fswgnn::default_hidden_dim(CORPUS_MAX_N, 1);
    let model = FswGnnModel::new(1, m, CORPUS_MAX_N, 0).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for metric in [GraphMetric::DsL1, GraphMetric::Tmd { depth: CORPUS_MAX_N + 1 }] {
        let report = distortion_report(&corpus, &model, metric, Floors::default()).map_err(|e| e.to_string())?;
        ensure(report.violations.is_empty(), || {
            format!("{}: {} zero-set violations, first {:?}", report.metric_name, report.violations.len(), report.violations[0])
        })?;
        let distortion = report.distortion.ok_or("no included pairs")?;
        ensure(distortion.is_finite(), || format!("{}: distortion {distortion}", report.metric_name))?;
        lines.push(format!(
            "{}: c {:.3e}, C {:.3e}, C/c {:.3e}, excluded {}",
            report.metric_name,
            report.c_hat.unwrap(),
            report.big_c_hat.unwrap(),
            distortion,
            report.excluded_pairs
        ));
    }
    Ok(lines.join("; "))
}

fn ac11_wl_stabilization() -> Check {
    let mut r = rng(1111);
    let mut worst = 0usize;
    for case in 0..500 {
        let n = r.random_range(1..=10);
        let p = r.random_range(0.1..0.9);
        let g = random_graph(&mut r, n, p, |r| vec![dyadic(r, 0, 1, 1)]);
        let colors = wl_colors(&g, n + 1);
        let s = (0..=n)
            .find(|&t| colors.colors(t) == colors.colors(t + 1))
            .ok_or_else(|| format!("case {case}: no fixpoint within {n} rounds"))?;
        worst = worst.max(s);
        let classes = stable_partition(&g);
        ensure(is_stable_partition(&g, &classes), || format!("case {case}: partition not stable"))?;
        ensure(classes.len() == colors.num_colors(s), || format!("case {case}: class count differs"))?;
    }
    Ok(format!("500 graphs, n <= 10, latest fixpoint at round {worst}"))
}

fn ac12_smoothness() -> Check {
    let mut r = rng(1212);
    for case in 0..200 {
        let n = r.random_range(1..=8);
        let g = random_graph(&mut r, n, 0.5, |_| vec![1.0]);
        let row: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        let flat = Matrix::from_rows(&vec![row; n]);
        ensure(dirichlet_energy(&flat, &g).unwrap() == 0.0, || format!("case {case}: energy of constant rows"))?;
        ensure(mad(&flat, &g).unwrap() == 0.0, || format!("case {case}: MAD of constant rows"))?;

        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| r.random_range(-3.0..3.0)).collect()).collect();
        let perm = random_perm(&mut r, n);
        let mut permuted = vec![Vec::new(); n];
        for (v, row) in rows.iter().enumerate() {
            permuted[perm[v]] = row.clone();
        }
        let (h, ph) = (Matrix::from_rows(&rows), Matrix::from_rows(&permuted));
        let pg = g.permute(&perm).unwrap();
        ensure(dirichlet_energy(&h, &g).unwrap() == dirichlet_energy(&ph, &pg).unwrap(), || {
            format!("case {case}: energy not invariant")
        })?;
        ensure(mad(&h, &g).unwrap() == mad(&ph, &pg).unwrap(), || format!("case {case}: MAD not invariant"))?;
    }
    Ok("200 graphs: zero on constant rows, exact permutation invariance".into())
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "FSW closed form vs quadrature", limit: secs(10), run: ac1_fsw_quadrature },
        Criterion { id: 2, name: "1D OT equals assignment", limit: secs(5), run: ac2_wasserstein_vs_assignment },
        Criterion { id: 3, name: "Hungarian vs brute force", limit: secs(5), run: ac3_hungarian_vs_brute },
        Criterion { id: 4, name: "DS metric axioms", limit: secs(120), run: ac4_ds_axioms },
        Criterion { id: 5, name: "DS zero set equals WL", limit: secs(300), run: ac5_ds_zero_set },
        Criterion { id: 6, name: "TMD zero set equals WL", limit: secs(300), run: ac6_tmd_zero_set },
        Criterion { id: 7, name: "TMD homogeneity", limit: None, run: ac7_tmd_homogeneity },
        Criterion { id: 8, name: "FSW-GNN zero set equals WL", limit: secs(600), run: ac8_gnn_zero_set },
        Criterion { id: 9, name: "permutation invariance", limit: None, run: ac9_permutation_invariance },
        Criterion { id: 10, name: "empirical bi-Lipschitz distortion", limit: secs(600), run: ac10_distortion },
        Criterion { id: 11, name: "WL stabilization", limit: None, run: ac11_wl_stabilization },
        Criterion { id: 12, name: "oversmoothing diagnostics", limit: None, run: ac12_smoothness },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("[PASS] AC-{:<2} {} ({elapsed:.2?}): {detail}", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("[FAIL] AC-{:<2} {} ({elapsed:.2?}): {why}", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
