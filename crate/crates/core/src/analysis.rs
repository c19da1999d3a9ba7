//! Empirical distortion of graph embeddings against a graph metric, lower
//! Hölder fits, and oversmoothing diagnostics.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ds::{ds_metric_l1, ds_metric_l2, DsError};
use crate::gnn::{FswGnnModel, GnnError};
use crate::graph::{Graph, GraphCorpus};
use crate::linalg::{l2_distance, l2_norm, Matrix};
use crate::tmd::{tmd, TmdError};

/// Metric distances at or below this count as zero.
pub const RHO_FLOOR: f64 = 1e-7;
/// Relative embedding distances at or below this count as zero.
pub const EMB_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("metric failed on pair ({i}, {j}): {message}")]
    Metric { i: usize, j: usize, message: String },
    #[error(transparent)]
    Embedding(#[from] GnnError),
    #[error("Hölder fit needs at least {needed} usable pairs, got {got}")]
    InsufficientPairs { needed: usize, got: usize },
    #[error("matrix has {rows} rows but the graph has {vertices} vertices")]
    ShapeMismatch { rows: usize, vertices: usize },
}

/// Graph metric used as the reference distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphMetric {
    DsL1,
    DsL2 { tol: f64 },
    Tmd { depth: usize },
}

impl GraphMetric {
    pub fn name(&self) -> String {
        match self {
            Self::DsL1 => "ds_l1".into(),
            Self::DsL2 { .. } => "ds_l2".into(),
            Self::Tmd { depth } => format!("tmd_depth{depth}"),
        }
    }

    pub fn distance(&self, a: &Graph, b: &Graph) -> Result<f64, MetricError> {
        Ok(match *self {
            Self::DsL1 => ds_metric_l1(a, b)?.value,
            Self::DsL2 { tol } => ds_metric_l2(a, b, tol)?.value,
            Self::Tmd { depth } => tmd(a, b, depth)?,
        })
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Ds(#[from] DsError),
    #[error(transparent)]
    Tmd(#[from] TmdError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Floors {
    pub rho: f64,
    pub emb: f64,
}

impl Default for Floors {
    fn default() -> Self {
        Self {
            rho: RHO_FLOOR,
            emb: EMB_FLOOR,
        }
    }
}

/// One evaluated pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub rho: f64,
    /// `||E(G_i) - E(G_j)||_2`.
    pub emb_dist: f64,
    /// `emb_dist / max(||E(G_i)||, ||E(G_j)||)`.
    pub emb_rel: f64,
    /// `emb_dist / rho` for pairs with `rho` above the floor.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Metric says zero but the embeddings differ.
    MetricZeroEmbeddingApart,
    /// Embeddings coincide but the metric is positive.
    EmbeddingZeroMetricApart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub metric_name: String,
    pub seed: u64,
    pub iterations: usize,
    pub pair_count: usize,
    pub excluded_pairs: usize,
    pub c_hat: Option<f64>,
    #[serde(rename = "C_hat")]
    pub big_c_hat: Option<f64>,
    pub distortion: Option<f64>,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub pairs: Vec<PairRecord>,
}

impl DistortionReport {
    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().filter_map(|p| p.ratio)
    }

    /// CSV with header `i,j,rho,emb_dist,ratio`; excluded pairs leave `ratio`
    /// empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,rho,emb_dist,ratio\n");
        for p in &self.pairs {
            let ratio = p.ratio.map(|r| format!("{r:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{},{:.16e},{:.16e},{}\n", p.i, p.j, p.rho, p.emb_dist, ratio));
        }
        out
    }
}

/// Metric distance for every unordered pair `(i, j)`, `i < j`, in
/// lexicographic order.
pub fn metric_distances(
    corpus: &GraphCorpus,
    metric: GraphMetric,
) -> Result<Vec<(usize, usize, f64)>, AnalysisError> {
    let graphs = corpus.graphs();
    let index_pairs: Vec<(usize, usize)> = (0..graphs.len())
        .flat_map(|i| (i + 1..graphs.len()).map(move |j| (i, j)))
        .collect();
    index_pairs
        .par_iter()
        .map(|&(i, j)| {
            metric
                .distance(&graphs[i], &graphs[j])
                .map(|rho| (i, j, rho))
                .map_err(|e| AnalysisError::Metric {
                    i,
                    j,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Evaluates every unordered pair of the corpus. A pair with
/// `rho <= floors.rho` is excluded from the ratio statistics; it is a
/// violation if its relative embedding distance exceeds `floors.emb`.
/// Included pairs whose embeddings coincide are violations too.
pub fn distortion_report(
    corpus: &GraphCorpus,
    model: &FswGnnModel,
    metric: GraphMetric,
    floors: Floors,
) -> Result<DistortionReport, AnalysisError> {
    if corpus.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let distances = metric_distances(corpus, metric)?;
    report_from_distances(corpus, model, &metric.name(), &distances, floors)
}

/// Distortion of models with the same seed and width at each iteration
/// count in `iterations`, against one set of metric distances.
pub fn distortion_by_iterations(
    corpus: &GraphCorpus,
    hidden_dim: usize,
    iterations: &[usize],
    seed: u64,
    metric: GraphMetric,
    floors: Floors,
) -> Result<Vec<DistortionReport>, AnalysisError> {
    let d = corpus.feature_dim().ok_or(AnalysisError::EmptyCorpus)?;
    let distances = metric_distances(corpus, metric)?;
    iterations
        .iter()
        .map(|&t| {
            let model = FswGnnModel::new(d, hidden_dim, t, seed)?;
            report_from_distances(corpus, &model, &metric.name(), &distances, floors)
        })
        .collect()
}

/// Assembles a report from precomputed `(i, j, rho)` triples.
pub fn report_from_distances(
    corpus: &GraphCorpus,
    model: &FswGnnModel,
    metric_name: &str,
    distances: &[(usize, usize, f64)],
    floors: Floors,
) -> Result<DistortionReport, AnalysisError> {
    if corpus.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let embeddings = corpus
        .graphs()
        .par_iter()
        .map(|g| model.graph_embedding(g))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<PairRecord> = distances
        .iter()
        .map(|&(i, j, rho)| {
            let (a, b) = (&embeddings[i], &embeddings[j]);
            let emb_dist = l2_distance(a, b);
            let scale = l2_norm(a).max(l2_norm(b));
            let emb_rel = if scale == 0.0 { 0.0 } else { emb_dist / scale };
            PairRecord {
                i,
                j,
                rho,
                emb_dist,
                emb_rel,
                ratio: (rho > floors.rho).then(|| emb_dist / rho),
            }
        })
        .collect();

    let mut violations = Vec::new();
    for p in &pairs {
        let metric_zero = p.rho <= floors.rho;
        let emb_zero = p.emb_rel <= floors.emb;
        let kind = match (metric_zero, emb_zero) {
            (true, false) => Some(ViolationKind::MetricZeroEmbeddingApart),
            (false, true) => Some(ViolationKind::EmbeddingZeroMetricApart),
            _ => None,
        };
        if let Some(kind) = kind {
            violations.push(Violation { i: p.i, j: p.j, kind });
        }
    }
    // Coinciding embeddings make a ratio of zero, which is not a witness.
    let ratios: Vec<f64> = pairs
        .iter()
        .filter(|p| p.emb_rel > floors.emb)
        .filter_map(|p| p.ratio)
        .collect();
    let c_hat = ratios.iter().copied().reduce(f64::min);
    let big_c_hat = ratios.iter().copied().reduce(f64::max);
    Ok(DistortionReport {
        metric_name: metric_name.to_string(),
        seed: model.seed(),
        iterations: model.iterations(),
        pair_count: pairs.len(),
        excluded_pairs: pairs.iter().filter(|p| p.ratio.is_none()).count(),
        c_hat,
        big_c_hat,
        distortion: c_hat.zip(big_c_hat).map(|(lo, hi)| hi / lo),
        violations,
        pairs,
    })
}

/// `||dE|| ~ c * rho^alpha` fitted on the lower envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderFit {
    pub alpha: f64,
    pub c: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub envelope_points: usize,
}

/// Fits `log ||dE|| = log c + alpha log rho` by least squares on the lower
/// envelope: pairs with `rho > rho_floor` and positive embedding distance are
/// binned into `ceil(sqrt(k))` equal-width bins in `log rho` (at least 3),
/// and the point with the smallest `log ||dE||` in each bin is kept.
pub fn holder_fit(pairs: &[(f64, f64)], rho_floor: f64) -> Result<HolderFit, AnalysisError> {
    let logs: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(rho, e)| *rho > rho_floor && *e > 0.0 && rho.is_finite() && e.is_finite())
        .map(|(rho, e)| (rho.ln(), e.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(AnalysisError::InsufficientPairs {
            needed: 3,
            got: logs.len(),
        });
    }
    let lo = logs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let bins = ((logs.len() as f64).sqrt().ceil() as usize).max(3);
    let width = (hi - lo) / bins as f64;
    let mut envelope: Vec<Option<(f64, f64)>> = vec![None; bins];
    for &(x, y) in &logs {
        let b = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        if envelope[b].is_none_or(|(_, best)| y < best) {
            envelope[b] = Some((x, y));
        }
    }
    let points: Vec<(f64, f64)> = envelope.into_iter().flatten().collect();
    if points.len() < 2 {
        return Err(AnalysisError::InsufficientPairs {
            needed: 2,
            got: points.len(),
        });
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - alpha * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(HolderFit {
        alpha,
        c: intercept.exp(),
        residual,
        envelope_points: points.len(),
    })
}

fn check_shape(h: &Matrix, g: &Graph) -> Result<(), AnalysisError> {
    if h.rows() != g.num_vertices() {
        return Err(AnalysisError::ShapeMismatch {
            rows: h.rows(),
            vertices: g.num_vertices(),
        });
    }
    Ok(())
}

// Summing sorted terms makes the result independent of edge order, so both
// diagnostics are exactly invariant under vertex relabeling.
fn order_free_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(1/|V|) * sum over edges of ||h_u - h_v||^2`.
pub fn dirichlet_energy(h: &Matrix, g: &Graph) -> Result<f64, AnalysisError> {
    check_shape(h, g)?;
    let terms = g
        .edges()
        .iter()
        .map(|&(u, v)| squared_distance(h.row(u), h.row(v)))
        .collect();
    Ok(order_free_sum(terms) / g.num_vertices() as f64)
}

/// Mean over edges of the cosine distance `1 - cos(h_u, h_v)`, evaluated as
/// `||h_u/|h_u| - h_v/|h_v|||^2 / 2`. A row with norm below `1e-12` puts its
/// edges at distance 1; an edgeless graph has MAD 0.
pub fn mad(h: &Matrix, g: &Graph) -> Result<f64, AnalysisError> {
    check_shape(h, g)?;
    if g.num_edges() == 0 {
        return Ok(0.0);
    }
    let unit: Vec<Option<Vec<f64>>> = h
        .iter_rows()
        .map(|row| {
            let norm = l2_norm(row);
            (norm >= 1e-12).then(|| row.iter().map(|x| x / norm).collect())
        })
        .collect();
    let terms = g
        .edges()
        .iter()
        .map(|&(u, v)| match (&unit[u], &unit[v]) {
            (Some(a), Some(b)) => 0.5 * squared_distance(a, b),
            _ => 1.0,
        })
        .collect();
    Ok(order_free_sum(terms) / g.num_edges() as f64)
}

/// Dirichlet energy and MAD of every `H^(t)` of a forward pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessProfile {
    pub dirichlet: Vec<f64>,
    pub mad: Vec<f64>,
}

pub fn smoothness_profile(model: &FswGnnModel, g: &Graph) -> Result<SmoothnessProfile, AnalysisError> {
    let hs = model.node_embeddings(g)?;
    let mut profile = SmoothnessProfile {
        dirichlet: Vec::with_capacity(hs.len()),
        mad: Vec::with_capacity(hs.len()),
    };
    for h in &hs {
        profile.dirichlet.push(dirichlet_energy(h, g)?);
        profile.mad.push(mad(h, g)?);
    }
    Ok(profile)
}
