//! The DS metric between vertex-featured graphs,
//!
//! ```text
//! rho(G, H) = |n - m| + min_{S in Pi(n, m)} ||A S - S B|| + sum_ij S_ij ||x_i - y_j||
//! ```
//!
//! where `Pi(n, m)` holds the nonnegative `n x m` matrices with row sums
//! `1/n` and column sums `1/m`.
//!
//! [`ds_metric_l1`] uses entrywise l1 norms and is solved exactly as a linear
//! program. [`ds_metric_l2`] uses the Frobenius norm and l2 feature distances
//! and is approximated by conditional gradient (Frank-Wolfe); the value it
//! returns is the objective at a feasible plan, hence an upper bound on the
//! true minimum.

use thiserror::Error;

use crate::assignment::{assignment_min_cost, CostMatrix};
use crate::graph::Graph;
use crate::linalg::{l1_distance, l2_distance};
use crate::lp::{LpError, LpProblem};

/// Smoothing added under the square root of the Frobenius term.
pub const L2_SMOOTHING: f64 = 1e-12;
pub const DEFAULT_FW_ITERATIONS: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DsError {
    #[error("feature dimension mismatch ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("linear program failed for a {n}x{m} plan: {source}")]
    Lp {
        n: usize,
        m: usize,
        #[source]
        source: LpError,
    },
    #[error("Frank-Wolfe stopped after {iterations} iterations with gap {gap:e} (value {value})")]
    NotConverged {
        iterations: usize,
        gap: f64,
        value: f64,
    },
}

/// Norm used inside the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    L1,
    L2,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }
}

/// A coupling in `Pi(n, m)` with the objective value it attains.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    plan: Vec<Vec<f64>>,
    pub objective: f64,
}

impl TransportPlan {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.plan
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.plan.len(), self.plan.first().map_or(0, Vec::len))
    }

    /// Largest deviation of a row sum from `1/n` or a column sum from `1/m`.
    pub fn marginal_error(&self) -> f64 {
        let (n, m) = self.shape();
        let row_err = self
            .plan
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0 / n as f64).abs())
            .fold(0.0, f64::max);
        let col_err = (0..m)
            .map(|j| (self.plan.iter().map(|r| r[j]).sum::<f64>() - 1.0 / m as f64).abs())
            .fold(0.0, f64::max);
        row_err.max(col_err)
    }

    pub fn transpose(&self) -> Self {
        let (n, m) = self.shape();
        Self {
            plan: (0..m).map(|j| (0..n).map(|i| self.plan[i][j]).collect()).collect(),
            objective: self.objective,
        }
    }
}

/// Result of a DS metric evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DsResult {
    pub value: f64,
    pub plan: TransportPlan,
}

fn check(g1: &Graph, g2: &Graph) -> Result<(), DsError> {
    if g1.feature_dim() != g2.feature_dim() {
        return Err(DsError::DimensionMismatch(g1.feature_dim(), g2.feature_dim()));
    }
    Ok(())
}

fn cardinality_gap(g1: &Graph, g2: &Graph) -> f64 {
    g1.num_vertices().abs_diff(g2.num_vertices()) as f64
}

/// Exact l1 DS metric. Variables are the plan `S` plus a positive and a
/// negative part for every entry of `A S - S B`:
///
/// ```text
/// (A S - S B)_ij - P_ij + M_ij = 0,  row/column marginals on S,
/// minimize sum(P + M) + sum_ij S_ij |x_i - y_j|_1
/// ```
pub fn ds_metric_l1(g1: &Graph, g2: &Graph) -> Result<DsResult, DsError> {
    check(g1, g2)?;
    let (n, m) = (g1.num_vertices(), g2.num_vertices());
    let nm = n * m;
    let s = |i: usize, j: usize| i * m + j;
    let num_vars = 3 * nm;

    let mut costs = vec![0.0; num_vars];
    for i in 0..n {
        for j in 0..m {
            costs[s(i, j)] = l1_distance(g1.feature(i), g2.feature(j));
        }
    }
    costs[nm..].iter_mut().for_each(|c| *c = 1.0);

    let mut rows = Vec::with_capacity(nm + n + m);
    let mut rhs = Vec::with_capacity(nm + n + m);
    for i in 0..n {
        for j in 0..m {
            let mut row = vec![0.0; num_vars];
            // (A S)_ij = sum_k A_ik S_kj
            for &k in g1.neighbors(i) {
                row[s(k, j)] += 1.0;
            }
            // (S B)_ij = sum_k S_ik B_kj
            for &k in g2.neighbors(j) {
                row[s(i, k)] -= 1.0;
            }
            row[nm + s(i, j)] = -1.0;
            row[2 * nm + s(i, j)] = 1.0;
            rows.push(row);
            rhs.push(0.0);
        }
    }
    for i in 0..n {
        let mut row = vec![0.0; num_vars];
        (0..m).for_each(|j| row[s(i, j)] = 1.0);
        rows.push(row);
        rhs.push(1.0 / n as f64);
    }
    for j in 0..m {
        let mut row = vec![0.0; num_vars];
        (0..n).for_each(|i| row[s(i, j)] = 1.0);
        rows.push(row);
        rhs.push(1.0 / m as f64);
    }

    let lp = LpProblem::new(costs, rows, rhs).map_err(|source| DsError::Lp { n, m, source })?;
    let sol = lp.solve().map_err(|source| DsError::Lp { n, m, source })?;
    let plan = (0..n).map(|i| sol.x[i * m..(i + 1) * m].to_vec()).collect();
    let objective = sol.value.max(0.0);
    Ok(DsResult {
        value: cardinality_gap(g1, g2) + objective,
        plan: TransportPlan { plan, objective },
    })
}

/// Frank-Wolfe settings for [`ds_metric_l2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrankWolfe {
    /// Stop once the duality gap is at most this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for FrankWolfe {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: DEFAULT_FW_ITERATIONS,
        }
    }
}

/// Approximate l2 DS metric with duality-gap tolerance `tol`.
pub fn ds_metric_l2(g1: &Graph, g2: &Graph, tol: f64) -> Result<DsResult, DsError> {
    ds_metric_l2_with(g1, g2, FrankWolfe { tol, ..FrankWolfe::default() })
}

/// Pairwise conditional gradient on
/// `f(S) = sqrt(|A S - S B|_F^2 + eps) + <C, S>`, `C_ij = |x_i - y_j|_2`.
///
/// The iterate is kept as a convex combination of vertices of `Pi(n, m)`.
/// It starts from the exact l1 plan, split into vertices, and each step
/// moves weight from the worst active vertex to the oracle vertex with an
/// exact line search. The best unsmoothed objective seen is returned;
/// because the l2 objective never exceeds the l1 objective at the same plan,
/// the result is at most the l1 value. The linear oracle is an assignment
/// problem when `n == m` (vertices of `Pi(n, n)` are scaled permutations) and
/// a transportation LP otherwise.
pub fn ds_metric_l2_with(g1: &Graph, g2: &Graph, fw: FrankWolfe) -> Result<DsResult, DsError> {
    check(g1, g2)?;
    if !(fw.tol > 0.0 && fw.tol.is_finite()) {
        return Err(DsError::BadTolerance(fw.tol));
    }
    let problem = L2Problem::new(g1, g2);

    let warm = ds_metric_l1(g1, g2)?.plan.plan;
    let mut best = (problem.value(&warm), warm.clone());
    let mut active = problem.decompose(&warm)?;
    let mut s = combine(&active);
    let mut last_gap = f64::INFINITY;

    for _ in 0..fw.max_iterations {
        let r = problem.residual(&s);
        let grad = problem.gradient(&r);
        let toward = problem.linear_oracle(&grad)?;
        let gap = inner(&grad, &s) - inner(&grad, &toward);
        last_gap = gap;
        if gap <= fw.tol {
            return Ok(problem.finish(g1, g2, best));
        }
        let (away, away_weight) = active
            .iter()
            .enumerate()
            .map(|(k, (_, v))| (k, inner(&grad, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| (k, active[k].0))
            .expect("active set is never empty");
        let dir = difference(&toward, &active[away].1);
        let step = problem.line_search(&r, &dir, away_weight);
        if step == 0.0 {
            // No descent along the pairwise direction at machine precision.
            break;
        }
        active[away].0 -= step;
        match active.iter().position(|(_, v)| same_vertex(v, &toward)) {
            Some(k) => active[k].0 += step,
            None => active.push((step, toward)),
        }
        if active[away].0 <= 1e-15 {
            let (dropped, _) = active.swap_remove(away);
            // Keep the weights summing to one after dropping round-off.
            if let Some(first) = active.first_mut() {
                first.0 += dropped;
            }
        }
        s = combine(&active);
        let v = problem.value(&s);
        if v < best.0 {
            best = (v, s.clone());
        }
    }
    Err(DsError::NotConverged {
        iterations: fw.max_iterations,
        gap: last_gap,
        value: cardinality_gap(g1, g2) + best.0,
    })
}

type Plan = Vec<Vec<f64>>;

fn inner(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| x * y).sum()
}

fn difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Plan {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

fn combine(active: &[(f64, Plan)]) -> Plan {
    let (n, m) = (active[0].1.len(), active[0].1[0].len());
    let mut s = vec![vec![0.0; m]; n];
    for (w, v) in active {
        for (row, vrow) in s.iter_mut().zip(v) {
            for (x, y) in row.iter_mut().zip(vrow) {
                *x += w * y;
            }
        }
    }
    s
}

fn same_vertex(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= 1e-12)
}

struct L2Problem<'a> {
    g1: &'a Graph,
    g2: &'a Graph,
    feature_cost: Vec<Vec<f64>>,
}

impl<'a> L2Problem<'a> {
    fn new(g1: &'a Graph, g2: &'a Graph) -> Self {
        let feature_cost = (0..g1.num_vertices())
            .map(|i| {
                (0..g2.num_vertices())
                    .map(|j| l2_distance(g1.feature(i), g2.feature(j)))
                    .collect()
            })
            .collect();
        Self { g1, g2, feature_cost }
    }

    /// `A X - X B` for an `n x m` matrix `X`.
    fn commutator(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (n, m) = (self.g1.num_vertices(), self.g2.num_vertices());
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let left: f64 = self.g1.neighbors(i).iter().map(|&k| x[k][j]).sum();
                        let right: f64 = self.g2.neighbors(j).iter().map(|&k| x[i][k]).sum();
                        left - right
                    })
                    .collect()
            })
            .collect()
    }

    fn residual(&self, s: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.commutator(s)
    }

    fn linear_term(&self, s: &[Vec<f64>]) -> f64 {
        s.iter()
            .zip(&self.feature_cost)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y))
            .sum()
    }

    fn value(&self, s: &[Vec<f64>]) -> f64 {
        frobenius_sq(&self.residual(s)).sqrt() + self.linear_term(s)
    }

    /// Gradient of the smoothed objective: `(A R - R B) / sqrt(|R|^2 + eps) + C`
    /// (adjacency matrices are symmetric).
    fn gradient(&self, r: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let norm = (frobenius_sq(r) + L2_SMOOTHING).sqrt();
        let ar = self.commutator(r);
        ar.into_iter()
            .zip(&self.feature_cost)
            .map(|(row, c)| row.into_iter().zip(c).map(|(g, c)| g / norm + c).collect())
            .collect()
    }

    fn linear_oracle(&self, grad: &[Vec<f64>]) -> Result<Plan, DsError> {
        let (n, m) = (self.g1.num_vertices(), self.g2.num_vertices());
        if n == m {
            // Shift to nonnegative costs; a constant shift does not move the
            // optimal permutation.
            let low = grad.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
            let costs = CostMatrix::from_fn(n, |i, j| grad[i][j] - low)
                .expect("shifted gradient is finite and nonnegative");
            let perm = assignment_min_cost(&costs).perm;
            let mut v = vec![vec![0.0; m]; n];
            for (i, &j) in perm.iter().enumerate() {
                v[i][j] = 1.0 / n as f64;
            }
            return Ok(v);
        }
        let nm = n * m;
        let costs: Vec<f64> = grad.iter().flatten().copied().collect();
        let mut rows = Vec::with_capacity(n + m);
        let mut rhs = Vec::with_capacity(n + m);
        for i in 0..n {
            let mut row = vec![0.0; nm];
            (0..m).for_each(|j| row[i * m + j] = 1.0);
            rows.push(row);
            rhs.push(1.0 / n as f64);
        }
        for j in 0..m {
            let mut row = vec![0.0; nm];
            (0..n).for_each(|i| row[i * m + j] = 1.0);
            rows.push(row);
            rhs.push(1.0 / m as f64);
        }
        let sol = LpProblem::new(costs, rows, rhs)
            .and_then(|lp| lp.solve())
            .map_err(|source| DsError::Lp { n, m, source })?;
        Ok((0..n)
            .map(|i| sol.x[i * m..(i + 1) * m].iter().map(|&x| x.max(0.0)).collect())
            .collect())
    }

    /// Writes a feasible plan as a convex combination of polytope vertices.
    /// Any vertex minimizing a cost that is zero on the support of the
    /// remainder and positive elsewhere lies in the remainder's face; peeling
    /// off as much of it as possible empties at least one support entry.
    fn decompose(&self, plan: &[Vec<f64>]) -> Result<Vec<(f64, Plan)>, DsError> {
        let mut rest = plan.to_vec();
        let mut left = 1.0;
        let mut out: Vec<(f64, Plan)> = Vec::new();
        while left > 1e-12 {
            let scale = rest.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
            let costs: Plan = rest
                .iter()
                .map(|row| row.iter().map(|&x| if x > 1e-12 * scale { 0.0 } else { 1.0 }).collect())
                .collect();
            let v = self.linear_oracle(&costs)?;
            if inner(&costs, &v) > 0.0 {
                break;
            }
            let lambda = rest
                .iter()
                .flatten()
                .zip(v.iter().flatten())
                .filter(|(_, &y)| y > 1e-15)
                .map(|(x, y)| x / y)
                .fold(f64::INFINITY, f64::min)
                .min(1.0);
            if lambda.is_nan() || lambda <= 0.0 {
                break;
            }
            for (row, vrow) in rest.iter_mut().zip(&v) {
                for (x, y) in row.iter_mut().zip(vrow) {
                    *x = (*x - lambda * y).max(0.0);
                }
            }
            // `rest` now carries total mass (1 - lambda) of the remainder.
            let weight = lambda * left;
            left *= 1.0 - lambda;
            if lambda < 1.0 {
                rest.iter_mut().flatten().for_each(|x| *x /= 1.0 - lambda);
            }
            out.push((weight, v));
            if lambda >= 1.0 {
                break;
            }
        }
        if out.is_empty() {
            let uniform = 1.0 / (plan.len() * plan[0].len()) as f64;
            let zero: Plan = plan.iter().map(|row| vec![uniform; row.len()]).collect();
            out.push((1.0, self.linear_oracle(&zero)?));
        }
        // Put leftover round-off mass on the heaviest vertex.
        let total: f64 = out.iter().map(|(w, _)| w).sum();
        let heaviest = (0..out.len()).max_by(|&a, &b| out[a].0.total_cmp(&out[b].0)).expect("nonempty");
        out[heaviest].0 += 1.0 - total;
        Ok(out)
    }

    /// Minimizes `sqrt(|R + t D_R|^2 + eps) + t <C, D>` over `t in [0, max]`
    /// by bisection on the (monotone) derivative.
    fn line_search(&self, r: &[Vec<f64>], dir: &[Vec<f64>], max: f64) -> f64 {
        let dr = self.commutator(dir);
        let a = frobenius_sq(&dr);
        let b: f64 = r.iter().flatten().zip(dr.iter().flatten()).map(|(x, y)| x * y).sum();
        let c = frobenius_sq(r) + L2_SMOOTHING;
        let lin = self.linear_term(dir);
        let deriv = |t: f64| {
            let q = (a * t * t + 2.0 * b * t + c).max(L2_SMOOTHING);
            (a * t + b) / q.sqrt() + lin
        };
        if deriv(0.0) >= 0.0 {
            return 0.0;
        }
        if deriv(max) <= 0.0 {
            return max;
        }
        let (mut lo, mut hi) = (0.0, max);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if deriv(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn finish(&self, g1: &Graph, g2: &Graph, best: (f64, Vec<Vec<f64>>)) -> DsResult {
        let (objective, plan) = best;
        DsResult {
            value: cardinality_gap(g1, g2) + objective,
            plan: TransportPlan { plan, objective },
        }
    }
}

fn frobenius_sq(x: &[Vec<f64>]) -> f64 {
    x.iter().flatten().map(|v| v * v).sum()
}

/// DS metric under the chosen norm; `tol` only matters for [`Norm::L2`].
pub fn ds_metric(g1: &Graph, g2: &Graph, norm: Norm, tol: f64) -> Result<DsResult, DsError> {
    match norm {
        Norm::L1 => ds_metric_l1(g1, g2),
        Norm::L2 => ds_metric_l2(g1, g2, tol),
    }
}
