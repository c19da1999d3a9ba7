//! Fourier Sliced-Wasserstein embedding of multisets of vectors.
//!
//! Coordinate `i` of the embedding projects every point on the unit
//! direction `v_i`, sorts the projections into `y`, reads `y` as the step
//! quantile function `Q_y(t) = y_j` on `[(j-1)/n, j/n)` and returns
//!
//! ```text
//! z_i = 2 (1 + xi_i) * integral_0^1 Q_y(t) cos(2 pi xi_i t) dt
//! ```
//!
//! The integral is evaluated in closed form (see
//! [`quantile_cosine_integral`]), so one embedding costs
//! `O(m n (d + log n))`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, l2_norm};

/// Frequencies at or below this use the `xi -> 0` limit `2 (1 + xi) mean(y)`.
pub const ZERO_FREQUENCY: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FswError {
    #[error("embedding needs d >= 1 and m >= 1 (got d = {d}, m = {m})")]
    InvalidSize { d: usize, m: usize },
    #[error("dimension mismatch: parameters expect d = {expected}, point has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("quantile input must be sorted ascending (violated at index {0})")]
    Unsorted(usize),
    #[error("quantile input must be nonempty")]
    EmptyQuantile,
    #[error("frequency must be finite and >= 0, got {0}")]
    BadFrequency(f64),
    #[error("multiset points have inconsistent dimensions")]
    RaggedMultiset,
}

/// Slice directions and frequencies of one embedding instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FswParams {
    slices: Vec<Vec<f64>>,
    freqs: Vec<f64>,
    seed: u64,
}

impl FswParams {
    /// Draws `m` directions uniformly on `S^{d-1}` (normalized Gaussians) and
    /// `m` frequencies from `Exp(1)`. Deterministic in `seed`.
    pub fn sample(d: usize, m: usize, seed: u64) -> Result<Self, FswError> {
        if d == 0 || m == 0 {
            return Err(FswError::InvalidSize { d, m });
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let slices = (0..m).map(|_| random_unit_vector(&mut rng, d)).collect();
        let freqs = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
        Ok(Self { slices, freqs, seed })
    }

    /// Explicit parameters. Directions are normalized; zero directions and
    /// negative or non-finite frequencies are rejected.
    pub fn from_parts(slices: Vec<Vec<f64>>, freqs: Vec<f64>) -> Result<Self, FswError> {
        let d = slices.first().map_or(0, Vec::len);
        if d == 0 || slices.len() != freqs.len() {
            return Err(FswError::InvalidSize { d, m: freqs.len() });
        }
        let mut normalized = Vec::with_capacity(slices.len());
        for s in slices {
            if s.len() != d {
                return Err(FswError::DimensionMismatch {
                    expected: d,
                    found: s.len(),
                });
            }
            let norm = l2_norm(&s);
            if !(norm.is_finite() && norm > 0.0) {
                return Err(FswError::InvalidSize { d, m: 0 });
            }
            normalized.push(s.iter().map(|x| x / norm).collect());
        }
        if let Some(&bad) = freqs.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(FswError::BadFrequency(bad));
        }
        Ok(Self {
            slices: normalized,
            freqs,
            seed: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.slices[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.freqs.len()
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Embeds the multiset given by `points`. The empty multiset maps to the
    /// zero vector.
    pub fn embed<'a, I>(&self, points: I) -> Result<Vec<f64>, FswError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let points: Vec<&[f64]> = points.into_iter().collect();
        let d = self.input_dim();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(FswError::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        if points.is_empty() {
            return Ok(vec![0.0; self.output_dim()]);
        }
        let mut projected = vec![0.0; points.len()];
        Ok(self
            .slices
            .iter()
            .zip(&self.freqs)
            .map(|(v, &xi)| {
                for (y, p) in projected.iter_mut().zip(&points) {
                    *y = dot(v, p);
                }
                projected.sort_by(f64::total_cmp);
                closed_form(&projected, xi)
            })
            .collect())
    }

    /// `|X| * embed(X)`: the embedding scaled by the multiset's size, so that
    /// multisets with the same empirical distribution but different
    /// cardinality (`{x}` vs `{x, x}`) land on different points. This is the
    /// aggregation used by the message-passing network. The empty multiset
    /// still maps to zero.
    pub fn embed_with_cardinality<'a, I>(&self, points: I) -> Result<Vec<f64>, FswError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let points: Vec<&[f64]> = points.into_iter().collect();
        let n = points.len() as f64;
        let mut z = self.embed(points)?;
        z.iter_mut().for_each(|v| *v *= n);
        Ok(z)
    }
}

fn random_unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = l2_norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A multiset of vectors in `R^d`. Listing order carries no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Multiset {
    points: Vec<Vec<f64>>,
}

impl Multiset {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, FswError> {
        if let Some(first) = points.first() {
            if points.iter().any(|p| p.len() != first.len()) {
                return Err(FswError::RaggedMultiset);
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `None` for the empty multiset.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Multiset {
    type Error = FswError;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self, FswError> {
        Self::new(points)
    }
}

impl From<Multiset> for Vec<Vec<f64>> {
    fn from(m: Multiset) -> Self {
        m.points
    }
}

pub fn embed_multiset(x: &Multiset, params: &FswParams) -> Result<Vec<f64>, FswError> {
    params.embed(x.points.iter().map(Vec::as_slice))
}

/// `2 (1 + xi) * integral_0^1 Q_y(t) cos(2 pi xi t) dt` for sorted `y`.
///
/// Each piece integrates to `y_j (sin(2 pi xi j/n) - sin(2 pi xi (j-1)/n)) /
/// (2 pi xi)`; the sine difference is rewritten as
/// `2 cos(pi xi (2j-1)/n) sin(pi xi / n)` to avoid cancellation for small
/// `xi`.
pub fn quantile_cosine_integral(y: &[f64], xi: f64) -> Result<f64, FswError> {
    if y.is_empty() {
        return Err(FswError::EmptyQuantile);
    }
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(FswError::BadFrequency(xi));
    }
    if let Some(i) = y.windows(2).position(|w| w[1] < w[0]) {
        return Err(FswError::Unsorted(i + 1));
    }
    Ok(closed_form(y, xi))
}

fn closed_form(y: &[f64], xi: f64) -> f64 {
    let n = y.len() as f64;
    if xi <= ZERO_FREQUENCY {
        return 2.0 * (1.0 + xi) * y.iter().sum::<f64>() / n;
    }
    let half_step = PI * xi / n;
    let weighted: f64 = y
        .iter()
        .enumerate()
        .map(|(j, &yj)| yj * ((2 * j + 1) as f64 * half_step).cos())
        .sum();
    2.0 * (1.0 + xi) * half_step.sin() / (PI * xi) * weighted
}
