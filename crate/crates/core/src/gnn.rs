//! FSW-GNN forward pass with randomly initialized parameters.
//!
//! ```text
//! h0_v = x_v
//! q_t_v = |N(v)| * E_t({ h_{t-1}_u : u in N(v) })
//! h_t_v = Phi_t [h_{t-1}_v ; q_t_v]
//! h_G   = Psi (|V| * E_glob({ h_T_v : v in V }))
//! ```
//!
//! `E_t` and `E_glob` are FSW embeddings with output dimension `m`. The
//! embedding of a multiset depends only on its empirical distribution, so
//! each aggregate is scaled by the multiset's size to keep vertex degree and
//! graph order visible to the network. `Phi_t` and `Psi` are plain matrices by
//! default; [`UpdateKind::Hidden`] swaps each for a one-hidden-layer map with
//! a leaky-ReLU, which stays piecewise linear.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::fsw::{FswError, FswParams};
use crate::graph::Graph;
use crate::linalg::{l2_distance, l2_norm, Matrix};

const LEAKY_SLOPE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnnError {
    #[error("model sizes must be positive (d_in = {d_in}, m = {m})")]
    InvalidSize { d_in: usize, m: usize },
    #[error("graph feature dimension {found} does not match model input dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Fsw(#[from] FswError),
}

/// Shape of the update (`Phi`) and readout (`Psi`) maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateKind {
    /// A single matrix, no activation.
    #[default]
    Linear,
    /// `W2 * leaky_relu(W1 * z)` with hidden width `m`.
    Hidden,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateMap {
    Linear(Matrix),
    Hidden { inner: Matrix, outer: Matrix },
}

impl UpdateMap {
    fn random(rng: &mut ChaCha20Rng, kind: UpdateKind, rows: usize, cols: usize) -> Self {
        match kind {
            UpdateKind::Linear => Self::Linear(gaussian_matrix(rng, rows, cols)),
            UpdateKind::Hidden => Self::Hidden {
                inner: gaussian_matrix(rng, rows, cols),
                outer: gaussian_matrix(rng, rows, rows),
            },
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Linear(w) => w.cols(),
            Self::Hidden { inner, .. } => inner.cols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Linear(w) => w.rows(),
            Self::Hidden { outer, .. } => outer.rows(),
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear(w) => w.matvec(z),
            Self::Hidden { inner, outer } => {
                let hidden: Vec<f64> = inner
                    .matvec(z)
                    .into_iter()
                    .map(|v| if v >= 0.0 { v } else { LEAKY_SLOPE * v })
                    .collect();
                outer.matvec(&hidden)
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Self::Linear(w) => w.is_finite(),
            Self::Hidden { inner, outer } => inner.is_finite() && outer.is_finite(),
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_row_major(rows, cols, data)
}

/// One message-passing iteration: aggregation embedding plus update map.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub aggregate: FswParams,
    pub update: UpdateMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FswGnnModel {
    d_in: usize,
    m: usize,
    seed: u64,
    layers: Vec<Layer>,
    readout_embedding: FswParams,
    readout: UpdateMap,
}

/// Hidden dimension `2 N d + 2` that guarantees WL separation on graphs with
/// at most `max_vertices` vertices and `d`-dimensional features.
pub fn default_hidden_dim(max_vertices: usize, d: usize) -> usize {
    2 * max_vertices * d + 2
}

impl FswGnnModel {
    /// Random model with linear update and readout maps.
    pub fn new(d_in: usize, m: usize, iterations: usize, seed: u64) -> Result<Self, GnnError> {
        Self::with_update(d_in, m, iterations, seed, UpdateKind::Linear)
    }

    /// Random model. Every component draws from its own sub-seed, taken in
    /// order from a generator seeded by `seed`; matrix entries are i.i.d.
    /// standard Gaussians.
    pub fn with_update(
        d_in: usize,
        m: usize,
        iterations: usize,
        seed: u64,
        kind: UpdateKind,
    ) -> Result<Self, GnnError> {
        if d_in == 0 || m == 0 {
            return Err(GnnError::InvalidSize { d_in, m });
        }
        let mut seeds = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(iterations);
        let mut prev = d_in;
        for _ in 0..iterations {
            let aggregate = FswParams::sample(prev, m, seeds.next_u64())?;
            let mut rng = ChaCha20Rng::seed_from_u64(seeds.next_u64());
            let update = UpdateMap::random(&mut rng, kind, m, prev + m);
            layers.push(Layer { aggregate, update });
            prev = m;
        }
        let readout_embedding = FswParams::sample(prev, m, seeds.next_u64())?;
        let mut rng = ChaCha20Rng::seed_from_u64(seeds.next_u64());
        let readout = UpdateMap::random(&mut rng, kind, m, m);
        let model = Self {
            d_in,
            m,
            seed,
            layers,
            readout_embedding,
            readout,
        };
        debug_assert!(model.layers.iter().all(|l| l.update.is_finite()) && model.readout.is_finite());
        Ok(model)
    }

    pub fn input_dim(&self) -> usize {
        self.d_in
    }

    pub fn hidden_dim(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.layers.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn readout_embedding(&self) -> &FswParams {
        &self.readout_embedding
    }

    pub fn readout(&self) -> &UpdateMap {
        &self.readout
    }

    fn check(&self, g: &Graph) -> Result<(), GnnError> {
        if g.feature_dim() != self.d_in {
            return Err(GnnError::DimensionMismatch {
                expected: self.d_in,
                found: g.feature_dim(),
            });
        }
        Ok(())
    }

    /// `H^(0) .. H^(T)`, one row per vertex.
    pub fn node_embeddings(&self, g: &Graph) -> Result<Vec<Matrix>, GnnError> {
        self.check(g)?;
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        out.push(Matrix::from_rows(g.features()));
        for layer in &self.layers {
            let prev = out.last().expect("H0 pushed");
            let rows = (0..g.num_vertices())
                .into_par_iter()
                .map(|v| {
                    let q = layer
                        .aggregate
                        .embed_with_cardinality(g.neighbors(v).iter().map(|&u| prev.row(u)))?;
                    let mut z = prev.row(v).to_vec();
                    z.extend_from_slice(&q);
                    Ok(layer.update.apply(&z))
                })
                .collect::<Result<Vec<_>, GnnError>>()?;
            out.push(Matrix::from_rows(&rows));
        }
        Ok(out)
    }

    /// Graph-level output `h_G`.
    pub fn graph_embedding(&self, g: &Graph) -> Result<Vec<f64>, GnnError> {
        let hs = self.node_embeddings(g)?;
        Ok(self.readout_from(hs.last().expect("H0 present")))
    }

    /// Readout of a final node-embedding table.
    pub fn readout_from(&self, h_final: &Matrix) -> Vec<f64> {
        let pooled = self
            .readout_embedding
            .embed_with_cardinality(h_final.iter_rows())
            .expect("node rows match readout dimension");
        self.readout.apply(&pooled)
    }
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both are zero.
pub fn relative_distance(a: &[f64], b: &[f64]) -> f64 {
    let scale = l2_norm(a).max(l2_norm(b));
    if scale == 0.0 {
        0.0
    } else {
        l2_distance(a, b) / scale
    }
}
