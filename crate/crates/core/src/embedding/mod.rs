//! Vertex embeddings from MMWU states and the geometry run on them.

mod classify;
mod directions;
mod gram;
mod split;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classify::{ball_mass, classify, Classification, WellSpread};
pub use directions::{gaussian_vector, sample_directions, sample_shuffled_bundle, DirectionBundle};
pub use gram::{approx_gram, default_tau, density_matrix, exact_gram, taylor_terms, FeedbackHistory};
pub use split::{structure_split, Split};

/// `n` vectors of a common dimension, stored row-major, with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    dim: usize,
    data: Vec<f64>,
    pi: Vec<f64>,
}

impl Embedding {
    pub fn from_rows(rows: &[Vec<f64>], pi: Vec<f64>) -> Result<Self> {
        if rows.len() != pi.len() || rows.is_empty() {
            return Err(Error::domain("need one row per weight and at least one row"));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("rows have different lengths"));
        }
        Ok(Embedding { dim, data: rows.concat(), pi })
    }

    pub(crate) fn from_flat(dim: usize, data: Vec<f64>, pi: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * pi.len());
        Embedding { dim, data, pi }
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn norm2(&self, i: usize) -> f64 {
        self.row(i).iter().map(|a| a * a).sum()
    }

    pub fn dot(&self, i: usize, u: &[f64]) -> f64 {
        self.row(i).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    /// `⟨v_i, u⟩` for every vertex.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.dot(i, u)).collect()
    }

    /// `Σ π(i)·v_i`.
    pub fn weighted_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for i in 0..self.n() {
            for (acc, x) in s.iter_mut().zip(self.row(i)) {
                *acc += self.pi[i] * x;
            }
        }
        s
    }

    /// `Σ π(i)·‖v_i‖²`.
    pub fn weighted_norm2(&self) -> f64 {
        (0..self.n()).map(|i| self.pi[i] * self.norm2(i)).sum()
    }

    /// `Σ_{i<j} π(i)π(j)‖v_i − v_j‖² = π(V)·Σπ‖v‖² − ‖Σπv‖²`.
    pub fn pair_spread(&self) -> f64 {
        let total: f64 = self.pi.iter().sum();
        let s = self.weighted_sum();
        total * self.weighted_norm2() - s.iter().map(|x| x * x).sum::<f64>()
    }

    /// Checks `Σπv = 0` and `Σπ‖v‖² = 1` to `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let mean = self.weighted_sum().iter().map(|x| x * x).sum::<f64>().sqrt();
        let mass = self.weighted_norm2();
        if mean > tol || (mass - 1.0).abs() > tol {
            return Err(Error::domain(format!(
                "embedding not normalized: |sum pi v| = {mean:e}, sum pi|v|^2 = {mass}"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Embedding { dim: self.dim, data: self.data.iter().map(|x| x * c).collect(), pi: self.pi.clone() }
    }

    /// `c·(v_i − w)` for `i` in `subset`, keeping only those rows.
    pub fn shifted_subset(&self, subset: &[usize], w: &[f64], c: f64) -> Self {
        let mut data = Vec::with_capacity(subset.len() * self.dim);
        for &i in subset {
            data.extend(self.row(i).iter().zip(w).map(|(a, b)| c * (a - b)));
        }
        Embedding { dim: self.dim, data, pi: subset.iter().map(|&i| self.pi[i]).collect() }
    }

    /// `⟨v_i, g⟩` for a fresh standard Gaussian `g`.
    pub fn gaussian_projection<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let g: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        self.project(&g)
    }
}
