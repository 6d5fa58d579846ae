use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// A sequence of Gaussian directions. `source[t] = (block, index)` records
/// where `vectors[t]` came from when the bundle was shuffled; block 0 is the
/// correlated one.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionBundle {
    pub vectors: Vec<Vec<f64>>,
    pub rho_corr: f64,
    pub source: Vec<(u8, usize)>,
}

impl DirectionBundle {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn gaussian_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// `k` directions whose coordinates follow an AR(1) chain, giving
/// covariance `ρ^{|a−b|}` between `u_a` and `u_b`.
pub fn sample_directions<R: Rng>(k: usize, rho_corr: f64, dim: usize, rng: &mut R) -> Result<DirectionBundle> {
    if k == 0 {
        return Err(Error::domain("need k >= 1"));
    }
    if !(0.0..=1.0).contains(&rho_corr) {
        return Err(Error::domain("rho_corr must lie in [0, 1]"));
    }
    let fresh = (1.0 - rho_corr * rho_corr).sqrt();
    let mut vectors = vec![gaussian_vector(dim, rng)];
    for _ in 1..k {
        let prev = vectors.last().expect("nonempty");
        let g = gaussian_vector(dim, rng);
        vectors.push(prev.iter().zip(&g).map(|(p, x)| rho_corr * p + fresh * x).collect());
    }
    Ok(DirectionBundle { vectors, rho_corr, source: (0..k).map(|t| (0, t)).collect() })
}

/// A `(1 − 1/k)`-correlated block of random length `k′ ∈ [1, k]` riffled
/// with an independent block of length `k″ ∈ [0, k]`, each interleaving
/// equally likely.
pub fn sample_shuffled_bundle<R: Rng>(k: usize, dim: usize, rng: &mut R) -> Result<DirectionBundle> {
    if k == 0 {
        return Err(Error::domain("need k >= 1"));
    }
    let rho = 1.0 - 1.0 / k as f64;
    let k1 = rng.random_range(1..=k);
    let k2 = rng.random_range(0..=k);
    let correlated = sample_directions(k1, rho, dim, rng)?;
    let mut slots: Vec<bool> = (0..k1 + k2).map(|t| t < k1).collect();
    slots.shuffle(rng);
    let (mut a, mut b) = (0, 0);
    let mut vectors = Vec::with_capacity(k1 + k2);
    let mut source = Vec::with_capacity(k1 + k2);
    for is_corr in slots {
        if is_corr {
            vectors.push(correlated.vectors[a].clone());
            source.push((0, a));
            a += 1;
        } else {
            vectors.push(gaussian_vector(dim, rng));
            source.push((1, b));
            b += 1;
        }
    }
    Ok(DirectionBundle { vectors, rho_corr: rho, source })
}
