use rand::seq::SliceRandom;
use serde::Serialize;

use super::Embedding;
use crate::config::Constants;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Well-spread subset with its shift and scale, plus the values that
/// certify it. `u_i = c·(v_i − w)` for `i ∈ U`.
#[derive(Debug, Clone, Serialize)]
pub struct WellSpread {
    pub subset: Vec<usize>,
    pub shift: Vec<f64>,
    pub scale: f64,
    pub center: usize,
    pub mass: f64,
    pub max_norm: f64,
    pub spread: f64,
}

impl WellSpread {
    pub fn shifted(&self, emb: &Embedding) -> Embedding {
        emb.shifted_subset(&self.subset, &self.shift, self.scale)
    }

    /// Recomputes `(π(U), max ‖u_i‖, Σ_{i,j∈U} π(i)π(j)‖u_i − u_j‖²)`.
    pub fn recompute(&self, emb: &Embedding) -> (f64, f64, f64) {
        let u = self.shifted(emb);
        let mass: f64 = u.pi().iter().sum();
        let max_norm = (0..u.n()).map(|i| u.norm2(i).sqrt()).fold(0.0, f64::max);
        (mass, max_norm, 2.0 * u.pair_spread())
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Classification {
    LargeCore { center: usize, mass: f64 },
    WellSpread(WellSpread),
}

/// `π(B(v_c, r))` with the Euclidean ball of radius `r`.
pub fn ball_mass(emb: &Embedding, center: usize, radius: f64) -> f64 {
    let r2 = radius * radius;
    (0..emb.n()).filter(|&j| emb.dist2(center, j) <= r2).map(|j| emb.pi()[j]).sum()
}

fn ball(emb: &Embedding, center: usize, radius: f64) -> Vec<usize> {
    let r2 = radius * radius;
    (0..emb.n()).filter(|&j| emb.dist2(center, j) <= r2).collect()
}

fn candidates(n: usize, consts: &Constants) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    if n <= consts.core_candidates_max_n {
        return all;
    }
    let keep = ((consts.c_dir * (n as f64).ln()).ceil() as usize * 4).min(n);
    all.shuffle(&mut rng_from_seed(n as u64));
    all.truncate(keep);
    all.sort_unstable();
    all
}

/// Large core if some candidate ball of radius `core_radius` carries mass
/// `core_mass`; otherwise the densest ball of radius `spread_radius`,
/// recentred at its center and scaled to unit radius.
pub fn classify(emb: &Embedding, consts: &Constants) -> Result<Classification> {
    let spread = emb.pair_spread();
    if (spread - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!("pairwise spread must be 1, got {spread}")));
    }
    let cands = candidates(emb.n(), consts);
    let mut best = (0usize, f64::NEG_INFINITY);
    for &c in &cands {
        let m = ball_mass(emb, c, consts.core_radius);
        if m > best.1 {
            best = (c, m);
        }
    }
    if best.1 >= consts.core_mass {
        return Ok(Classification::LargeCore { center: best.0, mass: best.1 });
    }
    let mut dense = (0usize, f64::NEG_INFINITY);
    for &c in &cands {
        let m = ball_mass(emb, c, consts.spread_radius);
        if m > dense.1 {
            dense = (c, m);
        }
    }
    let center = dense.0;
    let subset = ball(emb, center, consts.spread_radius);
    let shift = emb.row(center).to_vec();
    let radius = subset.iter().map(|&i| emb.dist2(i, center).sqrt()).fold(0.0, f64::max);
    let scale = if radius > 0.0 { 1.0 / radius } else { 1.0 };
    let mut ws = WellSpread { subset, shift, scale, center, mass: 0.0, max_norm: 0.0, spread: 0.0 };
    let (mass, max_norm, spread) = ws.recompute(emb);
    ws.mass = mass;
    ws.max_norm = max_norm;
    ws.spread = spread;
    Ok(Classification::WellSpread(ws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Rescales so the pairwise spread is 1.
    fn normalize(rows: Vec<Vec<f64>>, pi: Vec<f64>) -> Embedding {
        let e = Embedding::from_rows(&rows, pi).unwrap();
        e.scaled(1.0 / e.pair_spread().sqrt())
    }

    #[test]
    fn antipodal_points_are_a_core() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]];
        let e = normalize(rows, vec![0.25; 4]);
        match classify(&e, &Constants::default()).unwrap() {
            Classification::LargeCore { mass, .. } => assert!((mass - 0.5).abs() < 1e-12),
            other => panic!("expected core, got {other:?}"),
        }
    }

    #[test]
    fn heavy_vertex_is_the_core() {
        let mut rows = vec![vec![0.0, 0.0]];
        let mut pi = vec![0.9];
        for k in 0..9 {
            let a = k as f64;
            rows.push(vec![a.cos() * 3.0, a.sin() * 3.0]);
            pi.push(0.1 / 9.0);
        }
        let e = normalize(rows, pi);
        let Classification::LargeCore { center, mass } = classify(&e, &Constants::default()).unwrap() else {
            panic!("expected core")
        };
        assert_eq!(center, 0);
        assert!(mass >= 0.9 - 1e-12);
        assert!((ball_mass(&e, center, Constants::default().core_radius) - mass).abs() < 1e-15);
    }

    #[test]
    fn random_unit_vectors_are_well_spread() {
        let n = 256;
        let dim = 32;
        let mut rng = rng_from_seed(5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                g.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        let e = normalize(rows, vec![1.0 / n as f64; n]);
        let Classification::WellSpread(ws) = classify(&e, &Constants::default()).unwrap() else {
            panic!("expected well-spread")
        };
        let (mass, max_norm, spread) = ws.recompute(&e);
        assert!((mass - ws.mass).abs() < 1e-12 && mass >= 0.05);
        assert!(max_norm <= 1.0 + 1e-12);
        assert!(spread >= 0.05 * mass * mass, "spread {spread}");
    }

    #[test]
    fn unnormalized_input_rejected() {
        let e = Embedding::from_rows(&[vec![2.0], vec![-2.0]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(classify(&e, &Constants::default()), Err(Error::Domain(_))));
    }
}
