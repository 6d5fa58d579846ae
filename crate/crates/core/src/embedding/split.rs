use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::Embedding;
use crate::config::Constants;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Serialize)]
pub struct Split {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// `min_{i∈L, j∈R} ‖v_i − v_j‖²`.
    pub distance: f64,
    pub threshold: f64,
    /// Residual masses after pruning.
    pub left_mass: f64,
    pub right_mass: f64,
    pub direction: Vec<f64>,
    pub attempts: usize,
}

/// Weighted median of `x`. When the lower half carries exactly half the
/// mass the midpoint of the following gap is used.
fn weighted_median(x: &[f64], pi: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let total: f64 = pi.iter().sum();
    let half = 0.5 * total;
    let mut cum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        cum += pi[i];
        if cum >= half - 1e-12 * total {
            if (cum - half).abs() <= 1e-12 * total && k + 1 < order.len() {
                return 0.5 * (x[i] + x[order[k + 1]]);
            }
            return x[i];
        }
    }
    x[order[order.len() - 1]]
}

/// Pairs closer than `delta` lose `min` of their residual masses until no
/// such pair has both endpoints alive. One pass in any order suffices since
/// residuals only shrink.
fn prune(emb: &Embedding, left: &[usize], right: &[usize], delta: f64) -> Vec<f64> {
    let mut residual = emb.pi().to_vec();
    let mut close = Vec::new();
    for &i in left {
        for &j in right {
            let d = emb.dist2(i, j);
            if d < delta {
                close.push((d, i, j));
            }
        }
    }
    close.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, i, j) in close {
        let m = residual[i].min(residual[j]);
        if m > 0.0 {
            residual[i] -= m;
            residual[j] -= m;
        }
    }
    residual
}

/// Random-hyperplane split with weighted pruning. Returns `None` when no
/// attempt leaves `c₃` residual mass on both sides.
pub fn structure_split(emb: &Embedding, consts: &Constants, seed: u64) -> Result<Option<Split>> {
    let n = emb.n();
    if n < 2 {
        return Err(Error::domain("need at least two vectors"));
    }
    let dim = emb.dim().max(1);
    let delta = consts.split_threshold(n);
    let offset = consts.split_sigma / (dim as f64).sqrt();
    let total: f64 = emb.pi().iter().sum();
    let mut rng = rng_from_seed(seed);
    for attempt in 1..=consts.split_retries {
        let mut u: Vec<f64> = (0..emb.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        u.iter_mut().for_each(|x| *x /= norm);
        let x = emb.project(&u);
        let m = weighted_median(&x, emb.pi());
        let left: Vec<usize> = (0..n).filter(|&i| x[i] >= m + offset).collect();
        let right: Vec<usize> = (0..n).filter(|&i| x[i] < m).collect();
        if left.is_empty() || right.is_empty() {
            continue;
        }
        let residual = prune(emb, &left, &right, delta);
        let left: Vec<usize> = left.into_iter().filter(|&i| residual[i] > 0.0).collect();
        let right: Vec<usize> = right.into_iter().filter(|&j| residual[j] > 0.0).collect();
        let lm: f64 = left.iter().map(|&i| residual[i]).sum();
        let rm: f64 = right.iter().map(|&j| residual[j]).sum();
        if lm < consts.c3 * total || rm < consts.c3 * total {
            continue;
        }
        let mut distance = f64::INFINITY;
        for &i in &left {
            for &j in &right {
                distance = distance.min(emb.dist2(i, j));
            }
        }
        if distance < delta {
            return Err(Error::invariant(format!("pruned split has distance {distance} < {delta}")));
        }
        return Ok(Some(Split {
            left,
            right,
            distance,
            threshold: delta,
            left_mass: lm,
            right_mass: rm,
            direction: u,
            attempts: attempt,
        }));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_takes_gap_midpoint_at_exact_half() {
        assert_eq!(weighted_median(&[-1.0, -1.0, 1.0, 1.0], &[0.25; 4]), 0.0);
        assert_eq!(weighted_median(&[3.0, 1.0, 2.0], &[0.2, 0.2, 0.6]), 2.0);
    }

    #[test]
    fn antipodal_clusters_split() {
        let a = 1.0 / 2f64.sqrt();
        let mut rows = Vec::new();
        for _ in 0..4 {
            rows.push(vec![a, 0.0, 0.0]);
        }
        for _ in 0..4 {
            rows.push(vec![-a, 0.0, 0.0]);
        }
        let e = Embedding::from_rows(&rows, vec![0.125; 8]).unwrap();
        assert!((2.0 * e.pair_spread() - 1.0).abs() < 1e-12);
        let s = structure_split(&e, &Constants::default(), 1).unwrap().expect("split");
        let mut sides = [s.left.clone(), s.right.clone()];
        sides.sort();
        assert_eq!(sides, [vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert!((s.distance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_points_have_no_split() {
        let e = Embedding::from_rows(&vec![vec![0.3, -0.2]; 6], vec![1.0 / 6.0; 6]).unwrap();
        assert!(structure_split(&e, &Constants::default(), 3).unwrap().is_none());
    }

    #[test]
    fn pruning_clears_close_pairs() {
        let e = Embedding::from_rows(&[vec![0.0], vec![0.01], vec![0.02], vec![5.0]], vec![0.25; 4]).unwrap();
        let r = prune(&e, &[0, 3], &[1, 2], 0.5);
        assert_eq!(r[0], 0.0);
        assert!(r[1] == 0.0 || r[2] == 0.0);
        assert_eq!(r[3], 0.25);
    }
}
