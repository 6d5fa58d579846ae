//! Turning a metric on the vertices into a sparse cut with O(log n)
//! bidirectional max-flows, plus the two helpers that feed it.

use rand::Rng;
use serde::Serialize;

use crate::config::Constants;
use crate::error::{Error, Result};
use crate::flow::{bidirectional_max_flow, max_cost_circulation_with, BidirOutcome};
use crate::graph::{CutResult, Witness};
use crate::rng::rng_from_seed;
use crate::DiGraph;

/// Dense pairwise distances with a relaxation factor `s` for the triangle
/// inequality `d(i,j) ≤ s·(d(i,k) + d(k,j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricOracle {
    n: usize,
    s: f64,
    dist: Vec<f64>,
}

const TRIANGLE_SAMPLES: usize = 100;

impl MetricOracle {
    pub fn from_fn(n: usize, s: f64, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        if !(s >= 1.0) {
            return Err(Error::domain("relaxation factor s must be at least 1"));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = d(i, j);
            }
        }
        let oracle = MetricOracle { n, s, dist };
        oracle.validate()?;
        Ok(oracle)
    }

    /// `|v(i) − v(j)|`, a metric.
    pub fn line(v: &[f64]) -> Result<Self> {
        Self::from_fn(v.len(), 1.0, |i, j| (v[i] - v[j]).abs())
    }

    /// Squared Euclidean distances, which satisfy the 2-relaxed inequality.
    pub fn squared_euclidean(points: &[Vec<f64>]) -> Result<Self> {
        Self::from_fn(points.len(), 2.0, |i, j| points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        let scale = self.dist.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        let tol = 1e-9 * scale;
        for i in 0..n {
            if self.d(i, i).abs() > tol {
                return Err(Error::domain(format!("d({i},{i}) is nonzero")));
            }
            for j in 0..n {
                let x = self.d(i, j);
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::domain(format!("d({i},{j}) must be finite and nonnegative")));
                }
                if (x - self.d(j, i)).abs() > tol {
                    return Err(Error::domain(format!("d is not symmetric at ({i},{j})")));
                }
            }
        }
        if n >= 3 {
            let mut rng = rng_from_seed(0x7472_6961);
            for _ in 0..TRIANGLE_SAMPLES {
                let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                if self.d(i, j) > self.s * (self.d(i, k) + self.d(k, j)) + tol {
                    return Err(Error::domain(format!("triangle inequality fails on ({i},{k},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&j| self.d(i, j)).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self, set: &[usize]) -> f64 {
        let mut best: f64 = 0.0;
        for &i in set {
            for &j in set {
                best = best.max(self.d(i, j));
            }
        }
        best
    }

    /// `Σ_{i∈R} π(i)·d(i, L)`.
    pub fn spread(&self, pi: &[f64], left: &[usize], right: &[usize]) -> f64 {
        right.iter().map(|&i| pi[i] * self.dist_to_set(i, left)).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrace {
    /// Every probed `β` with whether both flows saturated.
    pub levels: Vec<(f64, bool)>,
    /// Largest saturated level found (`0` when the bottom level already cut).
    pub alpha: f64,
    pub kappa: f64,
    pub r_prime: f64,
    pub denominator: f64,
    pub flow_calls: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundResult {
    pub cut: CutResult,
    pub trace: RoundTrace,
}

/// Binary search over a factor-2 grid of `β` with `κ = 2r′`, followed by a
/// few geometric bisection steps between the last saturated and the first
/// unsaturated level. The unsaturated cut at the top of the bracket is
/// returned.
pub fn metric_round(
    g: &DiGraph,
    d: &MetricOracle,
    left: &[usize],
    right: &[usize],
    consts: &Constants,
) -> Result<RoundResult> {
    if d.s() != 1.0 {
        return Err(Error::domain("metric rounding needs a true metric (s = 1)"));
    }
    if d.n() != g.n() {
        return Err(Error::domain("metric and graph disagree on n"));
    }
    let pi = g.pi();
    let denominator = d.spread(pi, left, right);
    if !(denominator > 0.0) {
        return Err(Error::domain("sum over R of pi(i)*d(i,L) is zero"));
    }
    let pl: f64 = left.iter().map(|&i| pi[i]).sum();
    let pr: f64 = right.iter().map(|&i| pi[i]).sum();
    let r_prime = (pr / pl).max(1.0);
    let kappa = 2.0 * r_prime;
    let w = g.total_weight() / g.pi_total();
    let unit = if w > 0.0 { w } else { 1.0 / g.pi_total() };
    let bottom = unit / consts.grid_span;
    let steps = (2.0 * consts.grid_span.log2()).ceil() as i32;
    let level = |k: i32| bottom * 2f64.powi(k);

    let mut levels = Vec::new();
    let mut probe = |beta: f64| -> Result<Option<CutResult>> {
        let out = bidirectional_max_flow(g, left, right, beta, kappa)?;
        match out {
            BidirOutcome::Saturated(s) => {
                s.check_metric_bound(g, right, left, |i, j| d.d(i, j))?;
                levels.push((beta, true));
                Ok(None)
            }
            BidirOutcome::Unsaturated(c) => {
                levels.push((beta, false));
                Ok(Some(c))
            }
        }
    };

    let finish = |cut: CutResult, alpha: f64, beta: f64, levels: Vec<(f64, bool)>| -> Result<RoundResult> {
        let flow_calls = levels.len();
        let cut = CutResult::new(g, cut.set, Witness::MetricRound { alpha, beta, r_prime, flow_calls })?;
        Ok(RoundResult { cut, trace: RoundTrace { levels, alpha, kappa, r_prime, denominator, flow_calls } })
    };

    let Some(top_cut) = probe(level(steps))? else {
        return Err(Error::Solver(format!(
            "both flows saturate even at beta = {:e}; search range [{:e}, {:e}] exhausted",
            level(steps),
            bottom,
            level(steps)
        )));
    };
    if let Some(c) = probe(bottom)? {
        return finish(c, 0.0, bottom, levels);
    }
    let (mut lo, mut hi) = (0, steps);
    let mut hi_cut = top_cut;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        match probe(level(mid))? {
            None => lo = mid,
            Some(c) => {
                hi = mid;
                hi_cut = c;
            }
        }
    }
    let (mut b_lo, mut b_hi) = (level(lo), level(hi));
    for _ in 0..consts.refine_steps {
        let mid = (b_lo * b_hi).sqrt();
        match probe(mid)? {
            None => b_lo = mid,
            Some(c) => {
                b_hi = mid;
                hi_cut = c;
            }
        }
    }
    finish(hi_cut, b_lo, b_hi, levels)
}

/// `2r′·max_F Σ F·d / Σ_{i∈R} π(i)·d(i, L)`, with the max taken by the
/// min-cost circulation solver.
pub fn metric_round_bound(g: &DiGraph, d: &MetricOracle, left: &[usize], right: &[usize]) -> Result<f64> {
    let pi = g.pi();
    let pl: f64 = left.iter().map(|&i| pi[i]).sum();
    let pr: f64 = right.iter().map(|&i| pi[i]).sum();
    let r_prime = (pr / pl).max(1.0);
    let best = max_cost_circulation_with(g, |i, j| d.d(i, j))?;
    Ok(2.0 * r_prime * best.objective / d.spread(pi, left, right))
}

/// `max(0, 1/s² − diam/2)`.
pub fn core_distance_value(s: f64, diam: f64) -> f64 {
    (1.0 / (s * s) - 0.5 * diam).max(0.0)
}

/// Lower bound on `Σ_{i∉L} π(i)·d(i, L)` for `π(V) = 1` and
/// `Σ_{i,j} π(i)π(j)d(i,j) = 2`, both checked to `1e-6`.
pub fn core_distance_bound(d: &MetricOracle, pi: &[f64], left: &[usize]) -> Result<f64> {
    let n = d.n();
    if pi.len() != n {
        return Err(Error::domain("pi and metric disagree on n"));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!("pi(V) = {total}, expected 1")));
    }
    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            pair += pi[i] * pi[j] * d.d(i, j);
        }
    }
    if (pair - 2.0).abs() > 2e-6 {
        return Err(Error::domain(format!("sum of pi(i)pi(j)d(i,j) = {pair}, expected 2")));
    }
    Ok(core_distance_value(d.s(), d.diameter(left)))
}

#[derive(Debug, Clone, Serialize)]
pub struct L1RoundResult {
    pub cut: CutResult,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// `½·max_F Σ F(i,j)|v(i) − v(j)|`.
    pub eta: f64,
    pub trace: RoundTrace,
}

/// Rounds a one-dimensional solution with `Σ π v = 0` and `Σ π|v| = 1`
/// (π taken from `g`, normally the total degrees). Asserts the returned cut
/// is within `consts.l1_factor` of `η`.
pub fn l1_round(g: &DiGraph, v: &[f64], consts: &Constants) -> Result<L1RoundResult> {
    let n = g.n();
    if v.len() != n {
        return Err(Error::domain("v has the wrong length"));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::domain("v is identically zero"));
    }
    let pi = g.pi();
    let mean: f64 = pi.iter().zip(v).map(|(p, x)| p * x).sum();
    let mass: f64 = pi.iter().zip(v).map(|(p, x)| p * x.abs()).sum();
    if mean.abs() > 1e-6 || (mass - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!("v must satisfy sum pi*v = 0 and sum pi*|v| = 1 (got {mean}, {mass})")));
    }
    let mut left: Vec<usize> = (0..n).filter(|&i| v[i] <= 0.0).collect();
    let mut right: Vec<usize> = (0..n).filter(|&i| v[i] > 0.0).collect();
    let pl: f64 = left.iter().map(|&i| pi[i]).sum();
    let pr: f64 = right.iter().map(|&i| pi[i]).sum();
    if pr > pl {
        std::mem::swap(&mut left, &mut right);
    }
    let d = MetricOracle::line(v)?;
    let out = metric_round(g, &d, &left, &right, consts)?;
    let eta = 0.5 * max_cost_circulation_with(g, |i, j| (v[i] - v[j]).abs())?.objective;
    let limit = consts.l1_factor * eta * (1.0 + 1e-5) + 1e-12;
    if out.cut.value > limit {
        return Err(Error::invariant(format!(
            "l1 rounding gave {} > {} * eta = {limit}",
            out.cut.value, consts.l1_factor
        )));
    }
    Ok(L1RoundResult { cut: out.cut, left, right, eta, trace: out.trace })
}
