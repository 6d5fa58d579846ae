use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::Embedding;
use crate::error::{Error, Result};
use crate::linalg::{power_norm_estimate, projector, sqrt_pi_unit, symmetrize};
use crate::rng::rng_from_seed;

/// `A = (η/ρ)·Σ M_i` over the normalized feedback matrices seen so far.
#[derive(Debug, Clone)]
pub struct FeedbackHistory {
    pub a: DMatrix<f64>,
    pub eta: f64,
    pub rho: f64,
    pub count: usize,
    /// Power-iteration estimate of `‖A‖` after the last push.
    pub norm_estimate: f64,
}

impl FeedbackHistory {
    pub fn new(n: usize, eta: f64, rho: f64) -> Self {
        FeedbackHistory { a: DMatrix::zeros(n, n), eta, rho, count: 0, norm_estimate: 0.0 }
    }

    /// Builds a history directly from an accumulated matrix.
    pub fn from_matrix(a: DMatrix<f64>, eta: f64, rho: f64, count: usize) -> Self {
        let mut h = FeedbackHistory { a, eta, rho, count, norm_estimate: 0.0 };
        symmetrize(&mut h.a);
        h.norm_estimate = power_norm_estimate(&h.a, 60);
        h
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn push(&mut self, m: &DMatrix<f64>) {
        self.a += m * (self.eta / self.rho);
        self.count += 1;
        self.norm_estimate = power_norm_estimate(&self.a, 30);
    }

    /// `‖A‖ ≤ η·T` up to the slack of clipped feedback.
    pub fn norm_within_budget(&self) -> bool {
        self.norm_estimate <= self.eta * self.count as f64 * (1.0 + 1e-6) + 1e-12
    }
}

/// Eigenpairs of `A` on the complement of `u`, smallest first.
fn restricted_eigen(a: &DMatrix<f64>, u: &DVector<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let p = projector(u);
    let shift = 2.0 * (a.norm() + 1.0);
    let mut b = &p * a * &p + u * u.transpose() * shift;
    symmetrize(&mut b);
    let eig = SymmetricEigen::new(b);
    let drop = (0..n)
        .max_by(|&x, &y| eig.eigenvectors.column(x).dot(u).abs().total_cmp(&eig.eigenvectors.column(y).dot(u).abs()))
        .expect("n >= 1");
    let mut order: Vec<usize> = (0..n).filter(|&k| k != drop).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::zeros(n, order.len());
    for (c, &k) in order.iter().enumerate() {
        // Re-project so the kept vectors are orthogonal to `u` to machine precision.
        let col = eig.eigenvectors.column(k);
        let v = &p * col;
        vecs.set_column(c, &(&v / v.norm()));
    }
    (vals, vecs)
}

fn check_inputs(h: &FeedbackHistory, pi: &[f64]) -> Result<()> {
    if h.n() != pi.len() || pi.len() < 2 {
        return Err(Error::domain("history and pi must agree on n >= 2"));
    }
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::domain("pi must be positive"));
    }
    Ok(())
}

/// `W` with `WWᵀ ∝ exp(−A)` restricted to `Π^{1/2}𝟙`'s complement, and `tr WWᵀ`.
fn half_exponential(h: &FeedbackHistory, pi: &[f64]) -> (DMatrix<f64>, f64) {
    let u = sqrt_pi_unit(pi);
    let (vals, vecs) = restricted_eigen(&h.a, &u);
    let lo = vals[0];
    let scales: Vec<f64> = vals.iter().map(|&l| (-(l - lo) / 2.0).exp()).collect();
    let trace: f64 = scales.iter().map(|s| s * s).sum();
    let mut w = vecs;
    for (c, &s) in scales.iter().enumerate() {
        w.column_mut(c).scale_mut(s);
    }
    (w, trace)
}

/// The MMWU density `X = P exp(−A) P / tr`.
pub fn density_matrix(h: &FeedbackHistory, pi: &[f64]) -> Result<DMatrix<f64>> {
    check_inputs(h, pi)?;
    let (w, trace) = half_exponential(h, pi);
    let mut x = &w * w.transpose() / trace;
    symmetrize(&mut x);
    Ok(x)
}

/// Rows of `Π^{-1/2}·X^{1/2}` from a dense eigendecomposition of `A`.
pub fn exact_gram(h: &FeedbackHistory, pi: &[f64], max_n: usize) -> Result<Embedding> {
    check_inputs(h, pi)?;
    let n = pi.len();
    if n > max_n {
        return Err(Error::Budget(format!("exact Gram limited to n <= {max_n}, got {n}")));
    }
    let (w, trace) = half_exponential(h, pi);
    let dim = w.ncols();
    let norm = trace.sqrt();
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        let s = 1.0 / (pi[i].sqrt() * norm);
        data.extend(w.row(i).iter().map(|x| x * s));
    }
    Ok(Embedding::from_flat(dim, data, pi.to_vec()))
}

/// `τ = π_min / n^c`.
pub fn default_tau(pi: &[f64], c: f64) -> f64 {
    let n = pi.len().max(2) as f64;
    pi.iter().copied().fold(f64::INFINITY, f64::min) / n.powf(c)
}

/// `k = max(⌈e²‖S‖⌉, ⌈ln(1/τ)⌉)`, at least 1.
pub fn taylor_terms(s_norm: f64, tau: f64) -> usize {
    let e2 = std::f64::consts::E.powi(2);
    let a = (e2 * s_norm).ceil();
    let b = (1.0 / tau).ln().ceil();
    a.max(b).max(1.0) as usize
}

/// Gershgorin interval of a symmetric matrix: `(midpoint, half-width)`.
fn gershgorin(a: &DMatrix<f64>) -> (f64, f64) {
    let n = a.nrows();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        lo = lo.min(a[(i, i)] - r);
        hi = hi.max(a[(i, i)] + r);
    }
    (0.5 * (lo + hi), 0.5 * (hi - lo))
}

/// Taylor-series embedding on a random `d`-dimensional subspace.
///
/// The series runs on `S = −(A − σI)/2` with `σ` the Gershgorin midpoint,
/// which keeps partial sums bounded; the dropped `exp(−σ/2)` cancels in the
/// trace normalization. Output rows are `Π^{-1/2}Z / √tr(ZZᵀ)`.
pub fn approx_gram(h: &FeedbackHistory, pi: &[f64], delta: f64, tau: f64, seed: u64, jl_c: f64) -> Result<Embedding> {
    check_inputs(h, pi)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain("delta must lie in (0, 1/2)"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain("tau must lie in (0, 1)"));
    }
    let n = pi.len();
    let d = ((jl_c * (n as f64).ln() / (delta * delta)).ceil() as usize).clamp(1, n - 1);
    let mut rng = rng_from_seed(seed);
    let u = sqrt_pi_unit(pi);
    let mut basis = DMatrix::zeros(n, d + 1);
    basis.set_column(0, &u);
    for c in 1..=d {
        for r in 0..n {
            basis[(r, c)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let q = basis.qr().q();
    let scale = (n as f64 / d as f64).sqrt();
    let mut z = q.columns(1, d).into_owned() * scale;
    // Guard against the QR sign or round-off leaking a `u` component.
    let p = projector(&u);
    z = &p * z;

    // Same restriction as the exact route: work with `PAP`.
    let restricted = &p * &h.a * &p;
    let (sigma, radius) = gershgorin(&restricted);
    let mut s = restricted * (-0.5);
    for i in 0..n {
        s[(i, i)] += 0.5 * sigma;
    }
    let s = &p * s * &p;
    let k = taylor_terms(0.5 * radius, tau);
    let mut term = z.clone();
    let mut acc = z;
    for i in 1..=k {
        term = &s * term / i as f64;
        acc += &term;
    }
    let trace: f64 = acc.iter().map(|x| x * x).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::Solver(format!("Taylor embedding degenerated (trace {trace})")));
    }
    let norm = trace.sqrt();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let f = 1.0 / (pi[i].sqrt() * norm);
        data.extend(acc.row(i).iter().map(|x| x * f));
    }
    Ok(Embedding::from_flat(d, data, pi.to_vec()))
}
