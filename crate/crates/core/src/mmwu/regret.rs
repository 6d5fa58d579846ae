use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::Serialize;

use super::feedback::FeedbackMatrix;
use crate::embedding::FeedbackHistory;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_inner, projector, restricted_min_eigenvalue, sqrt_pi_unit};

static REGRET_CHECKS: AtomicU64 = AtomicU64::new(0);
static REGRET_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// `(checks, violations)` of the regret inequality across the process.
pub fn regret_counters() -> (u64, u64) {
    (REGRET_CHECKS.load(Ordering::Relaxed), REGRET_VIOLATIONS.load(Ordering::Relaxed))
}

/// Slack below which a regret check counts as violated.
pub const REGRET_TOL: f64 = -1e-9;

/// `X₀ = (I − Π^{1/2}𝟙𝟙ᵀΠ^{1/2}) / (n − 1)`.
pub fn initial_state(pi: &[f64]) -> DMatrix<f64> {
    let n = pi.len();
    projector(&sqrt_pi_unit(pi)) / (n as f64 - 1.0)
}

/// Accumulates a feedback sequence into the history consumed by the Gram
/// routines. Every matrix must respect the run's width `ρ` within 5%.
pub fn mmwu_state(history: &[FeedbackMatrix], eta: f64, rho: f64, pi: &[f64]) -> Result<FeedbackHistory> {
    if !(eta > 0.0 && eta < 1.0) || !(rho > 0.0) {
        return Err(Error::domain("need eta in (0,1) and rho > 0"));
    }
    let mut h = FeedbackHistory::new(pi.len(), eta, rho);
    for (t, m) in history.iter().enumerate() {
        if m.effective_width() > 1.05 * rho {
            return Err(Error::domain(format!("feedback {t} has width {} above rho {rho}", m.effective_width())));
        }
        h.push(&m.effective());
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegretReport {
    pub iterations: usize,
    pub avg_inner: f64,
    pub lambda_min: f64,
    /// `λ_min(M̄) − [avg⟨M_t,X_t⟩ − ηρ − ρ·ln n/(ηT)]`.
    pub general_slack: f64,
    /// `λ_min(M̄) − [(1−η)·avg⟨M_t,X_t⟩ − ρ·ln n/(ηT)]`, for all-PSD histories.
    pub psd_slack: Option<f64>,
}

impl RegretReport {
    pub fn holds(&self) -> bool {
        self.general_slack >= REGRET_TOL && self.psd_slack.is_none_or(|s| s >= REGRET_TOL)
    }

    /// Records the check in the process counters.
    pub fn tally(&self) -> bool {
        let ok = self.holds();
        REGRET_CHECKS.fetch_add(1, Ordering::Relaxed);
        if !ok {
            REGRET_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        }
        ok
    }
}

fn report(t: usize, sum_inner: f64, lambda_min: f64, all_psd: bool, eta: f64, rho: f64, n: usize) -> RegretReport {
    let tf = t as f64;
    let avg = sum_inner / tf;
    let log_term = rho * (n as f64).ln() / (eta * tf);
    let general_slack = lambda_min - (avg - eta * rho - log_term);
    let psd_slack = all_psd.then_some(lambda_min - ((1.0 - eta) * avg - log_term));
    RegretReport { iterations: t, avg_inner: avg, lambda_min, general_slack, psd_slack }
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    let mut s = m.clone();
    crate::linalg::symmetrize(&mut s);
    let lo = nalgebra::SymmetricEigen::new(s).eigenvalues.iter().fold(f64::INFINITY, |a: f64, &b| a.min(b));
    lo >= -1e-9 * m.norm().max(1.0)
}

/// Regret slack for the losses `M_t` (normalized, on `Π^{1/2}𝟙`'s
/// complement) and the states `X_t` they were played against.
pub fn regret_gap(
    mats: &[DMatrix<f64>],
    states: &[DMatrix<f64>],
    eta: f64,
    rho: f64,
    pi: &[f64],
) -> Result<RegretReport> {
    if mats.is_empty() || mats.len() != states.len() {
        return Err(Error::domain("need one state per feedback matrix"));
    }
    let n = pi.len();
    let t = mats.len();
    let mut sum = DMatrix::zeros(n, n);
    let mut sum_inner = 0.0;
    for (m, x) in mats.iter().zip(states) {
        sum += m;
        sum_inner += frobenius_inner(m, x);
    }
    let lambda_min = restricted_min_eigenvalue(&(sum / t as f64), &sqrt_pi_unit(pi));
    let all_psd = mats.iter().all(is_psd);
    Ok(report(t, sum_inner, lambda_min, all_psd, eta, rho, n))
}

/// Running version of [`regret_gap`] that never stores the states.
#[derive(Debug, Clone, Default)]
pub struct RegretTracker {
    pub iterations: usize,
    pub sum_inner: f64,
    pub all_psd: bool,
}

impl RegretTracker {
    pub fn new() -> Self {
        RegretTracker { iterations: 0, sum_inner: 0.0, all_psd: true }
    }

    pub fn record(&mut self, inner: f64, psd: bool) {
        self.iterations += 1;
        self.sum_inner += inner;
        self.all_psd &= psd;
    }

    /// Finishes against the accumulated history `A = (η/ρ)·Σ M_t`.
    pub fn finish(&self, h: &FeedbackHistory, pi: &[f64]) -> RegretReport {
        let t = self.iterations.max(1);
        let mbar = &h.a * (h.rho / (h.eta * t as f64));
        let lambda_min = restricted_min_eigenvalue(&mbar, &sqrt_pi_unit(pi));
        report(t, self.sum_inner, lambda_min, self.all_psd, h.eta, h.rho, pi.len())
    }
}
