//! Search over the congestion `κ` on a doubling grid around the primal-dual
//! solver: a cut at `κ` means the demand did not fit, so `κ` doubles; a
//! certificate means it did, so `κ` halves. The search stops once the
//! outcome flips.

use serde::Serialize;

use crate::config::Constants;
use crate::error::{Error, Result};
use crate::graph::{CutResult, Witness};
use crate::mmwu::{solve_sparsest, DualCertificate, SparsestOutcome};
use crate::rng::child_seed;
use crate::DiGraph;

#[derive(Debug, Clone, Serialize)]
pub enum StepResult {
    Cut { value: f64 },
    Certified { value: f64 },
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaStep {
    pub kappa: f64,
    pub iterations: usize,
    pub result: StepResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Best cut found, with its value on the input graph's own π.
    pub cut: CutResult,
    /// Certificate with the largest value and the `κ` it was produced at.
    pub certificate: Option<DualCertificate>,
    /// `value / (2·π(V))`, the implied lower bound on `φ` for the input π.
    pub lower_bound: Option<f64>,
    pub steps: Vec<KappaStep>,
}

pub const MAX_KAPPA_STEPS: usize = 40;
const MAX_FAILURES: usize = 3;

/// Best singleton cut on `g`, used when no solver step produced a cut.
pub fn best_singleton(g: &DiGraph) -> Result<CutResult> {
    let mut best: Option<CutResult> = None;
    for v in 0..g.n() {
        let c = CutResult::new(g, vec![v], Witness::Exhaustive)?;
        if best.as_ref().is_none_or(|b| c.value < b.value) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| Error::domain("empty graph"))
}

pub fn sparsest_cut_search(g: &DiGraph, epsilon: f64, seed: u64, consts: &Constants) -> Result<SearchResult> {
    if g.n() < 2 {
        return Err(Error::domain("need at least two vertices"));
    }
    let gn = g.normalized();
    let mut kappa = 1.0;
    let mut steps = Vec::new();
    let mut best_cut: Option<CutResult> = None;
    let mut best_cert: Option<DualCertificate> = None;
    let mut direction = 0i8;
    let mut failures = 0;
    for k in 0..MAX_KAPPA_STEPS {
        let (result, iterations, flip) = match solve_sparsest(&gn, kappa, epsilon, child_seed(seed, k as u64), consts) {
            Ok(run) => match run.outcome {
                SparsestOutcome::Cut(cut) => {
                    let value = cut.value;
                    if best_cut.as_ref().is_none_or(|b| value < b.value) {
                        best_cut = Some(cut);
                    }
                    (StepResult::Cut { value }, run.trace.iterations, -1)
                }
                SparsestOutcome::Certified(cert) => {
                    let value = cert.value;
                    if best_cert.as_ref().is_none_or(|b| value > b.value) {
                        best_cert = Some(*cert);
                    }
                    (StepResult::Certified { value }, run.trace.iterations, 1)
                }
            },
            Err(e @ Error::Invariant(_)) | Err(e @ Error::Domain(_)) => return Err(e),
            Err(e) => (StepResult::Failed { error: e.to_string() }, 0, 0),
        };
        steps.push(KappaStep { kappa, iterations, result });
        if flip == 0 {
            // A failed run says nothing about κ; keep moving the same way.
            failures += 1;
            if failures >= MAX_FAILURES {
                break;
            }
        } else {
            if direction != 0 && flip != direction {
                break;
            }
            direction = flip;
        }
        kappa = if direction <= 0 { kappa * 2.0 } else { kappa / 2.0 };
    }
    let cut = match best_cut {
        Some(c) => CutResult::new(g, c.set, c.witness)?,
        None => best_singleton(g)?,
    };
    let lower_bound = best_cert.as_ref().map(|c| c.value / (2.0 * g.pi_total()));
    Ok(SearchResult { cut, certificate: best_cert, lower_bound, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, GenKind};
    use crate::graph::phi_brute;

    #[test]
    fn planted_clique_pair() {
        let g = generate(&GenKind::Planted { n1: 6, n2: 6, p: 1.0, q: 0.0, w_cross: 1.0 }, 2).unwrap().graph;
        let consts = Constants { max_iterations: Some(300), ..Constants::default() };
        let r = sparsest_cut_search(&g, 0.25, 1, &consts).unwrap();
        let (_, phi) = phi_brute(&g).unwrap();
        assert!(r.cut.value <= 10.0 * phi, "{} vs {phi}; {:?}", r.cut.value, r.steps);
        assert!(r.lower_bound.unwrap() <= phi + 1e-9);
    }
}
