use serde::Serialize;

use super::certificate::{CertificateBuilder, DualCertificate};
use super::oracles::{oracle_large_core, oracle_well_spread, OracleCase, OracleOutcome};
use super::regret::{RegretReport, RegretTracker};
use crate::config::Constants;
use crate::embedding::{approx_gram, classify, default_tau, exact_gram, Classification, Embedding, FeedbackHistory};
use crate::error::{Error, Result};
use crate::graph::CutResult;
use crate::linalg::{restricted_min_eigenvalue, sqrt_pi_unit};
use crate::rng::SeedStream;
use crate::DiGraph;

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveTrace {
    pub n: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub eta: f64,
    /// `⌈C_T·ρ²·ln n⌉`.
    pub t_budget: usize,
    pub iterations: usize,
    pub large_core: usize,
    pub demand_feedback: usize,
    pub violating_feedback: usize,
    pub clipped: usize,
    pub chaining_attempts: usize,
    pub flows: usize,
    pub min_inner: f64,
    pub lambda_checks: Vec<(usize, f64)>,
    pub regret: Option<RegretReport>,
    pub root_seed: u64,
}

impl SolveTrace {
    pub fn summary(&self) -> String {
        format!(
            "n={} kappa={} eps={} rho={} eta={} T={} iterations={} large_core={} demand={} violating={} clipped={} min_inner={:.4} last_lambda={:?}",
            self.n,
            self.kappa,
            self.epsilon,
            self.rho,
            self.eta,
            self.t_budget,
            self.iterations,
            self.large_core,
            self.demand_feedback,
            self.violating_feedback,
            self.clipped,
            self.min_inner,
            self.lambda_checks.last()
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum SparsestOutcome {
    Certified(Box<DualCertificate>),
    Cut(CutResult),
}

#[derive(Debug, Clone, Serialize)]
pub struct SparsestRun {
    pub outcome: SparsestOutcome,
    pub trace: SolveTrace,
}

/// Width that covers both oracles: `max(6·β_LC, 2·β_WS·(1 + π_max/c))`.
pub fn default_rho(g: &DiGraph, epsilon: f64, consts: &Constants) -> f64 {
    let pi_max = g.pi().iter().copied().fold(0.0, f64::max);
    let ws = 2.0 * consts.well_spread_beta(g.n(), epsilon) * (1.0 + pi_max / consts.c_mass);
    (6.0 * consts.large_core_beta).max(ws)
}

fn embedding_for(h: &FeedbackHistory, pi: &[f64], seeds: &mut SeedStream, consts: &Constants) -> Result<Embedding> {
    if pi.len() <= consts.exact_gram_max_n {
        exact_gram(h, pi, consts.exact_gram_max_n)
    } else {
        approx_gram(h, pi, consts.jl_delta, default_tau(pi, consts.tau_c), seeds.next_seed(), consts.jl_c)
    }
}

/// Restricted `λ_min` of the average feedback `M̄ = (ρ/(η·t))·A`.
fn average_lambda(h: &FeedbackHistory, pi: &[f64]) -> f64 {
    let t = h.count.max(1) as f64;
    restricted_min_eigenvalue(&(&h.a * (h.rho / (h.eta * t))), &sqrt_pi_unit(pi))
}

/// Primal-dual loop for directed sparsest cut at congestion `kappa`.
///
/// Each round extracts the embedding of the current MMWU state, asks the
/// large-core or well-spread oracle for feedback, and stops with a cut as
/// soon as an oracle returns one. The run certifies once the averaged
/// feedback reaches `cert_target` on the complement of `Π^{1/2}𝟙`, or at
/// the iteration budget `T`.
pub fn solve_sparsest(g: &DiGraph, kappa: f64, epsilon: f64, seed: u64, consts: &Constants) -> Result<SparsestRun> {
    let n = g.n();
    let pi = g.pi();
    if n < 2 {
        return Err(Error::domain("need at least two vertices"));
    }
    if (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::domain("pi must be normalized"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain("kappa must be positive"));
    }
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::domain("epsilon must lie in (0, 0.5]"));
    }
    let rho = consts.rho.unwrap_or_else(|| default_rho(g, epsilon, consts));
    let eta = consts.c_eta.min(0.99 * rho) / rho;
    let t_budget = ((consts.c_t * rho * rho * (n as f64).ln()).ceil() as usize).max(1);
    let max_iter = consts.max_iterations.unwrap_or(t_budget);

    let mut trace = SolveTrace {
        n,
        kappa,
        epsilon,
        rho,
        eta,
        t_budget,
        min_inner: f64::INFINITY,
        root_seed: seed,
        ..SolveTrace::default()
    };
    let mut seeds = SeedStream::new(seed);
    let mut h = FeedbackHistory::new(n, eta, rho);
    let mut regret = RegretTracker::new();
    let mut builder = CertificateBuilder::new(n);
    let check_every = consts.cert_check_every.max(1);

    let finish = |h: &FeedbackHistory, regret: &RegretTracker, trace: &mut SolveTrace| -> Result<()> {
        let report = regret.finish(h, pi);
        trace.regret = Some(report);
        if !report.tally() {
            return Err(Error::invariant(format!("regret bound violated: {report:?}")));
        }
        Ok(())
    };

    for t in 1..=t_budget.min(max_iter) {
        trace.iterations = t;
        let emb = embedding_for(&h, pi, &mut seeds, consts)?;
        let oracle_seed = seeds.next_seed();
        let (outcome, case) = match classify(&emb, consts)? {
            Classification::LargeCore { center, .. } => {
                trace.large_core += 1;
                (oracle_large_core(g, &emb, center, kappa, consts)?, OracleCase::LargeCore)
            }
            Classification::WellSpread(ws) => {
                let (out, case, stats) = oracle_well_spread(g, &emb, &ws, epsilon, kappa, oracle_seed, consts)
                    .map_err(|e| match e {
                        Error::Solver(msg) => Error::Solver(format!("{msg}; trace: {}", trace.summary())),
                        other => other,
                    })?;
                trace.chaining_attempts += stats.chaining_attempts;
                trace.flows += stats.flows;
                (out, case)
            }
        };
        let mut f = match outcome {
            OracleOutcome::Cut(cut) => {
                if t > 1 {
                    finish(&h, &regret, &mut trace)?;
                }
                return Ok(SparsestRun { outcome: SparsestOutcome::Cut(cut), trace });
            }
            OracleOutcome::Feedback(f) => f,
        };
        match case {
            OracleCase::Violating => trace.violating_feedback += 1,
            _ => trace.demand_feedback += 1,
        }
        if f.clip_to(rho) {
            trace.clipped += 1;
        }
        let inner = f.inner(&emb);
        trace.min_inner = trace.min_inner.min(inner);
        regret.record(inner, f.is_demand());
        h.push(&f.effective());
        builder.add(&f);

        if t % check_every == 0 || t == t_budget {
            let lambda = average_lambda(&h, pi);
            trace.lambda_checks.push((t, lambda));
            if lambda >= consts.cert_target || t == t_budget {
                finish(&h, &regret, &mut trace)?;
                let cert = builder.finish(kappa, pi, vec![seed])?;
                return Ok(SparsestRun { outcome: SparsestOutcome::Certified(Box::new(cert)), trace });
            }
        }
    }
    Err(Error::Budget(format!(
        "stopped after {} of {t_budget} iterations without a certificate or cut; trace: {}",
        trace.iterations,
        trace.summary()
    )))
}
