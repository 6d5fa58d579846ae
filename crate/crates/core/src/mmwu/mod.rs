//! Matrix multiplicative weights over `ℓ₂²` embeddings for directed
//! sparsest cut. Each round either returns a sparse cut or produces
//! feedback with `⟨M_t, X_t⟩ ≥ 1`; averaging the demand graphs and
//! shortcut terms of a complete run gives a dual certificate.

mod certificate;
mod chain;
mod feedback;
mod matching;
mod oracles;
mod regret;
mod solver;

pub use certificate::{
    verify_certificate, CertificateBuilder, CertificateCheck, DualCertificate, Shortcut, WeightedPath,
};
pub use chain::{chain_matchings, ChainedPaths};
pub use feedback::{FeedbackMatrix, Provenance};
pub use matching::{
    build_matching, circulation_paths, project_max_flow, FractionalMatching, ProjectOutcome, SubsetEmbedding,
};
pub use oracles::{
    oracle_large_core, oracle_well_spread, violating_feedback, OracleCase, OracleOutcome, WellSpreadStats,
};
pub use regret::{initial_state, mmwu_state, regret_counters, regret_gap, RegretReport, RegretTracker, REGRET_TOL};
pub use solver::{default_rho, solve_sparsest, SolveTrace, SparsestOutcome, SparsestRun};
