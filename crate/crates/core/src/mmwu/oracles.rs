use serde::Serialize;

use super::chain::{chain_matchings, ChainedPaths};
use super::feedback::{FeedbackMatrix, Provenance};
use super::matching::{
    build_matching, circulation_paths, project_max_flow, FractionalMatching, ProjectOutcome, SubsetEmbedding,
};
use crate::config::Constants;
use crate::embedding::{ball_mass, gaussian_vector, sample_shuffled_bundle, Embedding, WellSpread};
use crate::error::{Error, Result};
use crate::flow::{bidirectional_max_flow, BidirOutcome, SaturatedFlow};
use crate::graph::{complement, Circulation, CutResult, SymLaplacian};
use crate::rng::rng_from_seed;
use crate::DiGraph;

#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Feedback(FeedbackMatrix),
    Cut(CutResult),
}

/// Which branch of the well-spread oracle produced its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleCase {
    LargeCore,
    /// A sampled direction's demand graph already has `⟨L_sym(D), Y⟩ ≥ 1`.
    Demand,
    /// Chained matchings produced triangle-violating paths.
    Violating,
    /// Some flow failed to saturate.
    Cut,
}

/// Flips `u` so its first nonzero coordinate is positive.
fn canonical(mut u: Vec<f64>) -> (Vec<f64>, bool) {
    let flip = u.iter().find(|&&x| x != 0.0).is_some_and(|&x| x < 0.0);
    if flip {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    (u, flip)
}

fn demand_feedback(flow: &SaturatedFlow, rho: f64, pi: &[f64]) -> Result<FeedbackMatrix> {
    let paths: Vec<(Vec<usize>, f64)> =
        circulation_paths(flow).into_iter().filter(|(p, _)| p[0] != p[p.len() - 1]).collect();
    let n = pi.len();
    let mut demand = Circulation::zero(n);
    let mut circ = Circulation::zero(n);
    for (p, w) in &paths {
        demand.add(p[0], p[p.len() - 1], *w);
        for hop in p.windows(2) {
            circ.add(hop[0], hop[1], *w);
        }
    }
    FeedbackMatrix::from_demand(demand, circ, paths, rho, pi)
}

/// Large-core oracle: flows from the core ball to its complement. The flow
/// multiplier is raised above `large_core_beta` when needed so a saturated
/// flow always yields `⟨L_sym(D), Y⟩ ≥ 1`.
pub fn oracle_large_core(
    g: &DiGraph,
    emb: &Embedding,
    center: usize,
    kappa: f64,
    consts: &Constants,
) -> Result<OracleOutcome> {
    let n = g.n();
    if emb.n() != n {
        return Err(Error::domain("embedding and graph disagree on n"));
    }
    let mass = ball_mass(emb, center, consts.core_radius);
    if mass < consts.core_mass * (1.0 - 1e-12) {
        return Err(Error::domain(format!("core ball mass {mass} below {}", consts.core_mass)));
    }
    let r2 = consts.core_radius * consts.core_radius;
    let left: Vec<usize> = (0..n).filter(|&j| emb.dist2(center, j) <= r2).collect();
    let right = complement(n, &left);
    if right.is_empty() {
        return Err(Error::domain("core ball covers every vertex"));
    }
    let den: f64 =
        right.iter().map(|&j| g.pi()[j] * left.iter().map(|&i| emb.dist2(i, j)).fold(f64::INFINITY, f64::min)).sum();
    let beta = consts.large_core_beta.max(2.0 * (1.0 + 1e-9) / den);
    match bidirectional_max_flow(g, &left, &right, beta, kappa)? {
        BidirOutcome::Unsaturated(cut) => Ok(OracleOutcome::Cut(cut)),
        BidirOutcome::Saturated(flow) => {
            let rho = 2.0 * flow.r_prime * beta;
            let f = demand_feedback(&flow, rho, g.pi())?;
            let inner = f.inner(emb);
            if inner < 1.0 - 1e-9 {
                return Err(Error::invariant(format!("large-core feedback has inner product {inner} < 1")));
            }
            Ok(OracleOutcome::Feedback(f))
        }
    }
}

/// Feedback from chained paths that violate the triangle inequality for `Y`.
/// Returns `None` when too little weight sits on long paths or nothing
/// violates.
pub fn violating_feedback(
    paths: &ChainedPaths,
    emb: &Embedding,
    epsilon: f64,
    consts: &Constants,
) -> Result<Option<FeedbackMatrix>> {
    let n = emb.n();
    let l = consts.c_l * epsilon;
    let mut long_weight = 0.0;
    let mut hops = 1usize;
    let mut violating = Vec::new();
    let mut total = 0.0;
    for (p, f) in &paths.paths {
        let (a, b) = (p[0], p[p.len() - 1]);
        if emb.dist2(a, b) < l {
            continue;
        }
        long_weight += f;
        let t: f64 = p.windows(2).map(|h| emb.dist2(h[0], h[1])).sum::<f64>() - emb.dist2(a, b);
        if t < 0.0 {
            total += f * -t;
            hops = hops.max(p.len() - 1);
            violating.push((p.clone(), *f));
        }
    }
    if long_weight < 0.5 * (n as f64).powf(-epsilon) || violating.is_empty() || total <= 0.0 {
        return Ok(None);
    }
    let y = 1.0 / total;
    let mut body = SymLaplacian::zero(n);
    for (p, f) in &violating {
        body.add_path_term(p, -y * f);
    }
    let rho = 4.0 * y * hops as f64;
    FeedbackMatrix::new(body, rho, Provenance::ViolatingPaths { paths: violating, y }, emb.pi()).map(Some)
}

/// Saturated flow for one direction plus its matching, already oriented for
/// the caller's `u`.
struct DirectionFlow {
    flow: SaturatedFlow,
    matching: FractionalMatching,
}

enum Probe {
    Saturated(Box<DirectionFlow>),
    Cut(CutResult),
}

struct WellSpreadCtx<'a> {
    g: &'a DiGraph,
    sub: SubsetEmbedding,
    beta: f64,
    c: f64,
    kappa: f64,
    sigma: f64,
}

impl WellSpreadCtx<'_> {
    fn probe(&self, u: Vec<f64>) -> Result<Probe> {
        let (u, flip) = canonical(u);
        match project_max_flow(self.g, &self.sub, &u, self.c, self.beta, self.kappa)? {
            ProjectOutcome::Unsaturated(cut) => Ok(Probe::Cut(cut)),
            ProjectOutcome::Saturated { flow, left, right } => {
                let m = build_matching(
                    &circulation_paths(&flow),
                    &left,
                    &right,
                    &self.sub,
                    &u,
                    self.sigma,
                    self.beta,
                    self.c,
                    flow.r_prime,
                )?;
                let matching = if flip { m.reversed() } else { m };
                Ok(Probe::Saturated(Box::new(DirectionFlow { flow, matching })))
            }
        }
    }
}

/// Summary of one well-spread oracle call.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct WellSpreadStats {
    pub directions: usize,
    pub chaining_attempts: usize,
    pub flows: usize,
}

/// Well-spread oracle. Samples directions on the recentred subset and
/// returns the best cut if any flow fails to saturate, else the best demand
/// feedback if one reaches inner product 1, else chains matchings along
/// shuffled correlated bundles until violating paths appear.
pub fn oracle_well_spread(
    g: &DiGraph,
    emb: &Embedding,
    ws: &WellSpread,
    epsilon: f64,
    kappa: f64,
    seed: u64,
    consts: &Constants,
) -> Result<(OracleOutcome, OracleCase, WellSpreadStats)> {
    let n = g.n();
    let c = consts.c_mass;
    let beta = consts.well_spread_beta(n, epsilon);
    let pi = g.pi();
    let total: f64 = pi.iter().sum();
    let mass_u: f64 = ws.subset.iter().map(|&v| pi[v]).sum();
    // A subset too light for two c-mass prefixes falls back to all of V.
    let sub = if mass_u >= 2.0 * c * total {
        SubsetEmbedding::new(ws.shifted(emb), ws.subset.clone(), n)?
    } else {
        SubsetEmbedding::full(emb.clone())
    };
    let ctx = WellSpreadCtx { g, sub, beta, c, kappa, sigma: consts.sigma_match };
    let mut rng = rng_from_seed(seed);
    let mut stats = WellSpreadStats::default();
    let dim = emb.dim();

    let mut best_cut: Option<CutResult> = None;
    let mut best_demand: Option<(f64, FeedbackMatrix)> = None;
    let rho_demand = |flow: &SaturatedFlow| 2.0 * beta * flow.r_prime;
    for _ in 0..consts.directions_per_call(n) {
        stats.directions += 1;
        stats.flows += 1;
        match ctx.probe(gaussian_vector(dim, &mut rng))? {
            Probe::Cut(cut) => {
                if best_cut.as_ref().is_none_or(|b| cut.value < b.value) {
                    best_cut = Some(cut);
                }
            }
            Probe::Saturated(d) => {
                if best_cut.is_some() {
                    continue;
                }
                let f = demand_feedback(&d.flow, rho_demand(&d.flow), pi)?;
                let inner = f.inner(emb);
                if best_demand.as_ref().is_none_or(|b| inner > b.0) {
                    best_demand = Some((inner, f));
                }
            }
        }
    }
    if let Some(cut) = best_cut {
        return Ok((OracleOutcome::Cut(cut), OracleCase::Cut, stats));
    }
    if let Some((inner, f)) = best_demand {
        if inner >= 1.0 {
            return Ok((OracleOutcome::Feedback(f), OracleCase::Demand, stats));
        }
    }

    let k = consts.chain_k(n, epsilon);
    for _ in 0..consts.chaining_attempts(n, epsilon) {
        stats.chaining_attempts += 1;
        let bundle = sample_shuffled_bundle(k, dim, &mut rng)?;
        let mut cover = Vec::with_capacity(bundle.len());
        for u in bundle.vectors {
            stats.flows += 1;
            match ctx.probe(u)? {
                Probe::Cut(cut) => return Ok((OracleOutcome::Cut(cut), OracleCase::Cut, stats)),
                Probe::Saturated(d) => {
                    let f = demand_feedback(&d.flow, rho_demand(&d.flow), pi)?;
                    if f.inner(emb) >= 1.0 {
                        return Ok((OracleOutcome::Feedback(f), OracleCase::Demand, stats));
                    }
                    cover.push(d.matching);
                }
            }
        }
        let refs: Vec<&FractionalMatching> = cover.iter().collect();
        let chained = chain_matchings(&refs);
        if let Some(f) = violating_feedback(&chained, emb, epsilon, consts)? {
            return Ok((OracleOutcome::Feedback(f), OracleCase::Violating, stats));
        }
    }
    Err(Error::Solver(format!(
        "well-spread oracle exhausted {} chaining attempts (k = {k}, {} flows) without feedback or cut",
        stats.chaining_attempts, stats.flows
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{classify, Classification};
    use crate::graph::Graph;

    fn bidirected_complete(n: usize) -> DiGraph {
        let arcs = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, 1.0)));
        Graph::new(n, arcs, vec![1.0 / n as f64; n]).unwrap()
    }

    fn simplex(n: usize) -> Embedding {
        let s = (n as f64 / (n as f64 - 1.0)).sqrt();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { s * (1.0 - 1.0 / n as f64) } else { -s / n as f64 }).collect())
            .collect();
        let e = Embedding::from_rows(&rows, vec![1.0 / n as f64; n]).unwrap();
        let c = 1.0 / e.pair_spread().sqrt();
        e.scaled(c)
    }

    #[test]
    fn single_path_violation() {
        let emb = Embedding::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![1.0 / 3.0; 3]).unwrap();
        let paths = ChainedPaths { paths: vec![(vec![0, 1, 2], 1.0)] };
        let f = violating_feedback(&paths, &emb, 0.25, &Constants::default()).unwrap().unwrap();
        match &f.provenance {
            Provenance::ViolatingPaths { y, .. } => assert!((y - 0.5).abs() < 1e-12),
            _ => unreachable!(),
        }
        assert!((f.inner(&emb) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_respecting_paths_fail() {
        let emb = Embedding::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]], vec![1.0 / 3.0; 3]).unwrap();
        let paths = ChainedPaths { paths: vec![(vec![0, 1, 2], 1.0)] };
        assert!(violating_feedback(&paths, &emb, 0.25, &Constants::default()).unwrap().is_none());
    }

    #[test]
    fn large_core_on_disconnected_graph_cuts() {
        let arcs = [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)];
        let g = Graph::new(4, arcs, vec![0.25; 4]).unwrap();
        let a = 1.0;
        let emb = Embedding::from_rows(&[vec![-a], vec![-a], vec![a], vec![a]], vec![0.25; 4]).unwrap();
        let emb = emb.scaled(1.0 / emb.pair_spread().sqrt());
        match oracle_large_core(&g, &emb, 0, 1.0, &Constants::default()).unwrap() {
            OracleOutcome::Cut(c) => assert_eq!(c.value, 0.0),
            OracleOutcome::Feedback(_) => panic!("no flow crosses components"),
        }
    }

    #[test]
    fn large_core_on_k8_saturates() {
        let g = bidirected_complete(8);
        let mut rows = vec![vec![0.0]; 8];
        rows[7] = vec![1.0];
        let emb = Embedding::from_rows(&rows, vec![0.125; 8]).unwrap();
        let emb = emb.scaled(1.0 / emb.pair_spread().sqrt());
        match oracle_large_core(&g, &emb, 0, 1.0, &Constants::default()).unwrap() {
            OracleOutcome::Feedback(f) => {
                assert!(f.inner(&emb) >= 1.0 - 1e-9);
                assert!(f.degree_bound_ok(g.pi()));
            }
            OracleOutcome::Cut(_) => panic!("K8 routes the demand"),
        }
    }

    #[test]
    fn well_spread_disconnected_cuts() {
        let n = 8;
        let arcs = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i && (i < 4) == (j < 4)).map(move |j| (i, j, 1.0)));
        let g = Graph::new(n, arcs, vec![0.125; n]).unwrap();
        let emb = simplex(n);
        let Classification::WellSpread(ws) = classify(&emb, &Constants::default()).unwrap() else {
            panic!("simplex is well spread");
        };
        let (out, case, _) = oracle_well_spread(&g, &emb, &ws, 0.25, 1.0, 5, &Constants::default()).unwrap();
        assert_eq!(case, OracleCase::Cut);
        match out {
            OracleOutcome::Cut(c) => assert_eq!(c.value, 0.0),
            OracleOutcome::Feedback(_) => unreachable!(),
        }
    }

    #[test]
    fn well_spread_expander_feedback() {
        let g = bidirected_complete(8);
        let emb = simplex(8);
        let Classification::WellSpread(ws) = classify(&emb, &Constants::default()).unwrap() else {
            panic!("simplex is well spread");
        };
        let (out, case, _) = oracle_well_spread(&g, &emb, &ws, 0.25, 1.0, 9, &Constants::default()).unwrap();
        assert_ne!(case, OracleCase::Cut);
        match out {
            OracleOutcome::Feedback(f) => assert!(f.inner(&emb) >= 1.0 - 1e-9),
            OracleOutcome::Cut(_) => unreachable!(),
        }
    }

    #[test]
    fn canonical_sign() {
        assert_eq!(canonical(vec![0.0, -1.0, 2.0]), (vec![0.0, 1.0, -2.0], true));
        assert_eq!(canonical(vec![1.0]), (vec![1.0], false));
    }
}
