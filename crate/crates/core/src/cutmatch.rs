//! Directed cut-matching game.
//!
//! The cut player keeps an MMWU state over the normalized Laplacians of the
//! matchings played so far and splits `V` either at a heavy vertex or at
//! the `π`-weighted median of a Gaussian projection. The matching player
//! answers with an Eulerian fractional matching across the split, or with
//! a sparse cut. After `T` rounds the union of the matchings is an expander.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::Constants;
use crate::embedding::{approx_gram, default_tau, exact_gram, Embedding, FeedbackHistory};
use crate::error::{Error, Result};
use crate::flow::{bidirectional_max_flow, BidirOutcome};
use crate::graph::{check_circulation_scaled, Circulation, CutResult};
use crate::linalg::{normalized_lambda2, normalized_matrix, spectral_norm};
use crate::mmwu::{RegretReport, RegretTracker};
use crate::rng::{child_seed, rng_from_seed};
use crate::DiGraph;

const DEGREE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GameState {
    pub pi: Vec<f64>,
    /// Rounds played.
    pub t: usize,
    pub matchings: Vec<Circulation<f64>>,
    pub history: FeedbackHistory,
}

impl GameState {
    pub fn new(pi: &[f64], consts: &Constants) -> Result<Self> {
        check_pi(pi)?;
        Ok(GameState {
            pi: pi.to_vec(),
            t: 0,
            matchings: Vec::new(),
            history: FeedbackHistory::new(pi.len(), consts.game_eta, consts.game_rho),
        })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// The current MMWU embedding `Y_t`, exact up to `exact_gram_max_n`.
    pub fn embedding(&self, seed: u64, consts: &Constants) -> Result<Embedding> {
        if self.n() <= consts.exact_gram_max_n {
            exact_gram(&self.history, &self.pi, consts.exact_gram_max_n)
        } else {
            let tau = default_tau(&self.pi, consts.tau_c);
            approx_gram(&self.history, &self.pi, consts.jl_delta, tau, seed, consts.jl_c)
        }
    }

    /// `D̄ = (1/t)·Σ D_s`.
    pub fn average(&self) -> Circulation<f64> {
        let mut sum = Circulation::zero(self.n());
        for d in &self.matchings {
            sum.add_scaled(d, 1.0);
        }
        sum.scaled(1.0 / self.t.max(1) as f64)
    }

    fn play(&mut self, d: Circulation<f64>, m: &DMatrix<f64>) {
        self.history.push(m);
        self.matchings.push(d);
        self.t += 1;
    }
}

fn check_pi(pi: &[f64]) -> Result<()> {
    if pi.len() < 2 {
        return Err(Error::domain("need at least two vertices"));
    }
    if pi.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::domain("pi must be positive"));
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("pi must be normalized, sums to {total}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutBranch {
    /// A vertex with `π(i) ≥ ¼` is split off alone.
    Singleton,
    /// Weighted median of a Gaussian projection.
    Median,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bipartition {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub branch: CutBranch,
    pub pi_left: f64,
    pub pi_right: f64,
}

fn bipartition(pi: &[f64], mut left: Vec<usize>, branch: CutBranch) -> Bipartition {
    left.sort_unstable();
    let mut in_left = vec![false; pi.len()];
    left.iter().for_each(|&i| in_left[i] = true);
    let right: Vec<usize> = (0..pi.len()).filter(|&i| !in_left[i]).collect();
    let pi_left = left.iter().map(|&i| pi[i]).sum();
    let pi_right = right.iter().map(|&i| pi[i]).sum();
    Bipartition { left, right, branch, pi_left, pi_right }
}

/// Split rule applied to a given embedding. Median ties go to `L` by
/// taking the shortest prefix (in projection order, then vertex id) whose
/// mass reaches ½.
pub fn cut_from_embedding(pi: &[f64], emb: &Embedding, seed: u64) -> Result<Bipartition> {
    let total: f64 = pi.iter().sum();
    let (heavy, &p_max) = pi.iter().enumerate().fold((0, &0.0), |a, b| if b.1 > a.1 { b } else { a });
    if p_max >= 0.25 * total {
        return Ok(bipartition(pi, vec![heavy], CutBranch::Singleton));
    }
    let mut rng = rng_from_seed(seed);
    let g: Vec<f64> = (0..emb.dim()).map(|_| rng.sample(StandardNormal)).collect();
    let proj = emb.project(&g);
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut left = Vec::new();
    for &i in &order {
        left.push(i);
        mass += pi[i];
        if mass >= 0.5 * total * (1.0 - 1e-12) {
            break;
        }
    }
    let b = bipartition(pi, left, CutBranch::Median);
    if b.pi_left.min(b.pi_right) < 0.25 * total * (1.0 - 1e-12) {
        return Err(Error::invariant(format!("median split too unbalanced: {} / {}", b.pi_left, b.pi_right)));
    }
    Ok(b)
}

pub fn cut_player(state: &GameState, seed: u64, consts: &Constants) -> Result<Bipartition> {
    let emb = state.embedding(child_seed(seed, 0), consts)?;
    cut_from_embedding(&state.pi, &emb, child_seed(seed, 1))
}

/// Checks the matching requirements on `D` for the split `(L, R)`: arcs
/// only cross the split, and every `i ∈ L` has in- and out-degree
/// `π(i)π(R)/π(L)`, every `j ∈ R` in- and out-degree `π(j)`.
pub fn check_matching(pi: &[f64], split: &Bipartition, d: &Circulation<f64>) -> Result<()> {
    let n = pi.len();
    if d.n() != n {
        return Err(Error::domain("matching has the wrong size"));
    }
    let mut in_left = vec![false; n];
    split.left.iter().for_each(|&i| in_left[i] = true);
    let mut out = vec![0.0; n];
    let mut inn = vec![0.0; n];
    for (i, j, w) in d.arcs() {
        if in_left[i] == in_left[j] {
            return Err(Error::domain(format!("arc ({i}, {j}) does not cross the split")));
        }
        out[i] += w;
        inn[j] += w;
    }
    let r = split.pi_right / split.pi_left;
    for v in 0..n {
        let want = if in_left[v] { pi[v] * r } else { pi[v] };
        let tol = DEGREE_TOL * want.max(1.0);
        if (out[v] - want).abs() > tol || (inn[v] - want).abs() > tol {
            return Err(Error::domain(format!("vertex {v}: degrees out {} / in {} but need {want}", out[v], inn[v])));
        }
    }
    Ok(())
}

/// `D(i,j) = D(j,i) = π(i)π(j)/π(L)` for `i ∈ L`, `j ∈ R`.
pub fn bipartite_matching_player(pi: &[f64], split: &Bipartition) -> Circulation<f64> {
    let mut d = Circulation::zero(pi.len());
    for &i in &split.left {
        for &j in &split.right {
            let w = pi[i] * pi[j] / split.pi_left;
            d.add(i, j, w);
            d.add(j, i, w);
        }
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub enum MatchingMove {
    /// A matching, with the circulation routing it when one exists.
    Matching {
        demand: Circulation<f64>,
        routing: Option<Circulation<f64>>,
    },
    Cut(CutResult),
}

/// Bidirectional flow with `β = 1`. A saturated flow yields the matching
/// `D⃗ + D⃖`, routed by `f⃗ + f⃖` with congestion at most `2κ`.
pub fn flow_matching_player(g: &DiGraph, split: &Bipartition, kappa: f64) -> Result<MatchingMove> {
    match bidirectional_max_flow(g, &split.left, &split.right, 1.0, kappa)? {
        BidirOutcome::Unsaturated(cut) => Ok(MatchingMove::Cut(cut)),
        BidirOutcome::Saturated(s) => {
            Ok(MatchingMove::Matching { demand: s.demand().scaled(2.0), routing: Some(s.circulation.scaled(2.0)) })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundLog {
    pub t: usize,
    pub left_size: usize,
    pub pi_left: f64,
    /// `W_t = ⟨L_sym(D_t), Y_t⟩`; zero for a cut round.
    pub w: f64,
    pub width: f64,
    pub branch: CutBranch,
    pub outcome: &'static str,
}

pub fn rounds_csv(rounds: &[RoundLog]) -> String {
    let mut s = String::from("t,left_size,pi_left,w,width,branch,outcome\n");
    for r in rounds {
        s.push_str(&format!(
            "{},{},{},{},{},{:?},{}\n",
            r.t, r.left_size, r.pi_left, r.w, r.width, r.branch, r.outcome
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub enum GameOutcome {
    Completed {
        average: Circulation<f64>,
        /// `λ₂` of the normalized `L_sym(D̄)`.
        lambda2: f64,
        /// `T·λ₂`, the same quantity for the union of all matchings.
        union_lambda2: f64,
    },
    Cut {
        round: usize,
        cut: CutResult,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct GameResult {
    pub outcome: GameOutcome,
    pub rounds: Vec<RoundLog>,
    pub regret: Option<RegretReport>,
    /// Sum of the routing circulations, when every move supplied one.
    #[serde(skip)]
    pub routing: Option<Circulation<f64>>,
    pub eta: f64,
    pub rho: f64,
    pub t_rounds: usize,
}

/// Plays `t_rounds` rounds against `player`. Each matching is checked
/// against the degree requirements and its normalized Laplacian against
/// the width bound (4 for singleton rounds, 2 for median rounds). The
/// regret inequality is asserted at the end of a completed game.
pub fn run_game<P>(mut player: P, pi: &[f64], t_rounds: usize, seed: u64, consts: &Constants) -> Result<GameResult>
where
    P: FnMut(&GameState, &Bipartition) -> Result<MatchingMove>,
{
    if t_rounds == 0 {
        return Err(Error::domain("need at least one round"));
    }
    let mut state = GameState::new(pi, consts)?;
    let mut tracker = RegretTracker::new();
    let mut rounds = Vec::with_capacity(t_rounds);
    let mut routing = Some(Circulation::zero(pi.len()));
    for t in 0..t_rounds {
        let round_seed = child_seed(seed, t as u64);
        let emb = state.embedding(child_seed(round_seed, 0), consts)?;
        let split = cut_from_embedding(pi, &emb, child_seed(round_seed, 1))?;
        let (demand, route) = match player(&state, &split)? {
            MatchingMove::Cut(cut) => {
                rounds.push(RoundLog {
                    t,
                    left_size: split.left.len(),
                    pi_left: split.pi_left,
                    w: 0.0,
                    width: 0.0,
                    branch: split.branch,
                    outcome: "cut",
                });
                return Ok(GameResult {
                    outcome: GameOutcome::Cut { round: t, cut },
                    rounds,
                    regret: None,
                    routing: None,
                    eta: consts.game_eta,
                    rho: consts.game_rho,
                    t_rounds,
                });
            }
            MatchingMove::Matching { demand, routing } => (demand, routing),
        };
        check_matching(pi, &split, &demand)?;
        let m = normalized_matrix(&demand.sym_laplacian(), pi);
        let width = spectral_norm(&m);
        let bound = match split.branch {
            CutBranch::Singleton => 4.0,
            CutBranch::Median => 2.0,
        };
        if width > bound * (1.0 + 1e-9) || width > consts.game_rho * (1.0 + 1e-9) {
            return Err(Error::invariant(format!("round {t}: matching width {width} exceeds {bound}")));
        }
        let w: f64 = demand.arcs().map(|(i, j, f)| 0.5 * f * emb.dist2(i, j)).sum();
        if !(-1e-9..=width + 1e-9).contains(&w) {
            return Err(Error::invariant(format!("round {t}: W = {w} outside [0, {width}]")));
        }
        tracker.record(w, true);
        routing = match (routing, route) {
            (Some(mut acc), Some(r)) => {
                acc.add_scaled(&r, 1.0);
                Some(acc)
            }
            _ => None,
        };
        rounds.push(RoundLog {
            t,
            left_size: split.left.len(),
            pi_left: split.pi_left,
            w,
            width,
            branch: split.branch,
            outcome: "matching",
        });
        state.play(demand, &m);
    }
    let report = tracker.finish(&state.history, pi);
    if !report.tally() {
        return Err(Error::invariant(format!("game regret bound violated: {report:?}")));
    }
    let average = state.average();
    let lambda2 = normalized_lambda2(&average.sym_laplacian(), pi);
    Ok(GameResult {
        outcome: GameOutcome::Completed { average, lambda2, union_lambda2: lambda2 * t_rounds as f64 },
        rounds,
        regret: Some(report),
        routing,
        eta: consts.game_eta,
        rho: consts.game_rho,
        t_rounds,
    })
}

/// Monte-Carlo estimate of `E[W_t]` at a fixed state under the bipartite
/// player: `(mean, 95% half-width)` over `samples` projection directions.
pub fn expected_w(state: &GameState, samples: usize, seed: u64, consts: &Constants) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let emb = state.embedding(child_seed(seed, 0), consts)?;
    let ws: Vec<f64> = (0..samples)
        .map(|k| {
            let split = cut_from_embedding(&state.pi, &emb, child_seed(seed, 1 + k as u64))?;
            let d = bipartite_matching_player(&state.pi, &split);
            Ok(d.arcs().map(|(i, j, f)| 0.5 * f * emb.dist2(i, j)).sum())
        })
        .collect::<Result<_>>()?;
    let mean = ws.iter().sum::<f64>() / samples as f64;
    let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok((mean, 1.96 * (var / samples as f64).sqrt()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GameCertificate {
    /// Average routing circulation, congestion at most `2κ` on `G`.
    pub circulation: Circulation<f64>,
    /// Average matching `D̄`.
    pub demand: Circulation<f64>,
    /// `λ₂` of `D̄`, normalized by the input `π` scaled to total 1.
    pub lambda2: f64,
    pub kappa: f64,
    /// `λ₂ / (4κ·π(V))`, a lower bound on `φ_π(G)`.
    pub lower_bound: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone, Serialize)]
pub enum GameApprox {
    Certified(GameCertificate),
    Cut { round: usize, cut: CutResult },
}

#[derive(Debug, Clone, Serialize)]
pub struct GameApproxRun {
    pub outcome: GameApprox,
    pub rounds: Vec<RoundLog>,
    pub regret: Option<RegretReport>,
}

/// Runs the game with the flow player on `G` (with `π` scaled to total 1).
/// A cut from any round is returned with its value on the input `π`;
/// otherwise the averaged matchings and their routing certify
/// `φ_π(G) ≥ λ₂(D̄)/(4κ·π(V))`.
pub fn approx_via_game(g: &DiGraph, kappa: f64, seed: u64, consts: &Constants) -> Result<GameApproxRun> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain("kappa must be positive"));
    }
    let gn = g.normalized();
    let t_rounds = consts.game_rounds(g.n());
    let res = run_game(|_, split| flow_matching_player(&gn, split, kappa), gn.pi(), t_rounds, seed, consts)?;
    let outcome = match res.outcome {
        GameOutcome::Cut { round, cut } => GameApprox::Cut { round, cut: CutResult::new(g, cut.set, cut.witness)? },
        GameOutcome::Completed { average, lambda2, .. } => {
            let circulation = res.routing.expect("flow player always routes").scaled(1.0 / t_rounds as f64);
            let report = check_circulation_scaled(g, &circulation, 2.0 * kappa);
            if !report.ok() {
                return Err(Error::invariant(format!("game routing infeasible: {report:?}")));
            }
            GameApprox::Certified(GameCertificate {
                circulation,
                demand: average,
                lambda2,
                kappa,
                lower_bound: lambda2 / (4.0 * kappa * g.pi_total()),
                rounds: t_rounds,
            })
        }
    };
    Ok(GameApproxRun { outcome, rounds: res.rounds, regret: res.regret })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, GenKind};
    use crate::graph::phi_brute;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    fn split(pi: &[f64], left: &[usize]) -> Bipartition {
        bipartition(pi, left.to_vec(), CutBranch::Median)
    }

    #[test]
    fn singleton_rule() {
        let c = Constants::default();
        let s = GameState::new(&uniform(2), &c).unwrap();
        let b = cut_player(&s, 0, &c).unwrap();
        assert_eq!((b.left, b.right, b.branch), (vec![0], vec![1], CutBranch::Singleton));
        let s = GameState::new(&[0.1, 0.5, 0.2, 0.2], &c).unwrap();
        assert_eq!(cut_player(&s, 0, &c).unwrap().left, vec![1]);
    }

    #[test]
    fn median_split_balance() {
        let c = Constants::default();
        let s = GameState::new(&uniform(8), &c).unwrap();
        for seed in 0..20 {
            let b = cut_player(&s, seed, &c).unwrap();
            assert_eq!(b.branch, CutBranch::Median);
            assert!(b.pi_left >= 0.5 - 1e-12 && b.pi_right >= 0.25);
            assert_eq!(b.left.len(), 4);
        }
    }

    #[test]
    fn bipartite_degrees() {
        let pi = uniform(4);
        let b = split(&pi, &[0, 1]);
        let d = bipartite_matching_player(&pi, &b);
        assert_eq!(d.get(0, 2), 0.125);
        assert_eq!(d.get(3, 1), 0.125);
        check_matching(&pi, &b, &d).unwrap();
        assert!(d.imbalance().iter().all(|x| x.abs() < 1e-15));

        let pi = [0.5, 0.2, 0.3];
        let b = bipartition(&pi, vec![0], CutBranch::Singleton);
        let d = bipartite_matching_player(&pi, &b);
        assert!((d.get(0, 1) - 0.2).abs() < 1e-15 && (d.get(0, 2) - 0.3).abs() < 1e-15);
        check_matching(&pi, &b, &d).unwrap();
    }

    #[test]
    fn bad_matching_rejected() {
        let pi = uniform(4);
        let b = split(&pi, &[0, 1]);
        let mut d = bipartite_matching_player(&pi, &b);
        d.add(0, 2, 0.01);
        assert!(matches!(check_matching(&pi, &b, &d), Err(Error::Domain(_))));
        let lazy = Circulation::from_arcs(4, [(0, 2, 0.25), (2, 0, 0.25), (1, 3, 0.25), (3, 1, 0.25)]).unwrap();
        check_matching(&pi, &b, &lazy).unwrap();
        let within = Circulation::from_arcs(4, [(0, 1, 0.25), (1, 0, 0.25)]).unwrap();
        assert!(check_matching(&pi, &b, &within).is_err());
    }

    #[test]
    fn single_round_pair() {
        let c = Constants::default();
        let pi = uniform(2);
        let r = run_game(
            |_, s| Ok(MatchingMove::Matching { demand: bipartite_matching_player(&pi, s), routing: None }),
            &pi,
            1,
            0,
            &c,
        )
        .unwrap();
        let GameOutcome::Completed { lambda2, average, .. } = r.outcome else { panic!() };
        assert_eq!(average.get(0, 1), 0.5);
        // One bidirected edge of weight ½ with π = (½, ½).
        assert!((lambda2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lazy_player_is_checked_each_round() {
        let c = Constants::default();
        let pi = uniform(8);
        let r = run_game(
            |_, s| {
                let mut d = Circulation::zero(8);
                for (&i, &j) in s.left.iter().zip(&s.right) {
                    d.add(i, j, 0.125);
                    d.add(j, i, 0.125);
                }
                Ok(MatchingMove::Matching { demand: d, routing: None })
            },
            &pi,
            20,
            3,
            &c,
        )
        .unwrap();
        assert_eq!(r.rounds.len(), 20);
        let broken =
            run_game(|_, _| Ok(MatchingMove::Matching { demand: Circulation::zero(8), routing: None }), &pi, 3, 3, &c);
        assert!(matches!(broken, Err(Error::Domain(_))));
    }

    #[test]
    fn game_builds_expander() {
        let c = Constants::default();
        let pi = uniform(8);
        let t = c.game_rounds(8);
        let r = run_game(
            |_, s| Ok(MatchingMove::Matching { demand: bipartite_matching_player(&pi, s), routing: None }),
            &pi,
            t,
            5,
            &c,
        )
        .unwrap();
        let GameOutcome::Completed { lambda2, .. } = r.outcome else { panic!() };
        assert!(lambda2 >= 0.5 / 8f64.ln(), "{lambda2}");
        assert!(r.regret.unwrap().holds());
        assert!(rounds_csv(&r.rounds).lines().count() == t + 1);
    }

    #[test]
    fn flow_player_cases() {
        let c = Constants::default();
        let disc = DiGraph::with_unit_pi(4, [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]).unwrap();
        let run = approx_via_game(&disc, 1.0, 0, &c).unwrap();
        let GameApprox::Cut { round, cut } = run.outcome else { panic!() };
        assert_eq!((round, cut.value), (0, 0.0));

        let cyc = generate(&GenKind::Cycle { n: 4 }, 0).unwrap().graph.normalized();
        let b = split(cyc.pi(), &[0, 1]);
        let MatchingMove::Matching { demand, .. } = flow_matching_player(&cyc, &b, 1.0).unwrap() else { panic!() };
        check_matching(cyc.pi(), &b, &demand).unwrap();

        let k8 = generate(&GenKind::Complete { n: 8 }, 0).unwrap().graph;
        let run = approx_via_game(&k8, 8.0, 1, &c).unwrap();
        let GameApprox::Certified(cert) = run.outcome else { panic!() };
        let again = normalized_lambda2(&cert.demand.sym_laplacian(), k8.normalized().pi());
        assert!((again - cert.lambda2).abs() < 1e-9);
        assert!(cert.lower_bound <= phi_brute(&k8).unwrap().1 + 1e-12);
    }

    #[test]
    fn planted_cut_found() {
        let c = Constants::default();
        let g = generate(&GenKind::Planted { n1: 8, n2: 8, p: 0.9, q: 0.0, w_cross: 0.05 }, 1).unwrap().graph;
        let kappa = 2.0;
        let run = approx_via_game(&g, kappa, 2, &c).unwrap();
        let GameApprox::Cut { cut, .. } = run.outcome else { panic!("expected a cut") };
        let on_normalized = cut.value * g.pi_total();
        let bound = cut.flow_bound().unwrap();
        assert!(on_normalized <= bound * (1.0 + 1e-6), "{on_normalized} vs {bound}");
    }
}
