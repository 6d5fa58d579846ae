//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Sizes are desk scale so every exact oracle stays brute force.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use direx::config::Constants;
use direx::cutmatch::{bipartite_matching_player, check_matching, run_game, GameOutcome, MatchingMove};
use direx::embedding::{approx_gram, default_tau, density_matrix, exact_gram, FeedbackHistory};
use direx::flow::{bidirectional_vertex_flow, lemma_counters, FlowNetwork};
use direx::gen::{generate, GenKind};
use direx::graph::{phi_brute, phi_set, Circulation};
use direx::linalg::{normalized_matrix, projector, spectral_norm, sqrt_pi_unit};
use direx::mmwu::{
    chain_matchings, regret_counters, regret_gap, solve_sparsest, verify_certificate, FractionalMatching,
    SparsestOutcome,
};
use direx::pipeline::sparsest_cut_search;
use direx::reductions::{
    hyper_derived, hyper_phi_brute, hyper_phi_set, phi_exhaustive, psi_brute, psi_set, vertex_split, HyperEdge,
    Hypergraph,
};
use direx::rng::rng_from_seed;
use direx::rounding::{metric_round, metric_round_bound, MetricOracle};
use direx::spectral::{cheeger_envelope, fast_cheeger, lambda2star_solve, with_degree_pi};
use direx::DiGraph;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_pi(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..3.0)).collect()
}

fn strong(n: usize, seed: u64) -> Result<DiGraph, String> {
    generate(&GenKind::Strong { n, p: 0.2 }, seed).map(|i| i.graph).map_err(err)
}

fn flow_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    for k in 0..500 {
        let n = rng.random_range(2..=12);
        let mut net = FlowNetwork::new(n, 0, n - 1).map_err(err)?;
        for _ in 0..rng.random_range(0..=4 * n) {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                net.add_arc(a, b, rng.random_range(0..=100)).map_err(err)?;
            }
        }
        let r = net.max_flow();
        let cap = net.cut_capacity(&r.source_side);
        ensure(r.value == cap, || format!("network {k}: flow {} vs cut {cap}", r.value))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!("500 networks in {t:.2?}"))
}

fn metric_rounding() -> Outcome {
    let consts = Constants::default();
    let budget = 2 * (1e18f64).log2().ceil() as usize;
    let mut rng = rng_from_seed(2);
    let mut worst: f64 = 0.0;
    let mut calls = 0;
    for k in 0..200u64 {
        let n = rng.random_range(3..=12);
        let g = strong(n, k)?.with_pi(random_pi(n, &mut rng)).map_err(err)?;
        let dim = rng.random_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let d = MetricOracle::from_fn(n, 1.0, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).abs()).sum())
            .map_err(err)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let nl = rng.random_range(1..n);
        let nr = rng.random_range(1..=n - nl);
        let (left, right) = (&order[..nl], &order[nl..nl + nr]);
        let r = metric_round(&g, &d, left, right, &consts).map_err(|e| format!("fixture {k}: {e}"))?;
        let bound = metric_round_bound(&g, &d, left, right).map_err(err)?;
        ensure(r.cut.value <= bound * (1.0 + 1e-9), || format!("fixture {k}: phi {} > bound {bound}", r.cut.value))?;
        ensure(r.trace.flow_calls <= budget, || format!("fixture {k}: {} flow calls", r.trace.flow_calls))?;
        worst = worst.max(r.cut.value / bound);
        calls = calls.max(r.trace.flow_calls);
    }
    Ok(format!("200 fixtures, worst phi/bound {worst:.3}, max {calls} flow calls (budget {budget})"))
}

fn flow_lemmas() -> Outcome {
    // Vertex-capacitated flows are not used by the other criteria.
    let mut rng = rng_from_seed(3);
    for k in 0..100u64 {
        let n = rng.random_range(3..=12);
        let g = strong(n, 300 + k)?.with_pi(random_pi(n, &mut rng)).map_err(err)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let nl = rng.random_range(1..n);
        let nr = rng.random_range(1..=n - nl);
        let (left, right) = (&order[..nl], &order[nl..nl + nr]);
        let mass = |s: &[usize]| s.iter().map(|&i| g.pi()[i]).sum::<f64>();
        let r_prime = (mass(right) / mass(left)).max(1.0);
        let beta = rng.random_range(0.1..2.0);
        let kappa = beta * r_prime * rng.random_range(1.1..4.0);
        bidirectional_vertex_flow(&g, left, right, beta, kappa).map_err(|e| format!("vertex fixture {k}: {e}"))?;
    }
    let c = lemma_counters();
    ensure(c.checks() > 0, || "no bidirectional flow was checked".into())?;
    ensure(c.violations() == 0, || format!("{c:?}"))?;
    Ok(format!(
        "{} saturated, {} unsaturated, {} vertex checks; 0 violations",
        c.saturated_checks, c.unsaturated_checks, c.vertex_checks
    ))
}

fn regret() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut min_slack = f64::INFINITY;
    for k in 0..50 {
        let n = rng.random_range(3..=16);
        let t = rng.random_range(1..=256);
        let eta = rng.random_range(0.05..0.9);
        let rho = rng.random_range(0.5..4.0);
        let psd = k % 2 == 0;
        let pi = random_pi(n, &mut rng);
        let p = projector(&sqrt_pi_unit(&pi));
        let mut h = FeedbackHistory::new(n, eta, rho);
        let (mut mats, mut states) = (Vec::with_capacity(t), Vec::with_capacity(t));
        for _ in 0..t {
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let s = if psd { &b * b.transpose() } else { &b + b.transpose() };
            let m = &p * s * &p;
            let m = &m * (rho * rng.random_range(0.1..1.0) / spectral_norm(&m).max(1e-300));
            states.push(density_matrix(&h, &pi).map_err(err)?);
            h.push(&m);
            mats.push(m);
        }
        let r = regret_gap(&mats, &states, eta, rho, &pi).map_err(err)?;
        ensure(r.tally(), || format!("history {k}: {r:?}"))?;
        min_slack = min_slack.min(r.general_slack).min(r.psd_slack.unwrap_or(f64::INFINITY));
    }
    let (checks, violations) = regret_counters();
    ensure(violations == 0, || format!("{violations} of {checks} solver regret checks failed"))?;
    Ok(format!("50 histories, min slack {min_slack:.3e}; {checks} checks in total, 0 violations"))
}

fn certificates() -> Outcome {
    let consts = Constants { max_iterations: Some(400), ..Constants::default() };
    let mut fixtures: Vec<DiGraph> = Vec::new();
    for (k, n) in (4..=14).step_by(2).enumerate() {
        fixtures.push(strong(n, 50 + k as u64)?);
        fixtures.push(generate(&GenKind::Bicycle { n }, 0).map_err(err)?.graph);
    }
    fixtures.push(generate(&GenKind::Hypercube { d: 3 }, 0).map_err(err)?.graph);
    fixtures.push(generate(&GenKind::Complete { n: 8 }, 0).map_err(err)?.graph);
    let mut emitted = 0;
    for (k, g) in fixtures.iter().enumerate() {
        let g = g.normalized();
        let (_, phi) = phi_brute(&g).map_err(err)?;
        for kappa in [0.5, 1.0, 2.0] {
            let run = solve_sparsest(&g, kappa, 0.25, k as u64, &consts).map_err(|e| format!("fixture {k}: {e}"))?;
            if let SparsestOutcome::Certified(c) = run.outcome {
                emitted += 1;
                ensure(verify_certificate(&g, &c).map_err(err)?.ok(), || {
                    format!("fixture {k}: certificate fails verification")
                })?;
                ensure(c.value <= 2.0 * phi + 1e-9, || {
                    format!("fixture {k}: value {} > 2 phi = {}", c.value, 2.0 * phi)
                })?;
            }
        }
    }
    let mut reg = Vec::new();
    for (name, kind) in [("K8", GenKind::Complete { n: 8 }), ("Q3", GenKind::Hypercube { d: 3 })] {
        let g = generate(&kind, 0).map_err(err)?.graph.normalized();
        match solve_sparsest(&g, 1.0, 0.25, 3, &consts).map_err(err)?.outcome {
            SparsestOutcome::Certified(c) => {
                ensure(c.value >= 0.05, || format!("{name} certified only {}", c.value))?;
                reg.push(format!("{name} {:.3}", c.value));
            }
            SparsestOutcome::Cut(c) => return Err(format!("{name} returned a cut with phi {}", c.value)),
        }
    }
    Ok(format!("{emitted} certificates within 2 phi; {}", reg.join(", ")))
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let consts = Constants { max_iterations: Some(300), ..Constants::default() };
    let mut good = 0;
    let mut misses = Vec::new();
    for seed in 0..30u64 {
        let mut rng = rng_from_seed(600 + seed);
        let n1 = rng.random_range(3..=8);
        let n2 = rng.random_range(3..=8);
        let kind = GenKind::Planted {
            n1,
            n2,
            p: rng.random_range(0.5..1.0),
            q: rng.random_range(0.0..0.2),
            w_cross: rng.random_range(0.05..0.5),
        };
        let g = generate(&kind, seed).map_err(err)?.graph;
        let (_, phi) = phi_brute(&g).map_err(err)?;
        let r = sparsest_cut_search(&g, 0.25, seed, &consts).map_err(|e| format!("seed {seed}: {e}"))?;
        if r.cut.value <= 10.0 * phi * (1.0 + 1e-9) {
            good += 1;
        } else {
            misses.push(seed);
        }
    }
    let t = start.elapsed();
    ensure(good >= 27, || format!("{good}/30 within 10x, misses {misses:?}"))?;
    ensure(t < Duration::from_secs(600), || format!("took {t:?}"))?;
    Ok(format!("{good}/30 within 10x phi in {t:.2?}"))
}

fn reweighted_eigenvalue() -> Outcome {
    let consts = Constants::default();
    let g = with_degree_pi(&generate(&GenKind::Cycle { n: 3 }, 0).map_err(err)?.graph).map_err(err)?;
    let s = lambda2star_solve(&g, 0.25, 1000, &consts).map_err(err)?;
    ensure(s.lambda2 >= 0.375 && s.iterations <= 1000, || {
        format!("3-cycle lambda2 {} after {}", s.lambda2, s.iterations)
    })?;
    for seed in 0..5 {
        let dag = generate(&GenKind::Dag { n: 6, p: 0.7 }, seed).map_err(err)?.graph;
        let Ok(dag) = with_degree_pi(&dag) else { continue };
        let d = lambda2star_solve(&dag, 0.25, 200, &consts).map_err(err)?;
        ensure(d.lambda2 == 0.0, || format!("DAG seed {seed}: lambda2 {}", d.lambda2))?;
    }
    Ok(format!("3-cycle lambda2 {:.4} after {} iterations; DAGs 0", s.lambda2, s.iterations))
}

fn cheeger() -> Outcome {
    let consts = Constants::default();
    let mut graphs = Vec::new();
    for n in [3, 4, 6, 8, 12, 16] {
        graphs.push(generate(&GenKind::Cycle { n }, 0).map_err(err)?.graph);
        graphs.push(generate(&GenKind::Bicycle { n }, 0).map_err(err)?.graph);
    }
    for d in 1..=4 {
        graphs.push(generate(&GenKind::Hypercube { d }, 0).map_err(err)?.graph);
    }
    let mut rng = rng_from_seed(8);
    for seed in 0..20 {
        graphs.push(strong(rng.random_range(4..=16), 800 + seed)?);
    }
    let mut worst: f64 = 0.0;
    let mut floored = 0;
    for (k, g) in graphs.iter().enumerate() {
        let g = with_degree_pi(g).map_err(err)?;
        let (_, phi) = phi_brute(&g).map_err(err)?;
        let r = fast_cheeger(&g, k as u64, &consts).map_err(|e| format!("graph {k}: {e}"))?;
        let env = cheeger_envelope(r.lambda, 100.0);
        if r.lambda > (-1.0f64).exp() {
            floored += 1;
        }
        let v = r.cut.value;
        ensure(v * v <= env * (1.0 + 1e-9), || format!("graph {k}: phi^2 {} > {env}", v * v))?;
        ensure(v >= phi * (1.0 - 1e-12), || format!("graph {k}: phi {v} below optimum {phi}"))?;
        worst = worst.max(v * v / env);
    }
    Ok(format!("{} graphs, worst phi^2/envelope {worst:.3}, {floored} with lambda > 1/e", graphs.len()))
}

fn cut_matching() -> Outcome {
    let consts = Constants::default();
    let c = 1.0;
    let mut lines = Vec::new();
    for n in [8usize, 16, 32] {
        let pi = vec![1.0 / n as f64; n];
        let t = consts.game_rounds(n);
        let floor = c / (n as f64).ln();
        let mut good = 0;
        let mut lo = f64::INFINITY;
        for seed in 0..10 {
            let player = |s: &direx::cutmatch::GameState, split: &direx::cutmatch::Bipartition| {
                let demand = bipartite_matching_player(&s.pi, split);
                check_matching(&s.pi, split, &demand)?;
                Ok(MatchingMove::Matching { demand, routing: None })
            };
            let r = run_game(player, &pi, t, seed, &consts).map_err(|e| format!("n={n} seed {seed}: {e}"))?;
            let GameOutcome::Completed { lambda2, .. } = r.outcome else {
                return Err(format!("n={n} seed {seed}: bipartite player cannot cut"));
            };
            lo = lo.min(lambda2);
            if lambda2 >= floor {
                good += 1;
            }
        }
        ensure(good >= 9, || format!("n={n}: {good}/10 seeds reach {floor}"))?;
        lines.push(format!("n={n} T={t} min lambda2 ln n {:.2} ({good}/10)", lo * (n as f64).ln()));
    }
    Ok(format!("c = {c}: {}", lines.join("; ")))
}

fn matrix_exponential() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 1.0;
    for n in [16usize, 32, 64] {
        let mut rng = rng_from_seed(10 + n as u64);
        let raw = random_pi(n, &mut rng);
        let z: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|p| p / z).collect();
        let mut h = FeedbackHistory::new(n, 0.25, 1.0);
        for k in 0..8 {
            let g = strong(n, 1000 + 10 * n as u64 + k)?.with_pi(pi.clone()).map_err(err)?;
            let l = Circulation::from_arcs(n, g.edges().iter().map(|e| (e.tail, e.head, e.weight)))
                .map_err(err)?
                .sym_laplacian();
            let m = normalized_matrix(&l, &pi);
            let m = &m / spectral_norm(&m);
            h.push(&m);
        }
        let exact = exact_gram(&h, &pi, 512).map_err(err)?;
        let tau = default_tau(&pi, 9.0);
        for seed in 0..10 {
            let approx = approx_gram(&h, &pi, 0.2, tau, seed, 4.0).map_err(err)?;
            let (mut good, mut total) = (0, 0);
            for i in 0..n {
                for j in (i + 1)..n {
                    total += 1;
                    let ratio = approx.dist2(i, j) / exact.dist2(i, j);
                    if (0.75..=1.25).contains(&ratio) {
                        good += 1;
                    }
                    worst = worst.max(ratio.max(1.0 / ratio));
                }
            }
            ensure(good as f64 >= 0.95 * total as f64, || format!("n={n} seed {seed}: {good}/{total}"))?;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), || format!("took {t:?}"))?;
    Ok(format!("n in 16, 32, 64 over 10 seeds, worst ratio {worst:.4}, {t:.2?}"))
}

fn chaining() -> Outcome {
    let mut rng = rng_from_seed(11);
    let mut paths = 0;
    for k in 0..100 {
        let n = rng.random_range(2..=10);
        let len = rng.random_range(1..=5);
        let ms: Vec<FractionalMatching> = (0..len)
            .map(|_| {
                let arcs: Vec<_> = (0..rng.random_range(0..=2 * n))
                    .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(1..=8) as f64 / 16.0))
                    .filter(|a| a.0 != a.1)
                    .collect();
                FractionalMatching::from_arcs(arcs)
            })
            .collect();
        let refs: Vec<&FractionalMatching> = ms.iter().collect();
        let ch = chain_matchings(&refs);
        let m: usize = ms.iter().map(|x| x.len()).sum();
        ensure(ch.len() <= m * len, || format!("sequence {k}: {} paths > m l = {}", ch.len(), m * len))?;
        for (t, mt) in ms.iter().enumerate() {
            let mut used = std::collections::BTreeMap::new();
            for (p, w) in &ch.paths {
                ensure(p.len() == len + 1 && *w > 0.0, || format!("sequence {k}: malformed path {p:?}"))?;
                ensure(mt.get(p[t], p[t + 1]) > 0.0, || format!("sequence {k}: hop {t} of {p:?} not in its matching"))?;
                *used.entry((p[t], p[t + 1])).or_insert(0.0) += w;
            }
            for ((i, j), w) in used {
                ensure(w <= mt.get(i, j), || format!("sequence {k}: arc ({i},{j}) overused"))?;
            }
        }
        paths += ch.len();
    }
    Ok(format!("100 sequences, {paths} paths"))
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

fn reductions() -> Outcome {
    let mut rng = rng_from_seed(12);
    let mut worst_v: f64 = 1.0;
    for seed in 0..40u64 {
        let n = 3 + (seed as usize % 10);
        let g = generate(&GenKind::Strong { n, p: 0.15 + 0.01 * seed as f64 }, seed).map_err(err)?.graph;
        let g = if seed % 2 == 0 { g } else { g.with_pi(random_pi(n, &mut rng)).map_err(err)? };
        let (gs, map) = vertex_split(&g).map_err(err)?;
        let (s, psi) = psi_brute(&g).map_err(err)?;
        let (s2, phi) = phi_exhaustive(&gs).map_err(err)?;
        let up = phi_set(&gs, &map.lift_vertex_cut(&g, &gs, &s).map_err(err)?).map_err(err)?;
        let down = psi_set(&g, &map.project_vertex_cut(&g, &s2).map_err(err)?).map_err(err)?;
        let r = ratio(psi, phi).max(ratio(phi, psi)).max(ratio(up, psi)).max(ratio(down, phi));
        ensure(r <= 4.0 + 1e-9, || {
            format!("vertex fixture {seed} (n={n}): psi {psi}, phi {phi}, lifted {up}, projected {down}")
        })?;
        worst_v = worst_v.max(r);
    }
    let mut worst_h: f64 = 1.0;
    for seed in 0..40u64 {
        let n = 3 + (seed as usize % 10);
        let k = rng.random_range(1..=((24 - n) / 2).min(6));
        let mut edges = Vec::new();
        for _ in 0..k {
            let mut pick = || (0..rng.random_range(1..=3.min(n))).map(|_| rng.random_range(0..n)).collect::<Vec<_>>();
            let (heads, tails) = (pick(), pick());
            edges.push(HyperEdge { heads, tails, weight: rng.random_range(0.5..2.0) });
        }
        let pi = if seed % 2 == 0 { vec![1.0; n] } else { random_pi(n, &mut rng) };
        let h = Hypergraph::new(n, edges, pi).map_err(err)?;
        let (gd, map) = hyper_derived(&h).map_err(err)?;
        let (s, hv) = hyper_phi_brute(&h).map_err(err)?;
        let (s2, gv) = phi_exhaustive(&gd).map_err(err)?;
        let up = phi_set(&gd, &map.lift_hyper_cut(&h, &gd, &s).map_err(err)?).map_err(err)?;
        let down = hyper_phi_set(&h, &map.project_hyper_cut(&s2).map_err(err)?).map_err(err)?;
        let r = ratio(hv, gv).max(ratio(gv, hv)).max(ratio(up, hv)).max(ratio(down, gv));
        ensure(r <= 4.0 + 1e-9, || {
            format!("hyper fixture {seed} (n={n}, k={k}): {hv} vs {gv}, lifted {up}, projected {down}")
        })?;
        worst_h = worst_h.max(r);
    }
    Ok(format!("40 vertex fixtures worst ratio {worst_v:.3}; 40 hypergraph fixtures worst ratio {worst_h:.3}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("flow exactness", flow_exactness),
        ("metric rounding bound", metric_rounding),
        ("flow lemma checks", flow_lemmas),
        ("MMWU regret", regret),
        ("dual certificate soundness", certificates),
        ("end-to-end approximation", end_to_end),
        ("reweighted eigenvalue", reweighted_eigenvalue),
        ("fast Cheeger envelope", cheeger),
        ("cut-matching game", cut_matching),
        ("matrix exponential approximation", matrix_exponential),
        ("chaining structure", chaining),
        ("reductions", reductions),
    ];
    // Flow lemma and regret tallies are process-wide, so those two run last.
    let order = [0, 1, 4, 5, 6, 7, 8, 9, 10, 11, 3, 2];
    let mut results = vec![None; criteria.len()];
    for &i in &order {
        let (name, f) = criteria[i];
        let start = Instant::now();
        let r = f();
        results[i] = Some((name, r, start.elapsed()));
    }
    let mut failed = 0;
    for (i, r) in results.into_iter().enumerate() {
        let (name, r, t) = r.expect("every criterion ran");
        match r {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{t:.1?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{t:.1?}]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
