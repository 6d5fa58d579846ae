//! Two max-flows between `L` and `R`, one in each direction, with the source
//! and sink arcs sized by `β·π`. Either both saturate and their average is a
//! circulation of congestion `κ`, or the residual graph of the failing one
//! gives a sparse cut.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::decompose::decompose_exact;
use crate::flow::network::{CapacityScale, FlowNetwork};
use crate::graph::{members, Circulation, CutResult, FlowDirection, SymLaplacian, Witness};
use crate::DiGraph;

static SATURATED_CHECKS: AtomicU64 = AtomicU64::new(0);
static SATURATED_VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static UNSATURATED_CHECKS: AtomicU64 = AtomicU64::new(0);
static UNSATURATED_VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static VERTEX_CHECKS: AtomicU64 = AtomicU64::new(0);
static VERTEX_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// Process-wide tallies of the post-hoc flow lemma checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LemmaCounters {
    pub saturated_checks: u64,
    pub saturated_violations: u64,
    pub unsaturated_checks: u64,
    pub unsaturated_violations: u64,
    pub vertex_checks: u64,
    pub vertex_violations: u64,
}

impl LemmaCounters {
    pub fn checks(&self) -> u64 {
        self.saturated_checks + self.unsaturated_checks + self.vertex_checks
    }

    pub fn violations(&self) -> u64 {
        self.saturated_violations + self.unsaturated_violations + self.vertex_violations
    }
}

pub fn lemma_counters() -> LemmaCounters {
    LemmaCounters {
        saturated_checks: SATURATED_CHECKS.load(Ordering::Relaxed),
        saturated_violations: SATURATED_VIOLATIONS.load(Ordering::Relaxed),
        unsaturated_checks: UNSATURATED_CHECKS.load(Ordering::Relaxed),
        unsaturated_violations: UNSATURATED_VIOLATIONS.load(Ordering::Relaxed),
        vertex_checks: VERTEX_CHECKS.load(Ordering::Relaxed),
        vertex_violations: VERTEX_VIOLATIONS.load(Ordering::Relaxed),
    }
}

fn tally(checks: &AtomicU64, violations: &AtomicU64, ok: bool) {
    checks.fetch_add(1, Ordering::Relaxed);
    if !ok {
        violations.fetch_add(1, Ordering::Relaxed);
    }
}

/// A flow path restricted to graph vertices, carrying its full s-t weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TerminalPath {
    pub nodes: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturatedFlow {
    /// `½(f⃗ + f⃖)` on the arcs of `G`, congestion `κ`.
    pub circulation: Circulation<f64>,
    /// Paths of `f⃗`, each from `L` to `R`.
    pub forward_paths: Vec<TerminalPath>,
    /// Paths of `f⃖` as traversed, each from `R` to `L`.
    pub backward_paths: Vec<TerminalPath>,
    pub beta: f64,
    pub kappa: f64,
    pub r: f64,
    pub r_prime: f64,
}

impl SaturatedFlow {
    /// Demand graph `½(D⃗ + D⃖)` of the path decompositions, as arcs.
    pub fn demand(&self) -> Circulation<f64> {
        let mut d = Circulation::zero(self.circulation.n());
        for p in self.forward_paths.iter().chain(&self.backward_paths) {
            let (a, b) = (p.nodes[0], p.nodes[p.nodes.len() - 1]);
            if a != b {
                d.add(a, b, 0.5 * p.weight);
            }
        }
        d
    }

    pub fn demand_laplacian(&self) -> SymLaplacian<f64> {
        self.demand().sym_laplacian()
    }

    /// Checks `β ≤ Σ F·d / Σ_{i∈R} π(i)·d(i, L)` for the metric `d`.
    pub fn check_metric_bound(
        &self,
        g: &DiGraph,
        right: &[usize],
        left: &[usize],
        d: impl Fn(usize, usize) -> f64,
    ) -> Result<f64> {
        let num: f64 = self.circulation.arcs().map(|(i, j, f)| f * d(i, j)).sum();
        let den: f64 =
            right.iter().map(|&j| g.pi()[j] * left.iter().map(|&i| d(j, i)).fold(f64::INFINITY, f64::min)).sum();
        if den <= 0.0 {
            return Err(Error::domain("metric gives zero distance from R to L"));
        }
        let ratio = num / den;
        let ok = self.beta <= ratio * (1.0 + 1e-9) + 1e-12;
        tally(&SATURATED_CHECKS, &SATURATED_VIOLATIONS, ok);
        if !ok {
            return Err(Error::invariant(format!("saturated bound failed: beta {} > {ratio}", self.beta)));
        }
        Ok(ratio)
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum BidirOutcome {
    Saturated(SaturatedFlow),
    Unsaturated(CutResult),
}

#[derive(Debug, Clone, Serialize)]
pub enum VertexOutcome {
    Saturated(SaturatedFlow),
    Unsaturated { set: Vec<usize>, psi: f64, bound: f64 },
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Edge,
    Vertex,
}

struct Setup {
    r: f64,
    r_prime: f64,
    in_left: Vec<bool>,
    in_right: Vec<bool>,
}

fn validate(g: &DiGraph, left: &[usize], right: &[usize], beta: f64, kappa: f64) -> Result<Setup> {
    let n = g.n();
    if left.is_empty() || right.is_empty() {
        return Err(Error::domain("L and R must be nonempty"));
    }
    if !(beta > 0.0 && beta.is_finite()) || !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain("beta and kappa must be positive and finite"));
    }
    let mut in_left = vec![false; n];
    let mut in_right = vec![false; n];
    for &i in left {
        if i >= n {
            return Err(Error::domain(format!("vertex {i} out of range")));
        }
        in_left[i] = true;
    }
    for &j in right {
        if j >= n {
            return Err(Error::domain(format!("vertex {j} out of range")));
        }
        if in_left[j] {
            return Err(Error::domain(format!("L and R overlap at {j}")));
        }
        in_right[j] = true;
    }
    let pi = g.pi();
    let pl: f64 = (0..n).filter(|&i| in_left[i]).map(|i| pi[i]).sum();
    let pr: f64 = (0..n).filter(|&i| in_right[i]).map(|i| pi[i]).sum();
    let r = pr / pl;
    Ok(Setup { r, r_prime: r.max(1.0), in_left, in_right })
}

struct Built {
    net: FlowNetwork,
    graph_arcs: Vec<(usize, usize, usize)>,
    target: i128,
    scale: CapacityScale,
}

/// Node layout: edge mode uses `0..n` then `s = n, t = n+1`; vertex mode
/// puts in-copies at `0..n`, out-copies at `n..2n`, then `s, t`.
fn build(g: &DiGraph, setup: &Setup, beta: f64, kappa: f64, mode: Mode, forward: bool) -> Result<Built> {
    let n = g.n();
    let pi = g.pi();
    let base = if mode == Mode::Vertex { 2 * n } else { n };
    let (s, t) = (base, base + 1);
    let max_cap = match mode {
        Mode::Edge => g.edges().iter().map(|e| kappa * e.weight).fold(0.0, f64::max),
        Mode::Vertex => pi.iter().map(|&p| kappa * p).fold(0.0, f64::max),
    }
    .max(pi.iter().map(|&p| setup.r.max(1.0) * beta * p).fold(0.0, f64::max));
    let scale = CapacityScale::for_max(max_cap);
    let (flow_src, flow_dst) = if forward { (s, t) } else { (t, s) };
    let mut net = FlowNetwork::new(base + 2, flow_src, flow_dst)?;
    let entry = |i: usize| i;
    let exit = |i: usize| if mode == Mode::Vertex { n + i } else { i };
    let mut finite_total: i128 = 0;
    let mut graph_arcs = Vec::new();
    for i in 0..n {
        if setup.in_left[i] {
            let c = scale.to_int(setup.r * beta * pi[i]);
            finite_total += c;
            if forward {
                net.add_arc(s, entry(i), c)?;
            } else {
                net.add_arc(exit(i), s, c)?;
            }
        }
        if setup.in_right[i] {
            let c = scale.to_int(beta * pi[i]);
            finite_total += c;
            if forward {
                net.add_arc(exit(i), t, c)?;
            } else {
                net.add_arc(t, entry(i), c)?;
            }
        }
    }
    match mode {
        Mode::Edge => {
            for e in g.edges() {
                let k = net.add_arc(e.tail, e.head, scale.to_int(kappa * e.weight))?;
                graph_arcs.push((k, e.tail, e.head));
            }
        }
        Mode::Vertex => {
            for (i, &p) in pi.iter().enumerate() {
                let c = scale.to_int(kappa * p);
                finite_total += c;
                net.add_arc(i, n + i, c)?;
            }
            let infinite = finite_total + 1;
            for e in g.edges() {
                let k = net.add_arc(n + e.tail, e.head, infinite)?;
                graph_arcs.push((k, e.tail, e.head));
            }
        }
    }
    let pr: f64 = (0..n).filter(|&j| setup.in_right[j]).map(|j| pi[j]).sum();
    let target = scale.to_int(beta * pr * (1.0 - 1e-9));
    Ok(Built { net, graph_arcs, target, scale })
}

fn strip_terminals(nodes: &[usize], n: usize, mode: Mode) -> Vec<usize> {
    let base = if mode == Mode::Vertex { 2 * n } else { n };
    let mut out: Vec<usize> = Vec::new();
    for &x in nodes {
        if x >= base {
            continue;
        }
        let v = x % n;
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

enum Half {
    Saturated { flow: Vec<(usize, usize, f64)>, paths: Vec<TerminalPath> },
    Cut(Vec<usize>),
}

fn run_half(g: &DiGraph, setup: &Setup, beta: f64, kappa: f64, mode: Mode, forward: bool) -> Result<Half> {
    let n = g.n();
    let b = build(g, setup, beta, kappa, mode, forward)?;
    let res = b.net.max_flow();
    if res.value < b.target {
        let side: Vec<bool> =
            (0..n).map(|i| if mode == Mode::Vertex { res.source_side[n + i] } else { res.source_side[i] }).collect();
        return Ok(Half::Cut(members(&side)));
    }
    let flow = b.graph_arcs.iter().map(|&(k, u, v)| (u, v, b.scale.to_float(res.flow[k]))).collect();
    let arcs = b.net.arcs();
    let pieces = decompose_exact(
        b.net.node_count(),
        arcs.iter().zip(&res.flow).map(|(&(u, v, _), &f)| (u, v, f)),
        Some((b.net.source(), b.net.sink())),
    );
    let mut paths = Vec::new();
    for (nodes, w) in pieces {
        let is_st = nodes.first() == Some(&b.net.source()) && nodes.last() == Some(&b.net.sink());
        if !is_st {
            continue;
        }
        paths.push(TerminalPath { nodes: strip_terminals(&nodes, n, mode), weight: b.scale.to_float(w) });
    }
    Ok(Half::Saturated { flow, paths })
}

fn combine(g: &DiGraph, setup: &Setup, beta: f64, kappa: f64, fwd: Half, bwd: Half) -> SaturatedFlow {
    let (Half::Saturated { flow: ff, paths: fp }, Half::Saturated { flow: bf, paths: bp }) = (fwd, bwd) else {
        unreachable!("combine called on a cut")
    };
    let mut circulation = Circulation::zero(g.n());
    for (u, v, f) in ff.into_iter().chain(bf) {
        circulation.add(u, v, 0.5 * f);
    }
    SaturatedFlow {
        circulation,
        forward_paths: fp,
        backward_paths: bp,
        beta,
        kappa,
        r: setup.r,
        r_prime: setup.r_prime,
    }
}

/// Bidirectional max-flow between disjoint `L` and `R` with edge capacities
/// `κ·w`. An unsaturated cut is checked against `φ_π(S) ≤ β·r′/κ`.
pub fn bidirectional_max_flow(
    g: &DiGraph,
    left: &[usize],
    right: &[usize],
    beta: f64,
    kappa: f64,
) -> Result<BidirOutcome> {
    let setup = validate(g, left, right, beta, kappa)?;
    let mut halves = Vec::with_capacity(2);
    for (forward, direction) in [(true, FlowDirection::Forward), (false, FlowDirection::Backward)] {
        match run_half(g, &setup, beta, kappa, Mode::Edge, forward)? {
            Half::Cut(set) => {
                let witness = Witness::MinCut { beta, kappa, r_prime: setup.r_prime, direction };
                let cut = CutResult::new(g, set, witness)?;
                let bound = beta * setup.r_prime / kappa;
                let ok = cut.value <= bound * (1.0 + 1e-9);
                tally(&UNSATURATED_CHECKS, &UNSATURATED_VIOLATIONS, ok);
                if !ok {
                    return Err(Error::invariant(format!("unsaturated cut {} exceeds {bound}", cut.value)));
                }
                return Ok(BidirOutcome::Unsaturated(cut));
            }
            h => halves.push(h),
        }
    }
    let bwd = halves.pop().expect("two halves");
    let fwd = halves.pop().expect("two halves");
    Ok(BidirOutcome::Saturated(combine(g, &setup, beta, kappa, fwd, bwd)))
}

/// `(κ/(β·r′) − 1)^{-1}`, the vertex-expansion bound of an unsaturated cut.
pub fn vertex_unsaturated_bound(beta: f64, kappa: f64, r: f64) -> Result<f64> {
    let rp = r.max(1.0);
    if !(kappa > beta * rp) {
        return Err(Error::domain(format!("need kappa > beta*r' (kappa {kappa}, beta*r' {})", beta * rp)));
    }
    Ok(1.0 / (kappa / (beta * rp) - 1.0))
}

/// The same two flows with vertex capacities `κ·π(i)` and uncapacitated
/// arcs. Requires `κ > β·r′` so the cut bound is meaningful.
pub fn bidirectional_vertex_flow(
    g: &DiGraph,
    left: &[usize],
    right: &[usize],
    beta: f64,
    kappa: f64,
) -> Result<VertexOutcome> {
    let setup = validate(g, left, right, beta, kappa)?;
    let bound = vertex_unsaturated_bound(beta, kappa, setup.r)?;
    let mut halves = Vec::with_capacity(2);
    for forward in [true, false] {
        match run_half(g, &setup, beta, kappa, Mode::Vertex, forward)? {
            Half::Cut(set) => {
                let psi = crate::reductions::psi_set(g, &set)?;
                let ok = psi <= bound * (1.0 + 1e-9);
                tally(&VERTEX_CHECKS, &VERTEX_VIOLATIONS, ok);
                if !ok {
                    return Err(Error::invariant(format!("vertex cut psi {psi} exceeds {bound}")));
                }
                return Ok(VertexOutcome::Unsaturated { set, psi, bound });
            }
            h => halves.push(h),
        }
    }
    let bwd = halves.pop().expect("two halves");
    let fwd = halves.pop().expect("two halves");
    Ok(VertexOutcome::Saturated(combine(g, &setup, beta, kappa, fwd, bwd)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_circulation_scaled, Graph};

    fn cycle4() -> DiGraph {
        Graph::with_unit_pi(4, (0..4).map(|i| (i, (i + 1) % 4, 1.0))).unwrap()
    }

    #[test]
    fn four_cycle_saturates_with_half_flow() {
        let g = cycle4();
        let BidirOutcome::Saturated(s) = bidirectional_max_flow(&g, &[0], &[2], 1.0, 1.0).unwrap() else {
            panic!("expected saturation")
        };
        for (i, j, f) in s.circulation.arcs() {
            assert_eq!(j, (i + 1) % 4);
            assert!((f - 0.5).abs() < 1e-12);
        }
        assert_eq!(s.circulation.arcs().count(), 4);
        assert!(check_circulation_scaled(&g, &s.circulation, 1.0).ok());
        assert_eq!(s.forward_paths[0].nodes, vec![0, 1, 2]);
        assert_eq!(s.backward_paths[0].nodes, vec![2, 3, 0]);
        let d = s.demand();
        assert!((d.get(0, 2) - 0.5).abs() < 1e-12 && (d.get(2, 0) - 0.5).abs() < 1e-12);
        s.check_metric_bound(&g, &[2], &[0], |a, b| (a as f64 - b as f64).abs()).unwrap();
    }

    #[test]
    fn four_cycle_large_beta_cuts() {
        let g = cycle4();
        let BidirOutcome::Unsaturated(c) = bidirectional_max_flow(&g, &[0], &[2], 4.0, 1.0).unwrap() else {
            panic!("expected a cut")
        };
        assert!(c.value <= 4.0);
        assert_eq!(c.recompute(&g).unwrap(), c.value);
    }

    #[test]
    fn edgeless_gives_zero_cut() {
        let g = Graph::<f64>::with_unit_pi(2, []).unwrap();
        let BidirOutcome::Unsaturated(c) = bidirectional_max_flow(&g, &[0], &[1], 1.0, 1.0).unwrap() else {
            panic!("expected a cut")
        };
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn overlap_is_domain_error() {
        assert!(matches!(bidirectional_max_flow(&cycle4(), &[0, 1], &[1], 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn vertex_bound_formula() {
        assert!((vertex_unsaturated_bound(1.0, 4.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((vertex_unsaturated_bound(1.5, 6.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(vertex_unsaturated_bound(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn vertex_flow_on_star() {
        let mut e = vec![];
        for leaf in 1..4 {
            e.push((0, leaf, 1.0));
            e.push((leaf, 0, 1.0));
        }
        let g = Graph::with_unit_pi(4, e).unwrap();
        match bidirectional_vertex_flow(&g, &[1], &[2, 3], 1.0, 3.0).unwrap() {
            VertexOutcome::Unsaturated { psi, bound, .. } => assert!(psi <= bound),
            VertexOutcome::Saturated(s) => {
                assert!(check_circulation_scaled(&g, &s.circulation, f64::INFINITY).conservation_ok);
            }
        }
    }
}
