use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::flow::network::CapacityScale;
use crate::graph::Circulation;
use crate::DiGraph;

#[derive(Debug, Clone)]
pub struct MaxCostCirculation {
    pub circulation: Circulation<f64>,
    pub objective: f64,
}

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: i128,
    cost: f64,
    rev: usize,
}

struct Residual {
    adj: Vec<Vec<Arc>>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Residual { adj: vec![Vec::new(); n] }
    }

    fn add(&mut self, u: usize, v: usize, cap: i128, cost: f64) -> (usize, usize) {
        let iu = self.adj[u].len();
        let iv = self.adj[v].len();
        self.adj[u].push(Arc { to: v, cap, cost, rev: iv });
        self.adj[v].push(Arc { to: u, cap: 0, cost: -cost, rev: iu });
        (u, iu)
    }

    fn push(&mut self, u: usize, k: usize, amount: i128) {
        self.adj[u][k].cap -= amount;
        let Arc { to, rev, .. } = self.adj[u][k];
        self.adj[to][rev].cap += amount;
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Maximizes `Σ F(e)·d(e)` over circulations with `F ≤ w`. `d` is indexed
/// like `g.edges()`.
///
/// Every positive-cost arc starts saturated; the resulting imbalances are
/// then routed at minimum lost cost by successive shortest paths, which is a
/// min-cost flow with nonnegative residual costs from the start. The answer
/// is certified by checking for a negative residual cycle.
pub fn max_cost_circulation(g: &DiGraph, d: &[f64]) -> Result<MaxCostCirculation> {
    let n = g.n();
    let edges = g.edges();
    if d.len() != edges.len() {
        return Err(Error::domain("cost vector length differs from edge count"));
    }
    if d.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(Error::domain("costs must be finite and nonnegative"));
    }
    let scale = CapacityScale::for_max(edges.iter().map(|e| e.weight).fold(0.0, f64::max) * (n as f64 + 1.0));
    let (s, t) = (n, n + 1);
    let mut res = Residual::new(n + 2);
    let mut handles = Vec::with_capacity(edges.len());
    let mut excess = vec![0i128; n];
    for (e, &c) in edges.iter().zip(d) {
        let cap = scale.to_int(e.weight);
        // Arc cost in the min-cost view is `-c`; a saturated positive arc is
        // stored reversed so all residual costs start nonnegative.
        if c > 0.0 {
            let h = res.add(e.tail, e.head, cap, -c);
            res.push(h.0, h.1, cap);
            excess[e.head] += cap;
            excess[e.tail] -= cap;
            handles.push((h, cap));
        } else {
            handles.push((res.add(e.tail, e.head, cap, 0.0), cap));
        }
    }
    let mut need: i128 = 0;
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            res.add(s, v, x, 0.0);
            need += x;
        } else if x < 0 {
            res.add(v, t, -x, 0.0);
        }
    }
    let sent = successive_shortest_paths(&mut res, s, t, need);
    if sent != need {
        return Err(Error::invariant("imbalance could not be rerouted"));
    }
    let mut circulation = Circulation::zero(n);
    let mut objective = 0.0;
    for ((e, &c), &((u, k), cap)) in edges.iter().zip(d).zip(&handles) {
        let f = cap - res.adj[u][k].cap;
        let x = scale.to_float(f);
        circulation.add(e.tail, e.head, x);
        objective += x * c;
    }
    certify(&res, n, d.iter().fold(0.0, |a: f64, &b| a.max(b)))?;
    Ok(MaxCostCirculation { circulation, objective })
}

/// Convenience wrapper taking the cost as a function of the arc.
pub fn max_cost_circulation_with(g: &DiGraph, d: impl Fn(usize, usize) -> f64) -> Result<MaxCostCirculation> {
    let costs: Vec<f64> = g.edges().iter().map(|e| d(e.tail, e.head)).collect();
    max_cost_circulation(g, &costs)
}

fn successive_shortest_paths(res: &mut Residual, s: usize, t: usize, need: i128) -> i128 {
    let nn = res.adj.len();
    let mut potential = vec![0.0f64; nn];
    let mut sent: i128 = 0;
    while sent < need {
        let mut dist = vec![f64::INFINITY; nn];
        let mut via: Vec<Option<(usize, usize)>> = vec![None; nn];
        dist[s] = 0.0;
        let mut heap = BinaryHeap::from([Entry(0.0, s)]);
        while let Some(Entry(du, u)) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            for (k, a) in res.adj[u].iter().enumerate() {
                if a.cap <= 0 {
                    continue;
                }
                // Round-off can leave reduced costs a hair below zero.
                let reduced = (a.cost + potential[u] - potential[a.to]).max(0.0);
                let nd = du + reduced;
                if nd < dist[a.to] {
                    dist[a.to] = nd;
                    via[a.to] = Some((u, k));
                    heap.push(Entry(nd, a.to));
                }
            }
        }
        if dist[t].is_infinite() {
            break;
        }
        for v in 0..nn {
            if dist[v].is_finite() {
                potential[v] += dist[v];
            }
        }
        let mut amount = need - sent;
        let mut v = t;
        while let Some((u, k)) = via[v] {
            amount = amount.min(res.adj[u][k].cap);
            v = u;
        }
        let mut v = t;
        while let Some((u, k)) = via[v] {
            res.push(u, k, amount);
            v = u;
        }
        sent += amount;
    }
    sent
}

/// Bellman-Ford over the residual arcs among the original vertices.
fn certify(res: &Residual, n: usize, max_cost: f64) -> Result<()> {
    let tol = 1e-9 * max_cost.max(1.0);
    let mut dist = vec![0.0f64; n];
    for round in 0..=n {
        let mut changed = false;
        for u in 0..n {
            for a in &res.adj[u] {
                if a.to < n && a.cap > 0 && dist[u] + a.cost < dist[a.to] - tol {
                    dist[a.to] = dist[u] + a.cost;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(());
        }
        if round == n {
            break;
        }
    }
    Err(Error::invariant("residual graph has an improving cycle"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_circulation, Graph};

    #[test]
    fn dag_gives_zero() {
        let g = Graph::with_unit_pi(4, [(0, 1, 1.0), (1, 2, 1.0), (0, 3, 2.0), (3, 2, 1.0)]).unwrap();
        let r = max_cost_circulation(&g, &[1.0; 4]).unwrap();
        assert_eq!(r.objective, 0.0);
        assert!(r.circulation.is_empty());
    }

    #[test]
    fn unit_triangle() {
        let g = Graph::with_unit_pi(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let r = max_cost_circulation(&g, &[1.0; 3]).unwrap();
        assert!((r.objective - 3.0).abs() < 1e-12);
        assert!(check_circulation(&g, &r.circulation).ok());
    }

    #[test]
    fn four_cycle_mixed_caps() {
        let g = Graph::with_unit_pi(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 2.0)]).unwrap();
        let r = max_cost_circulation(&g, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((r.objective - 2.0).abs() < 1e-12);
        for (_, _, f) in r.circulation.arcs() {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn picks_the_heavier_cycle() {
        // Two cycles share arc 0->1; only the costlier one should carry flow.
        let g = Graph::with_unit_pi(4, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let edges = g.edges().to_vec();
        let d: Vec<f64> = edges.iter().map(|e| if e.head == 2 || e.tail == 2 { 2.0 } else { 1.0 }).collect();
        let r = max_cost_circulation(&g, &d).unwrap();
        assert!((r.objective - 5.0).abs() < 1e-12);
        assert!(check_circulation(&g, &r.circulation).ok());
    }
}
