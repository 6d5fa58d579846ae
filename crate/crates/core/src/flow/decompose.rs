use std::collections::{BTreeMap, VecDeque};
use std::ops::Sub;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowPath {
    pub nodes: Vec<usize>,
    pub weight: f64,
}

impl FlowPath {
    pub fn is_cycle(&self) -> bool {
        self.nodes.len() > 1 && self.nodes.first() == self.nodes.last()
    }

    pub fn first(&self) -> usize {
        self.nodes[0]
    }

    pub fn last(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PathDecomposition {
    pub paths: Vec<FlowPath>,
}

impl PathDecomposition {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Per-arc sums `Σ_{p∋e} f_p`.
    pub fn reconstruct(&self) -> BTreeMap<(usize, usize), f64> {
        let mut out = BTreeMap::new();
        for p in &self.paths {
            for hop in p.nodes.windows(2) {
                *out.entry((hop[0], hop[1])).or_insert(0.0) += p.weight;
            }
        }
        out
    }

    /// Largest absolute gap between the reconstruction and `arcs`.
    pub fn reconstruction_error(&self, arcs: &[(usize, usize, f64)]) -> f64 {
        let mut want: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(u, v, f) in arcs {
            *want.entry((u, v)).or_insert(0.0) += f;
        }
        let got = self.reconstruct();
        let mut worst: f64 = 0.0;
        for (k, &f) in &want {
            worst = worst.max((f - got.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, &f) in &got {
            if !want.contains_key(k) {
                worst = worst.max(f.abs());
            }
        }
        worst
    }
}

/// Decomposes a flow into weighted paths and cycles. With `terminals =
/// Some((s, t))` the flow is an s-t flow and s-t paths are peeled first;
/// otherwise it must be a circulation. Each peel zeroes at least one arc, so
/// at most `m` pieces come out.
pub fn decompose_flow(
    n: usize,
    arcs: &[(usize, usize, f64)],
    terminals: Option<(usize, usize)>,
    tol_conservation: f64,
) -> Result<PathDecomposition> {
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(u, v, f) in arcs {
        if u >= n || v >= n {
            return Err(Error::domain(format!("arc ({u},{v}) out of range")));
        }
        if !(f >= 0.0) || !f.is_finite() {
            return Err(Error::domain(format!("flow on ({u},{v}) must be finite and nonnegative")));
        }
        if f > 0.0 && u != v {
            *merged.entry((u, v)).or_insert(0.0) += f;
        }
    }
    let total: f64 = merged.values().sum();
    let mut bal = vec![0.0; n];
    for (&(u, v), &f) in &merged {
        bal[u] += f;
        bal[v] -= f;
    }
    let slack = tol_conservation * total.max(f64::MIN_POSITIVE);
    for (i, &b) in bal.iter().enumerate() {
        let terminal = terminals.is_some_and(|(s, t)| i == s || i == t);
        if !terminal && b.abs() > slack {
            return Err(Error::domain(format!("conservation violated at {i} by {b:e}")));
        }
    }
    if let Some((s, t)) = terminals {
        if (bal[s] + bal[t]).abs() > slack || bal[s] < -slack {
            return Err(Error::domain("source outflow does not match sink inflow"));
        }
    }
    let eps = 1e-15 * merged.values().fold(0.0f64, |a, &b| a.max(b));
    let pieces = peel(n, merged, terminals, eps);
    Ok(PathDecomposition { paths: pieces.into_iter().map(|(nodes, weight)| FlowPath { nodes, weight }).collect() })
}

/// Exact decomposition of an integer flow, assumed conserving.
pub(crate) fn decompose_exact(
    n: usize,
    arcs: impl IntoIterator<Item = (usize, usize, i128)>,
    terminals: Option<(usize, usize)>,
) -> Vec<(Vec<usize>, i128)> {
    let mut merged: BTreeMap<(usize, usize), i128> = BTreeMap::new();
    for (u, v, f) in arcs {
        if f > 0 && u != v {
            *merged.entry((u, v)).or_insert(0) += f;
        }
    }
    peel(n, merged, terminals, 0)
}

fn peel<T>(
    n: usize,
    merged: BTreeMap<(usize, usize), T>,
    terminals: Option<(usize, usize)>,
    eps: T,
) -> Vec<(Vec<usize>, T)>
where
    T: Copy + PartialOrd + Sub<Output = T> + Zero,
{
    let keys: Vec<(usize, usize)> = merged.keys().copied().collect();
    let mut flow: Vec<T> = merged.values().copied().collect();
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &(u, _)) in keys.iter().enumerate() {
        out_arcs[u].push(k);
    }
    let mut pieces = Vec::new();

    let take = |arc_ids: &[usize], flow: &mut Vec<T>| -> (Vec<usize>, T) {
        let mut b = flow[arc_ids[0]];
        for &k in arc_ids {
            if flow[k] < b {
                b = flow[k];
            }
        }
        for &k in arc_ids {
            flow[k] = flow[k] - b;
            if !(flow[k] > eps) {
                flow[k] = T::zero();
            }
        }
        let mut nodes = vec![keys[arc_ids[0]].0];
        nodes.extend(arc_ids.iter().map(|&k| keys[k].1));
        (nodes, b)
    };

    if let Some((s, t)) = terminals {
        loop {
            let mut via: Vec<Option<usize>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                if u == t {
                    break;
                }
                for &k in &out_arcs[u] {
                    let v = keys[k].1;
                    if flow[k] > eps && !seen[v] {
                        seen[v] = true;
                        via[v] = Some(k);
                        q.push_back(v);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut ids = Vec::new();
            let mut v = t;
            while v != s {
                let k = via[v].expect("bfs tree");
                ids.push(k);
                v = keys[k].0;
            }
            ids.reverse();
            pieces.push(take(&ids, &mut flow));
        }
    }

    let mut cursor = vec![0usize; n];
    for start in 0..keys.len() {
        while flow[start] > eps {
            let mut ids = vec![start];
            let mut pos: BTreeMap<usize, usize> = BTreeMap::from([(keys[start].0, 0)]);
            let mut u = keys[start].1;
            loop {
                if let Some(&at) = pos.get(&u) {
                    let cycle: Vec<usize> = ids[at..].to_vec();
                    pieces.push(take(&cycle, &mut flow));
                    break;
                }
                pos.insert(u, ids.len());
                while cursor[u] < out_arcs[u].len() && !(flow[out_arcs[u][cursor[u]]] > eps) {
                    cursor[u] += 1;
                }
                if cursor[u] == out_arcs[u].len() {
                    // Residue below tolerance: drop the arc that led here.
                    let last = *ids.last().expect("nonempty walk");
                    flow[last] = T::zero();
                    break;
                }
                let k = out_arcs[u][cursor[u]];
                ids.push(k);
                u = keys[k].1;
            }
        }
    }
    pieces
}
