//! Gray-code enumeration of `φ_π` for graphs slightly beyond the generic
//! brute-force limit, as produced by the reductions.

use crate::error::{Error, Result};
use crate::graph::phi_set;
use crate::DiGraph;

pub const EXHAUSTIVE_MAX_N: usize = 26;

/// Exact `φ_π(G)` for `n ≤ 26`. Visits every set containing vertex 0 in
/// Gray-code order, updating boundary weights and mass per flipped vertex;
/// the minimizer's value is then recomputed from scratch.
pub fn phi_exhaustive(g: &DiGraph) -> Result<(Vec<usize>, f64)> {
    let n = g.n();
    if n < 2 {
        return Err(Error::domain("need at least two vertices"));
    }
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::Budget(format!("exhaustive search refused for n = {n} > {EXHAUSTIVE_MAX_N}")));
    }
    let mut outs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut ins: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in g.edges() {
        outs[e.tail].push((e.head, e.weight));
        ins[e.head].push((e.tail, e.weight));
    }
    let pi = g.pi();
    let total = g.pi_total();
    let mut inside = vec![false; n];
    let (mut out_w, mut in_w, mut mass) = (0.0f64, 0.0f64, 0.0f64);
    let flip = |v: usize, inside: &mut Vec<bool>, out_w: &mut f64, in_w: &mut f64, mass: &mut f64| {
        let joining = !inside[v];
        let s = if joining { 1.0 } else { -1.0 };
        for &(u, w) in &outs[v] {
            if u == v {
                continue;
            }
            if inside[u] {
                *in_w -= s * w;
            } else {
                *out_w += s * w;
            }
        }
        for &(u, w) in &ins[v] {
            if u == v {
                continue;
            }
            if inside[u] {
                *out_w -= s * w;
            } else {
                *in_w += s * w;
            }
        }
        *mass += s * pi[v];
        inside[v] = joining;
    };
    flip(0, &mut inside, &mut out_w, &mut in_w, &mut mass);
    let rest = n - 1;
    let mut best_val = f64::INFINITY;
    let mut best: Vec<bool> = Vec::new();
    // Gray code over vertices 1..n; code k = 0 is {0} alone, the last code is V.
    for k in 0u64..(1u64 << rest) {
        if k > 0 {
            let v = 1 + k.trailing_zeros() as usize;
            flip(v, &mut inside, &mut out_w, &mut in_w, &mut mass);
        }
        // Gray code k has popcount(k ^ k>>1) members besides vertex 0.
        if (k ^ (k >> 1)).count_ones() as usize == rest {
            continue;
        }
        let den = mass.min(total - mass);
        let val = out_w.min(in_w).max(0.0) / den;
        if val < best_val {
            best_val = val;
            best = inside.clone();
        }
    }
    let set: Vec<usize> = (0..n).filter(|&i| best[i]).collect();
    let value = phi_set(g, &set)?;
    Ok((set, value))
}
