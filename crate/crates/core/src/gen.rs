//! Deterministic instance generators. All use `π ≡ 1` and unit weights
//! unless stated.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::DiGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GenKind {
    /// Directed cycle `0 → 1 → … → n−1 → 0`.
    Cycle { n: usize },
    /// Cycle with both orientations of every edge.
    Bicycle { n: usize },
    /// Bidirected `d`-dimensional hypercube.
    Hypercube { d: usize },
    /// Bidirected complete graph.
    Complete { n: usize },
    /// Two blocks of sizes `n1`, `n2`. Inside a block each ordered pair is an
    /// arc with probability `p` (plus a bidirected spanning cycle); each
    /// ordered cross pair with probability `q`, weight `w_cross`. At least
    /// one cross arc runs each way.
    Planted { n1: usize, n2: usize, p: f64, q: f64, w_cross: f64 },
    /// Arcs `i → j` for `i < j` with probability `p`.
    Dag { n: usize, p: f64 },
    /// A random directed Hamiltonian cycle plus each other ordered pair with
    /// probability `p`; weights uniform in `[1, 3)`.
    Strong { n: usize, p: f64 },
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: DiGraph,
    /// The planted side, when the generator has one.
    pub planted: Option<Vec<usize>>,
}

const MAX_N: usize = 1 << 16;

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_N {
        return Err(Error::domain(format!("size {n} outside {min}..={MAX_N}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn bidirected(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<DiGraph> {
    let arcs: Vec<_> = pairs.into_iter().flat_map(|(i, j)| [(i, j, 1.0), (j, i, 1.0)]).collect();
    DiGraph::with_unit_pi(n, arcs)
}

pub fn generate(kind: &GenKind, seed: u64) -> Result<Instance> {
    let mut rng = rng_from_seed(seed);
    let graph = match *kind {
        GenKind::Cycle { n } => {
            check_n(n, 2)?;
            DiGraph::with_unit_pi(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))?
        }
        GenKind::Bicycle { n } => {
            check_n(n, 2)?;
            let pairs: Vec<_> = if n == 2 { vec![(0, 1)] } else { (0..n).map(|i| (i, (i + 1) % n)).collect() };
            bidirected(n, pairs)?
        }
        GenKind::Hypercube { d } => {
            if !(1..=16).contains(&d) {
                return Err(Error::domain("hypercube dimension must lie in 1..=16"));
            }
            let n = 1usize << d;
            bidirected(n, (0..n).flat_map(|i| (0..d).map(move |b| (i, i ^ (1 << b))).filter(|&(i, j)| i < j)))?
        }
        GenKind::Complete { n } => {
            check_n(n, 2)?;
            bidirected(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))?
        }
        GenKind::Planted { n1, n2, p, q, w_cross } => {
            check_n(n1, 1)?;
            check_n(n2, 1)?;
            check_n(n1 + n2, 2)?;
            check_p(p)?;
            check_p(q)?;
            if !(w_cross > 0.0 && w_cross.is_finite()) {
                return Err(Error::domain("w_cross must be positive"));
            }
            let n = n1 + n2;
            let block = |i: usize| i < n1;
            let mut arcs = Vec::new();
            for (lo, len) in [(0, n1), (n1, n2)] {
                if len >= 2 {
                    for k in 0..len {
                        let (a, b) = (lo + k, lo + (k + 1) % len);
                        if a != b {
                            arcs.push((a, b, 1.0));
                            arcs.push((b, a, 1.0));
                        }
                    }
                }
            }
            let mut cross_out = false;
            let mut cross_in = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if block(i) == block(j) {
                        if rng.random_bool(p) {
                            arcs.push((i, j, 1.0));
                        }
                    } else if rng.random_bool(q) {
                        arcs.push((i, j, w_cross));
                        if block(i) {
                            cross_out = true;
                        } else {
                            cross_in = true;
                        }
                    }
                }
            }
            if !cross_out {
                arcs.push((rng.random_range(0..n1), n1 + rng.random_range(0..n2), w_cross));
            }
            if !cross_in {
                arcs.push((n1 + rng.random_range(0..n2), rng.random_range(0..n1), w_cross));
            }
            let graph = DiGraph::with_unit_pi(n, arcs)?;
            return Ok(Instance { graph, planted: Some((0..n1).collect()) });
        }
        GenKind::Dag { n, p } => {
            check_n(n, 2)?;
            check_p(p)?;
            let mut arcs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(p) {
                        arcs.push((i, j, 1.0));
                    }
                }
            }
            DiGraph::with_unit_pi(n, arcs)?
        }
        GenKind::Strong { n, p } => {
            check_n(n, 2)?;
            check_p(p)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
            for k in 0..n {
                arcs.push((order[k], order[(k + 1) % n], rng.random_range(1.0..3.0)));
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random_bool(p) {
                        arcs.push((i, j, rng.random_range(1.0..3.0)));
                    }
                }
            }
            DiGraph::with_unit_pi(n, arcs)?
        }
    };
    Ok(Instance { graph, planted: None })
}
