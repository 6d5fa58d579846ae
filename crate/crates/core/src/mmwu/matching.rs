use std::collections::BTreeMap;

use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::flow::{bidirectional_max_flow, BidirOutcome, SaturatedFlow};
use crate::graph::CutResult;
use crate::DiGraph;

/// An embedding of a vertex subset `U`, addressable by graph vertex.
#[derive(Debug, Clone)]
pub struct SubsetEmbedding {
    pub emb: Embedding,
    pub subset: Vec<usize>,
    local: Vec<Option<usize>>,
}

impl SubsetEmbedding {
    pub fn new(emb: Embedding, subset: Vec<usize>, n: usize) -> Result<Self> {
        if emb.n() != subset.len() {
            return Err(Error::domain("subset and embedding sizes differ"));
        }
        let mut local = vec![None; n];
        for (k, &v) in subset.iter().enumerate() {
            if v >= n {
                return Err(Error::domain(format!("vertex {v} out of range")));
            }
            local[v] = Some(k);
        }
        Ok(SubsetEmbedding { emb, subset, local })
    }

    /// The whole vertex set.
    pub fn full(emb: Embedding) -> Self {
        let n = emb.n();
        SubsetEmbedding { emb, subset: (0..n).collect(), local: (0..n).map(Some).collect() }
    }

    pub fn vector(&self, v: usize) -> Option<&[f64]> {
        self.local.get(v).copied().flatten().map(|k| self.emb.row(k))
    }
}

/// Weighted arcs where each vertex is only a tail or only a head.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FractionalMatching {
    pub arcs: BTreeMap<(usize, usize), f64>,
}

impl FractionalMatching {
    pub fn from_arcs(arcs: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut m = FractionalMatching::default();
        for (i, j, w) in arcs {
            m.add(i, j, w);
        }
        m
    }

    pub fn add(&mut self, i: usize, j: usize, w: f64) {
        if w > 0.0 {
            *self.arcs.entry((i, j)).or_insert(0.0) += w;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.arcs.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.arcs.values().sum()
    }

    /// Same arcs, reversed: the matching of `−u`.
    pub fn reversed(&self) -> Self {
        FractionalMatching { arcs: self.arcs.iter().map(|(&(i, j), &w)| ((j, i), w)).collect() }
    }

    pub fn degrees(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for (&(i, j), &w) in &self.arcs {
            d[i] += w;
            d[j] += w;
        }
        d
    }

    /// One-sidedness and `deg(i) ≤ π(i)·(1 + 1e-9)`.
    pub fn check(&self, pi: &[f64]) -> bool {
        let n = pi.len();
        let mut tail = vec![false; n];
        let mut head = vec![false; n];
        for &(i, j) in self.arcs.keys() {
            if i >= n || j >= n || i == j {
                return false;
            }
            tail[i] = true;
            head[j] = true;
        }
        let deg = self.degrees(n);
        (0..n).all(|i| !(tail[i] && head[i]) && deg[i] <= pi[i] * (1.0 + 1e-9))
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum ProjectOutcome {
    Saturated { flow: SaturatedFlow, left: Vec<usize>, right: Vec<usize> },
    Unsaturated(CutResult),
}

/// Orders `U` along `u` and runs the bidirectional flow between the bottom
/// and top prefixes of mass `c·π(V)`.
pub fn project_max_flow(
    g: &DiGraph,
    sub: &SubsetEmbedding,
    u: &[f64],
    c: f64,
    beta: f64,
    kappa: f64,
) -> Result<ProjectOutcome> {
    if !(c > 0.0 && c < 0.25) {
        return Err(Error::domain("c must lie in (0, 1/4)"));
    }
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::domain("direction must be nonzero"));
    }
    let pi = g.pi();
    let total: f64 = pi.iter().sum();
    let mass_u: f64 = sub.subset.iter().map(|&v| pi[v]).sum();
    if mass_u < 2.0 * c * total {
        return Err(Error::domain(format!("pi(U) = {mass_u} below 2c")));
    }
    let proj = sub.emb.project(u);
    let mut order: Vec<usize> = (0..sub.subset.len()).collect();
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(sub.subset[a].cmp(&sub.subset[b])));
    let prefix = |it: &mut dyn Iterator<Item = &usize>| {
        let mut set = Vec::new();
        let mut m = 0.0;
        for &k in it {
            if m >= c * total {
                break;
            }
            set.push(sub.subset[k]);
            m += pi[sub.subset[k]];
        }
        set
    };
    let left = prefix(&mut order.iter());
    let right = prefix(&mut order.iter().rev());
    if left.iter().any(|v| right.contains(v)) {
        return Err(Error::domain("bottom and top prefixes overlap"));
    }
    match bidirectional_max_flow(g, &left, &right, beta, kappa)? {
        BidirOutcome::Saturated(flow) => Ok(ProjectOutcome::Saturated { flow, left, right }),
        BidirOutcome::Unsaturated(cut) => Ok(ProjectOutcome::Unsaturated(cut)),
    }
}

/// Paths of the circulation `½(f⃗ + f⃖)`, each at half its flow weight.
pub fn circulation_paths(flow: &SaturatedFlow) -> Vec<(Vec<usize>, f64)> {
    flow.forward_paths.iter().chain(&flow.backward_paths).map(|p| (p.nodes.clone(), 0.5 * p.weight)).collect()
}

/// Matching of far-apart, nearby-in-`ℓ₂²` endpoint pairs from a saturated
/// flow. Paths are reoriented to run from `L` to `R`; pairs closer than
/// `σ` along `u` or farther than `4/(βc)` are dropped, and weights are
/// scaled by `1/(β·r′)`.
#[allow(clippy::too_many_arguments)]
pub fn build_matching(
    paths: &[(Vec<usize>, f64)],
    left: &[usize],
    right: &[usize],
    sub: &SubsetEmbedding,
    u: &[f64],
    sigma: f64,
    beta: f64,
    c: f64,
    r_prime: f64,
) -> Result<FractionalMatching> {
    let far = 4.0 / (beta * c);
    let mut m = FractionalMatching::default();
    for (nodes, w) in paths {
        let (a, b) = (nodes[0], nodes[nodes.len() - 1]);
        let (i, j) = if left.contains(&a) && right.contains(&b) {
            (a, b)
        } else if right.contains(&a) && left.contains(&b) {
            (b, a)
        } else {
            return Err(Error::domain(format!("path {a}..{b} does not join L and R")));
        };
        let (vi, vj) = match (sub.vector(i), sub.vector(j)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::domain("path endpoint outside the embedded subset")),
        };
        let along: f64 = vj.iter().zip(vi).zip(u).map(|((y, x), d)| (y - x) * d).sum();
        let dist2: f64 = vj.iter().zip(vi).map(|(y, x)| (y - x) * (y - x)).sum();
        if along < sigma || dist2 > far {
            continue;
        }
        m.add(i, j, *w);
    }
    let s = 1.0 / (beta * r_prime.max(1.0));
    m.arcs.values_mut().for_each(|w| *w *= s);
    Ok(m)
}
