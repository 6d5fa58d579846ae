//! Vertex and hypergraph expansion, their brute-force oracles, and the
//! reductions to directed edge expansion.
//!
//! `ψ_π(S) = min{π(∂⁺S), π(∂⁺S̄)} / min{π(S), π(S̄)}` where `∂⁺S` is the set
//! of out-neighbours of `S` outside `S`.

mod exhaustive;
mod hyper;
mod vertex;

pub use exhaustive::{phi_exhaustive, EXHAUSTIVE_MAX_N};
pub use hyper::{
    graph_m_big, hyper_derived, hyper_phi_brute, hyper_phi_set, hypergraph_to_text, parse_hypergraph, HyperEdge,
    Hypergraph, HYPER_BRUTE_MAX_N,
};
pub use vertex::vertex_split;

pub use crate::flow::vertex_unsaturated_bound;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{brute_minimize, membership, Graph, Scalar};

fn psi_mask<T: Scalar>(g: &Graph<T>, inside: &[bool]) -> T {
    let n = g.n();
    let mut out_s = vec![false; n];
    let mut out_c = vec![false; n];
    for e in g.edges() {
        if inside[e.tail] && !inside[e.head] {
            out_s[e.head] = true;
        } else if !inside[e.tail] && inside[e.head] {
            out_c[e.head] = true;
        }
    }
    let pi = g.pi();
    let mut a = T::zero();
    let mut b = T::zero();
    for i in 0..n {
        if out_s[i] {
            a = a + pi[i];
        }
        if out_c[i] {
            b = b + pi[i];
        }
    }
    let (ps, pc) = g.mass(inside);
    let num = if b < a { b } else { a };
    let den = if pc < ps { pc } else { ps };
    num / den
}

pub fn psi_set<T: Scalar>(g: &Graph<T>, set: &[usize]) -> Result<T> {
    Ok(psi_mask(g, &membership(g.n(), set)?))
}

pub fn psi_brute<T: Scalar>(g: &Graph<T>) -> Result<(Vec<usize>, T)> {
    brute_minimize(g.n(), |inside| psi_mask(g, inside))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionKind {
    VertexSplit,
    HyperDerived,
}

/// Vertex and cut correspondence between an instance on `n` vertices and
/// its reduced graph on `n_reduced` vertices. Original vertex `i` is
/// vertex `i` of the reduced graph in both constructions.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionMap {
    pub kind: ReductionKind,
    pub n: usize,
    pub n_reduced: usize,
    pub delta_aux: f64,
    pub m_big: f64,
}

impl ReductionMap {
    pub fn forward(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    pub(crate) fn check_reduced(&self, set: &[usize]) -> Result<Vec<bool>> {
        membership(self.n_reduced, set)
    }

    pub(crate) fn proper(&self, set: &[usize]) -> Result<()> {
        if set.is_empty() || set.len() >= self.n || set.iter().any(|&i| i >= self.n) {
            return Err(Error::domain("cut must be a proper nonempty subset of the original vertices"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DiGraph;

    fn star() -> DiGraph {
        DiGraph::with_unit_pi(4, (1..4).flat_map(|j| [(0, j, 1.0), (j, 0, 1.0)])).unwrap()
    }

    #[test]
    fn psi_examples() {
        let (_, v) = psi_brute(&star()).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(psi_set(&star(), &[1, 2]).unwrap(), 0.5);
        let arc = DiGraph::with_unit_pi(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(psi_set(&arc, &[0]).unwrap(), 0.0);
        let k4 =
            DiGraph::with_unit_pi(4, (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j, 1.0))))
                .unwrap();
        // Out-neighbours of {0} weigh 3; those of the complement weigh 1.
        assert_eq!(psi_set(&k4, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn vertex_flow_cut_within_bound() {
        use crate::flow::{bidirectional_vertex_flow, VertexOutcome};
        assert!((vertex_unsaturated_bound(1.0, 4.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(vertex_unsaturated_bound(1.0, 2.0, 1.0).unwrap(), 1.0);
        assert!(vertex_unsaturated_bound(1.0, 1.0, 1.0).is_err());
        let g = star().with_pi(vec![0.5, 1.0, 1.0, 1.0]).unwrap();
        let VertexOutcome::Unsaturated { set, psi, bound } =
            bidirectional_vertex_flow(&g, &[1, 2], &[3], 1.0, 1.5).unwrap()
        else {
            panic!("the centre should bottleneck")
        };
        assert_eq!(psi, psi_set(&g, &set).unwrap());
        assert!(psi <= bound);
    }
}
