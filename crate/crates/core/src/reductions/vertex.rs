use super::{psi_set, ReductionKind, ReductionMap};
use crate::error::Result;
use crate::graph::{complement, phi_set};
use crate::DiGraph;

/// Splits each vertex `i` into `i_in = i` and `i_out = n + i` joined by an
/// arc of weight `π(i)`; an original arc `i → j` becomes `i_out → j_in`
/// with weight `M_big`. `π′(i_in) = π(i)`, `π′(i_out) = δ_aux`.
pub fn vertex_split(g: &DiGraph) -> Result<(DiGraph, ReductionMap)> {
    let n = g.n();
    let pi = g.pi();
    let total = g.pi_total();
    let p_min = pi.iter().cloned().fold(f64::INFINITY, f64::min);
    let p_max = pi.iter().cloned().fold(0.0, f64::max);
    let delta_aux = p_min / (n * n) as f64;
    let m_big = n as f64 * total * p_max + 1.0;
    let arcs = (0..n).map(|i| (i, n + i, pi[i])).chain(g.edges().iter().map(|e| (n + e.tail, e.head, m_big)));
    let mut pi2 = pi.to_vec();
    pi2.extend(std::iter::repeat_n(delta_aux, n));
    let gs = DiGraph::new(2 * n, arcs, pi2)?;
    let map = ReductionMap { kind: ReductionKind::VertexSplit, n, n_reduced: 2 * n, delta_aux, m_big };
    Ok((gs, map))
}

impl ReductionMap {
    /// `S ∪ S_out ∪ (∂⁺S)_in`, whose only outgoing arcs are the split arcs
    /// of `∂⁺S`.
    fn closure(&self, g: &DiGraph, set: &[usize]) -> Vec<usize> {
        let n = self.n;
        let mut inside = vec![false; 2 * n];
        for &i in set {
            inside[i] = true;
            inside[n + i] = true;
        }
        for e in g.edges() {
            if inside[n + e.tail] {
                inside[e.head] = true;
            }
        }
        (0..2 * n).filter(|&v| inside[v]).collect()
    }

    /// Maps a cut of `G` to a cut of the split graph `gs`. Candidates are
    /// the closure of `S`, the in-copies `S_in`, and the complements of the
    /// same two built from `S̄`; the sparsest is returned. The closures
    /// cover `ψ(S) ≤ ¼`, the in-copies (value at most 1) the rest.
    pub fn lift_vertex_cut(&self, g: &DiGraph, gs: &DiGraph, set: &[usize]) -> Result<Vec<usize>> {
        self.proper(set)?;
        let n2 = 2 * self.n;
        let other = complement(self.n, set);
        let candidates =
            [self.closure(g, set), complement(n2, &self.closure(g, &other)), set.to_vec(), complement(n2, &other)];
        let mut best: Option<(f64, Vec<usize>)> = None;
        for c in candidates {
            if c.is_empty() || c.len() == 2 * self.n {
                continue;
            }
            let v = phi_set(gs, &c)?;
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, c));
            }
        }
        Ok(best.map(|(_, c)| c).unwrap_or_else(|| set.to_vec()))
    }

    /// Maps a cut of the split graph back to `G`: among the vertices with
    /// both copies inside, with the out-copy inside, or with the in-copy
    /// inside (and their complements), the set of smallest `ψ`.
    pub fn project_vertex_cut(&self, g: &DiGraph, set: &[usize]) -> Result<Vec<usize>> {
        let n = self.n;
        let inside = self.check_reduced(set)?;
        let both: Vec<usize> = (0..n).filter(|&i| inside[i] && inside[n + i]).collect();
        let outs: Vec<usize> = (0..n).filter(|&i| inside[n + i]).collect();
        let ins: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for c in [both, outs, ins] {
            if c.is_empty() || c.len() == n {
                continue;
            }
            let v = psi_set(g, &c)?;
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, c));
            }
        }
        Ok(best.map(|(_, c)| c).unwrap_or_else(|| vec![0]))
    }
}
