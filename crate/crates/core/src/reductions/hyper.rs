//! Directed hypergraphs. A hyperedge `e = (H_e, T_e)` leaves `S` when
//! `T_e ∩ S ≠ ∅` and `H_e ∩ S̄ ≠ ∅`.

use serde::{Deserialize, Serialize};

use super::{ReductionKind, ReductionMap};
use crate::error::{Error, Result};
use crate::graph::{brute_minimize, complement, membership, phi_set};
use crate::io::{content_lines, field, perr};
use crate::DiGraph;

pub const HYPER_BRUTE_MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperEdge {
    pub heads: Vec<usize>,
    pub tails: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<HyperEdge>,
    pi: Vec<f64>,
}

impl Hypergraph {
    pub fn new(n: usize, edges: Vec<HyperEdge>, pi: Vec<f64>) -> Result<Self> {
        if pi.len() != n {
            return Err(Error::domain(format!("pi has {} entries for {n} vertices", pi.len())));
        }
        if let Some(i) = pi.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::domain(format!("pi({i}) must be positive")));
        }
        let mut clean = Vec::with_capacity(edges.len());
        for (k, mut e) in edges.into_iter().enumerate() {
            if e.heads.is_empty() || e.tails.is_empty() {
                return Err(Error::domain(format!("hyperedge {k} has an empty side")));
            }
            if e.heads.iter().chain(&e.tails).any(|&v| v >= n) {
                return Err(Error::domain(format!("hyperedge {k} names a vertex outside 0..{n}")));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::domain(format!("hyperedge {k} needs a positive weight")));
            }
            e.heads.sort_unstable();
            e.heads.dedup();
            e.tails.sort_unstable();
            e.tails.dedup();
            clean.push(e);
        }
        Ok(Hypergraph { n, edges: clean, pi })
    }

    pub fn with_unit_pi(n: usize, edges: Vec<HyperEdge>) -> Result<Self> {
        Self::new(n, edges, vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[HyperEdge] {
        &self.edges
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_undirected(&self) -> bool {
        self.edges.iter().all(|e| e.heads == e.tails)
    }

    fn value(&self, inside: &[bool]) -> f64 {
        let meets = |vs: &[usize], side: bool| vs.iter().any(|&v| inside[v] == side);
        let (mut out, mut inn) = (0.0, 0.0);
        for e in &self.edges {
            if meets(&e.tails, true) && meets(&e.heads, false) {
                out += e.weight;
            }
            if meets(&e.tails, false) && meets(&e.heads, true) {
                inn += e.weight;
            }
        }
        let a: f64 = (0..self.n).filter(|&i| inside[i]).map(|i| self.pi[i]).sum();
        let b: f64 = (0..self.n).filter(|&i| !inside[i]).map(|i| self.pi[i]).sum();
        f64::min(out, inn) / a.min(b)
    }
}

pub fn hyper_phi_set(h: &Hypergraph, set: &[usize]) -> Result<f64> {
    let inside = membership(h.n, set)?;
    Ok(h.value(&inside))
}

pub fn hyper_phi_brute(h: &Hypergraph) -> Result<(Vec<usize>, f64)> {
    if h.n > HYPER_BRUTE_MAX_N {
        return Err(Error::Budget(format!("hypergraph brute force refused for n = {} > {HYPER_BRUTE_MAX_N}", h.n)));
    }
    brute_minimize(h.n, |inside| h.value(inside))
}

/// `M_big` for the derived graph: the vertex-split value `n·π(V)·π_max + 1`
/// plus `W·π′(V′)/π_min`, so that any cut crossing an `M_big` arc is worse
/// than every singleton.
pub fn graph_m_big(h: &Hypergraph, delta_aux: f64) -> f64 {
    let total: f64 = h.pi.iter().sum();
    let p_min = h.pi.iter().cloned().fold(f64::INFINITY, f64::min);
    let p_max = h.pi.iter().cloned().fold(0.0, f64::max);
    let w: f64 = h.edges.iter().map(|e| e.weight).sum();
    let total_reduced = total + 2.0 * h.edges.len() as f64 * delta_aux;
    h.n as f64 * total * p_max + 1.0 + w * total_reduced / p_min
}

/// The derived graph: vertices `V`, then `e_in = n + 2e`, `e_out = n + 2e + 1`
/// per hyperedge, with arcs `H_e → e_in` and `e_out → T_e` of weight
/// `M_big` and `e_in → e_out` of weight `w(e)`. Auxiliaries get `π′ = δ_aux`.
pub fn hyper_derived(h: &Hypergraph) -> Result<(DiGraph, ReductionMap)> {
    let n = h.n;
    let k = h.edges.len();
    let p_min = h.pi.iter().cloned().fold(f64::INFINITY, f64::min);
    let delta_aux = p_min / (n * n) as f64;
    let m_big = graph_m_big(h, delta_aux);
    let mut arcs = Vec::new();
    for (e, edge) in h.edges.iter().enumerate() {
        let (ein, eout) = (n + 2 * e, n + 2 * e + 1);
        arcs.extend(edge.heads.iter().map(|&a| (a, ein, m_big)));
        arcs.push((ein, eout, edge.weight));
        arcs.extend(edge.tails.iter().map(|&b| (eout, b, m_big)));
    }
    let mut pi = h.pi.clone();
    pi.extend(std::iter::repeat_n(delta_aux, 2 * k));
    let g = DiGraph::new(n + 2 * k, arcs, pi)?;
    Ok((g, ReductionMap { kind: ReductionKind::HyperDerived, n, n_reduced: n + 2 * k, delta_aux, m_big }))
}

impl ReductionMap {
    /// `S` plus the auxiliaries forced in by avoiding `M_big` arcs out of it.
    fn hyper_closure(&self, h: &Hypergraph, inside: &[bool]) -> Vec<usize> {
        let n = self.n;
        let mut set: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
        for (e, edge) in h.edges.iter().enumerate() {
            if edge.heads.iter().any(|&a| inside[a]) {
                set.push(n + 2 * e);
                if edge.tails.iter().all(|&b| inside[b]) {
                    set.push(n + 2 * e + 1);
                }
            }
        }
        set
    }

    /// Maps a cut of `H` to the derived graph `gd`, taking the sparser of
    /// the closure of `S` and the complement of the closure of `S̄`.
    pub fn lift_hyper_cut(&self, h: &Hypergraph, gd: &DiGraph, set: &[usize]) -> Result<Vec<usize>> {
        self.proper(set)?;
        let inside = membership(self.n, set)?;
        let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
        let a = self.hyper_closure(h, &inside);
        let b = complement(self.n_reduced, &self.hyper_closure(h, &outside));
        let (va, vb) = (phi_set(gd, &a)?, phi_set(gd, &b)?);
        Ok(if vb < va { b } else { a })
    }

    /// Maps a cut of the derived graph back to `H` by dropping auxiliaries.
    pub fn project_hyper_cut(&self, set: &[usize]) -> Result<Vec<usize>> {
        self.check_reduced(set)?;
        let s: Vec<usize> = set.iter().copied().filter(|&v| v < self.n).collect();
        Ok(if s.is_empty() || s.len() == self.n { vec![0] } else { s })
    }
}

fn parse_side(tok: &str, line: usize, n: usize) -> Result<Vec<usize>> {
    let vs: Vec<usize> = tok.split_whitespace().map(|t| field(Some(t), line, "vertex")).collect::<Result<_>>()?;
    if vs.is_empty() {
        return Err(perr(line, "empty vertex list"));
    }
    if let Some(v) = vs.iter().find(|&&v| v >= n) {
        return Err(perr(line, format!("vertex {v} out of range 0..{n}")));
    }
    Ok(vs)
}

/// Header `n k`, then `k` lines `w | heads | tails`, then optionally a `pi`
/// block as in the graph format.
pub fn parse_hypergraph(text: &str) -> Result<Hypergraph> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let mut it = header.split_whitespace();
    let n: usize = field(it.next(), ln, "n")?;
    let k: usize = field(it.next(), ln, "k")?;
    if it.next().is_some() {
        return Err(perr(ln, "header must be `n k`"));
    }
    let mut last = ln;
    let mut edges = Vec::with_capacity(k);
    for found in 0..k {
        let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, format!("expected {k} hyperedges, found {found}")))?;
        last = ln;
        let parts: Vec<&str> = l.split('|').collect();
        if parts.len() != 3 {
            return Err(perr(ln, "hyperedge line must be `w | heads | tails`"));
        }
        let weight: f64 = field(Some(parts[0].trim()), ln, "weight")?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(perr(ln, "weight must be positive"));
        }
        edges.push(HyperEdge { heads: parse_side(parts[1], ln, n)?, tails: parse_side(parts[2], ln, n)?, weight });
    }
    let mut pi = vec![1.0; n];
    if let Some((ln, l)) = lines.next() {
        if l != "pi" {
            return Err(perr(ln, format!("unexpected line `{l}`")));
        }
        last = ln;
        let mut seen = vec![false; n];
        for found in 0..n {
            let (ln, l) =
                lines.next().ok_or_else(|| perr(last + 1, format!("expected {n} pi lines, found {found}")))?;
            last = ln;
            let mut it = l.split_whitespace();
            let v: usize = field(it.next(), ln, "vertex")?;
            let p: f64 = field(it.next(), ln, "pi")?;
            if v >= n || seen[v] {
                return Err(perr(ln, format!("bad or repeated vertex {v}")));
            }
            seen[v] = true;
            pi[v] = p;
        }
        if let Some((ln, l)) = lines.next() {
            return Err(perr(ln, format!("trailing content `{l}`")));
        }
    }
    Hypergraph::new(n, edges, pi).map_err(|e| perr(0, e.to_string()))
}

pub fn hypergraph_to_text(h: &Hypergraph) -> String {
    let list = |vs: &[usize]| vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let mut s = format!("{} {}\n", h.n, h.edges.len());
    for e in &h.edges {
        s.push_str(&format!("{} | {} | {}\n", e.weight, list(&e.heads), list(&e.tails)));
    }
    s.push_str("pi\n");
    for (i, p) in h.pi.iter().enumerate() {
        s.push_str(&format!("{i} {p}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reductions::phi_exhaustive;

    fn edge(heads: &[usize], tails: &[usize], weight: f64) -> HyperEdge {
        HyperEdge { heads: heads.to_vec(), tails: tails.to_vec(), weight }
    }

    #[test]
    fn definition_examples() {
        let h = Hypergraph::with_unit_pi(2, vec![edge(&[0], &[1], 1.0)]).unwrap();
        assert_eq!(hyper_phi_set(&h, &[0]).unwrap(), 0.0);
        let tri = Hypergraph::with_unit_pi(3, vec![edge(&[0, 1, 2], &[0, 1, 2], 1.0)]).unwrap();
        assert!(tri.is_undirected());
        assert_eq!(hyper_phi_set(&tri, &[0]).unwrap(), 1.0);
        assert!(Hypergraph::with_unit_pi(2, vec![edge(&[], &[1], 1.0)]).is_err());
    }

    #[test]
    fn overlapping_edges_brute() {
        // Frozen by enumerating all 15 cuts containing vertex 0.
        let h = Hypergraph::with_unit_pi(
            5,
            vec![edge(&[0, 1], &[2], 1.0), edge(&[2, 3], &[4, 0], 2.0), edge(&[4], &[1, 3], 1.0)],
        )
        .unwrap();
        let (s, v) = hyper_phi_brute(&h).unwrap();
        assert_eq!((s.clone(), v), (vec![0, 1], 0.5));
        for mask in 1u32..31 {
            let set: Vec<usize> = (0..5).filter(|&i| mask >> i & 1 == 1).collect();
            assert!(hyper_phi_set(&h, &set).unwrap() >= v);
        }
    }

    #[test]
    fn derived_shapes() {
        let h = Hypergraph::with_unit_pi(2, vec![edge(&[0], &[1], 1.0)]).unwrap();
        let (g, _) = hyper_derived(&h).unwrap();
        assert_eq!(g.n(), 4);
        let arcs: Vec<_> = g.edges().iter().map(|e| (e.tail, e.head)).collect();
        assert_eq!(arcs, vec![(0, 2), (2, 3), (3, 1)]);

        let h = Hypergraph::with_unit_pi(3, vec![edge(&[0, 1], &[2], 1.0)]).unwrap();
        let (g, map) = hyper_derived(&h).unwrap();
        assert_eq!(g.n(), 5);
        let arcs: Vec<_> = g.edges().iter().map(|e| (e.tail, e.head, e.weight)).collect();
        assert_eq!(arcs, vec![(0, 3, map.m_big), (1, 3, map.m_big), (3, 4, 1.0), (4, 2, map.m_big)]);
    }

    #[test]
    fn derived_correspondence_small() {
        let h = Hypergraph::with_unit_pi(
            6,
            vec![
                edge(&[0, 1], &[2], 1.0),
                edge(&[2], &[3, 4], 1.5),
                edge(&[3, 4, 5], &[0], 1.0),
                edge(&[5], &[1, 2], 0.5),
            ],
        )
        .unwrap();
        let (g, map) = hyper_derived(&h).unwrap();
        let (hs, hv) = hyper_phi_brute(&h).unwrap();
        let (gs, gv) = phi_exhaustive(&g).unwrap();
        assert!(hv <= 4.0 * gv && gv <= 4.0 * hv, "{hv} {gv}");
        assert!(phi_set(&g, &map.lift_hyper_cut(&h, &g, &hs).unwrap()).unwrap() <= 4.0 * hv);
        assert!(hyper_phi_set(&h, &map.project_hyper_cut(&gs).unwrap()).unwrap() <= 4.0 * gv);
    }

    #[test]
    fn text_round_trip() {
        let h = parse_hypergraph("3 2\n1 | 0 1 | 2\n2.5 | 2 | 0\n").unwrap();
        assert_eq!(h.edges()[1], edge(&[2], &[0], 2.5));
        assert_eq!(parse_hypergraph(&hypergraph_to_text(&h)).unwrap(), h);
        assert!(matches!(parse_hypergraph("3 1\n1 | 0 | 7\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_hypergraph("3 1\n1 | 0\n"), Err(Error::Parse { line: 2, .. })));
    }
}
