//! Weighted digraphs with vertex weights, circulations, symmetric Laplacians
//! and the expansion quantities built from them.
//!
//! The containers are generic over [`Scalar`], so the same code runs on
//! `f64`, `f32` and exact rationals. Solvers downstream work on the `f64`
//! instantiation exposed as [`crate::DiGraph`].

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const BRUTE_MAX_N: usize = 20;

pub trait Scalar: Copy + PartialOrd + Debug + Num + Send + Sync + 'static {
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Ratio<i64> {
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

fn smaller<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

fn half<T: Scalar>() -> T {
    T::one() / (T::one() + T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge<T> {
    pub tail: usize,
    pub head: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    n: usize,
    edges: Vec<Edge<T>>,
    pi: Vec<T>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph, summing parallel arcs. Edges come out sorted by
    /// `(tail, head)`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>, pi: Vec<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("graph needs at least one vertex"));
        }
        if pi.len() != n {
            return Err(Error::domain(format!("pi has length {} but n = {n}", pi.len())));
        }
        if let Some(i) = pi.iter().position(|&p| !(p > T::zero())) {
            return Err(Error::domain(format!("vertex weight of {i} must be positive")));
        }
        let mut merged: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at {u}")));
            }
            if !(w > T::zero()) {
                return Err(Error::domain(format!("edge ({u},{v}) has non-positive weight")));
            }
            let slot = merged.entry((u, v)).or_insert_with(T::zero);
            *slot = *slot + w;
        }
        let edges = merged.into_iter().map(|((tail, head), weight)| Edge { tail, head, weight }).collect();
        Ok(Graph { n, edges, pi })
    }

    pub fn with_unit_pi(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        Self::new(n, edges, vec![T::one(); n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn pi(&self) -> &[T] {
        &self.pi
    }

    pub fn pi_total(&self) -> T {
        self.pi.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn total_weight(&self) -> T {
        self.edges.iter().fold(T::zero(), |a, e| a + e.weight)
    }

    pub fn weight(&self, tail: usize, head: usize) -> Option<T> {
        self.edges.binary_search_by(|e| (e.tail, e.head).cmp(&(tail, head))).ok().map(|k| self.edges[k].weight)
    }

    /// `w(δ⁺(i)) + w(δ⁻(i))` for every vertex.
    pub fn total_degrees(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for e in &self.edges {
            d[e.tail] = d[e.tail] + e.weight;
            d[e.head] = d[e.head] + e.weight;
        }
        d
    }

    pub fn with_pi(&self, pi: Vec<T>) -> Result<Self> {
        Self::new(self.n, self.edges.iter().map(|e| (e.tail, e.head, e.weight)), pi)
    }

    /// Same arcs with π rescaled to sum to one.
    pub fn normalized(&self) -> Self {
        let z = self.pi_total();
        Graph { n: self.n, edges: self.edges.clone(), pi: self.pi.iter().map(|&p| p / z).collect() }
    }

    pub fn reversed(&self) -> Self {
        let mut edges: Vec<Edge<T>> =
            self.edges.iter().map(|e| Edge { tail: e.head, head: e.tail, weight: e.weight }).collect();
        edges.sort_by_key(|e| (e.tail, e.head));
        Graph { n: self.n, edges, pi: self.pi.clone() }
    }

    pub fn sym_laplacian(&self) -> SymLaplacian<T> {
        sym_laplacian(self.n, self.edges.iter().map(|e| (e.tail, e.head, e.weight)))
    }

    /// `(w(δ⁺(S)), w(δ⁻(S)))` for a membership mask.
    pub fn boundary(&self, inside: &[bool]) -> (T, T) {
        let mut out = T::zero();
        let mut inn = T::zero();
        for e in &self.edges {
            match (inside[e.tail], inside[e.head]) {
                (true, false) => out = out + e.weight,
                (false, true) => inn = inn + e.weight,
                _ => {}
            }
        }
        (out, inn)
    }

    pub fn mass(&self, inside: &[bool]) -> (T, T) {
        let mut a = T::zero();
        let mut b = T::zero();
        for (i, &p) in self.pi.iter().enumerate() {
            if inside[i] {
                a = a + p;
            } else {
                b = b + p;
            }
        }
        (a, b)
    }
}

/// Membership mask for a proper nonempty subset.
pub fn membership(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut inside = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(Error::domain(format!("vertex {i} out of range")));
        }
        inside[i] = true;
    }
    let k = inside.iter().filter(|&&b| b).count();
    if k == 0 || k == n {
        return Err(Error::domain("subset must be nonempty and proper"));
    }
    Ok(inside)
}

pub fn members(inside: &[bool]) -> Vec<usize> {
    inside.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

pub fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    (0..n).filter(|&i| !inside[i]).collect()
}

fn phi_mask<T: Scalar>(g: &Graph<T>, inside: &[bool]) -> T {
    let (out, inn) = g.boundary(inside);
    let (a, b) = g.mass(inside);
    smaller(out, inn) / smaller(a, b)
}

/// `min{w(δ⁺S), w(δ⁻S)} / min{π(S), π(S̄)}`.
pub fn phi_set<T: Scalar>(g: &Graph<T>, set: &[usize]) -> Result<T> {
    let inside = membership(g.n(), set)?;
    Ok(phi_mask(g, &inside))
}

fn mask_to_vec(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Enumerates proper subsets, minimizing `score`. A set and its complement
/// score the same under every objective used here, so only sets containing
/// vertex 0 are visited; that side is also the lexicographically smaller one.
pub(crate) fn brute_minimize<V, F>(n: usize, mut score: F) -> Result<(Vec<usize>, V)>
where
    V: PartialOrd + Copy,
    F: FnMut(&[bool]) -> V,
{
    if n > BRUTE_MAX_N {
        return Err(Error::Budget(format!("brute force refused for n = {n} > {BRUTE_MAX_N}")));
    }
    if n < 2 {
        return Err(Error::domain("need at least two vertices"));
    }
    let full: u32 = (1u32 << n) - 1;
    let mut inside = vec![false; n];
    let mut best: Option<(u32, V)> = None;
    let mut mask: u32 = 1;
    while mask < full {
        for (i, slot) in inside.iter_mut().enumerate() {
            *slot = mask >> i & 1 == 1;
        }
        let v = score(&inside);
        best = match best {
            None => Some((mask, v)),
            Some((bm, bv)) => {
                if v < bv || (!(bv < v) && mask_to_vec(mask, n) < mask_to_vec(bm, n)) {
                    Some((mask, v))
                } else {
                    Some((bm, bv))
                }
            }
        };
        mask += 2;
    }
    let (bm, bv) = best.expect("at least one subset");
    Ok((mask_to_vec(bm, n), bv))
}

/// Exhaustive `φ_π(G)`, returning the lexicographically smallest minimizer.
pub fn phi_brute<T: Scalar>(g: &Graph<T>) -> Result<(Vec<usize>, T)> {
    brute_minimize(g.n(), |inside| phi_mask(g, inside))
}

/// Symmetric Laplacian with possibly negative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SymLaplacian<T> {
    n: usize,
    weights: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> SymLaplacian<T> {
    pub fn zero(n: usize) -> Self {
        SymLaplacian { n, weights: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `w·L_{i,j}`. Self-pairs contribute nothing.
    pub fn add_edge(&mut self, i: usize, j: usize, w: T) {
        if i == j {
            return;
        }
        let key = if i < j { (i, j) } else { (j, i) };
        let slot = self.weights.entry(key).or_insert_with(T::zero);
        *slot = *slot + w;
        if *slot == T::zero() {
            self.weights.remove(&key);
        }
    }

    /// Adds `w·T_p` for the path `p`: its hops minus its endpoint pair.
    pub fn add_path_term(&mut self, path: &[usize], w: T) {
        if path.len() < 2 {
            return;
        }
        for hop in path.windows(2) {
            self.add_edge(hop[0], hop[1], w);
        }
        self.add_edge(path[0], path[path.len() - 1], T::zero() - w);
    }

    pub fn add_scaled(&mut self, other: &SymLaplacian<T>, s: T) {
        for (&(i, j), &w) in &other.weights {
            self.add_edge(i, j, w * s);
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = SymLaplacian::zero(self.n);
        out.add_scaled(self, s);
        out
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.weights.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        let key = if i < j { (i, j) } else { (j, i) };
        self.weights.get(&key).copied().unwrap_or_else(T::zero)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.n]; self.n];
        for (&(i, j), &w) in &self.weights {
            m[i][j] = m[i][j] - w;
            m[j][i] = m[j][i] - w;
            m[i][i] = m[i][i] + w;
            m[j][j] = m[j][j] + w;
        }
        m
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.to_dense().into_iter().map(|row| row.into_iter().fold(T::zero(), |a, b| a + b)).collect()
    }

    /// `xᵀLx = Σ w_ij (x_i − x_j)²`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.weights.iter().fold(T::zero(), |acc, (&(i, j), &w)| {
            let d = x[i] - x[j];
            acc + w * d * d
        })
    }

    /// Per-vertex sum of absolute incident weights.
    pub fn abs_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (&(i, j), &w) in &self.weights {
            let a = w.to_f64().abs();
            d[i] += a;
            d[j] += a;
        }
        d
    }
}

/// `L_sym(A) = Σ_{i<j} ½(A(i,j)+A(j,i)) L_{i,j}`.
pub fn sym_laplacian<T: Scalar>(n: usize, arcs: impl IntoIterator<Item = (usize, usize, T)>) -> SymLaplacian<T> {
    let h = half::<T>();
    let mut l = SymLaplacian::zero(n);
    for (i, j, a) in arcs {
        l.add_edge(i, j, a * h);
    }
    l
}

/// Nonnegative arc flows on `n` vertices, merged per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Circulation<T> {
    n: usize,
    flow: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> Circulation<T> {
    pub fn zero(n: usize) -> Self {
        Circulation { n, flow: BTreeMap::new() }
    }

    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let mut c = Circulation::zero(n);
        for (i, j, f) in arcs {
            if i >= n || j >= n {
                return Err(Error::domain(format!("arc ({i},{j}) out of range")));
            }
            if f < T::zero() {
                return Err(Error::domain(format!("negative flow on ({i},{j})")));
            }
            c.add(i, j, f);
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, f: T) {
        if f == T::zero() {
            return;
        }
        let slot = self.flow.entry((i, j)).or_insert_with(T::zero);
        *slot = *slot + f;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.flow.get(&(i, j)).copied().unwrap_or_else(T::zero)
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.flow.iter().map(|(&(i, j), &f)| (i, j, f))
    }

    pub fn is_empty(&self) -> bool {
        self.flow.values().all(|&f| f == T::zero())
    }

    pub fn total(&self) -> T {
        self.flow.values().fold(T::zero(), |a, &b| a + b)
    }

    pub fn scaled(&self, s: T) -> Self {
        Circulation { n: self.n, flow: self.flow.iter().map(|(&k, &f)| (k, f * s)).collect() }
    }

    pub fn add_scaled(&mut self, other: &Circulation<T>, s: T) {
        for (i, j, f) in other.arcs() {
            self.add(i, j, f * s);
        }
    }

    pub fn sym_laplacian(&self) -> SymLaplacian<T> {
        sym_laplacian(self.n, self.arcs())
    }

    /// Net outflow minus inflow per vertex.
    pub fn imbalance(&self) -> Vec<T> {
        let mut b = vec![T::zero(); self.n];
        for (i, j, f) in self.arcs() {
            b[i] = b[i] + f;
            b[j] = b[j] - f;
        }
        b
    }
}

#[derive(Serialize, Deserialize)]
struct CirculationJson {
    n: usize,
    arcs: Vec<(usize, usize, f64)>,
}

/// JSON form `{n, arcs: [[i, j, f]]}`.
impl<T: Scalar> Serialize for Circulation<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CirculationJson { n: self.n, arcs: self.arcs().map(|(i, j, f)| (i, j, f.to_f64())).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Circulation<f64> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CirculationJson::deserialize(d)?;
        Circulation::from_arcs(raw.n, raw.arcs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirculationReport {
    pub conservation_ok: bool,
    pub capacity_ok: bool,
    /// Largest |out − in| over vertices.
    pub worst_imbalance: f64,
    /// Largest `F(e) − w(e)` (negative when all arcs have slack).
    pub worst_excess: f64,
}

impl CirculationReport {
    pub fn ok(&self) -> bool {
        self.conservation_ok && self.capacity_ok
    }
}

/// Checks conservation (to `1e-8·total`) and `F(e) ≤ cap·w(e)·(1+1e-9)`.
pub fn check_circulation_scaled<T: Scalar>(g: &Graph<T>, f: &Circulation<T>, cap: f64) -> CirculationReport {
    let total = f.total().to_f64();
    let worst_imbalance = f.imbalance().into_iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut capacity_ok = true;
    for (i, j, x) in f.arcs() {
        let x = x.to_f64();
        let w = g.weight(i, j).map(|w| w.to_f64()).unwrap_or(0.0) * cap;
        worst_excess = worst_excess.max(x - w);
        if x > w * (1.0 + 1e-9) && x > 0.0 {
            capacity_ok = false;
        }
        if x < 0.0 {
            capacity_ok = false;
        }
    }
    if worst_excess == f64::NEG_INFINITY {
        worst_excess = 0.0;
    }
    CirculationReport { conservation_ok: worst_imbalance <= 1e-8 * total, capacity_ok, worst_imbalance, worst_excess }
}

pub fn check_circulation<T: Scalar>(g: &Graph<T>, f: &Circulation<T>) -> CirculationReport {
    check_circulation_scaled(g, f, 1.0)
}

/// `min_S F(S, S̄) / min{π(S), π(S̄)}` by enumeration.
pub fn phi_circulation<T: Scalar>(f: &Circulation<T>, pi: &[T]) -> Result<T> {
    let n = pi.len();
    if f.n() != n {
        return Err(Error::domain("circulation and pi disagree on n"));
    }
    let arcs: Vec<(usize, usize, T)> = f.arcs().collect();
    let (_, v) = brute_minimize(n, |inside| {
        let mut cross = T::zero();
        for &(i, j, x) in &arcs {
            if inside[i] && !inside[j] {
                cross = cross + x;
            }
        }
        let mut a = T::zero();
        let mut b = T::zero();
        for (i, &p) in pi.iter().enumerate() {
            if inside[i] {
                a = a + p;
            } else {
                b = b + p;
            }
        }
        cross / smaller(a, b)
    })?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness {
    MinCut { beta: f64, kappa: f64, r_prime: f64, direction: FlowDirection },
    MetricRound { alpha: f64, beta: f64, r_prime: f64, flow_calls: usize },
    Threshold,
    Exhaustive,
}

/// A cut `S` with both boundary weights recorded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutResult {
    pub set: Vec<usize>,
    pub value: f64,
    pub out_weight: f64,
    pub in_weight: f64,
    pub witness: Witness,
}

impl CutResult {
    pub fn new(g: &Graph<f64>, set: Vec<usize>, witness: Witness) -> Result<Self> {
        let inside = membership(g.n(), &set)?;
        let set = members(&inside);
        let (out_weight, in_weight) = g.boundary(&inside);
        let (a, b) = g.mass(&inside);
        let value = out_weight.min(in_weight) / a.min(b);
        Ok(CutResult { set, value, out_weight, in_weight, witness })
    }

    /// Recomputes the value on `g` (which may carry a different π scale).
    pub fn recompute(&self, g: &Graph<f64>) -> Result<f64> {
        phi_set(g, &self.set)
    }

    /// The witness bound `β·r′/κ` when this cut came from a min cut.
    pub fn flow_bound(&self) -> Option<f64> {
        match self.witness {
            Witness::MinCut { beta, kappa, r_prime, .. } => Some(beta * r_prime / kappa),
            _ => None,
        }
    }
}
