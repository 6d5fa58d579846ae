use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: i128,
    rev: usize,
}

/// An s-t network with integer capacities.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    source: usize,
    sink: usize,
    arcs: Vec<(usize, usize, i128)>,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub value: i128,
    /// Flow on each arc, indexed as added.
    pub flow: Vec<i128>,
    /// Nodes reachable from the source in the residual network.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= n || sink >= n || source == sink {
            return Err(Error::domain("invalid source/sink"));
        }
        Ok(FlowNetwork { n, source, sink, arcs: Vec::new() })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[(usize, usize, i128)] {
        &self.arcs
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i128) -> Result<usize> {
        if from >= self.n || to >= self.n {
            return Err(Error::domain(format!("arc ({from},{to}) out of range")));
        }
        if cap < 0 {
            return Err(Error::domain("negative capacity"));
        }
        self.arcs.push((from, to, cap));
        Ok(self.arcs.len() - 1)
    }

    /// Capacity of the arcs leaving `side`.
    pub fn cut_capacity(&self, side: &[bool]) -> i128 {
        self.arcs.iter().filter(|&&(u, v, _)| side[u] && !side[v]).map(|&(_, _, c)| c).sum()
    }

    /// Dinic's blocking-flow algorithm.
    pub fn max_flow(&self) -> FlowResult {
        let mut adj: Vec<Vec<Arc>> = vec![Vec::new(); self.n];
        let mut handle = Vec::with_capacity(self.arcs.len());
        for &(u, v, c) in &self.arcs {
            let iu = adj[u].len();
            let iv = adj[v].len() + usize::from(u == v);
            adj[u].push(Arc { to: v, cap: c, rev: iv });
            adj[v].push(Arc { to: u, cap: 0, rev: iu });
            handle.push((u, iu));
        }
        let (s, t) = (self.source, self.sink);
        let mut value: i128 = 0;
        let mut level = vec![usize::MAX; self.n];
        let mut it = vec![0usize; self.n];
        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for a in &adj[u] {
                    if a.cap > 0 && level[a.to] == usize::MAX {
                        level[a.to] = level[u] + 1;
                        q.push_back(a.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                break;
            }
            it.iter_mut().for_each(|x| *x = 0);
            loop {
                let pushed = augment(&mut adj, &level, &mut it, s, t);
                if pushed == 0 {
                    break;
                }
                value += pushed;
            }
        }
        let flow = handle.iter().zip(&self.arcs).map(|(&(u, iu), &(_, _, c))| c - adj[u][iu].cap).collect();
        let mut source_side = vec![false; self.n];
        source_side[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for a in &adj[u] {
                if a.cap > 0 && !source_side[a.to] {
                    source_side[a.to] = true;
                    q.push_back(a.to);
                }
            }
        }
        FlowResult { value, flow, source_side }
    }
}

/// One augmenting path in the level graph, iterative to keep deep networks
/// off the call stack.
fn augment(adj: &mut [Vec<Arc>], level: &[usize], it: &mut [usize], s: usize, t: usize) -> i128 {
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut u = s;
    loop {
        if u == t {
            let bottleneck = stack.iter().map(|&(x, k)| adj[x][k].cap).min().unwrap_or(0);
            for &(x, k) in &stack {
                adj[x][k].cap -= bottleneck;
                let (to, rev) = (adj[x][k].to, adj[x][k].rev);
                adj[to][rev].cap += bottleneck;
            }
            return bottleneck;
        }
        let mut advanced = false;
        while it[u] < adj[u].len() {
            let a = adj[u][it[u]];
            if a.cap > 0 && level[a.to] == level[u] + 1 {
                stack.push((u, it[u]));
                u = a.to;
                advanced = true;
                break;
            }
            it[u] += 1;
        }
        if !advanced {
            match stack.pop() {
                None => return 0,
                Some((x, _)) => {
                    it[x] += 1;
                    u = x;
                }
            }
        }
    }
}

/// Maps nonnegative float capacities to integers with a power-of-two scale
/// chosen so the largest capacity sits near 2^90.
#[derive(Debug, Clone, Copy)]
pub struct CapacityScale {
    factor: f64,
}

impl CapacityScale {
    pub fn for_max(max_cap: f64) -> Self {
        let exp = if max_cap > 0.0 && max_cap.is_finite() { 90 - (max_cap.log2().ceil() as i32) } else { 0 };
        CapacityScale { factor: 2f64.powi(exp.clamp(-1000, 1000)) }
    }

    pub fn to_int(&self, x: f64) -> i128 {
        (x * self.factor).round() as i128
    }

    pub fn to_float(&self, x: i128) -> f64 {
        x as f64 / self.factor
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}
