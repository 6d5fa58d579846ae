use std::collections::BTreeMap;

use serde::Serialize;

use super::matching::FractionalMatching;

/// Paths obtained by chaining matchings, hop `t` drawn from the `t`-th one.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ChainedPaths {
    pub paths: Vec<(Vec<usize>, f64)>,
}

impl ChainedPaths {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.paths.iter().map(|p| p.1).sum()
    }

    /// The matching on endpoint pairs, `M_{u₁..u_ℓ}`.
    pub fn aggregate(&self) -> FractionalMatching {
        FractionalMatching::from_arcs(self.paths.iter().map(|(p, w)| (p[0], p[p.len() - 1], *w)))
    }
}

/// Chains `cover[0], …, cover[ℓ−1]`: each path is extended along the
/// residual out-arcs of its last vertex in the next matching, splitting its
/// weight greedily. Weight that cannot be extended is dropped.
pub fn chain_matchings(cover: &[&FractionalMatching]) -> ChainedPaths {
    let Some((first, rest)) = cover.split_first() else {
        return ChainedPaths::default();
    };
    let mut paths: Vec<(Vec<usize>, f64)> = first.arcs.iter().map(|(&(i, j), &w)| (vec![i, j], w)).collect();
    for m in rest {
        let mut out: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (&(i, j), &w) in &m.arcs {
            out.entry(i).or_default().push((j, w));
        }
        let mut next = Vec::with_capacity(paths.len() + m.len());
        for (p, mut w) in paths {
            let last = p[p.len() - 1];
            let Some(edges) = out.get_mut(&last) else { continue };
            for (j, cap) in edges.iter_mut() {
                if w <= 0.0 {
                    break;
                }
                let take = w.min(*cap);
                if take <= 0.0 {
                    continue;
                }
                let mut q = p.clone();
                q.push(*j);
                next.push((q, take));
                w -= take;
                *cap -= take;
            }
        }
        paths = next;
    }
    ChainedPaths { paths }
}
