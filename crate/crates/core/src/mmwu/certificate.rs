use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::feedback::{FeedbackMatrix, Provenance};
use crate::error::{Error, Result};
use crate::graph::{check_circulation_scaled, Circulation, SymLaplacian};
use crate::linalg::normalized_lambda2;
use crate::DiGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortcut {
    pub path: Vec<usize>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    pub path: Vec<usize>,
    pub weight: f64,
}

/// Lower bound `φ_π(G) ≥ value / 2`-style certificate: a demand graph
/// routed by `circulation` with congestion `kappa`, minus shortcut terms.
/// `value` is `λ₂` of the body divided by `kappa`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub n: usize,
    pub demand: Vec<(usize, usize, f64)>,
    pub circulation: Vec<(usize, usize, f64)>,
    pub shortcuts: Vec<Shortcut>,
    pub kappa: f64,
    pub value: f64,
    pub seeds: Vec<u64>,
    /// Decomposition of `circulation` whose endpoint pairs give `demand`.
    pub flow_paths: Vec<WeightedPath>,
}

impl DualCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }

    /// `(L_sym(D) − Σ y_p T_p) / κ`.
    pub fn body(&self) -> SymLaplacian<f64> {
        let mut body = Circulation::from_arcs(self.n, self.demand.iter().copied())
            .map(|d| d.sym_laplacian())
            .unwrap_or_else(|_| SymLaplacian::zero(self.n));
        for s in &self.shortcuts {
            body.add_path_term(&s.path, -s.y);
        }
        body.scaled(1.0 / self.kappa)
    }
}

/// Running sums of the feedback played so far.
#[derive(Debug, Clone)]
pub struct CertificateBuilder {
    n: usize,
    demand: BTreeMap<(usize, usize), f64>,
    flow_paths: BTreeMap<Vec<usize>, f64>,
    shortcuts: BTreeMap<Vec<usize>, f64>,
    rounds: usize,
}

impl CertificateBuilder {
    pub fn new(n: usize) -> Self {
        CertificateBuilder {
            n,
            demand: BTreeMap::new(),
            flow_paths: BTreeMap::new(),
            shortcuts: BTreeMap::new(),
            rounds: 0,
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn add(&mut self, f: &FeedbackMatrix) {
        self.rounds += 1;
        match &f.provenance {
            Provenance::Demand { paths, .. } => {
                for (p, w) in paths {
                    let w = w * f.scale;
                    *self.flow_paths.entry(p.clone()).or_insert(0.0) += w;
                    *self.demand.entry((p[0], p[p.len() - 1])).or_insert(0.0) += w;
                }
            }
            Provenance::ViolatingPaths { paths, y } => {
                for (p, w) in paths {
                    *self.shortcuts.entry(p.clone()).or_insert(0.0) += y * w * f.scale;
                }
            }
        }
    }

    /// Averages over the rounds and evaluates the value at congestion `κ`.
    pub fn finish(&self, kappa: f64, pi: &[f64], seeds: Vec<u64>) -> Result<DualCertificate> {
        if self.rounds == 0 {
            return Err(Error::domain("no feedback to certify"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain("kappa must be positive"));
        }
        let s = 1.0 / self.rounds as f64;
        let flow_paths: Vec<WeightedPath> =
            self.flow_paths.iter().map(|(p, w)| WeightedPath { path: p.clone(), weight: w * s }).collect();
        let mut circ = Circulation::zero(self.n);
        for fp in &flow_paths {
            for hop in fp.path.windows(2) {
                circ.add(hop[0], hop[1], fp.weight);
            }
        }
        let mut cert = DualCertificate {
            n: self.n,
            demand: self.demand.iter().map(|(&(i, j), w)| (i, j, w * s)).collect(),
            circulation: circ.arcs().collect(),
            shortcuts: self.shortcuts.iter().map(|(p, y)| Shortcut { path: p.clone(), y: y * s }).collect(),
            kappa,
            value: 0.0,
            seeds,
            flow_paths,
        };
        cert.value = normalized_lambda2(&cert.body(), pi);
        Ok(cert)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertificateCheck {
    pub capacity_ok: bool,
    pub eulerian: bool,
    pub paths_reconstruct: bool,
    pub demand_matches_paths: bool,
    pub value_ok: bool,
    pub recomputed_value: f64,
}

impl CertificateCheck {
    pub fn ok(&self) -> bool {
        self.capacity_ok && self.eulerian && self.paths_reconstruct && self.demand_matches_paths && self.value_ok
    }
}

fn close(a: &BTreeMap<(usize, usize), f64>, b: &BTreeMap<(usize, usize), f64>, scale: f64) -> bool {
    let tol = 1e-9 * scale.max(1e-300) + 1e-12;
    a.keys().chain(b.keys()).all(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs() <= tol)
}

/// Re-derives every claim of the certificate from `g`.
pub fn verify_certificate(g: &DiGraph, cert: &DualCertificate) -> Result<CertificateCheck> {
    if cert.n != g.n() {
        return Err(Error::domain("certificate and graph disagree on n"));
    }
    let circ = Circulation::from_arcs(cert.n, cert.circulation.iter().copied())?;
    let demand = Circulation::from_arcs(cert.n, cert.demand.iter().copied())?;
    if !(cert.kappa > 0.0 && cert.kappa.is_finite()) {
        return Err(Error::domain("certificate kappa must be positive"));
    }
    let report = check_circulation_scaled(g, &circ, cert.kappa);
    let total = demand.total();
    let eulerian = demand.imbalance().iter().all(|b| b.abs() <= 1e-8 * total.max(1e-300) + 1e-12);

    let mut from_paths = BTreeMap::new();
    let mut endpoints = BTreeMap::new();
    for fp in &cert.flow_paths {
        if fp.path.len() < 2 || fp.weight < 0.0 {
            return Err(Error::domain("flow path must have a hop and nonnegative weight"));
        }
        for hop in fp.path.windows(2) {
            *from_paths.entry((hop[0], hop[1])).or_insert(0.0) += fp.weight;
        }
        *endpoints.entry((fp.path[0], fp.path[fp.path.len() - 1])).or_insert(0.0) += fp.weight;
    }
    let circ_map: BTreeMap<_, _> = circ.arcs().map(|(i, j, f)| ((i, j), f)).collect();
    let demand_map: BTreeMap<_, _> = demand.arcs().map(|(i, j, f)| ((i, j), f)).collect();
    let recomputed = normalized_lambda2(&cert.body(), g.pi());
    Ok(CertificateCheck {
        capacity_ok: report.ok(),
        eulerian,
        paths_reconstruct: close(&from_paths, &circ_map, circ.total()),
        demand_matches_paths: close(&endpoints, &demand_map, total),
        value_ok: (recomputed - cert.value).abs() <= 1e-9 * cert.value.abs().max(1.0),
        recomputed_value: recomputed,
    })
}
