use nalgebra::DMatrix;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Circulation, SymLaplacian};
use crate::linalg::{normalized_matrix, power_norm_estimate, spectral_norm};

/// Where a feedback matrix came from.
#[derive(Debug, Clone, Serialize)]
pub enum Provenance {
    /// A saturated bidirectional flow; `circulation` is `½(f⃗ + f⃖)` and
    /// `paths` its decomposition with endpoint demands `demand`.
    Demand { demand: Circulation<f64>, circulation: Circulation<f64>, paths: Vec<(Vec<usize>, f64)> },
    /// Triangle-violating paths with per-path weights `f_p`, scaled by `y`.
    ViolatingPaths { paths: Vec<(Vec<usize>, f64)>, y: f64 },
}

/// `M = Π^{-1/2}·body·Π^{-1/2}` together with its declared width.
#[derive(Debug, Clone)]
pub struct FeedbackMatrix {
    /// Signed: `L_sym(D)` for demands, `−y·Σ f_p T_p` for paths.
    pub body: SymLaplacian<f64>,
    pub rho: f64,
    pub provenance: Provenance,
    pub matrix: DMatrix<f64>,
    /// Spectral norm of `matrix`.
    pub width: f64,
    /// Factor already applied to bring the width under a run's `ρ`.
    pub scale: f64,
}

/// Dense below this size; power iteration above.
const DENSE_WIDTH_MAX_N: usize = 512;

fn width_of(m: &DMatrix<f64>) -> f64 {
    if m.nrows() <= DENSE_WIDTH_MAX_N {
        spectral_norm(m)
    } else {
        power_norm_estimate(m, 100)
    }
}

impl FeedbackMatrix {
    pub fn new(body: SymLaplacian<f64>, rho: f64, provenance: Provenance, pi: &[f64]) -> Result<Self> {
        if body.n() != pi.len() {
            return Err(Error::domain("feedback body and pi disagree on n"));
        }
        let matrix = normalized_matrix(&body, pi);
        let width = width_of(&matrix);
        Ok(FeedbackMatrix { body, rho, provenance, matrix, width, scale: 1.0 })
    }

    /// Feedback `Π^{-1/2} L_sym(D) Π^{-1/2}` from a demand graph.
    pub fn from_demand(
        demand: Circulation<f64>,
        circulation: Circulation<f64>,
        paths: Vec<(Vec<usize>, f64)>,
        rho: f64,
        pi: &[f64],
    ) -> Result<Self> {
        let body = demand.sym_laplacian();
        FeedbackMatrix::new(body, rho, Provenance::Demand { demand, circulation, paths }, pi)
    }

    /// `⟨M, X⟩ = ⟨body, Y⟩ = Σ w_ij ‖v_i − v_j‖²`.
    pub fn inner(&self, emb: &Embedding) -> f64 {
        self.scale * self.body.edges().map(|(i, j, w)| w * emb.dist2(i, j)).sum::<f64>()
    }

    /// The matrix actually fed to MMWU, `scale·M`.
    pub fn effective(&self) -> DMatrix<f64> {
        &self.matrix * self.scale
    }

    pub fn effective_width(&self) -> f64 {
        self.width * self.scale
    }

    /// Shrinks the feedback so its width is at most `rho`.
    pub fn clip_to(&mut self, rho: f64) -> bool {
        let w = self.effective_width();
        if w > rho {
            self.scale *= rho / w;
            true
        } else {
            false
        }
    }

    pub fn is_demand(&self) -> bool {
        matches!(self.provenance, Provenance::Demand { .. })
    }

    /// `L_sym(D) ⪯ ρ·Π` through the weighted-degree bound `2·deg(i) ≤ ρ·π(i)`.
    pub fn degree_bound_ok(&self, pi: &[f64]) -> bool {
        let deg = self.body.abs_degrees();
        deg.iter().zip(pi).all(|(d, p)| 2.0 * d * self.scale <= self.rho * p * (1.0 + 1e-9))
    }
}
