//! Tunable constants. Every solver reads from one [`Constants`] value so a
//! run can echo the exact numbers it used.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    // Tolerances.
    pub tol_rel: f64,
    pub tol_conservation: f64,

    // Sparsest-cut MMWU loop.
    pub c_t: f64,
    pub c_eta: f64,
    pub rho: Option<f64>,
    pub max_iterations: Option<usize>,
    pub cert_target: f64,
    pub cert_check_every: usize,

    // Large-core oracle.
    pub core_radius: f64,
    pub core_mass: f64,
    pub large_core_beta: f64,
    pub core_candidates_max_n: usize,

    // Well-spread oracle.
    pub c_beta: f64,
    pub c_mass: f64,
    pub sigma_match: f64,
    pub c_l: f64,
    pub c_k: f64,
    pub c_dir: f64,
    pub c_s: f64,
    pub spread_radius: f64,
    pub c1: f64,
    pub c2: f64,

    // Structure split.
    pub split_sigma: f64,
    pub split_delta: f64,
    pub c3: f64,
    pub split_retries: usize,

    // Gram extraction.
    pub exact_gram_max_n: usize,
    pub jl_c: f64,
    pub jl_delta: f64,
    pub tau_c: f64,

    // Metric rounding.
    pub grid_span: f64,
    pub refine_steps: usize,
    pub l1_factor: f64,

    // Reweighted eigenvalue and Cheeger.
    pub lambda_eta: f64,
    pub lambda_t_cap: usize,
    pub lambda_window: usize,
    pub lambda_window_tol: f64,
    pub cheeger_c: f64,
    pub c_ch: f64,

    // Cut-matching game.
    pub game_eta: f64,
    pub game_rho: f64,
    pub game_c_t: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            tol_rel: 1e-9,
            tol_conservation: 1e-8,

            c_t: 16.0,
            c_eta: 0.25,
            rho: None,
            max_iterations: None,
            cert_target: 0.5,
            cert_check_every: 16,

            core_radius: 1.0 / 10f64.sqrt(),
            core_mass: 0.25,
            large_core_beta: 20.0 / 3.0,
            core_candidates_max_n: 512,

            c_beta: 8.0,
            c_mass: 0.05,
            sigma_match: 0.1,
            c_l: 0.25,
            c_k: 2.0,
            c_dir: 4.0,
            c_s: 4.0,
            spread_radius: 4.0,
            c1: 0.05,
            c2: 0.05,

            split_sigma: 0.1,
            split_delta: 0.1,
            c3: 0.05,
            split_retries: 100,

            exact_gram_max_n: 512,
            jl_c: 4.0,
            jl_delta: 0.2,
            tau_c: 9.0,

            grid_span: 1e9,
            refine_steps: 20,
            l1_factor: 4.0,

            lambda_eta: 0.25,
            lambda_t_cap: 100_000,
            lambda_window: 16,
            lambda_window_tol: 1e-4,
            cheeger_c: 1.0,
            c_ch: 100.0,

            game_eta: 0.25,
            game_rho: 4.0,
            game_c_t: 16.0,
        }
    }
}

impl Constants {
    /// Flow demand multiplier for the well-spread oracle, `c_beta * sqrt(ln n / eps)`.
    pub fn well_spread_beta(&self, n: usize, eps: f64) -> f64 {
        self.c_beta * ((n.max(2) as f64).ln() / eps).sqrt()
    }

    /// Chain length parameter `ceil(c_k * sqrt(eps ln n))`, at least 1.
    pub fn chain_k(&self, n: usize, eps: f64) -> usize {
        ((self.c_k * (eps * (n.max(2) as f64).ln()).sqrt()).ceil() as usize).max(1)
    }

    /// Pruning threshold of the structure split, `split_delta / sqrt(ln n)`.
    pub fn split_threshold(&self, n: usize) -> f64 {
        self.split_delta / (n.max(3) as f64).ln().sqrt()
    }

    pub fn directions_per_call(&self, n: usize) -> usize {
        ((self.c_dir * (n.max(2) as f64).ln()).ceil() as usize).max(4)
    }

    pub fn chaining_attempts(&self, n: usize, eps: f64) -> usize {
        ((self.c_s * (n.max(2) as f64).powf(eps)).ceil() as usize).max(1)
    }

    pub fn game_rounds(&self, n: usize) -> usize {
        let l = (n.max(2) as f64).ln();
        ((self.game_c_t * l * l).ceil() as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_round_trip_and_partial_override() {
        let c = Constants::default();
        let s = serde_json::to_string(&c).unwrap();
        let back: Constants = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        let partial: Constants = serde_json::from_str(r#"{"c_t": 4.0}"#).unwrap();
        assert_eq!(partial.c_t, 4.0);
        assert_eq!(partial.c_eta, 0.25);
    }

    #[test]
    fn chain_k_formula() {
        let c = Constants::default();
        let expected = (2.0 * (0.25 * 256f64.ln()).sqrt()).ceil() as usize;
        assert_eq!(c.chain_k(256, 0.25), expected);
        assert_eq!(expected, 3);
    }

    #[test]
    fn large_core_beta_value() {
        assert!((Constants::default().large_core_beta - 20.0 / 3.0).abs() < 1e-15);
    }
}
