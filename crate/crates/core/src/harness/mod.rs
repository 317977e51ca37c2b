//! Experiment harness: instance generators, the five benchmark experiments
//! (unconstrained, lasso, svm, compressed sensing, weighted low-rank), and
//! CSV/summary/SVG exports.

mod export;
mod generate;
mod run;

pub use export::{export_csv, export_summary, export_svg, read_csv, SummaryRow};
pub use generate::{
    gen_gaussian_regression, gen_gmm_classification, gen_sparse_regression,
    gen_weighted_lowrank_instance,
};
pub use run::run_experiment;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::SketchKind;
use crate::solve::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    UncLs,
    Lasso,
    Svm,
    Cs,
    Nuclear,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::UncLs => "unc_ls",
            ExperimentKind::Lasso => "lasso",
            ExperimentKind::Svm => "svm",
            ExperimentKind::Cs => "cs",
            ExperimentKind::Nuclear => "nuclear",
        }
    }

    /// Multiplier in the per-experiment sketch-size formula m(alpha).
    pub fn default_m_scale(&self) -> f64 {
        match self {
            ExperimentKind::UncLs => 1.5,
            ExperimentKind::Lasso => 4.0,
            ExperimentKind::Svm => 5.0,
            ExperimentKind::Cs => 4.0,
            ExperimentKind::Nuclear => 1.5,
        }
    }

    pub fn default_solver(&self) -> SolverOptions {
        match self {
            // Direct QR path; options only reach the sketched solve, which is
            // also unconstrained.
            ExperimentKind::UncLs => SolverOptions::default(),
            ExperimentKind::Lasso => SolverOptions {
                max_iters: 10_000,
                rel_obj_tol: 1e-16,
                grad_map_tol: 1e-5,
                ..SolverOptions::default()
            },
            ExperimentKind::Svm => SolverOptions {
                max_iters: 20_000,
                rel_obj_tol: 1e-16,
                grad_map_tol: 3e-6,
                ..SolverOptions::default()
            },
            ExperimentKind::Cs => SolverOptions {
                max_iters: 20_000,
                rel_obj_tol: 1e-16,
                grad_map_tol: 1e-10,
                ..SolverOptions::default()
            },
            ExperimentKind::Nuclear => SolverOptions {
                max_iters: 5_000,
                rel_obj_tol: 1e-16,
                grad_map_tol: 1e-6,
                ..SolverOptions::default()
            },
        }
    }
}

fn default_n() -> usize {
    1024
}
fn default_d() -> usize {
    100
}
fn default_kinds() -> Vec<SketchKind> {
    vec![
        SketchKind::Gaussian,
        SketchKind::Rademacher,
        SketchKind::RosHadamard,
    ]
}
fn default_alphas() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8, 1.0]
}
fn default_trials() -> usize {
    30
}
fn default_noise_nu() -> f64 {
    0.2f64.sqrt()
}
fn default_radius() -> f64 {
    10.0
}
fn default_feature_dim() -> usize {
    50
}
fn default_svm_c() -> f64 {
    1.0
}
fn default_rank_r() -> usize {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub d1: Option<usize>,
    #[serde(default)]
    pub d2: Option<usize>,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<SketchKind>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_noise_nu")]
    pub noise_nu: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub k_prime: Option<usize>,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_svm_c")]
    pub svm_c: f64,
    #[serde(default)]
    pub m_scale: Option<f64>,
    #[serde(default = "default_rank_r")]
    pub rank_r: usize,
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    #[serde(default)]
    pub certify: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            n: default_n(),
            d: default_d(),
            d1: None,
            d2: None,
            kinds: default_kinds(),
            alphas: default_alphas(),
            trials: default_trials(),
            seed: 0,
            noise_nu: default_noise_nu(),
            radius: default_radius(),
            k_prime: None,
            feature_dim: default_feature_dim(),
            svm_c: default_svm_c(),
            m_scale: None,
            rank_r: default_rank_r(),
            solver: None,
            certify: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::invalid("config needs at least one sketch kind"));
        }
        if self.alphas.is_empty() {
            return Err(Error::invalid("config needs a non-empty alpha grid"));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::invalid(format!("alpha {a} outside (0, 1]")));
            }
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("n and d must be positive"));
        }
        if !(self.noise_nu >= 0.0 && self.noise_nu.is_finite()) {
            return Err(Error::invalid("noise_nu must be nonnegative"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius must be positive"));
        }
        if !(self.svm_c > 0.0) {
            return Err(Error::invalid("svm_c must be positive"));
        }
        if self.rank_r == 0 {
            return Err(Error::invalid("rank_r must be at least 1"));
        }
        if let Some(k) = self.k_prime {
            if k == 0 || k > self.d {
                return Err(Error::invalid(format!("k_prime {k} outside 1..=d")));
            }
        }
        if let Some(ms) = self.m_scale {
            if !(ms > 0.0 && ms.is_finite()) {
                return Err(Error::invalid("m_scale must be positive"));
            }
        }
        if let Some(opts) = &self.solver {
            opts.validate()?;
        }
        Ok(())
    }

    pub fn m_scale(&self) -> f64 {
        self.m_scale.unwrap_or_else(|| self.experiment.default_m_scale())
    }

    pub fn solver(&self) -> SolverOptions {
        self.solver.unwrap_or_else(|| self.experiment.default_solver())
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime.unwrap_or_else(|| (self.d / 10).max(1))
    }

    pub fn matrix_dims(&self) -> (usize, usize) {
        let d1 = self.d1.unwrap_or(16);
        let d2 = self.d2.unwrap_or(16);
        (d1, d2)
    }
}

/// One solved (instance, sketch) pair. recovery_error_inf and cert_bound are
/// NaN when the experiment does not produce them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub kind: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub alpha: f64,
    pub trial: usize,
    pub f_star: f64,
    pub f_hat: f64,
    pub ratio: f64,
    pub recovery_error_inf: f64,
    pub cert_bound: f64,
    pub sketch_ms: f64,
    pub solve_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_from_minimal_json() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"experiment":"lasso"}"#).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Lasso);
        assert_eq!(cfg.n, 1024);
        assert_eq!(cfg.d, 100);
        assert_eq!(cfg.kinds.len(), 3);
        assert_eq!(cfg.alphas, vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(cfg.trials, 30);
        assert!((cfg.noise_nu * cfg.noise_nu - 0.2).abs() < 1e-15);
        assert_eq!(cfg.radius, 10.0);
        assert_eq!(cfg.k_prime(), 10);
        assert_eq!(cfg.m_scale(), 4.0);
        assert!(!cfg.certify);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_grid() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::UncLs);
        cfg.alphas = vec![0.5, 1.2];
        assert!(cfg.validate().is_err());
        cfg.alphas = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::UncLs);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn experiment_kind_serde_names() {
        assert_eq!(
            serde_json::to_string(&ExperimentKind::UncLs).unwrap(),
            r#""unc_ls""#
        );
        assert_eq!(
            serde_json::to_string(&ExperimentKind::Cs).unwrap(),
            r#""cs""#
        );
        let k: ExperimentKind = serde_json::from_str(r#""nuclear""#).unwrap();
        assert_eq!(k, ExperimentKind::Nuclear);
    }

    #[test]
    fn per_experiment_m_scales() {
        assert_eq!(ExperimentKind::UncLs.default_m_scale(), 1.5);
        assert_eq!(ExperimentKind::Lasso.default_m_scale(), 4.0);
        assert_eq!(ExperimentKind::Svm.default_m_scale(), 5.0);
        assert_eq!(ExperimentKind::Cs.default_m_scale(), 4.0);
        assert_eq!(ExperimentKind::Nuclear.default_m_scale(), 1.5);
    }
}
