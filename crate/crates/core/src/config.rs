// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! ```toml
//! beta = 1.0
//! alpha = 0.1
//! tau = 0.7
//! entail_threshold = 0.5
//! correction_sign = 1
//! n_values = [5, 8, 10, 25, 50]
//! trials = 10
//! seed = 0
//! pool_size = 100
//! reference = "pool"        # or "true_k"
//! estimators = ["plugin", "gt", "ggt", "u_eigv", "hybrid_gt", "hybrid_ggt", "shade"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::FusionConfig;
use crate::evaluation::{DetectOptions, DetectionScore, EvalOptions, Estimator, Reference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub beta: f64,
    pub alpha: f64,
    pub tau: f64,
    pub entail_threshold: f64,
    pub correction_sign: i8,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub reference: Reference,
    pub estimators: Vec<Estimator>,
    /// Subsample sizes compared by `winrates`.
    pub winrate_n_values: Vec<usize>,
    /// Subsample sizes for `detect`; empty scores every response.
    pub detect_n_values: Vec<usize>,
    pub detect_scores: Vec<DetectionScore>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fusion = FusionConfig::default();
        let eval = EvalOptions::default();
        let detect = DetectOptions::default();
        Self {
            beta: fusion.beta,
            alpha: fusion.alpha,
            tau: fusion.tau,
            entail_threshold: fusion.entail_threshold,
            correction_sign: fusion.correction_sign,
            n_values: eval.n_values,
            trials: eval.trials,
            seed: eval.seed,
            pool_size: eval.pool_size,
            reference: eval.reference,
            estimators: eval.estimators,
            winrate_n_values: vec![5, 10, 20],
            detect_n_values: detect.n_values,
            detect_scores: detect.scores,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion().validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.pool_size == 0 {
            return Err(Error::Config("pool_size must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators enabled".into()));
        }
        for (key, sizes) in [
            ("n_values", &self.n_values),
            ("winrate_n_values", &self.winrate_n_values),
            ("detect_n_values", &self.detect_n_values),
        ] {
            if sizes.contains(&0) {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        Ok(())
    }

    pub fn fusion(&self) -> FusionConfig {
        FusionConfig {
            beta: self.beta,
            alpha: self.alpha,
            tau: self.tau,
            entail_threshold: self.entail_threshold,
            correction_sign: self.correction_sign,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            n_values: self.n_values.clone(),
            trials: self.trials,
            seed: self.seed,
            pool_size: self.pool_size,
            reference: self.reference,
            estimators: self.estimators.clone(),
        }
    }

    pub fn detect_options(&self) -> DetectOptions {
        DetectOptions {
            n_values: self.detect_n_values.clone(),
            seed: self.seed,
            scores: self.detect_scores.clone(),
        }
    }
}
