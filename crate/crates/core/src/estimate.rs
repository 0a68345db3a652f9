// SPDX-License-Identifier: Apache-2.0

//! Coverage-gated fusion of occupancy and spectral cardinality estimates,
//! the finite-sample correction, and the entropy readout.
//!
//! Pipeline for one query:
//!
//! ```text
//! labels / entailment
//!   -> occupancy profile -> plugin, GT, GGT (coverage C)
//!   -> normalized Laplacian spectrum -> heat trace (Soft-EigV), U-EigV
//!   -> fuse: C >= tau ? C*S_ggt + (1-C)*S_soft : LSE_alpha(S_ggt, S_soft)
//!   -> S_final = S_hybrid + sign * (k_obs - 1) / (2n)
//!   -> p*_i = k_obs p_i / S_final
//!   -> H = -sum p*_i ln p*_i / (1 - (1 - p*_i)^n)
//! ```

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cluster_bidirectional, EntailmentMatrix, SemanticGraph};
use crate::occupancy::{ggt_estimate, gt_estimate, plugin_estimate, OccupancyProfile};

/// Tunable scalars of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Heat-kernel temperature.
    pub beta: f64,
    /// LogSumExp sharpness.
    pub alpha: f64,
    /// Coverage gate between the convex and LogSumExp rules.
    pub tau: f64,
    /// Bidirectional entailment threshold used for clustering.
    pub entail_threshold: f64,
    /// Sign of the `(k_obs - 1) / 2n` correction term, `+1` or `-1`.
    pub correction_sign: i8,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            alpha: 0.1,
            tau: 0.7,
            entail_threshold: 0.5,
            correction_sign: 1,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("alpha", self.alpha)?;
        open_unit("tau", self.tau)?;
        open_unit("entail_threshold", self.entail_threshold)?;
        if self.correction_sign != 1 && self.correction_sign != -1 {
            return Err(Error::Config(format!(
                "correction_sign must be +1 or -1, got {}",
                self.correction_sign
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionBranch {
    Convex,
    LogSumExp,
}

/// Branch selected by the coverage gate.
pub fn fusion_branch(coverage: f64, tau: f64) -> FusionBranch {
    if coverage >= tau {
        FusionBranch::Convex
    } else {
        FusionBranch::LogSumExp
    }
}

/// Convex combination `c * a + (1 - c) * b`, kept inside `[min, max]`.
pub fn convex_fuse(s_ggt: f64, s_soft: f64, coverage: f64) -> f64 {
    let v = coverage * s_ggt + (1.0 - coverage) * s_soft;
    v.clamp(s_ggt.min(s_soft), s_ggt.max(s_soft))
}

/// `(1/alpha) ln(exp(alpha a) + exp(alpha b))` in shifted form.
pub fn log_sum_exp_fuse(s_ggt: f64, s_soft: f64, alpha: f64) -> f64 {
    let hi = s_ggt.max(s_soft);
    let gap = (s_ggt - s_soft).abs();
    hi + (-alpha * gap).exp().ln_1p() / alpha
}

/// Coverage-gated fusion of the GGT and heat-trace cardinalities.
pub fn fuse(s_ggt: f64, s_soft: f64, coverage: f64, cfg: &FusionConfig) -> f64 {
    match fusion_branch(coverage, cfg.tau) {
        FusionBranch::Convex => convex_fuse(s_ggt, s_soft, coverage),
        FusionBranch::LogSumExp => log_sum_exp_fuse(s_ggt, s_soft, cfg.alpha),
    }
}

/// `s_hybrid + (k_obs - 1) / (2n)`.
pub fn finite_sample_correct(s_hybrid: f64, k_obs: usize, n: usize) -> f64 {
    finite_sample_correct_signed(s_hybrid, k_obs, n, 1)
}

pub fn finite_sample_correct_signed(s_hybrid: f64, k_obs: usize, n: usize, sign: i8) -> f64 {
    s_hybrid + f64::from(sign) * (k_obs as f64 - 1.0) / (2.0 * n as f64)
}

/// Entropy readout together with the adjusted class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReadout {
    pub value: f64,
    /// `k_obs p_i / s_final` after clamping into `(0, 1]`.
    pub p_star: Vec<f64>,
    /// Sum of the unclamped `p*_i`.
    pub p_star_mass: f64,
    pub clamped: usize,
}

/// Visibility-adjusted entropy (nats) of the class frequencies rescaled to
/// the estimated cardinality.
pub fn shade_entropy(p_hat: &[f64], k_obs: usize, n: usize, s_final: f64) -> Result<f64> {
    shade_entropy_detail(p_hat, k_obs, n, s_final).map(|r| r.value)
}

pub fn shade_entropy_detail(
    p_hat: &[f64],
    k_obs: usize,
    n: usize,
    s_final: f64,
) -> Result<EntropyReadout> {
    if !(s_final > 0.0) || !s_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "final cardinality must be positive and finite, got {s_final}"
        )));
    }
    if p_hat.is_empty() || n == 0 {
        return Err(Error::EmptySample);
    }
    let total: f64 = p_hat.iter().sum();
    if (total - 1.0).abs() > 1e-10 || p_hat.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "class frequencies must be positive and sum to 1, got sum {total}"
        )));
    }

    let mut clamped = 0;
    let mut mass = 0.0;
    let mut value = 0.0;
    let mut p_star = Vec::with_capacity(p_hat.len());
    for &p in p_hat {
        let raw = k_obs as f64 * p / s_final;
        mass += raw;
        let q = if raw > 1.0 {
            clamped += 1;
            1.0
        } else {
            raw.max(f64::MIN_POSITIVE)
        };
        if q < 1.0 {
            // 1 - (1 - q)^n, accurate for small q
            let visible = -(n as f64 * (-q).ln_1p()).exp_m1();
            value -= q * q.ln() / visible;
        }
        p_star.push(q);
    }
    if clamped > 0 {
        warn!("clamped {clamped} adjusted class probabilities to 1 (s_final = {s_final})");
    }
    Ok(EntropyReadout {
        value,
        p_star,
        p_star_mass: mass,
        clamped,
    })
}

/// Empirical-frequency entropy in nats.
pub fn plugin_entropy(p_hat: &[f64]) -> f64 {
    -p_hat
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Every cardinality estimate and entropy score for one query.
///
/// Spectral quantities (and everything fused from them) are `None` when
/// the query carried no entailment matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateBundle {
    pub n: usize,
    pub k_obs: usize,
    pub missing_mass_gt: f64,
    pub coverage_gt: f64,
    pub missing_mass_ggt: f64,
    pub coverage_ggt: f64,
    pub s_plugin: f64,
    pub s_gt: f64,
    pub s_ggt: f64,
    pub s_soft_eigv: Option<f64>,
    pub u_eigv: Option<f64>,
    pub s_hybrid_gt: Option<f64>,
    pub s_hybrid_ggt: Option<f64>,
    pub fusion_branch: Option<FusionBranch>,
    pub s_hybrid: Option<f64>,
    pub s_final: Option<f64>,
    pub h_shade: Option<f64>,
    /// Entropy readout on the uncorrected hybrid cardinality.
    pub h_hybrid: Option<f64>,
    pub p_star_clamped: usize,
    pub h_plugin: f64,
    pub dse: f64,
    pub numsets: usize,
    pub p_hat: Vec<f64>,
    pub p_star: Option<Vec<f64>>,
}

/// Run the full pipeline on one query.
///
/// `labels` fixes the semantic classes when present; otherwise the
/// entailment matrix is clustered at `cfg.entail_threshold`. Spectral
/// fields need the entailment matrix.
pub fn score_query(
    labels: Option<&[i64]>,
    entailment: Option<&EntailmentMatrix>,
    cfg: &FusionConfig,
) -> Result<EstimateBundle> {
    let profile = match (labels, entailment) {
        (Some(l), Some(m)) if l.len() != m.n() => {
            return Err(Error::Dimension(format!(
                "{} cluster labels for a {}x{} entailment matrix",
                l.len(),
                m.n(),
                m.n()
            )))
        }
        (Some(l), _) => OccupancyProfile::from_labels(l)?,
        (None, Some(m)) => OccupancyProfile::from_labels(&cluster_bidirectional(m, cfg.entail_threshold))?,
        (None, None) => return Err(Error::EmptySample),
    };
    score_profile(&profile, entailment, cfg)
}

/// Score every query in parallel; output order follows input order.
pub fn score_queries(queries: &[crate::record::Query], cfg: &FusionConfig) -> Result<Vec<EstimateBundle>> {
    queries
        .par_iter()
        .map(|q| score_query(q.cluster_labels.as_deref(), q.entailment.as_ref(), cfg))
        .collect()
}

/// Pipeline entry point for an already tabulated profile.
pub fn score_profile(
    profile: &OccupancyProfile,
    entailment: Option<&EntailmentMatrix>,
    cfg: &FusionConfig,
) -> Result<EstimateBundle> {
    let n = profile.n();
    let k_obs = profile.k_obs();
    let plugin = plugin_estimate(profile);
    let gt = gt_estimate(profile);
    let ggt = ggt_estimate(profile);
    let p_hat = profile.frequencies();
    let h_plugin = plugin_entropy(&p_hat);

    let mut bundle = EstimateBundle {
        n,
        k_obs,
        missing_mass_gt: gt.missing_mass,
        coverage_gt: gt.coverage,
        missing_mass_ggt: ggt.missing_mass,
        coverage_ggt: ggt.coverage,
        s_plugin: plugin.cardinality,
        s_gt: gt.cardinality,
        s_ggt: ggt.cardinality,
        s_soft_eigv: None,
        u_eigv: None,
        s_hybrid_gt: None,
        s_hybrid_ggt: None,
        fusion_branch: None,
        s_hybrid: None,
        s_final: None,
        h_shade: None,
        h_hybrid: None,
        p_star_clamped: 0,
        h_plugin,
        dse: h_plugin,
        numsets: k_obs,
        p_hat,
        p_star: None,
    };

    let Some(m) = entailment else {
        return Ok(bundle);
    };
    if m.n() != n {
        return Err(Error::Dimension(format!(
            "profile has {n} responses, entailment matrix is {}x{}",
            m.n(),
            m.n()
        )));
    }
    let spectrum = SemanticGraph::from_entailment(m).spectrum()?;
    let s_soft = spectrum.heat_trace(cfg.beta)?;
    let s_hybrid = fuse(ggt.cardinality, s_soft, ggt.coverage, cfg);
    let s_final = finite_sample_correct_signed(s_hybrid, k_obs, n, cfg.correction_sign);

    let shade = shade_entropy_detail(&bundle.p_hat, k_obs, n, s_final)?;
    let hybrid = shade_entropy_detail(&bundle.p_hat, k_obs, n, s_hybrid)?;

    bundle.s_soft_eigv = Some(s_soft);
    bundle.u_eigv = Some(spectrum.u_eigv());
    bundle.s_hybrid_gt = Some(convex_fuse(gt.cardinality, s_soft, gt.coverage));
    bundle.s_hybrid_ggt = Some(convex_fuse(ggt.cardinality, s_soft, ggt.coverage));
    bundle.fusion_branch = Some(fusion_branch(ggt.coverage, cfg.tau));
    bundle.s_hybrid = Some(s_hybrid);
    bundle.s_final = Some(s_final);
    bundle.h_shade = Some(shade.value);
    bundle.h_hybrid = Some(hybrid.value);
    bundle.p_star_clamped = shade.clamped;
    bundle.p_star = Some(shade.p_star);
    Ok(bundle)
}
