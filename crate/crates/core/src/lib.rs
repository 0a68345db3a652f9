// SPDX-License-Identifier: Apache-2.0

//! Semantic alphabet-size estimation for small samples of model responses.
//!
//! Two estimates of the number of distinct meanings are combined: a
//! generalized Good–Turing coverage correction of the observed class
//! count, and the heat-kernel trace of the normalized Laplacian of an
//! entailment-weighted response graph. The estimated coverage decides how
//! they are fused; the fused cardinality is then turned into a
//! visibility-adjusted entropy usable as a risk score.
//!
//! ```
//! use shade_core::{score_query, FusionConfig};
//!
//! let bundle = score_query(Some(&[0, 0, 1, 2, 2]), None, &FusionConfig::default()).unwrap();
//! assert_eq!(bundle.k_obs, 3);
//! assert!(bundle.s_ggt >= 3.0);
//! ```

pub mod config;
pub mod error;
pub mod estimate;
pub mod evaluation;
pub mod graph;
pub mod occupancy;
pub mod record;
pub mod report;
pub mod synthetic;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use estimate::{
    finite_sample_correct, fuse, score_queries, score_query, shade_entropy, EstimateBundle, FusionBranch, FusionConfig,
};
pub use evaluation::{
    detect, pairwise_win_rates, pseudo_oracle, roc_auc, subsample_eval, DetectionScore, Estimator,
    PooledErrorReport, WinRateReport,
};
pub use graph::{EntailmentMatrix, SemanticGraph, Spectrum};
pub use occupancy::{ggt_estimate, gt_estimate, plugin_estimate, CoverageEstimate, OccupancyProfile};
pub use record::{load_jsonl, LoadMode, Query, QueryRecord};
pub use synthetic::{generate_pool, SyntheticSpec};
