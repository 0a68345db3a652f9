// SPDX-License-Identifier: Apache-2.0

//! Evaluation protocols: subsampled alphabet-size error against a
//! large-pool pseudo-oracle, pairwise win rates, and ROC-AUC incorrectness
//! detection.
//!
//! Subsampling is seeded per query: query `i` draws from a ChaCha8 stream
//! `(seed, stream = i)`, so results do not depend on thread scheduling and
//! partial sums are merged in input order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{score_query, EstimateBundle, FusionConfig};
use crate::record::Query;

/// Cardinality estimators compared against the pseudo-oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Estimator {
    Plugin,
    Gt,
    Ggt,
    UEigv,
    SoftEigv,
    HybridGt,
    HybridGgt,
    /// Fused cardinality before the finite-sample correction.
    Hybrid,
    Shade,
}

impl Estimator {
    pub const ALL: [Estimator; 9] = [
        Self::Plugin,
        Self::Gt,
        Self::Ggt,
        Self::UEigv,
        Self::SoftEigv,
        Self::HybridGt,
        Self::HybridGgt,
        Self::Hybrid,
        Self::Shade,
    ];

    /// Enabled when a config does not list estimators.
    pub const DEFAULT: [Estimator; 7] = [
        Self::Plugin,
        Self::Gt,
        Self::Ggt,
        Self::UEigv,
        Self::HybridGt,
        Self::HybridGgt,
        Self::Shade,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Plugin => "plugin",
            Self::Gt => "gt",
            Self::Ggt => "ggt",
            Self::UEigv => "u_eigv",
            Self::SoftEigv => "soft_eigv",
            Self::HybridGt => "hybrid_gt",
            Self::HybridGgt => "hybrid_ggt",
            Self::Hybrid => "hybrid",
            Self::Shade => "shade",
        }
    }

    pub fn value(self, b: &EstimateBundle) -> Option<f64> {
        match self {
            Self::Plugin => Some(b.s_plugin),
            Self::Gt => Some(b.s_gt),
            Self::Ggt => Some(b.s_ggt),
            Self::UEigv => b.u_eigv,
            Self::SoftEigv => b.s_soft_eigv,
            Self::HybridGt => b.s_hybrid_gt,
            Self::HybridGgt => b.s_hybrid_ggt,
            Self::Hybrid => b.s_hybrid,
            Self::Shade => b.s_final,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator {s:?}")))
    }
}

impl TryFrom<String> for Estimator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Estimator> for String {
    fn from(e: Estimator) -> String {
        e.name().to_string()
    }
}

/// Uncertainty scores thresholded for incorrectness detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DetectionScore {
    Shade,
    HHybrid,
    SHybrid,
    NumSets,
    HPlugin,
    Dse,
}

impl DetectionScore {
    pub const ALL: [DetectionScore; 6] = [
        Self::Shade,
        Self::HHybrid,
        Self::SHybrid,
        Self::NumSets,
        Self::HPlugin,
        Self::Dse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shade => "shade",
            Self::HHybrid => "h_hybrid",
            Self::SHybrid => "s_hybrid",
            Self::NumSets => "numsets",
            Self::HPlugin => "h_plugin",
            Self::Dse => "dse",
        }
    }

    pub fn value(self, b: &EstimateBundle) -> Option<f64> {
        match self {
            Self::Shade => b.h_shade,
            Self::HHybrid => b.h_hybrid,
            Self::SHybrid => b.s_hybrid,
            Self::NumSets => Some(b.numsets as f64),
            Self::HPlugin => Some(b.h_plugin),
            Self::Dse => Some(b.dse),
        }
    }
}

impl fmt::Display for DetectionScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectionScore {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown detection score {s:?}")))
    }
}

impl TryFrom<String> for DetectionScore {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DetectionScore> for String {
    fn from(e: DetectionScore) -> String {
        e.name().to_string()
    }
}

/// Which cardinality the subsample estimates are scored against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Distinct classes among the first `pool_size` responses.
    #[default]
    Pool,
    /// The record's `true_k` field.
    TrueK,
}

/// Distinct-class count of each query's first `pool_size` responses;
/// `None` for queries with fewer responses.
pub fn pseudo_oracle(queries: &[Query], pool_size: usize, entail_threshold: f64) -> Vec<Option<usize>> {
    queries
        .iter()
        .map(|q| {
            if q.n < pool_size {
                warn!(
                    "query {}: {} responses, pool needs {pool_size}; excluded",
                    q.id, q.n
                );
                return None;
            }
            let labels = q.resolved_labels(entail_threshold);
            Some(labels[..pool_size].iter().collect::<HashSet<_>>().len())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOptions {
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub reference: Reference,
    pub estimators: Vec<Estimator>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_values: vec![5, 8, 10, 25, 50],
            trials: 10,
            seed: 0,
            pool_size: 100,
            reference: Reference::Pool,
            estimators: Estimator::DEFAULT.to_vec(),
        }
    }
}

/// MAE and RMSE of one estimator at one subsample size.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorCell {
    pub abs_sum: f64,
    pub sq_sum: f64,
    pub count: usize,
}

impl ErrorCell {
    fn push(&mut self, err: f64) {
        self.abs_sum += err.abs();
        self.sq_sum += err * err;
        self.count += 1;
    }

    fn merge(&mut self, other: &Self) {
        self.abs_sum += other.abs_sum;
        self.sq_sum += other.sq_sum;
        self.count += other.count;
    }

    pub fn mae(&self) -> Option<f64> {
        (self.count > 0).then(|| self.abs_sum / self.count as f64)
    }

    pub fn rmse(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.sq_sum / self.count as f64).sqrt())
    }
}

/// Pooled error table: `cells[e][k]` is estimator `e` at `n_values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledErrorReport {
    pub estimators: Vec<Estimator>,
    pub n_values: Vec<usize>,
    pub cells: Vec<Vec<ErrorCell>>,
    pub queries: usize,
}

impl PooledErrorReport {
    pub fn cell(&self, e: Estimator, n: usize) -> Option<&ErrorCell> {
        let i = self.estimators.iter().position(|&x| x == e)?;
        let k = self.n_values.iter().position(|&x| x == n)?;
        Some(&self.cells[i][k])
    }
}

/// Trial-averaged absolute errors of one query at one subsample size,
/// aligned with [`PooledErrorReport::estimators`].
#[derive(Debug, Clone, PartialEq)]
pub struct QueryErrors {
    pub query_id: String,
    pub n: usize,
    pub errors: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: PooledErrorReport,
    pub query_errors: Vec<QueryErrors>,
}

/// Subsample every query without replacement at each size in
/// `opts.n_values`, run every estimator, and pool the errors.
pub fn subsample_eval(queries: &[Query], opts: &EvalOptions, cfg: &FusionConfig) -> Result<Evaluation> {
    if opts.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if opts.n_values.is_empty() {
        return Err(Error::Config("n_values is empty".into()));
    }
    for &n in &opts.n_values {
        if n == 0 || n > opts.pool_size {
            return Err(Error::Config(format!(
                "subsample size {n} must lie in 1..={}",
                opts.pool_size
            )));
        }
    }

    let oracle = pseudo_oracle(queries, opts.pool_size, cfg.entail_threshold);
    let mut jobs = Vec::new();
    for (idx, (q, pool_ref)) in queries.iter().zip(oracle).enumerate() {
        let Some(pool_ref) = pool_ref else { continue };
        let reference = match opts.reference {
            Reference::Pool => pool_ref,
            Reference::TrueK => match q.true_k {
                Some(k) => k,
                None => {
                    warn!("query {}: no true_k; excluded", q.id);
                    continue;
                }
            },
        };
        jobs.push((idx, q, reference));
    }

    let partials: Vec<Result<(Vec<Vec<ErrorCell>>, Vec<QueryErrors>)>> = jobs
        .par_iter()
        .map(|&(idx, q, reference)| eval_query(idx, q, reference as f64, opts, cfg))
        .collect();

    let mut cells = vec![vec![ErrorCell::default(); opts.n_values.len()]; opts.estimators.len()];
    let mut query_errors = Vec::new();
    for partial in partials {
        let (qcells, qerrs) = partial?;
        for (row, qrow) in cells.iter_mut().zip(&qcells) {
            for (c, qc) in row.iter_mut().zip(qrow) {
                c.merge(qc);
            }
        }
        query_errors.extend(qerrs);
    }
    debug!("evaluated {} queries", jobs.len());

    Ok(Evaluation {
        report: PooledErrorReport {
            estimators: opts.estimators.clone(),
            n_values: opts.n_values.clone(),
            cells,
            queries: jobs.len(),
        },
        query_errors,
    })
}

fn eval_query(
    idx: usize,
    q: &Query,
    reference: f64,
    opts: &EvalOptions,
    cfg: &FusionConfig,
) -> Result<(Vec<Vec<ErrorCell>>, Vec<QueryErrors>)> {
    let labels = q.resolved_labels(cfg.entail_threshold);
    let mut rng = query_rng(opts.seed, idx);
    let mut cells = vec![vec![ErrorCell::default(); opts.n_values.len()]; opts.estimators.len()];
    let mut per_n = Vec::with_capacity(opts.n_values.len());

    for (k, &n) in opts.n_values.iter().enumerate() {
        let mut local = vec![ErrorCell::default(); opts.estimators.len()];
        for _ in 0..opts.trials {
            let mut picked = sample(&mut rng, opts.pool_size, n).into_vec();
            picked.sort_unstable();
            let sub_labels: Vec<i64> = picked.iter().map(|&i| labels[i]).collect();
            let sub_matrix = q.entailment.as_ref().map(|m| m.select(&picked));
            let bundle = score_query(Some(&sub_labels), sub_matrix.as_ref(), cfg)?;
            for (cell, e) in local.iter_mut().zip(&opts.estimators) {
                if let Some(v) = e.value(&bundle) {
                    cell.push(v - reference);
                }
            }
        }
        for (row, cell) in cells.iter_mut().zip(&local) {
            row[k] = *cell;
        }
        per_n.push(QueryErrors {
            query_id: q.id.clone(),
            n,
            errors: local.iter().map(|c| c.mae()).collect(),
        });
    }
    Ok((cells, per_n))
}

pub(crate) fn query_rng(seed: u64, query_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(query_index as u64);
    rng
}

/// Head-to-head tally of one estimator against a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WinRate {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

impl WinRate {
    pub fn n_valid(&self) -> usize {
        self.wins + self.losses + self.ties
    }

    /// `W / (W + L)`; ties are excluded. `None` when every pair tied.
    pub fn rate(&self) -> Option<f64> {
        let decided = self.wins + self.losses;
        (decided > 0).then(|| self.wins as f64 / decided as f64)
    }
}

/// A win is a strictly lower error for `ours`, a loss strictly higher.
pub fn win_rate(ours: &[f64], theirs: &[f64]) -> Result<WinRate> {
    if ours.len() != theirs.len() {
        return Err(Error::Dimension(format!(
            "{} errors vs {} baseline errors",
            ours.len(),
            theirs.len()
        )));
    }
    if ours.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut w = WinRate { wins: 0, losses: 0, ties: 0 };
    for (a, b) in ours.iter().zip(theirs) {
        match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Less) => w.wins += 1,
            Some(std::cmp::Ordering::Greater) => w.losses += 1,
            _ => w.ties += 1,
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinRateReport {
    pub reference: String,
    pub rows: Vec<(String, WinRate)>,
}

/// Compare `reference` against every other column, using only the rows
/// where both errors are present.
pub fn pairwise_win_rates(
    reference: &str,
    columns: &[(String, Vec<Option<f64>>)],
) -> Result<WinRateReport> {
    let Some((_, ours)) = columns.iter().find(|(name, _)| name == reference) else {
        return Err(Error::Config(format!("no error column named {reference:?}")));
    };
    let mut rows = Vec::new();
    for (name, theirs) in columns {
        if name == reference {
            continue;
        }
        if theirs.len() != ours.len() {
            return Err(Error::Dimension(format!("column {name} is not aligned")));
        }
        let (a, b): (Vec<f64>, Vec<f64>) = ours
            .iter()
            .zip(theirs)
            .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
            .unzip();
        let wr = if a.is_empty() {
            warn!("{reference} vs {name}: no item has both errors");
            WinRate { wins: 0, losses: 0, ties: 0 }
        } else {
            win_rate(&a, &b)?
        };
        rows.push((name.clone(), wr));
    }
    Ok(WinRateReport {
        reference: reference.to_string(),
        rows,
    })
}

/// Reshape trial-averaged query errors into named columns, keeping only
/// the listed subsample sizes.
pub fn error_columns(eval: &Evaluation, n_values: &[usize]) -> Vec<(String, Vec<Option<f64>>)> {
    let rows: Vec<&QueryErrors> = eval
        .query_errors
        .iter()
        .filter(|q| n_values.contains(&q.n))
        .collect();
    eval.report
        .estimators
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name().to_string(), rows.iter().map(|q| q.errors[i]).collect()))
        .collect()
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. Computed from midranks.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // doubled ranks keep midranks integral
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the midrank (i + j + 2) / 2
        let midrank2 = (i + j + 2) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        pos_rank_sum2 += midrank2 * pos_in_group;
        i = j + 1;
    }
    let np = n_pos as u128;
    let u2 = pos_rank_sum2 - np * (np + 1);
    Ok((u2 as f64 / 2.0) / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectOptions {
    /// Subsample sizes; empty means score every response of each query.
    pub n_values: Vec<usize>,
    pub seed: u64,
    pub scores: Vec<DetectionScore>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            n_values: vec![5, 8, 10],
            seed: 0,
            scores: DetectionScore::ALL.to_vec(),
        }
    }
}

/// AUCs of one score on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetAuc {
    pub dataset: String,
    pub auc_s: Option<f64>,
    pub auc_r: Option<f64>,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    /// `None` when every response was used.
    pub n: Option<usize>,
    pub score: DetectionScore,
    pub datasets: Vec<DatasetAuc>,
}

impl DetectionRow {
    /// Arithmetic mean of every AUC present in the row.
    pub fn mean(&self) -> Option<f64> {
        let vals: Vec<f64> = self
            .datasets
            .iter()
            .flat_map(|d| [d.auc_s, d.auc_r])
            .flatten()
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub datasets: Vec<String>,
    pub rows: Vec<DetectionRow>,
}

pub const DEFAULT_DATASET: &str = "default";

/// ROC-AUC of each uncertainty score for sequence- and response-level
/// incorrectness, grouped by dataset tag.
pub fn detect(queries: &[Query], opts: &DetectOptions, cfg: &FusionConfig) -> Result<DetectionReport> {
    for q in queries {
        match q.correctness {
            Some(l) if l.sequence.is_some() || l.response.is_some() => {}
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "query {} has no correctness labels",
                    q.id
                )))
            }
        }
    }
    let datasets: Vec<String> = queries
        .iter()
        .map(|q| q.dataset.clone().unwrap_or_else(|| DEFAULT_DATASET.into()))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    let sizes: Vec<Option<usize>> = if opts.n_values.is_empty() {
        vec![None]
    } else {
        opts.n_values.iter().copied().map(Some).collect()
    };

    let bundles: Vec<Result<Vec<Option<EstimateBundle>>>> = queries
        .par_iter()
        .enumerate()
        .map(|(idx, q)| {
            let mut rng = query_rng(opts.seed, idx);
            sizes
                .iter()
                .map(|&size| {
                    let sub = match size {
                        None => q.clone(),
                        Some(n) if n > q.n => {
                            warn!("query {}: {} responses < n = {n}; skipped", q.id, q.n);
                            return Ok(None);
                        }
                        Some(n) => {
                            let mut picked = sample(&mut rng, q.n, n).into_vec();
                            picked.sort_unstable();
                            q.select(&picked)
                        }
                    };
                    let labels = sub.resolved_labels(cfg.entail_threshold);
                    score_query(Some(&labels), sub.entailment.as_ref(), cfg).map(Some)
                })
                .collect()
        })
        .collect();
    let bundles = bundles.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (k, &size) in sizes.iter().enumerate() {
        for &score in &opts.scores {
            let mut per_ds: BTreeMap<&str, (Vec<(f64, bool)>, Vec<(f64, bool)>, usize)> = datasets
                .iter()
                .map(|d| (d.as_str(), Default::default()))
                .collect();
            for (q, b) in queries.iter().zip(&bundles) {
                let Some(value) = b[k].as_ref().and_then(|b| score.value(b)) else {
                    continue;
                };
                let ds = q.dataset.as_deref().unwrap_or(DEFAULT_DATASET);
                let entry = per_ds.get_mut(ds).expect("dataset collected above");
                let labels = q.correctness.unwrap_or_default();
                if let Some(s) = labels.sequence {
                    entry.0.push((value, s == 1));
                }
                if let Some(r) = labels.response {
                    entry.1.push((value, r == 1));
                }
                entry.2 += 1;
            }
            let datasets = per_ds
                .into_iter()
                .map(|(ds, (seq, resp, count))| DatasetAuc {
                    dataset: ds.to_string(),
                    auc_s: auc_of(&seq),
                    auc_r: auc_of(&resp),
                    queries: count,
                })
                .collect();
            rows.push(DetectionRow { n: size, score, datasets });
        }
    }
    Ok(DetectionReport { datasets, rows })
}

fn auc_of(pairs: &[(f64, bool)]) -> Option<f64> {
    let (s, l): (Vec<f64>, Vec<bool>) = pairs.iter().copied().unzip();
    roc_auc(&s, &l).ok()
}
