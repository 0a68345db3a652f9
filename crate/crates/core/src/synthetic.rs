// SPDX-License-Identifier: Apache-2.0

//! Synthetic query pools with a known semantic alphabet.
//!
//! Each query draws `responses` class labels i.i.d. from a Zipf or
//! symmetric-Dirichlet distribution over `alphabet_size` classes, then
//! fills the entailment matrix with interval-uniform noise: entries
//! between responses of the same class fall in `within`, all others in
//! `cross`. Query `i` uses the ChaCha8 stream `(seed, stream = i)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::query_rng;
use crate::record::{CorrectnessLabels, QueryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassFamily {
    /// `p_k ∝ k^{-exponent}`, `k = 1..=K`.
    Zipf { exponent: f64 },
    /// Class probabilities drawn from `Dirichlet(concentration, ..)`.
    Dirichlet { concentration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub alphabet_size: usize,
    pub family: ClassFamily,
    /// Responses per query.
    pub responses: usize,
    pub queries: usize,
    /// Entailment range for pairs in the same class.
    pub within: [f64; 2],
    /// Entailment range for pairs in different classes.
    pub cross: [f64; 2],
    /// Permit `cross` to reach into `within`.
    pub allow_overlap: bool,
    pub seed: u64,
    pub with_entailment: bool,
    /// Per-query Zipf exponent is scaled by `1 + jitter * U(-1, 1)`.
    pub exponent_jitter: f64,
    /// Emit incorrectness labels treating class 0 as the correct answer.
    pub correctness_labels: bool,
    pub dataset: Option<String>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            alphabet_size: 12,
            family: ClassFamily::Zipf { exponent: 1.2 },
            responses: 100,
            queries: 300,
            within: [0.8, 1.0],
            cross: [0.0, 0.2],
            allow_overlap: false,
            seed: 0,
            with_entailment: true,
            exponent_jitter: 0.0,
            correctness_labels: false,
            dataset: None,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.alphabet_size == 0 {
            return bad("alphabet_size must be at least 1".into());
        }
        if self.responses == 0 {
            return bad("responses must be at least 1".into());
        }
        for (name, [lo, hi]) in [("within", self.within), ("cross", self.cross)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return bad(format!("{name} range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"));
            }
        }
        if !self.allow_overlap && !(self.cross[1] < self.within[0]) {
            return bad(format!(
                "cross upper bound {} must lie below within lower bound {}",
                self.cross[1], self.within[0]
            ));
        }
        match self.family {
            ClassFamily::Zipf { exponent } if !(exponent >= 0.0) || !exponent.is_finite() => {
                return bad(format!("zipf exponent must be finite and >= 0, got {exponent}"))
            }
            ClassFamily::Dirichlet { concentration } if !(concentration > 0.0) || !concentration.is_finite() => {
                return bad(format!("dirichlet concentration must be positive, got {concentration}"))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.exponent_jitter) {
            return bad(format!("exponent_jitter must lie in [0, 1), got {}", self.exponent_jitter));
        }
        Ok(())
    }
}

/// Zipf class probabilities over `k` classes.
pub fn zipf_probabilities(k: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=k).map(|r| (r as f64).powf(-exponent)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Generate `queries` records; `spec.queries` is ignored.
pub fn generate_pool(spec: &SyntheticSpec, queries: usize) -> Result<Vec<QueryRecord>> {
    spec.validate()?;
    (0..queries)
        .into_par_iter()
        .map(|i| generate_query(spec, i))
        .collect()
}

fn generate_query(spec: &SyntheticSpec, index: usize) -> Result<QueryRecord> {
    let mut rng = query_rng(spec.seed, index);
    let k = spec.alphabet_size;
    let probs = match spec.family {
        ClassFamily::Zipf { exponent } => {
            let scale = if spec.exponent_jitter > 0.0 {
                1.0 + spec.exponent_jitter * rng.random_range(-1.0..=1.0)
            } else {
                1.0
            };
            zipf_probabilities(k, exponent * scale)
        }
        ClassFamily::Dirichlet { concentration } => {
            let gamma = Gamma::new(concentration, 1.0)
                .map_err(|e| Error::Config(format!("dirichlet: {e}")))?;
            let draws: Vec<f64> = (0..k).map(|_| gamma.sample(&mut rng)).collect();
            let total: f64 = draws.iter().sum();
            if total > 0.0 {
                draws.into_iter().map(|g| g / total).collect()
            } else {
                // every gamma draw underflowed
                let mut p = vec![0.0; k];
                p[rng.random_range(0..k)] = 1.0;
                p
            }
        }
    };
    let picker = WeightedIndex::new(&probs).map_err(|e| Error::Config(format!("class weights: {e}")))?;
    let labels: Vec<i64> = (0..spec.responses).map(|_| picker.sample(&mut rng) as i64).collect();

    let entailment = spec.with_entailment.then(|| {
        let n = labels.len();
        let mut rows = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let [lo, hi] = if labels[i] == labels[j] { spec.within } else { spec.cross };
                rows[i][j] = round6(rng.random_range(lo..=hi));
            }
        }
        rows
    });

    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l as usize] += 1;
    }
    let realized = counts.iter().filter(|&&c| c > 0).count();
    let correctness = spec.correctness_labels.then(|| {
        let modal = (0..k).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0);
        CorrectnessLabels {
            sequence: Some(u8::from(modal != 0)),
            response: Some(u8::from(labels[0] != 0)),
        }
    });

    Ok(QueryRecord {
        query_id: format!("syn-{index:06}"),
        question: None,
        responses: None,
        n: Some(labels.len()),
        cluster_labels: Some(labels),
        entailment,
        labels: correctness,
        dataset: spec.dataset.clone(),
        true_k: Some(k),
        realized_k: Some(realized),
    })
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        SyntheticSpec::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_specs() {
        let base = SyntheticSpec::default();
        for spec in [
            SyntheticSpec { alphabet_size: 0, ..base.clone() },
            SyntheticSpec { cross: [0.0, 0.85], ..base.clone() },
            SyntheticSpec { within: [0.9, 0.8], ..base.clone() },
            SyntheticSpec { family: ClassFamily::Dirichlet { concentration: 0.0 }, ..base.clone() },
            SyntheticSpec { family: ClassFamily::Zipf { exponent: -1.0 }, ..base.clone() },
        ] {
            assert!(generate_pool(&spec, 1).is_err(), "{spec:?}");
        }
        let overlap = SyntheticSpec { cross: [0.0, 0.85], allow_overlap: true, ..base };
        assert!(generate_pool(&overlap, 1).is_ok());
    }

    #[test]
    fn single_class_pool() {
        let spec = SyntheticSpec { alphabet_size: 1, responses: 20, ..Default::default() };
        let pool = generate_pool(&spec, 3).unwrap();
        for rec in pool {
            assert_eq!(rec.realized_k, Some(1));
            let rows = rec.entailment.unwrap();
            assert!(rows.iter().flatten().all(|&v| v >= 0.8));
        }
    }

    #[test]
    fn steep_zipf_collapses_to_one_class() {
        let spec = SyntheticSpec {
            family: ClassFamily::Zipf { exponent: 200.0 },
            with_entailment: false,
            ..Default::default()
        };
        let pool = generate_pool(&spec, 10).unwrap();
        assert!(pool.iter().all(|r| r.realized_k == Some(1)));
    }

    #[test]
    fn zipf_zero_is_uniform() {
        assert_eq!(zipf_probabilities(4, 0.0), vec![0.25; 4]);
    }

    #[test]
    fn entries_have_six_decimals() {
        let spec = SyntheticSpec { responses: 8, ..Default::default() };
        let rec = &generate_pool(&spec, 1).unwrap()[0];
        for &v in rec.entailment.as_ref().unwrap().iter().flatten() {
            assert_eq!(round6(v), v);
        }
    }

    #[test]
    fn dirichlet_pool() {
        let spec = SyntheticSpec {
            family: ClassFamily::Dirichlet { concentration: 0.5 },
            responses: 30,
            correctness_labels: true,
            ..Default::default()
        };
        let pool = generate_pool(&spec, 5).unwrap();
        for rec in &pool {
            assert!(rec.realized_k.unwrap() <= 12);
            assert!(rec.labels.is_some());
        }
    }
}
