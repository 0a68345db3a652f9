// SPDX-License-Identifier: Apache-2.0

//! Frequency-of-frequencies statistics and coverage-based cardinality
//! estimators (plugin, Good–Turing, generalized Good–Turing).

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::error::{Error, Result};

/// Lower clamp applied to every coverage estimate.
pub const COVERAGE_FLOOR: f64 = 1e-12;

/// Coefficients of the stabilized generalized Good–Turing missing-mass
/// formula
///
/// ```text
/// M = (1/n)(1 - a / n^b) f1 + (c / n^d) f2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgtConstants {
    pub singleton_scale: f64,
    pub singleton_exponent: f64,
    pub doubleton_scale: f64,
    pub doubleton_exponent: f64,
}

impl GgtConstants {
    pub const DEFAULT: Self = Self {
        singleton_scale: 2.08,
        singleton_exponent: 0.7,
        doubleton_scale: 4.1,
        doubleton_exponent: 1.7,
    };
}

impl Default for GgtConstants {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Occupancy statistics of one sample of `n` responses.
///
/// Class identities are discarded: `class_counts` is kept in descending
/// order so every derived quantity is independent of label order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyProfile {
    n: usize,
    class_counts: Vec<usize>,
    freq_of_freq: BTreeMap<usize, usize>,
}

impl OccupancyProfile {
    /// Tabulate a sequence of cluster identifiers.
    pub fn from_labels<T: Eq + Hash>(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut counts: HashMap<&T, usize> = HashMap::new();
        for label in labels {
            *counts.entry(label).or_default() += 1;
        }
        Self::from_counts(counts.into_values().collect())
    }

    /// Build a profile from per-class counts. Zero counts are rejected.
    pub fn from_counts(mut class_counts: Vec<usize>) -> Result<Self> {
        if class_counts.is_empty() {
            return Err(Error::EmptySample);
        }
        if class_counts.contains(&0) {
            return Err(Error::InvalidParameter("class counts must be positive".into()));
        }
        class_counts.sort_unstable_by(|a, b| b.cmp(a));
        let mut freq_of_freq = BTreeMap::new();
        for &c in &class_counts {
            *freq_of_freq.entry(c).or_default() += 1;
        }
        Ok(Self {
            n: class_counts.iter().sum(),
            class_counts,
            freq_of_freq,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_obs(&self) -> usize {
        self.class_counts.len()
    }

    /// Number of classes seen exactly `m` times.
    pub fn f(&self, m: usize) -> usize {
        self.freq_of_freq.get(&m).copied().unwrap_or(0)
    }

    pub fn freq_of_freq(&self) -> &BTreeMap<usize, usize> {
        &self.freq_of_freq
    }

    /// Per-class counts, largest first.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Empirical class frequencies `c_i / n`, in the order of [`Self::class_counts`].
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.class_counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Missing mass, coverage and the implied cardinality `k_obs / coverage`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    /// Value before clamping, kept for diagnostics.
    pub missing_mass: f64,
    pub coverage: f64,
    pub cardinality: f64,
}

impl CoverageEstimate {
    fn from_missing_mass(missing_mass: f64, k_obs: usize) -> Self {
        let coverage = (1.0 - missing_mass).clamp(COVERAGE_FLOOR, 1.0);
        Self {
            missing_mass,
            coverage,
            cardinality: k_obs as f64 / coverage,
        }
    }
}

/// Raw observed class count; assumes full coverage.
pub fn plugin_estimate(p: &OccupancyProfile) -> CoverageEstimate {
    CoverageEstimate {
        missing_mass: 0.0,
        coverage: 1.0,
        cardinality: p.k_obs() as f64,
    }
}

/// Classical Good–Turing: missing mass `f1 / n`.
pub fn gt_estimate(p: &OccupancyProfile) -> CoverageEstimate {
    let m = p.f(1) as f64 / p.n() as f64;
    CoverageEstimate::from_missing_mass(m, p.k_obs())
}

/// Generalized Good–Turing with the default constants.
pub fn ggt_estimate(p: &OccupancyProfile) -> CoverageEstimate {
    ggt_estimate_with(p, &GgtConstants::DEFAULT)
}

/// Generalized Good–Turing using singleton and doubleton counts.
///
/// For `n <= 2` the singleton coefficient is negative; the raw value is
/// kept in `missing_mass` and the coverage clamp absorbs it.
pub fn ggt_estimate_with(p: &OccupancyProfile, k: &GgtConstants) -> CoverageEstimate {
    let n = p.n() as f64;
    let f1 = p.f(1) as f64;
    let f2 = p.f(2) as f64;
    let m = (1.0 / n) * (1.0 - k.singleton_scale / n.powf(k.singleton_exponent)) * f1
        + (k.doubleton_scale / n.powf(k.doubleton_exponent)) * f2;
    CoverageEstimate::from_missing_mass(m, p.k_obs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(labels: &str) -> OccupancyProfile {
        let chars: Vec<char> = labels.chars().collect();
        OccupancyProfile::from_labels(&chars).unwrap()
    }

    #[test]
    fn tabulates_labels() {
        let p = profile("AABCC");
        assert_eq!((p.n(), p.k_obs(), p.f(1), p.f(2)), (5, 3, 1, 2));

        let p = profile("AAA");
        assert_eq!((p.n(), p.k_obs(), p.f(3)), (3, 1, 1));

        let p = profile("ABCDE");
        assert_eq!((p.n(), p.k_obs(), p.f(1)), (5, 5, 5));
    }

    #[test]
    fn empty_sample_is_rejected() {
        let empty: [u8; 0] = [];
        let err = OccupancyProfile::from_labels(&empty).unwrap_err();
        assert_eq!(err.to_string(), "empty sample");
    }

    #[test]
    fn gt_examples() {
        // n=5, k_obs=4, f1=3: counts {2,1,1,1}
        let p = OccupancyProfile::from_counts(vec![2, 1, 1, 1]).unwrap();
        let e = gt_estimate(&p);
        assert!((e.missing_mass - 0.6).abs() < 1e-15);
        assert!((e.coverage - 0.4).abs() < 1e-15);
        assert!((e.cardinality - 10.0).abs() < 1e-12);

        let p = OccupancyProfile::from_counts(vec![3, 2]).unwrap();
        let e = gt_estimate(&p);
        assert_eq!((e.missing_mass, e.coverage, e.cardinality), (0.0, 1.0, 2.0));

        let p = OccupancyProfile::from_counts(vec![1]).unwrap();
        let e = gt_estimate(&p);
        assert_eq!(e.missing_mass, 1.0);
        assert_eq!(e.coverage, COVERAGE_FLOOR);
        assert!((e.cardinality - 1e12).abs() < 1.0);
    }

    #[test]
    fn ggt_zero_singletons_matches_plugin() {
        let p = OccupancyProfile::from_counts(vec![4, 3, 3]).unwrap();
        assert_eq!(ggt_estimate(&p), plugin_estimate(&p));
        assert_eq!(ggt_estimate(&p).cardinality, 3.0);
    }

    #[test]
    fn ggt_small_n_keeps_negative_mass() {
        // n=2, two singletons: coefficient of f1 is negative.
        let p = profile("AB");
        let e = ggt_estimate(&p);
        assert!(e.missing_mass < 0.0);
        assert_eq!(e.coverage, 1.0);
        assert_eq!(e.cardinality, 2.0);
    }

    #[test]
    fn plugin_examples() {
        assert_eq!(plugin_estimate(&profile("ABCDD")).cardinality, 4.0);
        assert_eq!(plugin_estimate(&profile("A")).cardinality, 1.0);
        assert_eq!(plugin_estimate(&profile("ABB")).cardinality, 2.0);
    }
}
