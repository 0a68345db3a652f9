// SPDX-License-Identifier: Apache-2.0

//! Entailment-weighted response graphs and their normalized Laplacian
//! spectra.
//!
//! Responses are nodes; the weight between two responses is the mean of the
//! two directed entailment probabilities. The heat-kernel trace
//! `tr(exp(-beta L)) = sum_i exp(-beta lambda_i)` of the normalized
//! Laplacian acts as a soft count of semantic modes: every connected
//! component contributes exactly one zero eigenvalue, and the remaining
//! eigenvalues are damped exponentially.

mod cluster;
mod eigen;

pub use cluster::{cluster_bidirectional, DisjointSet};
pub use eigen::{eigenvalues_symmetric, DenseMatrix, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};

use crate::error::{Error, Result};

/// Tolerance on Laplacian eigenvalues falling outside `[0, 2]`.
pub const SPECTRUM_TOLERANCE: f64 = 1e-8;

/// Directed entailment probabilities `a[i][j]` (response `i` entails `j`).
/// The diagonal is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EntailmentMatrix {
    inner: DenseMatrix,
}

impl EntailmentMatrix {
    /// Validate entries and force the diagonal to 1.
    pub fn new(mut inner: DenseMatrix) -> Result<Self> {
        let n = inner.n();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        for i in 0..n {
            for j in 0..n {
                let value = inner[(i, j)];
                if i != j && !(0.0..=1.0).contains(&value) {
                    return Err(Error::EntryOutOfRange { row: i, col: j, value });
                }
            }
            inner[(i, i)] = 1.0;
        }
        Ok(Self { inner })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    /// Restrict to a subset of responses.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            inner: self.inner.select(idx),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.inner.row(i).to_vec()).collect()
    }
}

/// Undirected weighted graph over responses, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGraph {
    weights: DenseMatrix,
    degrees: Vec<f64>,
}

impl SemanticGraph {
    /// Symmetrize entailment into weights `w_ij = (a_ij + a_ji) / 2`.
    pub fn from_entailment(m: &EntailmentMatrix) -> Self {
        let n = m.n();
        let mut w = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        Self::from_symmetric_weights(w)
    }

    fn from_symmetric_weights(weights: DenseMatrix) -> Self {
        let degrees = (0..weights.n()).map(|i| weights.row(i).iter().sum()).collect();
        Self { weights, degrees }
    }

    /// Build directly from a symmetric weight matrix. The diagonal is
    /// ignored.
    pub fn from_weights(mut w: DenseMatrix) -> Result<Self> {
        let n = w.n();
        for i in 0..n {
            w[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (w[(i, j)], w[(j, i)]);
                if a != b {
                    return Err(Error::NotSymmetric { row: i, col: j, gap: (a - b).abs() });
                }
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::EntryOutOfRange { row: i, col: j, value: a });
                }
            }
        }
        Ok(Self::from_symmetric_weights(w))
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Number of connected components of the positive-weight relation;
    /// each isolated node counts as its own component.
    pub fn component_count(&self) -> usize {
        let n = self.n();
        let mut dsu = DisjointSet::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.weights[(i, j)] > 0.0 {
                    dsu.union(i, j);
                }
            }
        }
        dsu.component_count()
    }

    /// `L = I - D^{-1/2} W D^{-1/2}`, with all-zero rows and columns for
    /// isolated nodes.
    pub fn normalized_laplacian(&self) -> DenseMatrix {
        let n = self.n();
        let inv_sqrt: Vec<f64> = self
            .degrees
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        let mut l = DenseMatrix::zeros(n);
        for i in 0..n {
            if self.degrees[i] <= 0.0 {
                continue;
            }
            l[(i, i)] = 1.0;
            for j in 0..n {
                if j != i {
                    l[(i, j)] = -self.weights[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
                }
            }
        }
        l
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::from_laplacian_eigenvalues(eigenvalues_symmetric(&self.normalized_laplacian())?)
    }
}

/// Ascending normalized-Laplacian eigenvalues, clamped into `[0, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Accepts values within [`SPECTRUM_TOLERANCE`] of `[0, 2]` and clamps
    /// them into range.
    pub fn from_laplacian_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        for lam in eigenvalues.iter_mut() {
            if !(-SPECTRUM_TOLERANCE..=2.0 + SPECTRUM_TOLERANCE).contains(lam) {
                return Err(Error::SpectrumOutOfRange(*lam));
            }
            *lam = lam.clamp(0.0, 2.0);
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Heat-kernel trace `sum_i exp(-beta lambda_i)` (Soft-EigV).
    pub fn heat_trace(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(self.eigenvalues.iter().map(|&lam| (-beta * lam).exp()).sum())
    }

    /// Continuous cluster count `sum_i max(0, 1 - lambda_i)` (U-EigV).
    pub fn u_eigv(&self) -> f64 {
        self.eigenvalues.iter().map(|&lam| (1.0 - lam).max(0.0)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize, w: f64) -> SemanticGraph {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { w }).collect())
            .collect();
        SemanticGraph::from_entailment(&EntailmentMatrix::from_rows(&rows).unwrap())
    }

    #[test]
    fn symmetrize_averages_directions() {
        let m = EntailmentMatrix::from_rows(&[vec![1.0, 0.8], vec![0.4, 1.0]]).unwrap();
        let g = SemanticGraph::from_entailment(&m);
        assert!((g.weight(0, 1) - 0.6).abs() < 1e-15);
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
        assert_eq!(g.weight(0, 0), 0.0);
    }

    #[test]
    fn symmetric_input_is_fixed_point() {
        let rows = vec![
            vec![1.0, 0.3, 0.7],
            vec![0.3, 1.0, 0.2],
            vec![0.7, 0.2, 1.0],
        ];
        let g = SemanticGraph::from_entailment(&EntailmentMatrix::from_rows(&rows).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { rows[i][j] };
                assert_eq!(g.weight(i, j), expect);
            }
        }
    }

    #[test]
    fn zero_entailment_gives_zero_weights() {
        let g = complete(3, 0.0);
        assert!(g.degrees().iter().all(|&d| d == 0.0));
        assert_eq!(g.normalized_laplacian(), DenseMatrix::zeros(3));
    }

    #[test]
    fn rejects_out_of_range_entries() {
        let err = EntailmentMatrix::from_rows(&[vec![1.0, 1.2], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::EntryOutOfRange { row: 0, col: 1, .. }));
        assert!(EntailmentMatrix::from_rows(&[vec![1.0, -0.1], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn diagonal_forced_to_one() {
        let m = EntailmentMatrix::from_rows(&[vec![0.3, 0.1], vec![0.1, 0.0]]).unwrap();
        assert_eq!((m.get(0, 0), m.get(1, 1)), (1.0, 1.0));
    }

    #[test]
    fn laplacian_two_nodes() {
        let l = complete(2, 1.0).normalized_laplacian();
        assert_eq!(l.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn laplacian_triangle() {
        let l = complete(3, 1.0).normalized_laplacian();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { -0.5 };
                assert!((l[(i, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn heat_trace_examples() {
        let s = Spectrum::from_laplacian_eigenvalues(vec![0.0; 3]).unwrap();
        assert_eq!(s.heat_trace(0.3).unwrap(), 3.0);
        assert_eq!(s.heat_trace(7.0).unwrap(), 3.0);

        let s = complete(2, 1.0).spectrum().unwrap();
        assert!((s.heat_trace(1.0).unwrap() - 1.1353352832366126919).abs() < 1e-12);

        let s = complete(4, 1.0).spectrum().unwrap();
        assert!((s.heat_trace(1.0).unwrap() - 1.7907914143471803102).abs() < 1e-12);
    }

    #[test]
    fn heat_trace_rejects_nonpositive_beta() {
        let s = Spectrum::from_laplacian_eigenvalues(vec![0.0, 2.0]).unwrap();
        assert!(s.heat_trace(0.0).is_err());
        assert!(s.heat_trace(-1.0).is_err());
        assert!(s.heat_trace(f64::NAN).is_err());
    }

    #[test]
    fn u_eigv_examples() {
        let s = Spectrum::from_laplacian_eigenvalues(vec![0.0; 3]).unwrap();
        assert_eq!(s.u_eigv(), 3.0);
        let s = Spectrum::from_laplacian_eigenvalues(vec![0.0, 2.0]).unwrap();
        assert_eq!(s.u_eigv(), 1.0);
        let s = Spectrum::from_laplacian_eigenvalues(vec![1.0; 3]).unwrap();
        assert_eq!(s.u_eigv(), 0.0);
    }

    #[test]
    fn spectrum_clamps_and_rejects() {
        let s = Spectrum::from_laplacian_eigenvalues(vec![2.0 + 1e-9, -1e-9]).unwrap();
        assert_eq!(s.eigenvalues(), &[0.0, 2.0]);
        assert!(Spectrum::from_laplacian_eigenvalues(vec![2.1]).is_err());
    }

    #[test]
    fn isolated_node_counts_as_mode() {
        // pair 0-1 connected, node 2 isolated
        let rows = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let g = SemanticGraph::from_entailment(&EntailmentMatrix::from_rows(&rows).unwrap());
        assert_eq!(g.component_count(), 2);
        let s = g.spectrum().unwrap();
        let zeros = s.eigenvalues().iter().filter(|l| l.abs() < 1e-9).count();
        assert_eq!(zeros, 2);
    }
}
