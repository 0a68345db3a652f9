// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shade_core::graph::DenseMatrix;
use shade_core::EntailmentMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Householder reduction of a symmetric matrix to tridiagonal form;
/// returns (diagonal, off-diagonal).
pub fn tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = ((k + 1)..n).map(|i| m[i][k]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v v^T / (v^T v) acting on rows/cols k+1..n
        let idx: Vec<usize> = ((k + 1)..n).collect();
        // m <- H m H
        for col in 0..n {
            let dot: f64 = idx.iter().zip(&v).map(|(&i, vi)| vi * m[i][col]).sum();
            let f = 2.0 * dot / vnorm2;
            for (&i, vi) in idx.iter().zip(&v) {
                m[i][col] -= f * vi;
            }
        }
        for row in 0..n {
            let dot: f64 = idx.iter().zip(&v).map(|(&j, vj)| vj * m[row][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for (&j, vj) in idx.iter().zip(&v) {
                m[row][j] -= f * vj;
            }
        }
    }
    let d = (0..n).map(|i| m[i][i]).collect();
    let e = (1..n).map(|i| 0.5 * (m[i][i - 1] + m[i - 1][i])).collect();
    (d, e)
}

/// Sturm count: eigenvalues of the tridiagonal matrix strictly below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let scale = d.iter().chain(e).fold(1.0f64, |m, v| m.max(v.abs()));
    let tiny = f64::EPSILON * scale * 1e-3;
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - x - e[i - 1] * e[i - 1] / q;
        }
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a small symmetric matrix by Sturm-sequence bisection
/// on its Householder tridiagonal form. Independent of the Jacobi solver.
pub fn bisection_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.n();
    let (d, e) = tridiagonalize(a);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    lo -= 1.0;
    hi += 1.0;
    (0..n)
        .map(|k| {
            let (mut a_lo, mut a_hi) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a_lo + a_hi);
                if mid == a_lo || mid == a_hi {
                    break;
                }
                if sturm_count(&d, &e, mid) > k {
                    a_hi = mid;
                } else {
                    a_lo = mid;
                }
            }
            0.5 * (a_lo + a_hi)
        })
        .collect()
}

/// Random directed entailment matrix whose undirected support has edge
/// density `density`.
pub fn random_entailment(rng: &mut ChaCha8Rng, n: usize, density: f64) -> EntailmentMatrix {
    let mut rows = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                rows[i][j] = rng.random_range(0.05..=1.0);
                rows[j][i] = rng.random_range(0.05..=1.0);
            } else {
                rows[i][j] = 0.0;
                rows[j][i] = 0.0;
            }
        }
    }
    EntailmentMatrix::from_rows(&rows).unwrap()
}

pub fn complete_unit(n: usize) -> EntailmentMatrix {
    EntailmentMatrix::from_rows(&vec![vec![1.0; n]; n]).unwrap()
}

/// Whether two label vectors induce the same partition.
pub fn same_partition<A: Eq + std::hash::Hash + Copy, B: Eq + std::hash::Hash + Copy>(a: &[A], b: &[B]) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: HashMap<A, B> = HashMap::new();
    let mut back: HashMap<B, A> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}
