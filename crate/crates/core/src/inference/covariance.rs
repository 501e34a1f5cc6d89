//! Cluster-robust (sandwich) covariance.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::linalg::{Matrix, RankFilteredQr};
use super::InferenceError;

/// Small-sample correction applied to the sandwich.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Cr0,
    /// `G/(G-1) * (n-1)/(n-k)`.
    #[default]
    Cr1,
}

pub fn cr1_factor(clusters: usize, n: usize, k: usize) -> f64 {
    (clusters as f64 / (clusters as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64))
}

/// Dense cluster index per row, numbered in first-seen order.
pub(crate) fn cluster_index<S: AsRef<str>>(ids: &[S]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<&str, usize> = BTreeMap::new();
    for id in ids {
        let next = map.len();
        map.entry(id.as_ref()).or_insert(next);
    }
    let idx = ids.iter().map(|id| map[id.as_ref()]).collect();
    (idx, map.len())
}

/// Sandwich over the columns `qr` kept from `x`.
pub(crate) fn sandwich(
    qr: &RankFilteredQr,
    x: &Matrix,
    residuals: &[f64],
    cluster_of: &[usize],
    n_clusters: usize,
    correction: Correction,
) -> Result<Matrix, InferenceError> {
    let n = x.rows();
    let kept = qr.kept();
    let k = kept.len();
    if n_clusters < 2 {
        return Err(InferenceError::SingleCluster(n_clusters));
    }
    if n <= k && correction == Correction::Cr1 {
        return Err(InferenceError::DofTooSmall((n as f64) - (k as f64)));
    }

    // Per-cluster scores X_g' e_g.
    let mut scores = vec![0.0; n_clusters * k];
    for (c, &j) in kept.iter().enumerate() {
        let col = x.col(j);
        for i in 0..n {
            let v = col[i] * residuals[i];
            if v != 0.0 {
                scores[cluster_of[i] * k + c] += v;
            }
        }
    }
    let mut meat = Matrix::zeros(k, k);
    for g in 0..n_clusters {
        let s = &scores[g * k..(g + 1) * k];
        for b in 0..k {
            if s[b] == 0.0 {
                continue;
            }
            for a in 0..k {
                let v = meat.get(a, b) + s[a] * s[b];
                meat.set(a, b, v);
            }
        }
    }
    let bread = qr.xtx_inverse();
    let raw = bread.matmul(&meat).matmul(&bread);
    let factor = match correction {
        Correction::Cr0 => 1.0,
        Correction::Cr1 => cr1_factor(n_clusters, n, k),
    };
    let mut v = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            // Symmetrize away rounding asymmetry.
            v.set(a, b, 0.5 * (raw.get(a, b) + raw.get(b, a)) * factor);
        }
    }
    Ok(v)
}

/// Cluster-robust covariance `(X'X)^{-1} (Σ_g X_g' e_g e_g' X_g) (X'X)^{-1}`
/// with the chosen small-sample correction. `X` must have full column rank.
pub fn cluster_covariance<S: AsRef<str>>(
    x: &Matrix,
    residuals: &[f64],
    clusters: &[S],
    correction: Correction,
) -> Result<Matrix, InferenceError> {
    if residuals.len() != x.rows() || clusters.len() != x.rows() {
        return Err(InferenceError::Dimension("residuals/clusters vs X rows"));
    }
    let qr = RankFilteredQr::factor(x);
    if !qr.dropped().is_empty() {
        return Err(InferenceError::Singular(qr.dropped().len()));
    }
    let (cluster_of, g) = cluster_index(clusters);
    sandwich(&qr, x, residuals, &cluster_of, g, correction)
}
