use alloc::vec::Vec;

use super::linalg::{Matrix, RankFilteredQr};
use super::InferenceError;

/// Ordinary least squares solved through the rank-filtered QR.
pub struct OlsFit {
    /// One entry per input column; `None` for columns the rank filter dropped.
    pub coefficients: Vec<Option<f64>>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rank: usize,
    /// `n - rank`.
    pub dof: usize,
    pub(crate) qr: RankFilteredQr,
}

impl OlsFit {
    pub fn kept(&self) -> &[usize] {
        self.qr.kept()
    }

    pub fn dropped(&self) -> &[usize] {
        self.qr.dropped()
    }

    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    /// Coefficients of the kept columns only.
    pub fn kept_coefficients(&self) -> Vec<f64> {
        self.coefficients.iter().filter_map(|c| *c).collect()
    }

    pub fn qr(&self) -> &RankFilteredQr {
        &self.qr
    }
}

pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<OlsFit, InferenceError> {
    if x.rows() != y.len() {
        return Err(InferenceError::Dimension("X rows != y length"));
    }
    if x.rows() == 0 {
        return Err(InferenceError::EmptyDesign);
    }
    if !x.is_finite() {
        return Err(InferenceError::NonFinite("X"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(InferenceError::NonFinite("y"));
    }
    let qr = RankFilteredQr::factor(x);
    if qr.rank() == 0 {
        return Err(InferenceError::RankZero);
    }
    let beta = qr.solve(y);
    let mut coefficients = alloc::vec![None; x.cols()];
    for (b, &j) in beta.iter().zip(qr.kept()) {
        coefficients[j] = Some(*b);
    }
    let mut fitted = alloc::vec![0.0; x.rows()];
    for (b, &j) in beta.iter().zip(qr.kept()) {
        for (f, v) in fitted.iter_mut().zip(x.col(j)) {
            *f += v * b;
        }
    }
    let residuals = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    Ok(OlsFit {
        coefficients,
        residuals,
        fitted,
        rank: qr.rank(),
        dof: x.rows() - qr.rank(),
        qr,
    })
}
