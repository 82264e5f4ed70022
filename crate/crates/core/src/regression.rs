//! Least-squares regression over kernel columns.
//!
//! The regression model is a linear combination of basis-kernel columns:
//! predictions are `K * alpha`, and `alpha` minimizes the squared training
//! residual (plus an optional ridge penalty). The solve goes through an SVD
//! rather than the normal equations, with a relative singular-value cutoff
//! of 1e-10, so rank-deficient systems produce the minimum-norm solution
//! instead of garbage.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

/// Relative singular-value cutoff: directions with `sigma < cutoff * sigma_max`
/// are dropped from the solve and from the reported rank.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-10;

/// Solver diagnostics recorded with each fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    /// Number of singular values retained by the cutoff.
    pub rank: usize,
    /// Smallest retained singular value over the largest (0 for empty fits).
    pub singular_value_ratio: f64,
    /// Ridge strength actually applied.
    pub ridge_used: f64,
    /// Count of all-zero columns in the design matrix (degenerate basis
    /// gradients produce these).
    pub degenerate_columns: usize,
}

/// Fitted basis coefficients plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    alpha: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

impl RegressionFit {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

/// Squared test error and thresholded accuracy of a prediction vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Sum of squared errors against the 0/1 targets.
    pub sse: f64,
    /// Fraction of examples whose thresholded prediction matches the label.
    pub accuracy: f64,
    pub threshold: f64,
}

/// Least-squares fit of `k * alpha ~ y` with ridge penalty `ridge >= 0`.
///
/// Solved via SVD: retained directions get the factor `sigma / (sigma^2 + ridge)`,
/// which at `ridge = 0` is the pseudoinverse (minimum-norm) solution.
pub fn fit(k: &KernelMatrix, y: &[f64], ridge: f64) -> Result<RegressionFit> {
    if k.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "fit targets",
            expected: k.rows(),
            got: y.len(),
        });
    }
    if k.cols() == 0 {
        return Err(Error::EmptyInput { context: "basis" });
    }
    if k.rows() == 0 {
        return Err(Error::EmptyInput {
            context: "training rows",
        });
    }
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    if !k.entries().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "kernel matrix".into(),
        });
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "fit targets".into(),
        });
    }

    let degenerate_columns = (0..k.cols())
        .filter(|&c| (0..k.rows()).all(|r| k.get(r, c) == 0.0))
        .count();

    let design = DMatrix::from_row_slice(k.rows(), k.cols(), k.entries());
    let rhs = DVector::from_column_slice(y);
    let svd = design.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;

    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = SINGULAR_VALUE_CUTOFF * sigma_max;

    let mut alpha = DVector::zeros(k.cols());
    let mut rank = 0;
    let mut sigma_min_kept = f64::INFINITY;
    for i in 0..sigma.len() {
        let s = sigma[i];
        if sigma_max == 0.0 || s < cutoff {
            continue;
        }
        rank += 1;
        sigma_min_kept = sigma_min_kept.min(s);
        let coeff = s / (s * s + ridge) * u.column(i).dot(&rhs);
        alpha.axpy(coeff, &v_t.row(i).transpose(), 1.0);
    }

    let singular_value_ratio = if rank > 0 {
        sigma_min_kept / sigma_max
    } else {
        0.0
    };

    Ok(RegressionFit {
        alpha: alpha.iter().cloned().collect(),
        diagnostics: FitDiagnostics {
            rank,
            singular_value_ratio,
            ridge_used: ridge,
            degenerate_columns,
        },
    })
}

/// Predictions `k * alpha` for a query-by-basis kernel matrix.
pub fn predict(k: &KernelMatrix, fit: &RegressionFit) -> Result<Vec<f64>> {
    if k.cols() != fit.alpha.len() {
        return Err(Error::DimensionMismatch {
            context: "predict coefficients",
            expected: k.cols(),
            got: fit.alpha.len(),
        });
    }
    Ok((0..k.rows())
        .map(|r| {
            k.row(r)
                .iter()
                .zip(&fit.alpha)
                .map(|(entry, a)| entry * a)
                .sum()
        })
        .collect())
}

/// Squared error and thresholded accuracy against 0/1 labels. A prediction
/// strictly greater than the threshold is class 1; ties go to class 0.
pub fn evaluate(preds: &[f64], labels: &[u8], threshold: f64) -> Result<EvalReport> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "evaluation labels",
            expected: preds.len(),
            got: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput {
            context: "evaluation set",
        });
    }
    let mut sse = 0.0;
    let mut correct = 0usize;
    for (&p, &label) in preds.iter().zip(labels) {
        debug_assert!(label <= 1);
        let y = f64::from(label);
        sse += (y - p) * (y - p);
        let predicted_positive = p > threshold;
        if predicted_positive == (label == 1) {
            correct += 1;
        }
    }
    Ok(EvalReport {
        sse,
        accuracy: correct as f64 / preds.len() as f64,
        threshold,
    })
}
