//! Kernel regularized least squares.
//!
//! The training objective on `m` labeled points is the mean squared error
//! plus `λ‖h‖²_K`. By the representer theorem `h = Σ αᵢ K(xᵢ, ·)` with
//! `(G + mλI) α = y`.

use nalgebra::{DMatrix, DVector};

use crate::kernel::{gram, gram_sym, KernelSpec};
use crate::linalg::select_rows;
use crate::{Error, Result};

/// Regularization and label scale. The hypothesis ball radius is
/// `Λ = f_max / √λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    reg_lambda: f64,
    f_max: f64,
}

impl ModelConfig {
    pub fn new(reg_lambda: f64, f_max: f64) -> Result<Self> {
        if !(reg_lambda > 0.0 && reg_lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {reg_lambda}")));
        }
        if !(f_max > 0.0 && f_max.is_finite()) {
            return Err(Error::Config(format!("f_max must be positive, got {f_max}")));
        }
        Ok(Self { reg_lambda, f_max })
    }

    pub fn reg_lambda(&self) -> f64 {
        self.reg_lambda
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    /// `Λ = f_max / √λ`
    pub fn capacity(&self) -> f64 {
        self.f_max / self.reg_lambda.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    /// Indices of the support rows in the dataset the model was fit on.
    pub support: Vec<usize>,
    support_rows: DMatrix<f64>,
    alpha: DVector<f64>,
    kernel: KernelSpec,
}

impl TrainedModel {
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support_rows(&self) -> &DMatrix<f64> {
        &self.support_rows
    }

    /// A model with explicit coefficients; used to build `u = f - h`.
    pub fn from_parts(support: Vec<usize>, support_rows: DMatrix<f64>, alpha: DVector<f64>, kernel: KernelSpec) -> Result<Self> {
        if support.len() != alpha.len() || support_rows.nrows() != alpha.len() {
            return Err(Error::Dimension(format!(
                "{} support indices, {} support rows, {} coefficients",
                support.len(),
                support_rows.nrows(),
                alpha.len()
            )));
        }
        Ok(Self { support, support_rows, alpha, kernel })
    }
}

/// Fits on all rows of `features`.
pub fn fit(features: &DMatrix<f64>, targets: &DVector<f64>, kernel: &KernelSpec, reg_lambda: f64) -> Result<TrainedModel> {
    let support: Vec<usize> = (0..features.nrows()).collect();
    fit_impl(support, features.clone(), targets.clone(), kernel, reg_lambda)
}

/// Fits on rows `idx` of `features` with the matching entries of `targets`
/// (indexed like `features`).
pub fn fit_subset(
    features: &DMatrix<f64>,
    idx: &[usize],
    targets: &DVector<f64>,
    kernel: &KernelSpec,
    reg_lambda: f64,
) -> Result<TrainedModel> {
    if targets.len() != features.nrows() {
        return Err(Error::Dimension(format!("{} rows but {} targets", features.nrows(), targets.len())));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= features.nrows()) {
        return Err(Error::Dimension(format!("row index {bad} out of range")));
    }
    let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| targets[i]));
    fit_impl(idx.to_vec(), select_rows(features, idx), y, kernel, reg_lambda)
}

fn fit_impl(
    support: Vec<usize>,
    x: DMatrix<f64>,
    y: DVector<f64>,
    kernel: &KernelSpec,
    reg_lambda: f64,
) -> Result<TrainedModel> {
    let m = x.nrows();
    if m == 0 {
        return Err(Error::InvalidDataset("cannot fit on zero rows".into()));
    }
    if y.len() != m {
        return Err(Error::Dimension(format!("{m} rows but {} targets", y.len())));
    }
    if !(reg_lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {reg_lambda}")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset("non-finite training input".into()));
    }
    let g = gram_sym(kernel, &x);
    let mut system = g.clone();
    for i in 0..m {
        system[(i, i)] += m as f64 * reg_lambda;
    }
    let alpha = system
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("regularized Gram matrix is not positive definite".into()))?
        .solve(&y);
    let residual = (&system * &alpha - &y).norm();
    if residual > 1e-6 * y.norm().max(f64::MIN_POSITIVE) && residual > 1e-12 {
        return Err(Error::Numerical(format!("solve residual {residual:e} too large")));
    }
    Ok(TrainedModel { support, support_rows: x, alpha, kernel: kernel.clone() })
}

/// `h(x_j) = Σᵢ αᵢ K(x_support(i), x_j)` for each row `x_j` of `x`.
pub fn predict(model: &TrainedModel, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let k = gram(&model.kernel, x, &model.support_rows)?;
    Ok(k * &model.alpha)
}

/// `‖h‖_K = sqrt(αᵀ G α)`, clamped at zero.
pub fn rkhs_norm(model: &TrainedModel) -> f64 {
    let g = gram_sym(&model.kernel, &model.support_rows);
    model.alpha.dot(&(g * &model.alpha)).max(0.0).sqrt()
}

/// Mean squared error.
pub fn mse(predictions: &DVector<f64>, targets: &DVector<f64>) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Dimension(format!("{} predictions vs {} targets", predictions.len(), targets.len())));
    }
    if predictions.is_empty() {
        return Err(Error::Dimension("mse of empty vectors".into()));
    }
    Ok((predictions - targets).norm_squared() / predictions.len() as f64)
}
