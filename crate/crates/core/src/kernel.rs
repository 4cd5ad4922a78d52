//! Kernels and Gram matrices.
//!
//! The MMD needs a second kernel `K'` whose values are the squares of the
//! model kernel `K`. [`mmd_kernel`] derives it structurally: a Gaussian of
//! bandwidth `σ` maps to a Gaussian of bandwidth `σ/√2`, a linear kernel maps
//! to its square.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-‖x - x'‖² / (2σ²))`
    Gaussian { sigma: f64 },
    /// `⟨x, x'⟩`
    Linear,
    /// `base(x, x')²`; `base` is never itself `SquaredOf`.
    SquaredOf { base: Box<KernelSpec> },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("gaussian bandwidth must be positive, got {sigma}")));
        }
        Ok(Self::Gaussian { sigma })
    }

    pub fn squared_of(base: KernelSpec) -> Result<Self> {
        if matches!(base, KernelSpec::SquaredOf { .. }) {
            return Err(Error::Config("squared_of cannot be nested".into()));
        }
        Ok(Self::SquaredOf { base: Box::new(base) })
    }

    /// Parses the `kernel.family` config value.
    pub fn from_family(family: &str, sigma: Option<f64>) -> Result<Self> {
        match family {
            "gaussian" => {
                let sigma = sigma.ok_or_else(|| Error::Config("kernel.sigma is required for the gaussian kernel".into()))?;
                Self::gaussian(sigma)
            }
            "linear" => Ok(Self::Linear),
            other => Err(Error::Config(format!("kernel.family must be \"gaussian\" or \"linear\", got {other:?}"))),
        }
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::SquaredOf { base } => base.eval_unchecked(x, y).powi(2),
        }
    }
}

/// Kernel value for one pair of points.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("points of length {} and {}", x.len(), y.len())));
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Gram matrix between the rows of `a` and the rows of `b`.
pub fn gram(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!("{} vs {} feature columns", a.ncols(), b.ncols())));
    }
    let ra = rows_of(a);
    let rb = rows_of(b);
    Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| spec.eval_unchecked(&ra[i], &rb[j])))
}

/// Symmetric Gram matrix of the rows of `a` with itself; only the upper
/// triangle is evaluated.
pub fn gram_sym(spec: &KernelSpec, a: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = rows_of(a);
    let n = rows.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(&rows[i], &rows[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Row `i` of `m` as an owned vector.
pub fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// The kernel `K'` with `K'(x, x') = K(x, x')²`.
pub fn mmd_kernel(model_kernel: &KernelSpec) -> Result<KernelSpec> {
    match model_kernel {
        KernelSpec::Gaussian { sigma } => KernelSpec::gaussian(sigma / std::f64::consts::SQRT_2),
        KernelSpec::Linear => KernelSpec::squared_of(KernelSpec::Linear),
        KernelSpec::SquaredOf { .. } => Err(Error::Config("mmd_kernel expects a gaussian or linear model kernel".into())),
    }
}
