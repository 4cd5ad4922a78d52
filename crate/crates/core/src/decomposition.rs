//! Splitting the pool-vs-labeled loss gap over the eigenvectors of `M`.
//!
//! For `u = h − f` and unit eigenvectors `eᵢ` of `M`, the gap
//! `L_P(h, f) − L_Q(h, f) = uᵀMu = Σ ūᵢ²λᵢ` with `ūᵢ = eᵢᵀu`. With a kernel
//! the eigenfunctions are `eᵢ = Σⱼ βᵢⱼ φ(xⱼ) / ‖·‖` over the pool, where
//! `βᵢ = D K^½ wᵢ` for the unit eigenvectors `wᵢ` of `K^½ D K^½`.

use nalgebra::{DMatrix, DVector};

use crate::divergence::{build_d, labeled_first, spectrum_m, spectrum_mk_from_root, Spectrum};
use crate::kernel::gram_sym;
use crate::krls::{predict, TrainedModel};
use crate::learner::QueryState;
use crate::linalg::{psd_sqrt, select_rows};
use crate::{Error, Result};

pub const DEFAULT_EDGES: [usize; 3] = [1, 9, 49];

/// Contribution sums over eigenvalue rank ranges (1-based, `|λ|` order).
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    edges: Vec<usize>,
    sums: Vec<f64>,
}

impl Bins {
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// `EV1`, `EV2_9`, `EV10_49`, `EV50plus` for the default edges.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.sums.len());
        let mut start = 1;
        for &end in &self.edges {
            labels.push(if start == end { format!("EV{start}") } else { format!("EV{start}_{end}") });
            start = end + 1;
        }
        labels.push(format!("EV{start}plus"));
        labels
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels().iter().position(|l| l == label).map(|i| self.sums[i])
    }

    pub fn total(&self) -> f64 {
        self.sums.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub eigenvalues: Vec<f64>,
    /// `ūᵢ²`
    pub weights: Vec<f64>,
    /// `ūᵢ²λᵢ`
    pub contributions: Vec<f64>,
    pub bins: Bins,
}

impl DecompositionResult {
    fn new(eigenvalues: Vec<f64>, projections: Vec<f64>) -> Result<Self> {
        let weights: Vec<f64> = projections.iter().map(|p| p * p).collect();
        let contributions = weights.iter().zip(&eigenvalues).map(|(w, l)| w * l).collect();
        let mut r = Self { eigenvalues, weights, contributions, bins: Bins { edges: Vec::new(), sums: Vec::new() } };
        r.bins = bin_contributions(&r, &DEFAULT_EDGES)?;
        Ok(r)
    }

    /// `Σ ūᵢ²λᵢ`
    pub fn total(&self) -> f64 {
        self.contributions.iter().sum()
    }
}

/// Partial sums of contributions over ranks `1..=e₁`, `e₁+1..=e₂`, … and the
/// remainder. Edges must be strictly increasing and start at 1 or more.
pub fn bin_contributions(r: &DecompositionResult, edges: &[usize]) -> Result<Bins> {
    if edges.first().is_some_and(|&e| e == 0) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("bin edges must be increasing and positive, got {edges:?}")));
    }
    let mut sums = Vec::with_capacity(edges.len() + 1);
    let mut start = 0;
    for &end in edges {
        let hi = end.min(r.contributions.len());
        sums.push(r.contributions[start.min(hi)..hi].iter().sum());
        start = end;
    }
    sums.push(r.contributions.get(start..).map_or(0.0, |rest| rest.iter().sum()));
    Ok(Bins { edges: edges.to_vec(), sums })
}

/// Decomposition of `uᵀMu` for explicit features.
pub fn decompose_linear(u: &DVector<f64>, m: &DMatrix<f64>) -> Result<DecompositionResult> {
    if !m.is_square() || m.nrows() != u.len() {
        return Err(Error::Dimension(format!("u of length {} with a {}x{} matrix", u.len(), m.nrows(), m.ncols())));
    }
    let spectrum = spectrum_m(m);
    let vectors = spectrum.eigenvectors().expect("symmetric spectrum has vectors");
    let projections = vectors.tr_mul(u).iter().copied().collect();
    DecompositionResult::new(spectrum.eigenvalues().to_vec(), projections)
}

/// Decomposition of `L_P(h, f) − L_Q(h, f)` for two kernel models over the
/// pool and labeled set of `state`. Row indices in `state` refer to
/// `features`.
pub fn decompose_kernel(
    f_model: &TrainedModel,
    h_model: &TrainedModel,
    features: &DMatrix<f64>,
    state: &QueryState,
) -> Result<DecompositionResult> {
    if f_model.kernel() != h_model.kernel() {
        return Err(Error::Config("f and h use different kernels".into()));
    }
    let order = labeled_first(state.pool(), state.labeled());
    let d = build_d(order.len(), state.labeled().len())?;
    let x_p = select_rows(features, &order);
    let k = gram_sym(f_model.kernel(), &x_p);
    let root = psd_sqrt(&k);
    let spectrum = spectrum_mk_from_root(&root, &d)?;
    // u = h − f on the pool, labeled rows first
    let u = predict(h_model, &x_p)? - predict(f_model, &x_p)?;
    let projections = kernel_projections(&spectrum, &root, &k, d.diagonal(), &u)?;
    DecompositionResult::new(spectrum.eigenvalues().to_vec(), projections)
}

fn kernel_projections(
    spectrum: &Spectrum,
    root: &DMatrix<f64>,
    k: &DMatrix<f64>,
    d: &[f64],
    u: &DVector<f64>,
) -> Result<Vec<f64>> {
    let w = spectrum.eigenvectors().expect("M_K spectrum has vectors");
    let tol = spectrum.zero_threshold();
    let mut beta = root * w;
    for (mut row, &di) in beta.row_iter_mut().zip(d) {
        row *= di;
    }
    let mut out = Vec::with_capacity(beta.ncols());
    for (i, &lambda) in spectrum.eigenvalues().iter().enumerate() {
        if lambda.abs() <= tol {
            out.push(0.0);
            continue;
        }
        let b = beta.column(i);
        let norm2 = b.dot(&(k * b));
        if norm2.max(0.0).sqrt() <= 1e-12 {
            return Err(Error::Numerical(format!("eigenfunction {i} has vanishing norm with eigenvalue {lambda:e}")));
        }
        out.push(b.dot(u) / norm2.sqrt());
    }
    Ok(out)
}

/// `L_P(h, f)` and `L_Q(h, f)`: mean squared difference of the two models
/// over the pool and over the labeled set.
pub fn pool_losses(f_model: &TrainedModel, h_model: &TrainedModel, features: &DMatrix<f64>, state: &QueryState) -> Result<(f64, f64)> {
    let mean_sq = |idx: &[usize]| -> Result<f64> {
        let x = select_rows(features, idx);
        let diff = predict(h_model, &x)? - predict(f_model, &x)?;
        Ok(diff.norm_squared() / idx.len() as f64)
    };
    if state.labeled().is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    Ok((mean_sq(state.pool())?, mean_sq(state.labeled())?))
}
