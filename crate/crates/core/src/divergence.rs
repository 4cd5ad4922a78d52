//! The second-moment difference matrix between pool and labeled set, its
//! eigenspectrum, and the three divergences built on it.
//!
//! In the linear kernel `M = XₚᵀXₚ/nₚ − X_QᵀX_Q/n_Q` is a `d×d` symmetric
//! matrix. For any kernel, reordering the pool so labeled rows come first
//! gives `M = XₚᵀDXₚ` with a diagonal weight matrix `D`, and the nonzero
//! eigenvalues of `M` are those of `M_K = K_PP·D`. `M_K` is not symmetric;
//! its spectrum is taken from the similar symmetric matrix `K^½ D K^½`.

use nalgebra::DMatrix;

use crate::linalg::{psd_sqrt, sym_eigen_by_abs, symmetrize};
use crate::{Error, Result};

/// Relative magnitude below which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-12;

/// Imaginary parts allowed when reading a real spectrum off a general
/// (non-symmetric) matrix, relative to `max(1, |λ₁|)`.
pub const IMAGINARY_RTOL: f64 = 1e-8;

/// Diagonal of `D`, labeled rows first: `1/nₚ − 1/n_Q` for the `n_Q`
/// labeled rows, `1/nₚ` for the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsD {
    diagonal: Vec<f64>,
    n_q: usize,
}

impl WeightsD {
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn n_p(&self) -> usize {
        self.diagonal.len()
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }
}

pub fn build_d(n_p: usize, n_q: usize) -> Result<WeightsD> {
    if n_q == 0 {
        return Err(Error::EmptyLabeledSet);
    }
    if n_q > n_p {
        return Err(Error::Dimension(format!("labeled set of {n_q} exceeds pool of {n_p}")));
    }
    let inv_p = 1.0 / n_p as f64;
    let inv_q = 1.0 / n_q as f64;
    let mut diagonal = vec![inv_p; n_p];
    for w in &mut diagonal[..n_q] {
        *w = inv_p - inv_q;
    }
    Ok(WeightsD { diagonal, n_q })
}

/// `M = XₚᵀXₚ/nₚ − X_QᵀX_Q/n_Q` for explicit features.
pub fn build_m_linear(x_p: &DMatrix<f64>, x_q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x_p.ncols() != x_q.ncols() {
        return Err(Error::Dimension(format!("{} vs {} feature columns", x_p.ncols(), x_q.ncols())));
    }
    if x_q.nrows() == 0 {
        return Err(Error::EmptyLabeledSet);
    }
    let m = x_p.tr_mul(x_p) / x_p.nrows() as f64 - x_q.tr_mul(x_q) / x_q.nrows() as f64;
    Ok(symmetrize(&m))
}

/// `M_K = K_PP · diag(D)`, with `K_PP` ordered labeled-rows-first like `D`.
pub fn build_mk(k_pp: &DMatrix<f64>, d: &WeightsD) -> Result<DMatrix<f64>> {
    if k_pp.nrows() != d.n_p() || k_pp.ncols() != d.n_p() {
        return Err(Error::Dimension(format!(
            "Gram matrix is {}x{} but D has {} entries",
            k_pp.nrows(),
            k_pp.ncols(),
            d.n_p()
        )));
    }
    let mut mk = k_pp.clone();
    for (j, &w) in d.diagonal.iter().enumerate() {
        mk.column_mut(j).scale_mut(w);
    }
    Ok(mk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSource {
    M,
    MK,
}

/// Real eigenvalues sorted by descending absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<f64>>,
    source: SpectrumSource,
}

impl Spectrum {
    /// Builds a spectrum from arbitrary real eigenvalues (sorted here).
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, source: SpectrumSource) -> Self {
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Self { eigenvalues, eigenvectors: None, source }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unit eigenvectors as columns, in eigenvalue order. For `M_K` spectra
    /// these are eigenvectors of the symmetric `K^½ D K^½`.
    pub fn eigenvectors(&self) -> Option<&DMatrix<f64>> {
        self.eigenvectors.as_ref()
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    /// `|λ₁|`, or zero for an empty spectrum.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |v| v.abs())
    }

    pub fn zero_threshold(&self) -> f64 {
        ZERO_EIGENVALUE_RTOL * self.spectral_radius().max(1.0)
    }

    /// Eigenvalues above the zero threshold, still in `|λ|` order.
    pub fn nonzero(&self) -> Vec<f64> {
        let tol = self.zero_threshold();
        self.eigenvalues.iter().copied().filter(|v| v.abs() > tol).collect()
    }
}

/// Spectrum of a symmetric matrix (`M` in the linear kernel).
pub fn spectrum_m(m: &DMatrix<f64>) -> Spectrum {
    let (values, vectors) = sym_eigen_by_abs(m);
    Spectrum { eigenvalues: values.iter().copied().collect(), eigenvectors: Some(vectors), source: SpectrumSource::M }
}

/// Spectrum of `M_K = K_PP·D`, computed from `K^½ D K^½`. Negative roundoff
/// eigenvalues of `K_PP` are clipped before the square root.
pub fn spectrum_mk(k_pp: &DMatrix<f64>, d: &WeightsD) -> Result<Spectrum> {
    let root = psd_sqrt(k_pp);
    spectrum_mk_from_root(&root, d)
}

/// As [`spectrum_mk`] with a precomputed `K^½`.
pub fn spectrum_mk_from_root(k_sqrt: &DMatrix<f64>, d: &WeightsD) -> Result<Spectrum> {
    let weighted = build_mk(k_sqrt, d)?;
    let s = &weighted * k_sqrt;
    let (values, vectors) = sym_eigen_by_abs(&s);
    Ok(Spectrum { eigenvalues: values.iter().copied().collect(), eigenvectors: Some(vectors), source: SpectrumSource::MK })
}

/// Eigenvalues of a general square matrix, required to be real up to
/// [`IMAGINARY_RTOL`].
pub fn spectrum_general(matrix: &DMatrix<f64>, source: SpectrumSource) -> Result<Spectrum> {
    if !matrix.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", matrix.nrows(), matrix.ncols())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let complex = matrix.complex_eigenvalues();
    let radius = complex.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = IMAGINARY_RTOL * radius.max(1.0);
    if let Some(c) = complex.iter().find(|c| c.im.abs() > tol) {
        return Err(Error::Numerical(format!("eigenvalue {c} is not real")));
    }
    Ok(Spectrum::from_eigenvalues(complex.iter().map(|c| c.re).collect(), source))
}

/// `4Λ² |λ₁|`
pub fn discrepancy(s: &Spectrum, capacity: f64) -> f64 {
    4.0 * capacity * capacity * s.spectral_radius()
}

/// `4Λ² sqrt(Σ λᵢ²)`
pub fn mmd_spectral(s: &Spectrum, capacity: f64) -> f64 {
    4.0 * capacity * capacity * s.eigenvalues.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `4Λ² Σ |λᵢ|`
pub fn nuclear_discrepancy(s: &Spectrum, capacity: f64) -> f64 {
    4.0 * capacity * capacity * s.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

/// MMD from kernel means in `K'`:
/// `Λ' · sqrt(ΣQQ K'/n_Q² − 2 ΣPQ K'/(nₚn_Q) + ΣPP K'/nₚ²)`.
///
/// `kp_pp` is the `K'` Gram matrix of the pool, labeled rows first.
pub fn mmd_kernel_mean(kp_pp: &DMatrix<f64>, n_q: usize, capacity_prime: f64) -> Result<f64> {
    let n_p = kp_pp.nrows();
    if !kp_pp.is_square() {
        return Err(Error::Dimension(format!("{}x{} Gram matrix is not square", kp_pp.nrows(), kp_pp.ncols())));
    }
    if n_q == 0 {
        return Err(Error::EmptyLabeledSet);
    }
    if n_q > n_p {
        return Err(Error::Dimension(format!("labeled set of {n_q} exceeds pool of {n_p}")));
    }
    let qq = kp_pp.view((0, 0), (n_q, n_q)).sum();
    let pq = kp_pp.view((0, 0), (n_p, n_q)).sum();
    let pp = kp_pp.sum();
    let (np, nq) = (n_p as f64, n_q as f64);
    let inner = qq / (nq * nq) - 2.0 * pq / (np * nq) + pp / (np * np);
    Ok(capacity_prime * inner.max(0.0).sqrt())
}

/// All three divergences of one spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergences {
    pub discrepancy: f64,
    pub mmd: f64,
    pub nuclear: f64,
}

impl Divergences {
    pub fn of(s: &Spectrum, capacity: f64) -> Self {
        Self {
            discrepancy: discrepancy(s, capacity),
            mmd: mmd_spectral(s, capacity),
            nuclear: nuclear_discrepancy(s, capacity),
        }
    }
}

/// Pool positions reordered labeled-first: the labeled entries (in query
/// order) followed by the remaining pool entries in pool order.
pub fn labeled_first(pool: &[usize], labeled: &[usize]) -> Vec<usize> {
    let mut order = labeled.to_vec();
    order.extend(pool.iter().copied().filter(|i| !labeled.contains(i)));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram_sym, mmd_kernel, KernelSpec};
    use crate::linalg::select_rows;
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn example_pool() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])
    }

    fn example_spectrum() -> Spectrum {
        let x = example_pool();
        spectrum_m(&build_m_linear(&x, &select_rows(&x, &[0])).unwrap())
    }

    #[test]
    fn weights_small_cases() {
        assert_eq!(build_d(2, 1).unwrap().diagonal(), &[-0.5, 0.5]);
        assert!(build_d(4, 4).unwrap().diagonal().iter().all(|&v| v == 0.0));
        assert!(matches!(build_d(3, 0), Err(Error::EmptyLabeledSet)));
        assert!(build_d(2, 3).is_err());
    }

    #[test]
    fn m_linear_example() {
        let x = example_pool();
        let m = build_m_linear(&x, &select_rows(&x, &[0])).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 0.5]));
        assert_eq!(build_m_linear(&x, &x).unwrap(), DMatrix::zeros(2, 2));
        let scaled = &x * 3.0;
        let m3 = build_m_linear(&scaled, &select_rows(&scaled, &[0])).unwrap();
        assert!((m3 - m * 9.0).abs().max() < 1e-14);
    }

    #[test]
    fn mk_example() {
        let d = build_d(2, 1).unwrap();
        let mk = build_mk(&DMatrix::identity(2, 2), &d).unwrap();
        assert_eq!(mk, DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 0.5]));
        let zero = build_d(3, 3).unwrap();
        let k = DMatrix::from_element(3, 3, 0.7);
        assert_eq!(build_mk(&k, &zero).unwrap(), DMatrix::zeros(3, 3));
        assert!(build_mk(&DMatrix::identity(3, 3), &d).is_err());
    }

    #[test]
    fn spectrum_of_example() {
        let s = example_spectrum();
        let mut v = s.eigenvalues().to_vec();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![-0.5, 0.5]);
        assert_eq!(s.spectral_radius(), 0.5);
        assert!(spectrum_m(&DMatrix::zeros(3, 3)).eigenvalues().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergences_of_example() {
        let s = example_spectrum();
        assert!((discrepancy(&s, 1.0) - 2.0).abs() < 1e-15);
        assert!((mmd_spectral(&s, 1.0) - 2.828_427_1).abs() < 1e-7);
        assert!((nuclear_discrepancy(&s, 1.0) - 4.0).abs() < 1e-15);
        assert!((discrepancy(&s, 2.0) - 4.0 * discrepancy(&s, 1.0)).abs() < 1e-14);

        let zero = Spectrum::from_eigenvalues(vec![0.0; 3], SpectrumSource::M);
        assert_eq!(Divergences::of(&zero, 1.0), Divergences { discrepancy: 0.0, mmd: 0.0, nuclear: 0.0 });

        let single = Spectrum::from_eigenvalues(vec![0.0, -0.3, 0.0], SpectrumSource::M);
        assert!((mmd_spectral(&single, 1.7) - discrepancy(&single, 1.7)).abs() < 1e-15);
    }

    #[test]
    fn kernel_mean_example() {
        // linear kernel: K' = squared linear, Λ' = 4Λ² = 4
        let x = example_pool();
        let kp = gram_sym(&mmd_kernel(&KernelSpec::Linear).unwrap(), &x);
        let v = mmd_kernel_mean(&kp, 1, 4.0).unwrap();
        assert!((v - 8f64.sqrt()).abs() < 1e-14);
        assert_eq!(mmd_kernel_mean(&kp, 2, 4.0).unwrap(), 0.0);
        assert!(matches!(mmd_kernel_mean(&kp, 0, 1.0), Err(Error::EmptyLabeledSet)));
    }

    #[test]
    fn general_spectrum_matches_symmetric_route() {
        let mut rng = seeded_rng(11, 0);
        let x = DMatrix::from_fn(9, 2, |_, _| rng.gen_range(-1.5..1.5));
        let k = gram_sym(&KernelSpec::gaussian(0.9).unwrap(), &x);
        let d = build_d(9, 3).unwrap();
        let sym = spectrum_mk(&k, &d).unwrap();
        let gen = spectrum_general(&build_mk(&k, &d).unwrap(), SpectrumSource::MK).unwrap();
        for (a, b) in sym.nonzero().iter().zip(gen.nonzero()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn general_spectrum_rejects_complex() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(spectrum_general(&rot, SpectrumSource::MK), Err(Error::Numerical(_))));
    }

    #[test]
    fn labeled_first_order() {
        assert_eq!(labeled_first(&[2, 4, 6, 8], &[6, 2]), vec![6, 2, 4, 8]);
    }

    proptest! {
        #[test]
        fn trace_identity(seed in any::<u64>(), d in 1usize..8) {
            let mut rng = seeded_rng(seed, 0);
            let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            let m = symmetrize(&a);
            let s = spectrum_m(&m);
            prop_assert!((s.eigenvalues().iter().sum::<f64>() - m.trace()).abs() <= 1e-10);
        }

        #[test]
        fn weights_sum_to_zero(n_p in 1usize..500, frac in 0.0f64..1.0) {
            let n_q = ((n_p as f64 * frac) as usize).max(1);
            let d = build_d(n_p, n_q).unwrap();
            // compensated sum, so only the rounding of the entries themselves shows
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for &v in d.diagonal() {
                let t = sum + v;
                comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
                sum = t;
            }
            prop_assert!((sum + comp).abs() <= 1e-15);
        }
    }
}
