//! Eigenvalues of `diag(c) − ρ z zᵀ` (`ρ > 0`) from the secular equation
//!
//! ```text
//! f(μ) = 1 − Σᵢ ρ zᵢ² / (cᵢ − μ) = 0
//! ```
//!
//! Each root lies strictly between two consecutive (deflated) poles, the
//! lowest one below the smallest pole. Roots are found one at a time with a
//! two-pole rational model, safeguarded by bisection on the bracket, and
//! computed relative to the nearer pole to keep precision.

/// A prepared rank-one downdate. Poles are kept in descending order.
#[derive(Debug, Clone)]
pub(crate) struct RankOneDowndate {
    poles: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
    /// Eigenvalues left untouched by deflation.
    fixed: Vec<f64>,
    trace: f64,
}

const MAX_ITER: usize = 200;

impl RankOneDowndate {
    /// `c` must be sorted in descending order; `z` is in the same basis.
    pub(crate) fn new(c: &[f64], z: &[f64], rho: f64) -> Self {
        debug_assert_eq!(c.len(), z.len());
        debug_assert!(c.windows(2).all(|w| w[0] >= w[1]));
        let z_norm2: f64 = z.iter().map(|v| v * v).sum();
        let trace = c.iter().sum::<f64>() - rho * z_norm2;
        let c_max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 8.0 * f64::EPSILON * c_max.max(rho * z_norm2);
        let z_norm = z_norm2.sqrt();

        let mut poles: Vec<f64> = Vec::with_capacity(c.len());
        let mut weights: Vec<f64> = Vec::with_capacity(c.len());
        let mut fixed = Vec::new();
        for (&ci, &zi) in c.iter().zip(z) {
            let w = rho * zi * zi;
            if rho * zi.abs() * z_norm <= tol || w == 0.0 {
                fixed.push(ci);
                continue;
            }
            match poles.last() {
                // near-coincident poles: one eigenvalue stays at the pole,
                // the other pole carries both weights
                Some(&last) if last - ci <= tol => {
                    *weights.last_mut().unwrap() += w;
                    fixed.push(ci);
                }
                _ => {
                    poles.push(ci);
                    weights.push(w);
                }
            }
        }
        let weight_sum = weights.iter().sum();
        Self { poles, weights, weight_sum, fixed, trace }
    }

    fn secular(&self, mu: f64) -> f64 {
        1.0 - self.poles.iter().zip(&self.weights).map(|(d, w)| w / (d - mu)).sum::<f64>()
    }

    /// Root `j` (descending) of the deflated secular equation.
    fn root(&self, j: usize) -> f64 {
        let d = &self.poles;
        let w = &self.weights;
        let k = d.len();
        let last = j + 1 == k;

        // shift the origin to the pole nearest the root
        let (origin, mut lo, mut hi) = if last {
            (d[j], -self.weight_sum, 0.0)
        } else {
            let mid = 0.5 * (d[j] + d[j + 1]);
            if self.secular(mid) > 0.0 {
                (d[j], mid - d[j], 0.0)
            } else {
                (d[j + 1], 0.0, mid - d[j + 1])
            }
        };
        let a = d[j] - origin;
        let b = if last { f64::NEG_INFINITY } else { d[j + 1] - origin };

        let mut tau = 0.5 * (lo + hi);
        for _ in 0..MAX_ITER {
            let (mut psi, mut dpsi, mut phi, mut dphi) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..k {
                let t = (d[i] - origin) - tau;
                let term = w[i] / t;
                if i <= j {
                    psi += term;
                    dpsi += term / t;
                } else {
                    phi += term;
                    dphi += term / t;
                }
            }
            let f = 1.0 - psi - phi;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            let err = 4.0 * f64::EPSILON * (k as f64 + 2.0) * (1.0 + psi + phi.abs());
            if f.abs() <= err || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }

            // two-pole rational model matching value and slope at tau
            let ua = a - tau;
            let big_a = dpsi * ua * ua;
            let g_upper = psi - dpsi * ua;
            let next = if last {
                let g = 1.0 - g_upper - phi;
                if g > 0.0 { a - big_a / g } else { f64::NAN }
            } else {
                let ub = b - tau;
                let big_c = dphi * ub * ub;
                let g_lower = phi - dphi * ub;
                let g = 1.0 - g_upper - g_lower;
                quadratic_root_in(g, a, b, big_a, big_c, lo, hi)
            };
            tau = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        origin + tau
    }

    /// All eigenvalues, descending.
    #[cfg(test)]
    pub(crate) fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = (0..self.poles.len()).map(|j| self.root(j)).collect();
        all.extend_from_slice(&self.fixed);
        all.sort_by(|x, y| y.total_cmp(x));
        all
    }

    pub(crate) fn max_eigenvalue(&self) -> f64 {
        let top = if self.poles.is_empty() { f64::NEG_INFINITY } else { self.root(0) };
        self.fixed.iter().copied().fold(top, f64::max)
    }

    pub(crate) fn min_eigenvalue(&self) -> f64 {
        let bottom = match self.poles.len() {
            0 => f64::INFINITY,
            k => self.root(k - 1),
        };
        self.fixed.iter().copied().fold(bottom, f64::min)
    }

    /// Sum of the negative eigenvalues. Only roots whose bracket reaches
    /// below zero are solved for.
    pub(crate) fn negative_sum(&self) -> f64 {
        let mut sum: f64 = self.fixed.iter().filter(|&&v| v < 0.0).sum();
        let k = self.poles.len();
        if k == 0 {
            return sum;
        }
        // root j lies in (poles[j+1], poles[j]); the last one below poles[k-1]
        let first = self.poles[1..].iter().position(|&p| p < 0.0).unwrap_or(k - 1);
        for j in first..k {
            let r = self.root(j);
            if r < 0.0 {
                sum += r;
            }
        }
        sum
    }

    /// Largest absolute eigenvalue.
    pub(crate) fn spectral_radius(&self) -> f64 {
        self.max_eigenvalue().abs().max(self.min_eigenvalue().abs())
    }

    /// `Σ |μᵢ|`
    pub(crate) fn nuclear_norm(&self) -> f64 {
        self.trace - 2.0 * self.negative_sum()
    }
}

/// Root in `(lo, hi)` of `g(a−x)(b−x) − A(b−x) − C(a−x) = 0`, or NaN.
fn quadratic_root_in(g: f64, a: f64, b: f64, big_a: f64, big_c: f64, lo: f64, hi: f64) -> f64 {
    let qa = g;
    let qb = -(g * (a + b) - big_a - big_c);
    let qc = g * a * b - big_a * b - big_c * a;
    let inside = |x: f64| x > lo && x < hi;
    if qa == 0.0 {
        return if qb != 0.0 { -qc / qb } else { f64::NAN };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return f64::NAN;
    }
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let r1 = q / qa;
    let r2 = if q != 0.0 { qc / q } else { f64::NAN };
    match (inside(r1), inside(r2)) {
        (true, _) => r1,
        (_, true) => r2,
        _ => f64::NAN,
    }
}
