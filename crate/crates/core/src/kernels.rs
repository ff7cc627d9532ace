//! Matrix-valued kernel evaluation and Gram assembly.
//!
//! A kernel maps a pair of inputs in `R^{n_x}` to an `n_f x n_f` matrix. The
//! scalar families (`n_f = 1`) are a squared-exponential, a periodic kernel,
//! and an explicit polynomial feature map; independent outputs are modelled
//! by a diagonal composition of scalar kernels.
//!
//! Conventions:
//! - squared exponential: `k(x, x') = exp(-||x - x'||^2 / l^2)`,
//! - periodic: `k(x, x') = exp(-2 sin^2(pi ||x - x'|| / p) / l^2)`,
//! - monomials of degree `d`: `k(x, x') = (1 + x . x')^d`, realized by an
//!   explicit feature map of dimension `C(n_x + d, d)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_REL_TOL};

/// Kernel family with hyperparameters. Diagonal composition gives independent
/// multi-output kernels; all other variants are scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    SquaredExponential { lengthscale: f64 },
    Periodic { lengthscale: f64, period: f64 },
    Monomials { degree: u32 },
    Diagonal { components: Vec<KernelSpec> },
}

impl KernelSpec {
    /// Squared-exponential kernel with unit lengthscale.
    pub fn default_se() -> Self {
        KernelSpec::SquaredExponential { lengthscale: 1.0 }
    }

    /// Periodic kernel with period `2*pi` and unit lengthscale.
    pub fn default_periodic() -> Self {
        KernelSpec::Periodic {
            lengthscale: 1.0,
            period: 2.0 * std::f64::consts::PI,
        }
    }

    /// Output dimension of the kernel.
    pub fn n_f(&self) -> usize {
        match self {
            KernelSpec::Diagonal { components } => components.len(),
            _ => 1,
        }
    }

    /// Validates hyperparameters: lengthscales and periods strictly positive,
    /// diagonal components scalar and non-empty.
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::SquaredExponential { lengthscale } => {
                positive(*lengthscale, "lengthscale")
            }
            KernelSpec::Periodic {
                lengthscale,
                period,
            } => {
                positive(*lengthscale, "lengthscale")?;
                positive(*period, "period")
            }
            KernelSpec::Monomials { .. } => Ok(()),
            KernelSpec::Diagonal { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidProblem {
                        reason: "diagonal kernel needs at least one component".into(),
                    });
                }
                for c in components {
                    if c.n_f() != 1 {
                        return Err(Error::InvalidProblem {
                            reason: "diagonal kernel components must be scalar".into(),
                        });
                    }
                    c.validate()?;
                }
                Ok(())
            }
        }
    }

    fn eval_scalar(&self, x: &DVector<f64>, x2: &DVector<f64>) -> f64 {
        match self {
            KernelSpec::SquaredExponential { lengthscale } => {
                let d2 = (x - x2).norm_squared();
                (-d2 / (lengthscale * lengthscale)).exp()
            }
            KernelSpec::Periodic {
                lengthscale,
                period,
            } => {
                let d = (x - x2).norm();
                let s = (std::f64::consts::PI * d / period).sin();
                (-2.0 * s * s / (lengthscale * lengthscale)).exp()
            }
            KernelSpec::Monomials { degree } => (1.0 + x.dot(x2)).powi(*degree as i32),
            KernelSpec::Diagonal { .. } => unreachable!("diagonal kernels are not scalar"),
        }
    }

    /// Evaluates the kernel, producing an `n_f x n_f` matrix.
    pub fn eval(&self, x: &DVector<f64>, x2: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != x2.len() {
            return Err(Error::DimensionMismatch {
                context: "kernel eval inputs",
                expected: x.len(),
                got: x2.len(),
            });
        }
        match self {
            KernelSpec::Diagonal { components } => {
                let n_f = components.len();
                let mut m = DMatrix::zeros(n_f, n_f);
                for (i, c) in components.iter().enumerate() {
                    m[(i, i)] = c.eval_scalar(x, x2);
                }
                Ok(m)
            }
            _ => Ok(DMatrix::from_element(1, 1, self.eval_scalar(x, x2))),
        }
    }

    /// Explicit feature map where one exists (monomial family only):
    /// `k(x, x') = phi(x) phi(x')^T` with `phi(x)` of shape `1 x r`.
    pub fn feature_map(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        match self {
            KernelSpec::Monomials { degree } => {
                let feats = monomial_features(x, *degree);
                Some(DMatrix::from_row_slice(1, feats.len(), &feats))
            }
            _ => None,
        }
    }
}

fn positive(v: f64, context: &'static str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { context, value: v })
    }
}

/// Scaled monomials realizing `(1 + x . x')^d` as an inner product.
///
/// Enumerates multi-indices `k` with `|k| <= d`; the coefficient of the
/// monomial `prod x_i^{k_i}` is the square root of the multinomial
/// coefficient `d! / ((d - |k|)! prod k_i!)`.
fn monomial_features(x: &DVector<f64>, degree: u32) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::new();
    let mut index = vec![0u32; n];
    loop {
        let total: u32 = index.iter().sum();
        if total <= degree {
            let mut coeff = factorial(degree) / factorial(degree - total);
            for &k in &index {
                coeff /= factorial(k);
            }
            let mut v = coeff.sqrt();
            for (i, &k) in index.iter().enumerate() {
                v *= x[i].powi(k as i32);
            }
            out.push(v);
        }
        // Odometer over exponents bounded by `degree` in each position;
        // entries with |k| > d are skipped above.
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            index[pos] += 1;
            if index[pos] > degree {
                index[pos] = 0;
                pos += 1;
            } else {
                break;
            }
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

// ============================================================================
// Gram assembly
// ============================================================================

/// Joint Gram data for the training inputs plus one test input.
///
/// With `N` training pairs `(x_i, c_i)` and test input `x*`, this holds the
/// full block Gram `K` over `(x_1, ..., x_N, x*)` (size `n_f (N+1)`), the
/// projected training Gram `C^T K_{1:N,1:N} C` (size `N`), the projected test
/// cross block `K_{*,1:N} C` (size `n_f x N`), and the prior block
/// `k(x*, x*)`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub n: usize,
    pub n_f: usize,
    pub k_full: DMatrix<f64>,
    pub projected_training: DMatrix<f64>,
    pub projected_cross: DMatrix<f64>,
    pub prior: DMatrix<f64>,
}

/// Assembles the joint Gram system for training data plus one test input.
///
/// # Arguments
/// - `kernel`: matrix-valued kernel spec.
/// - `inputs`: training inputs, length `N`.
/// - `measurements`: measurement directions `c_i` in `R^{n_f}`, length `N`.
/// - `x_star`: test input.
pub fn assemble_gram(
    kernel: &KernelSpec,
    inputs: &[DVector<f64>],
    measurements: &[DVector<f64>],
    x_star: &DVector<f64>,
) -> Result<GramSystem> {
    kernel.validate()?;
    let n = inputs.len();
    let n_f = kernel.n_f();
    if measurements.len() != n {
        return Err(Error::DimensionMismatch {
            context: "assemble_gram measurements",
            expected: n,
            got: measurements.len(),
        });
    }
    for c in measurements {
        if c.len() != n_f {
            return Err(Error::DimensionMismatch {
                context: "measurement direction",
                expected: n_f,
                got: c.len(),
            });
        }
    }

    let mut all: Vec<&DVector<f64>> = inputs.iter().collect();
    all.push(x_star);
    let m = n_f * (n + 1);
    let mut k_full = DMatrix::zeros(m, m);
    for i in 0..=n {
        for j in i..=n {
            let block = kernel.eval(all[i], all[j])?;
            for a in 0..n_f {
                for b in 0..n_f {
                    k_full[(i * n_f + a, j * n_f + b)] = block[(a, b)];
                    k_full[(j * n_f + b, i * n_f + a)] = block[(a, b)];
                }
            }
        }
    }

    let block = |i: usize, j: usize| k_full.view((i * n_f, j * n_f), (n_f, n_f));

    let mut projected_training = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            projected_training[(i, j)] =
                (measurements[i].transpose() * block(i, j) * &measurements[j])[(0, 0)];
        }
    }

    let mut projected_cross = DMatrix::zeros(n_f, n);
    for i in 0..n {
        let col = block(n, i) * &measurements[i];
        projected_cross.set_column(i, &col);
    }

    let prior = block(n, n).into_owned();

    Ok(GramSystem {
        n,
        n_f,
        k_full,
        projected_training,
        projected_cross,
        prior,
    })
}

/// Projected training Gram `C^T K_{1:N,1:N} C` without a test input.
pub fn assemble_training_gram(
    kernel: &KernelSpec,
    inputs: &[DVector<f64>],
    measurements: &[DVector<f64>],
) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    let n = inputs.len();
    if measurements.len() != n {
        return Err(Error::DimensionMismatch {
            context: "training gram measurements",
            expected: n,
            got: measurements.len(),
        });
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let block = kernel.eval(&inputs[i], &inputs[j])?;
            let v = (measurements[i].transpose() * block * &measurements[j])[(0, 0)];
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Finite-dimensional coordinates of a Gram system: `K_full = Phi Phi^T`.
///
/// Rows of `phi` come in `n_f`-sized blocks, one per input (training inputs
/// first, test input last). The rank `r` counts eigenvalues kept by the
/// relative truncation threshold.
#[derive(Debug, Clone)]
pub struct FeatureSpaceProblem {
    pub phi: DMatrix<f64>,
    pub r: usize,
    pub n_f: usize,
    pub n_points: usize,
}

impl FeatureSpaceProblem {
    /// Feature block of input `i` (shape `n_f x r`).
    pub fn block(&self, i: usize) -> DMatrix<f64> {
        self.phi.view((i * self.n_f, 0), (self.n_f, self.r)).into_owned()
    }
}

/// Factorizes a full Gram matrix into feature coordinates via a symmetric
/// eigendecomposition, dropping eigenvalues at or below
/// `rel_tol * lambda_max`. Errors if the Gram fails the PSD check.
pub fn factorize_gram(gram: &GramSystem, rel_tol: f64) -> Result<FeatureSpaceProblem> {
    let f = linalg::psd_factor(&gram.k_full, rel_tol)?;
    let r = f.nrows();
    Ok(FeatureSpaceProblem {
        phi: f.transpose(),
        r,
        n_f: gram.n_f,
        n_points: gram.n + 1,
    })
}

/// Default relative truncation threshold for [`factorize_gram`].
pub const DEFAULT_RANK_REL_TOL: f64 = RANK_REL_TOL;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn se_kernel_unit_at_coincident_inputs() {
        let k = KernelSpec::default_se();
        let x = v(&[0.3, -1.2]);
        let m = k.eval(&x, &x).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn se_kernel_halves_at_log_two_squared_distance() {
        let k = KernelSpec::default_se();
        let x = v(&[0.0]);
        let x2 = v(&[(2.0f64).ln().sqrt()]);
        let m = k.eval(&x, &x2).unwrap();
        assert_relative_eq!(m[(0, 0)], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn periodic_kernel_matches_formula_and_period() {
        let k = KernelSpec::Periodic {
            lengthscale: 0.7,
            period: 2.0 * std::f64::consts::PI,
        };
        let x = v(&[0.4]);
        let x2 = v(&[1.9]);
        let d: f64 = 1.5;
        let s = (std::f64::consts::PI * d / (2.0 * std::f64::consts::PI)).sin();
        let expected = (-2.0 * s * s / (0.7f64 * 0.7)).exp();
        assert_relative_eq!(k.eval(&x, &x2).unwrap()[(0, 0)], expected, max_relative = 1e-14);

        // Shifting by one period leaves the kernel unchanged.
        let shifted = v(&[1.9 + 2.0 * std::f64::consts::PI]);
        assert_relative_eq!(
            k.eval(&x, &x2).unwrap()[(0, 0)],
            k.eval(&x, &shifted).unwrap()[(0, 0)],
            max_relative = 1e-12
        );
    }

    #[test]
    fn diagonal_kernel_stacks_scalar_components() {
        let k = KernelSpec::Diagonal {
            components: vec![
                KernelSpec::SquaredExponential { lengthscale: 1.0 },
                KernelSpec::SquaredExponential { lengthscale: 2.0 },
            ],
        };
        let x = v(&[0.0]);
        let x2 = v(&[1.0]);
        let m = k.eval(&x, &x2).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_relative_eq!(m[(0, 0)], (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(m[(1, 1)], (-0.25f64).exp(), max_relative = 1e-14);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 0)], 0.0);
    }

    #[test]
    fn monomial_features_realize_polynomial_kernel() {
        let k = KernelSpec::Monomials { degree: 3 };
        let x = v(&[0.5, -1.0]);
        let x2 = v(&[1.5, 0.25]);
        let fx = k.feature_map(&x).unwrap();
        let fx2 = k.feature_map(&x2).unwrap();
        let via_features = (&fx * fx2.transpose())[(0, 0)];
        let direct = k.eval(&x, &x2).unwrap()[(0, 0)];
        assert_relative_eq!(via_features, direct, max_relative = 1e-12);
        // r = C(n_x + d, d) = C(5, 3) = 10.
        assert_eq!(fx.ncols(), 10);
    }

    #[test]
    fn assemble_single_point_projects_prior() {
        let k = KernelSpec::default_se();
        let gram = assemble_gram(&k, &[v(&[0.0])], &[v(&[2.0])], &v(&[0.0])).unwrap();
        // c = 2, k(x, x) = 1: projected training Gram is [4].
        assert_relative_eq!(gram.projected_training[(0, 0)], 4.0, max_relative = 1e-14);
        assert_relative_eq!(gram.projected_cross[(0, 0)], 2.0, max_relative = 1e-14);
        assert_relative_eq!(gram.prior[(0, 0)], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn coordinate_measurements_extract_kernel_entries() {
        // Two outputs measured separately at the same location: the projected
        // Gram picks out the diagonal kernel entries.
        let k = KernelSpec::Diagonal {
            components: vec![
                KernelSpec::SquaredExponential { lengthscale: 1.0 },
                KernelSpec::SquaredExponential { lengthscale: 0.5 },
            ],
        };
        let x = v(&[0.7]);
        let gram = assemble_gram(
            &k,
            &[x.clone(), x.clone()],
            &[v(&[1.0, 0.0]), v(&[0.0, 1.0])],
            &v(&[0.0]),
        )
        .unwrap();
        assert_relative_eq!(gram.projected_training[(0, 0)], 1.0, max_relative = 1e-14);
        assert_relative_eq!(gram.projected_training[(1, 1)], 1.0, max_relative = 1e-14);
        // Independent outputs: off-diagonal projection vanishes.
        assert_eq!(gram.projected_training[(0, 1)], 0.0);
    }

    #[test]
    fn factorize_identity_gram_keeps_full_rank() {
        let gram = GramSystem {
            n: 2,
            n_f: 1,
            k_full: DMatrix::identity(3, 3),
            projected_training: DMatrix::identity(2, 2),
            projected_cross: DMatrix::zeros(1, 2),
            prior: DMatrix::identity(1, 1),
        };
        let f = factorize_gram(&gram, DEFAULT_RANK_REL_TOL).unwrap();
        assert_eq!(f.r, 3);
        let rec = &f.phi * f.phi.transpose();
        assert!((rec - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        // Columns of an identity factorization are signed unit vectors.
        for j in 0..3 {
            let col = f.phi.column(j);
            let max = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert_relative_eq!(max, 1.0, max_relative = 1e-12);
            assert_relative_eq!(col.norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn factorize_detects_exact_low_rank() {
        // Monomial kernel of degree 1 in 1-D has rank 2; with 3 inputs the
        // joint Gram over 4 points is rank 2.
        let k = KernelSpec::Monomials { degree: 1 };
        let inputs = vec![v(&[-1.0]), v(&[0.5]), v(&[2.0])];
        let c = vec![v(&[1.0]); 3];
        let gram = assemble_gram(&k, &inputs, &c, &v(&[1.0])).unwrap();
        let f = factorize_gram(&gram, DEFAULT_RANK_REL_TOL).unwrap();
        assert_eq!(f.r, 2, "degree-1 monomials span a plane");
        let rec = &f.phi * f.phi.transpose();
        let scale = 1.0 + gram.k_full.abs().max();
        assert!((rec - &gram.k_full).abs().max() <= 1e-8 * scale);
    }
}
