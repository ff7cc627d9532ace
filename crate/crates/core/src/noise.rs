//! Quadratic noise descriptions: the measurement noise `w` in `R^N` is
//! constrained by `w^T P_j w < Gamma_{w,j}^2` for `j = 1..n_con`, with each
//! `P_j` positive semidefinite and their sum positive definite.
//!
//! Three shapes cover the cases used throughout: pointwise bounds
//! (`P_j = e_j e_j^T`, one constraint per measurement), a single energy
//! constraint with positive-definite `P_1`, and a general list of PSD
//! matrices. Constraints are stored compactly as a dense block on their
//! support rows so that large pointwise or block-structured models stay
//! cheap to apply.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, COND_LIMIT};

/// Surrogate scales are capped here; a scale at or beyond the cap removes the
/// corresponding constraint from the surrogate precision (its limit).
pub const SIGMA_CAP: f64 = 1e8;

/// One quadratic constraint `w^T P w < gamma^2`, stored as a dense PSD block
/// on its support rows.
#[derive(Debug, Clone)]
pub struct NoiseConstraint {
    support: Vec<usize>,
    block: DMatrix<f64>,
    /// `factor^T factor = block` up to PSD projection; shape `k_r x k`.
    factor: DMatrix<f64>,
    gamma: f64,
}

impl NoiseConstraint {
    fn new(support: Vec<usize>, block: DMatrix<f64>, gamma: f64) -> Result<Self> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::NonPositiveBound { value: gamma });
        }
        let k = support.len();
        if block.nrows() != k || block.ncols() != k {
            return Err(Error::DimensionMismatch {
                context: "noise constraint block",
                expected: k,
                got: block.nrows(),
            });
        }
        let sym = 0.5 * (&block + block.transpose());
        let factor = linalg::psd_factor(&sym, 0.0)?;
        Ok(NoiseConstraint {
            support,
            block: sym,
            factor,
            gamma,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn block(&self) -> &DMatrix<f64> {
        &self.block
    }

    /// Smallest eigenvalue of the support block.
    pub fn block_min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.block)
    }

    /// Adds `weight * P` onto `m` (full `N x N`).
    pub fn add_scaled_to(&self, m: &mut DMatrix<f64>, weight: f64) {
        for (a, &i) in self.support.iter().enumerate() {
            for (b, &j) in self.support.iter().enumerate() {
                m[(i, j)] += weight * self.block[(a, b)];
            }
        }
    }

    /// `R^T v` restricted to the support, where `P = R R^T`. The squared norm
    /// of the result is `v^T P v` up to the PSD projection of the block.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        let sub = DVector::from_fn(self.support.len(), |a, _| v[self.support[a]]);
        &self.factor * sub
    }

    /// Quadratic form `v^T P v` using the stored block.
    pub fn quad(&self, v: &DVector<f64>) -> f64 {
        let sub = DVector::from_fn(self.support.len(), |a, _| v[self.support[a]]);
        (sub.transpose() * &self.block * sub)[(0, 0)]
    }

    /// Transposed support-block factor `R` with `block = R R^T` (shape
    /// `k x k_r`), for embedding `P = (E R)(E R)^T` into larger products.
    pub fn project_matrix_transpose(&self) -> DMatrix<f64> {
        self.factor.transpose()
    }

    /// Accumulates `weight * P v` into `out` (both full length `N`).
    pub fn add_applied(&self, v: &DVector<f64>, weight: f64, out: &mut DVector<f64>) {
        let sub = DVector::from_fn(self.support.len(), |a, _| v[self.support[a]]);
        let applied = &self.block * sub;
        for (a, &i) in self.support.iter().enumerate() {
            out[i] += weight * applied[a];
        }
    }

    /// Dense `N x N` representation of `P`.
    pub fn dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        self.add_scaled_to(&mut m, 1.0);
        m
    }
}

/// Shape tag used for surrogate-scale initialization and baseline
/// preconditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Pointwise,
    Energy,
    General,
}

/// Bounded-noise description over `N` measurements.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    n: usize,
    kind: NoiseKind,
    constraints: Vec<NoiseConstraint>,
}

impl NoiseModel {
    /// Pointwise bounds `|w_j| < bounds[j]`; one constraint per measurement.
    pub fn pointwise(bounds: &[f64]) -> Result<Self> {
        let n = bounds.len();
        let mut constraints = Vec::with_capacity(n);
        for (j, &b) in bounds.iter().enumerate() {
            constraints.push(NoiseConstraint::new(
                vec![j],
                DMatrix::from_element(1, 1, 1.0),
                b,
            )?);
        }
        Ok(NoiseModel {
            n,
            kind: NoiseKind::Pointwise,
            constraints,
        })
    }

    /// Single energy constraint `w^T P w < gamma^2` with `P` positive definite.
    pub fn energy(p: DMatrix<f64>, gamma: f64) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "energy noise matrix",
                expected: n,
                got: p.ncols(),
            });
        }
        if n > 0 {
            let min_eig = linalg::min_eigenvalue(&p);
            if min_eig <= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    context: "energy noise matrix",
                });
            }
        }
        let support: Vec<usize> = (0..n).collect();
        Ok(NoiseModel {
            n,
            kind: NoiseKind::Energy,
            constraints: vec![NoiseConstraint::new(support, p, gamma)?],
        })
    }

    /// General list of PSD constraints given as dense `N x N` matrices. The
    /// sum of the matrices must be positive definite.
    pub fn general(n: usize, parts: Vec<(DMatrix<f64>, f64)>) -> Result<Self> {
        let mut constraints = Vec::with_capacity(parts.len());
        for (p, gamma) in parts {
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: "general noise matrix",
                    expected: n,
                    got: p.nrows(),
                });
            }
            // Support = rows that touch the quadratic form; for a PSD matrix
            // a zero diagonal entry forces a zero row.
            let support: Vec<usize> = (0..n).filter(|&i| p[(i, i)] != 0.0).collect();
            let k = support.len();
            let mut block = DMatrix::zeros(k, k);
            for (a, &i) in support.iter().enumerate() {
                for (b, &j) in support.iter().enumerate() {
                    block[(a, b)] = p[(i, j)];
                }
            }
            constraints.push(NoiseConstraint::new(support, block, gamma)?);
        }
        let model = NoiseModel {
            n,
            kind: NoiseKind::General,
            constraints,
        };
        model.check_sum_positive_definite()?;
        Ok(model)
    }

    /// Constraints acting on zero measurements (used by degenerate `N = 0`
    /// problems where only the `gamma^2 / sigma^2` budget terms survive).
    pub fn dataless(gammas: &[f64]) -> Result<Self> {
        let mut constraints = Vec::with_capacity(gammas.len());
        for &g in gammas {
            constraints.push(NoiseConstraint::new(vec![], DMatrix::zeros(0, 0), g)?);
        }
        Ok(NoiseModel {
            n: 0,
            kind: NoiseKind::General,
            constraints,
        })
    }

    fn check_sum_positive_definite(&self) -> Result<()> {
        if self.n == 0 {
            return Ok(());
        }
        let mut sum = DMatrix::zeros(self.n, self.n);
        for c in &self.constraints {
            c.add_scaled_to(&mut sum, 1.0);
        }
        let (values, _) = linalg::symmetric_eigen_sorted(&sum);
        let max = values[0].max(f64::MIN_POSITIVE);
        if values[self.n - 1] <= 1e-12 * max {
            return Err(Error::NotPositiveDefinite {
                context: "sum of noise constraint matrices",
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_con(&self) -> usize {
        self.constraints.len()
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn constraints(&self) -> &[NoiseConstraint] {
        &self.constraints
    }

    pub fn gamma(&self, j: usize) -> f64 {
        self.constraints[j].gamma
    }

    /// Smallest uniform pointwise bound valid for every constraint: for each
    /// measurement, `|w_i|` cannot exceed `gamma_j / sqrt(lambda_min(P_j))`
    /// for any constraint whose support contains `i`.
    pub fn uniform_pointwise_bound(&self) -> Option<f64> {
        if self.n == 0 {
            return Some(0.0);
        }
        let mut best = vec![f64::INFINITY; self.n];
        for c in &self.constraints {
            let min_eig = c.block_min_eigenvalue();
            if min_eig <= 0.0 {
                continue;
            }
            let bound = c.gamma / min_eig.sqrt();
            for &i in &c.support {
                best[i] = best[i].min(bound);
            }
        }
        let max = best.iter().cloned().fold(0.0f64, f64::max);
        if max.is_finite() {
            Some(max)
        } else {
            None
        }
    }

    /// The uniform bound if the model is pointwise with equal budgets.
    pub fn as_uniform_pointwise(&self) -> Option<f64> {
        if self.kind != NoiseKind::Pointwise || self.n_con() != self.n {
            return None;
        }
        let g0 = self.constraints.first().map(|c| c.gamma)?;
        for c in &self.constraints {
            if (c.gamma - g0).abs() > 1e-12 * g0 {
                return None;
            }
        }
        Some(g0)
    }

    /// Strict-feasibility margin of a noise vector: the minimum over
    /// constraints of `1 - w^T P_j w / gamma_j^2`. Positive means strictly
    /// inside every constraint.
    pub fn margin(&self, w: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| 1.0 - c.quad(w) / (c.gamma * c.gamma))
            .fold(f64::INFINITY, f64::min)
    }

    /// Surrogate precision `P_sigma = sum_j sigma_j^{-2} P_j`, with
    /// constraints whose scale reached [`SIGMA_CAP`] dropped (their limit).
    pub fn precision(&self, sigma: &[f64]) -> Result<DMatrix<f64>> {
        self.check_sigma(sigma)?;
        let mut m = DMatrix::zeros(self.n, self.n);
        for (c, &s) in self.constraints.iter().zip(sigma) {
            if s >= SIGMA_CAP {
                continue;
            }
            c.add_scaled_to(&mut m, 1.0 / (s * s));
        }
        Ok(m)
    }

    /// Surrogate covariance `K^w_sigma = P_sigma^{-1}` together with the
    /// precision. Errors when the precision is numerically singular
    /// (condition estimate above `COND_LIMIT`).
    pub fn build_kw_sigma(&self, sigma: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.check_sigma(sigma)?;
        let mut precision = DMatrix::zeros(self.n, self.n);
        for (c, &s) in self.constraints.iter().zip(sigma) {
            c.add_scaled_to(&mut precision, 1.0 / (s * s));
        }
        if self.n == 0 {
            return Ok((DMatrix::zeros(0, 0), precision));
        }
        let cond = linalg::symmetric_condition(&precision);
        if !cond.is_finite() || cond > COND_LIMIT {
            return Err(Error::SingularSurrogate { cond });
        }
        let chol = linalg::cholesky_psd(&precision, "surrogate precision")?;
        let kw = chol.solve(&DMatrix::identity(self.n, self.n));
        Ok((kw, precision))
    }

    fn check_sigma(&self, sigma: &[f64]) -> Result<()> {
        if sigma.len() != self.n_con() {
            return Err(Error::DimensionMismatch {
                context: "sigma vector",
                expected: self.n_con(),
                got: sigma.len(),
            });
        }
        for &s in sigma {
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::NonPositiveParameter {
                    context: "sigma",
                    value: s,
                });
            }
        }
        Ok(())
    }
}
