//! Surrogate posterior machinery. For a surrogate scale vector `sigma` the
//! data covariance is `Khat = C^T K C + Kw_sigma` with `Kw_sigma` the inverse
//! of the surrogate precision `P_sigma = sum_j sigma_j^{-2} P_j`. Posterior
//! mean and covariance at a test input follow the usual conditioning
//! formulas, and the certificate radius is
//!
//! `beta^2 = gamma_f^2 + sum_j gamma_j^2 / sigma_j^2 - y^T Khat^{-1} y`.
//!
//! `Kw_sigma` is never inverted explicitly. With `G = A^T A` a factorization
//! of the projected training Gram and `S = I + A P_sigma A^T`, all solves use
//!
//! `Khat^{-1} = P_sigma - P_sigma A^T S^{-1} A P_sigma`,
//!
//! which stays well conditioned as scales grow and constraints drop out of
//! the precision at the cap.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernels;
use crate::linalg;
use crate::noise::SIGMA_CAP;
use crate::problem::Problem;

/// Relative eigenvalue truncation for the internal factorization of the
/// projected training Gram. Kept far below the public factorization default
/// so that solves agree with dense references to full precision.
const GEOMETRY_RANK_REL_TOL: f64 = 1e-14;

/// Stability limit for the precision-side solve. Its accuracy degrades with
/// `lambda_max(G) / min_j sigma_j^2` (measured loss: relative error about
/// `1e-16` times that ratio, garbage beyond `1e14`); past this limit the
/// factorization refuses to produce numbers rather than produce wrong ones.
const ILL_CONDITION_LIMIT: f64 = 1e12;

/// Per-problem precomputation shared across surrogate scales: the projected
/// training Gram, its factorization, and per-constraint projections of the
/// factor. Building one geometry and reusing it amortizes the eigenwork over
/// optimizer iterations and posterior queries.
#[derive(Debug, Clone)]
pub struct ProblemGeometry {
    problem: Problem,
    gram: DMatrix<f64>,
    /// `a_g` of shape `r_g x N` with `a_g^T a_g = gram`.
    a_g: DMatrix<f64>,
    /// `a_g R_j` per constraint, where `P_j = R_j R_j^T`.
    projected_factors: Vec<DMatrix<f64>>,
    lambda_max: f64,
}

impl ProblemGeometry {
    pub fn new(problem: &Problem) -> Result<Self> {
        let gram = kernels::assemble_training_gram(
            &problem.kernel,
            &problem.inputs,
            &problem.measurements,
        )?;
        let a_g = linalg::psd_factor(&gram, GEOMETRY_RANK_REL_TOL)?;
        let lambda_max = if gram.nrows() == 0 {
            0.0
        } else {
            a_g.row_iter()
                .map(|r| r.norm_squared())
                .fold(0.0f64, f64::max)
                .max(linalg::symmetric_eigen_sorted(&gram).0[0])
        };
        let projected_factors = problem
            .noise
            .constraints()
            .iter()
            .map(|c| {
                let k = c.support().len();
                let mut cols = DMatrix::zeros(a_g.nrows(), k);
                for (b, &i) in c.support().iter().enumerate() {
                    cols.set_column(b, &a_g.column(i));
                }
                // R_j has the transposed block factor on the support rows.
                cols * c.project_matrix_transpose()
            })
            .collect();
        Ok(ProblemGeometry {
            problem: problem.clone(),
            gram,
            a_g,
            projected_factors,
            lambda_max,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Projected training Gram `C^T K C`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Largest eigenvalue of the projected training Gram.
    pub fn gram_lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Projected cross-covariance against a direction: entry `i` is
    /// `h^T k(x*, x_i) c_i`.
    pub fn projected_cross(&self, x_star: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.problem.n();
        let mut g = DVector::zeros(n);
        for i in 0..n {
            let block = self.problem.kernel.eval(x_star, &self.problem.inputs[i])?;
            g[i] = (h.transpose() * block * &self.problem.measurements[i])[(0, 0)];
        }
        Ok(g)
    }

    /// Prior quadratic form `h^T k(x*, x*) h`.
    pub fn prior_quad(&self, x_star: &DVector<f64>, h: &DVector<f64>) -> Result<f64> {
        let block = self.problem.kernel.eval(x_star, x_star)?;
        Ok((h.transpose() * block * h)[(0, 0)])
    }

    /// Factorizes the data covariance at the given surrogate scales.
    pub fn factorize(&self, sigma: &[f64]) -> Result<Factorization<'_>> {
        Factorization::new(self, sigma)
    }
}

/// Solver-ready factorization of `Khat_sigma` for one scale vector.
pub struct Factorization<'g> {
    geom: &'g ProblemGeometry,
    sigma: Vec<f64>,
    capped: Vec<bool>,
    s_chol: Cholesky<f64, Dyn>,
    u: DVector<f64>,
    y_quad: f64,
    budget_sq: f64,
}

impl<'g> Factorization<'g> {
    fn new(geom: &'g ProblemGeometry, sigma: &[f64]) -> Result<Self> {
        let noise = &geom.problem.noise;
        if sigma.len() != noise.n_con() {
            return Err(Error::DimensionMismatch {
                context: "sigma vector",
                expected: noise.n_con(),
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
        let capped: Vec<bool> = sigma.iter().map(|&s| s >= SIGMA_CAP).collect();
        let severity = sigma
            .iter()
            .zip(&capped)
            .filter(|&(_, &c)| !c)
            .map(|(&s, _)| geom.lambda_max / (s * s))
            .fold(0.0f64, f64::max);
        if severity > ILL_CONDITION_LIMIT {
            return Err(Error::IllConditionedScales { severity });
        }
        let r_g = geom.a_g.nrows();
        let mut s_mat = DMatrix::identity(r_g, r_g);
        for (j, w) in geom.projected_factors.iter().enumerate() {
            if capped[j] || w.ncols() == 0 {
                continue;
            }
            let scale = 1.0 / (sigma[j] * sigma[j]);
            let wt = w.transpose();
            s_mat.gemm(scale, w, &wt, 1.0);
        }
        let s_chol = linalg::cholesky_psd(&s_mat, "surrogate data covariance")?;

        let mut budget_sq = geom.problem.gamma_f * geom.problem.gamma_f;
        for (j, &s) in sigma.iter().enumerate() {
            let g = noise.gamma(j);
            budget_sq += (g / s) * (g / s);
        }

        let mut fact = Factorization {
            geom,
            sigma: sigma.to_vec(),
            capped,
            s_chol,
            u: DVector::zeros(geom.problem.n()),
            y_quad: 0.0,
            budget_sq,
        };
        fact.u = fact.solve(&geom.problem.y);
        fact.y_quad = geom.problem.y.dot(&fact.u).max(0.0);
        Ok(fact)
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn capped(&self) -> &[bool] {
        &self.capped
    }

    /// Applies the surrogate precision `P_sigma` (capped constraints absent).
    pub fn apply_precision(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (j, c) in self.geom.problem.noise.constraints().iter().enumerate() {
            if self.capped[j] || c.support().is_empty() {
                continue;
            }
            c.add_applied(v, 1.0 / (self.sigma[j] * self.sigma[j]), &mut out);
        }
        out
    }

    /// `Khat^{-1} v` via the precision-side identity.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let mv = self.apply_precision(v);
        let t = &self.geom.a_g * &mv;
        let s = self.s_chol.solve(&t);
        let w = self.geom.a_g.transpose() * s;
        &mv - self.apply_precision(&w)
    }

    /// `v - A^T S^{-1} A P_sigma v`; the quadratic form of `d Khat^{-1}` in a
    /// precision perturbation `dP` is `(Jv)^T dP (Jv)`.
    pub fn shadow(&self, v: &DVector<f64>) -> DVector<f64> {
        let mv = self.apply_precision(v);
        let t = &self.geom.a_g * mv;
        let s = self.s_chol.solve(&t);
        v - self.geom.a_g.transpose() * s
    }

    /// Solved vector `Khat^{-1} y`.
    pub fn solved_y(&self) -> &DVector<f64> {
        &self.u
    }

    /// Quadratic form `y^T Khat^{-1} y`.
    pub fn y_quad(&self) -> f64 {
        self.y_quad
    }

    /// Total squared budget `gamma_f^2 + sum_j gamma_j^2 / sigma_j^2`.
    pub fn budget_sq(&self) -> f64 {
        self.budget_sq
    }

    /// Certificate radicand `budget_sq - y_quad`; negative means the data is
    /// inconsistent with the budgets at these scales.
    pub fn beta_radicand(&self) -> f64 {
        self.budget_sq - self.y_quad
    }

    /// Certificate radius `beta_sigma`. Errors when the radicand is negative.
    pub fn beta(&self) -> Result<f64> {
        let rad = self.beta_radicand();
        if rad < 0.0 {
            return Err(Error::Infeasible { radicand: rad });
        }
        Ok(rad.sqrt())
    }

    /// Posterior quadratic `kappa - g^T Khat^{-1} g` for a projected
    /// cross-covariance `g` with prior quadratic `kappa`.
    ///
    /// Evaluated through the residual form `kappa - 2 g^T u + u^T Khat u`
    /// with `u = P_sigma J g`, whose terms stay order-one even when the
    /// precision blows up at small scales and whose error is second order in
    /// the solve error. The naive difference `kappa - g^T Khat^{-1} g` loses
    /// small variances to cancellation there.
    pub fn posterior_quad(&self, g: &DVector<f64>, kappa: f64) -> f64 {
        let ghat = self.shadow(g);
        let u = self.apply_precision(&ghat);
        let au = &self.geom.a_g * &u;
        (kappa - 2.0 * g.dot(&u) + au.norm_squared() + ghat.dot(&u)).max(0.0)
    }

    /// Posterior mean and covariance at a test input.
    pub fn posterior(&self, x_star: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let problem = &self.geom.problem;
        let n = problem.n();
        let n_f = problem.n_f();
        let mut cross = DMatrix::zeros(n_f, n);
        for i in 0..n {
            let block = problem.kernel.eval(x_star, &problem.inputs[i])?;
            cross.set_column(i, &(block * &problem.measurements[i]));
        }
        let prior = problem.kernel.eval(x_star, x_star)?;
        let mu = &cross * &self.u;
        // Residual-form covariance, matching `posterior_quad`: with
        // `U = P_sigma J B^T` approximating `Khat^{-1} B^T`,
        // `Sigma = K** - B U - (B U)^T + U^T Khat U`.
        let mut ghat = DMatrix::zeros(n, n_f);
        let mut u_mat = DMatrix::zeros(n, n_f);
        for a in 0..n_f {
            let row: DVector<f64> = cross.row(a).transpose();
            let sh = self.shadow(&row);
            u_mat.set_column(a, &self.apply_precision(&sh));
            ghat.set_column(a, &sh);
        }
        let bu = &cross * &u_mat;
        let au = &self.geom.a_g * &u_mat;
        let cov =
            prior - &bu - bu.transpose() + au.transpose() * &au + ghat.transpose() * &u_mat;
        // Symmetrize away solver round-off.
        let cov = 0.5 * (&cov + cov.transpose());
        Ok((mu, cov))
    }
}

/// Convenience wrapper: geometry plus factorization in one call.
pub fn factorize(problem: &Problem, sigma: &[f64]) -> Result<(ProblemGeometry, f64, f64)> {
    let geom = ProblemGeometry::new(problem)?;
    let fact = geom.factorize(sigma)?;
    let y_quad = fact.y_quad();
    let rad = fact.beta_radicand();
    Ok((geom, y_quad, rad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::noise::NoiseModel;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn scalar_problem(inputs: &[f64], y: &[f64], bounds: &[f64], gamma_f: f64) -> Problem {
        let n = inputs.len();
        Problem::new(
            KernelSpec::default_se(),
            inputs.iter().map(|&x| v(&[x])).collect(),
            vec![v(&[1.0]); n],
            DVector::from_row_slice(y),
            NoiseModel::pointwise(bounds).unwrap(),
            gamma_f,
        )
        .unwrap()
    }

    #[test]
    fn empty_problem_has_prior_posterior() {
        let problem = Problem::new(
            KernelSpec::default_se(),
            vec![],
            vec![],
            DVector::zeros(0),
            NoiseModel::pointwise(&[]).unwrap(),
            1.0,
        )
        .unwrap();
        let geom = ProblemGeometry::new(&problem).unwrap();
        let fact = geom.factorize(&[]).unwrap();
        assert_eq!(fact.y_quad(), 0.0);
        assert_relative_eq!(fact.beta().unwrap(), 1.0, max_relative = 1e-14);
        let (mu, cov) = fact.posterior(&v(&[0.3])).unwrap();
        assert_eq!(mu[0], 0.0);
        assert_relative_eq!(cov[(0, 0)], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn single_point_matches_closed_form() {
        let problem = scalar_problem(&[0.0], &[0.8], &[0.5], 2.0);
        let geom = ProblemGeometry::new(&problem).unwrap();
        let sigma = [0.5];
        let fact = geom.factorize(&sigma).unwrap();
        // Khat = k(0,0) + sigma^2 = 1.25.
        let khat = 1.25;
        assert_relative_eq!(fact.y_quad(), 0.8 * 0.8 / khat, max_relative = 1e-12);
        let x = v(&[1.0]);
        let (mu, cov) = fact.posterior(&x).unwrap();
        let kx = (-1.0f64).exp();
        assert_relative_eq!(mu[0], kx * 0.8 / khat, max_relative = 1e-12);
        assert_relative_eq!(cov[(0, 0)], 1.0 - kx * kx / khat, max_relative = 1e-12);
    }

    #[test]
    fn beta_with_zero_observations_is_total_budget() {
        let problem = scalar_problem(&[0.0, 1.0], &[0.0, 0.0], &[0.2, 0.2], 1.5);
        let geom = ProblemGeometry::new(&problem).unwrap();
        let sigma = [0.4, 0.9];
        let fact = geom.factorize(&sigma).unwrap();
        let expected =
            (1.5f64 * 1.5 + (0.2f64 / 0.4).powi(2) + (0.2f64 / 0.9).powi(2)).sqrt();
        assert_relative_eq!(fact.beta().unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn beta_errors_when_data_exceeds_budget() {
        // Observation far larger than the norm and noise budgets allow.
        let problem = scalar_problem(&[0.0], &[50.0], &[0.1], 0.5);
        let geom = ProblemGeometry::new(&problem).unwrap();
        let fact = geom.factorize(&[0.1]).unwrap();
        match fact.beta() {
            Err(Error::Infeasible { radicand }) => assert!(radicand < 0.0),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn capped_scales_recover_the_prior() {
        let problem = scalar_problem(&[0.0, 0.7, -0.4], &[0.5, -0.2, 0.1], &[0.2; 3], 1.0);
        let geom = ProblemGeometry::new(&problem).unwrap();
        let fact = geom.factorize(&[SIGMA_CAP; 3]).unwrap();
        let x = v(&[0.3]);
        let (mu, cov) = fact.posterior(&x).unwrap();
        let prior = problem.kernel.eval(&x, &x).unwrap();
        assert!(mu.norm() <= 1e-6, "posterior mean collapses to prior mean");
        assert!((cov - prior).abs().max() <= 1e-6, "covariance reverts to prior");
    }

    #[test]
    fn beta_is_monotone_in_gamma_f() {
        let mk = |gamma_f: f64| {
            let p = scalar_problem(&[0.0, 1.0], &[0.3, -0.1], &[0.2, 0.2], gamma_f);
            let geom = ProblemGeometry::new(&p).unwrap();
            geom.factorize(&[0.2, 0.2]).unwrap().beta().unwrap()
        };
        let b1 = mk(1.0);
        let b2 = mk(1.5);
        let b3 = mk(3.0);
        assert!(b1 < b2 && b2 < b3, "beta grows with the norm budget");
    }

    #[test]
    fn posterior_covariance_never_exceeds_prior() {
        let problem = scalar_problem(&[-1.0, 0.2, 0.9], &[0.1, 0.4, -0.3], &[0.3; 3], 1.0);
        let geom = ProblemGeometry::new(&problem).unwrap();
        let fact = geom.factorize(&[0.5, 0.5, 0.5]).unwrap();
        for &x in &[-2.0, -0.5, 0.0, 0.6, 1.4] {
            let xs = v(&[x]);
            let (_, cov) = fact.posterior(&xs).unwrap();
            let prior = problem.kernel.eval(&xs, &xs).unwrap();
            let diff = prior - cov;
            assert!(
                linalg::min_eigenvalue(&diff) >= -1e-9,
                "conditioning cannot increase variance at x = {x}"
            );
        }
    }

    #[test]
    fn antisymmetric_data_cancels_at_the_origin() {
        let problem = scalar_problem(&[-0.8, 0.8], &[0.4, -0.4], &[0.2, 0.2], 1.0);
        let geom = ProblemGeometry::new(&problem).unwrap();
        let fact = geom.factorize(&[0.3, 0.3]).unwrap();
        let (mu, _) = fact.posterior(&v(&[0.0])).unwrap();
        assert!(mu[0].abs() < 1e-12, "even kernel, odd data");
    }
}
