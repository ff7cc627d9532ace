//! Finite-dimensional reference solver and feasible-function sampler.
//!
//! Over the training inputs plus one test input, the joint Gram factorizes as
//! `K = Phi Phi^T`, and every function value the problem can see is `Phi_i
//! theta` for coordinates `theta` in `R^r` with RKHS norm `||theta||`. The
//! worst case of `h^T f(x*)` over the model set is then the finite convex
//! program
//!
//! maximize `q^T theta`
//! subject to `||theta||^2 <= gamma_f^2`,
//!            `(y - A theta)^T P_j (y - A theta) <= gamma_j^2`,
//!
//! with `q` the test feature of the direction and `A` the projected training
//! features. [`solve_primal`] minimizes the Lagrangian dual with a projected
//! Newton method (the dual is smooth and convex, with analytic gradient and
//! Hessian via the inner maximizer); strong duality holds whenever the model
//! set has an interior point.
//!
//! [`relaxed_closed_form`] evaluates, in the same coordinates, the
//! closed-form value of the norm-ball relaxation at fixed surrogate scales —
//! an independent route to the posterior-form certificate used to
//! cross-validate the kernel-space implementation.
//!
//! [`sample_feasible`] draws functions from the model set (hit-and-run over
//! the coordinate polytope of ellipsoids) for containment checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{self, FeatureSpaceProblem};
use crate::linalg;
use crate::noise::{NoiseModel, SIGMA_CAP};
use crate::problem::Problem;

/// Feature-space coordinates of one problem-plus-test-input, with the
/// projections used by the solvers precomputed.
pub struct FeatureWorkspace {
    features: FeatureSpaceProblem,
    /// Projected training features: row `i` is `c_i^T Phi_i` (shape `N x r`).
    a: DMatrix<f64>,
    /// Per-constraint `A^T R_j` with `P_j = R_j R_j^T` (shape `r x k_r`).
    w: Vec<DMatrix<f64>>,
    /// Per-constraint `R_j^T y`.
    p_y: Vec<DVector<f64>>,
    y: DVector<f64>,
    noise: NoiseModel,
    gamma_f: f64,
}

impl FeatureWorkspace {
    /// Builds the workspace by factorizing the joint Gram. `rank_tol` is the
    /// relative eigenvalue truncation; zero keeps every strictly positive
    /// eigenvalue and is the right choice when cross-validating routes at
    /// tight tolerances. Benchmarks pass a small positive threshold for
    /// speed.
    pub fn new(problem: &Problem, x_star: &DVector<f64>, rank_tol: f64) -> Result<Self> {
        let gram = kernels::assemble_gram(
            &problem.kernel,
            &problem.inputs,
            &problem.measurements,
            x_star,
        )?;
        let features = kernels::factorize_gram(&gram, rank_tol)?;
        let n = problem.n();
        let r = features.r;
        let mut a = DMatrix::zeros(n, r);
        for i in 0..n {
            let row = problem.measurements[i].transpose() * features.block(i);
            a.set_row(i, &row.row(0));
        }
        let noise = problem.noise.clone();
        let w = noise
            .constraints()
            .iter()
            .map(|c| {
                let k = c.support().len();
                let mut rows = DMatrix::zeros(k, r);
                for (b, &i) in c.support().iter().enumerate() {
                    rows.set_row(b, &a.row(i));
                }
                rows.transpose() * c.project_matrix_transpose()
            })
            .collect();
        let p_y = noise.constraints().iter().map(|c| c.project(&problem.y)).collect();
        Ok(FeatureWorkspace {
            features,
            a,
            w,
            p_y,
            y: problem.y.clone(),
            noise,
            gamma_f: problem.gamma_f,
        })
    }

    pub fn r(&self) -> usize {
        self.features.r
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn gamma_f(&self) -> f64 {
        self.gamma_f
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Feature block of the test input (`n_f x r`).
    pub fn test_block(&self) -> DMatrix<f64> {
        self.features.block(self.features.n_points - 1)
    }

    /// Test feature of a direction: `q = Phi_*^T h`.
    pub fn q_of(&self, h: &DVector<f64>) -> DVector<f64> {
        self.test_block().transpose() * h
    }

    /// Latent function value at the test input for coordinates `theta`.
    pub fn latent_at_test(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.test_block() * theta
    }

    /// Residual noise consistent with coordinates `theta`: `w = y - A theta`.
    pub fn residual(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.a * theta
    }

    /// Smallest relative slack over the norm budget and every noise
    /// constraint; positive means strictly inside the model set.
    pub fn margin(&self, theta: &DVector<f64>) -> f64 {
        let norm_margin = 1.0 - theta.norm_squared() / (self.gamma_f * self.gamma_f);
        let w = self.residual(theta);
        if self.noise.n_con() == 0 {
            return norm_margin;
        }
        norm_margin.min(self.noise.margin(&w))
    }
}

// ============================================================================
// Primal reference solver (projected Newton on the Lagrangian dual)
// ============================================================================

/// Settings for [`solve_primal`].
#[derive(Debug, Clone)]
pub struct PrimalOptions {
    pub max_iters: usize,
    /// Relative tolerance on the projected KKT residual.
    pub tol: f64,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        PrimalOptions {
            // Large dense problems with strongly active noise constraints
            // take several hundred multiplier iterations; the budget is
            // sized so the reference solver converges rather than stalls.
            max_iters: 1000,
            tol: 1e-10,
        }
    }
}

/// Output of the reference solver: the supremum value, the maximizing
/// coordinates (on the closure of the model set), the multipliers
/// `(lambda_0, lambda_1, ...)`, and convergence diagnostics.
#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub value: f64,
    pub theta: DVector<f64>,
    pub lambda: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct DualState {
    value: f64,
    grad: DVector<f64>,
    theta: DVector<f64>,
    /// Residual `y - A theta`.
    e: DVector<f64>,
    h_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// Evaluates the Lagrangian dual `d(lambda)` with its gradient and the
/// Cholesky factor of the inner Hessian `H = lambda_0 I + A^T P_lambda A`.
fn eval_dual(ws: &FeatureWorkspace, q: &DVector<f64>, lambda: &[f64]) -> Result<DualState> {
    let r = ws.r();
    let n_con = ws.noise.n_con();
    let mut h = DMatrix::identity(r, r) * lambda[0];
    let mut b = q.clone();
    let mut linear = lambda[0] * ws.gamma_f * ws.gamma_f;
    for j in 0..n_con {
        let lj = lambda[j + 1];
        let gamma = ws.noise.gamma(j);
        linear += lj * gamma * gamma - lj * ws.p_y[j].norm_squared();
        if lj == 0.0 {
            continue;
        }
        let wj = &ws.w[j];
        if wj.ncols() > 0 {
            let wt = wj.transpose();
            h.gemm(lj, wj, &wt, 1.0);
            b += 2.0 * lj * (wj * &ws.p_y[j]);
        }
    }
    let h_chol = linalg::cholesky_psd(&h, "primal dual inner system")?;
    let theta = 0.5 * h_chol.solve(&b);
    let value = 0.5 * b.dot(&theta) + linear;
    let e = ws.residual(&theta);
    let mut grad = DVector::zeros(n_con + 1);
    grad[0] = ws.gamma_f * ws.gamma_f - theta.norm_squared();
    for (j, c) in ws.noise.constraints().iter().enumerate() {
        let g = c.gamma();
        grad[j + 1] = g * g - c.project(&e).norm_squared();
    }
    Ok(DualState {
        value,
        grad,
        theta,
        e,
        h_chol,
    })
}

/// Dual Hessian `2 V^T H^{-1} V` with `v_0 = -theta`, `v_j = A^T P_j e`.
fn dual_hessian(ws: &FeatureWorkspace, state: &DualState) -> DMatrix<f64> {
    let n_con = ws.noise.n_con();
    let r = ws.r();
    let mut v = DMatrix::zeros(r, n_con + 1);
    v.set_column(0, &(-&state.theta));
    for (j, c) in ws.noise.constraints().iter().enumerate() {
        if ws.w[j].ncols() == 0 {
            continue;
        }
        let col = &ws.w[j] * c.project(&state.e);
        v.set_column(j + 1, &col);
    }
    let hv = state.h_chol.solve(&v);
    2.0 * v.transpose() * hv
}

fn kkt_residual(lambda: &[f64], grad: &DVector<f64>, floor: f64) -> f64 {
    // Projected-gradient-step residual for the nonnegativity box; the entry
    // for lambda_0 respects its positivity floor.
    lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let lower = if i == 0 { floor } else { 0.0 };
            (l - (l - grad[i]).max(lower)).abs()
        })
        .fold(0.0, f64::max)
}

/// Supremum of `h^T f(x*)` over the model set via the Lagrangian dual.
///
/// Errors with [`Error::Infeasible`] when the dual is detected unbounded
/// below, which certifies that no function is consistent with the data.
pub fn solve_primal(
    ws: &FeatureWorkspace,
    h: &DVector<f64>,
    opts: &PrimalOptions,
) -> Result<PrimalSolution> {
    let q = ws.q_of(h);
    let n_con = ws.noise.n_con();
    let q_norm = q.norm();
    let prior = ws.gamma_f * q_norm;
    let scale = (1.0 + prior).max(
        (0..n_con)
            .map(|j| ws.noise.gamma(j).powi(2))
            .fold(ws.gamma_f * ws.gamma_f, f64::max),
    );
    let floor = 1e-12 * (1.0 + q_norm / (2.0 * ws.gamma_f));

    // Start from the data-free optimum for lambda_0 and uniform small noise
    // multipliers.
    let lam0 = (q_norm / (2.0 * ws.gamma_f)).max(floor);
    let mut lambda = vec![lam0; n_con + 1];
    for l in lambda.iter_mut().skip(1) {
        *l = lam0 / (n_con.max(1) as f64);
    }

    let mut state = eval_dual(ws, &q, &lambda)?;
    let mut best = (state.value, lambda.clone(), state.theta.clone());
    let mut residual = kkt_residual(&lambda, &state.grad, floor);
    let mut converged = residual <= opts.tol * scale;
    let mut iterations = 0;
    // Rank-truncated bases leave a small irreducible projected-gradient
    // floor that the value does not feel (it agrees with the full-rank
    // optimum to machine precision). Once the value stops improving and the
    // residual is already small, further multiplier polishing is noise.
    let mut stalled = 0usize;

    for it in 0..opts.max_iters {
        if converged {
            break;
        }
        // Unbounded dual => empty model set.
        if state.value < -prior - 1e-6 * scale {
            return Err(Error::Infeasible {
                radicand: state.value + prior,
            });
        }
        iterations = it + 1;

        // Active set: multipliers at their lower bound being pushed down.
        let active: Vec<bool> = lambda
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let lower = if i == 0 { floor } else { 0.0 };
                l <= lower + 1e-14 && state.grad[i] > 0.0
            })
            .collect();
        let free: Vec<usize> = (0..=n_con).filter(|&i| !active[i]).collect();
        if free.is_empty() {
            converged = true;
            break;
        }
        let hess = dual_hessian(ws, &state);
        let m = free.len();
        let mut hf = DMatrix::zeros(m, m);
        let mut gf = DVector::zeros(m);
        for (a, &i) in free.iter().enumerate() {
            gf[a] = state.grad[i];
            for (b, &j) in free.iter().enumerate() {
                hf[(a, b)] = hess[(i, j)];
            }
        }
        // Small ridge keeps the reduced system solvable near rank deficiency.
        let ridge = 1e-12 * (1.0 + hf.trace().abs() / m as f64);
        for a in 0..m {
            hf[(a, a)] += ridge;
        }
        let step = match linalg::cholesky_psd(&hf, "dual Newton system") {
            Ok(ch) => ch.solve(&gf),
            Err(_) => gf.clone(),
        };

        // Projected Armijo line search on d.
        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = lambda.clone();
            for (a, &i) in free.iter().enumerate() {
                let lower = if i == 0 { floor } else { 0.0 };
                trial[i] = (lambda[i] - alpha * step[a]).max(lower);
            }
            let moved: f64 = (0..=n_con)
                .map(|i| (trial[i] - lambda[i]) * state.grad[i])
                .sum();
            match eval_dual(ws, &q, &trial) {
                Ok(next) if next.value <= state.value + 1e-4 * moved => {
                    lambda = trial;
                    state = next;
                    accepted = true;
                    break;
                }
                Ok(_) => {}
                Err(_) => {}
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Fall back to a short projected gradient step before giving up.
            let g_inf = state.grad.amax().max(1e-300);
            let mut trial = lambda.clone();
            for i in 0..=n_con {
                let lower = if i == 0 { floor } else { 0.0 };
                trial[i] = (lambda[i] - 1e-3 / g_inf * state.grad[i] * scale).max(lower);
            }
            match eval_dual(ws, &q, &trial) {
                Ok(next) if next.value < state.value => {
                    lambda = trial;
                    state = next;
                }
                _ => break,
            }
        }
        if state.value < best.0 - 1e-13 * scale {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if state.value < best.0 {
            best = (state.value, lambda.clone(), state.theta.clone());
        }
        residual = kkt_residual(&lambda, &state.grad, floor);
        converged = residual <= opts.tol * scale || (stalled >= 25 && residual <= 1e-6 * scale);
    }

    // The dual value at any nonnegative multiplier upper-bounds the primal;
    // report the best one seen.
    let (value, lambda, theta) = best;
    Ok(PrimalSolution {
        value,
        theta,
        lambda,
        kkt_residual: residual / scale,
        iterations,
        converged,
    })
}

// ============================================================================
// Relaxed closed form (independent route to the certificate)
// ============================================================================

/// Closed-form certificate value at fixed scales, evaluated in feature
/// coordinates.
#[derive(Debug, Clone)]
pub struct RelaxedValue {
    pub value: f64,
    pub beta: f64,
    pub mean: f64,
    pub dir_variance: f64,
    /// Ridge-regression coordinates realizing the posterior mean.
    pub theta_mean: DVector<f64>,
    /// Coordinates of the worst-case function of the relaxation.
    pub theta_witness: DVector<f64>,
}

/// Evaluates `h^T mu_sigma + beta_sigma sqrt(h^T Sigma_sigma h)` through the
/// identities `mu = Phi theta_mean`, `Sigma_* = Phi_* T^{-1} Phi_*^T` with
/// `T = I + A^T P_sigma A`, entirely in feature coordinates. Scales at or
/// beyond the cap drop out of the precision, matching the kernel-space route.
pub fn relaxed_closed_form(
    ws: &FeatureWorkspace,
    h: &DVector<f64>,
    sigma: &[f64],
) -> Result<RelaxedValue> {
    let n_con = ws.noise.n_con();
    if sigma.len() != n_con {
        return Err(Error::DimensionMismatch {
            context: "sigma vector",
            expected: n_con,
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
    let r = ws.r();
    let q = ws.q_of(h);
    let mut t = DMatrix::identity(r, r);
    let mut rhs = DVector::zeros(r);
    let mut y_quad_direct = 0.0;
    let mut budget = ws.gamma_f * ws.gamma_f;
    for j in 0..n_con {
        let gamma = ws.noise.gamma(j);
        budget += (gamma / sigma[j]) * (gamma / sigma[j]);
        if sigma[j] >= SIGMA_CAP || ws.w[j].ncols() == 0 {
            continue;
        }
        let inv_s2 = 1.0 / (sigma[j] * sigma[j]);
        let wj = &ws.w[j];
        let wt = wj.transpose();
        t.gemm(inv_s2, wj, &wt, 1.0);
        rhs += inv_s2 * (wj * &ws.p_y[j]);
        y_quad_direct += inv_s2 * ws.p_y[j].norm_squared();
    }
    let t_chol = linalg::cholesky_psd(&t, "relaxed closed form system")?;
    let theta_mean = t_chol.solve(&rhs);
    let y_quad = (y_quad_direct - rhs.dot(&theta_mean)).max(0.0);
    let radicand = budget - y_quad;
    if radicand < 0.0 {
        return Err(Error::Infeasible { radicand });
    }
    let beta = radicand.sqrt();
    let tq = t_chol.solve(&q);
    let dir_variance = q.dot(&tq).max(0.0);
    let sqrt_s = dir_variance.sqrt();
    let mean = q.dot(&theta_mean);
    let value = mean + beta * sqrt_s;
    let theta_witness = if sqrt_s > 0.0 {
        &theta_mean + (beta / sqrt_s) * &tq
    } else {
        theta_mean.clone()
    };
    Ok(RelaxedValue {
        value,
        beta,
        mean,
        dir_variance,
        theta_mean,
        theta_witness,
    })
}

// ============================================================================
// Feasible-function sampler
// ============================================================================

/// One sampled member of the model set.
#[derive(Debug, Clone)]
pub struct FeasibleSample {
    pub theta: DVector<f64>,
    /// Noise realization `y - A theta` consistent with the data.
    pub w: DVector<f64>,
    /// Latent function value at the test input.
    pub latent: DVector<f64>,
    /// Strict-feasibility margin of the sample.
    pub margin: f64,
}

/// Settings for [`sample_feasible`].
#[derive(Debug, Clone)]
pub struct SamplerOptions {
    pub burn_in: usize,
    pub thinning: usize,
    /// Relative shrink applied to every chord to stay strictly interior.
    pub chord_shrink: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            burn_in: 0, // replaced by 10 r at run time when left at zero
            thinning: 0,
            chord_shrink: 1e-9,
        }
    }
}

/// Finds a strictly interior point of the model set: ridge fits along a
/// scale sweep, then greedy repair on the worst relative violation.
fn interior_point(ws: &FeatureWorkspace) -> Result<DVector<f64>> {
    let r = ws.r();
    let mut best = DVector::zeros(r);
    let mut best_margin = ws.margin(&best);
    let base: Vec<f64> = (0..ws.noise.n_con())
        .map(|j| ws.noise.gamma(j).max(1e-8))
        .collect();
    for e in -20..=20 {
        let t = 2.0f64.powi(e);
        let sigma: Vec<f64> = base.iter().map(|&b| (b * t).min(SIGMA_CAP * 0.5)).collect();
        if sigma.is_empty() {
            break;
        }
        let h0 = DVector::zeros(ws.test_block().nrows());
        if let Ok(rv) = relaxed_closed_form(ws, &h0, &sigma) {
            let m = ws.margin(&rv.theta_mean);
            if m > best_margin {
                best_margin = m;
                best = rv.theta_mean;
            }
        }
        if best_margin > 0.1 {
            break;
        }
    }
    if best_margin > 1e-9 {
        return Ok(best);
    }

    // Repair: push away from the most violated constraint.
    let mut theta = best;
    let mut margin = best_margin;
    for _ in 0..200 {
        if margin > 1e-9 {
            return Ok(theta);
        }
        let gamma_f_sq = ws.gamma_f * ws.gamma_f;
        let norm_m = 1.0 - theta.norm_squared() / gamma_f_sq;
        let e = ws.residual(&theta);
        let mut worst = norm_m;
        let mut dir = -2.0 * &theta / gamma_f_sq;
        for (j, c) in ws.noise.constraints().iter().enumerate() {
            let g2 = c.gamma() * c.gamma();
            let m_j = 1.0 - c.project(&e).norm_squared() / g2;
            if m_j < worst {
                worst = m_j;
                dir = if ws.w[j].ncols() > 0 {
                    (2.0 / g2) * (&ws.w[j] * c.project(&e))
                } else {
                    DVector::zeros(r)
                };
            }
        }
        let dn = dir.norm();
        if dn == 0.0 {
            break;
        }
        let mut alpha = 0.5 * ws.gamma_f / dn;
        let mut improved = false;
        for _ in 0..40 {
            let trial = &theta + alpha * &dir;
            let m = ws.margin(&trial);
            if m > margin {
                theta = trial;
                margin = m;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if margin > 1e-9 {
        Ok(theta)
    } else {
        Err(Error::SamplerExhausted {
            reason: "no strictly interior point found",
        })
    }
}

/// Chord of the model set along `u` from `theta`: the open interval of `t`
/// with `theta + t u` strictly feasible. Requires `theta` interior.
fn chord(ws: &FeatureWorkspace, theta: &DVector<f64>, u: &DVector<f64>) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut clip = |a: f64, b: f64, c: f64| -> bool {
        // Constraint a t^2 + b t + c <= 0 with a >= 0 and c < 0 (interior).
        if a <= 0.0 {
            if b.abs() > 0.0 {
                let t0 = -c / b;
                if b > 0.0 {
                    hi = hi.min(t0);
                } else {
                    lo = lo.max(t0);
                }
            }
            return true;
        }
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return false;
        }
        let sq = disc.sqrt();
        lo = lo.max((-b - sq) / (2.0 * a));
        hi = hi.min((-b + sq) / (2.0 * a));
        true
    };

    let gamma_f_sq = ws.gamma_f * ws.gamma_f;
    if !clip(
        u.norm_squared(),
        2.0 * theta.dot(u),
        theta.norm_squared() - gamma_f_sq,
    ) {
        return None;
    }
    let e = ws.residual(theta);
    let au = &ws.a * u;
    for c in ws.noise.constraints() {
        let pe = c.project(&e);
        let pu = c.project(&au);
        if !clip(
            pu.norm_squared(),
            -2.0 * pe.dot(&pu),
            pe.norm_squared() - c.gamma() * c.gamma(),
        ) {
            return None;
        }
    }
    if lo.is_finite() && hi.is_finite() && lo < 0.0 && hi > 0.0 {
        Some((lo, hi))
    } else {
        None
    }
}

/// Draws `count` functions from the model set by hit-and-run over the
/// coordinate representation, with a rejection fallback when no interior
/// point is found by the deterministic search.
pub fn sample_feasible<R: Rng>(
    ws: &FeatureWorkspace,
    rng: &mut R,
    count: usize,
    opts: &SamplerOptions,
) -> Result<Vec<FeasibleSample>> {
    let r = ws.r();
    let make = |theta: &DVector<f64>| FeasibleSample {
        theta: theta.clone(),
        w: ws.residual(theta),
        latent: ws.latent_at_test(theta),
        margin: ws.margin(theta),
    };

    let interior = interior_point(ws);
    let mut theta = match interior {
        Ok(t) => t,
        Err(_) => {
            // Rejection fallback: uniform in the norm ball, keep noise-valid
            // draws. Covers sets whose interior the sweep missed.
            let mut out = Vec::with_capacity(count);
            for _ in 0..200_000 {
                if out.len() == count {
                    return Ok(out);
                }
                let mut v = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
                let radius = ws.gamma_f * (rng.gen_range(0.0f64..1.0)).powf(1.0 / r as f64);
                v *= radius / v.norm().max(1e-300);
                if ws.margin(&v) > 0.0 {
                    out.push(make(&v));
                }
            }
            return Err(Error::SamplerExhausted {
                reason: "rejection sampling found too few feasible functions",
            });
        }
    };

    let burn_in = if opts.burn_in == 0 { 10 * r } else { opts.burn_in };
    let thinning = if opts.thinning == 0 {
        r.max(5)
    } else {
        opts.thinning
    };
    let mut out = Vec::with_capacity(count);
    let mut since_last = 0usize;
    let mut steps = 0usize;
    let total_steps = burn_in + count * thinning + 1;
    let max_steps = 50 * total_steps;
    while out.len() < count && steps < max_steps {
        steps += 1;
        let mut u = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let un = u.norm();
        if un == 0.0 {
            continue;
        }
        u /= un;
        let Some((lo, hi)) = chord(ws, &theta, &u) else {
            continue;
        };
        let width = hi - lo;
        let lo_s = lo + opts.chord_shrink * width;
        let hi_s = hi - opts.chord_shrink * width;
        if !(lo_s < hi_s) {
            continue;
        }
        let t = rng.gen_range(lo_s..hi_s);
        let trial = &theta + t * &u;
        if ws.margin(&trial) <= 0.0 {
            continue;
        }
        theta = trial;
        if steps <= burn_in {
            continue;
        }
        since_last += 1;
        if since_last >= thinning {
            out.push(make(&theta));
            since_last = 0;
        }
    }
    if out.len() < count {
        return Err(Error::SamplerExhausted {
            reason: "hit-and-run stalled before reaching the requested count",
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn simple_problem() -> Problem {
        Problem::new(
            KernelSpec::default_se(),
            vec![v(&[0.0]), v(&[0.9]), v(&[-0.5])],
            vec![v(&[1.0]); 3],
            DVector::from_row_slice(&[0.3, -0.2, 0.1]),
            NoiseModel::pointwise(&[0.2, 0.2, 0.2]).unwrap(),
            1.2,
        )
        .unwrap()
    }

    #[test]
    fn dataless_primal_is_prior_bound() {
        let problem = Problem::new(
            KernelSpec::default_se(),
            vec![],
            vec![],
            DVector::zeros(0),
            NoiseModel::pointwise(&[]).unwrap(),
            1.7,
        )
        .unwrap();
        let ws = FeatureWorkspace::new(&problem, &v(&[0.4]), 0.0).unwrap();
        let sol = solve_primal(&ws, &v(&[1.0]), &PrimalOptions::default()).unwrap();
        // Prior bound: gamma_f * sqrt(k(x*, x*)) = 1.7.
        assert_relative_eq!(sol.value, 1.7, max_relative = 1e-9);
        assert!(sol.converged);
    }

    #[test]
    fn single_observation_at_test_input_has_analytic_value() {
        // Measuring at the test input itself: the value is capped by the
        // smaller of the norm budget and observation plus noise bound.
        let y = 0.4;
        let gamma_w = 0.15;
        let gamma_f = 1.0;
        let problem = Problem::new(
            KernelSpec::default_se(),
            vec![v(&[0.3])],
            vec![v(&[1.0])],
            DVector::from_row_slice(&[y]),
            NoiseModel::pointwise(&[gamma_w]).unwrap(),
            gamma_f,
        )
        .unwrap();
        let ws = FeatureWorkspace::new(&problem, &v(&[0.3]), 0.0).unwrap();
        let sol = solve_primal(&ws, &v(&[1.0]), &PrimalOptions::default()).unwrap();
        let expected = (y + gamma_w).min(gamma_f);
        assert_relative_eq!(sol.value, expected, max_relative = 1e-8);
    }

    #[test]
    fn relaxed_value_upper_bounds_primal() {
        let problem = simple_problem();
        let ws = FeatureWorkspace::new(&problem, &v(&[0.4]), 0.0).unwrap();
        let h = v(&[1.0]);
        let sol = solve_primal(&ws, &h, &PrimalOptions::default()).unwrap();
        for s in [0.05, 0.2, 1.0, 4.0] {
            let rv = relaxed_closed_form(&ws, &h, &[s, s, s]).unwrap();
            assert!(
                rv.value + 1e-8 >= sol.value,
                "sigma {s}: relaxed {} < primal {}",
                rv.value,
                sol.value
            );
        }
    }

    #[test]
    fn witness_coordinates_attain_the_relaxed_value() {
        let problem = simple_problem();
        let ws = FeatureWorkspace::new(&problem, &v(&[0.1]), 0.0).unwrap();
        let h = v(&[1.0]);
        let rv = relaxed_closed_form(&ws, &h, &[0.3, 0.3, 0.3]).unwrap();
        let attained = ws.q_of(&h).dot(&rv.theta_witness);
        assert_relative_eq!(attained, rv.value, max_relative = 1e-9);
    }

    #[test]
    fn sampler_yields_strictly_feasible_functions_below_the_supremum() {
        let problem = simple_problem();
        let ws = FeatureWorkspace::new(&problem, &v(&[0.4]), 0.0).unwrap();
        let h = v(&[1.0]);
        let sol = solve_primal(&ws, &h, &PrimalOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples =
            sample_feasible(&ws, &mut rng, 50, &SamplerOptions::default()).unwrap();
        assert_eq!(samples.len(), 50);
        for s in &samples {
            assert!(s.margin > 0.0, "sample must be strictly feasible");
            let val = h.dot(&s.latent);
            assert!(
                val <= sol.value + 1e-8,
                "sampled value {val} beats the supremum {}",
                sol.value
            );
            // The recorded noise matches the residual identity.
            let w = ws.residual(&s.theta);
            assert!((&w - &s.w).norm() < 1e-12);
        }
    }

    #[test]
    fn infeasible_data_is_certified() {
        let problem = Problem::new(
            KernelSpec::default_se(),
            vec![v(&[0.0])],
            vec![v(&[1.0])],
            DVector::from_row_slice(&[10.0]),
            NoiseModel::pointwise(&[0.05]).unwrap(),
            0.5,
        )
        .unwrap();
        let ws = FeatureWorkspace::new(&problem, &v(&[0.2]), 0.0).unwrap();
        let out = solve_primal(&ws, &v(&[1.0]), &PrimalOptions::default());
        assert!(matches!(out, Err(Error::Infeasible { .. })));
    }
}
