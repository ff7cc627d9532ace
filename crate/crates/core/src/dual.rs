//! Certificate optimization over surrogate noise scales.
//!
//! For fixed scales `sigma` the worst-case value of `h^T f(x*)` over all
//! functions and noise realizations consistent with the data is bounded by
//!
//! `d(sigma) = h^T mu_sigma(x*) + beta_sigma * sqrt(h^T Sigma_sigma(x*) h)`,
//!
//! with posterior mean/covariance and certificate radius from [`crate::gp`].
//! Every `sigma > 0` yields a valid upper bound; the bound is minimized here
//! by Adam in `log sigma` with an optional monotone line-search polish. The
//! objective is invex in `log sigma`, so a stationary point is a global
//! minimum; scales are capped at [`SIGMA_CAP`], where a constraint leaves
//! the surrogate and only its vanishing budget term remains.
//!
//! The gradient is analytic. With `J = I - A^T S^{-1} A P_sigma`,
//! `yhat = J y`, `ghat = J g` (`g` the projected cross-covariance), and
//! `s = h^T Sigma h`:
//!
//! `d_j = [-2 ghat^T P_j yhat + (yhat^T P_j yhat - gamma_j^2) sqrt(s)/beta
//!         + beta ghat^T P_j ghat / sqrt(s)] / sigma_j^3`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::{Factorization, ProblemGeometry};
use crate::linalg;
use crate::noise::{NoiseKind, SIGMA_CAP};
use crate::problem::{BoundQuery, Problem};

/// Settings for the scale optimizer. Defaults follow the reference protocol:
/// Adam with step 0.1 in log-space, at most 100 iterations, relative gradient
/// tolerance `1e-7`, then a monotone polish phase.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tol_rel: f64,
    pub sigma_cap: f64,
    /// Run a monotone Armijo descent from the best Adam iterate. Disable to
    /// reproduce the plain fixed-budget Adam protocol.
    pub polish: bool,
    pub polish_max_iters: usize,
    /// Explicit initial scales; defaults to `gamma_j` for pointwise/energy
    /// models and `1` for general models.
    pub init: Option<Vec<f64>>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            step_size: 0.1,
            max_iters: 100,
            grad_tol_rel: 1e-7,
            sigma_cap: SIGMA_CAP,
            polish: true,
            polish_max_iters: 400,
            init: None,
        }
    }
}

impl OptimizerOptions {
    /// Plain 100-step Adam without polish, as used for benchmark rows that
    /// report the fixed-budget protocol.
    pub fn fixed_budget() -> Self {
        OptimizerOptions {
            polish: false,
            ..OptimizerOptions::default()
        }
    }
}

/// Termination state of the scale optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimStatus {
    /// Relative gradient over free coordinates at tolerance.
    Converged,
    /// Stationary up to coordinates pinned at the scale cap (prior-limit
    /// direction); the bound is still valid and globally tight over the box.
    BoundaryLimit,
    /// Iteration budget exhausted before the tolerance was met.
    IterationLimit,
}

impl std::fmt::Display for OptimStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OptimStatus::Converged => "converged",
            OptimStatus::BoundaryLimit => "boundary-limit",
            OptimStatus::IterationLimit => "iteration-limit",
        };
        f.write_str(s)
    }
}

/// Optimized certificate: the bound value plus everything needed to audit or
/// reuse it (optimal scales, radius, posterior at the test input). The
/// identity `value = h^T mu + beta * sqrt(h^T cov h)` holds at `sigma` and is
/// recomputable from the stored pieces.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub value: f64,
    pub sigma: Vec<f64>,
    pub beta: f64,
    /// Posterior mean at the test input, at the optimal scales.
    pub mu: DVector<f64>,
    /// Posterior covariance at the test input, at the optimal scales.
    pub covariance: DMatrix<f64>,
    /// `h^T mu` at the optimal scales.
    pub mean: f64,
    /// `h^T covariance h` at the optimal scales.
    pub dir_variance: f64,
    pub grad_norm_rel: f64,
    pub iterations: usize,
    pub status: OptimStatus,
}

/// Query-specific precomputation: the projected cross-covariance `g` (entry
/// `i` is `h^T k(x*, x_i) c_i`) and the prior quadratic `h^T k(x*,x*) h`.
pub struct QueryContext {
    pub x_star: DVector<f64>,
    pub direction: DVector<f64>,
    pub g: DVector<f64>,
    pub prior_quad: f64,
}

impl QueryContext {
    pub fn new(geom: &ProblemGeometry, query: &BoundQuery) -> Result<Self> {
        query.validate(geom.problem(), true)?;
        Ok(QueryContext {
            x_star: query.x_star.clone(),
            direction: query.direction.clone(),
            g: geom.projected_cross(&query.x_star, &query.direction)?,
            prior_quad: geom.prior_quad(&query.x_star, &query.direction)?,
        })
    }

    /// Scale-free bound `gamma_f * sqrt(h^T k(x*,x*) h)` recovered in the
    /// large-scale limit.
    pub fn prior_bound(&self, gamma_f: f64) -> f64 {
        gamma_f * self.prior_quad.max(0.0).sqrt()
    }
}

/// Value and analytic gradient of the certificate at one scale vector.
#[derive(Debug, Clone)]
pub struct DualEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub beta: f64,
    pub mean: f64,
    pub dir_variance: f64,
}

fn eval_parts(fact: &Factorization<'_>, ctx: &QueryContext) -> Result<(f64, f64, f64)> {
    let beta = fact.beta()?;
    let mean = ctx.g.dot(fact.solved_y());
    let dir_variance = fact.posterior_quad(&ctx.g, ctx.prior_quad);
    Ok((beta, mean, dir_variance))
}

/// Certificate value at fixed scales. Errors with [`Error::Infeasible`] when
/// the data contradicts the budgets there.
pub fn dual_value(geom: &ProblemGeometry, ctx: &QueryContext, sigma: &[f64]) -> Result<f64> {
    let fact = geom.factorize(sigma)?;
    let (beta, mean, dir_variance) = eval_parts(&fact, ctx)?;
    Ok(mean + beta * dir_variance.sqrt())
}

/// Certificate value and gradient at fixed scales.
pub fn dual_eval(geom: &ProblemGeometry, ctx: &QueryContext, sigma: &[f64]) -> Result<DualEval> {
    let fact = geom.factorize(sigma)?;
    let (beta, mean, dir_variance) = eval_parts(&fact, ctx)?;
    let sqrt_s = dir_variance.sqrt();
    let value = mean + beta * sqrt_s;

    let yhat = fact.shadow(&geom.problem().y);
    let ghat = fact.shadow(&ctx.g);
    let noise = &geom.problem().noise;
    let mut grad = vec![0.0; noise.n_con()];
    for (j, c) in noise.constraints().iter().enumerate() {
        let s3 = sigma[j] * sigma[j] * sigma[j];
        let gamma_sq = c.gamma() * c.gamma();
        let (t1, t2, t3) = if fact.capped()[j] || c.support().is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            let py = c.project(&yhat);
            let pg = c.project(&ghat);
            (pg.dot(&py), py.norm_squared(), pg.norm_squared())
        };
        let mut g_j = -2.0 * t1;
        if t2 != gamma_sq {
            if beta <= 0.0 {
                return Err(Error::GradientUndefined { beta });
            }
            g_j += (t2 - gamma_sq) * sqrt_s / beta;
        }
        if t3 != 0.0 {
            if sqrt_s <= 0.0 {
                return Err(Error::GradientUndefined { beta: sqrt_s });
            }
            g_j += beta * t3 / sqrt_s;
        }
        grad[j] = g_j / s3;
    }
    Ok(DualEval {
        value,
        grad,
        beta,
        mean,
        dir_variance,
    })
}

/// Certificate gradient at fixed scales.
pub fn dual_gradient(
    geom: &ProblemGeometry,
    ctx: &QueryContext,
    sigma: &[f64],
) -> Result<Vec<f64>> {
    Ok(dual_eval(geom, ctx, sigma)?.grad)
}

fn default_init(geom: &ProblemGeometry) -> Vec<f64> {
    let noise = &geom.problem().noise;
    match noise.kind() {
        NoiseKind::Pointwise | NoiseKind::Energy => {
            (0..noise.n_con()).map(|j| noise.gamma(j)).collect()
        }
        NoiseKind::General => vec![1.0; noise.n_con()],
    }
}

/// Finds feasible initial scales: the default (or supplied) point, doubled
/// uniformly until the certificate radicand is nonnegative.
fn feasible_init(
    geom: &ProblemGeometry,
    opts: &OptimizerOptions,
) -> Result<Vec<f64>> {
    let mut sigma = match &opts.init {
        Some(s) => s.clone(),
        None => default_init(geom),
    };
    for s in sigma.iter_mut() {
        *s = s.min(opts.sigma_cap);
    }
    let mut last_rad = 0.0;
    for _ in 0..80 {
        match geom.factorize(&sigma) {
            Ok(fact) => {
                last_rad = fact.beta_radicand();
                // Strict positivity keeps the first gradient well defined;
                // the radicand grows toward gamma_f^2 under uniform
                // doubling.
                if last_rad > 0.0 {
                    return Ok(sigma);
                }
            }
            // Scales too small to evaluate stably: growing them is exactly
            // what the doubling does anyway.
            Err(Error::IllConditionedScales { .. }) => {}
            Err(e) => return Err(e),
        }
        for s in sigma.iter_mut() {
            *s = (*s * 2.0).min(opts.sigma_cap);
        }
    }
    Err(Error::Infeasible { radicand: last_rad })
}

/// Lower clamp for the optimizer iterates. A scale this small means the
/// constraint is enforced essentially exactly; the budget term makes such
/// points never optimal, but wild trial steps must not underflow `exp`.
const SIGMA_FLOOR: f64 = 1e-10;

struct LogSpaceState {
    z: Vec<f64>,
    cap_log: f64,
}

impl LogSpaceState {
    fn sigma(&self) -> Vec<f64> {
        self.z.iter().map(|&z| z.exp().min(SIGMA_CAP)).collect()
    }

    fn clamp(&mut self) {
        let floor_log = SIGMA_FLOOR.ln();
        for z in self.z.iter_mut() {
            *z = z.clamp(floor_log, self.cap_log);
        }
    }

    /// Log-space gradient with outward-pushing boundary coordinates masked:
    /// those are stationary for the box-constrained problem.
    fn free_gradient(&self, grad_sigma: &[f64]) -> Vec<f64> {
        let floor_log = SIGMA_FLOOR.ln();
        self.z
            .iter()
            .zip(grad_sigma)
            .map(|(&z, &g)| {
                let gz = z.exp() * g;
                if (z >= self.cap_log && gz < 0.0) || (z <= floor_log && gz > 0.0) {
                    0.0
                } else {
                    gz
                }
            })
            .collect()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Above this constraint count the polish phase uses spectral gradient steps
/// instead of a finite-difference Newton model (whose cost per iteration
/// grows with the number of constraints).
const NEWTON_POLISH_LIMIT: usize = 32;

/// Central-difference curvature model of the certificate in log-scales,
/// restricted to the free coordinates. `None` when an evaluation fails near
/// the feasibility boundary; the caller falls back to a gradient step.
fn fd_hessian(
    geom: &ProblemGeometry,
    ctx: &QueryContext,
    state: &LogSpaceState,
    free: &[usize],
) -> Option<DMatrix<f64>> {
    let delta = 1e-5;
    let nf = free.len();
    let mut h = DMatrix::zeros(nf, nf);
    for (a, &j) in free.iter().enumerate() {
        let mut col = vec![0.0; nf];
        for (sign, weight) in [(1.0, 1.0), (-1.0, -1.0)] {
            let mut z = state.z.clone();
            z[j] += sign * delta;
            let sigma: Vec<f64> = z.iter().map(|&w| w.exp()).collect();
            let e = dual_eval(geom, ctx, &sigma).ok()?;
            for (b, &k) in free.iter().enumerate() {
                col[b] += weight * sigma[k] * e.grad[k];
            }
        }
        for (b, &c) in col.iter().enumerate() {
            h[(b, a)] = c / (2.0 * delta);
        }
    }
    // Differentiation noise breaks exact symmetry.
    let ht = h.transpose();
    Some((h + ht) * 0.5)
}

/// Solves `(H + tau I) p = -g` on the free coordinates with the smallest
/// damping that yields a positive-definite system, returning the full-width
/// direction. `None` when no tried damping level works.
fn damped_solve(h: &DMatrix<f64>, free: &[usize], grad_z: &[f64]) -> Option<Vec<f64>> {
    let nf = free.len();
    let g = DVector::from_fn(nf, |b, _| grad_z[free[b]]);
    let scale = h.diagonal().amax().max(1e-300);
    let mut tau = 0.0;
    for _ in 0..60 {
        let mut hh = h.clone();
        for b in 0..nf {
            hh[(b, b)] += tau;
        }
        if let Some(ch) = nalgebra::Cholesky::new(hh) {
            let p = ch.solve(&(-&g));
            let mut dir = vec![0.0; grad_z.len()];
            for (b, &j) in free.iter().enumerate() {
                dir[j] = p[b];
            }
            return Some(dir);
        }
        tau = if tau == 0.0 { 1e-10 * scale } else { tau * 10.0 };
    }
    None
}

/// Minimizes the certificate over scales for one query. Builds the geometry
/// internally; use [`optimize_bound_with_geometry`] to amortize it.
pub fn optimize_bound(
    problem: &Problem,
    query: &BoundQuery,
    opts: &OptimizerOptions,
) -> Result<BoundCertificate> {
    let geom = ProblemGeometry::new(problem)?;
    optimize_bound_with_geometry(&geom, query, opts)
}

/// Minimizes the certificate over scales, reusing a prepared geometry.
pub fn optimize_bound_with_geometry(
    geom: &ProblemGeometry,
    query: &BoundQuery,
    opts: &OptimizerOptions,
) -> Result<BoundCertificate> {
    let ctx = QueryContext::new(geom, query)?;
    minimize(geom, &ctx, opts)
}

/// Core minimizer over a prepared query context.
pub fn minimize(
    geom: &ProblemGeometry,
    ctx: &QueryContext,
    opts: &OptimizerOptions,
) -> Result<BoundCertificate> {
    let n_con = geom.problem().n_con();
    let scale_ref = {
        let p = ctx.prior_bound(geom.problem().gamma_f);
        if p > 0.0 {
            p
        } else {
            1.0
        }
    };

    if geom.problem().n() == 0 {
        // Without data the certificate decreases toward the prior bound as
        // every scale grows; evaluate directly at the cap.
        let sigma = vec![opts.sigma_cap; n_con];
        let eval = dual_eval(geom, ctx, &sigma)?;
        let status = if n_con == 0 {
            OptimStatus::Converged
        } else {
            OptimStatus::BoundaryLimit
        };
        return finish(geom, ctx, eval, sigma, 0, status, 0.0);
    }

    let sigma0 = feasible_init(geom, opts)?;
    let cap_log = opts.sigma_cap.ln();
    let mut state = LogSpaceState {
        z: sigma0.iter().map(|&s| s.ln()).collect(),
        cap_log,
    };
    state.clamp();

    let mut eval = dual_eval(geom, ctx, &state.sigma())?;
    let mut best = (eval.value, state.sigma());
    let mut grad_z = state.free_gradient(&eval.grad);
    let mut rel_grad = norm2(&grad_z) / scale_ref.max(eval.value.abs());
    let mut iterations = 0usize;

    // Adam in log-space with bias correction and cap projection.
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; n_con];
    let mut v = vec![0.0; n_con];
    for t in 1..=opts.max_iters {
        if rel_grad <= opts.grad_tol_rel {
            break;
        }
        for j in 0..n_con {
            m[j] = b1 * m[j] + (1.0 - b1) * grad_z[j];
            v[j] = b2 * v[j] + (1.0 - b2) * grad_z[j] * grad_z[j];
        }
        let bc1 = 1.0 - b1.powi(t as i32);
        let bc2 = 1.0 - b2.powi(t as i32);
        let step: Vec<f64> = (0..n_con)
            .map(|j| opts.step_size * (m[j] / bc1) / ((v[j] / bc2).sqrt() + eps))
            .collect();

        // Back off along the Adam step if it lands in the infeasible set.
        let z_prev = state.z.clone();
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for j in 0..n_con {
                state.z[j] = z_prev[j] - scale * step[j];
            }
            state.clamp();
            match dual_eval(geom, ctx, &state.sigma()) {
                Ok(e) if e.value.is_finite() => {
                    eval = e;
                    accepted = true;
                    break;
                }
                Ok(_) => {}
                Err(Error::Infeasible { .. })
                | Err(Error::GradientUndefined { .. })
                | Err(Error::IllConditionedScales { .. }) => {}
                Err(e) => return Err(e),
            }
            scale *= 0.5;
        }
        if !accepted {
            state.z = z_prev;
            break;
        }
        iterations = t;
        if eval.value < best.0 {
            best = (eval.value, state.sigma());
        }
        grad_z = state.free_gradient(&eval.grad);
        rel_grad = norm2(&grad_z) / scale_ref.max(eval.value.abs());
    }

    // Polish from the best iterate: Adam with a fixed step oscillates near
    // the optimum and crawls along the flat directions that arise when a
    // scale wants to grow without bound, so a second phase certifies the
    // tolerance when it is reachable. Small problems get a damped Newton
    // method with a finite-difference curvature model (the analytic gradient
    // keeps the attainable precision); larger ones get spectral projected
    // gradient steps, whose step length adapts to the local curvature.
    if opts.polish {
        state.z = best.1.iter().map(|&s| s.ln()).collect();
        state.clamp();
        eval = dual_eval(geom, ctx, &state.sigma())?;
        grad_z = state.free_gradient(&eval.grad);
        rel_grad = norm2(&grad_z) / scale_ref.max(eval.value.abs());
        let newton = n_con <= NEWTON_POLISH_LIMIT;
        let mut alpha_bb = 1.0 / norm2(&grad_z).max(1.0);
        for _ in 0..opts.polish_max_iters {
            if rel_grad <= opts.grad_tol_rel {
                break;
            }
            let floor_log = SIGMA_FLOOR.ln();
            let free: Vec<usize> = (0..n_con)
                .filter(|&j| {
                    !(state.z[j] >= cap_log - 1e-12 && grad_z[j] <= 0.0)
                        && !(state.z[j] <= floor_log + 1e-12 && grad_z[j] >= 0.0)
                })
                .collect();
            if free.is_empty() {
                break;
            }
            let mut dir = vec![0.0; n_con];
            let mut slope = 0.0;
            let mut have_newton = false;
            if newton {
                if let Some(h) = fd_hessian(geom, ctx, &state, &free) {
                    if let Some(p) = damped_solve(&h, &free, &grad_z) {
                        slope = free.iter().map(|&j| grad_z[j] * p[j]).sum();
                        if slope < 0.0 {
                            dir = p;
                            have_newton = true;
                        }
                    }
                }
            }
            if !have_newton {
                // Steepest-descent fallback with a spectral step length.
                for j in 0..n_con {
                    dir[j] = -alpha_bb * grad_z[j];
                }
                slope = -alpha_bb * grad_z.iter().map(|g| g * g).sum::<f64>();
                if slope == 0.0 {
                    break;
                }
            }

            let z_prev = state.z.clone();
            let g_prev = grad_z.clone();
            let f_prev = eval.value;
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                for j in 0..n_con {
                    state.z[j] = z_prev[j] + alpha * dir[j];
                }
                state.clamp();
                match dual_eval(geom, ctx, &state.sigma()) {
                    Ok(e)
                        if e.value.is_finite()
                            && e.value <= f_prev + 1e-4 * alpha * slope =>
                    {
                        eval = e;
                        improved = true;
                        break;
                    }
                    Ok(_) => {}
                    Err(Error::Infeasible { .. })
                | Err(Error::GradientUndefined { .. })
                | Err(Error::IllConditionedScales { .. }) => {}
                    Err(e) => return Err(e),
                }
                alpha *= 0.5;
            }
            if !improved {
                state.z = z_prev;
                break;
            }
            iterations += 1;
            if eval.value < best.0 {
                best = (eval.value, state.sigma());
            }
            grad_z = state.free_gradient(&eval.grad);
            // Spectral step length for the fallback direction; grow on
            // nonpositive curvature estimates instead of collapsing.
            let (mut s_dot_s, mut s_dot_dy) = (0.0, 0.0);
            for j in 0..n_con {
                let s = state.z[j] - z_prev[j];
                let dy = grad_z[j] - g_prev[j];
                s_dot_s += s * s;
                s_dot_dy += s * dy;
            }
            if s_dot_dy > 0.0 {
                alpha_bb = (s_dot_s / s_dot_dy).clamp(1e-12, 1e12);
            } else if !have_newton {
                alpha_bb = (alpha_bb * 2.0).min(1e12);
            }
            rel_grad = norm2(&grad_z) / scale_ref.max(eval.value.abs());
        }
    }

    // Report at the best scales seen.
    let sigma_star = best.1;
    let eval = dual_eval(geom, ctx, &sigma_star)?;
    let grad_final = LogSpaceState {
        z: sigma_star.iter().map(|&s| s.ln()).collect(),
        cap_log,
    }
    .free_gradient(&eval.grad);
    let rel_final = norm2(&grad_final) / scale_ref.max(eval.value.abs());
    let at_cap = sigma_star
        .iter()
        .zip(&eval.grad)
        .any(|(&s, &g)| s >= opts.sigma_cap * (1.0 - 1e-12) && g < 0.0);
    let status = if rel_final <= opts.grad_tol_rel {
        if at_cap {
            OptimStatus::BoundaryLimit
        } else {
            OptimStatus::Converged
        }
    } else if at_cap {
        OptimStatus::BoundaryLimit
    } else {
        OptimStatus::IterationLimit
    };
    finish(geom, ctx, eval, sigma_star, iterations, status, rel_final)
}

/// Assembles the certificate, attaching the posterior at the test input.
fn finish(
    geom: &ProblemGeometry,
    ctx: &QueryContext,
    eval: DualEval,
    sigma: Vec<f64>,
    iterations: usize,
    status: OptimStatus,
    grad_norm_rel: f64,
) -> Result<BoundCertificate> {
    let fact = geom.factorize(&sigma)?;
    let (mu, covariance) = fact.posterior(&ctx.x_star)?;
    Ok(BoundCertificate {
        value: eval.value,
        sigma,
        beta: eval.beta,
        mu,
        covariance,
        mean: eval.mean,
        dir_variance: eval.dir_variance,
        grad_norm_rel,
        iterations,
        status,
    })
}

/// Ellipsoidal containment certificate at fixed scales: every consistent
/// latent value at the test input satisfies
/// `(f(x*) - mu)^T Sigma^{-1} (f(x*) - mu) <= beta^2`.
///
/// Errors with [`Error::SingularPosterior`] when the posterior covariance is
/// numerically singular; directional bounds remain available in that case.
pub fn ellipsoid_bound(
    problem: &Problem,
    x_star: &DVector<f64>,
    sigma: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let geom = ProblemGeometry::new(problem)?;
    let fact = geom.factorize(sigma)?;
    let beta = fact.beta()?;
    let (mu, covariance) = fact.posterior(x_star)?;
    let n_f = covariance.nrows();
    let trace = covariance.trace();
    if n_f > 0 && linalg::min_eigenvalue(&covariance) <= 1e-12 * trace.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularPosterior);
    }
    Ok((mu, covariance, beta))
}

/// Two-sided interval for `h^T f(x*)`: the upper bound in direction `h` and
/// the negated upper bound in `-h`.
pub fn two_sided_interval(
    problem: &Problem,
    query: &BoundQuery,
    opts: &OptimizerOptions,
) -> Result<(f64, f64, BoundCertificate, BoundCertificate)> {
    let geom = ProblemGeometry::new(problem)?;
    let upper = optimize_bound_with_geometry(&geom, query, opts)?;
    let flipped = BoundQuery {
        x_star: query.x_star.clone(),
        direction: -&query.direction,
    };
    let lower_cert = optimize_bound_with_geometry(&geom, &flipped, opts)?;
    Ok((-lower_cert.value, upper.value, upper, lower_cert))
}
