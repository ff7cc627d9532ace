//! Reproducible problem generators.
//!
//! Every generator is a pure function of its configuration and seed (ChaCha8
//! streams), so identical seeds give bit-identical problems. Each generated
//! problem carries its generating latent function and noise realization,
//! which are strictly feasible by construction — the margins are recorded so
//! containment tests can assert them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg;
use crate::noise::NoiseModel;
use crate::problem::{BoundQuery, Problem};

/// A latent function given as a kernel expansion `f = sum_i k(., c_i) a_i`
/// with exactly known RKHS norm `sqrt(a^T K_cc a)`.
#[derive(Debug, Clone)]
pub struct KernelExpansion {
    kernel: KernelSpec,
    centers: Vec<DVector<f64>>,
    /// Stacked coefficients, `n_f` entries per center.
    coeffs: DVector<f64>,
    norm: f64,
}

impl KernelExpansion {
    /// Draws standard-normal coefficients and rescales them so the RKHS norm
    /// equals `gamma_target` exactly.
    pub fn random<R: Rng>(
        kernel: &KernelSpec,
        gamma_target: f64,
        centers: &[DVector<f64>],
        rng: &mut R,
    ) -> Result<Self> {
        if gamma_target <= 0.0 || !gamma_target.is_finite() {
            return Err(Error::NonPositiveParameter {
                context: "gamma_target",
                value: gamma_target,
            });
        }
        if centers.is_empty() {
            return Err(Error::InvalidProblem {
                reason: "kernel expansion needs at least one center".into(),
            });
        }
        kernel.validate()?;
        let n_f = kernel.n_f();
        let m = centers.len();
        let dim = m * n_f;
        let mut k_cc = DMatrix::zeros(dim, dim);
        for i in 0..m {
            for j in 0..m {
                let block = kernel.eval(&centers[i], &centers[j])?;
                for a in 0..n_f {
                    for b in 0..n_f {
                        k_cc[(i * n_f + a, j * n_f + b)] = block[(a, b)];
                    }
                }
            }
        }
        let mut coeffs = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let quad = (coeffs.transpose() * &k_cc * &coeffs)[(0, 0)];
        let scale = k_cc.trace().max(f64::MIN_POSITIVE);
        if quad <= 1e-12 * scale * coeffs.norm_squared() {
            return Err(Error::InvalidProblem {
                reason: "expansion Gram numerically singular at the drawn coefficients".into(),
            });
        }
        coeffs *= gamma_target / quad.sqrt();
        Ok(KernelExpansion {
            kernel: kernel.clone(),
            centers: centers.to_vec(),
            coeffs,
            norm: gamma_target,
        })
    }

    /// Function value at an input (length `n_f`).
    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n_f = self.kernel.n_f();
        let mut out = DVector::zeros(n_f);
        for (i, c) in self.centers.iter().enumerate() {
            let block = self.kernel.eval(x, c)?;
            let alpha = self.coeffs.rows(i * n_f, n_f);
            out += block * alpha;
        }
        Ok(out)
    }

    /// Exact RKHS norm (set at construction).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Recomputes `sqrt(a^T K_cc a)` from scratch, for validation.
    pub fn recompute_norm(&self) -> Result<f64> {
        let n_f = self.kernel.n_f();
        let m = self.centers.len();
        let mut quad = 0.0;
        for i in 0..m {
            for j in 0..m {
                let block = self.kernel.eval(&self.centers[i], &self.centers[j])?;
                let ai = self.coeffs.rows(i * n_f, n_f);
                let aj = self.coeffs.rows(j * n_f, n_f);
                quad += (ai.transpose() * block * aj)[(0, 0)];
            }
        }
        Ok(quad.max(0.0).sqrt())
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }
}

/// Seeded convenience wrapper around [`KernelExpansion::random`].
pub fn random_rkhs_function(
    kernel: &KernelSpec,
    gamma_target: f64,
    centers: &[DVector<f64>],
    seed: u64,
) -> Result<KernelExpansion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    KernelExpansion::random(kernel, gamma_target, centers, &mut rng)
}

/// A generated problem together with its generating latent function and
/// noise realization (strictly feasible witnesses).
#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub problem: Problem,
    pub truth: KernelExpansion,
    pub noise_realization: DVector<f64>,
    /// Strict-feasibility margin of the generating pair: min over the norm
    /// budget slack and every noise constraint slack, as relative fractions.
    pub margin: f64,
}

fn feasibility_margin(problem: &Problem, truth: &KernelExpansion, w: &DVector<f64>) -> f64 {
    let norm_margin = 1.0 - (truth.norm() / problem.gamma_f).powi(2);
    if problem.n() == 0 {
        return norm_margin;
    }
    norm_margin.min(problem.noise.margin(w))
}

fn assemble_generated(
    kernel: KernelSpec,
    inputs: Vec<DVector<f64>>,
    measurements: Vec<DVector<f64>>,
    noise_model: NoiseModel,
    gamma_f: f64,
    truth: KernelExpansion,
    w: DVector<f64>,
) -> Result<GeneratedProblem> {
    let mut y = DVector::zeros(inputs.len());
    for i in 0..inputs.len() {
        let latent = truth.eval(&inputs[i])?;
        y[i] = measurements[i].dot(&latent) + w[i];
    }
    let problem = Problem::new(kernel, inputs, measurements, y, noise_model, gamma_f)?;
    let margin = feasibility_margin(&problem, &truth, &w);
    Ok(GeneratedProblem {
        problem,
        truth,
        noise_realization: w,
        margin,
    })
}

// ============================================================================
// Illustrative scenario
// ============================================================================

/// The two-point illustrative scenario plus its evaluation grid.
#[derive(Debug, Clone)]
pub struct IllustrativeScenario {
    pub generated: GeneratedProblem,
    /// Test grid over `[-3, 3]`, containing the anchor exactly.
    pub grid: Vec<f64>,
    /// Index of the anchor test point `x* = 1.5` in the grid.
    pub anchor_index: usize,
}

/// Anchor test input of the illustrative scenario.
pub const ILLUSTRATIVE_ANCHOR: f64 = 1.5;

/// Scalar squared-exponential problem with two measurements, unit norm
/// budget and pointwise noise bounds `0.2`, plus a 201-point test grid.
pub fn gen_illustrative(seed: u64) -> Result<IllustrativeScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = KernelSpec::default_se();
    let gamma_f = 1.0;
    let gamma_w = 0.2;

    let centers: Vec<DVector<f64>> = (0..5)
        .map(|_| DVector::from_element(1, rng.gen_range(-3.0..3.0)))
        .collect();
    let truth = KernelExpansion::random(&kernel, 0.9 * gamma_f, &centers, &mut rng)?;

    let inputs: Vec<DVector<f64>> = (0..2)
        .map(|_| DVector::from_element(1, rng.gen_range(-2.0..2.0)))
        .collect();
    let measurements = vec![DVector::from_element(1, 1.0); 2];
    let w = DVector::from_fn(2, |_, _| 0.95 * rng.gen_range(-gamma_w..gamma_w));
    let noise_model = NoiseModel::pointwise(&[gamma_w, gamma_w])?;

    let generated =
        assemble_generated(kernel, inputs, measurements, noise_model, gamma_f, truth, w)?;

    // 201 points over [-3, 3]; index 150 lands exactly on the anchor.
    let grid: Vec<f64> = (0..=200).map(|k| -3.0 + 6.0 * k as f64 / 200.0).collect();
    let anchor_index = 150;
    debug_assert_eq!(grid[anchor_index], ILLUSTRATIVE_ANCHOR);
    Ok(IllustrativeScenario {
        generated,
        grid,
        anchor_index,
    })
}

// ============================================================================
// Quadrotor scenario
// ============================================================================

/// Configuration of the quadrotor residual-acceleration scenario.
#[derive(Debug, Clone)]
pub struct QuadrotorConfig {
    /// Number of tilt angles; each contributes one x- and one z-measurement.
    pub n_data: usize,
    /// Wind ellipsoid semi-axes in the global frame.
    pub a_wind: f64,
    pub b_wind: f64,
    pub lengthscale: f64,
    pub period: f64,
    pub gamma_f: f64,
    /// RKHS norm of the generated latent function (strictly below
    /// `gamma_f`).
    pub gamma_target: f64,
    pub seed: u64,
}

impl Default for QuadrotorConfig {
    fn default() -> Self {
        QuadrotorConfig {
            n_data: 10,
            a_wind: 0.3,
            b_wind: 0.1,
            lengthscale: 1.0,
            period: 2.0 * std::f64::consts::PI,
            gamma_f: 1.0,
            gamma_target: 0.9,
            seed: 0,
        }
    }
}

/// Two-output periodic regression of residual accelerations over the tilt
/// angle, with one rotated wind-ellipsoid constraint per tilt angle.
///
/// Each tilt angle `t_j` contributes measurements of both output components
/// (`c = e_1` then `c = e_2`), and the noise pair `(w_{2j}, w_{2j+1})` is
/// constrained to the global wind ellipsoid expressed in the rotated frame:
/// `P_j = Q(t_j)^T diag(a^{-2}, b^{-2}) Q(t_j)` with `Q` the rotation by
/// `t_j`, embedded on rows `{2j, 2j+1}` and bounded by `gamma_j = 1`.
pub fn gen_quadrotor(config: &QuadrotorConfig) -> Result<GeneratedProblem> {
    if config.n_data == 0 {
        return Err(Error::InvalidProblem {
            reason: "quadrotor scenario needs at least one tilt angle".into(),
        });
    }
    for (value, context) in [
        (config.a_wind, "a_wind"),
        (config.b_wind, "b_wind"),
        (config.gamma_target, "gamma_target"),
    ] {
        if value <= 0.0 || !value.is_finite() {
            return Err(Error::NonPositiveParameter { context, value });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let kernel = KernelSpec::Diagonal {
        components: vec![
            KernelSpec::Periodic {
                lengthscale: config.lengthscale,
                period: config.period,
            },
            KernelSpec::Periodic {
                lengthscale: config.lengthscale,
                period: config.period,
            },
        ],
    };
    kernel.validate()?;
    let two_pi = 2.0 * std::f64::consts::PI;

    let n_centers = 8.max(config.n_data / 4);
    let centers: Vec<DVector<f64>> = (0..n_centers)
        .map(|_| DVector::from_element(1, rng.gen_range(0.0..two_pi)))
        .collect();
    let truth = KernelExpansion::random(
        &kernel,
        config.gamma_target * config.gamma_f,
        &centers,
        &mut rng,
    )?;

    let n = 2 * config.n_data;
    let mut inputs = Vec::with_capacity(n);
    let mut measurements = Vec::with_capacity(n);
    let mut w = DVector::zeros(n);
    let mut parts = Vec::with_capacity(config.n_data);
    let d = DMatrix::from_row_slice(
        2,
        2,
        &[
            1.0 / (config.a_wind * config.a_wind),
            0.0,
            0.0,
            1.0 / (config.b_wind * config.b_wind),
        ],
    );
    for j in 0..config.n_data {
        let tilt = rng.gen_range(0.0..two_pi);
        let x = DVector::from_element(1, tilt);
        inputs.push(x.clone());
        inputs.push(x);
        measurements.push(DVector::from_row_slice(&[1.0, 0.0]));
        measurements.push(DVector::from_row_slice(&[0.0, 1.0]));

        let (s, c) = tilt.sin_cos();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let p_block = q.transpose() * &d * &q;
        let mut p = DMatrix::zeros(n, n);
        for a in 0..2 {
            for b in 0..2 {
                p[(2 * j + a, 2 * j + b)] = p_block[(a, b)];
            }
        }
        parts.push((p, 1.0));

        // Wind draw strictly inside the ellipsoid: uniform direction in the
        // unit disc, scaled by the semi-axes and rotated into the frame the
        // constraint acts on.
        let (u1, u2) = loop {
            let u1: f64 = rng.gen_range(-1.0..1.0);
            let u2: f64 = rng.gen_range(-1.0..1.0);
            if u1 * u1 + u2 * u2 < 1.0 {
                break (u1, u2);
            }
        };
        let scaled = DVector::from_row_slice(&[
            0.95 * config.a_wind * u1,
            0.95 * config.b_wind * u2,
        ]);
        let pair = q.transpose() * scaled;
        w[2 * j] = pair[0];
        w[2 * j + 1] = pair[1];
    }
    let noise_model = NoiseModel::general(n, parts)?;
    assemble_generated(
        kernel,
        inputs,
        measurements,
        noise_model,
        config.gamma_f,
        truth,
        w,
    )
}

/// Replaces the noise model by the smallest uniform pointwise box containing
/// it (`|w_i| <= gamma_bar` with `gamma_bar` from the support function of the
/// constraint set along coordinates). The relaxed problem's feasible set
/// contains the original one, so its bounds remain valid but weaker.
pub fn pointwise_relaxation(problem: &Problem) -> Result<Problem> {
    let gamma_bar = problem
        .noise
        .uniform_pointwise_bound()
        .ok_or(Error::InvalidProblem {
            reason: "noise model admits no finite pointwise bound".into(),
        })?;
    if problem.n() == 0 {
        return Ok(problem.clone());
    }
    Problem::new(
        problem.kernel.clone(),
        problem.inputs.clone(),
        problem.measurements.clone(),
        problem.y.clone(),
        NoiseModel::pointwise(&vec![gamma_bar; problem.n()])?,
        problem.gamma_f,
    )
}

// ============================================================================
// Random small instances for validation suites
// ============================================================================

/// A random small problem plus one query, as used by the validation suites.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub generated: GeneratedProblem,
    pub query: BoundQuery,
}

/// Generates a random feasible instance with `N <= 8`, at most 4 noise
/// constraints, and at most 2 outputs, cycling through pointwise, energy,
/// and general noise shapes by seed.
pub fn random_small_problem(seed: u64) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(seed));
    let n_f = if rng.gen_bool(0.35) { 2 } else { 1 };
    let n_x = if rng.gen_bool(0.3) { 2 } else { 1 };
    let kernel = if n_f == 2 {
        KernelSpec::Diagonal {
            components: vec![
                KernelSpec::SquaredExponential {
                    lengthscale: rng.gen_range(0.7..1.5),
                },
                KernelSpec::Periodic {
                    lengthscale: rng.gen_range(0.8..1.4),
                    period: 2.0 * std::f64::consts::PI,
                },
            ],
        }
    } else {
        match rng.gen_range(0..3u32) {
            0 => KernelSpec::SquaredExponential {
                lengthscale: rng.gen_range(0.7..1.6),
            },
            1 => KernelSpec::Periodic {
                lengthscale: rng.gen_range(0.8..1.5),
                period: 2.0 * std::f64::consts::PI,
            },
            _ => KernelSpec::Monomials { degree: 2 },
        }
    };
    let gamma_f = rng.gen_range(0.5..2.0);

    // Noise shape first: it constrains how many measurements fit under the
    // constraint-count budget.
    let shape = rng.gen_range(0..3u32);
    let n = match shape {
        0 => rng.gen_range(1..=4usize), // pointwise: one constraint each
        _ => rng.gen_range(2..=8usize),
    };

    let draw_input = |rng: &mut ChaCha8Rng| {
        DVector::from_fn(n_x, |_, _| rng.gen_range(-2.0..2.0))
    };
    let inputs: Vec<DVector<f64>> = (0..n).map(|_| draw_input(&mut rng)).collect();
    let measurements: Vec<DVector<f64>> = (0..n)
        .map(|_| loop {
            let c = DVector::from_fn(n_f, |_, _| rng.gen_range(-1.5..1.5));
            if c.norm() > 0.3 {
                break c;
            }
        })
        .collect();

    let centers: Vec<DVector<f64>> = (0..5).map(|_| draw_input(&mut rng)).collect();
    let truth = KernelExpansion::random(&kernel, 0.9 * gamma_f, &centers, &mut rng)?;

    let (noise_model, w) = match shape {
        0 => {
            let bounds: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.3)).collect();
            let w = DVector::from_fn(n, |i, _| 0.9 * rng.gen_range(-bounds[i]..bounds[i]));
            (NoiseModel::pointwise(&bounds)?, w)
        }
        1 => {
            // Energy: random PD matrix with bounded condition number.
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            let p = &m * m.transpose() + DMatrix::identity(n, n) * 0.2;
            let gamma = rng.gen_range(0.2..0.8);
            // Uniform in the ellipsoid: unit ball mapped through P^{-1/2}.
            let ball = {
                let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let radius: f64 = rng.gen_range(0.0..1.0f64);
                v *= radius.powf(1.0 / n as f64) / v.norm().max(1e-300);
                v
            };
            let (values, vectors) = linalg::symmetric_eigen_sorted(&p);
            let mut w = DVector::zeros(n);
            for k in 0..n {
                let dir = vectors.column(k);
                w += (gamma * 0.95 * ball.dot(&dir.clone_owned()) / values[k].sqrt())
                    * dir.clone_owned();
            }
            (NoiseModel::energy(p, gamma)?, w)
        }
        _ => {
            // General: partition the measurements into 2..4 groups, each
            // covered by a full-rank block, so the sum is positive definite.
            let n_con = rng.gen_range(2..=4usize.min(n));
            let mut groups = vec![Vec::new(); n_con];
            for i in 0..n {
                groups[i % n_con].push(i);
            }
            let mut parts = Vec::with_capacity(n_con);
            for group in &groups {
                let k = group.len();
                let m = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0f64));
                let block = &m * m.transpose() + DMatrix::identity(k, k) * 0.3;
                let mut p = DMatrix::zeros(n, n);
                for (a, &i) in group.iter().enumerate() {
                    for (b, &j) in group.iter().enumerate() {
                        p[(i, j)] = block[(a, b)];
                    }
                }
                parts.push((p, rng.gen_range(0.2..0.6)));
            }
            let model = NoiseModel::general(n, parts)?;
            // Scale a random direction until every constraint is slack.
            let dir = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let worst = model
                .constraints()
                .iter()
                .map(|c| c.quad(&dir).sqrt() / c.gamma())
                .fold(0.0f64, f64::max);
            let w = if worst > 0.0 { dir * (0.9 / worst) } else { dir * 0.0 };
            (model, w)
        }
    };

    let generated = assemble_generated(
        kernel,
        inputs,
        measurements,
        noise_model,
        gamma_f,
        truth,
        w,
    )?;
    let x_star = draw_input(&mut rng);
    let direction = loop {
        let h = DVector::from_fn(n_f, |_, _| rng.gen_range(-1.0..1.0));
        if h.norm() > 0.3 {
            break h;
        }
    };
    Ok(RandomInstance {
        generated,
        query: BoundQuery::new(x_star, direction),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expansion_norm_is_exact_by_construction() {
        let kernel = KernelSpec::default_se();
        let centers: Vec<DVector<f64>> = [-1.0, 0.3, 1.7]
            .iter()
            .map(|&x| DVector::from_element(1, x))
            .collect();
        let f = random_rkhs_function(&kernel, 0.8, &centers, 42).unwrap();
        assert_relative_eq!(f.recompute_norm().unwrap(), 0.8, max_relative = 1e-12);
    }

    #[test]
    fn single_center_expansion_is_scaled_kernel_slice() {
        let kernel = KernelSpec::default_se();
        let c = DVector::from_element(1, 0.5);
        let f = random_rkhs_function(&kernel, 0.6, &[c.clone()], 3).unwrap();
        // One center: f = a k(., c) with a^2 k(c,c) = gamma^2, k(c,c) = 1.
        let a = f.coefficients()[0];
        assert_relative_eq!(a.abs(), 0.6, max_relative = 1e-12);
        let x = DVector::from_element(1, 1.3);
        let expected = a * kernel.eval(&x, &c).unwrap()[(0, 0)];
        assert_relative_eq!(f.eval(&x).unwrap()[0], expected, max_relative = 1e-12);
    }

    #[test]
    fn illustrative_scenario_matches_its_contract() {
        let sc = gen_illustrative(11).unwrap();
        let p = &sc.generated.problem;
        assert_eq!(p.n(), 2);
        assert_eq!(p.n_f(), 1);
        assert_eq!(p.n_con(), 2);
        assert_eq!(p.gamma_f, 1.0);
        for j in 0..2 {
            assert_relative_eq!(p.noise.gamma(j), 0.2, max_relative = 1e-15);
        }
        assert!(sc.generated.margin > 0.0, "generating pair strictly feasible");
        assert_eq!(sc.grid.len(), 201);
        assert_eq!(sc.grid[sc.anchor_index], ILLUSTRATIVE_ANCHOR);
    }

    #[test]
    fn quadrotor_block_structure_and_feasibility() {
        let config = QuadrotorConfig {
            n_data: 6,
            seed: 5,
            ..QuadrotorConfig::default()
        };
        let gen = gen_quadrotor(&config).unwrap();
        let p = &gen.problem;
        assert_eq!(p.n(), 12, "two measurements per tilt angle");
        assert_eq!(p.n_con(), 6, "one constraint per tilt angle");
        assert_eq!(p.n_f(), 2);
        for (j, c) in p.noise.constraints().iter().enumerate() {
            assert_eq!(c.support(), &[2 * j, 2 * j + 1]);
            // Rotated ellipsoid blocks have eigenvalues 1/a^2 and 1/b^2.
            let eigs = linalg::symmetric_eigen_sorted(c.block()).0;
            assert_relative_eq!(eigs[0], 1.0 / (0.1f64 * 0.1), max_relative = 1e-10);
            assert_relative_eq!(eigs[1], 1.0 / (0.3f64 * 0.3), max_relative = 1e-10);
        }
        assert!(gen.margin > 0.0);
        // Measurement directions alternate between the two outputs.
        assert_eq!(p.measurements[0], DVector::from_row_slice(&[1.0, 0.0]));
        assert_eq!(p.measurements[1], DVector::from_row_slice(&[0.0, 1.0]));
    }

    #[test]
    fn quadrotor_pointwise_bound_is_larger_semi_axis() {
        let gen = gen_quadrotor(&QuadrotorConfig {
            n_data: 4,
            seed: 9,
            ..QuadrotorConfig::default()
        })
        .unwrap();
        let relaxed = pointwise_relaxation(&gen.problem).unwrap();
        let bound = relaxed.noise.as_uniform_pointwise().unwrap();
        assert_relative_eq!(bound, 0.3, max_relative = 1e-9);
        // The box contains the ellipsoid: the generating noise stays valid.
        assert!(relaxed.noise.margin(&gen.noise_realization) > 0.0);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_quadrotor(&QuadrotorConfig {
            n_data: 5,
            seed: 123,
            ..QuadrotorConfig::default()
        })
        .unwrap();
        let b = gen_quadrotor(&QuadrotorConfig {
            n_data: 5,
            seed: 123,
            ..QuadrotorConfig::default()
        })
        .unwrap();
        assert_eq!(a.problem.y, b.problem.y, "same seed, same data");
        let c = gen_quadrotor(&QuadrotorConfig {
            n_data: 5,
            seed: 124,
            ..QuadrotorConfig::default()
        })
        .unwrap();
        assert_ne!(a.problem.y, c.problem.y, "different seed, different data");
    }

    #[test]
    fn random_small_instances_are_feasible_across_shapes() {
        for seed in 0..30 {
            let inst = random_small_problem(seed).unwrap();
            let p = &inst.generated.problem;
            assert!(p.n() >= 1 && p.n() <= 8);
            assert!(p.n_con() <= p.n().max(4));
            assert!(p.n_f() <= 2);
            assert!(
                inst.generated.margin > 0.0,
                "seed {seed}: generating pair must be strictly feasible"
            );
        }
    }
}
