//! Method registry shared by the `bound` subcommand and the benchmark.
//!
//! Methods tagged `-e` run on the problem as stated (ellipsoidal noise
//! allowed); methods tagged `-p` run on the pointwise variant: the noise set
//! is replaced by the smallest uniform box containing it, and for
//! multi-output problems with axis-aligned measurements only the rows of the
//! queried coordinate are kept (halving `N` in the two-output case). Both
//! steps relax the feasible set, so `-p` values remain valid upper bounds for
//! the original problem.

use nalgebra::DVector;

use rkhs_bounds::baselines::{
    fixed_sigma_bound, reed_bound, scharnhorst_alternating, AlternatingOptions, Envelope,
    FixedSigmaVariant,
};
use rkhs_bounds::dual::{optimize_bound, OptimStatus, OptimizerOptions};
use rkhs_bounds::oracle::{solve_primal, FeatureWorkspace, PrimalOptions};
use rkhs_bounds::{Error, KernelSpec, NoiseModel, Problem, Result};

use rkhs_bounds::BoundQuery;

/// Identifier of a bound method, matching the CLI / benchmark-config names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodTag {
    /// Fully optimized certificate (gradient descent plus polish).
    Optimal,
    /// Primal reference on the stated (ellipsoidal) problem.
    OracleE,
    /// Primal reference on the pointwise variant.
    OracleP,
    /// Norm-ball relaxation minimized by the alternating algorithm.
    AlternatingP,
    /// Split interpolation/noise bound.
    ReedP,
    /// Fixed-budget gradient descent on the stated problem.
    DualGdE,
    /// Fixed-budget gradient descent on the pointwise variant.
    DualGdP,
    /// Fixed-scale certificate at `sigma_bar = gamma_bar`.
    FixedHashimoto,
    /// Fixed-scale certificate at `sigma_bar = sqrt(N) * gamma_bar`.
    FixedYang,
}

pub const BENCHMARK_TAGS: [MethodTag; 8] = [
    MethodTag::OracleE,
    MethodTag::OracleP,
    MethodTag::AlternatingP,
    MethodTag::ReedP,
    MethodTag::DualGdE,
    MethodTag::DualGdP,
    MethodTag::FixedHashimoto,
    MethodTag::FixedYang,
];

impl MethodTag {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => MethodTag::Optimal,
            "oracle-e" => MethodTag::OracleE,
            "oracle-p" => MethodTag::OracleP,
            "alternating-p" => MethodTag::AlternatingP,
            "reed-p" => MethodTag::ReedP,
            "dualgd-e" => MethodTag::DualGdE,
            "dualgd-p" => MethodTag::DualGdP,
            "fixed-hashimoto" => MethodTag::FixedHashimoto,
            "fixed-yang" => MethodTag::FixedYang,
            _ => return None,
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            MethodTag::Optimal => "optimal",
            MethodTag::OracleE => "oracle-e",
            MethodTag::OracleP => "oracle-p",
            MethodTag::AlternatingP => "alternating-p",
            MethodTag::ReedP => "reed-p",
            MethodTag::DualGdE => "dualgd-e",
            MethodTag::DualGdP => "dualgd-p",
            MethodTag::FixedHashimoto => "fixed-hashimoto",
            MethodTag::FixedYang => "fixed-yang",
        }
    }

    /// Method family without the noise-assumption suffix (CSV column).
    pub fn family(&self) -> &'static str {
        match self {
            MethodTag::Optimal => "optimal",
            MethodTag::OracleE | MethodTag::OracleP => "oracle",
            MethodTag::AlternatingP => "alternating",
            MethodTag::ReedP => "reed",
            MethodTag::DualGdE | MethodTag::DualGdP => "dualgd",
            MethodTag::FixedHashimoto => "fixed-hashimoto",
            MethodTag::FixedYang => "fixed-yang",
        }
    }

    /// Noise-assumption tag: `e` for the stated set, `p` for the uniform box.
    pub fn noise_tag(&self) -> &'static str {
        if self.uses_pointwise_variant() {
            "p"
        } else {
            "e"
        }
    }

    pub fn uses_pointwise_variant(&self) -> bool {
        matches!(
            self,
            MethodTag::OracleP
                | MethodTag::AlternatingP
                | MethodTag::ReedP
                | MethodTag::DualGdP
                | MethodTag::FixedHashimoto
                | MethodTag::FixedYang
        )
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

// ============================================================================
// Pointwise variant
// ============================================================================

/// The pointwise-converted problems used by `-p` methods: one scalar problem
/// per output coordinate, all sharing the uniform box bound `gamma_bar`.
#[derive(Debug, Clone)]
pub struct PointwiseVariant {
    pub per_coordinate: Vec<Problem>,
    pub gamma_bar: f64,
}

/// Position and value of the single nonzero entry of an axis-aligned vector.
pub fn coordinate_of(direction: &DVector<f64>) -> Result<(usize, f64)> {
    let mut found = None;
    for (i, &v) in direction.iter().enumerate() {
        if v != 0.0 {
            if found.is_some() {
                return Err(Error::InvalidProblem {
                    reason: "pointwise-variant methods need an axis-aligned direction".into(),
                });
            }
            found = Some((i, v));
        }
    }
    found.ok_or(Error::InvalidProblem {
        reason: "query direction must be nonzero".into(),
    })
}

/// Builds the pointwise variant of a problem.
///
/// Scalar problems keep all measurements and only swap the noise set for the
/// uniform box. Multi-output problems additionally need a diagonal kernel and
/// axis-aligned measurement directions; the variant for coordinate `a` keeps
/// only the rows measuring output `a`, as a scalar problem under that
/// output's kernel component.
pub fn pointwise_variant(problem: &Problem) -> Result<PointwiseVariant> {
    let gamma_bar = problem
        .noise
        .uniform_pointwise_bound()
        .ok_or(Error::InvalidProblem {
            reason: "noise model admits no finite uniform pointwise bound".into(),
        })?;
    let n_f = problem.n_f();
    if n_f == 1 {
        let converted = Problem::new(
            problem.kernel.clone(),
            problem.inputs.clone(),
            problem.measurements.clone(),
            problem.y.clone(),
            NoiseModel::pointwise(&vec![gamma_bar; problem.n()])?,
            problem.gamma_f,
        )?;
        return Ok(PointwiseVariant {
            per_coordinate: vec![converted],
            gamma_bar,
        });
    }

    let components = match &problem.kernel {
        KernelSpec::Diagonal { components } => components.clone(),
        _ => {
            return Err(Error::InvalidProblem {
                reason: "pointwise variant of a multi-output problem needs a diagonal kernel"
                    .into(),
            })
        }
    };
    let axes: Vec<(usize, f64)> = problem
        .measurements
        .iter()
        .map(|c| coordinate_of(c))
        .collect::<Result<_>>()
        .map_err(|_| Error::InvalidProblem {
            reason: "pointwise variant needs axis-aligned measurement directions".into(),
        })?;

    let mut per_coordinate = Vec::with_capacity(n_f);
    for (a, kernel) in components.into_iter().enumerate() {
        let mut inputs = Vec::new();
        let mut measurements = Vec::new();
        let mut y = Vec::new();
        for (i, &(axis, scale)) in axes.iter().enumerate() {
            if axis == a {
                inputs.push(problem.inputs[i].clone());
                measurements.push(DVector::from_element(1, scale));
                y.push(problem.y[i]);
            }
        }
        let n_kept = inputs.len();
        per_coordinate.push(Problem::new(
            kernel,
            inputs,
            measurements,
            DVector::from_vec(y),
            NoiseModel::pointwise(&vec![gamma_bar; n_kept])?,
            problem.gamma_f,
        )?);
    }
    Ok(PointwiseVariant {
        per_coordinate,
        gamma_bar,
    })
}

// ============================================================================
// Method evaluation
// ============================================================================

/// Solver settings shared across method calls.
#[derive(Debug, Clone)]
pub struct MethodSettings {
    pub oracle: PrimalOptions,
    /// Fixed-budget options for the `dualgd-*` rows.
    pub dualgd: OptimizerOptions,
    pub alternating: AlternatingOptions,
    /// Scale of the split bound; defaults to `gamma_bar`.
    pub reed_sigma_bar: Option<f64>,
    /// Gram truncation used by the oracle workspaces.
    pub rank_tol: f64,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            oracle: PrimalOptions::default(),
            dualgd: OptimizerOptions::fixed_budget(),
            alternating: AlternatingOptions::default(),
            reed_sigma_bar: None,
            rank_tol: 1e-10,
        }
    }
}

/// Outcome of one method call: the bound value plus whatever diagnostics the
/// method produces.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub value: f64,
    /// False when an iterative method exhausted its budget before meeting
    /// its own stopping rule. Fixed-budget and closed-form methods always
    /// report true.
    pub converged: bool,
    pub iterations: Option<usize>,
    pub sigma: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub mean: Option<f64>,
    pub dir_variance: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub status: String,
}

impl MethodOutcome {
    fn bare(value: f64, status: String) -> Self {
        MethodOutcome {
            value,
            converged: true,
            iterations: None,
            sigma: None,
            beta: None,
            mean: None,
            dir_variance: None,
            lower: None,
            upper: None,
            status,
        }
    }
}

/// Upper bound that holds with no data: `gamma_f * sqrt(h^T k(x*,x*) h)`.
pub fn prior_bound(problem: &Problem, query: &BoundQuery) -> Result<f64> {
    let k = problem.kernel.eval(&query.x_star, &query.x_star)?;
    let quad = (query.direction.transpose() * k * &query.direction)[(0, 0)];
    Ok(problem.gamma_f * quad.max(0.0).sqrt())
}

fn envelope_value(env: &Envelope, t: f64) -> f64 {
    // h = t e_a: for t > 0 the upper edge bounds t f_a, for t < 0 the lower
    // edge does.
    if t >= 0.0 {
        t * env.upper
    } else {
        t * env.lower
    }
}

fn pointwise_query<'a>(
    pointwise: Option<&'a PointwiseVariant>,
    query: &BoundQuery,
    method: &'static str,
) -> Result<(&'a Problem, f64)> {
    let pv = pointwise.ok_or(Error::RequiresPointwiseNoise { method })?;
    let (coord, t) = coordinate_of(&query.direction)?;
    if coord >= pv.per_coordinate.len() {
        return Err(Error::DimensionMismatch {
            context: "query direction",
            expected: pv.per_coordinate.len(),
            got: coord + 1,
        });
    }
    Ok((&pv.per_coordinate[coord], t))
}

/// Evaluates one method on one query.
///
/// `alternating_target` is the absolute objective value at which the
/// alternating method stops (run-to-target protocol); `None` runs it to its
/// decrease tolerance.
pub fn run_method(
    tag: MethodTag,
    problem: &Problem,
    pointwise: Option<&PointwiseVariant>,
    query: &BoundQuery,
    settings: &MethodSettings,
    alternating_target: Option<f64>,
) -> Result<MethodOutcome> {
    match tag {
        MethodTag::Optimal => {
            let cert = optimize_bound(problem, query, &OptimizerOptions::default())?;
            Ok(MethodOutcome {
                value: cert.value,
                converged: cert.status != OptimStatus::IterationLimit,
                iterations: Some(cert.iterations),
                sigma: Some(cert.sigma.clone()),
                beta: Some(cert.beta),
                mean: Some(cert.mean),
                dir_variance: Some(cert.dir_variance),
                lower: None,
                upper: None,
                status: format!("{} (relative gradient {:.3e})", cert.status, cert.grad_norm_rel),
            })
        }
        MethodTag::OracleE => oracle_outcome(problem, query, settings),
        MethodTag::OracleP => {
            let (reduced, t) = pointwise_query(pointwise, query, "oracle-p")?;
            let scalar = BoundQuery::new(query.x_star.clone(), DVector::from_element(1, t));
            oracle_outcome(reduced, &scalar, settings)
        }
        MethodTag::AlternatingP => {
            let (reduced, t) = pointwise_query(pointwise, query, "alternating-p")?;
            let scalar = BoundQuery::new(query.x_star.clone(), DVector::from_element(1, t));
            let opts = AlternatingOptions {
                target: alternating_target,
                ..settings.alternating.clone()
            };
            let result = scharnhorst_alternating(reduced, &scalar, &opts)?;
            Ok(MethodOutcome {
                value: result.value,
                converged: result.converged,
                iterations: Some(result.iterations),
                sigma: None,
                beta: None,
                mean: None,
                dir_variance: None,
                lower: None,
                upper: None,
                status: if result.converged {
                    "stopping rule met".into()
                } else {
                    "iteration budget exhausted".into()
                },
            })
        }
        MethodTag::ReedP => {
            let (reduced, t) = pointwise_query(pointwise, query, "reed-p")?;
            let gamma_bar = pointwise.expect("checked above").gamma_bar;
            let sigma_bar = settings.reed_sigma_bar.unwrap_or(gamma_bar);
            let env = reed_bound(reduced, &query.x_star, sigma_bar)?;
            let mut out = MethodOutcome::bare(
                envelope_value(&env, t),
                format!("split bound at sigma_bar = {sigma_bar}"),
            );
            out.lower = Some(env.lower);
            out.upper = Some(env.upper);
            Ok(out)
        }
        MethodTag::DualGdE => dualgd_outcome(problem, query, settings),
        MethodTag::DualGdP => {
            let (reduced, t) = pointwise_query(pointwise, query, "dualgd-p")?;
            let scalar = BoundQuery::new(query.x_star.clone(), DVector::from_element(1, t));
            dualgd_outcome(reduced, &scalar, settings)
        }
        MethodTag::FixedHashimoto | MethodTag::FixedYang => {
            let method = tag.id();
            let (reduced, t) = pointwise_query(pointwise, query, method)?;
            let variant = if tag == MethodTag::FixedHashimoto {
                FixedSigmaVariant::Hashimoto
            } else {
                FixedSigmaVariant::Yang
            };
            let env = fixed_sigma_bound(reduced, &query.x_star, variant)?;
            let mut out = MethodOutcome::bare(
                envelope_value(&env, t),
                format!("fixed scale sigma_bar = {}", env.sigma_bar),
            );
            out.lower = Some(env.lower);
            out.upper = Some(env.upper);
            Ok(out)
        }
    }
}

fn oracle_outcome(
    problem: &Problem,
    query: &BoundQuery,
    settings: &MethodSettings,
) -> Result<MethodOutcome> {
    let ws = FeatureWorkspace::new(problem, &query.x_star, settings.rank_tol)?;
    let sol = solve_primal(&ws, &query.direction, &settings.oracle)?;
    Ok(MethodOutcome {
        value: sol.value,
        converged: sol.converged,
        iterations: Some(sol.iterations),
        sigma: None,
        beta: None,
        mean: None,
        dir_variance: None,
        lower: None,
        upper: None,
        status: format!("KKT residual {:.3e}", sol.kkt_residual),
    })
}

fn dualgd_outcome(
    problem: &Problem,
    query: &BoundQuery,
    settings: &MethodSettings,
) -> Result<MethodOutcome> {
    let cert = optimize_bound(problem, query, &settings.dualgd)?;
    Ok(MethodOutcome {
        value: cert.value,
        // Fixed-budget protocol: completing the budget is the contract, so
        // hitting the iteration limit is not a failure here.
        converged: true,
        iterations: Some(cert.iterations),
        sigma: Some(cert.sigma.clone()),
        beta: Some(cert.beta),
        mean: Some(cert.mean),
        dir_variance: Some(cert.dir_variance),
        lower: None,
        upper: None,
        status: format!("{} after fixed budget", cert.status),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rkhs_bounds::scenarios::{gen_quadrotor, QuadrotorConfig};

    fn quad_problem() -> Problem {
        gen_quadrotor(&QuadrotorConfig {
            n_data: 5,
            seed: 3,
            ..QuadrotorConfig::default()
        })
        .unwrap()
        .problem
    }

    #[test]
    fn tags_round_trip_through_names() {
        for tag in BENCHMARK_TAGS {
            assert_eq!(MethodTag::parse(tag.id()), Some(tag));
        }
        assert_eq!(MethodTag::parse("optimal"), Some(MethodTag::Optimal));
        assert_eq!(MethodTag::parse("nope"), None);
    }

    #[test]
    fn pointwise_variant_splits_the_quadrotor_problem() {
        let problem = quad_problem();
        let pv = pointwise_variant(&problem).unwrap();
        assert_eq!(pv.per_coordinate.len(), 2);
        assert!((pv.gamma_bar - 0.3).abs() < 1e-12);
        for (a, reduced) in pv.per_coordinate.iter().enumerate() {
            assert_eq!(reduced.n(), 5, "coordinate {a} keeps one row per tilt");
            assert_eq!(reduced.n_f(), 1);
            assert_eq!(reduced.n_con(), 5);
        }
        // Row payloads match the originating measurements.
        let x_rows: Vec<usize> = (0..problem.n())
            .filter(|&i| problem.measurements[i][0] != 0.0)
            .collect();
        for (kept, &orig) in x_rows.iter().enumerate() {
            assert_eq!(pv.per_coordinate[0].y[kept], problem.y[orig]);
            assert_eq!(pv.per_coordinate[0].inputs[kept], problem.inputs[orig]);
        }
    }

    #[test]
    fn coordinate_of_rejects_mixed_directions() {
        assert!(coordinate_of(&DVector::from_row_slice(&[1.0, 0.5])).is_err());
        assert!(coordinate_of(&DVector::from_row_slice(&[0.0, 0.0])).is_err());
        assert_eq!(
            coordinate_of(&DVector::from_row_slice(&[0.0, -2.0])).unwrap(),
            (1, -2.0)
        );
    }

    #[test]
    fn pointwise_methods_dominate_the_ellipsoidal_oracle() {
        let problem = quad_problem();
        let pv = pointwise_variant(&problem).unwrap();
        let settings = MethodSettings::default();
        let query = BoundQuery::new(
            DVector::from_element(1, 1.2),
            DVector::from_row_slice(&[1.0, 0.0]),
        );
        let reference = run_method(
            MethodTag::OracleE,
            &problem,
            Some(&pv),
            &query,
            &settings,
            None,
        )
        .unwrap();
        for tag in [
            MethodTag::OracleP,
            MethodTag::ReedP,
            MethodTag::FixedHashimoto,
            MethodTag::FixedYang,
            MethodTag::DualGdE,
            MethodTag::DualGdP,
        ] {
            let out = run_method(tag, &problem, Some(&pv), &query, &settings, None).unwrap();
            assert!(
                out.value >= reference.value - 1e-7,
                "{tag} reported {} below the oracle {}",
                out.value,
                reference.value
            );
        }
    }

    #[test]
    fn negative_axis_directions_flip_envelopes() {
        let problem = quad_problem();
        let pv = pointwise_variant(&problem).unwrap();
        let settings = MethodSettings::default();
        let x = DVector::from_element(1, 0.7);
        let plus = run_method(
            MethodTag::ReedP,
            &problem,
            Some(&pv),
            &BoundQuery::new(x.clone(), DVector::from_row_slice(&[0.0, 1.0])),
            &settings,
            None,
        )
        .unwrap();
        let minus = run_method(
            MethodTag::ReedP,
            &problem,
            Some(&pv),
            &BoundQuery::new(x, DVector::from_row_slice(&[0.0, -1.0])),
            &settings,
            None,
        )
        .unwrap();
        assert!((minus.value + plus.lower.unwrap()).abs() < 1e-12);
        assert!(plus.value + minus.value >= -1e-12, "envelope is nonempty");
    }
}
