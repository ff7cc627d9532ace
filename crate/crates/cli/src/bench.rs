//! Benchmark harness: runs a set of methods over seeded scenario instances
//! and a grid of test queries, normalizes every bound against the primal
//! reference, and emits a CSV summary plus a JSON sidecar with full per-run
//! detail.
//!
//! Protocol per (seed, test point): the primal reference `oracle-e` is
//! solved first; every other method's value `b` is then reported as the
//! normalized suboptimality `(b - optimal) / (prior - optimal)`, where
//! `prior` is the data-free bound. Wall time is measured per method call,
//! with one untimed warm-up call per (seed, method) before the first timed
//! point so that aggregate timings exclude first-touch effects (the warm-up
//! duration is reported separately).

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use rkhs_bounds::dual::OptimizerOptions;
use rkhs_bounds::scenarios::{gen_illustrative, gen_quadrotor, QuadrotorConfig};
use rkhs_bounds::{BoundQuery, Problem};

use crate::methods::{
    pointwise_variant, prior_bound, run_method, MethodSettings, MethodTag, PointwiseVariant,
    BENCHMARK_TAGS,
};
use crate::schema::ProblemSchema;
use crate::{read_json, write_file, CliError};

// ============================================================================
// Configuration
// ============================================================================

fn default_n_data() -> usize {
    100
}
fn default_test_points() -> usize {
    20
}
fn default_alternating_suboptimality() -> f64 {
    1e-2
}
fn default_dualgd_steps() -> usize {
    100
}
fn default_dualgd_learning_rate() -> f64 {
    0.1
}
fn default_rank_tol() -> f64 {
    1e-10
}

/// Benchmark run description, read from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// One of `illustrative`, `quadrotor`, `file`.
    pub scenario: String,
    /// Tilt-angle count for the quadrotor scenario (N = 2 * n_data rows).
    #[serde(default = "default_n_data")]
    pub n_data: usize,
    pub seeds: Vec<u64>,
    /// Method ids; `oracle-e` is mandatory (it is the normalization
    /// reference for every row).
    pub methods: Vec<String>,
    #[serde(default = "default_test_points")]
    pub test_points: usize,
    /// Problem JSON for the `file` scenario.
    #[serde(default)]
    pub problem_file: Option<PathBuf>,
    /// Artifact prefix: writes `<output>.csv` and `<output>.json`.
    pub output: String,
    /// Run-to-target stopping rule for `alternating-p`: stop at this
    /// suboptimality relative to its own (pointwise) reference.
    #[serde(default = "default_alternating_suboptimality")]
    pub alternating_suboptimality: f64,
    #[serde(default = "default_dualgd_steps")]
    pub dualgd_steps: usize,
    #[serde(default = "default_dualgd_learning_rate")]
    pub dualgd_learning_rate: f64,
    /// Scale of the split bound; defaults to the uniform noise bound.
    #[serde(default)]
    pub reed_sigma_bar: Option<f64>,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

// ============================================================================
// Suboptimality
// ============================================================================

/// Normalized distance above the reference bound:
/// `(bound - optimal) / (prior - optimal)`.
///
/// Zero means the method matched the reference; one means it was no better
/// than having no data. Tiny negative values (within `1e-8`, normalized or
/// absolute) are rounded-up solver noise and clamp to zero; anything more
/// negative is passed through for the dominance audit to flag.
pub fn suboptimality(bound: f64, optimal: f64, prior: f64) -> Result<f64, CliError> {
    let gap = prior - optimal;
    if gap <= 1e-12 {
        return Err(CliError::Config(format!(
            "degenerate suboptimality reference: prior {prior} does not exceed the reference {optimal}"
        )));
    }
    let raw = (bound - optimal) / gap;
    if raw < 0.0 && (raw >= -1e-8 || optimal - bound <= 1e-8) {
        return Ok(0.0);
    }
    Ok(raw)
}

/// Running (min, avg, max) of a nonempty slice, folded in order; `NaN`
/// triple when empty.
pub fn aggregate(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    (min, sum / values.len() as f64, max)
}

// ============================================================================
// Records and rows
// ============================================================================

/// One method call on one (seed, test point), as stored in the JSON sidecar.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub point: usize,
    pub x_star: Vec<f64>,
    pub direction: Vec<f64>,
    pub method: String,
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Reference value (`oracle-e`) shared by all methods at this point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suboptimality: Option<f64>,
    pub prior: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
    /// Duration of the untimed warm-up call (first point of each seed only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cold_seconds: Option<f64>,
    pub converged: bool,
    pub status: String,
    /// Excluded runs do not enter the aggregates.
    pub excluded: bool,
}

/// Aggregated CSV row for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    /// Method family (`oracle`, `dualgd`, ...).
    pub method: String,
    /// Noise-assumption tag: `e` or `p`.
    pub tag: String,
    pub sub_min: f64,
    pub sub_avg: f64,
    pub sub_max: f64,
    pub t_min: f64,
    pub t_avg: f64,
    pub t_max: f64,
    pub runs: usize,
    pub excluded: usize,
    pub nonconverged: usize,
}

/// Sidecar payload: provenance plus everything needed to recompute the CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub git_hash: String,
    pub config: BenchmarkConfig,
    /// Total run records excluded from aggregates.
    pub exclusions: usize,
    pub rows: Vec<BenchmarkRow>,
    pub runs: Vec<RunRecord>,
}

/// Outputs of [`run_benchmark`]: rows, rendered CSV, sidecar, and where the
/// artifacts were written.
#[derive(Debug)]
pub struct BenchmarkArtifacts {
    pub report: BenchmarkReport,
    pub csv: String,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

pub const CSV_HEADER: &str = "method,tag,sub_min,sub_avg,sub_max,t_min,t_avg,t_max";

/// Renders the fixed-column CSV. Floats use the shortest round-trip
/// representation, so parsing a cell back gives the exact stored value.
pub fn render_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method, r.tag, r.sub_min, r.sub_avg, r.sub_max, r.t_min, r.t_avg, r.t_max
        ));
    }
    out
}

// ============================================================================
// Scenario plumbing
// ============================================================================

enum Scenario {
    Illustrative,
    Quadrotor,
    File(Problem),
}

impl Scenario {
    fn instantiate(&self, config: &BenchmarkConfig, seed: u64) -> Result<Problem, CliError> {
        Ok(match self {
            Scenario::Illustrative => gen_illustrative(seed)?.generated.problem,
            Scenario::Quadrotor => {
                gen_quadrotor(&QuadrotorConfig {
                    n_data: config.n_data,
                    seed,
                    ..QuadrotorConfig::default()
                })?
                .problem
            }
            Scenario::File(problem) => problem.clone(),
        })
    }
}

/// Evenly spread test queries. Scalar-input problems get a uniform grid over
/// the scenario's native range with directions cycling through the output
/// coordinates; the quadrotor uses evenly spaced tilt angles over one period.
fn test_queries(
    scenario: &Scenario,
    problem: &Problem,
    count: usize,
) -> Result<Vec<BoundQuery>, CliError> {
    let n_f = problem.n_f();
    let axis = |k: usize| {
        let mut h = DVector::zeros(n_f);
        h[k % n_f] = 1.0;
        h
    };
    let span = match scenario {
        Scenario::Quadrotor => {
            // Angles over one period, endpoint excluded (2 pi wraps to 0).
            return Ok((0..count)
                .map(|k| {
                    let angle = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                    BoundQuery::new(DVector::from_element(1, angle), axis(k))
                })
                .collect());
        }
        Scenario::Illustrative => (-3.0, 3.0),
        Scenario::File(_) => {
            if problem.inputs.is_empty() || problem.n_x() != Some(1) {
                return Err(CliError::Config(
                    "the file scenario generates test queries from the data range \
                     and needs at least one 1-D input"
                        .into(),
                ));
            }
            let lo = problem.inputs.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
            let hi = problem
                .inputs
                .iter()
                .map(|x| x[0])
                .fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    Ok((0..count)
        .map(|k| {
            let x = if count == 1 {
                0.5 * (span.0 + span.1)
            } else {
                span.0 + (span.1 - span.0) * k as f64 / (count - 1) as f64
            };
            BoundQuery::new(DVector::from_element(1, x), axis(k))
        })
        .collect())
}

// ============================================================================
// Runner
// ============================================================================

fn parse_config(config: &BenchmarkConfig) -> Result<(Scenario, Vec<MethodTag>), CliError> {
    if config.seeds.is_empty() {
        return Err(CliError::Config("at least one seed is required".into()));
    }
    if config.test_points == 0 {
        return Err(CliError::Config("test_points must be at least 1".into()));
    }
    if config.methods.is_empty() {
        return Err(CliError::Config("at least one method is required".into()));
    }
    let mut tags = Vec::with_capacity(config.methods.len());
    for name in &config.methods {
        let tag = MethodTag::parse(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown method {name:?}; valid methods: {}",
                BENCHMARK_TAGS.map(|t| t.id()).join(", ")
            ))
        })?;
        if tag == MethodTag::Optimal {
            return Err(CliError::Config(
                "the benchmark compares the named literature methods; \
                 use the `bound` subcommand for the optimized certificate"
                    .into(),
            ));
        }
        if tags.contains(&tag) {
            return Err(CliError::Config(format!("duplicate method {name:?}")));
        }
        tags.push(tag);
    }
    if !tags.contains(&MethodTag::OracleE) {
        return Err(CliError::Config(
            "oracle-e is required: it is the reference all suboptimalities are measured against"
                .into(),
        ));
    }
    if !(config.alternating_suboptimality > 0.0) {
        return Err(CliError::Config(
            "alternating_suboptimality must be positive".into(),
        ));
    }
    if config.dualgd_steps == 0 {
        return Err(CliError::Config("dualgd_steps must be at least 1".into()));
    }
    if !(config.dualgd_learning_rate > 0.0) {
        return Err(CliError::Config(
            "dualgd_learning_rate must be positive".into(),
        ));
    }
    if !(config.rank_tol > 0.0) {
        return Err(CliError::Config("rank_tol must be positive".into()));
    }
    let scenario = match config.scenario.as_str() {
        "illustrative" => Scenario::Illustrative,
        "quadrotor" => {
            if config.n_data == 0 {
                return Err(CliError::Config("n_data must be at least 1".into()));
            }
            Scenario::Quadrotor
        }
        "file" => {
            let path = config.problem_file.as_ref().ok_or_else(|| {
                CliError::Config("the file scenario requires problem_file".into())
            })?;
            let schema: ProblemSchema = read_json(path)?;
            Scenario::File(schema.to_problem()?)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown scenario {other:?}; valid scenarios: illustrative, quadrotor, file"
            )))
        }
    };
    Ok((scenario, tags))
}

/// Tags in a fixed execution order with the references first, so that
/// `oracle-p` (when requested) is computed before `alternating-p` needs its
/// target. Output rows still follow the config order.
fn execution_order(tags: &[MethodTag]) -> Vec<MethodTag> {
    BENCHMARK_TAGS
        .into_iter()
        .filter(|t| tags.contains(t))
        .collect()
}

#[derive(Default)]
struct Accum {
    subs: Vec<f64>,
    times: Vec<f64>,
    excluded: usize,
    nonconverged: usize,
}

struct Runner<'a> {
    config: &'a BenchmarkConfig,
    settings: MethodSettings,
    records: Vec<RunRecord>,
    accums: HashMap<MethodTag, Accum>,
}

impl<'a> Runner<'a> {
    fn record_excluded(&mut self, tag: MethodTag, mut record: RunRecord, status: String) {
        record.excluded = true;
        record.status = status;
        self.accums.entry(tag).or_default().excluded += 1;
        self.records.push(record);
    }

    fn record_run(
        &mut self,
        tag: MethodTag,
        mut record: RunRecord,
        value: f64,
        optimal: f64,
        converged: bool,
    ) -> Result<(), CliError> {
        let sub = suboptimality(value, optimal, record.prior)?;
        record.value = Some(value);
        record.optimal = Some(optimal);
        record.suboptimality = Some(sub);
        record.converged = converged;
        let accum = self.accums.entry(tag).or_default();
        accum.subs.push(sub);
        accum
            .times
            .push(record.seconds.expect("timed runs carry a duration"));
        if !converged {
            accum.nonconverged += 1;
        }
        self.records.push(record);
        Ok(())
    }
}

impl RunRecord {
    /// Full method id (e.g. `alternating-p`) reassembled from the family and
    /// noise tag, for messages.
    fn id(&self) -> String {
        match self.method.as_str() {
            "oracle" | "dualgd" | "alternating" | "reed" => {
                format!("{}-{}", self.method, self.tag)
            }
            _ => self.method.clone(),
        }
    }

    fn blank(seed: u64, point: usize, query: &BoundQuery, tag: MethodTag, prior: f64) -> Self {
        RunRecord {
            seed,
            point,
            x_star: query.x_star.iter().cloned().collect(),
            direction: query.direction.iter().cloned().collect(),
            method: tag.family().into(),
            tag: tag.noise_tag().into(),
            value: None,
            optimal: None,
            suboptimality: None,
            prior,
            seconds: None,
            cold_seconds: None,
            converged: true,
            status: String::new(),
            excluded: false,
        }
    }
}

fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Runs the configured benchmark and writes `<output>.csv` and
/// `<output>.json`.
///
/// Per-run failures (infeasible instances, degenerate normalizations) mark
/// the run excluded and are counted rather than aborting; a suboptimality
/// below `-1e-6` on any included run aborts with [`CliError::Audit`], since
/// no valid method can beat the exact reference.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkArtifacts, CliError> {
    let (scenario, tags) = parse_config(config)?;
    let order = execution_order(&tags);
    let needs_pointwise = tags.iter().any(|t| t.uses_pointwise_variant());

    let settings = MethodSettings {
        dualgd: OptimizerOptions {
            step_size: config.dualgd_learning_rate,
            max_iters: config.dualgd_steps,
            ..OptimizerOptions::fixed_budget()
        },
        reed_sigma_bar: config.reed_sigma_bar,
        rank_tol: config.rank_tol,
        ..MethodSettings::default()
    };
    let mut runner = Runner {
        config,
        settings,
        records: Vec::new(),
        accums: HashMap::new(),
    };

    for &seed in &config.seeds {
        let problem = scenario.instantiate(config, seed)?;
        let pointwise = if needs_pointwise {
            Some(pointwise_variant(&problem)?)
        } else {
            None
        };
        let queries = test_queries(&scenario, &problem, config.test_points)?;
        let mut warmed: HashMap<MethodTag, bool> = HashMap::new();
        for (point, query) in queries.iter().enumerate() {
            runner.run_point(seed, point, query, &problem, pointwise.as_ref(), &order, &mut warmed)?;
        }
    }

    // Dominance audit: `oracle-e` is the exact optimum of the stated
    // problem; every other method solves a relaxation or a dual, so genuine
    // negative suboptimality means a bug, not a better method.
    for r in &runner.records {
        if let Some(sub) = r.suboptimality {
            if !r.excluded && sub < -1e-6 {
                return Err(CliError::Audit(format!(
                    "{} reported suboptimality {sub} (seed {}, point {})",
                    r.id(),
                    r.seed,
                    r.point
                )));
            }
        }
    }

    let mut rows = Vec::with_capacity(tags.len());
    for &tag in &tags {
        let accum = runner.accums.entry(tag).or_default();
        let (sub_min, sub_avg, sub_max) = aggregate(&accum.subs);
        let (t_min, t_avg, t_max) = aggregate(&accum.times);
        rows.push(BenchmarkRow {
            method: tag.family().into(),
            tag: tag.noise_tag().into(),
            sub_min,
            sub_avg,
            sub_max,
            t_min,
            t_avg,
            t_max,
            runs: accum.subs.len(),
            excluded: accum.excluded,
            nonconverged: accum.nonconverged,
        });
    }

    let exclusions = runner.records.iter().filter(|r| r.excluded).count();
    let report = BenchmarkReport {
        git_hash: git_hash(),
        config: config.clone(),
        exclusions,
        rows,
        runs: runner.records,
    };
    let csv = render_csv(&report.rows);
    let csv_path = PathBuf::from(format!("{}.csv", config.output));
    let json_path = PathBuf::from(format!("{}.json", config.output));
    write_file(&csv_path, &csv)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&json_path, &json)?;
    Ok(BenchmarkArtifacts {
        report,
        csv,
        csv_path,
        json_path,
    })
}

impl<'a> Runner<'a> {
    #[allow(clippy::too_many_arguments)]
    fn run_point(
        &mut self,
        seed: u64,
        point: usize,
        query: &BoundQuery,
        problem: &Problem,
        pointwise: Option<&PointwiseVariant>,
        order: &[MethodTag],
        warmed: &mut HashMap<MethodTag, bool>,
    ) -> Result<(), CliError> {
        let prior = prior_bound(problem, query)?;
        let mut cache: HashMap<MethodTag, f64> = HashMap::new();

        // Reference first; without it no suboptimality is defined, so a
        // reference failure (or a degenerate normalization gap) excludes the
        // whole point.
        let blank = |tag: MethodTag| RunRecord::blank(seed, point, query, tag, prior);
        let exclude_rest = |runner: &mut Self, status: &str| {
            for &tag in order.iter().filter(|&&t| t != MethodTag::OracleE) {
                runner.record_excluded(tag, blank(tag), status.into());
            }
        };
        let reference = {
            let mut record = blank(MethodTag::OracleE);
            match self.timed_call(MethodTag::OracleE, problem, pointwise, query, None, warmed, &mut record) {
                Ok(outcome) => {
                    let value = outcome.value;
                    // A reference that missed its own stopping rule (or one
                    // the prior does not dominate) cannot normalize anything.
                    if !outcome.converged {
                        let status = format!("reference did not converge: {}", outcome.status);
                        self.record_excluded(MethodTag::OracleE, record, status.clone());
                        exclude_rest(self, &status);
                        return Ok(());
                    }
                    if prior - value <= 1e-12 {
                        let status = format!(
                            "degenerate normalization: prior {prior} does not exceed the reference {value}"
                        );
                        self.record_excluded(MethodTag::OracleE, record, status.clone());
                        exclude_rest(self, &status);
                        return Ok(());
                    }
                    record.status = outcome.status.clone();
                    self.record_run(MethodTag::OracleE, record, value, value, outcome.converged)?;
                    cache.insert(MethodTag::OracleE, value);
                    value
                }
                Err(e) => {
                    self.record_excluded(MethodTag::OracleE, record, e.to_string());
                    exclude_rest(self, "reference oracle failed");
                    return Ok(());
                }
            }
        };

        for &tag in order.iter().filter(|&&t| t != MethodTag::OracleE) {
            let target = if tag == MethodTag::AlternatingP {
                match self.oracle_p_value(&mut cache, problem, pointwise, query) {
                    Ok(op) => Some(op + self.config.alternating_suboptimality * (prior - op)),
                    Err(e) => {
                        self.record_excluded(
                            tag,
                            blank(tag),
                            format!("pointwise reference failed: {e}"),
                        );
                        continue;
                    }
                }
            } else {
                None
            };
            let mut record = blank(tag);
            match self.timed_call(tag, problem, pointwise, query, target, warmed, &mut record) {
                Ok(outcome) => {
                    cache.insert(tag, outcome.value);
                    record.status = outcome.status.clone();
                    self.record_run(tag, record, outcome.value, reference, outcome.converged)?;
                }
                Err(e) => self.record_excluded(tag, record, e.to_string()),
            }
        }
        Ok(())
    }

    /// The pointwise-reference value used for the alternating target,
    /// computed untimed if `oracle-p` was not itself a benchmarked method at
    /// this point yet.
    fn oracle_p_value(
        &self,
        cache: &mut HashMap<MethodTag, f64>,
        problem: &Problem,
        pointwise: Option<&PointwiseVariant>,
        query: &BoundQuery,
    ) -> Result<f64, CliError> {
        if let Some(&v) = cache.get(&MethodTag::OracleP) {
            return Ok(v);
        }
        let outcome = run_method(
            MethodTag::OracleP,
            problem,
            pointwise,
            query,
            &self.settings,
            None,
        )?;
        cache.insert(MethodTag::OracleP, outcome.value);
        Ok(outcome.value)
    }

    /// One timed method call, preceded by an untimed warm-up on the first
    /// point of each seed (its duration lands in `cold_seconds`).
    #[allow(clippy::too_many_arguments)]
    fn timed_call(
        &mut self,
        tag: MethodTag,
        problem: &Problem,
        pointwise: Option<&PointwiseVariant>,
        query: &BoundQuery,
        target: Option<f64>,
        warmed: &mut HashMap<MethodTag, bool>,
        record: &mut RunRecord,
    ) -> Result<crate::methods::MethodOutcome, CliError> {
        if !warmed.get(&tag).copied().unwrap_or(false) {
            let cold_start = Instant::now();
            let cold = run_method(tag, problem, pointwise, query, &self.settings, target);
            record.cold_seconds = Some(cold_start.elapsed().as_secs_f64());
            warmed.insert(tag, true);
            cold?;
        }
        let start = Instant::now();
        let outcome = run_method(tag, problem, pointwise, query, &self.settings, target)?;
        record.seconds = Some(start.elapsed().as_secs_f64());
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suboptimality_normalizes_between_reference_and_prior() {
        assert_eq!(suboptimality(2.0, 2.0, 4.0).unwrap(), 0.0);
        assert_eq!(suboptimality(4.0, 2.0, 4.0).unwrap(), 1.0);
        assert_eq!(suboptimality(3.0, 2.0, 4.0).unwrap(), 0.5);
        // Tiny negative slack clamps to zero; real violations pass through.
        assert_eq!(suboptimality(2.0 - 5e-9, 2.0, 4.0).unwrap(), 0.0);
        assert!(suboptimality(1.0, 2.0, 4.0).unwrap() < -0.4);
        assert!(suboptimality(2.0, 2.0, 2.0).is_err());
        assert!(suboptimality(3.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn aggregate_folds_in_order() {
        let (min, avg, max) = aggregate(&[3.0, 1.0, 2.0]);
        assert_eq!((min, avg, max), (1.0, 2.0, 3.0));
        assert!(aggregate(&[]).1.is_nan());
    }

    fn base_config() -> BenchmarkConfig {
        serde_json::from_str(
            r#"{
                "scenario": "quadrotor",
                "seeds": [0],
                "methods": ["oracle-e"],
                "output": "/tmp/unused"
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn config_defaults_match_the_reference_protocol() {
        let c = base_config();
        assert_eq!(c.n_data, 100);
        assert_eq!(c.test_points, 20);
        assert_eq!(c.dualgd_steps, 100);
        assert_eq!(c.dualgd_learning_rate, 0.1);
        assert_eq!(c.alternating_suboptimality, 1e-2);
    }

    #[test]
    fn validation_requires_the_reference_oracle() {
        let mut c = base_config();
        c.methods = vec!["reed-p".into()];
        assert!(matches!(parse_config(&c), Err(CliError::Config(_))));
        c.methods = vec!["oracle-e".into(), "unknown".into()];
        assert!(matches!(parse_config(&c), Err(CliError::Config(_))));
        c.methods = vec!["oracle-e".into(), "optimal".into()];
        assert!(matches!(parse_config(&c), Err(CliError::Config(_))));
        c.methods = vec!["oracle-e".into(), "oracle-e".into()];
        assert!(matches!(parse_config(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn execution_order_puts_the_pointwise_oracle_before_alternating() {
        let order = execution_order(&[
            MethodTag::AlternatingP,
            MethodTag::OracleP,
            MethodTag::OracleE,
        ]);
        let pos = |t| order.iter().position(|&x| x == t).unwrap();
        assert!(pos(MethodTag::OracleE) < pos(MethodTag::OracleP));
        assert!(pos(MethodTag::OracleP) < pos(MethodTag::AlternatingP));
    }

    #[test]
    fn csv_renders_the_fixed_column_order() {
        let rows = vec![BenchmarkRow {
            method: "oracle".into(),
            tag: "e".into(),
            sub_min: 0.0,
            sub_avg: 0.0,
            sub_max: 0.0,
            t_min: 0.25,
            t_avg: 0.5,
            t_max: 1.0,
            runs: 3,
            excluded: 0,
            nonconverged: 0,
        }];
        let csv = render_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,tag,sub_min,sub_avg,sub_max,t_min,t_avg,t_max"
        );
        assert_eq!(lines.next().unwrap(), "oracle,e,0,0,0,0.25,0.5,1");
    }

    #[test]
    fn quadrotor_queries_cycle_axes_over_one_period() {
        let problem = gen_quadrotor(&QuadrotorConfig {
            n_data: 3,
            seed: 1,
            ..QuadrotorConfig::default()
        })
        .unwrap()
        .problem;
        let qs = test_queries(&Scenario::Quadrotor, &problem, 4).unwrap();
        assert_eq!(qs.len(), 4);
        assert_eq!(qs[0].x_star[0], 0.0);
        assert!(qs[3].x_star[0] < 2.0 * std::f64::consts::PI);
        assert_eq!(qs[0].direction.as_slice(), &[1.0, 0.0]);
        assert_eq!(qs[1].direction.as_slice(), &[0.0, 1.0]);
        assert_eq!(qs[2].direction.as_slice(), &[1.0, 0.0]);
    }
}
