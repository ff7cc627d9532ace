use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nalgebra::DVector;

use rkhs_bounds::dual::{dual_eval, QueryContext};
use rkhs_bounds::gp::ProblemGeometry;
use rkhs_bounds::scenarios::{gen_illustrative, gen_quadrotor, QuadrotorConfig};
use rkhs_bounds::BoundQuery;

use rkhs_bounds_cli::bench::{run_benchmark, BenchmarkConfig};
use rkhs_bounds_cli::fig1::emit_fig1_data;
use rkhs_bounds_cli::methods::{
    pointwise_variant, prior_bound, run_method, MethodSettings, MethodTag, BENCHMARK_TAGS,
};
use rkhs_bounds_cli::schema::{BoundReport, ProblemSchema};
use rkhs_bounds_cli::{read_json, write_file, CliError};

/// Worst-case bounds for kernel regression under bounded noise.
#[derive(Parser)]
#[command(name = "rkhs-bounds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a bound on `h^T f(x*)` for one query from a problem file.
    Bound {
        /// Problem JSON file.
        #[arg(long)]
        problem: PathBuf,
        /// Test input, comma-separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        /// Output-space direction, comma-separated; defaults to all ones.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        h: Option<Vec<f64>>,
        /// One of: optimal, oracle-e, oracle-p, alternating-p, reed-p,
        /// dualgd-e, dualgd-p, fixed-hashimoto, fixed-yang.
        #[arg(long, default_value = "optimal", conflicts_with = "sigma")]
        method: String,
        /// Evaluate the certificate at these fixed scales instead of
        /// running a method.
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        /// Emit the full report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a benchmark described by a JSON config file.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a two-output quadrotor-wind problem file.
    Quadrotor {
        /// Number of tilt angles (the problem gets 2 * n_data rows).
        #[arg(long, default_value_t = 10)]
        n_data: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the two-point illustrative problem file.
    Illustrative {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the illustrative-example sweep (envelope, dual curves, truth)
    /// as CSV.
    Fig1 {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Render help/usage ourselves so usage errors exit 1 (clap's
            // default of 2 is reserved for infeasible problems here).
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Bound {
            problem,
            x,
            h,
            method,
            sigma,
            json,
        } => bound(problem, x, h, method, sigma, json),
        Command::Benchmark { config } => {
            let config: BenchmarkConfig = read_json(&config)?;
            let artifacts = run_benchmark(&config)?;
            print!("{}", artifacts.csv);
            eprintln!(
                "wrote {} and {} ({} runs, {} excluded)",
                artifacts.csv_path.display(),
                artifacts.json_path.display(),
                artifacts.report.runs.len(),
                artifacts.report.exclusions
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Quadrotor { n_data, seed, out } => {
            let generated = gen_quadrotor(&QuadrotorConfig {
                n_data,
                seed,
                ..QuadrotorConfig::default()
            })?;
            emit_problem(&ProblemSchema::from_problem(&generated.problem), generated.margin, out)
        }
        Command::Illustrative { seed, out } => {
            let scenario = gen_illustrative(seed)?;
            emit_problem(
                &ProblemSchema::from_problem(&scenario.generated.problem),
                scenario.generated.margin,
                out,
            )
        }
        Command::Fig1 { out, seed } => {
            let data = emit_fig1_data(seed)?;
            write_file(&out, &data.csv())?;
            eprintln!(
                "wrote {} ({} grid points; anchor scales {:?} / {:?})",
                out.display(),
                data.rows.len(),
                data.anchor_sigma_upper,
                data.anchor_sigma_lower
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit_problem(
    schema: &ProblemSchema,
    margin: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let json = serde_json::to_string_pretty(schema).expect("problem schema serializes");
    match out {
        Some(path) => {
            write_file(&path, &json)?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    eprintln!("strict feasibility margin of the generating pair: {margin:.6}");
    Ok(ExitCode::SUCCESS)
}

fn bound(
    problem_path: PathBuf,
    x: Vec<f64>,
    h: Option<Vec<f64>>,
    method: String,
    sigma: Option<Vec<f64>>,
    json: bool,
) -> Result<ExitCode, CliError> {
    let schema: ProblemSchema = read_json(&problem_path)?;
    let problem = schema.to_problem()?;
    if x.is_empty() {
        return Err(CliError::Config("--x must not be empty".into()));
    }
    let x_star = DVector::from_vec(x);
    let direction = match h {
        Some(v) => DVector::from_vec(v),
        None => DVector::from_element(problem.n_f(), 1.0),
    };
    let query = BoundQuery::new(x_star, direction);
    let prior = prior_bound(&problem, &query)?;

    let report = if let Some(sigma) = sigma {
        if sigma.len() != problem.n_con() {
            return Err(CliError::Config(format!(
                "--sigma needs one scale per noise constraint ({} expected, {} given)",
                problem.n_con(),
                sigma.len()
            )));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(CliError::Config("--sigma entries must be positive".into()));
        }
        let geom = ProblemGeometry::new(&problem)?;
        let ctx = QueryContext::new(&geom, &query)?;
        let eval = dual_eval(&geom, &ctx, &sigma)?;
        BoundReport {
            method: "fixed-sigma".into(),
            value: eval.value,
            prior,
            converged: true,
            status: "certificate evaluated at the given scales".into(),
            iterations: None,
            sigma: Some(sigma),
            beta: Some(eval.beta),
            mean: Some(eval.mean),
            dir_variance: Some(eval.dir_variance),
            lower: None,
            upper: None,
        }
    } else {
        let tag = MethodTag::parse(&method).ok_or_else(|| {
            CliError::Config(format!(
                "unknown method {method:?}; valid methods: optimal, {}",
                BENCHMARK_TAGS.map(|t| t.id()).join(", ")
            ))
        })?;
        let pointwise = if tag.uses_pointwise_variant() {
            Some(pointwise_variant(&problem)?)
        } else {
            None
        };
        let outcome = run_method(
            tag,
            &problem,
            pointwise.as_ref(),
            &query,
            &MethodSettings::default(),
            None,
        )?;
        BoundReport {
            method: tag.id().into(),
            value: outcome.value,
            prior,
            converged: outcome.converged,
            status: outcome.status,
            iterations: outcome.iterations,
            sigma: outcome.sigma,
            beta: outcome.beta,
            mean: outcome.mean,
            dir_variance: outcome.dir_variance,
            lower: outcome.lower,
            upper: outcome.upper,
        }
    };

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        println!("method: {}", report.method);
        println!("bound:  {}", report.value);
        println!("prior:  {}", report.prior);
        if let Some(sigma) = &report.sigma {
            println!("sigma:  {sigma:?}");
        }
        if let (Some(lower), Some(upper)) = (report.lower, report.upper) {
            println!("envelope: [{lower}, {upper}]");
        }
        println!("status: {}", report.status);
    }
    if !report.converged {
        eprintln!("warning: the solver did not meet its stopping rule");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
