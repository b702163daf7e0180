use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use tail_lab::geometry::Trajectory;
use tail_lab::indexsets::predicted_rates;
use tail_lab::spectrum::Problem;
use tail_lab_cli::config::{GridOverrides, RunConfig, TrajectoryConfig, SCHEMA_VERSION};
use tail_lab_cli::{report, run, tables, CliError};

#[derive(Parser)]
#[command(name = "tail-lab", version, about = "Late-time tails of inverse-square wave and Dirac–Coulomb sectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonance lattice of the wave problem, closed form and located numerically.
    Resonances(ResonanceArgs),
    /// Predicted decay rates along rays and at fixed points.
    Rates(RateArgs),
    /// Evolve the configured sectors and write per-trajectory CSVs.
    Simulate(RunArgs),
    /// Fit the tails of a run and compare them with the predicted rates.
    Verify(RunArgs),
    /// Aggregate verified runs and emit log-log SVG plots.
    Report(ReportArgs),
    /// Evaluate the Gauss hypergeometric function 2F1(a, b; c; x).
    Hypergeo(HypergeoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Wave,
    Dirac,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Wave => Problem::Wave,
            ProblemArg::Dirac => Problem::Dirac,
        }
    }
}

#[derive(Args)]
struct ResonanceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    n: u32,
    #[arg(long, allow_negative_numbers = true)]
    coupling: Option<f64>,
    #[arg(long, default_value_t = 3)]
    jmax: u32,
    #[arg(long, default_value_t = 3)]
    kmax: u32,
    /// Only print the closed-form lattice.
    #[arg(long)]
    no_numeric: bool,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "wave")]
    problem: ProblemArg,
    #[arg(long, default_value_t = 3)]
    n: u32,
    #[arg(long, allow_negative_numbers = true)]
    coupling: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    #[arg(long, default_value_t = 3)]
    jmax: u32,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    coupling: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    /// Harmonic degrees (wave) or κ values (Dirac), comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    modes: Option<Vec<i32>>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// `[id=]fixed:R`, `[id=]ray:GAMMA` or `[id=]null:C`; repeatable.
    #[arg(long = "trajectory")]
    trajectories: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Scale the default initial pulse; 0 gives zero data.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Overwrite or redo an existing run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories holding a verified run.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Directory for the plots and summary; defaults to `<run>/plots`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HypergeoArgs {
    /// Complex parameters as `re` or `re,im`.
    #[arg(long, allow_negative_numbers = true)]
    a: String,
    #[arg(long, allow_negative_numbers = true)]
    b: String,
    #[arg(long, allow_negative_numbers = true)]
    c: String,
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
}

fn parse_trajectory(spec: &str) -> Result<TrajectoryConfig, CliError> {
    let (id, rest) = match spec.split_once('=') {
        Some((id, rest)) => (Some(id.to_string()), rest),
        None => (None, spec),
    };
    let (kind, value) = rest.split_once(':').ok_or_else(|| CliError::Usage(format!("trajectory {spec:?}: expected kind:value")))?;
    let v: f64 = value.parse().map_err(|_| CliError::Usage(format!("trajectory {spec:?}: invalid number {value:?}")))?;
    let (trajectory, default_id) = match kind {
        "fixed" => (Trajectory::FixedR(v), format!("fixed_r{value}")),
        "ray" => (Trajectory::Ray(v), format!("ray_{value}")),
        "null" => (Trajectory::NullOffset(v), format!("null_{value}")),
        _ => return Err(CliError::Usage(format!("trajectory {spec:?}: kind must be fixed, ray or null"))),
    };
    Ok(TrajectoryConfig { id: id.unwrap_or(default_id), trajectory })
}

fn parameter(problem: Problem, coupling: Option<f64>, z: Option<f64>) -> Result<Option<f64>, CliError> {
    match (problem, coupling, z) {
        (Problem::Wave, Some(_), Some(_)) | (Problem::Dirac, Some(_), Some(_)) => {
            Err(CliError::Usage("give --coupling for wave runs or --z for Dirac runs, not both".into()))
        }
        (Problem::Wave, None, Some(_)) => Err(CliError::Usage("--z applies to the Dirac problem; use --coupling".into())),
        (Problem::Dirac, Some(_), None) => Err(CliError::Usage("--coupling applies to the wave problem; use --z".into())),
        (_, c, z) => Ok(c.or(z)),
    }
}

fn build_config(a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let problem: Problem = a.problem.ok_or_else(|| CliError::Usage("--problem or --config is required".into()))?.into();
            let param = parameter(problem, a.coupling, a.z)?
                .ok_or_else(|| CliError::Usage("--coupling (wave) or --z (Dirac) is required".into()))?;
            RunConfig {
                schema_version: SCHEMA_VERSION,
                problem,
                n: a.n.unwrap_or(3),
                parameter: param,
                modes: a.modes.clone().unwrap_or_else(|| vec![if problem == Problem::Dirac { 1 } else { 0 }]),
                grid: GridOverrides { h: None, dt: None, t_max: a.t_max.ok_or_else(|| CliError::Usage("--t-max is required".into()))? },
                initial_data: None,
                trajectories: Vec::new(),
                output_dir: a.output.clone().ok_or_else(|| CliError::Usage("--output is required".into()))?,
                tolerance: a.tolerance.unwrap_or(0.1),
                sample_interval: 0.04,
                window: None,
            }
        }
    };
    if a.config.is_some() {
        if let Some(p) = a.problem {
            if Problem::from(p) != config.problem {
                return Err(CliError::Usage("--problem disagrees with the config file".into()));
            }
        }
        if let Some(v) = parameter(config.problem, a.coupling, a.z)? {
            config.parameter = v;
        }
        if let Some(n) = a.n {
            config.n = n;
        }
        if let Some(m) = &a.modes {
            config.modes = m.clone();
        }
        if let Some(t) = a.t_max {
            config.grid.t_max = t;
        }
        if let Some(o) = &a.output {
            config.output_dir = o.clone();
        }
        if let Some(t) = a.tolerance {
            config.tolerance = t;
        }
    }
    if a.h.is_some() {
        config.grid.h = a.h;
    }
    if a.dt.is_some() {
        config.grid.dt = a.dt;
    }
    if !a.trajectories.is_empty() {
        config.trajectories = a.trajectories.iter().map(|s| parse_trajectory(s)).collect::<Result<_, _>>()?;
    } else if config.trajectories.is_empty() {
        config.trajectories = vec![parse_trajectory("fixed:2")?, parse_trajectory("ray:0.5")?];
    }
    if let Some(amp) = a.amplitude {
        let mut data = config.data();
        data.weights = data.weights.map(|w| w * amp);
        config.initial_data = Some(data);
    }
    config.validate()?;
    Ok(config)
}

fn complex_arg(name: &str, s: &str) -> Result<Complex64, CliError> {
    tables::parse_complex(s).map_err(|e| CliError::Usage(format!("--{name}: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Resonances(a) => {
            let (n, coupling, jmax) = match &a.config {
                Some(path) => {
                    let c = RunConfig::load(path)?;
                    if c.problem != Problem::Wave {
                        return Err(CliError::Usage("resonances are computed for the wave problem".into()));
                    }
                    (c.n, c.parameter, c.modes.iter().copied().max().unwrap_or(0) as u32)
                }
                None => (a.n, a.coupling.ok_or_else(|| CliError::Usage("--coupling or --config is required".into()))?, a.jmax),
            };
            print!("{}", tables::resonances(n, coupling, jmax, a.kmax, !a.no_numeric)?);
        }
        Command::Rates(a) => {
            let (problem, n, param, jmax) = match &a.config {
                Some(path) => {
                    let c = RunConfig::load(path)?;
                    (c.problem, c.n, c.parameter, c.modes.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0))
                }
                None => {
                    let problem: Problem = a.problem.into();
                    let p = parameter(problem, a.coupling, a.z)?
                        .ok_or_else(|| CliError::Usage("--coupling (wave) or --z (Dirac) is required".into()))?;
                    (problem, a.n, p, a.jmax)
                }
            };
            print!("{}", tables::rates(&predicted_rates(problem, n, param, jmax)?));
        }
        Command::Simulate(a) => {
            let config = build_config(&a)?;
            for line in run::simulate(&config, a.force)? {
                println!("{line}");
            }
            println!("output: {}", config.output_dir.display());
        }
        Command::Verify(a) => {
            let config = build_config(&a)?;
            let out = run::verify(&config, a.force)?;
            print!("{}", run::render_report(&out));
            if !out.passed {
                return Err(CliError::VerificationFailed);
            }
        }
        Command::Report(a) => {
            if let Some(o) = &a.out {
                std::fs::create_dir_all(o)?;
            }
            let summary = report::aggregate(&a.runs, a.out.as_deref())?;
            print!("{}", summary.text);
            for p in &summary.plots {
                println!("plot: {}", p.display());
            }
            if !summary.passed {
                return Err(CliError::VerificationFailed);
            }
        }
        Command::Hypergeo(a) => {
            let (ca, cb, cc) = (complex_arg("a", &a.a)?, complex_arg("b", &a.b)?, complex_arg("c", &a.c)?);
            print!("{}", tables::hypergeo(ca, cb, cc, a.x)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
