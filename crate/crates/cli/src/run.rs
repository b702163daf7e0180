//! Simulation and verification runs, one output directory per run.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tail_lab::decayfit::{compare, fit_rate, floor_from_control, DecayReport, FitOutcome, LabeledFit};
use tail_lab::evolve::{evolve, EvolutionOutput, Grid, InitialData, Sampler};
use tail_lab::geometry::Trajectory;
use tail_lab::indexsets::predicted_rates;
use tail_lab::spectrum::{ModeSpec, Problem};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::series;

pub const CONFIG_FILE: &str = "config.json";
pub const LOG_FILE: &str = "run.log";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
/// Written last; its absence marks an interrupted run.
pub const COMPLETE_MARKER: &str = ".complete";
pub const CONTROL_ID: &str = "control";
/// Tails below this fraction of the series peak count as vanishing.
pub const VANISHING_RATIO: f64 = 1e-10;

/// Worker count from `TAIL_LAB_THREADS`, defaulting to the number of
/// logical processors.
pub fn threads() -> Result<usize, CliError> {
    match std::env::var("TAIL_LAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Usage(format!("TAIL_LAB_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn mode_tag(spec: &ModeSpec) -> String {
    match *spec {
        ModeSpec::Wave { j, .. } => format!("j{j}"),
        ModeSpec::Dirac { kappa, .. } => format!("kappa{kappa}"),
    }
}

pub fn series_id(spec: &ModeSpec, trajectory_id: &str) -> String {
    format!("{}_{trajectory_id}", mode_tag(spec))
}

/// Flat-space sector without a tail, evolved at the same resolution to
/// measure the numerical floor.
fn control_spec(problem: Problem) -> ModeSpec {
    match problem {
        Problem::Wave => ModeSpec::wave(3, 0.0, 0).expect("flat monopole"),
        Problem::Dirac => ModeSpec::dirac(0.0, -1).expect("free sector"),
    }
}

fn control_sampler() -> Sampler {
    Sampler::new(CONTROL_ID, Trajectory::FixedR(2.0))
}

type JobResult = tail_lab::Result<(EvolutionOutput, f64)>;

struct Job {
    spec: ModeSpec,
    grid: Grid,
    data: InitialData,
    samplers: Vec<Sampler>,
}

/// Runs independent evolutions on up to `threads` workers. Results come back
/// in job order whatever the scheduling.
fn run_jobs(jobs: &[Job], sample_every: usize, threads: usize) -> Vec<JobResult> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<JobResult>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.min(jobs.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let start = Instant::now();
                let out = evolve(&job.spec, &job.grid, &job.data, &job.samplers, sample_every);
                let elapsed = start.elapsed().as_secs_f64();
                results.lock().expect("result slot")[i] = Some(out.map(|o| (o, elapsed)));
            });
        }
    });
    results.into_inner().expect("results").into_iter().map(|r| r.expect("every job ran")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunState {
    Absent,
    Partial,
    Complete,
}

pub fn run_state(dir: &Path) -> RunState {
    if dir.join(COMPLETE_MARKER).exists() {
        RunState::Complete
    } else if dir.join(CONFIG_FILE).exists() {
        RunState::Partial
    } else {
        RunState::Absent
    }
}

/// Evolves every configured mode plus the control and writes the CSVs,
/// config snapshot and log. Returns the log lines.
pub fn simulate(config: &RunConfig, force: bool) -> Result<Vec<String>, CliError> {
    let dir = &config.output_dir;
    match run_state(dir) {
        RunState::Absent => {}
        RunState::Partial if !force => {
            return Err(CliError::Config(format!(
                "partial run detected in {} (no completion marker); rerun with --force to start over",
                dir.display()
            )))
        }
        RunState::Complete if !force => {
            return Err(CliError::Config(format!("{} already holds a completed run; use --force to overwrite", dir.display())))
        }
        _ => {
            let _ = fs::remove_file(dir.join(COMPLETE_MARKER));
        }
    }
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    fs::write(dir.join(CONFIG_FILE), config.to_json())?;

    let specs = config.mode_specs()?;
    let samplers: Vec<Sampler> = config.trajectories.iter().map(|t| Sampler::new(t.id.clone(), t.trajectory)).collect();
    let data = config.data();
    let mut jobs = Vec::with_capacity(specs.len() + 1);
    for spec in &specs {
        jobs.push(Job { spec: *spec, grid: config.grid_for(spec)?, data, samplers: samplers.clone() });
    }
    let control = control_spec(config.problem);
    let control_grid = Grid::sized_for(&control, config.h(), config.dt(), config.grid.t_max, 2.0, InitialData::default_wave().outer_extent())?;
    let control_data = match config.problem {
        Problem::Wave => InitialData::default_wave(),
        Problem::Dirac => InitialData::default_dirac(),
    };
    jobs.push(Job { spec: control, grid: control_grid, data: control_data, samplers: vec![control_sampler()] });

    let workers = threads()?;
    let mut log = vec![format!(
        "tail-lab {} problem {:?} n = {} parameter = {} modes {:?} t_max = {} h = {} dt = {} threads {}",
        env!("CARGO_PKG_VERSION"),
        config.problem,
        config.n,
        config.parameter,
        config.modes,
        config.grid.t_max,
        config.h(),
        config.dt(),
        workers
    )];
    let results = run_jobs(&jobs, config.sample_every(), workers);
    let mut failure = None;
    for (job, result) in jobs.iter().zip(results) {
        let is_control = std::ptr::eq(job, jobs.last().expect("control job"));
        match result {
            Ok((out, elapsed)) => {
                let d = &out.diagnostics;
                log.push(format!(
                    "{}{}: {} points, R = {}, {} steps, conserved {:.6e} -> {:.6e}, max drift {:.3e}, {elapsed:.2} s",
                    job.spec,
                    if is_control { " (control)" } else { "" },
                    job.grid.points,
                    d.outer_radius,
                    d.steps,
                    d.initial,
                    d.last,
                    d.max_relative_drift
                ));
                for s in &out.series {
                    let stem = if is_control { CONTROL_ID.to_string() } else { series_id(&job.spec, &s.id) };
                    series::write(&dir.join(format!("{stem}.csv")), &stem, &s.times, &s.values)?;
                }
            }
            Err(e) => {
                log.push(format!("{}: FAILED: {e}", job.spec));
                failure.get_or_insert(e);
            }
        }
    }
    fs::write(dir.join(LOG_FILE), log.join("\n") + "\n")?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    fs::write(dir.join(COMPLETE_MARKER), "")?;
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub passed: bool,
    /// Numerical floor measured on the control run.
    pub control_floor: f64,
    pub report: DecayReport,
    /// Trajectories skipped because no rate applies to them.
    pub skipped: Vec<String>,
}

/// Fits the series of a completed run and compares them with the rate table.
pub fn verify(config: &RunConfig, force: bool) -> Result<VerifyOutput, CliError> {
    let dir = &config.output_dir;
    match run_state(dir) {
        RunState::Absent => {
            simulate(config, false)?;
        }
        RunState::Partial if !force => {
            return Err(CliError::Config(format!(
                "partial run detected in {} (no completion marker); rerun with --force to simulate again",
                dir.display()
            )))
        }
        RunState::Partial => {
            simulate(config, true)?;
        }
        RunState::Complete => {
            let text = fs::read_to_string(dir.join(CONFIG_FILE))?;
            let stored: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("stored config: {e}")))?;
            if stored != *config {
                if !force {
                    return Err(CliError::Config(format!(
                        "{} holds a run with a different config; use --force to simulate again",
                        dir.display()
                    )));
                }
                simulate(config, true)?;
            }
        }
    }

    let control = series::read(&dir.join(format!("{CONTROL_ID}.csv")))?;
    let control_floor = floor_from_control(&control);
    let table = predicted_rates(config.problem, config.n, config.parameter, config.modes.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0))?;
    let radius_power = match config.problem {
        // The solver samples the reduced field f = r ψ.
        Problem::Dirac => 1.0,
        Problem::Wave => 0.0,
    };
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for spec in config.mode_specs()? {
        for t in &config.trajectories {
            let id = series_id(&spec, &t.id);
            if matches!(t.trajectory, Trajectory::NullOffset(_)) {
                skipped.push(format!("{id}: null trajectories approach scri+, which carries no decay rate"));
                continue;
            }
            let samples = series::read(&dir.join(format!("{id}.csv")))?;
            let peak = samples.iter().map(|s| s.1.norm()).fold(0.0, f64::max);
            let policy = config.window_for(&t.trajectory).with_floor(control_floor.max(VANISHING_RATIO * peak));
            let outcome = fit_rate(&samples, &policy).map_err(|e| match e {
                tail_lab::Error::WindowTooShort(m) => CliError::Config(format!("{id}: {m}; increase grid.t_max or adjust window")),
                other => other.into(),
            })?;
            if let FitOutcome::Fit(f) = &outcome {
                if !(f.slope_extrapolated.is_finite() && f.slope_raw.is_finite()) {
                    return Err(CliError::Numerical(format!("{id}: non-finite slope")));
                }
            }
            fits.push(LabeledFit { id, mode: spec, trajectory: t.trajectory, radius_power, outcome, floor: control_floor });
        }
    }
    let report = compare(&fits, &table, config.tolerance)?;
    let output = VerifyOutput { passed: report.passed(), control_floor, report, skipped };
    fs::write(dir.join(REPORT_JSON), serde_json::to_string_pretty(&output).expect("report serializes") + "\n")?;
    fs::write(dir.join(REPORT_TXT), render_report(&output))?;
    Ok(output)
}

pub fn render_report(out: &VerifyOutput) -> String {
    let mut text = out.report.to_string();
    text.push_str(&format!("control floor {:.3e}\n", out.control_floor));
    for s in &out.skipped {
        text.push_str(&format!("skipped: {s}\n"));
    }
    text.push_str(if out.passed { "PASS\n" } else { "FAIL\n" });
    text
}

pub fn load_report(dir: &Path) -> Result<VerifyOutput, CliError> {
    let path: PathBuf = dir.join(REPORT_JSON);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e} (run verify first)", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
