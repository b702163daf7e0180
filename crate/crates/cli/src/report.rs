//! Aggregation of verified runs and plot emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tail_lab::decayfit::FitOutcome;
use tail_lab::spectrum::ModeSpec;

use crate::error::CliError;
use crate::plot::{self, Guide, Plot};
use crate::run::{self, VerifyOutput};
use crate::series;

pub struct Summary {
    pub text: String,
    pub passed: bool,
    pub plots: Vec<PathBuf>,
}

fn run_name(dir: &Path) -> String {
    dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn plot_run(dir: &Path, out: &VerifyOutput, target: &Path, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for e in &out.report.entries {
        let samples = series::read(&dir.join(format!("{}.csv", e.id)))?;
        let (guide, fitted) = match &e.outcome {
            FitOutcome::Fit(f) => {
                let t_hi = f.window.1;
                let anchor = (t_hi, f.amplitude * t_hi.powf(f.slope_raw));
                let span = (f.window.0 / 3.0, t_hi);
                (Some(Guide { slope: e.expected_slope, anchor, span }), format!("fitted {:.4}", f.slope_extrapolated))
            }
            FitOutcome::BelowFloor { .. } => (None, "below floor".to_string()),
        };
        let title = format!("{} {}: expected slope {:.4}, {fitted}", e.mode, e.trajectory, e.expected_slope);
        let ylabel = match e.mode {
            ModeSpec::Wave { .. } => "|u|",
            ModeSpec::Dirac { .. } => "|f|",
        };
        let svg = plot::render(&Plot { title, samples: &samples, ylabel, guide });
        let path = target.join(format!("{prefix}{}.svg", e.id));
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

/// Reads `report.json` from every run directory, writes one SVG per
/// trajectory and returns the combined table. Plots go to `out`, or to
/// `<run>/plots` when no output directory is given.
pub fn aggregate(runs: &[PathBuf], out: Option<&Path>) -> Result<Summary, CliError> {
    let mut text = String::new();
    let mut passed = true;
    let mut plots = Vec::new();
    let _ = writeln!(text, "{:<20} {:<18} {:<14} {:>11} {:>11}  verdict", "run", "series", "trajectory", "expected", "fitted");
    for dir in runs {
        let report = run::load_report(dir)?;
        let name = run_name(dir);
        passed &= report.passed;
        for e in &report.report.entries {
            let fitted = match &e.outcome {
                FitOutcome::Fit(f) => format!("{:.5}", f.slope_extrapolated),
                FitOutcome::BelowFloor { .. } => "below floor".into(),
            };
            let _ = writeln!(text, "{name:<20} {:<18} {:<14} {:>11.6} {fitted:>11}  {}", e.id, e.trajectory.to_string(), e.expected_slope, e.verdict);
        }
        let (target, prefix) = match out {
            Some(o) => (o.to_path_buf(), format!("{name}_")),
            None => (dir.join("plots"), String::new()),
        };
        fs::create_dir_all(&target)?;
        plots.extend(plot_run(dir, &report, &target, &prefix)?);
    }
    let _ = writeln!(text, "{} runs, {}", runs.len(), if passed { "all passed" } else { "FAILURES present" });
    if let Some(o) = out {
        fs::write(o.join("summary.txt"), &text)?;
    }
    Ok(Summary { text, passed, plots })
}
