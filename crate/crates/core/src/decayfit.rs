//! Late-time slope extraction and comparison with predicted rates.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{classify_trajectory, Face, FaceLabel, Trajectory};
use crate::indexsets::RateTable;
use crate::spectrum::ModeSpec;

pub const MIN_SAMPLES: usize = 50;
/// Points of the logarithmic resampling used for local slopes.
pub const RESAMPLE_POINTS: usize = 64;
/// Crossing times of the pulse excluded after it passes a sampler.
pub const PULSE_CROSSINGS: f64 = 5.0;
/// Required ratio of the tail prefactor to the numerical floor.
pub const SHARPNESS_MARGIN: f64 = 1e3;

/// Which samples enter a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    /// Explicit bounds; `None` on `start` means one decade below `end`, `None`
    /// on `end` means the last sample.
    pub start: Option<f64>,
    pub end: Option<f64>,
    /// Samples before this time are always dropped (pulse passage).
    pub exclude_before: f64,
    pub min_decades: f64,
    /// Tails whose magnitudes never exceed this are reported as vanishing.
    pub floor: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self { start: None, end: None, exclude_before: 0.0, min_decades: 1.0, floor: 0.0 }
    }
}

impl WindowPolicy {
    pub fn between(start: f64, end: f64) -> Self {
        Self { start: Some(start), end: Some(end), ..Self::default() }
    }

    pub fn with_floor(self, floor: f64) -> Self {
        Self { floor, ..self }
    }

    /// Last decade of the series, starting no earlier than
    /// [`PULSE_CROSSINGS`] pulse widths after the pulse has passed the
    /// trajectory.
    pub fn for_trajectory(traj: &Trajectory, pulse_extent: f64, pulse_width: f64) -> Self {
        let passage = match *traj {
            Trajectory::FixedR(r) => r + pulse_extent,
            Trajectory::Ray(gamma) => pulse_extent / (1.0 - gamma),
            Trajectory::NullOffset(_) => 0.0,
        };
        Self { exclude_before: passage + PULSE_CROSSINGS * pulse_width, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope_raw: f64,
    pub slope_extrapolated: f64,
    pub window: (f64, f64),
    /// RMS misfit of the straight line in `ln|u|` against `ln t`.
    pub residual: f64,
    pub sign_changes_in_window: usize,
    /// `A` in `|u| ≈ A t^slope_raw`.
    pub amplitude: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum FitOutcome {
    Fit(FitResult),
    BelowFloor { floor: f64, max_in_window: f64 },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&FitResult> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::BelowFloor { .. } => None,
        }
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms residual)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Constant term of the least-squares parabola through `(x, y)`.
fn quadratic_intercept(x: &[f64], y: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi / scale;
        let basis = [1.0, u, u * u];
        for r in 0..3 {
            b[r] += basis[r] * yi;
            for c in 0..3 {
                a[r][c] += basis[r] * basis[c];
            }
        }
    }
    // Gaussian elimination; the normal matrix is positive definite.
    for k in 0..3 {
        for r in k + 1..3 {
            let f = a[r][k] / a[k][k];
            for c in k..3 {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut sol = [0.0; 3];
    for r in (0..3).rev() {
        let tail: f64 = (r + 1..3).map(|c| a[r][c] * sol[c]).sum();
        sol[r] = (b[r] - tail) / a[r][r];
    }
    sol[0]
}

/// Fits `|u| ~ t^p` on the policy window of a series of `(t, u)` pairs.
pub fn fit_rate(series: &[(f64, Complex64)], policy: &WindowPolicy) -> Result<FitOutcome> {
    let last = series.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let end = policy.end.unwrap_or(last);
    let start = policy.start.unwrap_or(end / 10f64.powf(policy.min_decades)).max(policy.exclude_before);
    let window: Vec<(f64, Complex64)> = series.iter().copied().filter(|(t, _)| *t >= start && *t <= end && *t > 0.0).collect();
    if window.len() < MIN_SAMPLES {
        return Err(Error::WindowTooShort(format!("{} samples in [{start}, {end}], need {MIN_SAMPLES}", window.len())));
    }
    let (t_lo, t_hi) = (window[0].0, window[window.len() - 1].0);
    // One percent of slack for the sample spacing at the window ends.
    if (t_hi / t_lo).log10() < policy.min_decades + 0.99f64.log10() - 1e-12 {
        return Err(Error::WindowTooShort(format!("[{t_lo}, {t_hi}] spans less than {} decade(s)", policy.min_decades)));
    }
    let max_in_window = window.iter().map(|(_, u)| u.norm()).fold(0.0, f64::max);
    if max_in_window <= policy.floor || window.iter().any(|(_, u)| u.norm() == 0.0) {
        return Ok(FitOutcome::BelowFloor { floor: policy.floor, max_in_window });
    }

    let lt: Vec<f64> = window.iter().map(|(t, _)| t.ln()).collect();
    let lu: Vec<f64> = window.iter().map(|(_, u)| u.norm().ln()).collect();
    let (intercept, slope_raw, residual) = line_fit(&lt, &lu);

    // Dominant component for sign counting.
    let use_re = window.iter().map(|(_, u)| u.re.abs()).sum::<f64>() >= window.iter().map(|(_, u)| u.im.abs()).sum::<f64>();
    let comp: Vec<f64> = window.iter().map(|(_, u)| if use_re { u.re } else { u.im }).collect();
    let sign_changes = comp.windows(2).filter(|w| w[0] * w[1] < 0.0).count();

    // Resample ln|u| uniformly in ln t, take centred local slopes and fit
    // p(t) = p_inf + c/t + d/t².
    let m = RESAMPLE_POINTS;
    let grid: Vec<f64> = (0..m).map(|i| lt[0] + (lt[lt.len() - 1] - lt[0]) * i as f64 / (m - 1) as f64).collect();
    let mut cursor = 0;
    let resampled: Vec<f64> = grid
        .iter()
        .map(|&g| {
            while cursor + 2 < lt.len() && lt[cursor + 1] < g {
                cursor += 1;
            }
            let (x0, x1) = (lt[cursor], lt[cursor + 1]);
            let w = ((g - x0) / (x1 - x0)).clamp(0.0, 1.0);
            lu[cursor] + w * (lu[cursor + 1] - lu[cursor])
        })
        .collect();
    let step = grid[1] - grid[0];
    let inv_t: Vec<f64> = (1..m - 1).map(|i| (-grid[i]).exp()).collect();
    let local: Vec<f64> = (1..m - 1).map(|i| (resampled[i + 1] - resampled[i - 1]) / (2.0 * step)).collect();
    let slope_extrapolated = quadratic_intercept(&inv_t, &local);

    Ok(FitOutcome::Fit(FitResult {
        slope_raw,
        slope_extrapolated,
        window: (t_lo, t_hi),
        residual,
        sign_changes_in_window: sign_changes,
        amplitude: intercept.exp(),
        samples: window.len(),
    }))
}

/// Prefactor `A` of `|u| ≈ A t^slope` for a successful fit.
pub fn amplitude_check(fit: &FitResult) -> f64 {
    fit.amplitude
}

/// Numerical tail floor from a control run that should vanish:
/// ten times the RMS over the final 5% of its samples.
pub fn floor_from_control(series: &[(f64, Complex64)]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let tail = &series[series.len() - (series.len() / 20).max(1)..];
    let ms = tail.iter().map(|(_, u)| u.norm_sqr()).sum::<f64>() / tail.len() as f64;
    10.0 * ms.sqrt()
}

/// A fitted series with the bookkeeping needed to compare it with a rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub id: String,
    pub mode: ModeSpec,
    pub trajectory: Trajectory,
    /// The sampled field is `r^radius_power` times the field the rates refer to.
    pub radius_power: f64,
    pub outcome: FitOutcome,
    /// Floor used for the sharpness check, zero if unknown.
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    VanishingTailConfirmed,
    /// A tail was fitted where none should exist, or vice versa.
    TailMismatch,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::VanishingTailConfirmed)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::VanishingTailConfirmed => "vanishing tail confirmed",
            Verdict::TailMismatch => "FAIL (tail mismatch)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub id: String,
    pub mode: ModeSpec,
    pub trajectory: Trajectory,
    pub face: FaceLabel,
    pub outcome: FitOutcome,
    /// Rate of the physical field (`u` or `ψ`) at this face.
    pub predicted_rate: f64,
    pub radius_power: f64,
    /// Expected slope of the sampled field after the `r`-power shift.
    pub expected_slope: f64,
    pub deviation: Option<f64>,
    /// Whether the tail prefactor clears the floor; `None` without a floor.
    pub sharp: Option<bool>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub tolerance: f64,
    pub entries: Vec<ReportEntry>,
    pub notices: Vec<String>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.passed())
    }
}

/// Matches each fit against the rate of its sector at the face its
/// trajectory approaches. Entries come out sorted by id.
pub fn compare(fits: &[LabeledFit], table: &RateTable, tol: f64) -> Result<DecayReport> {
    let mut entries = Vec::with_capacity(fits.len());
    for fit in fits {
        let face = classify_trajectory(&fit.trajectory)?;
        let row = table
            .mode(&fit.mode)
            .ok_or_else(|| Error::LabelMismatch { id: fit.id.clone(), label: format!("{}", fit.mode) })?;
        let predicted_rate = match face.face {
            Face::CPlus => row.rate_c_plus,
            Face::TfPlus => row.rate_tf_plus,
            other => return Err(Error::LabelMismatch { id: fit.id.clone(), label: format!("{other:?}") }),
        };
        let shift = fit.trajectory.radius_power_shift(fit.radius_power);
        let expected_slope = -predicted_rate + shift;
        let (deviation, sharp, verdict) = match (&fit.outcome, row.exceptional) {
            (FitOutcome::BelowFloor { .. }, true) => (None, None, Verdict::VanishingTailConfirmed),
            (FitOutcome::BelowFloor { .. }, false) => (None, Some(false), Verdict::TailMismatch),
            (FitOutcome::Fit(_), true) => (None, None, Verdict::TailMismatch),
            (FitOutcome::Fit(r), false) => {
                let deviation = r.slope_extrapolated - expected_slope;
                let sharp = (fit.floor > 0.0).then_some(r.amplitude > SHARPNESS_MARGIN * fit.floor);
                let ok = deviation.abs() <= tol && sharp != Some(false);
                (Some(deviation), sharp, if ok { Verdict::Pass } else { Verdict::Fail })
            }
        };
        entries.push(ReportEntry {
            id: fit.id.clone(),
            mode: fit.mode,
            trajectory: fit.trajectory,
            face,
            outcome: fit.outcome.clone(),
            predicted_rate,
            radius_power: fit.radius_power,
            expected_slope,
            deviation,
            sharp,
            verdict,
        });
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(DecayReport { tolerance: tol, entries, notices: table.notices.clone() })
}

impl fmt::Display for DecayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:<34} {:<14} {:>5} {:>9} {:>11} {:>11} {:>10}  verdict",
            "id", "mode", "trajectory", "face", "rate", "expected", "fitted", "deviation"
        )?;
        for e in &self.entries {
            let face = match e.face.face {
                Face::CPlus => "C+",
                Face::TfPlus => "tf+",
                _ => "other",
            };
            let (fitted, dev) = match (&e.outcome, e.deviation) {
                (FitOutcome::Fit(r), Some(d)) => (format!("{:.5}", r.slope_extrapolated), format!("{d:+.5}")),
                (FitOutcome::Fit(r), None) => (format!("{:.5}", r.slope_extrapolated), "-".into()),
                (FitOutcome::BelowFloor { .. }, _) => ("below floor".into(), "-".into()),
            };
            writeln!(
                f,
                "{:<18} {:<34} {:<14} {:>5} {:>9.6} {:>11.6} {:>11} {:>10}  {}",
                e.id,
                e.mode.to_string(),
                e.trajectory.to_string(),
                face,
                e.predicted_rate,
                e.expected_slope,
                fitted,
                dev,
                e.verdict
            )?;
        }
        writeln!(f, "tolerance {}", self.tolerance)?;
        for n in &self.notices {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}
