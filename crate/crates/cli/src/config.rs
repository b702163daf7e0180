//! Run configuration, stored as JSON with a schema version.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tail_lab::decayfit::WindowPolicy;
use tail_lab::evolve::{self, Grid, InitialData, Profile};
use tail_lab::geometry::Trajectory;
use tail_lab::spectrum::{ModeSpec, Problem};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub id: String,
    pub trajectory: Trajectory,
}

/// Overrides applied on top of the default fit window of each trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_decades: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: Problem,
    /// Spatial dimension; must be 3 for the Dirac problem.
    pub n: u32,
    /// Coupling `𝔣` for the wave problem, charge `Z` for Dirac.
    pub parameter: f64,
    /// Harmonic degrees `j` (wave) or `κ` values (Dirac).
    pub modes: Vec<i32>,
    pub grid: GridOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_data: Option<InitialData>,
    pub trajectories: Vec<TrajectoryConfig>,
    pub output_dir: PathBuf,
    pub tolerance: f64,
    /// Time between recorded samples.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowOverrides>,
}

fn default_sample_interval() -> f64 {
    0.04
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn h(&self) -> f64 {
        self.grid.h.unwrap_or(evolve::DEFAULT_H)
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt.unwrap_or(match self.problem {
            Problem::Wave => evolve::DEFAULT_WAVE_DT,
            Problem::Dirac => evolve::DEFAULT_DIRAC_DT,
        })
    }

    pub fn data(&self) -> InitialData {
        self.initial_data.unwrap_or(match self.problem {
            Problem::Wave => InitialData::default_wave(),
            Problem::Dirac => InitialData::default_dirac(),
        })
    }

    /// Width scale of the initial pulse, used by the default fit window.
    pub fn pulse_width(&self) -> f64 {
        match self.data().profile {
            Profile::GaussianBump { width, .. } => width,
            Profile::CInfBump { r1, r2, .. } => 0.5 * (r2 - r1),
        }
    }

    pub fn mode_specs(&self) -> Result<Vec<ModeSpec>, CliError> {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let spec = match self.problem {
                    Problem::Wave => {
                        let j = u32::try_from(m).map_err(|_| field(&format!("modes[{i}]"), "harmonic degree must be ≥ 0"))?;
                        ModeSpec::wave(self.n, self.parameter, j)
                    }
                    Problem::Dirac => ModeSpec::dirac(self.parameter, m),
                };
                spec.map_err(|e| field(&format!("modes[{i}]"), e))
            })
            .collect()
    }

    /// Grid for one sector, sized so no trajectory sees the outer wall.
    pub fn grid_for(&self, spec: &ModeSpec) -> Result<Grid, CliError> {
        let t_max = self.grid.t_max;
        let max_r = self.trajectories.iter().map(|t| t.trajectory.radius(t_max)).fold(0.0, f64::max);
        Grid::sized_for(spec, self.h(), self.dt(), t_max, max_r, self.data().outer_extent()).map_err(|e| field("grid", e))
    }

    pub fn sample_every(&self) -> usize {
        ((self.sample_interval / self.dt()).round() as usize).max(1)
    }

    pub fn window_for(&self, trajectory: &Trajectory) -> WindowPolicy {
        let base = WindowPolicy::for_trajectory(trajectory, self.data().outer_extent(), self.pulse_width());
        match &self.window {
            None => base,
            Some(w) => WindowPolicy {
                start: w.start.or(base.start),
                end: w.end.or(base.end),
                min_decades: w.min_decades.unwrap_or(base.min_decades),
                ..base
            },
        }
    }

    /// Checks every field against the preconditions of the library before
    /// any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        if self.problem == Problem::Dirac && self.n != 3 {
            return Err(field("n", "the Dirac problem is posed in n = 3"));
        }
        if self.n < 3 {
            return Err(field("n", "dimension must be at least 3"));
        }
        if !self.parameter.is_finite() {
            return Err(field("parameter", "must be finite"));
        }
        if self.modes.is_empty() {
            return Err(field("modes", "at least one mode is required"));
        }
        let mut seen = BTreeSet::new();
        for (i, m) in self.modes.iter().enumerate() {
            if !seen.insert(m) {
                return Err(field(&format!("modes[{i}]"), format!("duplicate mode {m}")));
            }
        }
        let specs = self.mode_specs()?;
        if !(self.grid.t_max > 0.0 && self.grid.t_max.is_finite()) {
            return Err(field("grid.t_max", "must be positive"));
        }
        if !(self.h() > 0.0 && self.h().is_finite()) {
            return Err(field("grid.h", "must be positive"));
        }
        if !(self.dt() > 0.0 && self.dt().is_finite()) {
            return Err(field("grid.dt", "must be positive"));
        }
        if self.problem == Problem::Wave && self.dt() > evolve::MAX_WAVE_COURANT * self.h() * (1.0 + 1e-12) {
            return Err(field("grid.dt", format!("wave runs need dt ≤ {} h", evolve::MAX_WAVE_COURANT)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(field("sample_interval", "must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(field("tolerance", "must be positive"));
        }
        if self.trajectories.is_empty() {
            return Err(field("trajectories", "at least one trajectory is required"));
        }
        let mut ids = BTreeSet::new();
        for (i, t) in self.trajectories.iter().enumerate() {
            let valid_id = !t.id.is_empty() && t.id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c));
            if !valid_id {
                return Err(field(&format!("trajectories[{i}].id"), "use letters, digits, '.', '_' or '-'"));
            }
            if !ids.insert(&t.id) {
                return Err(field(&format!("trajectories[{i}].id"), format!("duplicate id {}", t.id)));
            }
            t.trajectory.validate().map_err(|e| field(&format!("trajectories[{i}].trajectory"), e))?;
        }
        if let Some(w) = &self.window {
            let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
            if !positive(w.start) || !positive(w.end) || !positive(w.min_decades) {
                return Err(field("window", "bounds and min_decades must be positive"));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(field("output_dir", "must not be empty"));
        }
        let data = self.data();
        for spec in &specs {
            let grid = self.grid_for(spec)?;
            let (lo, hi) = data.profile.support();
            if !(hi > 0.0 && hi < grid.outer_radius()) || !data.weights.iter().all(|w| w.is_finite()) {
                return Err(field("initial_data", format!("support [{lo}, {hi}] and weights must be finite and inside the grid")));
            }
        }
        Ok(())
    }
}
