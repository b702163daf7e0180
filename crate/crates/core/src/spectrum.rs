//! Separated-sector spectral data.
//!
//! A [`ModeSpec`] is one spherical-harmonic sector of the inverse-square wave
//! problem (dimension `n`, coupling, harmonic degree `j`) or one `κ` sector of
//! the massless Dirac–Coulomb problem (charge `Z`, `κ ∈ ℤ∖{0}`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide whether `ν` or `1/2 + ν` is an integer.
pub const INTEGER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Wave,
    Dirac,
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Problem::Wave => f.write_str("wave"),
            Problem::Dirac => f.write_str("dirac"),
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wave" => Ok(Problem::Wave),
            "dirac" => Ok(Problem::Dirac),
            other => Err(Error::OutOfRange(format!("unknown problem `{other}`"))),
        }
    }
}

/// One separated sector. Construct through [`ModeSpec::wave`] or
/// [`ModeSpec::dirac`], which enforce the coupling bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ModeSpec {
    Wave { n: u32, coupling: f64, j: u32 },
    Dirac { z: f64, kappa: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveExceptional {
    Generic,
    /// `1/2 + ν_j` is an integer: a scattering pole that is not a resolvent pole.
    ResolventRegular,
    /// `ν_j` is an integer.
    IntegerNu,
}

/// Lower bound on the wave coupling, `-((n-2)/2)^2`.
pub fn coupling_threshold(n: u32) -> f64 {
    let half = (n as f64 - 2.0) / 2.0;
    -half * half
}

pub fn sphere_eigenvalue(j: u32, n: u32) -> f64 {
    let j = j as f64;
    j * (j + n as f64 - 2.0)
}

/// `ν_j = sqrt(((n-2)/2)^2 + λ_j + coupling)`.
pub fn nu(j: u32, n: u32, coupling: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("dimension n = {n} must be at least 3")));
    }
    let threshold = coupling_threshold(n);
    if !(coupling > threshold) {
        return Err(Error::CouplingBelowThreshold { coupling, threshold });
    }
    Ok((-threshold + sphere_eigenvalue(j, n) + coupling).sqrt())
}

/// Indicial exponent `sqrt(κ² - Z²)` of the Dirac–Coulomb sector.
pub fn dirac_indicial(kappa: i32, z: f64) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::InvalidMode("kappa must be nonzero".into()));
    }
    if !(z.abs() < 0.5) {
        return Err(Error::OutOfRange(format!("charge |Z| = {} must be below 1/2", z.abs())));
    }
    let k = kappa as f64;
    Ok((k * k - z * z).sqrt())
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= INTEGER_TOL
}

pub fn classify_nu(nu: f64) -> WaveExceptional {
    if near_integer(0.5 + nu) {
        WaveExceptional::ResolventRegular
    } else if near_integer(nu) {
        WaveExceptional::IntegerNu
    } else {
        WaveExceptional::Generic
    }
}

impl ModeSpec {
    pub fn wave(n: u32, coupling: f64, j: u32) -> Result<Self> {
        nu(j, n, coupling)?;
        Ok(ModeSpec::Wave { n, coupling, j })
    }

    pub fn dirac(z: f64, kappa: i32) -> Result<Self> {
        dirac_indicial(kappa, z)?;
        Ok(ModeSpec::Dirac { z, kappa })
    }

    pub fn problem(&self) -> Problem {
        match self {
            ModeSpec::Wave { .. } => Problem::Wave,
            ModeSpec::Dirac { .. } => Problem::Dirac,
        }
    }

    /// Spatial dimension (3 for Dirac).
    pub fn dimension(&self) -> u32 {
        match *self {
            ModeSpec::Wave { n, .. } => n,
            ModeSpec::Dirac { .. } => 3,
        }
    }

    /// `ν_j` for a wave sector, `sqrt(κ² - Z²)` for a Dirac sector.
    pub fn exponent(&self) -> Result<f64> {
        match *self {
            ModeSpec::Wave { n, coupling, j } => nu(j, n, coupling),
            ModeSpec::Dirac { z, kappa } => dirac_indicial(kappa, z),
        }
    }

    /// Re-checks the constructor invariants; useful after deserialization.
    pub fn validate(&self) -> Result<()> {
        self.exponent().map(|_| ())
    }

    /// True for the flat baselines (`coupling = 0` or `Z = 0`).
    pub fn is_flat(&self) -> bool {
        match *self {
            ModeSpec::Wave { coupling, .. } => coupling == 0.0,
            ModeSpec::Dirac { z, .. } => z == 0.0,
        }
    }
}

impl std::fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeSpec::Wave { n, coupling, j } => write!(f, "wave(n={n}, coupling={coupling}, j={j})"),
            ModeSpec::Dirac { z, kappa } => write!(f, "dirac(Z={z}, kappa={kappa})"),
        }
    }
}

pub fn wave_mode_exceptional(spec: &ModeSpec) -> Result<WaveExceptional> {
    match spec {
        ModeSpec::Wave { .. } => Ok(classify_nu(spec.exponent()?)),
        ModeSpec::Dirac { .. } => Err(Error::InvalidMode("exceptional classification applies to wave sectors".into())),
    }
}
