//! Compactification charts near future timelike infinity and trajectory
//! classification.
//!
//! All charts are future oriented and independent of the angular variable.
//! The defining function near the light cone is `v = (t - r)/(t + r) = 1 - x`,
//! so the fiber coordinate at null infinity is the retarded time `s = t - r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexsets::IndexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    /// Interior of the conic face at timelike infinity (rays `r = γ t`).
    CPlus,
    /// Front face of the blow-up of the north pole (bounded spatial sets).
    TfPlus,
    /// Conic face over `r = 0`.
    Cf,
    ScriPlus,
    CornerCTf,
    CornerTfCf,
    CornerCScri,
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Face::CPlus => "C+",
            Face::TfPlus => "tf+",
            Face::Cf => "cf",
            Face::ScriPlus => "scri+",
            Face::CornerCTf => "C+ ∩ tf+",
            Face::CornerTfCf => "tf+ ∩ cf",
            Face::CornerCScri => "C+ ∩ scri+",
        };
        f.write_str(s)
    }
}

/// Limiting face of a trajectory, with the interior coordinate of the limit
/// point when the limit is in the interior of a face: `x` on `C+`, `y` on
/// `tf+` and the retarded time `s` on null infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceLabel {
    pub face: Face,
    pub interior_coordinate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Trajectory {
    /// `r = r0` for all `t`.
    FixedR(f64),
    /// `r = γ t`, `0 < γ < 1`.
    Ray(f64),
    /// `r = t - c`.
    NullOffset(f64),
}

impl Trajectory {
    /// Radius along the trajectory at time `t`. May be negative for
    /// `NullOffset` at early times.
    pub fn radius(&self, t: f64) -> f64 {
        match *self {
            Trajectory::FixedR(r0) => r0,
            Trajectory::Ray(gamma) => gamma * t,
            Trajectory::NullOffset(c) => t - c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Trajectory::FixedR(r0) if !(r0 > 0.0 && r0.is_finite()) => {
                Err(Error::OutOfRange(format!("fixed radius {r0} must be positive")))
            }
            Trajectory::Ray(g) if !(g > 0.0 && g < 1.0) => {
                Err(Error::OutOfRange(format!("ray slope {g} must lie in (0, 1)")))
            }
            Trajectory::NullOffset(c) if !c.is_finite() => {
                Err(Error::OutOfRange(format!("null offset {c} must be finite")))
            }
            _ => Ok(()),
        }
    }

    /// Power of `t` picked up by a factor `r^p` along this trajectory:
    /// `p` along rays and null offsets, `0` at fixed radius.
    pub fn radius_power_shift(&self, p: f64) -> f64 {
        match self {
            Trajectory::FixedR(_) => 0.0,
            Trajectory::Ray(_) | Trajectory::NullOffset(_) => p,
        }
    }
}

impl std::fmt::Display for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Trajectory::FixedR(r) => write!(f, "fixed_r({r})"),
            Trajectory::Ray(g) => write!(f, "ray({g})"),
            Trajectory::NullOffset(c) => write!(f, "null({c})"),
        }
    }
}

/// Radial compactification onto the quarter sphere: `(t, r, 1)/sqrt(1+t²+r²)`.
pub fn quarter_sphere(t: f64, r: f64) -> [f64; 3] {
    let norm = (1.0 + t * t + r * r).sqrt();
    [t / norm, r / norm, 1.0 / norm]
}

/// Stereographic image in the half disk: `(t, r)/(1 + sqrt(1+t²+r²))`.
pub fn half_disk(t: f64, r: f64) -> [f64; 2] {
    let denom = 1.0 + (1.0 + t * t + r * r).sqrt();
    [t / denom, r / denom]
}

/// Coordinates `ρ = 1/(t+r)`, `x = 2r/(t+r)` valid near the conic face.
pub fn appendix_coords(t: f64, r: f64) -> Result<(f64, f64)> {
    let sum = t + r;
    if !(sum > 0.0) {
        return Err(Error::OutOfRange(format!("t + r = {sum} must be positive")));
    }
    Ok((1.0 / sum, 2.0 * r / sum))
}

/// Inverse of [`appendix_coords`]: returns `(t, r)`.
pub fn appendix_coords_inverse(rho: f64, x: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::OutOfRange(format!("rho = {rho} must be positive")));
    }
    Ok(((2.0 - x) / (2.0 * rho), x / (2.0 * rho)))
}

/// Blow-up coordinates at the north pole: `ρ_tf = x + ρ`, `y = (x-ρ)/(x+ρ)`.
pub fn tf_coords(x: f64, rho: f64) -> Result<(f64, f64)> {
    let sum = x + rho;
    if !(sum > 0.0) {
        return Err(Error::OutOfRange(format!("x + rho = {sum} must be positive")));
    }
    Ok((sum, (x - rho) / sum))
}

/// Fiber coordinate at null infinity, `s = v/ρ = t - r`.
pub fn scri_coords(t: f64, r: f64) -> f64 {
    t - r
}

pub fn classify_trajectory(traj: &Trajectory) -> Result<FaceLabel> {
    traj.validate()?;
    Ok(match *traj {
        Trajectory::FixedR(r0) => FaceLabel {
            face: Face::TfPlus,
            interior_coordinate: Some((2.0 * r0 - 1.0) / (2.0 * r0 + 1.0)),
        },
        Trajectory::Ray(gamma) => FaceLabel {
            face: Face::CPlus,
            interior_coordinate: Some(2.0 * gamma / (1.0 + gamma)),
        },
        Trajectory::NullOffset(c) => FaceLabel {
            face: Face::ScriPlus,
            interior_coordinate: Some(c),
        },
    })
}

/// Finite sum `u(z, w) = Σ c_ab z^a w^b` over `a ∈ E`, `b ∈ F`, with `z`
/// defining the face carrying `E` and `w` the face carrying `F`. Used as a
/// fixture for exponent fits in the blown-up chart `(s, w) = (z/w, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPhg {
    pub terms: Vec<(f64, f64, f64)>,
}

impl SyntheticPhg {
    pub fn eval(&self, z: f64, w: f64) -> f64 {
        self.terms.iter().map(|&(a, b, c)| c * z.powf(a) * w.powf(b)).sum()
    }

    /// Value at blown-up coordinates `(s, w)`, i.e. at `z = s w`.
    pub fn eval_blown_up(&self, s: f64, w: f64) -> f64 {
        self.eval(s * w, w)
    }
}

/// Builds the fixture from the two index sets. `coeffs` is indexed
/// row-major over `E × F`; missing entries default to zero.
pub fn synthetic_phg(e: &IndexSet, f: &IndexSet, coeffs: &[f64]) -> SyntheticPhg {
    let mut terms = Vec::with_capacity(e.len() * f.len());
    for (i, ea) in e.elements().iter().enumerate() {
        for (k, fb) in f.elements().iter().enumerate() {
            let c = coeffs.get(i * f.len() + k).copied().unwrap_or(0.0);
            terms.push((ea.exponent, fb.exponent, c));
        }
    }
    SyntheticPhg { terms }
}
