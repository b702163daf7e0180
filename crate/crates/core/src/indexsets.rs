//! Index-set algebra for the expansions at the faces of the compactified
//! spacetime.
//!
//! Exponents are stored as real decay exponents `a = iσ`, so an element
//! `(a, k)` stands for a term `ρ^a (log ρ)^k`. Every generator here produces
//! log power zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{self, ModeSpec, Problem, WaveExceptional};

/// Exponents closer than this are treated as the same element.
pub const EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexElement {
    pub exponent: f64,
    pub log_power: u32,
}

impl IndexElement {
    pub fn new(exponent: f64, log_power: u32) -> Self {
        Self { exponent, log_power }
    }
}

/// A finite truncation of an index set: every element with exponent below
/// `truncation` is present and none at or above it is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    elements: Vec<IndexElement>,
    truncation: f64,
}

impl IndexSet {
    /// Builds a set, dropping elements at or above `truncation`, sorting and
    /// merging duplicates.
    pub fn new(elements: impl IntoIterator<Item = IndexElement>, truncation: f64) -> Self {
        let mut elements: Vec<_> = elements.into_iter().filter(|e| e.exponent < truncation).collect();
        elements.sort_by(|a, b| a.exponent.total_cmp(&b.exponent).then(a.log_power.cmp(&b.log_power)));
        elements.dedup_by(|b, a| (a.exponent - b.exponent).abs() <= EXPONENT_TOL && a.log_power == b.log_power);
        Self { elements, truncation }
    }

    pub fn empty(truncation: f64) -> Self {
        Self { elements: Vec::new(), truncation }
    }

    pub fn from_exponents(exponents: &[f64], truncation: f64) -> Self {
        Self::new(exponents.iter().map(|&a| IndexElement::new(a, 0)), truncation)
    }

    pub fn elements(&self) -> &[IndexElement] {
        &self.elements
    }

    pub fn exponents(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.exponent)
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Smallest exponent, or the truncation when the set is empty. No
    /// element of the untruncated set lies below this value.
    fn lower_bound(&self) -> f64 {
        self.elements.first().map_or(self.truncation, |e| e.exponent)
    }

    pub fn contains_exponent(&self, a: f64, tol: f64) -> bool {
        self.elements.iter().any(|e| (e.exponent - a).abs() <= tol)
    }

    /// Union of two sets, truncated at the smaller truncation.
    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let truncation = self.truncation.min(other.truncation);
        IndexSet::new(self.elements.iter().chain(&other.elements).copied(), truncation)
    }
}

/// Minkowski sum `{(a₁+a₂, k₁+k₂)}`. The result is complete below
/// `min(L_A + min B, L_B + min A)`; an empty operand gives an empty result.
pub fn sum(a: &IndexSet, b: &IndexSet) -> IndexSet {
    let truncation = (a.truncation + b.lower_bound()).min(b.truncation + a.lower_bound());
    let pairs = a.elements.iter().flat_map(|x| {
        b.elements
            .iter()
            .map(move |y| IndexElement::new(x.exponent + y.exponent, x.log_power + y.log_power))
    });
    IndexSet::new(pairs, truncation)
}

/// Index sets of the lift of a function that is partially polyhomogeneous
/// with `E` at the first face and `F` at the second, after blowing up their
/// corner: `(E, E + F, F)` at (first face, front face, second face).
pub fn pullback_blowup(e_at_h1: &IndexSet, f_at_h2: &IndexSet) -> (IndexSet, IndexSet, IndexSet) {
    (e_at_h1.clone(), sum(e_at_h1, f_at_h2), f_at_h2.clone())
}

/// Least exponent; among equal exponents the larger log power wins.
pub fn min_exponent(set: &IndexSet) -> Result<(f64, u32)> {
    let first = set.elements.first().ok_or(Error::EmptyIndexSet)?;
    let k = set
        .elements
        .iter()
        .take_while(|e| (e.exponent - first.exponent).abs() <= EXPONENT_TOL)
        .map(|e| e.log_power)
        .max()
        .unwrap_or(first.log_power);
    Ok((first.exponent, k))
}

fn ladder(base: f64, truncation: f64, out: &mut Vec<IndexElement>) {
    let mut a = base;
    while a < truncation {
        out.push(IndexElement::new(a, 0));
        a += 1.0;
    }
}

/// Runs `visit(j, ν_j)` over all harmonics with `offset + ν_j < truncation`.
fn for_each_wave_mode(n: u32, coupling: f64, offset: f64, truncation: f64, mut visit: impl FnMut(u32, f64)) -> Result<()> {
    let mut j = 0;
    loop {
        let nu = spectrum::nu(j, n, coupling)?;
        if offset + nu >= truncation {
            return Ok(());
        }
        visit(j, nu);
        j += 1;
    }
}

/// Per-harmonic part of `E_IS`: `n/2 + k + ν_j`, empty when `1/2 + ν_j ∈ ℤ`.
pub fn wave_mode_e(n: u32, nu: f64, truncation: f64) -> IndexSet {
    let mut out = Vec::new();
    if spectrum::classify_nu(nu) != WaveExceptional::ResolventRegular {
        ladder(n as f64 / 2.0 + nu, truncation, &mut out);
    }
    IndexSet::new(out, truncation)
}

/// Per-harmonic part of `F_IS`: `-(n-2)/2 + ℓ + ν_j`, empty when `ν_j ∈ ℤ`.
pub fn wave_mode_f(n: u32, nu: f64, truncation: f64) -> IndexSet {
    let mut out = Vec::new();
    if spectrum::classify_nu(nu) != WaveExceptional::IntegerNu {
        ladder(-(n as f64 - 2.0) / 2.0 + nu, truncation, &mut out);
    }
    IndexSet::new(out, truncation)
}

#[allow(non_snake_case)]
pub fn generate_E_IS(n: u32, coupling: f64, truncation: f64) -> Result<IndexSet> {
    let mut out = Vec::new();
    for_each_wave_mode(n, coupling, n as f64 / 2.0, truncation, |_, nu| {
        out.extend_from_slice(wave_mode_e(n, nu, truncation).elements());
    })?;
    Ok(IndexSet::new(out, truncation))
}

#[allow(non_snake_case)]
pub fn generate_F_IS(n: u32, coupling: f64, truncation: f64) -> Result<IndexSet> {
    let mut out = Vec::new();
    for_each_wave_mode(n, coupling, -(n as f64 - 2.0) / 2.0, truncation, |_, nu| {
        out.extend_from_slice(wave_mode_f(n, nu, truncation).elements());
    })?;
    Ok(IndexSet::new(out, truncation))
}

fn dirac_sets(z: f64, offset: f64, truncation: f64) -> Result<IndexSet> {
    let mut out = Vec::new();
    let mut kappa = 1;
    loop {
        // ±κ share the exponent, so one sign suffices.
        let s = spectrum::dirac_indicial(kappa, z)?;
        if offset + s >= truncation {
            break;
        }
        ladder(offset + s, truncation, &mut out);
        kappa += 1;
    }
    Ok(IndexSet::new(out, truncation))
}

/// `E_DC`: `2 + ℓ + sqrt(κ² - Z²)`.
#[allow(non_snake_case)]
pub fn generate_E_DC(z: f64, truncation: f64) -> Result<IndexSet> {
    dirac_sets(z, 2.0, truncation)
}

/// `F_DC`: `-1 + j + sqrt(κ² - Z²)`.
#[allow(non_snake_case)]
pub fn generate_F_DC(z: f64, truncation: f64) -> Result<IndexSet> {
    dirac_sets(z, -1.0, truncation)
}

/// One row of a [`RateTable`]: decay rates of a single separated sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRate {
    pub mode: ModeSpec,
    pub rate_c_plus: f64,
    pub rate_tf_plus: f64,
    /// Set when the sector carries no tail (`1/2 + ν_j ∈ ℤ`).
    pub exceptional: bool,
}

/// Predicted decay exponents of `t`: along rays (`C+`) and at fixed spatial
/// points (`tf+`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub problem: Problem,
    pub n: u32,
    /// Coupling for the wave problem, charge for Dirac.
    pub parameter: f64,
    pub rate_c_plus: f64,
    pub rate_tf_plus: f64,
    /// The leading harmonic was skipped because `1/2 + ν_0` is an integer.
    pub exceptional_branch: bool,
    pub per_mode: Vec<ModeRate>,
    pub notices: Vec<String>,
}

impl RateTable {
    pub fn mode(&self, mode: &ModeSpec) -> Option<&ModeRate> {
        self.per_mode.iter().find(|m| &m.mode == mode)
    }
}

/// Decay rates from the index sets.
///
/// The rate along rays is `min E`. At fixed points, terms of `E + F` pair an
/// `E` term and an `F` term of the same sector, so the rate is the least
/// mode-restricted sum; outside the exceptional branch this equals
/// `min(E + F)`. `jmax` bounds the per-mode rows (harmonic degree, or `|κ| - 1`).
pub fn predicted_rates(problem: Problem, n: u32, parameter: f64, jmax: u32) -> Result<RateTable> {
    match problem {
        Problem::Wave => wave_rates(n, parameter, jmax),
        Problem::Dirac => {
            if n != 3 {
                return Err(Error::OutOfRange(format!("the Dirac–Coulomb problem is posed in n = 3, got {n}")));
            }
            dirac_rates(parameter, jmax)
        }
    }
}

fn wave_rates(n: u32, coupling: f64, jmax: u32) -> Result<RateTable> {
    let mut per_mode = Vec::new();
    for j in 0..=jmax {
        let nu = spectrum::nu(j, n, coupling)?;
        per_mode.push(ModeRate {
            mode: ModeSpec::wave(n, coupling, j)?,
            rate_c_plus: n as f64 / 2.0 + nu,
            rate_tf_plus: 1.0 + 2.0 * nu,
            exceptional: spectrum::classify_nu(nu) == WaveExceptional::ResolventRegular,
        });
    }

    // The leading sector is j = 0 unless 1/2 + ν_0 is an integer, in which
    // case it is j = 1.
    let nu0 = spectrum::nu(0, n, coupling)?;
    let j_lead = match spectrum::classify_nu(nu0) {
        WaveExceptional::Generic => 0,
        WaveExceptional::ResolventRegular => 1,
        WaveExceptional::IntegerNu => {
            return Err(Error::Unsupported(format!(
                "ν_0 = {nu0} is an integer; the fixed-point index set is not available for coupling {coupling} in n = {n}"
            )))
        }
    };
    let nu_lead = spectrum::nu(j_lead, n, coupling)?;
    let lead_kind = spectrum::classify_nu(nu_lead);
    if lead_kind == WaveExceptional::IntegerNu {
        return Err(Error::Unsupported(format!("ν_{j_lead} = {nu_lead} is an integer")));
    }

    let mut notices = Vec::new();
    if coupling == 0.0 {
        notices.push("coupling = 0: flat baseline, sharpness not asserted".to_string());
    }
    if j_lead > 0 {
        notices.push(format!(
            "exceptional (odd integer): 1/2 + ν_0 is an integer, sector j = 0 has no tail; leading sector is j = {j_lead}"
        ));
    }

    let (rate_c_plus, rate_tf_plus) = if lead_kind == WaveExceptional::ResolventRegular {
        // Every sector is Huygens-type (flat odd dimension); the generated
        // sets are empty and only the formal values of the leading sector remain.
        notices.push("every sector has 1/2 + ν_j integer: no tail, rates are formal".to_string());
        (n as f64 / 2.0 + nu_lead, 1.0 + 2.0 * nu_lead)
    } else {
        // Truncation a little above the leading sector so the generated sets
        // are complete where the minima live.
        let l_e = n as f64 / 2.0 + nu_lead + 1.5;
        let l_f = -(n as f64 - 2.0) / 2.0 + nu_lead + 1.5;
        let e = generate_E_IS(n, coupling, l_e)?;
        let (rate_c_plus, _) = min_exponent(&e)?;

        let mut diagonal = IndexSet::empty(f64::INFINITY);
        for_each_wave_mode(n, coupling, n as f64 / 2.0, l_e, |_, nu| {
            let mode_sum = sum(&wave_mode_e(n, nu, l_e), &wave_mode_f(n, nu, l_f));
            diagonal = diagonal.union(&mode_sum);
        })?;
        let (rate_tf_plus, _) = min_exponent(&diagonal)?;
        (rate_c_plus, rate_tf_plus)
    };

    Ok(RateTable {
        problem: Problem::Wave,
        n,
        parameter: coupling,
        rate_c_plus,
        rate_tf_plus,
        exceptional_branch: j_lead > 0,
        per_mode,
        notices,
    })
}

fn dirac_rates(z: f64, jmax: u32) -> Result<RateTable> {
    let s1 = spectrum::dirac_indicial(1, z)?;
    let e = generate_E_DC(z, 2.0 + s1 + 1.5)?;
    let f = generate_F_DC(z, -1.0 + s1 + 1.5)?;
    let (rate_c_plus, _) = min_exponent(&e)?;
    let (rate_tf_plus, _) = min_exponent(&sum(&e, &f))?;
    let mut per_mode = Vec::new();
    for k in 1..=(jmax as i32 + 1) {
        for kappa in [-k, k] {
            let s = spectrum::dirac_indicial(kappa, z)?;
            per_mode.push(ModeRate {
                mode: ModeSpec::dirac(z, kappa)?,
                rate_c_plus: 2.0 + s,
                rate_tf_plus: 1.0 + 2.0 * s,
                exceptional: false,
            });
        }
    }
    let mut notices = Vec::new();
    if z == 0.0 {
        notices.push("Z = 0: flat baseline, sharpness not asserted".to_string());
    }
    Ok(RateTable {
        problem: Problem::Dirac,
        n: 3,
        parameter: z,
        rate_c_plus,
        rate_tf_plus,
        exceptional_branch: false,
        per_mode,
        notices,
    })
}
