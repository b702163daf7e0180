//! Text output of the table-style subcommands.

use std::fmt::Write as _;

use num_complex::Complex64;
use tail_lab::indexsets::RateTable;
use tail_lab::resonance::{closed_form_resonances, locate_resonances_numeric, SearchBox};
use tail_lab::specfun::hyp2f1;
use tail_lab::spectrum::{nu, ModeSpec, Problem};

use crate::error::CliError;

/// Search-box padding around the closed-form lattice.
const BOX_PAD: f64 = 0.5;
const SEARCH_GRID: usize = 40;

pub fn rates(table: &RateTable) -> String {
    let mut out = String::new();
    let what = match table.problem {
        Problem::Wave => format!("wave, n = {}, coupling = {}", table.n, table.parameter),
        Problem::Dirac => format!("dirac, n = 3, Z = {}", table.parameter),
    };
    let odd = if table.exceptional_branch { "  exceptional (odd integer)" } else { "" };
    let _ = writeln!(out, "problem: {what}");
    let _ = writeln!(out, "rate along rays (C+):   {:.6}", table.rate_c_plus);
    let _ = writeln!(out, "rate at fixed r (tf+):  {:.6}{odd}", table.rate_tf_plus);
    let _ = writeln!(out, "per mode:");
    let _ = writeln!(out, "  {:<34} {:>10} {:>10}  note", "mode", "C+", "tf+");
    for row in &table.per_mode {
        let note = if row.exceptional { "no tail" } else { "" };
        let _ = writeln!(out, "  {:<34} {:>10.6} {:>10.6}  {note}", row.mode.to_string(), row.rate_c_plus, row.rate_tf_plus);
    }
    for n in &table.notices {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

fn fmt_c(z: Complex64) -> String {
    format!("{:+.12} {:+.12}i", z.re, z.im)
}

/// Closed-form lattice and, with `numeric`, the zeros located in a box
/// around it.
pub fn resonances(n: u32, coupling: f64, jmax: u32, kmax: u32, numeric: bool) -> Result<String, CliError> {
    let mut out = String::new();
    let _ = writeln!(out, "resonances σ_jk = -i(1/2 + ν_j + k), n = {n}, coupling = {coupling}");
    let _ = writeln!(out, "{:>3} {:>14} {:>3}  {:<36} {:<36} {:>9}", "j", "nu_j", "k", "closed form", "numeric", "|diff|");
    for j in 0..=jmax {
        let spec = ModeSpec::wave(n, coupling, j)?;
        let s = nu(j, n, coupling)?;
        let family = closed_form_resonances(&spec, kmax)?;
        let located = if numeric {
            let search = SearchBox::new((-BOX_PAD, BOX_PAD), (-(0.5 + s + kmax as f64) - BOX_PAD, -(0.5 + s) + BOX_PAD))?;
            match locate_resonances_numeric(&spec, search, SEARCH_GRID) {
                Ok(found) => Some(found),
                Err(tail_lab::Error::DegenerateConnection { argument }) => {
                    let _ = writeln!(out, "{j:>3} {s:>14.10}      degenerate connection (Gamma pole at {argument}); numeric search skipped");
                    None
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        for (k, sigma) in family.resonances.iter().enumerate() {
            let (num, diff) = match &located {
                Some(found) => match found.zeros.iter().min_by(|a, b| (*a - sigma).norm().total_cmp(&(*b - sigma).norm())) {
                    Some(z) => (fmt_c(*z), format!("{:.1e}", (z - sigma).norm())),
                    None => ("not found".into(), "-".into()),
                },
                None => ("-".into(), "-".into()),
            };
            let _ = writeln!(out, "{j:>3} {s:>14.10} {k:>3}  {:<36} {num:<36} {diff:>9}", fmt_c(*sigma));
        }
        if let Some(found) = &located {
            if found.zeros.len() != family.resonances.len() {
                let _ = writeln!(out, "    warning: {} zeros found for {} lattice points", found.zeros.len(), family.resonances.len());
            }
            for w in &found.warnings {
                let _ = writeln!(out, "    warning: {w}");
            }
        }
    }
    Ok(out)
}

/// Parses `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("invalid number {p:?} in {s:?}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected \"re\" or \"re,im\", got {s:?}")),
    }
}

/// `₂F₁(a, b; c; x)` to 15 significant digits.
pub fn hypergeo(a: Complex64, b: Complex64, c: Complex64, x: f64) -> Result<String, CliError> {
    let v = hyp2f1(a, b, c, x)?;
    Ok(format!("{:.14e} {:+.14e}i\n", v.re, v.im))
}
