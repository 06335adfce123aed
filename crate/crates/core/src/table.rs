//! Reference values for the triple-integrator benchmark and a checker that
//! recomputes them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::h2::BetaTable;
use crate::hinf::{gamma_h, BisectionOptions};
use crate::matops::{solve_dare, SystemModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::schedule::Schedule;

/// Bundled benchmark model (`data/triple_integrator.json`).
pub const TRIPLE_INTEGRATOR_JSON: &str = include_str!("../data/triple_integrator.json");
/// Bundled scalar model (`data/scalar.json`).
pub const SCALAR_JSON: &str = include_str!("../data/scalar.json");

/// Interval costs `beta(h)`, `h = 1..=6`.
pub const REFERENCE_BETA: [f64; 6] = [0.0, 38.1, 179.1, 548.2, 1361.3, 2960.2];
/// Average costs of evenly spaced sampling, `h = 1..=6`.
pub const REFERENCE_J2: [f64; 6] = [14.3, 33.4, 73.9, 151.9, 286.5, 507.6];
/// Attenuation bounds of evenly spaced sampling, `h = 1..=6`.
pub const REFERENCE_GAMMA: [f64; 6] = [3.805, 7.97, 14.55, 24.18, 37.45, 54.58];
/// Relative tolerance of the comparison.
pub const TABLE_TOL: f64 = 0.01;

pub fn triple_integrator() -> SystemModel {
    crate::ModelFile::parse(TRIPLE_INTEGRATOR_JSON)
        .and_then(|f| f.to_model())
        .expect("bundled model is valid")
}

pub fn scalar_golden() -> SystemModel {
    crate::ModelFile::parse(SCALAR_JSON)
        .and_then(|f| f.to_model())
        .expect("bundled model is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub quantity: &'static str,
    pub h: usize,
    pub computed: f64,
    pub reference: f64,
    /// Relative deviation; absolute deviation when the reference is zero.
    pub rel_dev: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub entries: Vec<TableEntry>,
    pub all_pass: bool,
}

fn entry(quantity: &'static str, h: usize, computed: f64, reference: f64) -> TableEntry {
    let rel_dev = if reference == 0.0 {
        computed.abs()
    } else {
        (computed - reference).abs() / reference.abs()
    };
    let pass = if reference == 0.0 { computed.abs() <= 1e-9 } else { rel_dev <= TABLE_TOL };
    TableEntry { quantity, h, computed, reference, rel_dev, pass }
}

/// Recomputes `beta(h)`, `J2(h)` and `gamma_h` for `h = 1..=6` and compares
/// them with the reference table at 1% relative tolerance.
pub fn verify_table(model: &SystemModel, opts: &BisectionOptions) -> Result<TableReport> {
    if model.states() != 3 || model.inputs() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "the reference table needs a 3-state, 1-input model, got {} states and {} inputs",
            model.states(),
            model.inputs()
        )));
    }
    let ric = solve_dare(model, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let table = BetaTable::new(model, &ric);
    let mut entries = Vec::with_capacity(18);
    for h in 1..=6 {
        entries.push(entry("beta", h, table.beta(h)?, REFERENCE_BETA[h - 1]));
    }
    for h in 1..=6 {
        let j2 = table.j2(&Schedule::evenly_spaced(h)?)?;
        entries.push(entry("j2", h, j2, REFERENCE_J2[h - 1]));
    }
    for h in 1..=6 {
        entries.push(entry("gamma", h, gamma_h(model, h, opts)?, REFERENCE_GAMMA[h - 1]));
    }
    let all_pass = entries.iter().all(|e| e.pass);
    Ok(TableReport { entries, all_pass })
}
