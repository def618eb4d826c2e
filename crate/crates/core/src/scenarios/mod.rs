//! Named, parameterized experiments tying a criterion verdict to a
//! simulated Monte Carlo measurement.
//!
//! Every scenario is deterministic given its configuration (the master
//! seed lives in the config), reports the exact inequality it evaluated,
//! and only declares `Inconsistent` when a criterion's hypothesis holds
//! and the measured conclusion fails beyond its tolerance. Runs whose
//! statistical error swamps the discriminating margin come back
//! `Inconclusive`.

pub mod config;

mod additive_heat;
mod common;
mod coupling;
mod field_power;
mod multiplicative;
mod plaplacian;
mod projection;
mod sde_t36;
mod whole_space;

use std::collections::BTreeMap;

use crate::criteria::CriterionReport;
use crate::error::{Error, Result};
pub use config::Config;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Overall outcome of one scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    /// Every declared check passed at its tolerance.
    Consistent,
    /// A criterion's hypothesis held and a measured conclusion failed.
    Inconsistent,
    /// A check could not discriminate at this sampling resolution.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
    /// Reported for context; never affects the verdict.
    Info,
}

/// One named measured check with the observed value and its bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub observed: f64,
    pub bound: f64,
    pub note: String,
}

/// Column-labelled numeric time series (the scenario's CSV payload).
#[derive(Debug, Clone, serde::Serialize)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Full machine-readable result of a scenario run.
///
/// The wall clock is intentionally excluded from serialization: the
/// serialized report must be byte-identical across reruns with the same
/// config, and timing belongs to the run manifest.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    pub criteria: Vec<CriterionReport>,
    pub checks: Vec<CheckOutcome>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    pub series: TimeSeries,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// The registered scenario catalog: `(name, one-line description)`.
pub fn catalog() -> &'static [(&'static str, &'static str)] {
    &[
        (
            "scn_additive_heat",
            "additive-noise heat model vs the exact modal oracle and the boundedness criterion",
        ),
        (
            "scn_plaplacian",
            "p-Laplacian with additive noise: dissipativity criterion vs measured energy bound",
        ),
        (
            "scn_multiplicative",
            "linear multiplicative model: decay-rate oracle, half-probability envelope, pathwise envelope",
        ),
        (
            "scn_field_power",
            "field-noise power model: lambda_hat threshold vs fitted mean-square decay",
        ),
        (
            "scn_sde_t36",
            "power-law SDE: noise-free blow-up contrast vs noise-stabilized moment decay",
        ),
        (
            "scn_coupling_t21",
            "shared-noise coupling: SDE sandwich bounds around the reaction-diffusion path",
        ),
        (
            "scn_projection_t22",
            "eigenfunction projection ordering v <= Y <= X on one Wiener path",
        ),
        (
            "scn_whole_space",
            "truncated whole-space model with space-time white noise: criteria plus moment trend",
        ),
    ]
}

/// Default configuration of a registered scenario.
pub fn default_config(name: &str) -> Result<Config> {
    match name {
        "scn_additive_heat" => Ok(additive_heat::default_config()),
        "scn_plaplacian" => Ok(plaplacian::default_config()),
        "scn_multiplicative" => Ok(multiplicative::default_config()),
        "scn_field_power" => Ok(field_power::default_config()),
        "scn_sde_t36" => Ok(sde_t36::default_config()),
        "scn_coupling_t21" => Ok(coupling::default_config()),
        "scn_projection_t22" => Ok(projection::default_config()),
        "scn_whole_space" => Ok(whole_space::default_config()),
        _ => Err(Error::InvalidArgument(format!(
            "unknown scenario `{name}`"
        ))),
    }
}

/// Runs a registered scenario on a fully merged configuration.
pub fn run(name: &str, cfg: &Config) -> Result<ScenarioReport> {
    let start = std::time::Instant::now();
    let mut report = match name {
        "scn_additive_heat" => additive_heat::run(cfg),
        "scn_plaplacian" => plaplacian::run(cfg),
        "scn_multiplicative" => multiplicative::run(cfg),
        "scn_field_power" => field_power::run(cfg),
        "scn_sde_t36" => sde_t36::run(cfg),
        "scn_coupling_t21" => coupling::run(cfg),
        "scn_projection_t22" => projection::run(cfg),
        "scn_whole_space" => whole_space::run(cfg),
        _ => Err(Error::InvalidArgument(format!(
            "unknown scenario `{name}`"
        ))),
    }?;
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}
