//! Field-noise power model `du = (Laplacian u - k1 u^r) dt + k2 u^m dW_t(x)`
//! with nonnegative data: evaluates the `lambda_hat` threshold and, when
//! `lambda_hat < lambda1`, asserts the fitted mean-square rate is at least
//! as fast as the predicted index `lambda1 - lambda_hat`.

use std::collections::BTreeMap;

use super::common::*;
use super::{CheckStatus, Config, ScenarioReport, REPORT_SCHEMA_VERSION};
use crate::criteria;
use crate::error::Result;
use crate::evolve::{run_ensemble, Init, ModelSpec, NoiseLawSpec, OperatorSpec, ReactionSpec};
use crate::lattice::{build_grid, principal_eigenpair, EigMode};
use crate::noise::CovarianceSpec;
use crate::stats;

const KEYS: &[&str] = &[
    "grid.length",
    "grid.n",
    "model.mu",
    "model.k1",
    "model.r",
    "model.k2",
    "model.m",
    "cov.kernel",
    "cov.q0",
    "cov.ell",
    "time.t_end",
    "time.dt",
    "time.save_stride",
    "ensemble.paths",
    "ensemble.seed",
    "fit.t_lo",
    "fit.t_hi",
];

pub(super) fn default_config() -> Config {
    Config::from_pairs(&[
        ("grid.length", "1.0"),
        ("grid.n", "32"),
        ("model.mu", "1.0"),
        ("model.k1", "1.0"),
        ("model.r", "3.0"),
        ("model.k2", "1.0"),
        ("model.m", "1.5"),
        ("cov.kernel", "constant"),
        ("cov.q0", "1.0"),
        ("time.t_end", "0.6"),
        ("time.dt", "2e-4"),
        ("time.save_stride", "30"),
        ("ensemble.paths", "500"),
        ("ensemble.seed", "20240604"),
        ("fit.t_lo", "0.12"),
        ("fit.t_hi", "0.6"),
    ])
}

pub(super) fn run(cfg: &Config) -> Result<ScenarioReport> {
    cfg.validate_keys(KEYS)?;
    let length = cfg.positive_f64("grid.length")?;
    let n = cfg.usize("grid.n")?;
    let mu = cfg.positive_f64("model.mu")?;
    let k1 = cfg.positive_f64("model.k1")?;
    let r = cfg.positive_f64("model.r")?;
    let k2 = cfg.nonnegative_f64("model.k2")?;
    let m = cfg.positive_f64("model.m")?;
    let q0 = cfg.nonnegative_f64("cov.q0")?;
    let t_end = cfg.positive_f64("time.t_end")?;
    let dt = cfg.positive_f64("time.dt")?;
    let stride = cfg.usize("time.save_stride")?;
    let paths = cfg.usize("ensemble.paths")?;
    let seed = cfg.u64("ensemble.seed")?;
    let fit_lo = cfg.f64("fit.t_lo").unwrap_or(0.2 * t_end);
    let fit_hi = cfg.f64("fit.t_hi").unwrap_or(t_end);

    let cov = match cfg.get("cov.kernel").unwrap_or("constant") {
        "constant" => CovarianceSpec::constant(q0)?,
        "squared_exponential" => {
            CovarianceSpec::squared_exponential(q0, cfg.positive_f64("cov.ell")?)?
        }
        other => {
            return Err(crate::error::Error::Config(format!(
                "config key `cov.kernel`: unknown kernel `{other}`"
            )))
        }
    };

    let grid = build_grid(length, n)?;
    let eig_h = principal_eigenpair(grid, EigMode::Discrete);
    let eig_c = principal_eigenpair(grid, EigMode::Continuous);
    let u0 = unit_ms_phi1(&eig_h);
    let (q_sup, q_inf) = cov.bounds(grid);

    // k2 = 0 or q0 = 0 degenerate to the deterministic model; the
    // threshold formula only applies with genuine noise
    let mut criteria_reports = Vec::new();
    let mut lambda_hat = 0.0;
    let mut threshold_applies = false;
    if k2 > 0.0 && q_sup > 0.0 {
        let mut c = criteria::t34_ms_check(r, m, k1, k2, q_sup, eig_c.lambda1)?;
        c.notes.push("continuum lambda1".into());
        let mut h = criteria::t34_ms_check(r, m, k1, k2, q_sup, eig_h.lambda1)?;
        h.notes.push("discrete lambda1 matching the simulated dynamics".into());
        lambda_hat = h.lhs;
        threshold_applies = true;
        criteria_reports.push(c);
        criteria_reports.push(h);
    }
    // stochastic variant applies at m = 2 with odd r > 3
    if m == 2.0 && r > 3.0 && r.fract() == 0.0 && (r as i64) % 2 == 1 {
        if let Ok(st) = criteria::t34_stochastic_check(r, k1, k2, q_sup, q_inf, eig_h.lambda1) {
            criteria_reports.push(st);
        }
    }

    let model = ModelSpec {
        operator: OperatorSpec::Laplacian { mu },
        reaction: ReactionSpec::Logistic { a: 0.0, k: k1, r },
        noise: NoiseLawSpec::FieldPower { k2, m, cov },
        positivity_clip: true,
    };
    let ensemble = run_ensemble(&model, &Init::Field(u0), t_end, dt, stride, seed, paths)?;
    let measured = stats::ms_norm(&ensemble)?;
    let fit = stats::fit_decay(&measured, (fit_lo, fit_hi))?;

    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    metrics.insert("fitted_rate".into(), fit.rate);
    metrics.insert("rate_stderr".into(), fit.rate_stderr);
    metrics.insert("lambda_hat".into(), lambda_hat);
    metrics.insert("lambda1_discrete".into(), eig_h.lambda1);
    metrics.insert("lambda1_continuous".into(), eig_c.lambda1);

    if threshold_applies && lambda_hat < eig_h.lambda1 {
        // predicted index: decay at least as fast as lambda1 - lambda_hat
        let bound = -(eig_h.lambda1 - lambda_hat);
        let margin = (0.1 * fit.rate.abs()).max(3.0 * fit.rate_stderr);
        checks.push(check(
            "ms_decay_at_least_predicted",
            pass_fail(fit.rate <= bound + margin),
            fit.rate,
            bound + margin,
            "fitted rate must not be slower than -(lambda1 - lambda_hat) beyond the margin",
        ));
    } else if k2 == 0.0 {
        // deterministic decay to zero
        let decayed = *measured.mean.last().unwrap() < measured.mean[0];
        checks.push(check(
            "deterministic_decay",
            pass_fail(decayed),
            *measured.mean.last().unwrap(),
            measured.mean[0],
            "with k2 = 0 the dissipative model decays",
        ));
    } else {
        checks.push(check(
            "threshold",
            CheckStatus::Info,
            lambda_hat,
            eig_h.lambda1,
            "lambda_hat >= lambda1: no decay prediction to test",
        ));
    }

    let clipped: u64 = ensemble.iter().map(|t| t.clipped_steps).sum();
    metrics.insert("clipped_steps_total".into(), clipped as f64);
    checks.push(check(
        "positivity_preserved",
        pass_fail(clipped == 0),
        clipped as f64,
        0.0,
        "nonnegative data must stay nonnegative without clipping at this resolution",
    ));
    metrics.insert("overflow_count".into(), measured.overflow_count as f64);

    let series = base_series(&measured);
    let verdict = verdict_from_checks(&checks);
    Ok(ScenarioReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: "scn_field_power".into(),
        config: cfg.entries().clone(),
        criteria: criteria_reports,
        checks,
        metrics,
        notes: vec![
            "inequality: lambda_hat < lambda1 predicts exponential mean-square decay with index lambda1 - lambda_hat".into(),
            "the field noise applies the exponent m literally as k2 u^m dW(x); the stochastic-stability route pairs u^{m+1} factors instead, and that exponent discrepancy is flagged rather than resolved".into(),
        ],
        verdict,
        series,
        wall_clock_secs: 0.0,
    })
}
