//! Whole-space model approximated on a truncated interval: the equation
//! `du = (Laplacian u + K u) dt + gamma0 u dW(x, t)` with space-time white
//! noise runs on `(-L_trunc, L_trunc)` (shifted to `(0, 2 L_trunc)`) with
//! Dirichlet boundary and compactly supported data, `L_trunc` large enough
//! that the heat-kernel mass outside is negligible at the horizon.
//!
//! The mild-solution criteria are evaluated on the configured coefficient
//! bounds and the measured per-node second moment trend is reported; an
//! inconclusive verdict is acceptable here because the criteria constants
//! are not sharp at desk scale.

use std::collections::BTreeMap;

use super::common::*;
use super::{CheckStatus, Config, ScenarioReport, REPORT_SCHEMA_VERSION};
use crate::criteria;
use crate::error::Result;
use crate::evolve::{run_ensemble, simulate_path, Init, ModelSpec, NoiseLawSpec, OperatorSpec, ReactionSpec};
use crate::lattice::{build_grid, Field, Grid1D};
use crate::noise::SeedSpec;
use crate::stats;

const KEYS: &[&str] = &[
    "domain.l_trunc",
    "grid.n",
    "model.k",
    "model.gamma0",
    "model.alpha",
    "model.beta0",
    "init.width",
    "init.amplitude",
    "time.t_end",
    "time.dt",
    "time.save_stride",
    "ensemble.paths",
    "ensemble.seed",
    "truncation.enabled",
];

pub(super) fn default_config() -> Config {
    Config::from_pairs(&[
        ("domain.l_trunc", "6.5"),
        ("grid.n", "255"),
        ("model.k", "-0.5"),
        ("model.gamma0", "0.1"),
        ("model.alpha", "0.5"),
        ("model.beta0", "0.0"),
        ("init.width", "1.0"),
        ("init.amplitude", "1.0"),
        ("time.t_end", "0.5"),
        ("time.dt", "1e-4"),
        ("time.save_stride", "500"),
        ("ensemble.paths", "200"),
        ("ensemble.seed", "20240608"),
        ("truncation.enabled", "true"),
    ])
}

/// Smooth bump of the given half-width centered at `c`, zero outside.
fn bump(amplitude: f64, width: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        let s = (x - c) / width;
        if s.abs() < 1.0 {
            amplitude * (-1.0 / (1.0 - s * s)).exp() * std::f64::consts::E
        } else {
            0.0
        }
    }
}

/// Per-time, per-node second moment across paths; returns the maximum
/// over nodes together with the standard error at the maximizing node.
fn max_node_second_moment(
    ensemble: &[crate::evolve::Trajectory],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let kept: Vec<_> = ensemble.iter().filter(|t| !t.overflow).collect();
    if kept.is_empty() {
        return Err(crate::error::Error::InvalidArgument(
            "every path overflowed".into(),
        ));
    }
    let times = kept[0].times.len();
    let n = kept[0].fields().unwrap()[0].values().len();
    let m = kept.len() as f64;
    let mut maxima = Vec::with_capacity(times);
    let mut stderrs = Vec::with_capacity(times);
    let mut sums = vec![0.0f64; n];
    let mut sq_sums = vec![0.0f64; n];
    for j in 0..times {
        sums.iter_mut().for_each(|s| *s = 0.0);
        sq_sums.iter_mut().for_each(|s| *s = 0.0);
        for traj in &kept {
            for (i, v) in traj.fields().unwrap()[j].values().iter().enumerate() {
                let v2 = v * v;
                sums[i] += v2;
                sq_sums[i] += v2 * v2;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_se = 0.0;
        for i in 0..n {
            let mean = sums[i] / m;
            if mean > best {
                let var = (sq_sums[i] / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
                best = mean;
                best_se = (var / m).sqrt();
            }
        }
        maxima.push(best);
        stderrs.push(best_se);
    }
    Ok((maxima, stderrs))
}

/// Squared norm restricted to nodes within `half_width` of the center.
fn core_norm_sq(grid: Grid1D, u: &Field, center: f64, half_width: f64) -> f64 {
    let h = grid.spacing();
    h * u
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| (grid.node(*i) - center).abs() <= half_width)
        .map(|(_, v)| v * v)
        .sum::<f64>()
}

pub(super) fn run(cfg: &Config) -> Result<ScenarioReport> {
    cfg.validate_keys(KEYS)?;
    let l_trunc = cfg.positive_f64("domain.l_trunc")?;
    let n = cfg.usize("grid.n")?;
    let k_lin = cfg.f64("model.k")?;
    let gamma0 = cfg.nonnegative_f64("model.gamma0")?;
    let alpha = cfg.nonnegative_f64("model.alpha")?;
    let beta0 = cfg.nonnegative_f64("model.beta0")?;
    let width = cfg.positive_f64("init.width")?;
    let amplitude = cfg.positive_f64("init.amplitude")?;
    let t_end = cfg.positive_f64("time.t_end")?;
    let dt = cfg.positive_f64("time.dt")?;
    let stride = cfg.usize("time.save_stride")?;
    let paths = cfg.usize("ensemble.paths")?;
    let seed = cfg.u64("ensemble.seed")?;
    let trunc_enabled = cfg.bool("truncation.enabled")?;

    let mut notes = vec![
        "whole-space run truncated to (-L_trunc, L_trunc) with Dirichlet boundary and compactly supported data".into(),
    ];
    let needed = 6.0 * t_end.sqrt() + width;
    if l_trunc < needed {
        notes.push(format!(
            "L_trunc = {l_trunc} is below the documented rule 6 sqrt(T) + support radius = {needed}"
        ));
    }

    let length = 2.0 * l_trunc;
    let grid = build_grid(length, n)?;
    let center = l_trunc;
    let u0 = Field::from_fn(grid, bump(amplitude, width, center));

    // criteria on the configured coefficient bounds
    let beta_fn = move |_: f64| beta0;
    let gamma_fn = move |_: f64| gamma0;
    let mut t41 = criteria::t41_check(&beta_fn, &gamma_fn, t_end)?;
    t41.notes.push(format!(
        "coefficient bounds: |f(u) + alpha u| <= beta0 |u| with alpha = {alpha}, |sigma(t,u)| <= gamma0 |u|"
    ));
    let (mut t42_ms, t42_st) = criteria::t42_check(k_lin, gamma0)?;
    let h = grid.spacing();
    t42_ms.notes.push(format!(
        "lattice space-time white noise carries the quadratic-variation coefficient gamma0^2 / h = {}",
        gamma0 * gamma0 / h
    ));

    let model = ModelSpec {
        operator: OperatorSpec::Laplacian { mu: 1.0 },
        reaction: ReactionSpec::Linear { rate: k_lin },
        noise: NoiseLawSpec::WhiteMultiplicative { gamma: gamma0 },
        positivity_clip: false,
    };
    let ensemble = run_ensemble(&model, &Init::Field(u0.clone()), t_end, dt, stride, seed, paths)?;
    let measured = stats::ms_norm(&ensemble)?;
    let (max_node, max_node_se) = max_node_second_moment(&ensemble)?;

    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();

    // trend of the max-node second moment when the scalar-noise criterion
    // proxy is satisfied; inconclusive rather than failed on wobble
    if t42_ms.satisfied {
        let mut worst = f64::NEG_INFINITY;
        for j in 1..max_node.len() {
            let allowed = 3.0 * (max_node_se[j - 1].powi(2) + max_node_se[j].powi(2)).sqrt();
            worst = worst.max(max_node[j] - max_node[j - 1] - allowed);
        }
        let status = if worst <= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Inconclusive
        };
        checks.push(check(
            "max_node_second_moment_nonincreasing",
            status,
            worst,
            0.0,
            "max-node E|u(x,t)|^2 trend under K + sigma^2/2 <= 0 (proxy; the criterion constants are not sharp at desk scale)",
        ));
    }

    if trunc_enabled {
        // deterministic heat truncation study: doubling L_trunc at the
        // same spacing must leave the core energy essentially unchanged
        let det = ModelSpec {
            operator: OperatorSpec::Laplacian { mu: 1.0 },
            reaction: ReactionSpec::Zero,
            noise: NoiseLawSpec::Additive { sigma: 0.0 },
            positivity_clip: false,
        };
        let t1 = simulate_path(&det, &Init::Field(u0.clone()), t_end, dt, (t_end / dt).round() as usize, SeedSpec::new(seed, 0))?;
        let wide_grid = build_grid(2.0 * length, 2 * n + 1)?;
        let wide_u0 = Field::from_fn(wide_grid, bump(amplitude, width, 2.0 * center));
        let t2 = simulate_path(&det, &Init::Field(wide_u0), t_end, dt, (t_end / dt).round() as usize, SeedSpec::new(seed, 0))?;
        let core1 = core_norm_sq(grid, t1.fields().unwrap().last().unwrap(), center, l_trunc / 2.0);
        let core2 = core_norm_sq(wide_grid, t2.fields().unwrap().last().unwrap(), 2.0 * center, l_trunc / 2.0);
        let rel = (core1 - core2).abs() / core2.max(1e-300);
        metrics.insert("truncation_rel_change".into(), rel);
        checks.push(check(
            "truncation_insensitive",
            pass_fail(rel <= 0.01),
            rel,
            0.01,
            "doubling L_trunc changes the core energy by less than 1%",
        ));
    }

    metrics.insert("lattice_ito_coefficient".into(), gamma0 * gamma0 / h);
    metrics.insert("overflow_count".into(), measured.overflow_count as f64);
    metrics.insert("max_node_second_moment_final".into(), *max_node.last().unwrap());

    let mut series = base_series(&measured);
    push_column(&mut series, "max_node_second_moment", &max_node);
    push_column(&mut series, "max_node_second_moment_stderr", &max_node_se);

    let verdict = verdict_from_checks(&checks);
    Ok(ScenarioReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: "scn_whole_space".into(),
        config: cfg.entries().clone(),
        criteria: vec![t41, t42_ms, t42_st],
        checks,
        metrics,
        notes,
        verdict,
        series,
        wall_clock_secs: 0.0,
    })
}
