//! The `sweep` subcommand: Cartesian sweep over at most two config keys,
//! one row per point with the leading criterion's inequality, the fitted
//! rate when the scenario produces one, and the verdict.

use std::collections::BTreeMap;

use spde_stab::error::{Error, Result};
use spde_stab::scenarios::{self, Config, TimeSeries, Verdict};

pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parses `key=start:step:end` (inclusive) or `key=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<Axis> {
    let (key, rhs) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("axis `{spec}`: expected key=values")))?;
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("axis `{spec}`: `{s}` is not a number")))
    };
    let values = if rhs.contains(':') {
        let parts: Vec<&str> = rhs.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "axis `{spec}`: expected start:step:end"
            )));
        }
        let (start, step, end) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || end < start {
            return Err(Error::Config(format!(
                "axis `{spec}`: need step > 0 and end >= start"
            )));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        rhs.split(',').map(parse).collect::<Result<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(Error::Config(format!("axis `{spec}` produced no values")));
    }
    Ok(Axis {
        key: key.trim().to_string(),
        values,
    })
}

#[derive(Debug, serde::Serialize)]
pub struct SweepRow {
    pub params: BTreeMap<String, f64>,
    pub criterion: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub fitted_rate: Option<f64>,
    pub verdict: Verdict,
}

pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub csv: TimeSeries,
}

pub fn run_sweep(scenario: &str, base: &Config, axes: &[Axis]) -> Result<SweepResult> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config(format!(
            "sweeps take 1 or 2 axes, got {}",
            axes.len()
        )));
    }
    let mut points: Vec<Vec<(String, f64)>> = Vec::new();
    match axes {
        [a] => {
            for v in &a.values {
                points.push(vec![(a.key.clone(), *v)]);
            }
        }
        [a, b] => {
            for va in &a.values {
                for vb in &b.values {
                    points.push(vec![(a.key.clone(), *va), (b.key.clone(), *vb)]);
                }
            }
        }
        _ => unreachable!(),
    }

    let mut rows = Vec::with_capacity(points.len());
    for point in &points {
        let mut cfg = base.clone();
        for (k, v) in point {
            cfg.set(k, &format!("{v}"));
        }
        let report = scenarios::run(scenario, &cfg)?;
        let (criterion, lhs, rhs, satisfied) = report
            .criteria
            .first()
            .map(|c| (c.criterion.clone(), c.lhs, c.rhs, c.satisfied))
            .unwrap_or_else(|| ("none".into(), f64::NAN, f64::NAN, false));
        rows.push(SweepRow {
            params: point.iter().cloned().collect(),
            criterion,
            lhs,
            rhs,
            satisfied,
            fitted_rate: report.metrics.get("fitted_rate").copied(),
            verdict: report.verdict,
        });
    }

    // CSV: axis columns, criterion lhs/rhs/satisfied, rate, verdict code
    let mut columns: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    columns.extend(
        ["criterion_lhs", "criterion_rhs", "criterion_satisfied", "fitted_rate", "verdict"]
            .map(String::from),
    );
    let csv_rows = rows
        .iter()
        .map(|r| {
            let mut row: Vec<f64> = axes.iter().map(|a| r.params[&a.key]).collect();
            row.push(r.lhs);
            row.push(r.rhs);
            row.push(if r.satisfied { 1.0 } else { 0.0 });
            row.push(r.fitted_rate.unwrap_or(f64::NAN));
            row.push(match r.verdict {
                Verdict::Consistent => 0.0,
                Verdict::Inconsistent => 1.0,
                Verdict::Inconclusive => 2.0,
            });
            row
        })
        .collect();
    Ok(SweepResult {
        rows,
        csv: TimeSeries {
            columns,
            rows: csv_rows,
        },
    })
}
