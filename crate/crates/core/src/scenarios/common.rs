//! Shared plumbing for the scenario implementations.

use super::{CheckOutcome, CheckStatus, TimeSeries, Verdict};
use crate::lattice::{EigenPair, Field};
use crate::stats::EnsembleStats;

/// Combines check outcomes into the scenario verdict. A `Fail` is only
/// emitted by scenario code when the governing hypothesis held, so any
/// `Fail` means inconsistent; otherwise any `Inconclusive` dominates.
pub(super) fn verdict_from_checks(checks: &[CheckOutcome]) -> Verdict {
    if checks.iter().any(|c| c.status == CheckStatus::Fail) {
        Verdict::Inconsistent
    } else if checks.iter().any(|c| c.status == CheckStatus::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Consistent
    }
}

pub(super) fn check(name: &str, status: CheckStatus, observed: f64, bound: f64, note: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        status,
        observed,
        bound,
        note: note.into(),
    }
}

pub(super) fn pass_fail(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

/// `phi_1` rescaled to unit discrete L2 norm, so `E||u0||^2 = 1` for the
/// deterministic initial state `u0 = phi_1 / ||phi_1||`.
pub(super) fn unit_ms_phi1(eig: &EigenPair) -> Field {
    eig.phi1.scaled(1.0 / eig.phi1.norm())
}

/// Index of the saved time closest to `t`.
pub(super) fn nearest_index(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut gap = f64::INFINITY;
    for (i, ti) in times.iter().enumerate() {
        let d = (ti - t).abs();
        if d < gap {
            gap = d;
            best = i;
        }
    }
    best
}

/// The standard six-column series: t, ms_norm, stderr, min_norm,
/// max_norm, blowup_fraction.
pub(super) fn base_series(stats: &EnsembleStats) -> TimeSeries {
    let columns = vec![
        "t".to_string(),
        "ms_norm".to_string(),
        "stderr".to_string(),
        "min_norm".to_string(),
        "max_norm".to_string(),
        "blowup_fraction".to_string(),
    ];
    let rows = (0..stats.times.len())
        .map(|i| {
            vec![
                stats.times[i],
                stats.mean[i],
                stats.stderr[i],
                stats.min[i],
                stats.max[i],
                stats.blowup_fraction[i],
            ]
        })
        .collect();
    TimeSeries { columns, rows }
}

/// Appends one column to a series whose row count matches.
pub(super) fn push_column(series: &mut TimeSeries, name: &str, values: &[f64]) {
    assert_eq!(series.rows.len(), values.len(), "column length mismatch");
    series.columns.push(name.to_string());
    for (row, v) in series.rows.iter_mut().zip(values) {
        row.push(*v);
    }
}

/// Mean and standard error of a sample (compensated, deterministic order).
pub(super) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
    (mean, (var / m as f64).sqrt())
}
