//! Ensemble estimators: per-time mean-square norms with standard errors,
//! log-linear decay-rate fits, and exceedance probabilities for the
//! running supremum of the norm.
//!
//! Reductions run over paths in ascending path order with compensated
//! summation, so results are bit-stable across runs and thread counts.
//! Overflowed paths are excluded from per-time estimates and surfaced as a
//! count and a per-time blow-up fraction; they are never silently dropped.

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::lattice::EigenPair;

/// Kahan (compensated) sum over a deterministic iteration order.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Mean and standard error of the mean (two-pass, compensated).
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    let mean = kahan_sum(values.iter().copied()) / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (m as f64 - 1.0);
    (mean, (var / m as f64).sqrt())
}

/// Per-time Monte Carlo estimates of `E ||u(t)||^2`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// Sample mean of the squared discrete norm per time.
    pub mean: Vec<f64>,
    /// Standard error of the mean per time (defined for >= 2 paths).
    pub stderr: Vec<f64>,
    /// Smallest squared norm across included paths per time.
    pub min: Vec<f64>,
    /// Largest squared norm across included paths per time.
    pub max: Vec<f64>,
    /// Fraction of all paths that had overflowed by each time.
    pub blowup_fraction: Vec<f64>,
    /// Paths included in the estimates.
    pub path_count: usize,
    /// Overflowed paths excluded from the per-time estimates.
    pub overflow_count: usize,
}

fn included(ensemble: &[Trajectory]) -> Result<(Vec<&Trajectory>, usize)> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let kept: Vec<&Trajectory> = ensemble.iter().filter(|t| !t.overflow).collect();
    let overflow_count = ensemble.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::InvalidArgument(
            "every path overflowed; no estimates are defined".into(),
        ));
    }
    let times = &kept[0].times;
    for t in &kept {
        if t.times != *times {
            return Err(Error::InvalidArgument(
                "trajectories do not share a common time grid".into(),
            ));
        }
        if std::mem::discriminant(&t.states) != std::mem::discriminant(&kept[0].states) {
            return Err(Error::InvalidArgument(
                "trajectories mix field and scalar states".into(),
            ));
        }
    }
    Ok((kept, overflow_count))
}

/// Per-time sample mean and standard error of the squared discrete norm
/// `h sum_i u(x_i, t)^2` (or `x(t)^2` for scalar paths).
pub fn ms_norm(ensemble: &[Trajectory]) -> Result<EnsembleStats> {
    let (kept, overflow_count) = included(ensemble)?;
    let times = kept[0].times.clone();
    let total = ensemble.len() as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut min = Vec::with_capacity(times.len());
    let mut max = Vec::with_capacity(times.len());
    let mut blowup = Vec::with_capacity(times.len());
    let mut column = vec![0.0; kept.len()];
    for (j, t) in times.iter().enumerate() {
        for (slot, traj) in column.iter_mut().zip(&kept) {
            *slot = traj.norm_sq_at(j);
        }
        let (m, se) = mean_stderr(&column);
        mean.push(m);
        stderr.push(se);
        min.push(column.iter().copied().fold(f64::INFINITY, f64::min));
        max.push(column.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let blown = ensemble
            .iter()
            .filter(|p| p.overflow_time.map(|ot| ot <= *t).unwrap_or(false))
            .count();
        blowup.push(blown as f64 / total);
    }
    Ok(EnsembleStats {
        times,
        mean,
        stderr,
        min,
        max,
        blowup_fraction: blowup,
        path_count: kept.len(),
        overflow_count,
    })
}

/// Per-time sample mean and standard error of `|x(t)|^beta` for a scalar
/// ensemble.
pub fn abs_moment(ensemble: &[Trajectory], beta: f64) -> Result<EnsembleStats> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("moment order must be positive".into()));
    }
    let (kept, overflow_count) = included(ensemble)?;
    if kept[0].scalars().is_none() {
        return Err(Error::InvalidArgument(
            "absolute moments are defined for scalar ensembles".into(),
        ));
    }
    let times = kept[0].times.clone();
    let total = ensemble.len() as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut min = Vec::with_capacity(times.len());
    let mut max = Vec::with_capacity(times.len());
    let mut blowup = Vec::with_capacity(times.len());
    let mut column = vec![0.0; kept.len()];
    for (j, t) in times.iter().enumerate() {
        for (slot, traj) in column.iter_mut().zip(&kept) {
            *slot = traj.scalars().unwrap()[j].abs().powf(beta);
        }
        let (m, se) = mean_stderr(&column);
        mean.push(m);
        stderr.push(se);
        min.push(column.iter().copied().fold(f64::INFINITY, f64::min));
        max.push(column.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let blown = ensemble
            .iter()
            .filter(|p| p.overflow_time.map(|ot| ot <= *t).unwrap_or(false))
            .count();
        blowup.push(blown as f64 / total);
    }
    Ok(EnsembleStats {
        times,
        mean,
        stderr,
        min,
        max,
        blowup_fraction: blowup,
        path_count: kept.len(),
        overflow_count,
    })
}

/// Least-squares fit of `log estimate = intercept + rate * t` on a window.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayFit {
    /// Slope of the log-linear fit (negative for decaying series).
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination; 0 by convention for a constant
    /// series (zero total variance).
    pub r_squared: f64,
    /// Standard error of the slope from the fit residuals.
    pub rate_stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Fits an exponential decay rate on the estimates inside `window`.
pub fn fit_decay(stats: &EnsembleStats, window: (f64, f64)) -> Result<DecayFit> {
    fit_decay_series(&stats.times, &stats.mean, window)
}

/// Same fit on a bare `(times, values)` series (used for oracle curves).
pub fn fit_decay_series(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidArgument("empty fit window".into()));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (t, v) in times.iter().zip(values) {
        if *t >= lo - 1e-12 && *t <= hi + 1e-12 {
            if !(*v > 0.0) {
                return Err(Error::FitUndefined(format!(
                    "non-positive estimate {v} at t = {t} inside the fit window"
                )));
            }
            ts.push(*t);
            ys.push(v.ln());
        }
    }
    let n = ts.len();
    if n < 2 {
        return Err(Error::FitUndefined(format!(
            "fit window [{lo}, {hi}] holds {n} points, need at least 2"
        )));
    }
    let nf = n as f64;
    let tbar = kahan_sum(ts.iter().copied()) / nf;
    let ybar = kahan_sum(ys.iter().copied()) / nf;
    let stt = kahan_sum(ts.iter().map(|t| (t - tbar) * (t - tbar)));
    let sty = kahan_sum(ts.iter().zip(&ys).map(|(t, y)| (t - tbar) * (y - ybar)));
    let rate = sty / stt;
    let intercept = ybar - rate * tbar;
    let ss_tot = kahan_sum(ys.iter().map(|y| (y - ybar) * (y - ybar)));
    let ss_res = kahan_sum(
        ts.iter()
            .zip(&ys)
            .map(|(t, y)| {
                let e = y - (intercept + rate * t);
                e * e
            }),
    );
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let rate_stderr = if n > 2 {
        (ss_res / (nf - 2.0) / stt).sqrt()
    } else {
        0.0
    };
    Ok(DecayFit {
        rate,
        intercept,
        r_squared: r_squared.clamp(0.0, 1.0),
        rate_stderr,
        window,
        points: n,
    })
}

/// Estimate of `P{ sup_{t <= T} ||u(., t)|| <= eps1 }`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExceedanceEstimate {
    pub epsilon1: f64,
    pub probability: f64,
    /// Binomial standard error `sqrt(p (1 - p) / M)`.
    pub stderr: f64,
    pub horizon: f64,
}

/// Fraction of paths whose running maximum norm stays within `eps1` over
/// the whole horizon. Overflowed paths count as exceeding.
pub fn exceedance(ensemble: &[Trajectory], epsilon1: f64) -> Result<ExceedanceEstimate> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let m = ensemble.len() as f64;
    let horizon = ensemble
        .iter()
        .map(|t| *t.times.last().unwrap_or(&0.0))
        .fold(0.0f64, f64::max);
    let within = ensemble
        .iter()
        .filter(|t| !t.overflow && t.max_norm <= epsilon1)
        .count() as f64;
    let p = within / m;
    Ok(ExceedanceEstimate {
        epsilon1,
        probability: p,
        stderr: (p * (1.0 - p) / m).sqrt(),
        horizon,
    })
}

/// Per-time statistics of the projections `(u, phi_1)` and of the plain
/// integral `h sum_i u(x_i, t)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProjectionSeries {
    pub times: Vec<f64>,
    pub phi1_mean: Vec<f64>,
    pub phi1_stderr: Vec<f64>,
    pub plain_mean: Vec<f64>,
    pub plain_stderr: Vec<f64>,
    pub path_count: usize,
    pub overflow_count: usize,
}

pub fn projection_series(ensemble: &[Trajectory], eig: &EigenPair) -> Result<ProjectionSeries> {
    let (kept, overflow_count) = included(ensemble)?;
    let times = kept[0].times.clone();
    let fields0 = kept[0].fields().ok_or_else(|| {
        Error::InvalidArgument("projection statistics require field trajectories".into())
    })?;
    if fields0[0].grid() != eig.phi1.grid() {
        return Err(Error::InvalidArgument(
            "eigenpair grid does not match the ensemble grid".into(),
        ));
    }
    let mut phi1_mean = Vec::with_capacity(times.len());
    let mut phi1_stderr = Vec::with_capacity(times.len());
    let mut plain_mean = Vec::with_capacity(times.len());
    let mut plain_stderr = Vec::with_capacity(times.len());
    let mut proj = vec![0.0; kept.len()];
    let mut plain = vec![0.0; kept.len()];
    for j in 0..times.len() {
        for (i, traj) in kept.iter().enumerate() {
            let f = &traj.fields().unwrap()[j];
            proj[i] = f.inner(&eig.phi1)?;
            plain[i] = f.integral();
        }
        let (mp, sp) = mean_stderr(&proj);
        let (mi, si) = mean_stderr(&plain);
        phi1_mean.push(mp);
        phi1_stderr.push(sp);
        plain_mean.push(mi);
        plain_stderr.push(si);
    }
    Ok(ProjectionSeries {
        times,
        phi1_mean,
        phi1_stderr,
        plain_mean,
        plain_stderr,
        path_count: kept.len(),
        overflow_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{SeedSpec, States, Trajectory};
    use crate::lattice::{build_grid, principal_eigenpair, EigMode, Field};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar_traj(times: Vec<f64>, xs: Vec<f64>, overflow_at: Option<f64>) -> Trajectory {
        let max_norm = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Trajectory {
            times,
            states: States::Scalars(xs),
            seed: SeedSpec::new(0, 0),
            clipped_steps: 0,
            overflow: overflow_at.is_some(),
            overflow_time: overflow_at,
            max_norm,
        }
    }

    #[test]
    fn constant_field_ensemble() {
        let grid = build_grid(1.0, 10).unwrap();
        let c = 1.7;
        let mk = || Trajectory {
            times: vec![0.0, 0.5],
            states: States::Fields(vec![
                Field::from_fn(grid, |_| c),
                Field::from_fn(grid, |_| c),
            ]),
            seed: SeedSpec::new(0, 0),
            clipped_steps: 0,
            overflow: false,
            overflow_time: None,
            max_norm: c,
        };
        let ensemble: Vec<Trajectory> = (0..5).map(|_| mk()).collect();
        let stats = ms_norm(&ensemble).unwrap();
        // discrete norm of a constant on L = 1: h * N * c^2 = c^2 * N/(N+1)
        let want = c * c * 10.0 / 11.0;
        for (m, se) in stats.mean.iter().zip(&stats.stderr) {
            assert_relative_eq!(*m, want, max_relative = 1e-14);
            assert_eq!(*se, 0.0);
        }
    }

    #[test]
    fn two_path_mean_and_stderr() {
        let a = scalar_traj(vec![0.0], vec![1.0], None);
        let b = scalar_traj(vec![0.0], vec![3.0f64.sqrt()], None);
        let stats = ms_norm(&[a, b]).unwrap();
        assert_relative_eq!(stats.mean[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(stats.stderr[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn overflowed_paths_are_excluded_and_reported() {
        let good = scalar_traj(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0], None);
        let bad = scalar_traj(vec![0.0, 1.0], vec![1.0, 5.0], Some(1.5));
        let stats = ms_norm(&[good, bad]).unwrap();
        assert_eq!(stats.path_count, 1);
        assert_eq!(stats.overflow_count, 1);
        assert_eq!(stats.blowup_fraction, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn mismatched_times_rejected() {
        let a = scalar_traj(vec![0.0, 1.0], vec![1.0, 1.0], None);
        let b = scalar_traj(vec![0.0, 2.0], vec![1.0, 1.0], None);
        assert!(ms_norm(&[a, b]).is_err());
    }

    #[test]
    fn scaling_by_two_is_exact() {
        // doubling every path scales the estimates by exactly 4 (powers of
        // two commute with rounding)
        let paths: Vec<Trajectory> = (0..4)
            .map(|i| {
                scalar_traj(
                    vec![0.0, 1.0],
                    vec![0.3 + 0.1 * i as f64, 0.7 + 0.05 * i as f64],
                    None,
                )
            })
            .collect();
        let scaled: Vec<Trajectory> = paths
            .iter()
            .map(|t| {
                let xs = t.scalars().unwrap().iter().map(|x| 2.0 * x).collect();
                scalar_traj(t.times.clone(), xs, None)
            })
            .collect();
        let s1 = ms_norm(&paths).unwrap();
        let s2 = ms_norm(&scaled).unwrap();
        for (a, b) in s1.mean.iter().zip(&s2.mean) {
            assert_eq!(4.0 * a, *b);
        }
    }

    #[test]
    fn fit_exact_exponential() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let fit = fit_decay_series(&times, &values, (0.0, 5.0)).unwrap();
        assert!((fit.rate + 2.0).abs() <= 1e-10, "rate {}", fit.rate);
        assert!((fit.r_squared - 1.0).abs() <= 1e-12);
        assert!(fit.rate_stderr <= 1e-10);
    }

    #[test]
    fn fit_constant_series_convention() {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let values = vec![3.0; 10];
        let fit = fit_decay_series(&times, &values, (0.0, 9.0)).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn fit_oracle_multiplicative_rate() {
        // single_mode curve with K - lambda1 = -1, sigma = 1 has exact
        // mean-square rate 2 (K - lambda1) + sigma^2 = -1.
        let times: Vec<f64> = (0..60).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| crate::oracle::single_mode_multiplicative_ms(0.9, 1.2, 3.0, 4.0, 1.0, *t))
            .collect();
        let fit = fit_decay_series(&times, &values, (0.5, 3.0)).unwrap();
        assert!((fit.rate + 1.0).abs() <= 1e-8, "rate {}", fit.rate);
    }

    #[test]
    fn fit_rejects_nonpositive_values() {
        let times = vec![0.0, 1.0, 2.0];
        let values = vec![1.0, 0.0, 1.0];
        assert!(matches!(
            fit_decay_series(&times, &values, (0.0, 2.0)),
            Err(Error::FitUndefined(_))
        ));
    }

    #[test]
    fn exceedance_trivial_cases() {
        let zeros: Vec<Trajectory> = (0..8)
            .map(|_| scalar_traj(vec![0.0, 1.0], vec![0.0, 0.0], None))
            .collect();
        let est = exceedance(&zeros, 0.5).unwrap();
        assert_eq!(est.probability, 1.0);
        assert_eq!(est.stderr, 0.0);

        let big: Vec<Trajectory> = (0..8)
            .map(|_| scalar_traj(vec![0.0, 1.0], vec![2.0, 1.0], None))
            .collect();
        let est = exceedance(&big, 1.0).unwrap();
        assert_eq!(est.probability, 0.0);
    }

    proptest! {
        #[test]
        fn exceedance_monotone_in_threshold(
            maxima in proptest::collection::vec(0.0f64..5.0, 20),
            e1 in 0.0f64..5.0,
            bump in 0.0f64..2.0,
        ) {
            let ensemble: Vec<Trajectory> = maxima
                .iter()
                .map(|m| {
                    let mut t = scalar_traj(vec![0.0], vec![*m], None);
                    t.max_norm = *m;
                    t
                })
                .collect();
            let p1 = exceedance(&ensemble, e1).unwrap().probability;
            let p2 = exceedance(&ensemble, e1 + bump).unwrap().probability;
            prop_assert!(p2 >= p1);
        }

        #[test]
        fn fit_rate_invariant_under_positive_scaling(c in 0.01f64..100.0) {
            let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
            let values: Vec<f64> = times.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
            let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
            let f1 = fit_decay_series(&times, &values, (0.0, 3.0)).unwrap();
            let f2 = fit_decay_series(&times, &scaled, (0.0, 3.0)).unwrap();
            prop_assert!((f1.rate - f2.rate).abs() <= 1e-12 * f1.rate.abs().max(1.0));
            prop_assert!((f2.intercept - f1.intercept - c.ln()).abs() <= 1e-9);
        }
    }

    #[test]
    fn projection_series_matches_direct_projection() {
        let grid = build_grid(1.0, 16).unwrap();
        let eig = principal_eigenpair(grid, EigMode::Discrete);
        let mk = |scale: f64| Trajectory {
            times: vec![0.0, 1.0],
            states: States::Fields(vec![
                eig.phi1.scaled(scale),
                Field::from_fn(grid, |_| scale),
            ]),
            seed: SeedSpec::new(0, 0),
            clipped_steps: 0,
            overflow: false,
            overflow_time: None,
            max_norm: 0.0,
        };
        let ensemble = vec![mk(1.0), mk(3.0)];
        let ps = projection_series(&ensemble, &eig).unwrap();
        // mean projection at t0: mean(1, 3) * h sum phi^2
        let phi_sq = eig.phi1.norm_sq();
        assert_relative_eq!(ps.phi1_mean[0], 2.0 * phi_sq, max_relative = 1e-12);
        // plain integral of a constant c is c * h * N
        let h = grid.spacing();
        assert_relative_eq!(ps.plain_mean[1], 2.0 * h * 16.0, max_relative = 1e-12);
        // projection of a constant c is c * (h sum phi) = c
        assert_relative_eq!(ps.phi1_mean[1], 2.0, max_relative = 1e-12);
    }
}
