//! Closed-form reference curves for the linear submodels, used as ground
//! truth by the acceptance tests.
//!
//! The spatially discrete oracles are computed in the discrete spectral
//! basis of the grid rather than the continuum basis, so that a
//! simulation-versus-oracle discrepancy isolates time-discretization and
//! Monte Carlo error only.

use crate::lattice::{Field, Grid1D};

/// A reference curve with a note saying which formula produced it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: String,
}

/// Exact moments of geometric Brownian motion `dX = a X dt + sigma X dW`:
/// `E X_t^k = x0^k exp(k a t + k (k - 1) sigma^2 t / 2)`.
pub fn gbm_moment(x0: f64, a: f64, sigma: f64, k: u32, t: f64) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    let kf = k as f64;
    x0.powi(k as i32) * (kf * a * t + kf * (kf - 1.0) * sigma * sigma * t / 2.0).exp()
}

/// Eigenvalues of the discrete negative Laplacian with Dirichlet boundary:
/// `lambda_k^h = (2 / h^2)(1 - cos(k pi h / L))` for `k = 1..=N`.
pub fn discrete_eigenvalues(grid: Grid1D) -> Vec<f64> {
    let n = grid.interior_count();
    let h = grid.spacing();
    let length = grid.length();
    (1..=n)
        .map(|k| 2.0 / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI * h / length).cos()))
        .collect()
}

/// Discrete sine eigenvectors, orthonormal in the `h`-weighted inner
/// product. Row `k` holds the nodal values of the `(k+1)`-th mode.
pub(crate) fn sine_basis(grid: Grid1D) -> Vec<Vec<f64>> {
    let n = grid.interior_count();
    let h = grid.spacing();
    let length = grid.length();
    (1..=n)
        .map(|k| {
            let mut v: Vec<f64> = (0..n)
                .map(|i| (k as f64 * std::f64::consts::PI * grid.node(i) / length).sin())
                .collect();
            let norm = (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
            for x in &mut v {
                *x /= norm;
            }
            v
        })
        .collect()
}

/// Coefficients of `u0` in the orthonormal discrete sine basis.
pub fn sine_mode_coefficients(u0: &Field) -> Vec<f64> {
    let grid = u0.grid();
    let h = grid.spacing();
    sine_basis(grid)
        .iter()
        .map(|mode| h * mode.iter().zip(u0.values()).map(|(m, u)| m * u).sum::<f64>())
        .collect()
}

/// Exact discrete-in-space second moment of the additive-noise heat model
/// `du = mu Laplacian_h u dt + sigma dW_t` (one scalar Wiener process
/// forcing every node):
///
/// ```text
/// E ||u(t)||^2 = sum_k c_k^2 e^{-2 mu lam_k t}
///             + sigma^2 sum_k w_k^2 (1 - e^{-2 mu lam_k t}) / (2 mu lam_k)
/// ```
///
/// where `c_k` are the modal coefficients of `u0` and `w_k` those of the
/// constant function 1.
pub fn additive_heat_ms(u0_modes: &[f64], mu: f64, sigma: f64, grid: Grid1D, t: f64) -> f64 {
    assert!(mu > 0.0, "diffusivity must be positive");
    assert!(t >= 0.0, "time must be nonnegative");
    assert_eq!(u0_modes.len(), grid.interior_count());
    let h = grid.spacing();
    let lambdas = discrete_eigenvalues(grid);
    let basis = sine_basis(grid);
    let mut total = 0.0;
    for (k, lam) in lambdas.iter().enumerate() {
        let w_k = h * basis[k].iter().sum::<f64>();
        let decay = (-2.0 * mu * lam * t).exp();
        total += u0_modes[k] * u0_modes[k] * decay;
        total += sigma * sigma * w_k * w_k * (1.0 - decay) / (2.0 * mu * lam);
    }
    total
}

/// [`additive_heat_ms`] evaluated on a time grid.
pub fn additive_heat_ms_curve(
    u0_modes: &[f64],
    mu: f64,
    sigma: f64,
    grid: Grid1D,
    times: &[f64],
) -> OracleCurve {
    let values = times
        .iter()
        .map(|&t| additive_heat_ms(u0_modes, mu, sigma, grid, t))
        .collect();
    OracleCurve {
        times: times.to_vec(),
        values,
        provenance: "modal expansion of the additive-noise heat model".into(),
    }
}

/// The stationary limit of [`additive_heat_ms`] as `t -> inf`:
/// `sigma^2 sum_k w_k^2 / (2 mu lam_k)`.
pub fn additive_heat_stationary(mu: f64, sigma: f64, grid: Grid1D) -> f64 {
    let h = grid.spacing();
    let lambdas = discrete_eigenvalues(grid);
    let basis = sine_basis(grid);
    lambdas
        .iter()
        .enumerate()
        .map(|(k, lam)| {
            let w_k = h * basis[k].iter().sum::<f64>();
            sigma * sigma * w_k * w_k / (2.0 * mu * lam)
        })
        .sum()
}

/// Exact second moment of the single-mode solution of the linear
/// multiplicative model `du = (Laplacian u + K u) dt + sigma u dW` started
/// from `u0 = rho phi_1`:
///
/// `E ||u(t)||^2 = rho^2 ||phi_1||^2 exp((2 (K - lambda_1) + sigma^2) t)`.
pub fn single_mode_multiplicative_ms(
    rho: f64,
    phi1_norm_sq: f64,
    k_lin: f64,
    lambda1: f64,
    sigma: f64,
    t: f64,
) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    rho * rho * phi1_norm_sq * ((2.0 * (k_lin - lambda1) + sigma * sigma) * t).exp()
}

/// Deterministic envelope `rho e^{-(alpha + sigma^2 / 2) t}` appearing in
/// the half-probability bound for the multiplicative model.
pub fn t32_envelope(rho: f64, alpha: f64, sigma: f64, t: f64) -> f64 {
    rho * (-(alpha + sigma * sigma / 2.0) * t).exp()
}
