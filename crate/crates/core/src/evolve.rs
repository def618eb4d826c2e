//! Time integration of the reaction-diffusion models on the grid and of
//! the scalar SDEs, with a shared-driver coupling facility for comparison
//! tests.
//!
//! The scheme is semi-implicit Euler-Maruyama: the linear diffusion term is
//! treated implicitly through a tridiagonal solve,
//!
//! ```text
//! (I - dt mu Laplacian_h) u_{n+1} = u_n + dt f(u_n) + sigma(u_n) dW_n,
//! ```
//!
//! which removes the `dt <= h^2 / (2 mu)` stiffness constraint. The
//! p-Laplacian (p > 2) is stepped explicitly under an adaptive state-
//! dependent step bound; scalar SDEs are stepped explicitly.
//!
//! A non-finite state is recorded as an overflow flag and truncates the
//! trajectory; it is data, not a failure (some experiments deliberately
//! drive blow-up).

use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{EigenPair, Field, Grid1D};
use crate::noise::{draw_scalar, fill_white, CovarianceSpec, FieldFactor, NoiseIncrement};
pub use crate::noise::SeedSpec;

/// Spatial operator of a model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum OperatorSpec {
    /// `mu * Laplacian`, treated implicitly.
    Laplacian { mu: f64 },
    /// `div(|grad u|^{p-2} grad u)`, treated explicitly with an adaptive
    /// step bound.
    PLaplacian { p: f64 },
    /// Scalar linear decay `-lambda x`, treated implicitly (the projection
    /// of the implicit Laplacian step onto a single eigenmode). Scalar
    /// states only.
    Decay { lambda: f64 },
    /// No spatial operator (pure reaction/noise dynamics).
    None,
}

/// Reaction (drift) term `f(u)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum ReactionSpec {
    Zero,
    /// `K u`
    Linear { rate: f64 },
    /// `a u - k u^r`
    Logistic { a: f64, k: f64, r: f64 },
    /// `a u + b u^{2m - 1}` (so that `u f(u) = a u^2 + b u^{2m}`)
    PowerPair { a: f64, b: f64, m: f64 },
    /// `u b(u) + k1 u^m` with `b(u) = c1 + c2 u^{m0 - 1}`
    SdeDrift {
        c1: f64,
        c2: f64,
        k1: f64,
        m: f64,
        m0: f64,
    },
}

/// Shape of the factor `phi` in the power-law SDE noise.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum PhiSpec {
    Const { value: f64 },
    /// `phi(x) = x^{alpha / 2}`
    Power { alpha: f64 },
}

/// Noise law `sigma(u) dW`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum NoiseLawSpec {
    /// `sigma dW_t`, one scalar Wiener process.
    Additive { sigma: f64 },
    /// `sigma u dW_t`, one scalar Wiener process.
    Multiplicative { sigma: f64 },
    /// `k2 u^m dW_t(x)`, Wiener random field with covariance `cov`.
    FieldPower { k2: f64, m: f64, cov: CovarianceSpec },
    /// `gamma u dW(x, t)`, lattice space-time white noise.
    WhiteMultiplicative { gamma: f64 },
    /// `k2 x^{(m+1)/2} phi(x) dW_t`, scalar SDE noise.
    SdePower { k2: f64, m: f64, phi: PhiSpec },
}

impl NoiseLawSpec {
    /// True when the driver is a single scalar Wiener process.
    pub fn is_scalar_driven(&self) -> bool {
        matches!(
            self,
            NoiseLawSpec::Additive { .. }
                | NoiseLawSpec::Multiplicative { .. }
                | NoiseLawSpec::SdePower { .. }
        )
    }
}

/// One model: operator + reaction + noise law + positivity handling.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModelSpec {
    pub operator: OperatorSpec,
    pub reaction: ReactionSpec,
    pub noise: NoiseLawSpec,
    /// Clip negative entries to zero after each step (for models whose
    /// solutions stay nonnegative); clipped steps are counted.
    pub positivity_clip: bool,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self.operator {
            OperatorSpec::Laplacian { mu } => {
                if !(mu > 0.0) || !mu.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "diffusivity mu must be positive, got {mu}"
                    )));
                }
            }
            OperatorSpec::PLaplacian { p } => {
                if !(p >= 2.0) || !p.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "p-Laplacian exponent must satisfy p >= 2, got {p}"
                    )));
                }
            }
            OperatorSpec::Decay { lambda } => {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "decay rate must be nonnegative, got {lambda}"
                    )));
                }
            }
            OperatorSpec::None => {}
        }
        match self.reaction {
            ReactionSpec::Zero | ReactionSpec::Linear { .. } => {}
            ReactionSpec::Logistic { r, k, .. } => {
                if !(r >= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "logistic exponent must satisfy r >= 1, got {r}"
                    )));
                }
                if k < 0.0 {
                    return Err(Error::InvalidArgument("logistic k must be >= 0".into()));
                }
            }
            ReactionSpec::PowerPair { m, .. } => {
                if !(m >= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "power-pair exponent must satisfy m >= 1, got {m}"
                    )));
                }
            }
            ReactionSpec::SdeDrift { m, m0, .. } => {
                if !(m >= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "drift exponent must satisfy m >= 1, got {m}"
                    )));
                }
                if !(m0 > 1.0) || !(m0 < m) {
                    return Err(Error::InvalidArgument(format!(
                        "drift exponents must satisfy 1 < m0 < m, got m0={m0}, m={m}"
                    )));
                }
            }
        }
        match &self.noise {
            NoiseLawSpec::Additive { sigma } | NoiseLawSpec::Multiplicative { sigma } => {
                if *sigma < 0.0 {
                    return Err(Error::InvalidArgument("sigma must be >= 0".into()));
                }
            }
            NoiseLawSpec::FieldPower { k2, m, .. } => {
                if *k2 < 0.0 || !(*m >= 0.0) {
                    return Err(Error::InvalidArgument(
                        "field noise needs k2 >= 0 and m >= 0".into(),
                    ));
                }
                if !matches!(
                    self.operator,
                    OperatorSpec::Laplacian { .. } | OperatorSpec::PLaplacian { .. }
                ) {
                    return Err(Error::InvalidArgument(
                        "field noise requires a grid-based operator".into(),
                    ));
                }
            }
            NoiseLawSpec::WhiteMultiplicative { gamma } => {
                if *gamma < 0.0 {
                    return Err(Error::InvalidArgument("gamma must be >= 0".into()));
                }
                if !matches!(
                    self.operator,
                    OperatorSpec::Laplacian { .. } | OperatorSpec::PLaplacian { .. }
                ) {
                    return Err(Error::InvalidArgument(
                        "space-time white noise requires a grid-based operator".into(),
                    ));
                }
            }
            NoiseLawSpec::SdePower { k2, phi, .. } => {
                if *k2 < 0.0 {
                    return Err(Error::InvalidArgument("k2 must be >= 0".into()));
                }
                if let PhiSpec::Power { alpha } = phi {
                    if *alpha < 0.0 {
                        return Err(Error::InvalidArgument("alpha must be >= 0".into()));
                    }
                }
                if !matches!(self.operator, OperatorSpec::None) {
                    return Err(Error::InvalidArgument(
                        "power-law SDE noise requires operator = none".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Initial state of a path.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Field(Field),
    Scalar(f64),
}

/// Saved states of one path.
#[derive(Debug, Clone, PartialEq)]
pub enum States {
    Fields(Vec<Field>),
    Scalars(Vec<f64>),
}

impl States {
    pub fn len(&self) -> usize {
        match self {
            States::Fields(v) => v.len(),
            States::Scalars(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One simulated path sampled at the save stride.
///
/// `times` are uniform multiples of `save_stride * dt`; on overflow the
/// series is truncated at the last finite saved state and the flag is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: States,
    pub seed: SeedSpec,
    /// Number of macro steps in which at least one entry was clipped to 0.
    pub clipped_steps: u64,
    pub overflow: bool,
    pub overflow_time: Option<f64>,
    /// Running maximum of the discrete norm over every integration step
    /// (not only the saved ones).
    pub max_norm: f64,
}

impl Trajectory {
    pub fn fields(&self) -> Option<&[Field]> {
        match &self.states {
            States::Fields(v) => Some(v),
            States::Scalars(_) => None,
        }
    }

    pub fn scalars(&self) -> Option<&[f64]> {
        match &self.states {
            States::Scalars(v) => Some(v),
            States::Fields(_) => None,
        }
    }

    /// Squared discrete norm of the state at a saved index
    /// (`h sum u^2` for fields, `x^2` for scalars).
    pub fn norm_sq_at(&self, idx: usize) -> f64 {
        match &self.states {
            States::Fields(v) => v[idx].norm_sq(),
            States::Scalars(v) => v[idx] * v[idx],
        }
    }
}

/// Fractional power used by reactions and noise amplitudes.
///
/// Integer exponents use the exact integer power (so `u^2` is positive for
/// negative `u` and `u^3` keeps the sign). Non-integer exponents evaluate
/// as `sign(u) |u|^r`, or as `max(u, 0)^r` when the model clips to the
/// nonnegative cone.
fn upow(u: f64, r: f64, clip: bool) -> f64 {
    let rounded = r.round();
    if (r - rounded).abs() < 1e-12 && rounded.abs() < 64.0 {
        return u.powi(rounded as i32);
    }
    if clip {
        u.max(0.0).powf(r)
    } else {
        u.signum() * u.abs().powf(r)
    }
}

fn reaction_eval(spec: &ReactionSpec, u: f64, clip: bool) -> f64 {
    match *spec {
        ReactionSpec::Zero => 0.0,
        ReactionSpec::Linear { rate } => rate * u,
        ReactionSpec::Logistic { a, k, r } => a * u - k * upow(u, r, clip),
        ReactionSpec::PowerPair { a, b, m } => a * u + b * upow(u, 2.0 * m - 1.0, clip),
        ReactionSpec::SdeDrift { c1, c2, k1, m, m0 } => {
            c1 * u + c2 * upow(u, m0, clip) + k1 * upow(u, m, clip)
        }
    }
}

fn phi_eval(phi: &PhiSpec, x: f64, clip: bool) -> f64 {
    match *phi {
        PhiSpec::Const { value } => value,
        PhiSpec::Power { alpha } => upow(x, alpha / 2.0, clip),
    }
}

/// Per-node multiplier applied to a scalar Wiener increment.
fn scalar_noise_amp(law: &NoiseLawSpec, u: f64, clip: bool) -> Result<f64> {
    match law {
        NoiseLawSpec::Additive { sigma } => Ok(*sigma),
        NoiseLawSpec::Multiplicative { sigma } => Ok(sigma * u),
        NoiseLawSpec::SdePower { k2, m, phi } => {
            Ok(k2 * upow(u, (m + 1.0) / 2.0, clip) * phi_eval(phi, u, clip))
        }
        _ => Err(Error::InvalidArgument(
            "noise law is not driven by a scalar Wiener process".into(),
        )),
    }
}

/// Solves `(I + c T) x = rhs` in place, `T = tridiag(-1, 2, -1)`.
///
/// The system matrix is a strictly diagonally dominant M-matrix for any
/// `c > 0`, so the elimination is unconditionally stable and maps
/// nonnegative right-hand sides to nonnegative solutions.
fn thomas_shifted(c: f64, rhs: &mut [f64], work: &mut [f64]) {
    let n = rhs.len();
    let diag = 1.0 + 2.0 * c;
    let off = -c;
    let mut beta = diag;
    work[0] = off / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag - off * work[i - 1];
        work[i] = off / beta;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= work[i] * rhs[i + 1];
    }
}

/// Outcome of one explicit/semi-implicit step.
#[derive(Debug, Clone)]
pub struct StepOutcome<S> {
    pub state: S,
    /// True when positivity clipping changed at least one entry.
    pub clipped: bool,
    /// False when the step produced a non-finite entry (overflow).
    pub finite: bool,
}

/// Fills `out` with the per-node noise contribution `sigma(u) dW` for a
/// precomputed increment.
fn apply_increment(
    model: &ModelSpec,
    u: &[f64],
    inc: &NoiseIncrement,
    out: &mut [f64],
) -> Result<()> {
    let clip = model.positivity_clip;
    match (&model.noise, inc) {
        (NoiseLawSpec::Additive { sigma }, NoiseIncrement::Scalar { value, .. }) => {
            for o in out.iter_mut() {
                *o = sigma * value;
            }
        }
        (NoiseLawSpec::Multiplicative { sigma }, NoiseIncrement::Scalar { value, .. }) => {
            for (o, ui) in out.iter_mut().zip(u) {
                *o = sigma * ui * value;
            }
        }
        (NoiseLawSpec::FieldPower { k2, m, .. }, NoiseIncrement::Field { values, .. }) => {
            if values.len() != u.len() {
                return Err(Error::InvalidArgument("field increment length mismatch".into()));
            }
            for ((o, ui), w) in out.iter_mut().zip(u).zip(values) {
                *o = k2 * upow(*ui, *m, clip) * w;
            }
        }
        (
            NoiseLawSpec::WhiteMultiplicative { gamma },
            NoiseIncrement::SpaceTimeWhite { values, .. },
        ) => {
            if values.len() != u.len() {
                return Err(Error::InvalidArgument("white increment length mismatch".into()));
            }
            for ((o, ui), w) in out.iter_mut().zip(u).zip(values) {
                *o = gamma * ui * w;
            }
        }
        _ => {
            return Err(Error::InvalidArgument(
                "noise increment kind does not match the model's noise law".into(),
            ))
        }
    }
    Ok(())
}

/// One semi-implicit Euler-Maruyama step of a grid model on a supplied
/// noise increment. The p-Laplacian case is a single explicit step; the
/// adaptive step bound is enforced by [`simulate_path`].
pub fn spde_step(
    state: &Field,
    model: &ModelSpec,
    inc: &NoiseIncrement,
    dt: f64,
) -> Result<StepOutcome<Field>> {
    model.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let grid = state.grid();
    let n = grid.interior_count();
    let h = grid.spacing();
    let u = state.values();
    let mut noise = vec![0.0; n];
    apply_increment(model, u, inc, &mut noise)?;

    let mut next = vec![0.0; n];
    match model.operator {
        OperatorSpec::Laplacian { mu } => {
            for i in 0..n {
                next[i] = u[i]
                    + dt * reaction_eval(&model.reaction, u[i], model.positivity_clip)
                    + noise[i];
            }
            let mut work = vec![0.0; n];
            thomas_shifted(dt * mu / (h * h), &mut next, &mut work);
        }
        OperatorSpec::PLaplacian { p } => {
            let div = plap_divergence(u, h, p);
            for i in 0..n {
                next[i] = u[i]
                    + dt * (div[i] + reaction_eval(&model.reaction, u[i], model.positivity_clip))
                    + noise[i];
            }
        }
        OperatorSpec::None => {
            for i in 0..n {
                next[i] = u[i]
                    + dt * reaction_eval(&model.reaction, u[i], model.positivity_clip)
                    + noise[i];
            }
        }
        OperatorSpec::Decay { .. } => {
            return Err(Error::InvalidArgument(
                "decay operator applies to scalar states only".into(),
            ))
        }
    }

    let mut clipped = false;
    if model.positivity_clip {
        for v in &mut next {
            if *v < 0.0 {
                *v = 0.0;
                clipped = true;
            }
        }
    }
    let finite = next.iter().all(|v| v.is_finite());
    Ok(StepOutcome {
        state: Field::new(grid, next)?,
        clipped,
        finite,
    })
}

fn plap_divergence(u: &[f64], h: f64, p: f64) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    let flux = |g: f64| g.abs().powf(p - 2.0) * g;
    let mut left = flux(u[0] / h);
    for i in 0..n {
        let up = if i + 1 < n { u[i + 1] } else { 0.0 };
        let right = flux((up - u[i]) / h);
        out[i] = (right - left) / h;
        left = right;
    }
    out
}

/// Explicit Euler-Maruyama step of a scalar SDE on a supplied scalar
/// Wiener increment `dw ~ N(0, dt)`.
pub fn sde_step(x: f64, model: &ModelSpec, dw: f64, dt: f64) -> Result<f64> {
    model.validate()?;
    Ok(scalar_step_raw(x, model, dw, dt)?.0)
}

fn scalar_step_raw(x: f64, model: &ModelSpec, dw: f64, dt: f64) -> Result<(f64, bool)> {
    let clip = model.positivity_clip;
    let amp = scalar_noise_amp(&model.noise, x, clip)?;
    let mut next = x + dt * reaction_eval(&model.reaction, x, clip) + amp * dw;
    match model.operator {
        OperatorSpec::None => {}
        OperatorSpec::Decay { lambda } => next /= 1.0 + lambda * dt,
        _ => {
            return Err(Error::InvalidArgument(
                "scalar paths support operator none or decay only".into(),
            ))
        }
    }
    let mut clipped = false;
    if clip && next < 0.0 {
        next = 0.0;
        clipped = true;
    }
    Ok((next, clipped))
}

fn step_count(t_end: f64, dt: f64, save_stride: usize) -> Result<usize> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument("horizon T must be positive".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let n = (t_end / dt).round();
    if n < 1.0 || (n * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "T/dt = {} is not a whole number of steps",
            t_end / dt
        )));
    }
    let n = n as usize;
    if save_stride == 0 || n % save_stride != 0 {
        return Err(Error::InvalidArgument(format!(
            "save stride {save_stride} must divide the step count {n}"
        )));
    }
    Ok(n)
}

/// Smallest substep fraction before a collapsing p-Laplacian step bound is
/// treated as overflow.
const MIN_SUBSTEP_FRACTION: f64 = 1e-6;

struct FieldRunner<'m> {
    model: &'m ModelSpec,
    grid: Grid1D,
    factor: Option<FieldFactor>,
    noise: Vec<f64>,
    rhs: Vec<f64>,
    work: Vec<f64>,
    xi: Vec<f64>,
}

impl<'m> FieldRunner<'m> {
    fn new(model: &'m ModelSpec, grid: Grid1D) -> Result<Self> {
        let n = grid.interior_count();
        let factor = match &model.noise {
            NoiseLawSpec::FieldPower { cov, .. } => Some(FieldFactor::from_covariance(cov, grid)?),
            _ => None,
        };
        Ok(FieldRunner {
            model,
            grid,
            factor,
            noise: vec![0.0; n],
            rhs: vec![0.0; n],
            work: vec![0.0; n],
            xi: vec![0.0; n],
        })
    }

    fn draw_noise(&mut self, u: &[f64], rng: &mut ChaCha12Rng, dt: f64) -> Result<()> {
        let clip = self.model.positivity_clip;
        match &self.model.noise {
            NoiseLawSpec::Additive { sigma } => {
                let dw = draw_scalar(rng, dt);
                for o in self.noise.iter_mut() {
                    *o = sigma * dw;
                }
            }
            NoiseLawSpec::Multiplicative { sigma } => {
                let dw = draw_scalar(rng, dt);
                for (o, ui) in self.noise.iter_mut().zip(u) {
                    *o = sigma * ui * dw;
                }
            }
            NoiseLawSpec::FieldPower { k2, m, .. } => {
                let factor = self.factor.as_ref().expect("factor built at init");
                factor.sample_into(rng, dt, &mut self.xi, &mut self.noise);
                for (o, ui) in self.noise.iter_mut().zip(u) {
                    *o *= k2 * upow(*ui, *m, clip);
                }
            }
            NoiseLawSpec::WhiteMultiplicative { gamma } => {
                fill_white(self.grid, rng, dt, &mut self.noise);
                for (o, ui) in self.noise.iter_mut().zip(u) {
                    *o *= gamma * ui;
                }
            }
            NoiseLawSpec::SdePower { .. } => {
                return Err(Error::InvalidArgument(
                    "power-law SDE noise applies to scalar states only".into(),
                ))
            }
        }
        Ok(())
    }

    /// One noise contribution from a scalar increment drawn by the caller
    /// (shared-driver coupling).
    fn noise_from_shared(&mut self, u: &[f64], dw: f64) -> Result<()> {
        let clip = self.model.positivity_clip;
        match &self.model.noise {
            NoiseLawSpec::Additive { sigma } => {
                for o in self.noise.iter_mut() {
                    *o = sigma * dw;
                }
            }
            NoiseLawSpec::Multiplicative { sigma } => {
                for (o, ui) in self.noise.iter_mut().zip(u) {
                    *o = sigma * ui * dw;
                }
            }
            NoiseLawSpec::SdePower { k2, m, phi } => {
                for (o, ui) in self.noise.iter_mut().zip(u) {
                    *o = k2 * upow(*ui, (m + 1.0) / 2.0, clip) * phi_eval(phi, *ui, clip) * dw;
                }
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "coupled runs require scalar-Wiener noise".into(),
                ))
            }
        }
        Ok(())
    }

    /// Advances `u` by one macro step. Returns false when the state went
    /// non-finite or the p-Laplacian step bound collapsed.
    fn advance(&mut self, u: &mut [f64], rng: &mut ChaCha12Rng, dt: f64) -> Result<bool> {
        match self.model.operator {
            OperatorSpec::Laplacian { mu } => {
                self.draw_noise(u, rng, dt)?;
                self.implicit_update(u, mu, dt);
            }
            OperatorSpec::None => {
                self.draw_noise(u, rng, dt)?;
                self.explicit_update(u, dt);
            }
            OperatorSpec::PLaplacian { p } => {
                if !self.plap_substeps(u, rng, dt, p)? {
                    return Ok(false);
                }
            }
            OperatorSpec::Decay { .. } => {
                return Err(Error::InvalidArgument(
                    "decay operator applies to scalar states only".into(),
                ))
            }
        }
        Ok(u.iter().all(|v| v.is_finite()))
    }

    /// Same as `advance` but consuming a caller-supplied shared increment.
    fn advance_shared(&mut self, u: &mut [f64], dw: f64, dt: f64) -> Result<bool> {
        self.noise_from_shared(u, dw)?;
        match self.model.operator {
            OperatorSpec::Laplacian { mu } => self.implicit_update(u, mu, dt),
            OperatorSpec::None => self.explicit_update(u, dt),
            _ => {
                return Err(Error::InvalidArgument(
                    "coupled field runs support the implicit Laplacian or no operator".into(),
                ))
            }
        }
        Ok(u.iter().all(|v| v.is_finite()))
    }

    fn implicit_update(&mut self, u: &mut [f64], mu: f64, dt: f64) {
        let h = self.grid.spacing();
        let clip = self.model.positivity_clip;
        for i in 0..u.len() {
            self.rhs[i] =
                u[i] + dt * reaction_eval(&self.model.reaction, u[i], clip) + self.noise[i];
        }
        thomas_shifted(dt * mu / (h * h), &mut self.rhs, &mut self.work);
        u.copy_from_slice(&self.rhs);
    }

    fn explicit_update(&mut self, u: &mut [f64], dt: f64) {
        let clip = self.model.positivity_clip;
        for i in 0..u.len() {
            u[i] += dt * reaction_eval(&self.model.reaction, u[i], clip) + self.noise[i];
        }
    }

    /// Explicit p-Laplacian update under the documented adaptive bound
    /// `dt_sub <= h^p / (2 p max|delta u|^{p-2})` with `delta u` the
    /// undivided neighbor difference (equivalently
    /// `h^2 / (2 p max|grad u|^{p-2})` for the divided difference).
    fn plap_substeps(
        &mut self,
        u: &mut [f64],
        rng: &mut ChaCha12Rng,
        dt: f64,
        p: f64,
    ) -> Result<bool> {
        let h = self.grid.spacing();
        let clip = self.model.positivity_clip;
        let mut remaining = dt;
        while remaining > 0.0 {
            let mut gmax = u[0].abs() / h;
            for i in 0..u.len() {
                let up = if i + 1 < u.len() { u[i + 1] } else { 0.0 };
                gmax = gmax.max(((up - u[i]) / h).abs());
            }
            let bound = if gmax == 0.0 {
                remaining
            } else {
                h * h / (2.0 * p * gmax.powf(p - 2.0))
            };
            let sub = remaining.min(bound);
            if !sub.is_finite() || sub < dt * MIN_SUBSTEP_FRACTION {
                return Ok(false); // step bound collapsed: treat as overflow
            }
            self.draw_noise(u, rng, sub)?;
            let flux = |g: f64| g.abs().powf(p - 2.0) * g;
            let mut left = flux(u[0] / h);
            for i in 0..u.len() {
                let up = if i + 1 < u.len() { u[i + 1] } else { 0.0 };
                let right = flux((up - u[i]) / h);
                self.rhs[i] = (right - left) / h;
                left = right;
            }
            for i in 0..u.len() {
                u[i] += sub * (self.rhs[i] + reaction_eval(&self.model.reaction, u[i], clip))
                    + self.noise[i];
            }
            if !u.iter().all(|v| v.is_finite()) {
                return Ok(false);
            }
            remaining -= sub;
        }
        Ok(true)
    }
}

fn field_norm(u: &[f64], h: f64) -> f64 {
    (h * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Integrates one path of `model` from `init` to time `T`, saving every
/// `save_stride`-th state (plus the initial one). Deterministic given the
/// seed.
pub fn simulate_path(
    model: &ModelSpec,
    init: &Init,
    t_end: f64,
    dt: f64,
    save_stride: usize,
    seed: SeedSpec,
) -> Result<Trajectory> {
    model.validate()?;
    let n_steps = step_count(t_end, dt, save_stride)?;
    let mut rng = seed.rng();
    match init {
        Init::Field(u0) => {
            if matches!(model.operator, OperatorSpec::Decay { .. }) {
                return Err(Error::InvalidArgument(
                    "decay operator applies to scalar states only".into(),
                ));
            }
            let grid = u0.grid();
            let h = grid.spacing();
            let mut runner = FieldRunner::new(model, grid)?;
            let mut u = u0.values().to_vec();
            let mut times = vec![0.0];
            let mut saved = vec![u0.clone()];
            let mut clipped_steps = 0u64;
            let mut max_norm = field_norm(&u, h);
            let mut overflow = false;
            let mut overflow_time = None;
            for step in 1..=n_steps {
                let ok = runner.advance(&mut u, &mut rng, dt)?;
                if model.positivity_clip {
                    let mut any = false;
                    for v in &mut u {
                        if *v < 0.0 {
                            *v = 0.0;
                            any = true;
                        }
                    }
                    if any {
                        clipped_steps += 1;
                    }
                }
                if !ok || !u.iter().all(|v| v.is_finite()) {
                    overflow = true;
                    overflow_time = Some(step as f64 * dt);
                    break;
                }
                max_norm = max_norm.max(field_norm(&u, h));
                if step % save_stride == 0 {
                    times.push(step as f64 * dt);
                    saved.push(Field::new(grid, u.clone())?);
                }
            }
            Ok(Trajectory {
                times,
                states: States::Fields(saved),
                seed,
                clipped_steps,
                overflow,
                overflow_time,
                max_norm,
            })
        }
        Init::Scalar(x0) => {
            if !matches!(
                model.operator,
                OperatorSpec::None | OperatorSpec::Decay { .. }
            ) {
                return Err(Error::InvalidArgument(
                    "scalar paths support operator none or decay only".into(),
                ));
            }
            let mut x = *x0;
            let mut times = vec![0.0];
            let mut saved = vec![x];
            let mut clipped_steps = 0u64;
            let mut max_norm = x.abs();
            let mut overflow = false;
            let mut overflow_time = None;
            for step in 1..=n_steps {
                let dw = draw_scalar(&mut rng, dt);
                let (next, clipped) = scalar_step_raw(x, model, dw, dt)?;
                if clipped {
                    clipped_steps += 1;
                }
                if !next.is_finite() {
                    overflow = true;
                    overflow_time = Some(step as f64 * dt);
                    break;
                }
                x = next;
                max_norm = max_norm.max(x.abs());
                if step % save_stride == 0 {
                    times.push(step as f64 * dt);
                    saved.push(x);
                }
            }
            Ok(Trajectory {
                times,
                states: States::Scalars(saved),
                seed,
                clipped_steps,
                overflow,
                overflow_time,
                max_norm,
            })
        }
    }
}

/// A shared-driver coupled run: one scalar Wiener stream drives the grid
/// model and every scalar model simultaneously (the same increment per
/// step), enabling pathwise comparison checks.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub spde: Trajectory,
    pub sdes: Vec<Trajectory>,
    /// Number of scalar Wiener increments drawn; exactly one per step.
    pub shared_draws: u64,
}

pub fn simulate_coupled(
    spde_model: &ModelSpec,
    sde_models: &[ModelSpec],
    u0: &Field,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    save_stride: usize,
    seed: SeedSpec,
) -> Result<CoupledRun> {
    spde_model.validate()?;
    for m in sde_models {
        m.validate()?;
    }
    if x0.len() != sde_models.len() {
        return Err(Error::InvalidArgument(
            "one initial value per scalar model is required".into(),
        ));
    }
    if !spde_model.noise.is_scalar_driven()
        || sde_models.iter().any(|m| !m.noise.is_scalar_driven())
    {
        return Err(Error::InvalidArgument(
            "coupled runs require every model to use the scalar Wiener noise form".into(),
        ));
    }
    let n_steps = step_count(t_end, dt, save_stride)?;
    let grid = u0.grid();
    let h = grid.spacing();
    let mut rng = seed.rng();
    let mut runner = FieldRunner::new(spde_model, grid)?;

    let mut u = u0.values().to_vec();
    let mut u_alive = true;
    let mut u_times = vec![0.0];
    let mut u_saved = vec![u0.clone()];
    let mut u_clipped = 0u64;
    let mut u_max = field_norm(&u, h);
    let mut u_overflow_time = None;

    let k = sde_models.len();
    let mut xs = x0.to_vec();
    let mut x_alive = vec![true; k];
    let mut x_times = vec![vec![0.0]; k];
    let mut x_saved: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
    let mut x_clipped = vec![0u64; k];
    let mut x_max: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    let mut x_overflow_time: Vec<Option<f64>> = vec![None; k];

    let mut shared_draws = 0u64;
    for step in 1..=n_steps {
        let dw = draw_scalar(&mut rng, dt);
        shared_draws += 1;
        let t = step as f64 * dt;
        if u_alive {
            let ok = runner.advance_shared(&mut u, dw, dt)?;
            if spde_model.positivity_clip {
                let mut any = false;
                for v in &mut u {
                    if *v < 0.0 {
                        *v = 0.0;
                        any = true;
                    }
                }
                if any {
                    u_clipped += 1;
                }
            }
            if !ok || !u.iter().all(|v| v.is_finite()) {
                u_alive = false;
                u_overflow_time = Some(t);
            } else {
                u_max = u_max.max(field_norm(&u, h));
                if step % save_stride == 0 {
                    u_times.push(t);
                    u_saved.push(Field::new(grid, u.clone())?);
                }
            }
        }
        for j in 0..k {
            if !x_alive[j] {
                continue;
            }
            let (next, clipped) = scalar_step_raw(xs[j], &sde_models[j], dw, dt)?;
            if clipped {
                x_clipped[j] += 1;
            }
            if !next.is_finite() {
                x_alive[j] = false;
                x_overflow_time[j] = Some(t);
                continue;
            }
            xs[j] = next;
            x_max[j] = x_max[j].max(next.abs());
            if step % save_stride == 0 {
                x_times[j].push(t);
                x_saved[j].push(next);
            }
        }
    }

    let spde = Trajectory {
        times: u_times,
        states: States::Fields(u_saved),
        seed,
        clipped_steps: u_clipped,
        overflow: !u_alive,
        overflow_time: u_overflow_time,
        max_norm: u_max,
    };
    let sdes = (0..k)
        .map(|j| Trajectory {
            times: std::mem::take(&mut x_times[j]),
            states: States::Scalars(std::mem::take(&mut x_saved[j])),
            seed,
            clipped_steps: x_clipped[j],
            overflow: !x_alive[j],
            overflow_time: x_overflow_time[j],
            max_norm: x_max[j],
        })
        .collect();
    Ok(CoupledRun {
        spde,
        sdes,
        shared_draws,
    })
}

/// Projects each saved field state onto the principal eigenfunction:
/// `v(t_n) = h sum_i u(x_i, t_n) phi_1(x_i)`.
pub fn project_phi1(traj: &Trajectory, eig: &EigenPair) -> Result<Vec<f64>> {
    let fields = traj.fields().ok_or_else(|| {
        Error::InvalidArgument("projection requires a field trajectory".into())
    })?;
    fields.iter().map(|f| f.inner(&eig.phi1)).collect()
}

/// Runs `paths` independent paths (path index = seed stream index) in
/// parallel and returns them in ascending path order, so downstream
/// reductions are bit-reproducible regardless of scheduling.
pub fn run_ensemble(
    model: &ModelSpec,
    init: &Init,
    t_end: f64,
    dt: f64,
    save_stride: usize,
    master_seed: u64,
    paths: usize,
) -> Result<Vec<Trajectory>> {
    (0..paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(model, init, t_end, dt, save_stride, SeedSpec::new(master_seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_grid, principal_eigenpair, EigMode};
    use crate::noise::scalar_increments;
    use approx::assert_relative_eq;

    fn heat_model(mu: f64, sigma: f64) -> ModelSpec {
        ModelSpec {
            operator: OperatorSpec::Laplacian { mu },
            reaction: ReactionSpec::Zero,
            noise: NoiseLawSpec::Additive { sigma },
            positivity_clip: false,
        }
    }

    #[test]
    fn implicit_step_decays_single_mode() {
        let grid = build_grid(1.0, 24).unwrap();
        let eig = principal_eigenpair(grid, EigMode::Discrete);
        let model = heat_model(0.7, 0.0);
        let dt = 1e-3;
        let inc = NoiseIncrement::Scalar { dt, value: 0.0 };
        let out = spde_step(&eig.phi1, &model, &inc, dt).unwrap();
        let shrink = 1.0 / (1.0 + dt * 0.7 * eig.lambda1);
        for (v, p) in out.state.values().iter().zip(eig.phi1.values()) {
            assert_relative_eq!(*v, p * shrink, max_relative = 1e-12);
        }
    }

    #[test]
    fn implicit_step_matches_dense_solve() {
        let grid = build_grid(1.0, 12).unwrap();
        let n = grid.interior_count();
        let h = grid.spacing();
        let (mu, dt) = (1.3, 2e-3);
        let u0 = Field::from_fn(grid, |x| (x * 7.0).sin() * x);
        let model = heat_model(mu, 0.0);
        let inc = NoiseIncrement::Scalar { dt, value: 0.0 };
        let ours = spde_step(&u0, &model, &inc, dt).unwrap();
        let c = dt * mu / (h * h);
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0 + 2.0 * c
            } else if i.abs_diff(j) == 1 {
                -c
            } else {
                0.0
            }
        });
        let rhs = nalgebra::DVector::from_column_slice(u0.values());
        let x = m.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert_relative_eq!(ours.state.values()[i], x[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn multiplicative_euler_step_exactness() {
        // no operator, no reaction, sigma(u) = u: one step is u (1 + dW)
        let grid = build_grid(1.0, 5).unwrap();
        let u0 = Field::from_fn(grid, |_| 1.0);
        let model = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Zero,
            noise: NoiseLawSpec::Multiplicative { sigma: 1.0 },
            positivity_clip: false,
        };
        let inc = NoiseIncrement::Scalar { dt: 0.5, value: 0.1 };
        let out = spde_step(&u0, &model, &inc, 0.5).unwrap();
        for v in out.state.values() {
            assert_relative_eq!(*v, 1.1, max_relative = 1e-15);
        }
    }

    #[test]
    fn sde_step_examples() {
        let gbm = |a: f64| ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Linear { rate: a },
            noise: NoiseLawSpec::Multiplicative { sigma: 1.0 },
            positivity_clip: false,
        };
        // f = 0, sigma(u) = u, x = 1, dW = 0.1
        assert_relative_eq!(sde_step(1.0, &gbm(0.0), 0.1, 0.25).unwrap(), 1.1);
        // GBM one step: 1 + a dt + sigma dW
        assert_relative_eq!(
            sde_step(1.0, &gbm(0.3), 0.05, 0.01).unwrap(),
            1.0 + 0.3 * 0.01 + 0.05,
            max_relative = 1e-15
        );
        // pure cubic drift step
        let cubic = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::SdeDrift {
                c1: 0.0,
                c2: 0.0,
                k1: 2.0,
                m: 3.0,
                m0: 2.0,
            },
            noise: NoiseLawSpec::SdePower {
                k2: 0.0,
                m: 3.0,
                phi: PhiSpec::Const { value: 1.0 },
            },
            positivity_clip: false,
        };
        let x = 1.5f64;
        assert_relative_eq!(
            sde_step(x, &cubic, 0.0, 0.01).unwrap(),
            x + 0.01 * 2.0 * x * x * x,
            max_relative = 1e-15
        );
    }

    #[test]
    fn heat_path_is_a_contraction() {
        let grid = build_grid(1.0, 32).unwrap();
        let u0 = Field::from_fn(grid, |x| (9.0 * x).sin() + 0.3);
        let model = heat_model(1.0, 0.0);
        let traj =
            simulate_path(&model, &Init::Field(u0.clone()), 0.1, 1e-3, 10, SeedSpec::new(1, 0))
                .unwrap();
        let last = traj.fields().unwrap().last().unwrap();
        assert!(last.norm() <= u0.norm());
        assert!(!traj.overflow);
    }

    #[test]
    fn logistic_ode_approaches_fixed_point() {
        let model = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Logistic { a: 1.0, k: 1.0, r: 3.0 },
            noise: NoiseLawSpec::Additive { sigma: 0.0 },
            positivity_clip: false,
        };
        let traj =
            simulate_path(&model, &Init::Scalar(0.1), 20.0, 1e-3, 1000, SeedSpec::new(1, 0))
                .unwrap();
        let last = *traj.scalars().unwrap().last().unwrap();
        assert!((last - 1.0).abs() <= 1e-3, "endpoint {last}");
    }

    #[test]
    fn paths_are_deterministic() {
        let grid = build_grid(1.0, 16).unwrap();
        let eig = principal_eigenpair(grid, EigMode::Discrete);
        let model = ModelSpec {
            operator: OperatorSpec::Laplacian { mu: 1.0 },
            reaction: ReactionSpec::Linear { rate: 2.0 },
            noise: NoiseLawSpec::Multiplicative { sigma: 0.8 },
            positivity_clip: false,
        };
        let run = || {
            simulate_path(
                &model,
                &Init::Field(eig.phi1.clone()),
                0.2,
                1e-3,
                20,
                SeedSpec::new(77, 5),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn em_strong_order_half_for_gbm() {
        // RMS endpoint error versus the pathwise exact GBM solution built
        // from the same increments must shrink by >= 1.3 per dt halving.
        let (a, sigma, t_end): (f64, f64, f64) = (0.5, 1.0, 1.0);
        let model = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Linear { rate: a },
            noise: NoiseLawSpec::Multiplicative { sigma },
            positivity_clip: false,
        };
        let paths = 200;
        let dt_fine = 2e-3;
        let n_fine = (t_end / dt_fine).round() as usize;
        let mut sq_err_fine = 0.0;
        let mut sq_err_coarse = 0.0;
        for p in 0..paths {
            let incs = scalar_increments(&SeedSpec::new(2024, p), dt_fine, n_fine).unwrap();
            let w_end: f64 = incs.iter().sum();
            let exact = 1.0 * ((a - sigma * sigma / 2.0) * t_end + sigma * w_end).exp();
            let mut xf = 1.0;
            for dw in &incs {
                xf = sde_step(xf, &model, *dw, dt_fine).unwrap();
            }
            let mut xc = 1.0;
            for pair in incs.chunks(2) {
                xc = sde_step(xc, &model, pair[0] + pair[1], 2.0 * dt_fine).unwrap();
            }
            sq_err_fine += (xf - exact) * (xf - exact);
            sq_err_coarse += (xc - exact) * (xc - exact);
        }
        let ratio = (sq_err_coarse / sq_err_fine).sqrt();
        assert!(ratio >= 1.3, "strong-convergence factor {ratio}");
    }

    #[test]
    fn implicit_heat_preserves_sign_without_clipping() {
        let grid = build_grid(1.0, 20).unwrap();
        let u0 = Field::from_fn(grid, |x| (13.0 * x).sin().abs() + 0.01);
        let model = heat_model(2.0, 0.0);
        let traj = simulate_path(&model, &Init::Field(u0), 0.2, 1e-3, 1, SeedSpec::new(4, 0))
            .unwrap();
        assert_eq!(traj.clipped_steps, 0);
        for f in traj.fields().unwrap() {
            assert!(f.values().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn coupled_operator_free_models_coincide() {
        // spatially constant data with no operator: the field path equals
        // the scalar path at every node and step.
        let grid = build_grid(1.0, 8).unwrap();
        let c = 0.7;
        let u0 = Field::from_fn(grid, |_| c);
        let f = ReactionSpec::Logistic { a: -1.0, k: 0.5, r: 3.0 };
        let noise = NoiseLawSpec::Multiplicative { sigma: 1.0 };
        let spde = ModelSpec {
            operator: OperatorSpec::None,
            reaction: f,
            noise: noise.clone(),
            positivity_clip: false,
        };
        let sde = spde.clone();
        let run = simulate_coupled(
            &spde,
            &[sde],
            &u0,
            &[c],
            0.5,
            1e-3,
            1,
            SeedSpec::new(31, 0),
        )
        .unwrap();
        assert_eq!(run.shared_draws, 500);
        let xs = run.sdes[0].scalars().unwrap();
        for (fld, x) in run.spde.fields().unwrap().iter().zip(xs) {
            for v in fld.values() {
                assert!((v - x).abs() <= 1e-10, "field {v} vs scalar {x}");
            }
        }
    }

    #[test]
    fn coupled_zero_noise_sandwich_is_exact() {
        // f(u) = -u, sigma = 0: deterministic comparison u- <= u <= u+.
        let grid = build_grid(1.0, 16).unwrap();
        let delta = 0.1;
        let u0 = Field::from_fn(grid, |x| delta * (2.0 * std::f64::consts::PI * x).sin());
        let mkmodel = |op| ModelSpec {
            operator: op,
            reaction: ReactionSpec::Linear { rate: -1.0 },
            noise: NoiseLawSpec::Multiplicative { sigma: 0.0 },
            positivity_clip: false,
        };
        let run = simulate_coupled(
            &mkmodel(OperatorSpec::Laplacian { mu: 1.0 }),
            &[mkmodel(OperatorSpec::None), mkmodel(OperatorSpec::None)],
            &u0,
            &[2.0 * delta, -2.0 * delta],
            0.3,
            1e-3,
            1,
            SeedSpec::new(9, 0),
        )
        .unwrap();
        let upper = run.sdes[0].scalars().unwrap();
        let lower = run.sdes[1].scalars().unwrap();
        for (i, fld) in run.spde.fields().unwrap().iter().enumerate() {
            for v in fld.values() {
                assert!(*v <= upper[i] + 1e-12 && *v >= lower[i] - 1e-12);
            }
        }
    }

    #[test]
    fn coupled_rejects_mixed_noise_kinds() {
        let grid = build_grid(1.0, 8).unwrap();
        let u0 = Field::zeros(grid);
        let spde = ModelSpec {
            operator: OperatorSpec::Laplacian { mu: 1.0 },
            reaction: ReactionSpec::Zero,
            noise: NoiseLawSpec::WhiteMultiplicative { gamma: 0.1 },
            positivity_clip: false,
        };
        let sde = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Zero,
            noise: NoiseLawSpec::Multiplicative { sigma: 1.0 },
            positivity_clip: false,
        };
        assert!(matches!(
            simulate_coupled(&spde, &[sde], &u0, &[0.0], 0.1, 1e-3, 1, SeedSpec::new(1, 0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let grid = build_grid(1.0, 255).unwrap();
        let eig = principal_eigenpair(grid, EigMode::Discrete);
        let ones = Field::from_fn(grid, |_| 1.0);
        // single "trajectory" holding the chosen states directly
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: States::Fields(vec![
                ones,
                Field::zeros(grid),
                eig.phi1.scaled(2.0),
            ]),
            seed: SeedSpec::new(0, 0),
            clipped_steps: 0,
            overflow: false,
            overflow_time: None,
            max_norm: 0.0,
        };
        let v = project_phi1(&traj, &eig).unwrap();
        assert!((v[0] - 1.0).abs() <= 1e-12); // h * sum(phi1) = 1
        assert_eq!(v[1], 0.0);
        // 2 h sum(phi1^2) versus the continuum quadrature value
        // 2 * pi^2/8 = pi^2/4
        assert!((v[2] - 2.0 * eig.phi1.norm_sq()).abs() <= 1e-12);
        assert!((v[2] - std::f64::consts::PI.powi(2) / 4.0).abs() <= 1e-3);
    }

    #[test]
    fn cubic_blowup_sets_overflow_and_truncates() {
        let model = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::SdeDrift {
                c1: 0.0,
                c2: 0.0,
                k1: 1.0,
                m: 3.0,
                m0: 2.0,
            },
            noise: NoiseLawSpec::SdePower {
                k2: 0.0,
                m: 3.0,
                phi: PhiSpec::Const { value: 1.0 },
            },
            positivity_clip: false,
        };
        let traj = simulate_path(&model, &Init::Scalar(1.0), 0.6, 1e-4, 1, SeedSpec::new(0, 0))
            .unwrap();
        assert!(traj.overflow);
        assert!(traj.overflow_time.unwrap() < 0.6);
        assert!(traj.scalars().unwrap().iter().all(|x| x.is_finite()));
        assert!(*traj.times.last().unwrap() < 0.6);
        // the deterministic escape beyond the 1e6 proxy happens near
        // t* = 1 / (2 k1 x0^2) = 0.5
        let xs = traj.scalars().unwrap();
        let cross = traj
            .times
            .iter()
            .zip(xs)
            .find(|(_, x)| **x > 1e6)
            .map(|(t, _)| *t)
            .unwrap();
        assert!((cross - 0.5).abs() <= 0.025, "escape time {cross}");
    }

    #[test]
    fn clipping_is_counted() {
        let model = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Linear { rate: -2000.0 },
            noise: NoiseLawSpec::Additive { sigma: 0.0 },
            positivity_clip: true,
        };
        let traj = simulate_path(&model, &Init::Scalar(1.0), 0.1, 1e-2, 1, SeedSpec::new(0, 0))
            .unwrap();
        assert!(traj.clipped_steps >= 1);
        assert!(traj.scalars().unwrap().iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn plaplacian_path_decays_under_substepping() {
        let grid = build_grid(1.0, 16).unwrap();
        let u0 = Field::from_fn(grid, |x| (std::f64::consts::PI * x).sin());
        let model = ModelSpec {
            operator: OperatorSpec::PLaplacian { p: 4.0 },
            reaction: ReactionSpec::Zero,
            noise: NoiseLawSpec::Additive { sigma: 0.0 },
            positivity_clip: false,
        };
        let traj =
            simulate_path(&model, &Init::Field(u0.clone()), 0.02, 1e-3, 4, SeedSpec::new(0, 0))
                .unwrap();
        assert!(!traj.overflow);
        let norms: Vec<f64> = (0..traj.times.len()).map(|i| traj.norm_sq_at(i)).collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "p-Laplacian energy grew: {w:?}");
        }
    }

    #[test]
    fn ensemble_is_ordered_and_deterministic() {
        let model = ModelSpec {
            operator: OperatorSpec::None,
            reaction: ReactionSpec::Linear { rate: 0.5 },
            noise: NoiseLawSpec::Multiplicative { sigma: 1.0 },
            positivity_clip: false,
        };
        let a = run_ensemble(&model, &Init::Scalar(1.0), 0.1, 1e-2, 1, 5, 16).unwrap();
        let b = run_ensemble(&model, &Init::Scalar(1.0), 0.1, 1e-2, 1, 5, 16).unwrap();
        assert_eq!(a, b);
        for (i, t) in a.iter().enumerate() {
            assert_eq!(t.seed.path_index, i as u64);
        }
    }

    #[test]
    fn step_count_validation() {
        assert!(step_count(1.0, 1e-3, 10).is_ok());
        assert!(step_count(1.0, 3e-4, 1).is_err()); // not integral
        assert!(step_count(1.0, 1e-3, 7).is_err()); // stride does not divide
        assert!(step_count(-1.0, 1e-3, 1).is_err());
        assert!(step_count(1.0, 0.0, 1).is_err());
    }
}
