//! Reproducible noise drivers: the scalar Wiener process `W_t`, a Wiener
//! random field `W_t(x)` with spatial covariance `q(x, y)`, and the lattice
//! approximation of space-time white noise `W(x, t)`.
//!
//! Every generator is a pure function of a [`SeedSpec`] and the shape
//! parameters. Distinct path indices select distinct ChaCha streams under
//! one master key, so ensemble members are statistically independent and
//! can run concurrently without coordination.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::Grid1D;

/// Seed for one simulated path: a master seed plus the path's index in the
/// ensemble. The per-path generator is a pure function of both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        SeedSpec {
            master_seed,
            path_index,
        }
    }

    /// Counter-based stream split: one ChaCha key per master seed, one
    /// stream per path index.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.path_index);
        rng
    }
}

/// Spatial covariance kernel of the Wiener random field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum CovKernel {
    /// `q(x, y) = q0` (perfectly correlated field, rank one).
    Constant { q0: f64 },
    /// `q(x, y) = q0 * exp(-(x - y)^2 / ell^2)`.
    SquaredExponential { q0: f64, ell: f64 },
}

/// Covariance specification together with its grid bounds
/// `q0 = sup q >= max Q_ij` and `q1 = inf q <= min Q_ij`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CovarianceSpec {
    pub kernel: CovKernel,
}

impl CovarianceSpec {
    pub fn constant(q0: f64) -> Result<Self> {
        if !q0.is_finite() || q0 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "constant kernel level must be nonnegative, got {q0}"
            )));
        }
        Ok(CovarianceSpec {
            kernel: CovKernel::Constant { q0 },
        })
    }

    pub fn squared_exponential(q0: f64, ell: f64) -> Result<Self> {
        if !q0.is_finite() || q0 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "kernel level must be nonnegative, got {q0}"
            )));
        }
        if !ell.is_finite() || ell <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "length scale must be positive, got {ell}"
            )));
        }
        Ok(CovarianceSpec {
            kernel: CovKernel::SquaredExponential { q0, ell },
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.kernel {
            CovKernel::Constant { q0 } => q0,
            CovKernel::SquaredExponential { q0, ell } => {
                let d = (x - y) / ell;
                q0 * (-d * d).exp()
            }
        }
    }

    /// Covariance matrix `Q_ij = q(x_i, x_j)` on the grid nodes.
    pub fn matrix(&self, grid: Grid1D) -> nalgebra::DMatrix<f64> {
        let n = grid.interior_count();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.eval(grid.node(i), grid.node(j)))
    }

    /// `(q0, q1)`: supremum and infimum of the kernel over the grid nodes.
    pub fn bounds(&self, grid: Grid1D) -> (f64, f64) {
        let n = grid.interior_count();
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let v = self.eval(grid.node(i), grid.node(j));
                hi = hi.max(v);
                lo = lo.min(v);
            }
        }
        (hi, lo)
    }
}

/// One time-step increment of a noise driver.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseIncrement {
    /// `dW ~ N(0, dt)` of the scalar Wiener process.
    Scalar { dt: f64, value: f64 },
    /// `dW(x_i) = sqrt(dt) (A xi)_i` with `A A^T = Q`.
    Field { dt: f64, values: Vec<f64> },
    /// Lattice space-time white noise: i.i.d. `N(0, dt / h)` per node.
    SpaceTimeWhite { dt: f64, values: Vec<f64> },
}

/// Factor `A` with `A A^T ~= Q`, from a symmetric eigendecomposition with
/// negative eigenvalues clipped at zero.
#[derive(Debug, Clone)]
pub struct FieldFactor {
    n: usize,
    // row-major n x n
    a: Vec<f64>,
}

/// Relative tolerance for both the negative-eigenvalue floor and the
/// reconstruction check `||A A^T - Q||_inf <= 1e-8 max|Q|`.
const FACTOR_TOL: f64 = 1e-8;

impl FieldFactor {
    /// Factors the covariance matrix of `cov` evaluated on `grid`.
    pub fn from_covariance(cov: &CovarianceSpec, grid: Grid1D) -> Result<Self> {
        Self::from_matrix(cov.matrix(grid))
    }

    /// Factors an explicit symmetric positive semidefinite matrix.
    pub fn from_matrix(q: nalgebra::DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::Internal("covariance matrix not square".into()));
        }
        let max_abs = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[(i, j)] - q[(j, i)]).abs() > FACTOR_TOL * max_abs.max(1e-300) {
                    return Err(Error::Internal(
                        "covariance kernel evaluation is not symmetric".into(),
                    ));
                }
            }
        }
        let eig = q.clone().symmetric_eigen();
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            let lam = eig.eigenvalues[k];
            if lam < -FACTOR_TOL * max_abs {
                return Err(Error::InvalidCovariance(format!(
                    "eigenvalue {lam} below tolerance; kernel is not positive semidefinite"
                )));
            }
            let s = lam.max(0.0).sqrt();
            for i in 0..n {
                a[i * n + k] = eig.eigenvectors[(i, k)] * s;
            }
        }
        // reconstruction bound
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += a[i * n + k] * a[j * n + k];
                }
                err = err.max((dot - q[(i, j)]).abs());
            }
        }
        if err > FACTOR_TOL * max_abs.max(1e-300) {
            return Err(Error::Internal(format!(
                "factor reconstruction error {err} exceeds tolerance"
            )));
        }
        Ok(FieldFactor { n, a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Writes `sqrt(dt) * A xi` into `out`, drawing the standard normal
    /// vector `xi` through `scratch`.
    pub fn sample_into(
        &self,
        rng: &mut ChaCha12Rng,
        dt: f64,
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        debug_assert_eq!(scratch.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for xi in scratch.iter_mut() {
            *xi = rng.sample(StandardNormal);
        }
        let s = dt.sqrt();
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            let mut dot = 0.0;
            for (aik, xi) in row.iter().zip(scratch.iter()) {
                dot += aik * xi;
            }
            out[i] = s * dot;
        }
    }
}

/// One `N(0, dt)` draw of the scalar Wiener increment.
pub fn draw_scalar(rng: &mut ChaCha12Rng, dt: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    dt.sqrt() * z
}

/// Writes i.i.d. `N(0, dt / h)` values (lattice space-time white noise).
pub fn fill_white(grid: Grid1D, rng: &mut ChaCha12Rng, dt: f64, out: &mut [f64]) {
    let s = (dt / grid.spacing()).sqrt();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = s * z;
    }
}

/// The first `steps` increments of the scalar Wiener process, i.i.d.
/// `N(0, dt)`, deterministic given the seed.
pub fn scalar_increments(seed: &SeedSpec, dt: f64, steps: usize) -> Result<Vec<f64>> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let mut rng = seed.rng();
    Ok((0..steps).map(|_| draw_scalar(&mut rng, dt)).collect())
}

/// One increment of the Wiener random field with covariance `Q = A A^T`.
pub fn field_increments(factor: &FieldFactor, seed: &SeedSpec, dt: f64) -> NoiseIncrement {
    let mut rng = seed.rng();
    let mut scratch = vec![0.0; factor.dim()];
    let mut values = vec![0.0; factor.dim()];
    factor.sample_into(&mut rng, dt, &mut scratch, &mut values);
    NoiseIncrement::Field { dt, values }
}

/// One increment of lattice space-time white noise on the grid.
pub fn white_increments(grid: Grid1D, seed: &SeedSpec, dt: f64) -> NoiseIncrement {
    let mut rng = seed.rng();
    let mut values = vec![0.0; grid.interior_count()];
    fill_white(grid, &mut rng, dt, &mut values);
    NoiseIncrement::SpaceTimeWhite { dt, values }
}
