//! Spatial discretization of the interval `(0, L)` with homogeneous
//! Dirichlet boundary: uniform grid, discrete Laplacian and p-Laplacian in
//! conservative flux form, the principal eigenpair of the negative
//! Laplacian, and the piecewise `C^2` regularization `k_eps` of the squared
//! negative part `k(r) = (r^-)^2`.

use crate::error::{Error, Result};

/// Uniformly spaced interior nodes of the interval `(0, L)`.
///
/// Interior nodes sit at `x_i = i * h` for `i = 1..=N` with `h = L / (N+1)`;
/// the boundary values at `x = 0` and `x = L` are implicit zeros
/// (homogeneous Dirichlet).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    interior_count: usize,
}

/// Builds the grid for the interval `(0, L)` with `N` interior nodes.
pub fn build_grid(length: f64, interior_count: usize) -> Result<Grid1D> {
    if !length.is_finite() || length <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "grid length must be positive and finite, got {length}"
        )));
    }
    if interior_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 interior nodes, got {interior_count}"
        )));
    }
    Ok(Grid1D {
        length,
        interior_count,
    })
}

impl Grid1D {
    /// Domain length `L`; equals the domain measure `|D|` in one dimension.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior nodes `N`.
    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    /// Grid spacing `h = L / (N + 1)`.
    pub fn spacing(&self) -> f64 {
        self.length / (self.interior_count as f64 + 1.0)
    }

    /// Position of interior node `i` (zero-based): `x = (i + 1) * h`.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.spacing()
    }

    /// All interior node positions, strictly increasing inside `(0, L)`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.interior_count).map(|i| self.node(i)).collect()
    }
}

/// State vector `u(., t)` sampled on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.interior_count() {
            return Err(Error::InvalidArgument(format!(
                "field length {} does not match grid interior count {}",
                values.len(),
                grid.interior_count()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.interior_count()],
        }
    }

    /// Samples `f` at the interior node positions.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Field {
            grid,
            values: (0..grid.interior_count()).map(|i| f(grid.node(i))).collect(),
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Discrete squared L2 norm `h * sum_i u_i^2`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Discrete integral `h * sum_i u_i`.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// Discrete weighted inner product `h * sum_i u_i v_i`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument(
                "inner product of fields on different grids".into(),
            ));
        }
        Ok(self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// Which principal eigenvalue accompanies the sampled eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigMode {
    /// `lambda_1 = (pi / L)^2`, the continuum Dirichlet value.
    Continuous,
    /// `lambda_1^h = (2 / h^2)(1 - cos(pi h / L))`, the exact eigenvalue of
    /// the second-difference matrix on the grid.
    Discrete,
}

/// Principal Dirichlet eigenpair `(lambda_1, phi_1)` with `phi_1 >= 0`
/// normalized so that the discrete integral `h * sum phi_1(x_i) = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi1: Field,
    pub normalization_sum: f64,
}

/// Returns the principal eigenpair of `-Laplacian` on the grid's interval.
///
/// Both modes sample `sin(pi x / L)` on the nodes and renormalize to unit
/// discrete integral; they differ only in the reported eigenvalue.
pub fn principal_eigenpair(grid: Grid1D, mode: EigMode) -> EigenPair {
    let length = grid.length();
    let lambda1 = match mode {
        EigMode::Continuous => {
            let k = std::f64::consts::PI / length;
            k * k
        }
        EigMode::Discrete => {
            let h = grid.spacing();
            2.0 / (h * h) * (1.0 - (std::f64::consts::PI * h / length).cos())
        }
    };
    let mut phi = Field::from_fn(grid, |x| (std::f64::consts::PI * x / length).sin());
    let s = phi.integral();
    for v in phi.values_mut() {
        *v /= s;
    }
    let normalization_sum = phi.integral();
    EigenPair {
        lambda1,
        phi1: phi,
        normalization_sum,
    }
}

/// Divergence of an interface flux with Dirichlet ghost values 0:
/// `out_i = (F_{i+1/2} - F_{i-1/2}) / h` where `F_{i+1/2} = flux(g)` and
/// `g = (u_{i+1} - u_i) / h`.
fn conservative_divergence(values: &[f64], h: f64, flux: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut left = flux(values[0] / h);
    for i in 0..n {
        let up = if i + 1 < n { values[i + 1] } else { 0.0 };
        let right = flux((up - values[i]) / h);
        out[i] = (right - left) / h;
        left = right;
    }
    out
}

/// Applies `mu * Laplacian_h` to the field: the standard second difference
/// `mu (u_{i-1} - 2 u_i + u_{i+1}) / h^2` with zero ghost values.
pub fn laplacian_apply(grid: Grid1D, u: &Field, mu: f64) -> Result<Field> {
    if u.grid() != grid {
        return Err(Error::InvalidArgument("field grid does not match".into()));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "diffusivity mu must be positive, got {mu}"
        )));
    }
    let mut out = conservative_divergence(u.values(), grid.spacing(), |g| g);
    for v in &mut out {
        *v *= mu;
    }
    Field::new(grid, out)
}

/// Applies the discrete p-Laplacian `div(|grad u|^{p-2} grad u)` in
/// conservative flux form with zero ghost values.
///
/// For `p = 2` this is identical, operation for operation, to
/// `laplacian_apply` with `mu = 1`.
pub fn p_laplacian_apply(grid: Grid1D, u: &Field, p: f64) -> Result<Field> {
    if u.grid() != grid {
        return Err(Error::InvalidArgument("field grid does not match".into()));
    }
    if !p.is_finite() || p < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "p-Laplacian exponent must satisfy p >= 2, got {p}"
        )));
    }
    let out = conservative_divergence(u.values(), grid.spacing(), |g| g.abs().powf(p - 2.0) * g);
    Field::new(grid, out)
}

fn check_eps(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "regularization width eps must be positive, got {eps}"
        )));
    }
    Ok(())
}

/// `C^2` regularization of `k(r) = (r^-)^2`:
///
/// ```text
/// k_eps(r) = r^2 - eps^2/6                      r < -eps
///          = -(r^3/eps) (r/(2 eps) + 4/3)       -eps <= r < 0
///          = 0                                  r >= 0
/// ```
pub fn k_eps(r: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(if r >= 0.0 {
        0.0
    } else if r < -eps {
        r * r - eps * eps / 6.0
    } else {
        -(r * r * r / eps) * (r / (2.0 * eps) + 4.0 / 3.0)
    })
}

/// First derivative of [`k_eps`], obtained by branchwise differentiation.
pub fn k_eps_d1(r: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(if r >= 0.0 {
        0.0
    } else if r < -eps {
        2.0 * r
    } else {
        // d/dr of -(r^4/(2 eps^2) + 4 r^3/(3 eps))
        -(2.0 * r * r / eps) * (r / eps + 2.0)
    })
}

/// Second derivative of [`k_eps`], obtained by branchwise differentiation.
pub fn k_eps_d2(r: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(if r >= 0.0 {
        0.0
    } else if r < -eps {
        2.0
    } else {
        -(2.0 * r / eps) * (3.0 * r / eps + 4.0)
    })
}
