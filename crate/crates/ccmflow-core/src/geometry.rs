//! Riemannian machinery for metrics of the form `M(x) = W(x)^-1`.
//!
//! Paths live on the internal parameter `s in [-1, 1]`: `s = -1` is the
//! reference endpoint, `s = +1` the measured endpoint. Functionals are
//! reported in units of the unit-interval parameterization `sigma = (s+1)/2`,
//! so `E = int_0^1 |c_sigma|_M^2 dsigma`, `L = int_0^1 |c_sigma|_M dsigma`
//! and the geodesic residual is `int_0^1 |nabla_{c_sigma} c_sigma|_M^2
//! dsigma`. Velocities convert as `c_sigma = 2 c_s`, second derivatives pick
//! up a factor 4.

use crate::chebyshev::{self, ChebGrid, ChebSeries};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

type MatrixFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type PartialsFn = Box<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

/// State-dependent metric given through its inverse `W(x)`, with analytic
/// state partials of `W` when available and a central finite-difference
/// fallback otherwise.
pub struct MetricField {
    dim: usize,
    w_eval: MatrixFn,
    w_partials: Option<PartialsFn>,
}

impl MetricField {
    /// Metric from `W(x)` alone; partials fall back to finite differences.
    pub fn new<F>(dim: usize, w_eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self { dim, w_eval: Box::new(w_eval), w_partials: None }
    }

    /// Metric with analytic partials `dW/dx_i`, `i = 0..n-1`.
    pub fn with_partials<F, G>(dim: usize, w_eval: F, w_partials: G) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        Self { dim, w_eval: Box::new(w_eval), w_partials: Some(Box::new(w_partials)) }
    }

    /// Euclidean metric, `W = M = I`.
    pub fn euclidean(dim: usize) -> Self {
        Self::constant(DMatrix::identity(dim, dim))
    }

    /// Constant metric `W(x) = W0`.
    pub fn constant(w0: DMatrix<f64>) -> Self {
        assert_eq!(w0.nrows(), w0.ncols());
        let dim = w0.nrows();
        let zeros = vec![DMatrix::zeros(dim, dim); dim];
        Self::with_partials(dim, move |_| w0.clone(), move |_| zeros.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `W(x)`, validated symmetric to working precision.
    pub fn w(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let w = (self.w_eval)(x);
        let scale = w.amax();
        let mut asym: f64 = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                asym = asym.max((w[(i, j)] - w[(j, i)]).abs());
            }
        }
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::MetricAsymmetric { state: x.iter().copied().collect() });
        }
        Ok((&w + w.transpose()) * 0.5)
    }

    /// `(M, W)` at `x` with `M = W^-1` through a Cholesky factorization;
    /// failure of the factorization is the metric-degeneracy error.
    pub fn metric_at(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let w = self.w(x)?;
        let chol = w.clone().cholesky().ok_or_else(|| Error::MetricDegenerate {
            state: x.iter().copied().collect(),
        })?;
        let m = chol.inverse();
        Ok(((&m + m.transpose()) * 0.5, w))
    }

    /// Partials `dW/dx_i`. Central differences with `h = 1e-6 max(1, |x_i|)`
    /// when no analytic partials were supplied.
    pub fn w_partials(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        if let Some(p) = &self.w_partials {
            return p(x);
        }
        (0..self.dim)
            .map(|i| {
                let h = 1e-6 * x[i].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                ((self.w_eval)(&xp) - (self.w_eval)(&xm)) / (2.0 * h)
            })
            .collect()
    }

    /// Christoffel symbols of the Levi-Civita connection of `M = W^-1`:
    /// `G^k_ij = 1/2 sum_l W_kl (d_i M_lj + d_j M_il - d_l M_ij)` with
    /// `d_i M = -M (d_i W) M`. Returned as one `n x n` matrix per upper
    /// index `k`, symmetric in `(i, j)`.
    pub fn christoffel(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim;
        let (m, w) = self.metric_at(x)?;
        let dw = self.w_partials(x);
        let dm: Vec<DMatrix<f64>> = dw.iter().map(|dwi| -(&m * dwi * &m)).collect();
        let mut gamma = vec![DMatrix::zeros(n, n); n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..=i {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += w[(k, l)] * (dm[i][(l, j)] + dm[j][(i, l)] - dm[l][(i, j)]);
                    }
                    let val = 0.5 * acc;
                    gamma[k][(i, j)] = val;
                    gamma[k][(j, i)] = val;
                }
            }
        }
        Ok(gamma)
    }

    /// Uniform-boundedness witnesses `alpha1 I <= M(x) <= alpha2 I` estimated
    /// by an eigenvalue sweep of `W` over a regular grid on the given box.
    /// These are recorded estimates, not certified bounds.
    pub fn bounds_on_box(
        &self,
        lo: &[f64],
        hi: &[f64],
        points_per_axis: usize,
    ) -> Result<(f64, f64)> {
        if lo.len() != self.dim || hi.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "box must have {} axes",
                self.dim
            )));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidConfig("need at least 2 grid points per axis".into()));
        }
        let mut idx = vec![0usize; self.dim];
        let mut w_min_eig = f64::INFINITY;
        let mut w_max_eig: f64 = 0.0;
        loop {
            let x = DVector::from_iterator(
                self.dim,
                idx.iter().enumerate().map(|(a, &i)| {
                    lo[a] + (hi[a] - lo[a]) * i as f64 / (points_per_axis - 1) as f64
                }),
            );
            let w = self.w(&x)?;
            let eigs = w.symmetric_eigenvalues();
            let (mut emin, mut emax) = (f64::INFINITY, f64::NEG_INFINITY);
            for e in eigs.iter() {
                emin = emin.min(*e);
                emax = emax.max(*e);
            }
            if emin <= 0.0 {
                return Err(Error::MetricDegenerate { state: x.iter().copied().collect() });
            }
            w_min_eig = w_min_eig.min(emin);
            w_max_eig = w_max_eig.max(emax);

            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return Ok((1.0 / w_max_eig, 1.0 / w_min_eig));
                }
                idx[axis] += 1;
                if idx[axis] < points_per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }
}

/// Sampled path: node values (column `j` is `c(s_j)`, so column 0 is the
/// measured endpoint and the last column the reference endpoint) together
/// with the Chebyshev coefficient matrix of the interpolant.
#[derive(Debug, Clone)]
pub struct PathState {
    grid: ChebGrid,
    values: DMatrix<f64>,
    coeffs: DMatrix<f64>,
}

impl PathState {
    /// Build from node values, fitting one Chebyshev series per component.
    pub fn from_values(grid: ChebGrid, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.ncols() });
        }
        let mut coeffs = DMatrix::zeros(values.nrows(), values.ncols());
        let mut row = vec![0.0; values.ncols()];
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                row[j] = values[(i, j)];
            }
            let series = chebyshev::fit(&row, &grid)?;
            for (j, c) in series.coeffs().iter().enumerate() {
                coeffs[(i, j)] = *c;
            }
        }
        Ok(Self { grid, values, coeffs })
    }

    /// Affine path from the reference state (`s = -1`) to the measured state
    /// (`s = +1`), exact at the endpoints.
    pub fn straight_line(
        grid: ChebGrid,
        x_measured: &DVector<f64>,
        x_reference: &DVector<f64>,
    ) -> Result<Self> {
        if x_measured.len() != x_reference.len() {
            return Err(Error::DimensionMismatch(
                "endpoints must have equal dimension".into(),
            ));
        }
        let n = x_measured.len();
        let mut values = DMatrix::zeros(n, grid.len());
        for (j, &s) in grid.nodes().iter().enumerate() {
            let lam = (s + 1.0) / 2.0;
            for i in 0..n {
                values[(i, j)] = lam * x_measured[i] + (1.0 - lam) * x_reference[i];
            }
        }
        Self::from_values(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn order(&self) -> usize {
        self.grid.order()
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Same grid, new node values.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::from_values(self.grid.clone(), values)
    }

    /// Measured-state endpoint `c(+1)` (column 0).
    pub fn measured_endpoint(&self) -> DVector<f64> {
        self.values.column(0).into_owned()
    }

    /// Reference endpoint `c(-1)` (last column).
    pub fn reference_endpoint(&self) -> DVector<f64> {
        self.values.column(self.grid.order()).into_owned()
    }

    fn component(&self, i: usize) -> ChebSeries {
        ChebSeries::from_coeffs(self.coeffs.row(i).iter().copied().collect())
    }

    /// Evaluate the interpolant at `s in [-1, 1]`.
    pub fn eval(&self, s: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.dim() {
            out[i] = self.component(i).eval(s)?;
        }
        Ok(out)
    }

    /// `dc/ds` at the grid nodes (internal-domain velocity), computed
    /// spectrally from the coefficient rows.
    pub fn velocity_at_nodes(&self) -> DMatrix<f64> {
        self.derivative_at_nodes(1)
    }

    /// `d^2c/ds^2` at the grid nodes.
    pub fn second_derivative_at_nodes(&self) -> DMatrix<f64> {
        self.derivative_at_nodes(2)
    }

    fn derivative_at_nodes(&self, order: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.grid.len());
        for i in 0..self.dim() {
            let mut series = self.component(i);
            for _ in 0..order {
                series = series.differentiate();
            }
            for (j, &s) in self.grid.nodes().iter().enumerate() {
                out[(i, j)] = series.eval_clamped(s);
            }
        }
        out
    }

    /// Re-sample onto another grid. Exact when the new order is at least the
    /// current one.
    pub fn refit(&self, grid: ChebGrid) -> Result<Self> {
        let mut values = DMatrix::zeros(self.dim(), grid.len());
        for (j, &s) in grid.nodes().iter().enumerate() {
            for i in 0..self.dim() {
                values[(i, j)] = self.component(i).eval_clamped(s);
            }
        }
        Self::from_values(grid, values)
    }
}

fn m_norm_sq(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (m * v).dot(v)
}

/// Covariant derivative `nabla_{c_s} c_s` of the path in the internal
/// parameterization, one column per node:
/// `(nabla_{c_s} c_s)^k = c_ss^k + G^k_ij c_s^i c_s^j`.
/// Columns vanish at interior nodes exactly when the path satisfies the
/// geodesic equation there.
pub fn covariant_derivative(metric: &MetricField, path: &PathState) -> Result<DMatrix<f64>> {
    let vel = path.velocity_at_nodes();
    let acc = path.second_derivative_at_nodes();
    covariant_from_derivatives(metric, path, &vel, &acc)
}

pub(crate) fn covariant_from_derivatives(
    metric: &MetricField,
    path: &PathState,
    vel: &DMatrix<f64>,
    acc: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = path.dim();
    let mut out = acc.clone();
    for j in 0..path.grid().len() {
        let x = path.values().column(j).into_owned();
        let gamma = metric.christoffel(&x)?;
        let v = vel.column(j).into_owned();
        for k in 0..n {
            out[(k, j)] += (&gamma[k] * &v).dot(&v);
        }
    }
    Ok(out)
}

/// Riemannian energy `int_0^1 |c_sigma|_M^2 dsigma`, evaluated by
/// Clenshaw-Curtis quadrature on the path's own grid.
pub fn energy(metric: &MetricField, path: &PathState) -> Result<f64> {
    let vel = path.velocity_at_nodes();
    energy_from_velocity(metric, path, &vel)
}

pub(crate) fn energy_from_velocity(
    metric: &MetricField,
    path: &PathState,
    vel: &DMatrix<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for (j, &w) in path.grid().weights().iter().enumerate() {
        let (m, _) = metric.metric_at(&path.values().column(j).into_owned())?;
        // |c_sigma|^2 dsigma = 4 |c_s|^2 ds / 2.
        acc += 2.0 * w * m_norm_sq(&m, &vel.column(j).into_owned());
    }
    Ok(acc)
}

/// Riemannian length `int_0^1 |c_sigma|_M dsigma`.
pub fn length(metric: &MetricField, path: &PathState) -> Result<f64> {
    let vel = path.velocity_at_nodes();
    let mut acc = 0.0;
    for (j, &w) in path.grid().weights().iter().enumerate() {
        let (m, _) = metric.metric_at(&path.values().column(j).into_owned())?;
        acc += w * m_norm_sq(&m, &vel.column(j).into_owned()).max(0.0).sqrt();
    }
    Ok(acc)
}

/// Geodesic residual `int_0^1 |nabla_{c_sigma} c_sigma|_M^2 dsigma`;
/// zero exactly on geodesics.
pub fn geodesic_residual(metric: &MetricField, path: &PathState) -> Result<f64> {
    let nabla = covariant_derivative(metric, path)?;
    residual_from_covariant(metric, path, &nabla)
}

pub(crate) fn residual_from_covariant(
    metric: &MetricField,
    path: &PathState,
    nabla: &DMatrix<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for (j, &w) in path.grid().weights().iter().enumerate() {
        let (m, _) = metric.metric_at(&path.values().column(j).into_owned())?;
        // |nabla_sigma|^2 dsigma = 16 |nabla_s|^2 ds / 2.
        acc += 8.0 * w * m_norm_sq(&m, &nabla.column(j).into_owned());
    }
    Ok(acc)
}

/// First variation of energy: given the node velocities `cdot = dc/dt`,
/// returns the predicted `dE/dt`,
/// `dE/dt = 2 [ <cdot, c_sigma>_M ]_{sigma=0}^{1}
///          - 2 int_0^1 <cdot, nabla_{c_sigma} c_sigma>_M dsigma`,
/// which in internal-domain quantities is
/// `4 [<cdot, c_s>_M]_{s=-1}^{+1} - 4 int_{-1}^{1} <cdot, nabla_s>_M ds`.
pub fn first_variation(
    metric: &MetricField,
    path: &PathState,
    cdot: &DMatrix<f64>,
) -> Result<f64> {
    let n_cols = path.grid().len();
    if cdot.nrows() != path.dim() || cdot.ncols() != n_cols {
        return Err(Error::DimensionMismatch(
            "cdot must be n x (N+1) like the path values".into(),
        ));
    }
    let vel = path.velocity_at_nodes();
    let nabla = covariant_derivative(metric, path)?;

    let (m_plus, _) = metric.metric_at(&path.measured_endpoint())?;
    let (m_minus, _) = metric.metric_at(&path.reference_endpoint())?;
    let boundary = (m_plus * vel.column(0)).dot(&cdot.column(0).into_owned())
        - (m_minus * vel.column(n_cols - 1)).dot(&cdot.column(n_cols - 1).into_owned());

    let mut interior = 0.0;
    for (j, &w) in path.grid().weights().iter().enumerate() {
        let (m, _) = metric.metric_at(&path.values().column(j).into_owned())?;
        interior += w * (m * nabla.column(j)).dot(&cdot.column(j).into_owned());
    }
    Ok(4.0 * (boundary - interior))
}
