//! Direct geodesic computation: minimize the Riemannian energy over
//! Chebyshev-parameterized paths with fixed endpoints.
//!
//! The optimizer is a descent method on the interior node values with Armijo
//! backtracking (halving). The gradient is the exact derivative of the
//! quadrature energy, assembled from the first variation of the discrete
//! functional with the boundary term dropped (endpoints are never
//! optimization variables). The descent direction solves the metric-frozen
//! normal equations `H d = g`, where `H` is the energy Hessian with the
//! metric values held fixed at the current iterate; this removes the severe
//! ill-conditioning of the spectral differentiation operator that stalls
//! plain gradient steps.

use crate::chebyshev::{self, ChebGrid};
use crate::ccm::{self, CcmCertificate};
use crate::geometry::{self, MetricField, PathState};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Fixed-endpoint energy minimization problem.
pub struct GeodesicProblem<'a> {
    pub metric: &'a MetricField,
    /// Reference endpoint, pinned at `s = -1`.
    pub x_from: DVector<f64>,
    /// Measured endpoint, pinned at `s = +1`.
    pub x_to: DVector<f64>,
    pub order: usize,
    pub options: GeodesicOptions,
}

/// Optimizer settings.
#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    pub max_iterations: usize,
    /// Sup-norm threshold on the interior-node gradient.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Convergence additionally requires
    /// `residual <= residual_tol_rel * (1 + energy)`.
    pub residual_tol_rel: f64,
    /// Keep per-iteration records (energy, gradient norm).
    pub keep_trace: bool,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            grad_tol: 1e-8,
            armijo: 1e-4,
            max_backtracks: 60,
            residual_tol_rel: 1e-6,
            keep_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

/// Result of a geodesic solve. `converged` means the gradient threshold was
/// met and the geodesic residual fell below the declared tolerance; the best
/// iterate is returned either way.
#[derive(Debug, Clone)]
pub struct GeodesicSolution {
    pub path: PathState,
    pub energy: f64,
    /// `int_0^1 |nabla_{c_sigma} c_sigma|_M^2 dsigma` of the returned path.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

impl<'a> GeodesicProblem<'a> {
    pub fn new(metric: &'a MetricField, x_from: DVector<f64>, x_to: DVector<f64>) -> Self {
        Self { metric, x_from, x_to, order: 4, options: GeodesicOptions::default() }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_options(mut self, options: GeodesicOptions) -> Self {
        self.options = options;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidConfig("grid order must be at least 2".into()));
        }
        if self.x_from.len() != self.metric.dim() || self.x_to.len() != self.metric.dim() {
            return Err(Error::DimensionMismatch(
                "endpoints must match the metric dimension".into(),
            ));
        }
        if !(self.x_from.iter().all(|v| v.is_finite()) && self.x_to.iter().all(|v| v.is_finite()))
        {
            return Err(Error::InvalidConfig("endpoints must be finite".into()));
        }
        Ok(())
    }
}

/// Node-space differentiation matrix of the grid, assembled column by
/// column through the same spectral fit/differentiate route used everywhere
/// else, so the optimizer and the energy functional share one operator.
fn differentiation_matrix(grid: &ChebGrid) -> DMatrix<f64> {
    let n = grid.len();
    let mut d = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for k in 0..n {
        unit[k] = 1.0;
        let deriv = chebyshev::fit(&unit, grid).expect("unit sample length matches").differentiate();
        for (j, &s) in grid.nodes().iter().enumerate() {
            d[(j, k)] = deriv.eval_clamped(s);
        }
        unit[k] = 0.0;
    }
    d
}

struct EnergyModel<'a> {
    metric: &'a MetricField,
    grid: ChebGrid,
    diff: DMatrix<f64>,
}

impl<'a> EnergyModel<'a> {
    fn new(metric: &'a MetricField, grid: ChebGrid) -> Self {
        let diff = differentiation_matrix(&grid);
        Self { metric, grid, diff }
    }

    /// Quadrature energy `2 sum_j w_j <Vel_j, M_j Vel_j>` of node values.
    fn energy(&self, values: &DMatrix<f64>) -> Result<f64> {
        let vel = values * self.diff.transpose();
        let mut acc = 0.0;
        for (j, &w) in self.grid.weights().iter().enumerate() {
            let (m, _) = self.metric.metric_at(&values.column(j).into_owned())?;
            let v = vel.column(j);
            acc += 2.0 * w * (&m * v).dot(&v);
        }
        Ok(acc)
    }

    /// Exact gradient of the quadrature energy with respect to every node
    /// value: `g_i = 4 sum_j w_j D_ji M_j Vel_j + 2 w_i h_i` where
    /// `h_i[l] = Vel_i^T (dM_l) Vel_i` and `dM_l = -M (dW_l) M`.
    fn gradient(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = values.nrows();
        let n_nodes = self.grid.len();
        let vel = values * self.diff.transpose();
        let weights = self.grid.weights();

        let mut m_vel = DMatrix::zeros(n, n_nodes);
        let mut metric_term = DMatrix::zeros(n, n_nodes);
        for j in 0..n_nodes {
            let x = values.column(j).into_owned();
            let (m, _) = self.metric.metric_at(&x)?;
            let v = vel.column(j).into_owned();
            m_vel.set_column(j, &(&m * &v));
            let dw = self.metric.w_partials(&x);
            let mut h = DVector::zeros(n);
            for (l, dwl) in dw.iter().enumerate() {
                let dm = -(&m * dwl * &m);
                h[l] = (&dm * &v).dot(&v);
            }
            metric_term.set_column(j, &(h * (2.0 * weights[j])));
        }

        let mut grad = metric_term;
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                let coef = 4.0 * weights[j] * self.diff[(j, i)];
                if coef != 0.0 {
                    for r in 0..n {
                        grad[(r, i)] += coef * m_vel[(r, j)];
                    }
                }
            }
        }
        Ok(grad)
    }

    /// Metric-frozen Hessian over the interior nodes: block `(a, b)` is
    /// `4 sum_j w_j D_ja D_jb M_j`. Symmetric positive-definite, which keeps
    /// the direction solve a small Cholesky; the neglected metric-variation
    /// terms only limit the local convergence rate, not correctness.
    fn frozen_hessian(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = values.nrows();
        let n_nodes = self.grid.len();
        let n_int = n_nodes - 2;
        let weights = self.grid.weights();
        let mut metrics = Vec::with_capacity(n_nodes);
        for j in 0..n_nodes {
            let (m, _) = self.metric.metric_at(&values.column(j).into_owned())?;
            metrics.push(m);
        }
        let mut h = DMatrix::zeros(n_int * n, n_int * n);
        for a in 0..n_int {
            for b in 0..=a {
                let mut block = DMatrix::zeros(n, n);
                for j in 0..n_nodes {
                    let coef = 4.0 * weights[j] * self.diff[(j, a + 1)] * self.diff[(j, b + 1)];
                    if coef != 0.0 {
                        block += &metrics[j] * coef;
                    }
                }
                for r in 0..n {
                    for c in 0..n {
                        h[(a * n + r, b * n + c)] = block[(r, c)];
                        h[(b * n + c, a * n + r)] = block[(r, c)];
                    }
                }
            }
        }
        Ok(h)
    }
}

/// Solve from the straight-line initialization.
pub fn solve_geodesic(problem: &GeodesicProblem) -> Result<GeodesicSolution> {
    problem.validate()?;
    let grid = ChebGrid::new(problem.order)?;
    let init = PathState::straight_line(grid, &problem.x_to, &problem.x_from)?;
    solve_from(problem, init)
}

/// Solve warm-started from a previous path; its interior is kept and the
/// endpoint columns are overwritten with the problem endpoints.
pub fn solve_geodesic_warm(problem: &GeodesicProblem, init: &PathState) -> Result<GeodesicSolution> {
    problem.validate()?;
    let grid = ChebGrid::new(problem.order)?;
    let init = if init.order() == problem.order {
        init.clone()
    } else {
        init.refit(grid.clone())?
    };
    let mut values = init.values().clone();
    values.set_column(0, &problem.x_to);
    values.set_column(problem.order, &problem.x_from);
    solve_from(problem, PathState::from_values(grid, values)?)
}

fn solve_from(problem: &GeodesicProblem, init: PathState) -> Result<GeodesicSolution> {
    let opts = &problem.options;
    let model = EnergyModel::new(problem.metric, init.grid().clone());
    let n_nodes = init.grid().len();
    let n = init.dim();

    let mut values = init.values().clone();
    // Metric degeneracy along the initial path is a caller error.
    let mut energy = model.energy(&values)?;
    let mut grad = interior(&model.gradient(&values)?);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut stalled = false;
    let mut converged_grad = grad.amax() <= opts.grad_tol;
    while !converged_grad && iterations < opts.max_iterations {
        if opts.keep_trace {
            trace.push(IterationRecord { iteration: iterations, energy, grad_norm: grad.amax() });
        }

        // Direction: metric-frozen Newton solve, falling back to a scaled
        // gradient if the factorization is ever unavailable.
        let g_flat = flatten_interior(&grad, n, n_nodes);
        let direction = model
            .frozen_hessian(&values)?
            .cholesky()
            .map(|chol| unflatten_interior(&chol.solve(&g_flat), n, n_nodes))
            .unwrap_or_else(|| &grad / (1.0 + grad.amax()));

        let slope = grad.dot(&direction); // positive for a descent direction
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            let mut trial = values.clone();
            apply_interior(&mut trial, &direction, -step, n_nodes);
            match model.energy(&trial) {
                // Degenerate metric on the trial path: reject and halve.
                Err(Error::MetricDegenerate { .. }) => {}
                Err(e) => return Err(e),
                Ok(e_new) => {
                    if e_new <= energy - opts.armijo * step * slope {
                        // Decreases below the float resolution of E mean the
                        // line search is chasing rounding noise.
                        stalled = energy - e_new <= 16.0 * f64::EPSILON * (1.0 + energy.abs());
                        values = trial;
                        energy = e_new;
                        grad = interior(&model.gradient(&values)?);
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted || stalled {
            break;
        }
        converged_grad = grad.amax() <= opts.grad_tol;
    }
    // Armijo on the energy cannot resolve displacements smaller than
    // sqrt(eps E / H), which leaves the gradient orders of magnitude above
    // its own noise floor. Polish the stationary point with damped Newton on
    // the gradient system, accepting steps that shrink the gradient norm.
    while !converged_grad && iterations < opts.max_iterations {
        if opts.keep_trace {
            trace.push(IterationRecord { iteration: iterations, energy, grad_norm: grad.amax() });
        }
        let jac = match fd_gradient_jacobian(&model, &values, n, n_nodes) {
            Ok(j) => j,
            Err(_) => break,
        };
        let g_flat = flatten_interior(&grad, n, n_nodes);
        let Some(delta) = jac.lu().solve(&g_flat) else { break };
        let direction = unflatten_interior(&delta, n, n_nodes);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            let mut trial = values.clone();
            apply_interior(&mut trial, &direction, -step, n_nodes);
            match model.gradient(&trial) {
                Err(Error::MetricDegenerate { .. }) => {}
                Err(e) => return Err(e),
                Ok(g_full) => {
                    let g_new = interior(&g_full);
                    if g_new.amax() < (1.0 - 1e-4 * step) * grad.amax() {
                        values = trial;
                        grad = g_new;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        converged_grad = grad.amax() <= opts.grad_tol;
    }
    energy = model.energy(&values)?;

    if opts.keep_trace {
        trace.push(IterationRecord { iteration: iterations, energy, grad_norm: grad.amax() });
    }

    let path = PathState::from_values(init.grid().clone(), values)?;
    let residual = geometry::geodesic_residual(problem.metric, &path)?;
    let converged = converged_grad && residual <= opts.residual_tol_rel * (1.0 + energy);
    Ok(GeodesicSolution { path, energy, residual, iterations, converged, trace })
}


/// Finite-difference Jacobian of the interior gradient, used by the Newton
/// polish phase. Columns are central differences of the exact gradient.
fn fd_gradient_jacobian(
    model: &EnergyModel,
    values: &DMatrix<f64>,
    n: usize,
    n_nodes: usize,
) -> Result<DMatrix<f64>> {
    let dim = (n_nodes - 2) * n;
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 1..n_nodes - 1 {
        for i in 0..n {
            let col_idx = (j - 1) * n + i;
            let h = 1e-6 * (1.0 + values[(i, j)].abs());
            let mut vp = values.clone();
            let mut vm = values.clone();
            vp[(i, j)] += h;
            vm[(i, j)] -= h;
            let gp = flatten_interior(&interior(&model.gradient(&vp)?), n, n_nodes);
            let gm = flatten_interior(&interior(&model.gradient(&vm)?), n, n_nodes);
            jac.set_column(col_idx, &((gp - gm) / (2.0 * h)));
        }
    }
    Ok(jac)
}

fn interior(grad: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = grad.clone();
    let last = g.ncols() - 1;
    g.set_column(0, &DVector::zeros(g.nrows()));
    g.set_column(last, &DVector::zeros(g.nrows()));
    g
}

fn flatten_interior(grad: &DMatrix<f64>, n: usize, n_nodes: usize) -> DVector<f64> {
    let mut out = DVector::zeros((n_nodes - 2) * n);
    for j in 1..n_nodes - 1 {
        for i in 0..n {
            out[(j - 1) * n + i] = grad[(i, j)];
        }
    }
    out
}

fn unflatten_interior(flat: &DVector<f64>, n: usize, n_nodes: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n_nodes);
    for j in 1..n_nodes - 1 {
        for i in 0..n {
            out[(i, j)] = flat[(j - 1) * n + i];
        }
    }
    out
}

fn apply_interior(values: &mut DMatrix<f64>, direction: &DMatrix<f64>, scale: f64, n_nodes: usize) {
    for j in 1..n_nodes - 1 {
        for i in 0..values.nrows() {
            values[(i, j)] += scale * direction[(i, j)];
        }
    }
}

/// Static controller: solve the geodesic between the reference and measured
/// states, then integrate the differential feedback along it. The control is
/// returned together with the solution so callers can inspect convergence.
pub fn static_control(
    cert: &CcmCertificate,
    x: &DVector<f64>,
    x_star: &DVector<f64>,
    u_star: &DVector<f64>,
    order: usize,
    options: GeodesicOptions,
) -> Result<(DVector<f64>, GeodesicSolution)> {
    let problem = GeodesicProblem::new(cert.metric(), x_star.clone(), x.clone())
        .with_order(order)
        .with_options(options);
    let solution = solve_geodesic(&problem)?;
    let (_, u) = ccm::feedback_along_path(cert, &solution.path, u_star)?;
    Ok((u, solution))
}
