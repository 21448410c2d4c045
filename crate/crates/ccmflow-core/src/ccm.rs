//! Contraction-certificate core: differential gain `K = Y W^-1`, the
//! feedback law integrated along a path, and pointwise verification of the
//! synthesis matrix inequality.

use crate::chebyshev::{self, ChebSeries};
use crate::geometry::{MetricField, PathState};
use crate::plant::Plant;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

type YFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Certificate `(W, Y, lambda)`: the metric field, the gain factor
/// `Y(x) in R^{m x n}` and the contraction rate.
pub struct CcmCertificate {
    metric: MetricField,
    y_eval: YFn,
    lambda: f64,
}

impl CcmCertificate {
    pub fn new<Y>(metric: MetricField, y_eval: Y, lambda: f64) -> Result<Self>
    where
        Y: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if !(lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "contraction rate must be positive, got {lambda}"
            )));
        }
        Ok(Self { metric, y_eval: Box::new(y_eval), lambda })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn y(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.y_eval)(x)
    }

    /// Overshoot estimate `sqrt(alpha2 / alpha1)` from a metric sweep over
    /// the given box.
    pub fn overshoot_on_box(
        &self,
        lo: &[f64],
        hi: &[f64],
        points_per_axis: usize,
    ) -> Result<f64> {
        let (a1, a2) = self.metric.bounds_on_box(lo, hi, points_per_axis)?;
        Ok((a2 / a1).sqrt())
    }
}

/// Differential gain `K(x) = Y(x) W(x)^-1`.
pub fn gain(cert: &CcmCertificate, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (m, _w) = cert.metric().metric_at(x)?;
    Ok(cert.y(x) * m)
}

/// Largest eigenvalue of the symmetric synthesis matrix
/// `-Wdot + A W + W A^T - B Y - Y^T B^T + 2 lambda W`
/// at `(x, u)`, with `Wdot = sum_i dW/dx_i * xdot_i` taken along the
/// open-loop flow `xdot = F(x, u)`. The certificate holds at `(x, u)` when
/// the value is at most the verification tolerance; a positive value is
/// data, not an error.
pub fn lmi_residual(
    cert: &CcmCertificate,
    plant: &Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    let w = cert.metric().w(x)?;
    let xdot = plant.flow(x, u);
    let partials = cert.metric().w_partials(x);
    let mut wdot = DMatrix::zeros(w.nrows(), w.ncols());
    for (i, dwi) in partials.iter().enumerate() {
        wdot += dwi * xdot[i];
    }
    let a = plant.jacobian(x, u);
    let b = plant.input_matrix(x);
    let y = cert.y(x);
    let by = &b * &y;
    let g = -wdot + &a * &w + &w * a.transpose() - &by - by.transpose()
        + 2.0 * cert.lambda() * &w;
    let sym = (&g + g.transpose()) * 0.5;
    Ok(sym.symmetric_eigenvalues().max())
}

/// Integrate the differential feedback along the path:
/// `kappa(s) = u* + int_{-1}^{s} K(c(t)) c_t dt`, evaluated at every node.
/// Returns the node values (`m x (N+1)`, column 0 is the measured end) and
/// the control output `u = kappa(+1)`.
pub fn feedback_along_path(
    cert: &CcmCertificate,
    path: &PathState,
    u_star: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m_inputs = u_star.len();
    let n_nodes = path.grid().len();
    let vel = path.velocity_at_nodes();

    // Integrand K(c(s)) c_s(s) sampled at the nodes; the line integral is
    // parameterization-invariant so no Jacobian factor appears.
    let mut integrand = DMatrix::zeros(m_inputs, n_nodes);
    for j in 0..n_nodes {
        let x = path.values().column(j).into_owned();
        let k = gain(cert, &x)?;
        if k.nrows() != m_inputs {
            return Err(Error::DimensionMismatch(format!(
                "gain has {} rows but u* has {}",
                k.nrows(),
                m_inputs
            )));
        }
        integrand.set_column(j, &(k * vel.column(j)));
    }

    let mut kappa = DMatrix::zeros(m_inputs, n_nodes);
    let mut row = vec![0.0; n_nodes];
    for i in 0..m_inputs {
        for j in 0..n_nodes {
            row[j] = integrand[(i, j)];
        }
        let antiderivative = chebyshev::fit(&row, path.grid())?.integrate_cumulative();
        for (j, &s) in path.grid().nodes().iter().enumerate() {
            kappa[(i, j)] = u_star[i] + antiderivative.eval_clamped(s);
        }
    }
    let u = kappa.column(0).into_owned();
    Ok((kappa, u))
}

/// Pointwise closed-loop contraction matrix in metric form:
/// `Mdot + M (A + B K) + (A + B K)^T M + 2 lambda M` with
/// `Mdot = -M Wdot M` along the open-loop flow. Returns its largest
/// eigenvalue.
pub fn differential_stability_residual(
    cert: &CcmCertificate,
    plant: &Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    let (m, _w) = cert.metric().metric_at(x)?;
    let xdot = plant.flow(x, u);
    let partials = cert.metric().w_partials(x);
    let mut wdot = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, dwi) in partials.iter().enumerate() {
        wdot += dwi * xdot[i];
    }
    let mdot = -(&m * wdot * &m);
    let a_cl = plant.jacobian(x, u) + plant.input_matrix(x) * gain(cert, x)?;
    let g = mdot + &m * &a_cl + a_cl.transpose() * &m + 2.0 * cert.lambda() * &m;
    let sym = (&g + g.transpose()) * 0.5;
    Ok(sym.symmetric_eigenvalues().max())
}
