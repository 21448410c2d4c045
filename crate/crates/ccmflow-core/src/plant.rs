//! Control-affine plants `xdot = f(x) + B(x) u`, the built-in benchmark
//! system with its contraction certificate, disturbance models and
//! reference signals.

use crate::ccm::CcmCertificate;
use crate::geometry::MetricField;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

type VectorFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type MatrixFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type JacobianFn = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Control-affine plant. The linearization `A(x, u) = df/dx + sum_i
/// (db_i/dx) u_i` is analytic when supplied, otherwise obtained by central
/// finite differences of the flow.
pub struct Plant {
    state_dim: usize,
    input_dim: usize,
    f_eval: VectorFn,
    b_eval: MatrixFn,
    a_eval: Option<JacobianFn>,
}

impl Plant {
    pub fn new<F, B>(state_dim: usize, input_dim: usize, f_eval: F, b_eval: B) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        B: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            state_dim,
            input_dim,
            f_eval: Box::new(f_eval),
            b_eval: Box::new(b_eval),
            a_eval: None,
        }
    }

    pub fn with_jacobian<A>(mut self, a_eval: A) -> Self
    where
        A: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.a_eval = Some(Box::new(a_eval));
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f_eval)(x)
    }

    pub fn input_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.b_eval)(x)
    }

    /// Open-loop flow `F(x, u) = f(x) + B(x) u`.
    pub fn flow(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.f_eval)(x) + (self.b_eval)(x) * u
    }

    /// `A(x, u)`: analytic if available, else central differences of the
    /// flow in `x` at fixed `u` (exactly `df/dx + sum (db_i/dx) u_i`).
    pub fn jacobian(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        if let Some(a) = &self.a_eval {
            return a(x, u);
        }
        let n = self.state_dim;
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (self.flow(&xp, u) - self.flow(&xm, u)) / (2.0 * h);
            jac.set_column(i, &col);
        }
        jac
    }
}

/// Printed certificate data for the benchmark system: `W(x) = W0 + W1 x1 +
/// W2 x1^2`, `rho(x) = rho0 + rho1 x1 + rho2 x1^2`, `Y = -rho/2 B^T`,
/// contraction rate 1.
pub const BENCHMARK_W0: [[f64; 3]; 3] = [
    [2.686, 0.237, -1.816],
    [0.237, 16.265, 2.006],
    [-1.816, 2.006, 6.395],
];
pub const BENCHMARK_W1: [[f64; 3]; 3] = [
    [0.0, -5.373, 0.0],
    [-5.373, -0.948, 3.631],
    [0.0, 3.631, 0.0],
];
pub const BENCHMARK_W2: [[f64; 3]; 3] = [
    [0.0, 0.0, 0.0],
    [0.0, 10.747, 0.0],
    [0.0, 0.0, 0.0],
];
pub const BENCHMARK_RHO: [f64; 3] = [19.614, 1.386, 9.616];
pub const BENCHMARK_LAMBDA: f64 = 1.0;

fn mat3(a: &[[f64; 3]; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| a[i][j])
}

/// Benchmark drift: `(-x1 + x3, x1^2 - x2 - 2 x1 x2 + x3, -x2)`.
pub fn benchmark_f(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![
        -x[0] + x[2],
        x[0] * x[0] - x[1] - 2.0 * x[0] * x[1] + x[2],
        -x[1],
    ])
}

/// Analytic Jacobian of the benchmark drift; `B` is constant so the
/// linearization does not depend on `u`.
pub fn benchmark_a(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            -1.0,
            0.0,
            1.0,
            2.0 * x[0] - 2.0 * x[1],
            -1.0 - 2.0 * x[0],
            1.0,
            0.0,
            -1.0,
            0.0,
        ],
    )
}

/// `W(x)` for the benchmark certificate.
pub fn benchmark_w(x: &DVector<f64>) -> DMatrix<f64> {
    mat3(&BENCHMARK_W0) + mat3(&BENCHMARK_W1) * x[0] + mat3(&BENCHMARK_W2) * (x[0] * x[0])
}

/// `rho(x1) = 19.614 + 1.386 x1 + 9.616 x1^2`.
pub fn benchmark_rho(x1: f64) -> f64 {
    BENCHMARK_RHO[0] + BENCHMARK_RHO[1] * x1 + BENCHMARK_RHO[2] * x1 * x1
}

/// Benchmark plant with analytic Jacobian and `B = (0, 0, 1)^T`.
pub fn benchmark() -> Plant {
    Plant::new(3, 1, benchmark_f, |_x| {
        DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0])
    })
    .with_jacobian(|x, _u| benchmark_a(x))
}

/// Benchmark metric field with analytic partials
/// (`dW/dx1 = W1 + 2 W2 x1`, other partials zero).
pub fn benchmark_metric() -> MetricField {
    MetricField::with_partials(3, benchmark_w, |x| {
        vec![
            mat3(&BENCHMARK_W1) + mat3(&BENCHMARK_W2) * (2.0 * x[0]),
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
        ]
    })
}

fn benchmark_y(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 3, &[0.0, 0.0, -0.5 * benchmark_rho(x[0])])
}

/// Benchmark certificate `(W, Y, lambda)` with `Y(x) = -rho(x)/2 B^T`.
pub fn benchmark_certificate() -> CcmCertificate {
    CcmCertificate::new(benchmark_metric(), benchmark_y, BENCHMARK_LAMBDA)
        .expect("benchmark certificate data is valid")
}

/// Additive state disturbance `xdot = F(x, u) + d(t)`.
pub enum DisturbanceModel {
    None,
    Constant(DVector<f64>),
    Bounded {
        eval: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
        bound: f64,
    },
}

impl DisturbanceModel {
    pub fn eval(&self, t: f64) -> Option<DVector<f64>> {
        match self {
            DisturbanceModel::None => None,
            DisturbanceModel::Constant(d) => Some(d.clone()),
            DisturbanceModel::Bounded { eval, .. } => Some(eval(t)),
        }
    }

    /// Norm bound on the disturbance signal.
    pub fn bound(&self) -> f64 {
        match self {
            DisturbanceModel::None => 0.0,
            DisturbanceModel::Constant(d) => d.norm(),
            DisturbanceModel::Bounded { bound, .. } => *bound,
        }
    }
}

/// Reference trajectory `(x*(t), u*(t))`; constant setpoints must satisfy
/// `F(x*, u*) = 0`.
pub struct ReferenceSignal {
    x_star: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
    u_star: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
}

impl ReferenceSignal {
    pub fn new<X, U>(x_star: X, u_star: U) -> Self
    where
        X: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        U: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { x_star: Box::new(x_star), u_star: Box::new(u_star) }
    }

    pub fn constant(x: DVector<f64>, u: DVector<f64>) -> Self {
        Self::new(move |_| x.clone(), move |_| u.clone())
    }

    pub fn at(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        ((self.x_star)(t), (self.u_star)(t))
    }

    /// Check that the signal satisfies the nominal dynamics at the sampled
    /// times: `|d/dt x* - F(x*, u*)| <= 1e-8` with a central difference.
    pub fn validate(&self, plant: &Plant, times: &[f64]) -> Result<()> {
        let h = 1e-6;
        for &t in times {
            let (x, u) = self.at(t);
            let xdot = ((self.x_star)(t + h) - (self.x_star)(t - h)) / (2.0 * h);
            let residual = (xdot - plant.flow(&x, &u)).norm();
            if residual > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "reference violates the dynamics at t = {t} (residual {residual:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Input holding a constant setpoint: least-squares solution of
/// `B(x*) u = -f(x*)`, validated to residual 1e-8.
pub fn setpoint_input(plant: &Plant, x_star: &DVector<f64>) -> Result<DVector<f64>> {
    let b = plant.input_matrix(x_star);
    let f = plant.drift(x_star);
    let svd = b.clone().svd(true, true);
    let u = svd
        .solve(&(-&f), 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("setpoint solve failed: {e}")))?;
    let residual = (f + b * &u).norm();
    if residual > 1e-8 {
        return Err(Error::InvalidConfig(format!(
            "no input holds the setpoint (residual {residual:e})"
        )));
    }
    Ok(u)
}
