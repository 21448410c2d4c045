//! Chebyshev spectral toolbox on `[-1, 1]`.
//!
//! Everything here works with first-kind Chebyshev polynomials `T_k` on the
//! Chebyshev-Gauss-Lobatto nodes `s_j = cos(j pi / N)`, `j = 0..N`. Series
//! coefficients use the plain convention `f = sum_k b_k T_k` (no halved
//! leading term; the classical DCT convention `a_0/2 + sum a_k T_k` maps to
//! ours as `b_0 = a_0 / 2`, `b_k = a_k` for `k >= 1`). Coefficients are
//! computed by the direct O(N^2) cosine sum: every grid in this crate is
//! small enough that an FFT would be noise.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Chebyshev-Gauss-Lobatto nodes `cos(j pi / N)`, `j = 0..N`, strictly
/// decreasing from `+1` to `-1` and exactly antisymmetric about `0`.
pub fn cheb_nodes(order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::DegenerateGrid);
    }
    let n = order as f64;
    // sin form keeps the node set exactly antisymmetric in floating point.
    Ok((0..=order)
        .map(|j| (PI * (n - 2.0 * j as f64) / (2.0 * n)).sin())
        .collect())
}

/// Gauss-Lobatto grid of a fixed order with Clenshaw-Curtis weights.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebGrid {
    pub fn new(order: usize) -> Result<Self> {
        let nodes = cheb_nodes(order)?;
        let weights = clenshaw_curtis_weights(order);
        Ok(Self { order, nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of nodes, `order + 1`.
    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Clenshaw-Curtis weights from the exact Chebyshev moments
/// `int T_k = 2/(1-k^2)` for even `k`, `0` for odd `k`.
fn clenshaw_curtis_weights(order: usize) -> Vec<f64> {
    let n = order;
    let nf = n as f64;
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let mut w = vec![0.0; n + 1];
    for j in 0..=n / 2 {
        let mut acc = 0.0;
        let mut k = 0usize;
        while k <= n {
            let moment = 2.0 / (1.0 - (k * k) as f64);
            acc += 2.0 / (nf * c(k)) * moment * (PI * (j * k) as f64 / nf).cos();
            k += 2;
        }
        w[j] = acc / c(j);
        // Weights are symmetric; mirror instead of recomputing the cosines.
        w[n - j] = w[j];
    }
    w
}

/// Truncated Chebyshev series `f = sum_k coeffs[k] T_k` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        Self { coeffs }
    }

    pub fn zero(len: usize) -> Self {
        Self::from_coeffs(vec![0.0; len.max(1)])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluate by the Clenshaw recurrence. Points outside `[-1, 1]` are
    /// rejected; a slack of 1e-12 absorbs node round-off at the endpoints.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !s.is_finite() || s.abs() > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain(s));
        }
        let s = s.clamp(-1.0, 1.0);
        Ok(self.eval_clamped(s))
    }

    pub(crate) fn eval_clamped(&self, s: f64) -> f64 {
        let b = &self.coeffs;
        let mut y1 = 0.0;
        let mut y2 = 0.0;
        for k in (1..b.len()).rev() {
            let y = 2.0 * s * y1 - y2 + b[k];
            y2 = y1;
            y1 = y;
        }
        s * y1 - y2 + b[0]
    }

    /// Exact derivative series (degree drops by one) via the Chebyshev
    /// derivative recurrence `d_{k-1} = d_{k+1} + 2k b_k`, halving `d_0`.
    pub fn differentiate(&self) -> ChebSeries {
        let b = &self.coeffs;
        let n = b.len() - 1;
        if n == 0 {
            return ChebSeries::zero(1);
        }
        let mut d = vec![0.0; n + 2];
        for k in (1..=n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * b[k];
        }
        d[0] *= 0.5;
        d.truncate(n.max(1));
        ChebSeries::from_coeffs(d)
    }

    /// Antiderivative `F` with `F(-1) = 0` (degree grows by one):
    /// `g_k = (b_{k-1} - b_{k+1}) / (2k)` for `k >= 2`, `g_1 = b_0 - b_2/2`,
    /// and `g_0` fixed by the boundary condition.
    pub fn integrate_cumulative(&self) -> ChebSeries {
        let b = &self.coeffs;
        let n = b.len() - 1;
        let get = |k: usize| if k <= n { b[k] } else { 0.0 };
        let mut g = vec![0.0; n + 2];
        g[1] = b[0] - get(2) / 2.0;
        for k in 2..=n + 1 {
            g[k] = (get(k - 1) - get(k + 1)) / (2.0 * k as f64);
        }
        // F(-1) = sum g_k (-1)^k = 0.
        let mut alt = 0.0;
        for (k, gk) in g.iter().enumerate().skip(1) {
            alt += if k % 2 == 0 { *gk } else { -*gk };
        }
        g[0] = -alt;
        ChebSeries::from_coeffs(g)
    }
}

/// Interpolate samples given at the grid nodes. The returned series
/// reproduces the samples at the nodes to round-off.
pub fn fit(samples: &[f64], grid: &ChebGrid) -> Result<ChebSeries> {
    let n = grid.order();
    if samples.len() != n + 1 {
        return Err(Error::LengthMismatch { expected: n + 1, got: samples.len() });
    }
    let nf = n as f64;
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let mut coeffs = vec![0.0; n + 1];
    for (k, ck) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, fj) in samples.iter().enumerate() {
            acc += fj / c(j) * (PI * (j * k) as f64 / nf).cos();
        }
        *ck = 2.0 / (nf * c(k)) * acc;
    }
    Ok(ChebSeries::from_coeffs(coeffs))
}

/// Clenshaw-Curtis estimate of `int_{-1}^{1} f ds` from node samples.
/// Exact whenever `f` is a polynomial of degree at most the grid order.
pub fn quad_cc(values: &[f64], grid: &ChebGrid) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
    }
    Ok(values.iter().zip(grid.weights()).map(|(v, w)| v * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn series_samples(series: &ChebSeries, grid: &ChebGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&s| series.eval(s).unwrap()).collect()
    }

    #[test]
    fn nodes_small_orders() {
        assert_eq!(cheb_nodes(1).unwrap(), vec![1.0, -1.0]);
        let n2 = cheb_nodes(2).unwrap();
        assert_abs_diff_eq!(n2[0], 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(n2[1], 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(n2[2], -1.0, epsilon = 0.0);
        let n4 = cheb_nodes(4).unwrap();
        let r = 0.5f64.sqrt();
        for (got, want) in n4.iter().zip([1.0, r, 0.0, -r, -1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn nodes_zero_order_rejected() {
        assert!(matches!(cheb_nodes(0), Err(Error::DegenerateGrid)));
        assert!(ChebGrid::new(0).is_err());
    }

    #[test]
    fn nodes_decreasing_and_antisymmetric() {
        for order in [1, 2, 3, 4, 5, 8, 17, 32] {
            let nodes = cheb_nodes(order).unwrap();
            for w in nodes.windows(2) {
                assert!(w[0] > w[1]);
            }
            for j in 0..=order {
                assert_eq!(nodes[j], -nodes[order - j]);
            }
        }
    }

    #[test]
    fn weights_positive_and_sum_to_two() {
        for order in [1, 2, 3, 4, 5, 7, 8, 16, 31, 32] {
            let grid = ChebGrid::new(order).unwrap();
            assert!(grid.weights().iter().all(|&w| w > 0.0));
            let sum: f64 = grid.weights().iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quad_examples() {
        let grid = ChebGrid::new(4).unwrap();
        let ones = vec![1.0; 5];
        assert_abs_diff_eq!(quad_cc(&ones, &grid).unwrap(), 2.0, epsilon = 1e-13);
        let s: Vec<f64> = grid.nodes().to_vec();
        assert_abs_diff_eq!(quad_cc(&s, &grid).unwrap(), 0.0, epsilon = 1e-13);
        let s2: Vec<f64> = grid.nodes().iter().map(|x| x * x).collect();
        assert_abs_diff_eq!(quad_cc(&s2, &grid).unwrap(), 2.0 / 3.0, epsilon = 1e-13);
        assert!(quad_cc(&[1.0, 2.0], &grid).is_err());
    }

    #[test]
    fn quad_exact_on_basis_polynomials() {
        for order in [2usize, 3, 4, 8, 11, 16] {
            let grid = ChebGrid::new(order).unwrap();
            for k in 0..=order {
                let mut coeffs = vec![0.0; k + 1];
                coeffs[k] = 1.0;
                let tk = ChebSeries::from_coeffs(coeffs);
                let samples = series_samples(&tk, &grid);
                let exact = if k % 2 == 0 { 2.0 / (1.0 - (k * k) as f64) } else { 0.0 };
                assert_abs_diff_eq!(quad_cc(&samples, &grid).unwrap(), exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fit_examples() {
        let g2 = ChebGrid::new(2).unwrap();
        let c = fit(&[3.0, 3.0, 3.0], &g2).unwrap();
        for (got, want) in c.coeffs().iter().zip([3.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        let s: Vec<f64> = g2.nodes().to_vec();
        let c = fit(&s, &g2).unwrap();
        for (got, want) in c.coeffs().iter().zip([0.0, 1.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        let c = fit(&[1.0, 0.0, 1.0], &g2).unwrap();
        for (got, want) in c.coeffs().iter().zip([0.5, 0.0, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        assert!(matches!(
            fit(&[1.0, 2.0], &g2),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn eval_examples() {
        let t1 = ChebSeries::from_coeffs(vec![0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(t1.eval(0.3).unwrap(), 0.3, epsilon = 1e-15);

        let sq = ChebSeries::from_coeffs(vec![0.5, 0.0, 0.5]);
        assert_abs_diff_eq!(sq.eval(-1.0).unwrap(), 1.0, epsilon = 1e-15);

        let t2 = ChebSeries::from_coeffs(vec![0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(t2.eval(0.5).unwrap(), -0.5, epsilon = 1e-15);

        assert!(matches!(t2.eval(1.5), Err(Error::OutOfDomain(_))));
        assert!(t2.eval(f64::NAN).is_err());
    }

    #[test]
    fn differentiate_examples() {
        let sq = ChebSeries::from_coeffs(vec![0.5, 0.0, 0.5]);
        let d = sq.differentiate();
        for (got, want) in d.coeffs().iter().zip([0.0, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        let c = ChebSeries::from_coeffs(vec![7.0]);
        assert_eq!(c.differentiate().coeffs(), &[0.0]);
    }

    #[test]
    fn differentiate_t3_matches_finite_differences() {
        let t3 = ChebSeries::from_coeffs(vec![0.0, 0.0, 0.0, 1.0]);
        let d = t3.differentiate();
        let h = 1e-6;
        for i in 0..1000 {
            let s = -1.0 + 2.0 * (i as f64 + 0.5) / 1000.0;
            let fd = (t3.eval((s + h).min(1.0)).unwrap() - t3.eval((s - h).max(-1.0)).unwrap())
                / ((s + h).min(1.0) - (s - h).max(-1.0));
            assert_abs_diff_eq!(d.eval(s).unwrap(), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn integrate_examples() {
        let z = ChebSeries::zero(3).integrate_cumulative();
        assert!(z.coeffs().iter().all(|&c| c == 0.0));

        let one = ChebSeries::from_coeffs(vec![1.0]);
        let f = one.integrate_cumulative();
        assert_abs_diff_eq!(f.eval(-1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(1.0).unwrap(), 2.0, epsilon = 1e-15);

        let t1 = ChebSeries::from_coeffs(vec![0.0, 1.0]);
        let f = t1.integrate_cumulative();
        assert_abs_diff_eq!(f.eval(-1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(0.0).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn spectral_accuracy_exp() {
        let grid = ChebGrid::new(16).unwrap();
        let samples: Vec<f64> = grid.nodes().iter().map(|&s| s.exp()).collect();
        let series = fit(&samples, &grid).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let s = -1.0 + 2.0 * i as f64 / 999.0;
            worst = worst.max((series.eval(s).unwrap() - s.exp()).abs());
        }
        assert!(worst <= 1e-10, "sup error {worst:e}");
    }

    proptest! {
        /// fit/eval round trip on random polynomials of degree <= N.
        #[test]
        fn fit_eval_round_trip(
            order in 1usize..20,
            raw in proptest::collection::vec(-10.0f64..10.0, 1..21),
        ) {
            let grid = ChebGrid::new(order).unwrap();
            let mut coeffs = raw;
            coeffs.truncate(order + 1);
            while coeffs.len() < order + 1 {
                coeffs.push(0.0);
            }
            let poly = ChebSeries::from_coeffs(coeffs.clone());
            let samples = series_samples(&poly, &grid);
            let refit = fit(&samples, &grid).unwrap();
            let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            let tol = 1e-12 * (1.0 + norm);
            for (&s, &v) in grid.nodes().iter().zip(&samples) {
                prop_assert!((refit.eval(s).unwrap() - v).abs() <= tol);
            }
        }

        /// differentiate(integrate_cumulative(f)) = f coefficientwise.
        #[test]
        fn derivative_inverts_antiderivative(
            coeffs in proptest::collection::vec(-10.0f64..10.0, 1..24),
        ) {
            let f = ChebSeries::from_coeffs(coeffs.clone());
            let back = f.integrate_cumulative().differentiate();
            for k in 0..back.coeffs().len() {
                let want = coeffs.get(k).copied().unwrap_or(0.0);
                prop_assert!((back.coeffs()[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }
}
