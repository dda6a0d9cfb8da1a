//! Gauss-Legendre quadrature on the reference square [-1,1]^2.
//!
//! Nodes are computed by Newton iteration on the Legendre polynomials, with
//! symmetric seeds so rules come out exactly symmetric about the origin.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("quadrature order {0} outside the supported range 1..=10")]
    OrderOutOfRange(usize),
}

/// Tensor-product rule on [-1,1]^2; weights sum to the reference area 4.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Legendre polynomial P_n and its derivative at x.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p_next = ((2.0 * jf - 1.0) * x * p - (jf - 1.0) * p_prev) / jf;
        p_prev = p;
        p = p_next;
    }
    // (x^2 - 1) P_n' = n (x P_n - P_{n-1}); roots lie strictly inside (-1,1)
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// 1D Gauss-Legendre nodes and weights on [-1,1], nodes ascending.
pub fn gauss_1d(n: usize) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    if !(1..=10).contains(&n) {
        return Err(QuadratureError::OrderOutOfRange(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n / 2 {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - k] = x;
        nodes[k] = -x;
        weights[n - 1 - k] = w;
        weights[k] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_with_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
    Ok((nodes, weights))
}

/// Tensor-product Gauss rule with `points_per_dim` points per direction,
/// exact for polynomials of degree <= 2*points_per_dim - 1 in each variable.
pub fn gauss_rule(points_per_dim: usize) -> Result<QuadratureRule, QuadratureError> {
    let (x, w) = gauss_1d(points_per_dim)?;
    let n = points_per_dim;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}
