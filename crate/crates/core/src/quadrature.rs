//! Gauss–Legendre rules normalized to the unit interval, and helpers for
//! integrands carrying an algebraic endpoint singularity.

use serde::Serialize;

use crate::error::{Error, Result};

/// Node count used for all coefficient quadrature unless configured otherwise.
pub const DEFAULT_NODE_COUNT: usize = 80;

/// An open quadrature rule on (0, 1): nodes strictly interior and increasing,
/// weights positive and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// ∫_a^b g(s) ds.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut g: F) -> f64 {
        let len = b - a;
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(a + len * x);
        }
        acc * len
    }

    /// ∫_0^len g(v) v^(β−1) dv for β > 0.
    ///
    /// The substitution v = len · y^(1/β) absorbs the endpoint singularity,
    /// leaving ∫_0^1 g(len · y^(1/β)) dy · len^β / β.
    pub fn integrate_power_weight<F: FnMut(f64) -> f64>(&self, len: f64, beta: f64, mut g: F) -> f64 {
        let inv = 1.0 / beta;
        let mut acc = 0.0;
        for (&y, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(len * y.powf(inv));
        }
        acc * len.powf(beta) / beta
    }
}

/// Legendre polynomial P_n(x) and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The `count`-point Gauss–Legendre rule mapped to (0, 1).
///
/// Roots of P_n are found by Newton iteration from the Tricomi-type initial
/// guess cos(π(i − 1/4)/(n + 1/2)); weights are 2/((1 − x²) P_n′(x)²).
pub fn gauss_nodes(count: usize) -> Result<QuadratureRule> {
    if count == 0 {
        return Err(Error::Domain("quadrature rule needs at least one node".into()));
    }
    if count == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.5],
            weights: vec![1.0],
        });
    }
    let n = count;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; store ascending on (0, 1).
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 0.5 * w;
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
    }
    if n % 2 == 1 {
        let mid = n / 2;
        nodes[mid] = 0.5;
        let (_, d) = legendre(n, 0.0);
        weights[mid] = 0.5 * 2.0 / (d * d);
    }
    Ok(QuadratureRule { nodes, weights })
}
