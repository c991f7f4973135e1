//! Quadrature for the probability density `π / (2(cosh(πt) + 1))`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

const POINTS_PER_PANEL: usize = 8;
const START_PANELS: usize = 8;
const MAX_PANELS: usize = 1 << 16;

/// Density of μ0.
pub fn mu0_density(t: f64) -> f64 {
    PI / (2.0 * ((PI * t).cosh() + 1.0))
}

/// Mass of μ0 outside `[−t, t]`, which is at most `2e^{−πt}`.
pub fn mu0_tail(t: f64) -> f64 {
    2.0 / ((PI * t).exp() + 1.0)
}

/// Symmetric nodes and positive weights approximating μ0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub truncation: f64,
    pub tolerance: f64,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// Missing mass `1 − Σ w`.
    pub fn residual(&self) -> f64 {
        1.0 - self.weights.iter().sum::<f64>()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

fn composite(t_max: f64, panels: usize) -> QuadratureRule {
    let (gx, gw) = gauss_legendre(POINTS_PER_PANEL);
    let h = 2.0 * t_max / panels as f64;
    let mut nodes = Vec::with_capacity(panels * POINTS_PER_PANEL);
    let mut weights = Vec::with_capacity(panels * POINTS_PER_PANEL);
    for p in 0..panels {
        let a = -t_max + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(a + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    // mirror to make the rule exactly symmetric
    let n = nodes.len();
    for i in 0..n / 2 {
        let t = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -t;
        nodes[n - 1 - i] = t;
    }
    let weights = nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| w * mu0_density(t))
        .collect::<Vec<_>>();
    let mut weights = weights;
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    QuadratureRule { nodes, weights, truncation: t_max, tolerance: 0.0 }
}

/// Composite Gauss–Legendre rule on `[−T, T]` with `2e^{−πT} ≤ tol/2`,
/// refined by doubling the panel count until the total mass settles.
pub fn mu0_quadrature(tolerance: f64) -> Result<QuadratureRule> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance {tolerance} not in (0,1)")));
    }
    let t_max = (4.0 / tolerance).ln() / PI;
    let mut panels = START_PANELS;
    let mut rule = composite(t_max, panels);
    let mut mass = rule.weights.iter().sum::<f64>();
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite(t_max, panels);
        let next_mass = next.weights.iter().sum::<f64>();
        let change = (next_mass - mass).abs();
        rule = next;
        mass = next_mass;
        if change < tolerance / 2.0 {
            break;
        }
    }
    rule.tolerance = tolerance;
    Ok(rule)
}
