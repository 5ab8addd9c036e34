//! Quadrature on the reference interval `[0,1]` and the reference triangle
//! `{(ξ,η) : ξ,η ≥ 0, ξ+η ≤ 1}`.
//!
//! Triangle rules beyond the centroid rule are collapsed (Duffy) products of
//! Gauss–Legendre rules. They are not the most economical rules but have
//! positive weights and exist for any exactness.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Highest exactness degree served by [`triangle_rule`] and [`edge_rule`].
pub const MAX_EXACTNESS: usize = 40;

#[derive(Debug, Clone)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl<P> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub type EdgeRule = QuadRule<f64>;
pub type TriangleRule = QuadRule<[f64; 2]>;

/// Gauss–Legendre nodes and weights on `[0,1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1,1] -> [0,1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wt;
        w[n - 1 - i] = 0.5 * wt;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Rule on `[0,1]` exact for polynomials of degree `≤ min_exactness`.
pub fn edge_rule(min_exactness: usize) -> Result<EdgeRule> {
    if min_exactness > MAX_EXACTNESS {
        return Err(Error::QuadratureUnavailable { requested: min_exactness, max: MAX_EXACTNESS });
    }
    let n = min_exactness / 2 + 1;
    let (points, weights) = gauss_legendre(n);
    Ok(QuadRule { points, weights, exactness: 2 * n - 1 })
}

/// Rule on the reference triangle exact for total degree `≤ min_exactness`.
pub fn triangle_rule(min_exactness: usize) -> Result<TriangleRule> {
    if min_exactness > MAX_EXACTNESS {
        return Err(Error::QuadratureUnavailable { requested: min_exactness, max: MAX_EXACTNESS });
    }
    if min_exactness <= 1 {
        return Ok(QuadRule { points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5], exactness: 1 });
    }
    // ξ = s(1-t), η = t, dξdη = (1-t) ds dt; the t-direction carries one
    // extra degree from the Jacobian.
    let (s, ws) = gauss_legendre(min_exactness / 2 + 1);
    let (t, wt) = gauss_legendre(min_exactness.div_ceil(2) + 1);
    let mut points = Vec::with_capacity(s.len() * t.len());
    let mut weights = Vec::with_capacity(s.len() * t.len());
    for (tj, wj) in t.iter().zip(&wt) {
        for (si, wi) in s.iter().zip(&ws) {
            points.push([si * (1.0 - tj), *tj]);
            weights.push(wi * wj * (1.0 - tj));
        }
    }
    Ok(QuadRule { points, weights, exactness: min_exactness })
}
