//! Modal polynomial bases on triangles.
//!
//! [`PolyBasis`] is L²-orthonormal on the reference triangle. Because element
//! maps are affine, rescaling by `|det J|^{-1/2}` keeps it orthonormal on the
//! physical element, which is all [`orthonormalize_on_element`] has to do.

use crate::error::{Error, Result};
use crate::mesh::{signed_area, Point};

pub const MAX_DEGREE: usize = 4;

pub fn n_funcs(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Orthonormal basis of ℙ_r on the reference triangle, stored as a lower
/// triangular combination of monomials `ξ^a η^b` ordered by total degree.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: Vec<Vec<f64>>,
}

impl PolyBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let exponents: Vec<(i32, i32)> = (0..=degree as i32)
            .flat_map(|d| (0..=d).map(move |b| (d - b, b)))
            .collect();
        let n = exponents.len();
        let gram: Vec<Vec<f64>> = exponents
            .iter()
            .map(|&(a1, b1)| {
                exponents.iter().map(|&(a2, b2)| monomial_integral(a1 + a2, b1 + b2)).collect()
            })
            .collect();

        // Two passes of Cholesky-based orthonormalization; the second removes
        // the rounding left by the ill-conditioned monomial Gram matrix.
        let mut coeffs = invert_lower(&cholesky(&gram)?);
        let g2 = congruence(&coeffs, &gram);
        let c2 = invert_lower(&cholesky(&g2)?);
        coeffs = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| c2[i][k] * coeffs[k][j]).sum()).collect())
            .collect();

        Ok(Self { degree, exponents, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_funcs(&self) -> usize {
        self.exponents.len()
    }

    fn monomials(&self, p: [f64; 2]) -> Vec<f64> {
        self.exponents.iter().map(|&(a, b)| p[0].powi(a) * p[1].powi(b)).collect()
    }

    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let m = self.monomials(p);
        self.coeffs.iter().map(|row| row.iter().zip(&m).map(|(c, v)| c * v).sum()).collect()
    }

    pub fn eval_grad(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let dm: Vec<[f64; 2]> = self
            .exponents
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 { a as f64 * p[0].powi(a - 1) * p[1].powi(b) } else { 0.0 };
                let dy = if b > 0 { b as f64 * p[0].powi(a) * p[1].powi(b - 1) } else { 0.0 };
                [dx, dy]
            })
            .collect();
        self.coeffs
            .iter()
            .map(|row| {
                row.iter().zip(&dm).fold([0.0, 0.0], |acc, (c, d)| [acc[0] + c * d[0], acc[1] + c * d[1]])
            })
            .collect()
    }
}

/// ∫ over the reference triangle of ξ^a η^b = a! b! / (a+b+2)!.
fn monomial_integral(a: i32, b: i32) -> f64 {
    let f = |n: i32| (1..=n).map(f64::from).product::<f64>();
    f(a) * f(b) / f(a + b + 2)
}

fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Singular("monomial Gram matrix not positive definite".into()));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

fn invert_lower(l: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = l.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        for i in col..n {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (col..i).map(|k| l[i][k] * inv[k][col]).sum();
            inv[i][col] = (rhs - s) / l[i][i];
        }
    }
    inv
}

/// C G Cᵀ
fn congruence(c: &[Vec<f64>], g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = c.len();
    let cg: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| c[i][k] * g[k][j]).sum()).collect()).collect();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| cg[i][k] * c[j][k]).sum()).collect()).collect()
}

/// Affine map from the reference triangle onto a physical element.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// `J^{-T}`, applied to reference gradients.
    pub jinv_t: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(p: &[Point; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jinv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self { origin: p[0], jac, det, jinv_t }
    }

    pub fn to_physical(&self, r: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        // J^{-1} = (J^{-T})^T
        [
            self.jinv_t[0][0] * d[0] + self.jinv_t[1][0] * d[1],
            self.jinv_t[0][1] * d[0] + self.jinv_t[1][1] * d[1],
        ]
    }

    pub fn grad_to_physical(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.jinv_t[0][0] * g[0] + self.jinv_t[0][1] * g[1],
            self.jinv_t[1][0] * g[0] + self.jinv_t[1][1] * g[1],
        ]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }
}

/// The reference basis carried onto one element, orthonormal in L²(K).
#[derive(Debug, Clone, Copy)]
pub struct ElementBasis {
    pub map: ElementMap,
    pub scale: f64,
}

impl ElementBasis {
    pub fn eval(&self, basis: &PolyBasis, r: [f64; 2]) -> Vec<f64> {
        basis.eval(r).into_iter().map(|v| v * self.scale).collect()
    }

    pub fn eval_grad(&self, basis: &PolyBasis, r: [f64; 2]) -> Vec<[f64; 2]> {
        basis
            .eval_grad(r)
            .into_iter()
            .map(|g| {
                let p = self.map.grad_to_physical(g);
                [p[0] * self.scale, p[1] * self.scale]
            })
            .collect()
    }
}

pub fn orthonormalize_on_element(points: &[Point; 3]) -> Result<ElementBasis> {
    let area = signed_area(points);
    if area < 1e-14 {
        return Err(Error::DegenerateElement { element: usize::MAX, area });
    }
    let map = ElementMap::new(points);
    Ok(ElementBasis { map, scale: 1.0 / map.det.sqrt() })
}
