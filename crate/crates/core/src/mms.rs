//! Manufactured solution on the unit square, its forcing and the error norms.
//!
//! `u = (a(x) d'(y), −a'(x) d(y)) (t+1)` with `a = x³(x−1)²`, `d = y³(y−1)²`,
//! which is solenoidal and vanishes on the boundary, and
//! `p = sin(πx) cos(πy) (t+1)`, which has zero mean.

use std::f64::consts::PI;

use crate::error::Result;
use crate::forms::{FormContext, FormParams};
use crate::memory::KernelParams;
use crate::mesh::Point;
use crate::space::{l2_distance_squared, FieldVec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub mu: f64,
    pub kernel: KernelParams,
}

/// `a` and its first three derivatives.
fn a_poly(x: f64) -> [f64; 4] {
    let x2 = x * x;
    [x2 * x * (x - 1.0) * (x - 1.0), 5.0 * x2 * x2 - 8.0 * x2 * x + 3.0 * x2, 20.0 * x2 * x - 24.0 * x2 + 6.0 * x, 60.0 * x2 - 48.0 * x + 6.0]
}

/// `d` and its first three derivatives.
fn d_poly(y: f64) -> [f64; 4] {
    a_poly(y)
}

impl ExactSolution {
    pub fn new(mu: f64, kernel: KernelParams) -> Self {
        Self { mu, kernel }
    }

    /// Spatial factor of the velocity.
    pub fn velocity_shape(&self, x: Point) -> [f64; 2] {
        let (a, d) = (a_poly(x[0]), d_poly(x[1]));
        [a[0] * d[1], -a[1] * d[0]]
    }

    pub fn velocity(&self, x: Point, t: f64) -> [f64; 2] {
        let s = t + 1.0;
        let v = self.velocity_shape(x);
        [v[0] * s, v[1] * s]
    }

    pub fn pressure(&self, x: Point, t: f64) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).cos() * (t + 1.0)
    }

    /// Row `c` holds `∇u_c`.
    pub fn velocity_grad(&self, x: Point, t: f64) -> [[f64; 2]; 2] {
        let s = t + 1.0;
        let (a, d) = (a_poly(x[0]), d_poly(x[1]));
        [[a[1] * d[1] * s, a[0] * d[2] * s], [-a[2] * d[0] * s, -a[1] * d[1] * s]]
    }

    fn laplacian_shape(&self, x: Point) -> [f64; 2] {
        let (a, d) = (a_poly(x[0]), d_poly(x[1]));
        [a[2] * d[1] + a[0] * d[3], -(a[3] * d[0] + a[1] * d[2])]
    }

    pub fn velocity_laplacian(&self, x: Point, t: f64) -> [f64; 2] {
        let l = self.laplacian_shape(x);
        [l[0] * (t + 1.0), l[1] * (t + 1.0)]
    }

    pub fn velocity_dt(&self, x: Point) -> [f64; 2] {
        self.velocity_shape(x)
    }

    /// `(u·∇)u`
    pub fn convection(&self, x: Point, t: f64) -> [f64; 2] {
        let u = self.velocity(x, t);
        let g = self.velocity_grad(x, t);
        [u[0] * g[0][0] + u[1] * g[0][1], u[0] * g[1][0] + u[1] * g[1][1]]
    }

    pub fn pressure_grad(&self, x: Point, t: f64) -> [f64; 2] {
        let s = t + 1.0;
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        [PI * cx * cy * s, -PI * sx * sy * s]
    }

    pub fn divergence(&self, x: Point, t: f64) -> f64 {
        let g = self.velocity_grad(x, t);
        g[0][0] + g[1][1]
    }

    /// `f = u_t − μΔu + (u·∇)u − ∫_0^t β(t−s)Δu(s) ds + ∇p`. Since `u` is
    /// linear in `t` the memory integral is `I(t) ΔU` with `I` in closed form.
    pub fn forcing(&self, x: Point, t: f64) -> [f64; 2] {
        let ut = self.velocity_dt(x);
        let lap = self.laplacian_shape(x);
        let conv = self.convection(x, t);
        let gp = self.pressure_grad(x, t);
        let visc = self.mu * (t + 1.0) + self.kernel.linear_history_integral(t);
        [ut[0] - visc * lap[0] + conv[0] + gp[0], ut[1] - visc * lap[1] + conv[1] + gp[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub u_l2: f64,
    pub u_dg: f64,
    pub p_l2: f64,
}

/// `‖u_h − u(t)‖`, `‖u_h − u(t)‖_dG` and `‖p_h − p(t)‖` by quadrature of
/// exactness `2r+4`. The exact velocity is continuous and vanishes on the
/// boundary, so the jump part of the dG error only sees `u_h`.
pub fn error_norms(
    exact: &ExactSolution,
    u: &FieldVec,
    p: &FieldVec,
    t: f64,
    forms: &FormParams,
) -> Result<ErrorNorms> {
    let vs = u.space();
    let ex = vs.error_exactness();
    let u_l2 = l2_distance_squared(u, ex, |x, out| out.copy_from_slice(&exact.velocity(x, t)))?.sqrt();
    let p_l2 = l2_distance_squared(p, ex, |x, out| out[0] = exact.pressure(x, t))?.sqrt();

    let ctx = FormContext::new(vs, ex)?;
    let mesh = ctx.mesh();
    let mut grad = 0.0;
    for e in 0..mesh.n_elements() {
        let eq = ctx.element(e);
        for q in 0..eq.weights.len() {
            let g = exact.velocity_grad(eq.points[q], t);
            for (c, gc) in g.iter().enumerate() {
                let gh = u.combine_grad(e, c, &eq.grads[q]);
                grad += eq.weights[q] * ((gh[0] - gc[0]).powi(2) + (gh[1] - gc[1]).powi(2));
            }
        }
    }
    let mut jump = 0.0;
    for (fi, face) in mesh.faces().iter().enumerate() {
        let fq = ctx.face(fi);
        let sigma = if face.is_boundary() { forms.sigma_bnd } else { forms.sigma_int };
        let mut sum = 0.0;
        for (q, w) in fq.weights.iter().enumerate() {
            for c in 0..2 {
                let mut j = 0.0;
                for (s, side) in fq.sides.iter().enumerate() {
                    let sign = if s == 0 { 1.0 } else { -1.0 };
                    j += sign * u.combine(side.element, c, &side.values[q]);
                }
                sum += w * j * j;
            }
        }
        jump += sigma / face.h() * sum;
    }
    Ok(ErrorNorms { u_l2, u_dg: (grad + jump).sqrt(), p_l2 })
}

/// `ln(coarse/fine)/ln 2`
pub fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).ln() / std::f64::consts::LN_2
}
