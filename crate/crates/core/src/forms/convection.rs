use super::assembly::{avg_weight, grad_at, jump_sign, value_at, BlockBuilder, FormContext};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::space::FieldVec;

/// Pieces of `A_c(θ; z, φ, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvectionParts {
    /// volume transport, Temam term and the averaged face term
    pub central: f64,
    /// `Σ_K ∫_{∂K_−^θ} |{z}·n_K| (φ^int − φ^ext)·w^int`
    pub upwind: f64,
    /// the same integral without the absolute value
    pub upwind_signed: f64,
}

impl ConvectionParts {
    pub fn total(&self) -> f64 {
        self.central + self.upwind
    }
}

fn check_vector(ctx: &FormContext, fields: &[&FieldVec]) -> Result<()> {
    if ctx.space().n_components() != 2 {
        return Err(Error::SpaceMismatch("convection acts on vector fields".into()));
    }
    fields.iter().try_for_each(|f| ctx.check_field(f))
}

fn vec_at(f: &FieldVec, e: usize, values: &[f64]) -> [f64; 2] {
    [value_at(f, e, 0, values), value_at(f, e, 1, values)]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Matrix-free evaluation of the trilinear convection form. Inflow points are
/// classified one quadrature point at a time by the sign of `{θ}·n_K`.
pub fn apply_convection(
    ctx: &FormContext,
    theta: &FieldVec,
    z: &FieldVec,
    phi: &FieldVec,
    w: &FieldVec,
) -> Result<ConvectionParts> {
    check_vector(ctx, &[theta, z, phi, w])?;
    let mesh = ctx.mesh();
    let mut central = 0.0;
    for e in 0..mesh.n_elements() {
        let eq = ctx.element(e);
        for q in 0..eq.weights.len() {
            let (v, g) = (&eq.values[q], &eq.grads[q]);
            let zq = vec_at(z, e, v);
            let dz = [grad_at(z, e, 0, g), grad_at(z, e, 1, g)];
            let div = dz[0][0] + dz[1][1];
            let pq = vec_at(phi, e, v);
            let wq = vec_at(w, e, v);
            let dp = [grad_at(phi, e, 0, g), grad_at(phi, e, 1, g)];
            let transport = dot(zq, dp[0]) * wq[0] + dot(zq, dp[1]) * wq[1];
            central += eq.weights[q] * (transport + 0.5 * div * dot(pq, wq));
        }
    }
    let (mut upwind, mut upwind_signed) = (0.0, 0.0);
    for (fi, face) in mesh.faces().iter().enumerate() {
        let fq = ctx.face(fi);
        let ns = fq.sides.len();
        let avg = avg_weight(ns);
        let n = face.normal;
        for (q, wt) in fq.weights.iter().enumerate() {
            let at = |f: &FieldVec, s: usize| vec_at(f, fq.sides[s].element, &fq.sides[s].values[q]);
            let zs: Vec<[f64; 2]> = (0..ns).map(|s| at(z, s)).collect();
            let ts: Vec<[f64; 2]> = (0..ns).map(|s| at(theta, s)).collect();
            let ps: Vec<[f64; 2]> = (0..ns).map(|s| at(phi, s)).collect();
            let ws: Vec<[f64; 2]> = (0..ns).map(|s| at(w, s)).collect();
            let sum = |v: &[[f64; 2]], k: usize| v.iter().map(|x| x[k]).sum::<f64>();
            let z_avg = [avg * sum(&zs, 0), avg * sum(&zs, 1)];
            let t_avg = [avg * sum(&ts, 0), avg * sum(&ts, 1)];
            let z_jump: f64 = (0..ns).map(|s| jump_sign(ns, s) * dot(zs[s], n)).sum();
            let pw_avg: f64 = (0..ns).map(|s| avg * dot(ps[s], ws[s])).sum();
            central -= 0.5 * wt * z_jump * pw_avg;
            for s in 0..ns {
                let sign = jump_sign(ns, s);
                let nk = [sign * n[0], sign * n[1]];
                if dot(t_avg, nk) < 0.0 {
                    let zn = dot(z_avg, nk);
                    let ext = if ns == 2 { ps[1 - s] } else { [0.0, 0.0] };
                    let diff = dot([ps[s][0] - ext[0], ps[s][1] - ext[1]], ws[s]);
                    upwind += wt * zn.abs() * diff;
                    upwind_signed += wt * zn * diff;
                }
            }
        }
    }
    Ok(ConvectionParts { central, upwind, upwind_signed })
}

/// Scalar block of `φ, w ↦ A_c(θ; z, φ, w)`; the vector operator applies it
/// to each velocity component. The pattern always contains every
/// element–neighbour block, whatever the inflow classification.
pub fn convection_block(ctx: &FormContext, theta: &FieldVec, z: &FieldVec) -> Result<SparseMatrix> {
    check_vector(ctx, &[theta, z])?;
    let nb = ctx.n_basis();
    let mesh = ctx.mesh();
    let mut bb = BlockBuilder::neighbours(mesh, nb, nb);
    for e in 0..mesh.n_elements() {
        let eq = ctx.element(e);
        let blk = bb.block(e, e);
        for q in 0..eq.weights.len() {
            let (v, g) = (&eq.values[q], &eq.grads[q]);
            let zq = vec_at(z, e, v);
            let div = grad_at(z, e, 0, g)[0] + grad_at(z, e, 1, g)[1];
            let wq = eq.weights[q];
            for i in 0..nb {
                for j in 0..nb {
                    blk[i * nb + j] += wq * (dot(zq, g[j]) * v[i] + 0.5 * div * v[j] * v[i]);
                }
            }
        }
    }
    for (fi, face) in mesh.faces().iter().enumerate() {
        let fq = ctx.face(fi);
        let ns = fq.sides.len();
        let avg = avg_weight(ns);
        let n = face.normal;
        for (q, wt) in fq.weights.iter().enumerate() {
            let zs: Vec<[f64; 2]> = fq.sides.iter().map(|sd| vec_at(z, sd.element, &sd.values[q])).collect();
            let ts: Vec<[f64; 2]> = fq.sides.iter().map(|sd| vec_at(theta, sd.element, &sd.values[q])).collect();
            let z_avg = [avg * zs.iter().map(|x| x[0]).sum::<f64>(), avg * zs.iter().map(|x| x[1]).sum::<f64>()];
            let t_avg = [avg * ts.iter().map(|x| x[0]).sum::<f64>(), avg * ts.iter().map(|x| x[1]).sum::<f64>()];
            let z_jump: f64 = (0..ns).map(|s| jump_sign(ns, s) * dot(zs[s], n)).sum();
            for s in 0..ns {
                let sd = &fq.sides[s];
                let vs = &sd.values[q];
                let sign = jump_sign(ns, s);
                let nk = [sign * n[0], sign * n[1]];
                let mut own = -0.5 * z_jump * avg;
                let inflow = dot(t_avg, nk) < 0.0;
                let zn = dot(z_avg, nk).abs();
                if inflow {
                    own += zn;
                }
                let blk = bb.block(sd.element, sd.element);
                for i in 0..nb {
                    for j in 0..nb {
                        blk[i * nb + j] += wt * own * vs[j] * vs[i];
                    }
                }
                if inflow && ns == 2 {
                    let other = &fq.sides[1 - s];
                    let vo = &other.values[q];
                    let blk = bb.block(sd.element, other.element);
                    for i in 0..nb {
                        for j in 0..nb {
                            blk[i * nb + j] -= wt * zn * vo[j] * vs[i];
                        }
                    }
                }
            }
        }
    }
    Ok(bb.into_matrix())
}
