use super::assembly::{avg_weight, jump_sign, BlockBuilder, FormContext};
use super::{AssembledForm, FormKind, FormParams};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::space::FieldVec;

/// Weights of the four terms of an interior-penalty form.
struct PenaltyForm {
    /// multiplies `−∫{∇u}·n [w]`
    consistency: f64,
    /// multiplies `∫{∇w}·n [u]`
    symmetry: f64,
    sigma_int: f64,
    /// `None` skips boundary faces altogether.
    sigma_bnd: Option<f64>,
}

/// Scalar block of a penalty form: entry `(i, j)` is `a(φ_j, φ_i)`.
fn penalty_block(ctx: &FormContext, form: &PenaltyForm) -> SparseMatrix {
    let nb = ctx.n_basis();
    let mesh = ctx.mesh();
    let mut bb = BlockBuilder::neighbours(mesh, nb, nb);
    for e in 0..mesh.n_elements() {
        let eq = ctx.element(e);
        let blk = bb.block(e, e);
        for (w, g) in eq.weights.iter().zip(&eq.grads) {
            for i in 0..nb {
                for j in 0..nb {
                    blk[i * nb + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
    }
    for (fi, face) in mesh.faces().iter().enumerate() {
        let sigma = match (face.is_boundary(), form.sigma_bnd) {
            (true, None) => continue,
            (true, Some(s)) => s,
            (false, _) => form.sigma_int,
        };
        let fq = ctx.face(fi);
        let ns = fq.sides.len();
        let avg = avg_weight(ns);
        let pen = sigma / face.h();
        let n = face.normal;
        for (q, w) in fq.weights.iter().enumerate() {
            for a in 0..ns {
                let sa = &fq.sides[a];
                let ja = jump_sign(ns, a);
                for b in 0..ns {
                    let sb = &fq.sides[b];
                    let jb = jump_sign(ns, b);
                    let blk = bb.block(sa.element, sb.element);
                    for i in 0..nb {
                        let vi = sa.values[q][i];
                        let dni = sa.grads[q][i][0] * n[0] + sa.grads[q][i][1] * n[1];
                        for j in 0..nb {
                            let vj = sb.values[q][j];
                            let dnj = sb.grads[q][j][0] * n[0] + sb.grads[q][j][1] * n[1];
                            blk[i * nb + j] += w
                                * (-form.consistency * avg * dnj * ja * vi
                                    + form.symmetry * avg * dni * jb * vj
                                    + pen * jb * vj * ja * vi);
                        }
                    }
                }
            }
        }
    }
    bb.into_matrix()
}

fn expand(ctx: &FormContext, block: SparseMatrix) -> SparseMatrix {
    match ctx.space().n_components() {
        1 => block,
        nc => block.expand_components(ctx.n_basis(), nc),
    }
}

/// Scalar block of `A_ε`; the vector form acts componentwise with it.
pub fn diffusion_block(ctx: &FormContext, params: &FormParams) -> Result<SparseMatrix> {
    params.validate()?;
    Ok(penalty_block(
        ctx,
        &PenaltyForm {
            consistency: 1.0,
            symmetry: f64::from(params.epsilon),
            sigma_int: params.sigma_int,
            sigma_bnd: Some(params.sigma_bnd),
        },
    ))
}

/// `A_ε` on the context's space, all faces, boundary jumps equal to traces.
pub fn assemble_diffusion(ctx: &FormContext, params: &FormParams) -> Result<AssembledForm> {
    let m = diffusion_block(ctx, params)?;
    Ok(AssembledForm { kind: FormKind::Diffusion { epsilon: params.epsilon }, matrix: expand(ctx, m) })
}

/// Symmetric interior penalty form on a scalar space, interior faces only.
pub fn assemble_pressure_poisson(ctx: &FormContext, params: &FormParams) -> Result<AssembledForm> {
    params.validate()?;
    if ctx.space().n_components() != 1 {
        return Err(Error::NotScalar);
    }
    let m = penalty_block(
        ctx,
        &PenaltyForm { consistency: 1.0, symmetry: -1.0, sigma_int: params.sigma_tilde, sigma_bnd: None },
    );
    Ok(AssembledForm { kind: FormKind::PressurePoisson, matrix: m })
}

/// Scalar block of the velocity energy `Σ‖∇w‖² + Σ_F σ/h_F ‖[w]‖²`.
pub fn velocity_energy_block(ctx: &FormContext, params: &FormParams) -> SparseMatrix {
    penalty_block(
        ctx,
        &PenaltyForm { consistency: 0.0, symmetry: 0.0, sigma_int: params.sigma_int, sigma_bnd: Some(params.sigma_bnd) },
    )
}

/// Matrix of the pressure semi-norm `Σ‖∇g‖² + Σ_{interior} σ̃/h_F ‖[g]‖²`.
pub fn pressure_energy_matrix(ctx: &FormContext, params: &FormParams) -> SparseMatrix {
    penalty_block(
        ctx,
        &PenaltyForm { consistency: 0.0, symmetry: 0.0, sigma_int: params.sigma_tilde, sigma_bnd: None },
    )
}

/// `xᵀ (I_c ⊗ A) y` for a componentwise operator given by its scalar block.
pub fn componentwise_bilinear(block: &SparseMatrix, n_basis: usize, x: &[f64], y: &[f64]) -> f64 {
    let nc = x.len() / block.n_rows();
    let xs = split_components(x, n_basis, nc);
    let ys = split_components(y, n_basis, nc);
    xs.iter().zip(&ys).map(|(a, b)| block.bilinear(a, b)).sum()
}

/// Splits element-major, component-major coefficients into one vector per
/// component.
pub fn split_components(x: &[f64], n_basis: usize, n_comp: usize) -> Vec<Vec<f64>> {
    let per = n_basis * n_comp;
    let n_el = x.len() / per;
    (0..n_comp)
        .map(|c| {
            let mut out = Vec::with_capacity(n_el * n_basis);
            for e in 0..n_el {
                out.extend_from_slice(&x[e * per + c * n_basis..e * per + (c + 1) * n_basis]);
            }
            out
        })
        .collect()
}

/// Inverse of [`split_components`].
pub fn merge_components(parts: &[Vec<f64>], n_basis: usize) -> Vec<f64> {
    let nc = parts.len();
    let n_el = parts[0].len() / n_basis;
    let mut out = vec![0.0; n_el * n_basis * nc];
    for e in 0..n_el {
        for (c, p) in parts.iter().enumerate() {
            let dst = e * n_basis * nc + c * n_basis;
            out[dst..dst + n_basis].copy_from_slice(&p[e * n_basis..(e + 1) * n_basis]);
        }
    }
    out
}

/// `‖w‖_dG` over all faces.
pub fn dg_norm(ctx: &FormContext, w: &FieldVec, params: &FormParams) -> Result<f64> {
    ctx.check_field(w)?;
    let m = velocity_energy_block(ctx, params);
    Ok(componentwise_bilinear(&m, ctx.n_basis(), w.coeffs(), w.coeffs()).max(0.0).sqrt())
}

/// `|g|_dG`, interior faces only.
pub fn dg_seminorm(ctx: &FormContext, g: &FieldVec, params: &FormParams) -> Result<f64> {
    ctx.check_field(g)?;
    if ctx.space().n_components() != 1 {
        return Err(Error::NotScalar);
    }
    let m = pressure_energy_matrix(ctx, params);
    Ok(m.bilinear(g.coeffs(), g.coeffs()).max(0.0).sqrt())
}
