use super::assembly::{avg_weight, jump_sign, BlockBuilder, FormContext};
use super::{AssembledForm, FormKind};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::space::FieldVec;

/// Weights of the pieces a pressure–velocity form can be built from. Rows are
/// pressure dofs, columns velocity dofs.
#[derive(Default)]
struct Terms {
    /// `∫ (∇·w) g`
    div: f64,
    /// `∫ w·∇g`
    grad: f64,
    /// `Σ_{all F} ∫ {g} [w]·n_F`
    avg_g_jump_w: f64,
    /// `Σ_{interior F} ∫ {w}·n_F [g]`
    avg_w_jump_g: f64,
}

fn check(vel: &FormContext, pres: &FormContext) -> Result<()> {
    vel.check_pair(pres)?;
    if vel.space().n_components() != 2 || pres.space().n_components() != 1 {
        return Err(Error::SpaceMismatch("coupling needs a vector velocity and a scalar pressure space".into()));
    }
    Ok(())
}

fn coupling(vel: &FormContext, pres: &FormContext, t: &Terms) -> Result<SparseMatrix> {
    check(vel, pres)?;
    let nbu = vel.n_basis();
    let nbp = pres.n_basis();
    let mesh = pres.mesh();
    let mut bb = BlockBuilder::neighbours(mesh, nbp, 2 * nbu);
    let cb = bb.cols_per_block();
    if t.div != 0.0 || t.grad != 0.0 {
        for e in 0..mesh.n_elements() {
            let (ue, pe) = (vel.element(e), pres.element(e));
            let blk = bb.block(e, e);
            for q in 0..ue.weights.len() {
                let w = ue.weights[q];
                for i in 0..nbp {
                    let psi = pe.values[q][i];
                    let dpsi = pe.grads[q][i];
                    for c in 0..2 {
                        for j in 0..nbu {
                            blk[i * cb + c * nbu + j] +=
                                w * (t.div * ue.grads[q][j][c] * psi + t.grad * ue.values[q][j] * dpsi[c]);
                        }
                    }
                }
            }
        }
    }
    for (fi, face) in mesh.faces().iter().enumerate() {
        let (uf, pf) = (vel.face(fi), pres.face(fi));
        let ns = uf.sides.len();
        let avg = avg_weight(ns);
        let n = face.normal;
        let interior = !face.is_boundary();
        for (q, w) in uf.weights.iter().enumerate() {
            for a in 0..ns {
                let sp = &pf.sides[a];
                let ja = jump_sign(ns, a);
                for b in 0..ns {
                    let su = &uf.sides[b];
                    let jb = jump_sign(ns, b);
                    let blk = bb.block(sp.element, su.element);
                    for i in 0..nbp {
                        let psi = sp.values[q][i];
                        let mut coef = t.avg_g_jump_w * avg * psi * jb;
                        if interior {
                            coef += t.avg_w_jump_g * avg * ja * psi;
                        }
                        if coef == 0.0 {
                            continue;
                        }
                        for c in 0..2 {
                            for j in 0..nbu {
                                blk[i * cb + c * nbu + j] += w * coef * su.values[q][j] * n[c];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(bb.into_matrix())
}

/// `B[i][j] = b(φ_j, ψ_i)` with `b(w,g) = Σ∫(∇·w)g − Σ_F∫{g}[w]·n_F`.
pub fn assemble_pressure_coupling(vel: &FormContext, pres: &FormContext) -> Result<AssembledForm> {
    let m = coupling(vel, pres, &Terms { div: 1.0, avg_g_jump_w: -1.0, ..Terms::default() })?;
    Ok(AssembledForm { kind: FormKind::PressureCoupling, matrix: m })
}

/// The same form written as `−Σ∫w·∇g + Σ_{interior}∫{w}·n_F[g]`.
pub fn assemble_pressure_coupling_gradient_form(vel: &FormContext, pres: &FormContext) -> Result<AssembledForm> {
    let m = coupling(vel, pres, &Terms { grad: -1.0, avg_w_jump_g: 1.0, ..Terms::default() })?;
    Ok(AssembledForm { kind: FormKind::PressureCoupling, matrix: m })
}

/// `(∇_h·φ_j, ψ_i)`
pub fn broken_divergence(vel: &FormContext, pres: &FormContext) -> Result<SparseMatrix> {
    coupling(vel, pres, &Terms { div: 1.0, ..Terms::default() })
}

/// `(φ_j, ∇_h ψ_i)`
pub fn broken_gradient(vel: &FormContext, pres: &FormContext) -> Result<SparseMatrix> {
    coupling(vel, pres, &Terms { grad: 1.0, ..Terms::default() })
}

/// Matrices of the jump lifts. The pressure and velocity mass matrices are
/// identities, so applying a matrix to coefficients gives the lifted field.
#[derive(Debug, Clone)]
pub struct Lifts {
    /// velocity → pressure, all faces
    pub r: SparseMatrix,
    /// pressure → velocity, interior faces
    pub g: SparseMatrix,
}

impl Lifts {
    pub fn new(vel: &FormContext, pres: &FormContext) -> Result<Self> {
        let r = coupling(vel, pres, &Terms { avg_g_jump_w: 1.0, ..Terms::default() })?;
        let g = coupling(vel, pres, &Terms { avg_w_jump_g: 1.0, ..Terms::default() })?.transpose();
        Ok(Self { r, g })
    }

    /// `R_h([w])` on the pressure space.
    pub fn lift_r(&self, w: &FieldVec, pres: &FormContext) -> Result<FieldVec> {
        if w.coeffs().len() != self.r.n_cols() {
            return Err(Error::SpaceMismatch("velocity field".into()));
        }
        pres.space().field(self.r.mul_vec(w.coeffs()))
    }

    /// `G_h([β])` on the velocity space.
    pub fn lift_g(&self, beta: &FieldVec, vel: &FormContext) -> Result<FieldVec> {
        if beta.coeffs().len() != self.g.n_cols() {
            return Err(Error::SpaceMismatch("pressure field".into()));
        }
        vel.space().field(self.g.mul_vec(beta.coeffs()))
    }
}
