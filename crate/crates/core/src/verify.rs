//! Randomized checks of the structural properties of the assembled forms.
//! Every check draws its samples from one seeded generator, so a report is
//! reproducible bit for bit.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::forms::{
    apply_convection, assemble_pressure_coupling, assemble_pressure_coupling_gradient_form,
    assemble_pressure_poisson, broken_divergence, broken_gradient, diffusion_block, pressure_energy_matrix,
    velocity_energy_block, FormContext, FormParams, Lifts,
};
use crate::mesh::TriMesh;
use crate::quadrature::edge_rule;
use crate::space::{DgSpace, FieldVec};

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub samples: usize,
    /// largest violation seen (0 when the inequality always held)
    pub worst: f64,
    pub tol: f64,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<InvariantCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(InvariantCheck::passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("invariant,samples,worst,tol,pass\n");
        for c in &self.checks {
            let _ = writeln!(out, "{},{},{:.3e},{:.1e},{}", c.name, c.samples, c.worst, c.tol, c.passed());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<28} samples={:<4} worst={:.3e} tol={:.1e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.samples,
                c.worst,
                c.tol
            );
        }
        out
    }
}

struct Setup {
    r: usize,
    vel: FormContext,
    pres: FormContext,
}

fn setup(n: usize, r: usize) -> Result<Setup> {
    let mesh = Arc::new(TriMesh::uniform(n)?);
    let vs = DgSpace::vector(Arc::clone(&mesh), r)?;
    let ps = DgSpace::scalar(mesh, r - 1)?;
    let ex = vs.form_exactness();
    Ok(Setup { r, vel: FormContext::new(&vs, ex)?, pres: FormContext::new(&ps, ex)? })
}

fn random(space: &Arc<DgSpace>, rng: &mut ChaCha8Rng) -> Result<FieldVec> {
    space.field((0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_F ∫_F f(face, x)` with a fresh edge rule and pointwise evaluation.
fn face_integral(mesh: &TriMesh, exactness: usize, f: impl Fn(usize, [f64; 2]) -> Result<f64>) -> Result<f64> {
    let rule = edge_rule(exactness)?;
    let mut sum = 0.0;
    for (fi, face) in mesh.faces().iter().enumerate() {
        let [a, b] = mesh.face_points(fi);
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            sum += w * face.measure * f(fi, [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])?;
        }
    }
    Ok(sum)
}

fn point_value(f: &FieldVec, e: usize, x: [f64; 2]) -> Result<Vec<f64>> {
    f.evaluate(e, f.space().element_basis(e).map.to_reference(x))
}

/// `(jump, average)` of each component across face `fi` at `x`.
fn jump_avg(f: &FieldVec, fi: usize, x: [f64; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let face = &f.space().mesh().faces()[fi];
    let a = point_value(f, face.k1, x)?;
    Ok(match face.k2 {
        None => (a.clone(), a),
        Some(k2) => {
            let b = point_value(f, k2, x)?;
            (a.iter().zip(&b).map(|(p, q)| p - q).collect(), a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect())
        }
    })
}

/// Runs every invariant with at least `samples` random draws each on an
/// `n × n` mesh for `r = 1, 2`.
pub fn verify_forms(seed: u64, samples: usize, n: usize) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let setups = [setup(n, 1)?, setup(n, 2)?];
    let per = samples.div_ceil(setups.len());
    let mut checks = Vec::new();
    let mut add = |name, samples, worst: f64, tol| checks.push(InvariantCheck { name, samples, worst, tol });

    // A_c(z; z, w, w) ≥ 0
    let mut worst = 0.0f64;
    for s in &setups {
        for _ in 0..per {
            let z = random(s.vel.space(), &mut rng)?;
            let w = random(s.vel.space(), &mut rng)?;
            let t = apply_convection(&s.vel, &z, &z, &w, &w)?.total();
            worst = worst.max(-t);
        }
    }
    add("convection-positivity", per * setups.len(), worst, 1e-10);

    // A_c = 𝒞 − 𝒰 with 𝒰 the signed inflow term
    let mut worst = 0.0f64;
    for s in &setups {
        for _ in 0..per {
            let z = random(s.vel.space(), &mut rng)?;
            let phi = random(s.vel.space(), &mut rng)?;
            let w = random(s.vel.space(), &mut rng)?;
            let p = apply_convection(&s.vel, &z, &z, &phi, &w)?;
            worst = worst.max((p.total() - (p.central - p.upwind_signed)).abs());
        }
    }
    add("convection-split", per * setups.len(), worst, 1e-10);

    // symmetry of A_d and A_sip, relative to the size of the values
    let mut worst = 0.0f64;
    for s in &setups {
        let forms = FormParams::defaults_for(s.r);
        let a = diffusion_block(&s.vel, &forms)?;
        let sip = assemble_pressure_poisson(&s.pres, &forms)?.matrix;
        for _ in 0..per {
            for m in [&a, &sip] {
                let (x, y) = (random_vec(m.n_rows(), &mut rng), random_vec(m.n_rows(), &mut rng));
                let (p, q) = (m.bilinear(&x, &y), m.bilinear(&y, &x));
                worst = worst.max((p - q).abs() / p.abs().max(1.0));
            }
        }
    }
    add("diffusion-symmetry", per * setups.len(), worst, 1e-12);

    // A_ε(w, w) ≥ ω‖w‖²_dG for every ε, and A_sip(g, g) ≥ ½|g|²_dG
    let mut worst = 0.0f64;
    for s in &setups {
        let base = FormParams::defaults_for(s.r);
        let energy = velocity_energy_block(&s.vel, &base);
        let semi = pressure_energy_matrix(&s.pres, &base);
        let sip = assemble_pressure_poisson(&s.pres, &base)?.matrix;
        let blocks = [-1, 0, 1]
            .iter()
            .map(|&eps| {
                let p = FormParams { epsilon: eps, ..base };
                Ok((p.omega(), diffusion_block(&s.vel, &p)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for _ in 0..per {
            let w = random_vec(energy.n_rows(), &mut rng);
            let e = energy.bilinear(&w, &w);
            for (omega, a) in &blocks {
                worst = worst.max(omega * e - a.bilinear(&w, &w));
            }
            let g = random_vec(sip.n_rows(), &mut rng);
            worst = worst.max(0.5 * semi.bilinear(&g, &g) - sip.bilinear(&g, &g));
        }
    }
    add("coercivity", per * setups.len(), worst, 1e-10);

    // b in jump form, gradient form, and through either lift
    let mut worst = 0.0f64;
    for s in &setups {
        let b = assemble_pressure_coupling(&s.vel, &s.pres)?.matrix;
        let b2 = assemble_pressure_coupling_gradient_form(&s.vel, &s.pres)?.matrix;
        let lifts = Lifts::new(&s.vel, &s.pres)?;
        let d = broken_divergence(&s.vel, &s.pres)?;
        let gr = broken_gradient(&s.vel, &s.pres)?;
        for _ in 0..per {
            let w = random(s.vel.space(), &mut rng)?;
            let g = random(s.pres.space(), &mut rng)?;
            let (wc, gc) = (w.coeffs(), g.coeffs());
            let x = b.bilinear(gc, wc);
            let via_r = d.bilinear(gc, wc) - dot(&lifts.r.mul_vec(wc), gc);
            let via_g = -gr.bilinear(gc, wc) + dot(&lifts.g.mul_vec(gc), wc);
            for y in [b2.bilinear(gc, wc), via_r, via_g] {
                worst = worst.max((x - y).abs());
            }
        }
    }
    add("coupling-equivalence", per * setups.len(), worst, 1e-10);

    // (R[w], g) = Σ_F ∫{g}[w]·n and (G[g], w) = Σ_interior ∫{w}·n [g]
    let mut worst = 0.0f64;
    for s in &setups {
        let lifts = Lifts::new(&s.vel, &s.pres)?;
        let mesh = s.vel.mesh();
        let ex = 2 * s.r + 2;
        for _ in 0..per {
            let w = random(s.vel.space(), &mut rng)?;
            let g = random(s.pres.space(), &mut rng)?;
            let lhs = dot(&lifts.r.mul_vec(w.coeffs()), g.coeffs());
            let rhs = face_integral(mesh, ex, |fi, x| {
                let n = mesh.faces()[fi].normal;
                let (jw, _) = jump_avg(&w, fi, x)?;
                let (_, ag) = jump_avg(&g, fi, x)?;
                Ok(ag[0] * (jw[0] * n[0] + jw[1] * n[1]))
            })?;
            worst = worst.max((lhs - rhs).abs());
            let lhs = dot(&lifts.g.mul_vec(g.coeffs()), w.coeffs());
            let rhs = face_integral(mesh, ex, |fi, x| {
                let face = &mesh.faces()[fi];
                if face.is_boundary() {
                    return Ok(0.0);
                }
                let n = face.normal;
                let (_, aw) = jump_avg(&w, fi, x)?;
                let (jg, _) = jump_avg(&g, fi, x)?;
                Ok((aw[0] * n[0] + aw[1] * n[1]) * jg[0])
            })?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    add("lift-identities", per * setups.len(), worst, 1e-10);

    Ok(VerifyReport { seed, checks })
}
