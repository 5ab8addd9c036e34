use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mesh::{Point, TriMesh};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::space::{project_vector, DgSpace, FieldVec};

fn mesh(n: usize) -> Arc<TriMesh> {
    Arc::new(TriMesh::uniform(n).unwrap())
}

fn random_field(space: &Arc<DgSpace>, rng: &mut ChaCha8Rng) -> FieldVec {
    space.field((0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Brute-force pointwise evaluation, independent of the assembly tables.
struct Probe<'a> {
    f: &'a FieldVec,
}

impl Probe<'_> {
    fn value(&self, e: usize, x: Point) -> Vec<f64> {
        let r = self.f.space().element_basis(e).map.to_reference(x);
        self.f.evaluate(e, r).unwrap()
    }

    fn grad(&self, e: usize, x: Point) -> Vec<[f64; 2]> {
        let s = self.f.space();
        let eb = s.element_basis(e);
        let g = eb.eval_grad(s.basis(), eb.map.to_reference(x));
        (0..s.n_components())
            .map(|c| {
                g.iter().enumerate().fold([0.0, 0.0], |acc, (i, gi)| {
                    let v = self.f.coeffs()[s.dof(e, c, i)];
                    [acc[0] + v * gi[0], acc[1] + v * gi[1]]
                })
            })
            .collect()
    }
}

/// Σ_K ∫_K f(e, x) by a fresh high-order rule.
fn volume_sum(m: &TriMesh, f: impl Fn(usize, Point) -> f64) -> f64 {
    let rule = triangle_rule(14).unwrap();
    (0..m.n_elements())
        .map(|e| {
            let p = m.element_points(e);
            let det = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(r, w)| {
                    let x = [
                        p[0][0] + (p[1][0] - p[0][0]) * r[0] + (p[2][0] - p[0][0]) * r[1],
                        p[0][1] + (p[1][1] - p[0][1]) * r[0] + (p[2][1] - p[0][1]) * r[1],
                    ];
                    w * det * f(e, x)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Σ_F ∫_F f(face, x) by a fresh high-order rule.
fn face_sum(m: &TriMesh, f: impl Fn(usize, Point) -> f64) -> f64 {
    let rule = edge_rule(14).unwrap();
    (0..m.n_faces())
        .map(|fi| {
            let [a, b] = m.face_points(fi);
            let len = m.faces()[fi].measure;
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(s, w)| w * len * f(fi, [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]))
                .sum::<f64>()
        })
        .sum()
}

/// (jump, average) of every component of `vals(e, x)` across face `fi`.
fn jump_avg(m: &TriMesh, fi: usize, x: Point, vals: impl Fn(usize, Point) -> Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let face = &m.faces()[fi];
    let a = vals(face.k1, x);
    match face.k2 {
        None => (a.clone(), a),
        Some(k2) => {
            let b = vals(k2, x);
            (a.iter().zip(&b).map(|(p, q)| p - q).collect(), a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect())
        }
    }
}

fn oracle_diffusion(u: &FieldVec, w: &FieldVec, p: &FormParams) -> f64 {
    let m = u.space().mesh().clone();
    let (pu, pw) = (Probe { f: u }, Probe { f: w });
    let vol = volume_sum(&m, |e, x| {
        pu.grad(e, x).iter().zip(pw.grad(e, x)).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum()
    });
    let faces = face_sum(&m, |fi, x| {
        let face = &m.faces()[fi];
        let n = face.normal;
        let dn = |pr: &Probe, e: usize| pr.grad(e, x).iter().map(|g| g[0] * n[0] + g[1] * n[1]).collect::<Vec<_>>();
        let (ju, _) = jump_avg(&m, fi, x, |e, x| pu.value(e, x));
        let (jw, _) = jump_avg(&m, fi, x, |e, x| pw.value(e, x));
        let (_, dun) = jump_avg(&m, fi, x, |e, _| dn(&pu, e));
        let (_, dwn) = jump_avg(&m, fi, x, |e, _| dn(&pw, e));
        let sigma = if face.is_boundary() { p.sigma_bnd } else { p.sigma_int };
        (0..ju.len())
            .map(|c| {
                -dun[c] * jw[c] + f64::from(p.epsilon) * dwn[c] * ju[c] + sigma / face.measure * ju[c] * jw[c]
            })
            .sum()
    });
    vol + faces
}

/// b(w, g) = Σ∫(∇·w)g − Σ_F∫{g}[w]·n_F
fn oracle_coupling(w: &FieldVec, g: &FieldVec) -> f64 {
    let m = w.space().mesh().clone();
    let (pw, pg) = (Probe { f: w }, Probe { f: g });
    let vol = volume_sum(&m, |e, x| {
        let d = pw.grad(e, x);
        (d[0][0] + d[1][1]) * pg.value(e, x)[0]
    });
    let faces = face_sum(&m, |fi, x| {
        let n = m.faces()[fi].normal;
        let (jw, _) = jump_avg(&m, fi, x, |e, x| pw.value(e, x));
        let (_, ag) = jump_avg(&m, fi, x, |e, x| pg.value(e, x));
        ag[0] * (jw[0] * n[0] + jw[1] * n[1])
    });
    vol - faces
}

fn contexts(n: usize, r: usize) -> (FormContext, FormContext) {
    let m = mesh(n);
    let v = DgSpace::vector(m.clone(), r).unwrap();
    let p = DgSpace::scalar(m, r - 1).unwrap();
    let e = v.form_exactness();
    (FormContext::new(&v, e).unwrap(), FormContext::new(&p, e).unwrap())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn params_validation() {
    assert!(FormParams::new(6.0, 12.0, 10.0, 2).is_err());
    assert!(FormParams::new(0.0, 12.0, 10.0, -1).is_err());
    let d = FormParams::defaults_for(1);
    assert_eq!((d.sigma_int, d.sigma_bnd, d.sigma_tilde, d.epsilon), (6.0, 12.0, 10.0, -1));
    let d = FormParams::defaults_for(2);
    assert_eq!((d.sigma_int, d.sigma_bnd), (8.0, 16.0));
    assert_eq!(d.omega(), 0.5);
}

#[test]
fn diffusion_of_linear_field() {
    // w = (x, 0): volume 1, consistency terms −2 on x = 1, penalty σ_b n on
    // x = 1 plus σ_b n/3 on each of y = 0 and y = 1.
    for n in [2, 4] {
        let (v, _) = contexts(n, 1);
        let p = FormParams::defaults_for(1);
        let w = project_vector(v.space(), |x| [x[0], 0.0]).unwrap();
        let a = assemble_diffusion(&v, &p).unwrap();
        let val = a.matrix.bilinear(w.coeffs(), w.coeffs());
        let hand = 1.0 - 2.0 + p.sigma_bnd * n as f64 * 5.0 / 3.0;
        assert!((val - hand).abs() < 1e-10, "{val} vs {hand}");
        assert!((oracle_diffusion(&w, &w, &p) - hand).abs() < 1e-10);
        let seminorm = dg_norm(&v, &w, &p).unwrap().powi(2) - p.sigma_bnd * n as f64 * 5.0 / 3.0;
        assert!((seminorm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn diffusion_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (r, eps) in [(1, -1), (2, 0), (2, 1)] {
        let (v, _) = contexts(3, r);
        let p = FormParams { epsilon: eps, ..FormParams::defaults_for(r) };
        let a = assemble_diffusion(&v, &p).unwrap();
        for _ in 0..3 {
            let (u, w) = (random_field(v.space(), &mut rng), random_field(v.space(), &mut rng));
            let fast = a.matrix.bilinear(w.coeffs(), u.coeffs());
            let slow = oracle_diffusion(&u, &w, &p);
            assert!((fast - slow).abs() < 1e-9 * slow.abs().max(1.0), "r {r} eps {eps}: {fast} vs {slow}");
        }
    }
}

#[test]
fn constants_only_see_boundary_penalty() {
    let (v, _) = contexts(4, 2);
    let p = FormParams::defaults_for(2);
    let c = project_vector(v.space(), |_| [1.5, -0.5]).unwrap();
    let a = assemble_diffusion(&v, &p).unwrap();
    // 16 boundary faces, each contributing (σ/h_F)|c|²|F| = σ|c|²
    let expect = 16.0 * p.sigma_bnd * 2.5;
    assert!((a.matrix.bilinear(c.coeffs(), c.coeffs()) - expect).abs() < 1e-9);
    assert!((dg_norm(&v, &c, &p).unwrap().powi(2) - expect).abs() < 1e-9);
}

#[test]
fn symmetry_and_coercivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for r in [1, 2] {
        let (v, pr) = contexts(4, r);
        let p = FormParams::defaults_for(r);
        let a = diffusion_block(&v, &p).unwrap();
        assert!(a.max_asymmetry() <= 1e-12);
        let e = velocity_energy_block(&v, &p);
        let sip = assemble_pressure_poisson(&pr, &p).unwrap().matrix;
        assert!(sip.max_asymmetry() <= 1e-12);
        let semi = pressure_energy_matrix(&pr, &p);
        for _ in 0..100 {
            let w: Vec<f64> = (0..v.n_scalar()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(a.bilinear(&w, &w) >= p.omega() * e.bilinear(&w, &w) - 1e-10);
            let g: Vec<f64> = (0..pr.n_scalar()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(sip.bilinear(&g, &g) >= 0.5 * semi.bilinear(&g, &g) - 1e-10);
        }
    }
}

#[test]
fn pressure_poisson_kills_constants() {
    for r in [1, 2, 3] {
        let (_, pr) = contexts(4, r);
        let sip = assemble_pressure_poisson(&pr, &FormParams::defaults_for(r)).unwrap().matrix;
        let one = pr.space().mean_functional().unwrap();
        assert!(sip.mul_vec(&one).iter().all(|v| v.abs() < 1e-10));
        let semi = dg_seminorm(&pr, &pr.space().field(one.iter().map(|v| 3.0 * v).collect()).unwrap(), &FormParams::defaults_for(r));
        assert!(semi.unwrap() < 1e-6);
    }
}

#[test]
fn coupling_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (n, r) in [(3, 1), (4, 2)] {
        let (v, pr) = contexts(n, r);
        let b = assemble_pressure_coupling(&v, &pr).unwrap().matrix;
        let b2 = assemble_pressure_coupling_gradient_form(&v, &pr).unwrap().matrix;
        let lifts = Lifts::new(&v, &pr).unwrap();
        let d = broken_divergence(&v, &pr).unwrap();
        let gr = broken_gradient(&v, &pr).unwrap();
        for _ in 0..50 {
            let w = random_field(v.space(), &mut rng);
            let g = random_field(pr.space(), &mut rng);
            let x = b.bilinear(g.coeffs(), w.coeffs());
            assert!((x - b2.bilinear(g.coeffs(), w.coeffs())).abs() < 1e-10);
            // (∇·w − R[w], g) and −(∇g, w) + (G[g], w)
            let rw = lifts.lift_r(&w, &pr).unwrap();
            let via_r = d.bilinear(g.coeffs(), w.coeffs()) - dot(rw.coeffs(), g.coeffs());
            let gg = lifts.lift_g(&g, &v).unwrap();
            let via_g = -gr.bilinear(g.coeffs(), w.coeffs()) + dot(gg.coeffs(), w.coeffs());
            assert!((x - via_r).abs() < 1e-10 && (x - via_g).abs() < 1e-10);
        }
        let w = random_field(v.space(), &mut rng);
        let g = random_field(pr.space(), &mut rng);
        let slow = oracle_coupling(&w, &g);
        assert!((b.bilinear(g.coeffs(), w.coeffs()) - slow).abs() < 1e-10 * slow.abs().max(1.0));
        // constants are orthogonal to the range of B
        let one = pr.space().mean_functional().unwrap();
        assert!(b.transpose().mul_vec(&one).iter().all(|x| x.abs() < 1e-10));
    }
}

#[test]
fn solenoidal_field_without_normal_flux() {
    // w = curl of x(1−x)y(1−y): continuous, divergence-free, w·n = 0 on ∂Ω
    let (v, pr) = contexts(3, 3);
    let w = project_vector(v.space(), |x| {
        let [x, y] = x;
        [x * (1.0 - x) * (1.0 - 2.0 * y), -(1.0 - 2.0 * x) * y * (1.0 - y)]
    })
    .unwrap();
    let b = assemble_pressure_coupling(&v, &pr).unwrap().matrix;
    assert!(b.mul_vec(w.coeffs()).iter().all(|x| x.abs() < 1e-10));
}

#[test]
fn lift_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (v, pr) = contexts(3, 2);
    let lifts = Lifts::new(&v, &pr).unwrap();
    let m = v.mesh().clone();
    for _ in 0..20 {
        let w = random_field(v.space(), &mut rng);
        let g = random_field(pr.space(), &mut rng);
        let (pw, pg) = (Probe { f: &w }, Probe { f: &g });
        let lhs = dot(lifts.lift_r(&w, &pr).unwrap().coeffs(), g.coeffs());
        let rhs = face_sum(&m, |fi, x| {
            let n = m.faces()[fi].normal;
            let (jw, _) = jump_avg(&m, fi, x, |e, x| pw.value(e, x));
            let (_, ag) = jump_avg(&m, fi, x, |e, x| pg.value(e, x));
            ag[0] * (jw[0] * n[0] + jw[1] * n[1])
        });
        assert!((lhs - rhs).abs() < 1e-10);
        let lhs = dot(lifts.lift_g(&g, &v).unwrap().coeffs(), w.coeffs());
        let rhs = face_sum(&m, |fi, x| {
            let face = &m.faces()[fi];
            if face.is_boundary() {
                return 0.0;
            }
            let n = face.normal;
            let (_, aw) = jump_avg(&m, fi, x, |e, x| pw.value(e, x));
            let (jg, _) = jump_avg(&m, fi, x, |e, x| pg.value(e, x));
            (aw[0] * n[0] + aw[1] * n[1]) * jg[0]
        });
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn lift_vanishes_on_continuous_zero_trace_field() {
    let (v, pr) = contexts(2, 4);
    let lifts = Lifts::new(&v, &pr).unwrap();
    let w = project_vector(v.space(), |x| {
        let bub = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
        [bub, -2.0 * bub]
    })
    .unwrap();
    assert!(lifts.lift_r(&w, &pr).unwrap().l2_norm() < 1e-10);
}

#[test]
fn convection_positivity_and_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for r in [1, 2] {
        let (v, _) = contexts(3, r);
        for _ in 0..100 {
            let z = random_field(v.space(), &mut rng);
            let phi = random_field(v.space(), &mut rng);
            let parts = apply_convection(&v, &z, &z, &phi, &phi).unwrap();
            assert!(parts.total() >= -1e-10 * parts.central.abs().max(1.0), "{parts:?}");
            let w = random_field(v.space(), &mut rng);
            let p = apply_convection(&v, &z, &z, &phi, &w).unwrap();
            assert!((p.total() - (p.central - p.upwind_signed)).abs() < 1e-10);
        }
    }
}

#[test]
fn convection_block_matches_matrix_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (v, _) = contexts(3, 2);
    let theta = random_field(v.space(), &mut rng);
    let z = random_field(v.space(), &mut rng);
    let c = convection_block(&v, &theta, &z).unwrap();
    let d = diffusion_block(&v, &FormParams::defaults_for(2)).unwrap();
    assert!(c.same_pattern(&d));
    for _ in 0..5 {
        let phi = random_field(v.space(), &mut rng);
        let w = random_field(v.space(), &mut rng);
        let a = componentwise_bilinear(&c, v.n_basis(), w.coeffs(), phi.coeffs());
        let b = apply_convection(&v, &theta, &z, &phi, &w).unwrap().total();
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
    }
    let zero = v.space().zeros();
    assert_eq!(apply_convection(&v, &zero, &zero, &theta, &z).unwrap().total(), 0.0);
}

#[test]
fn convection_of_linear_fields() {
    // z = (1,0), φ = w = (x,y): volume ∫x = 1/2, boundary average term
    // −½∫_{∂Ω} z·n |φ|² = −1/2, inflow on x = 0 adds ∫_0^1 y² = 1/3.
    let (v, _) = contexts(4, 1);
    let z = project_vector(v.space(), |_| [1.0, 0.0]).unwrap();
    let phi = project_vector(v.space(), |x| x).unwrap();
    let p = apply_convection(&v, &z, &z, &phi, &phi).unwrap();
    assert!((p.total() - 1.0 / 3.0).abs() < 1e-12);
    assert!((p.upwind - 1.0 / 3.0).abs() < 1e-12);
    assert!((p.central - 0.0).abs() < 1e-12);
}

#[test]
fn lift_bound_is_mesh_independent() {
    let mut ratios = Vec::new();
    for n in [4, 8, 16] {
        let (v, pr) = contexts(n, 2);
        let lifts = Lifts::new(&v, &pr).unwrap();
        // the difference of the energies at σ = 2 and σ = 1 is Σ h_F⁻¹‖[w]‖²
        let with = |s: f64| FormParams { sigma_int: s, sigma_bnd: s, ..FormParams::defaults_for(2) };
        let jumps = velocity_energy_block(&v, &with(2.0));
        let grad = velocity_energy_block(&v, &with(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let w = random_field(v.space(), &mut rng);
            let rw = lifts.lift_r(&w, &pr).unwrap().l2_norm();
            let j = componentwise_bilinear(&jumps, v.n_basis(), w.coeffs(), w.coeffs())
                - componentwise_bilinear(&grad, v.n_basis(), w.coeffs(), w.coeffs());
            worst = worst.max(rw / j.sqrt());
        }
        ratios.push(worst);
    }
    for w in ratios.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{ratios:?}");
    }
}

#[test]
fn export_has_header() {
    let (_, pr) = contexts(1, 1);
    let s = assemble_pressure_poisson(&pr, &FormParams::defaults_for(1)).unwrap().export();
    assert!(s.starts_with("% pressure-poisson\n% 2 2 4\n"));
}

#[test]
fn mismatched_spaces_rejected() {
    let (v, _) = contexts(2, 1);
    let (_, p_other) = contexts(2, 1);
    assert!(assemble_pressure_coupling(&v, &p_other).is_err());
    let other = DgSpace::vector(mesh(2), 1).unwrap();
    let f = other.zeros();
    assert!(apply_convection(&v, &f, &f, &f, &f).is_err());
}
