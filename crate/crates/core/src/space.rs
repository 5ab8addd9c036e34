//! Broken polynomial spaces, discrete fields and the local L² projection.
//!
//! Degrees of freedom are element-major, then component-major, then basis
//! index. Every element basis is L²(K)-orthonormal, so the global mass
//! matrix is the identity and coefficient vectors carry L² inner products
//! directly.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::basis::{orthonormalize_on_element, ElementBasis, PolyBasis};
use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::quadrature::{edge_rule, triangle_rule};

#[derive(Debug)]
pub struct DgSpace {
    mesh: Arc<TriMesh>,
    degree: usize,
    n_components: usize,
    basis: PolyBasis,
    elements: Vec<ElementBasis>,
}

impl DgSpace {
    pub fn new(mesh: Arc<TriMesh>, degree: usize, n_components: usize) -> Result<Arc<Self>> {
        if !(1..=2).contains(&n_components) {
            return Err(Error::SpaceMismatch(format!("{n_components} components")));
        }
        let basis = PolyBasis::new(degree)?;
        let elements = (0..mesh.n_elements())
            .map(|e| {
                orthonormalize_on_element(&mesh.element_points(e)).map_err(|err| match err {
                    Error::DegenerateElement { area, .. } => Error::DegenerateElement { element: e, area },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self { mesh, degree, n_components, basis, elements }))
    }

    pub fn scalar(mesh: Arc<TriMesh>, degree: usize) -> Result<Arc<Self>> {
        Self::new(mesh, degree, 1)
    }

    pub fn vector(mesh: Arc<TriMesh>, degree: usize) -> Result<Arc<Self>> {
        Self::new(mesh, degree, 2)
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn basis(&self) -> &PolyBasis {
        &self.basis
    }

    pub fn element_basis(&self, e: usize) -> &ElementBasis {
        &self.elements[e]
    }

    /// Basis functions per element and component.
    pub fn n_basis(&self) -> usize {
        self.basis.n_funcs()
    }

    pub fn dofs_per_element(&self) -> usize {
        self.n_components * self.n_basis()
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_elements() * self.dofs_per_element()
    }

    #[inline]
    pub fn dof(&self, element: usize, component: usize, i: usize) -> usize {
        element * self.dofs_per_element() + component * self.n_basis() + i
    }

    /// True when both spaces live on the same mesh instance.
    pub fn same_mesh(&self, other: &DgSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Default volume/face quadrature exactness for the forms: `2r+2`, raised
    /// to `3r` so that the trilinear convection terms stay exact.
    pub fn form_exactness(&self) -> usize {
        (2 * self.degree + 2).max(3 * self.degree)
    }

    /// Quadrature exactness used for projections and error norms.
    pub fn error_exactness(&self) -> usize {
        2 * self.degree + 4
    }

    /// ∫_K ψ_i for every scalar dof; for a scalar space these are also the
    /// coefficients of the constant function 1.
    pub fn mean_functional(&self) -> Result<Vec<f64>> {
        if self.n_components != 1 {
            return Err(Error::NotScalar);
        }
        let rule = triangle_rule(self.degree)?;
        let ref_int: Vec<f64> = (0..self.n_basis())
            .map(|i| rule.points.iter().zip(&rule.weights).map(|(p, w)| w * self.basis.eval(*p)[i]).sum())
            .collect();
        let mut m = vec![0.0; self.n_dofs()];
        for (e, eb) in self.elements.iter().enumerate() {
            for (i, r) in ref_int.iter().enumerate() {
                m[self.dof(e, 0, i)] = r * eb.map.det.abs() * eb.scale;
            }
        }
        Ok(m)
    }

    pub fn zeros(self: &Arc<Self>) -> FieldVec {
        FieldVec { space: Arc::clone(self), coeffs: vec![0.0; self.n_dofs()] }
    }

    pub fn field(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<FieldVec> {
        FieldVec::new(Arc::clone(self), coeffs)
    }
}

/// Basis values at a fixed set of reference points, shared by all elements.
#[derive(Debug, Clone)]
pub struct VolumeTable {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl VolumeTable {
    pub fn new(basis: &PolyBasis, exactness: usize) -> Result<Self> {
        let rule = triangle_rule(exactness)?;
        let values = rule.points.iter().map(|p| basis.eval(*p)).collect();
        let grads = rule.points.iter().map(|p| basis.eval_grad(*p)).collect();
        Ok(Self { points: rule.points, weights: rule.weights, values, grads })
    }
}

/// Basis traces of one element on one face.
#[derive(Debug, Clone)]
pub struct SideTrace {
    pub element: usize,
    /// `values[q][i]`
    pub values: Vec<Vec<f64>>,
    /// physical gradients, `grads[q][i]`
    pub grads: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone)]
pub struct FaceQuad {
    pub points: Vec<Point>,
    /// Physical weights, already multiplied by `|F|`.
    pub weights: Vec<f64>,
    /// One entry on the boundary, two on interior faces (`k1` first).
    pub sides: Vec<SideTrace>,
}

/// Face quadrature with basis traces for every face of the mesh.
#[derive(Debug, Clone)]
pub struct FaceTable {
    pub faces: Vec<FaceQuad>,
}

impl FaceTable {
    pub fn new(space: &DgSpace, exactness: usize) -> Result<Self> {
        let rule = edge_rule(exactness)?;
        let mesh = space.mesh();
        let faces = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(fi, face)| {
                let [pa, pb] = mesh.face_points(fi);
                let points: Vec<Point> = rule
                    .points
                    .iter()
                    .map(|s| [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])])
                    .collect();
                let weights = rule.weights.iter().map(|w| w * face.measure).collect();
                let sides = std::iter::once(face.k1)
                    .chain(face.k2)
                    .map(|e| {
                        let eb = space.element_basis(e);
                        let refs: Vec<[f64; 2]> = points.iter().map(|x| eb.map.to_reference(*x)).collect();
                        SideTrace {
                            element: e,
                            values: refs.iter().map(|r| eb.eval(space.basis(), *r)).collect(),
                            grads: refs.iter().map(|r| eb.eval_grad(space.basis(), *r)).collect(),
                        }
                    })
                    .collect();
                FaceQuad { points, weights, sides }
            })
            .collect();
        Ok(Self { faces })
    }
}

/// Coefficients of a discrete field together with the space they belong to.
#[derive(Debug, Clone)]
pub struct FieldVec {
    space: Arc<DgSpace>,
    coeffs: Vec<f64>,
}

impl FieldVec {
    pub fn new(space: Arc<DgSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Dimension(format!("{} coefficients for {} dofs", coeffs.len(), space.n_dofs())));
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// L² norm; the basis is orthonormal so this is the Euclidean norm of
    /// the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Values of all components at reference point `r` of element `e`.
    pub fn evaluate(&self, e: usize, r: [f64; 2]) -> Result<Vec<f64>> {
        if e >= self.space.mesh().n_elements() {
            return Err(Error::InvalidElement(e));
        }
        let eb = self.space.element_basis(e);
        let phi = eb.eval(self.space.basis(), r);
        Ok((0..self.space.n_components())
            .map(|c| phi.iter().enumerate().map(|(i, v)| v * self.coeffs[self.space.dof(e, c, i)]).sum())
            .collect())
    }

    /// Component `c` of element `e` from precomputed basis values.
    #[inline]
    pub(crate) fn combine(&self, e: usize, c: usize, values: &[f64]) -> f64 {
        let base = self.space.dof(e, c, 0);
        values.iter().zip(&self.coeffs[base..base + values.len()]).map(|(v, c)| v * c).sum()
    }

    #[inline]
    pub(crate) fn combine_grad(&self, e: usize, c: usize, grads: &[[f64; 2]]) -> [f64; 2] {
        let base = self.space.dof(e, c, 0);
        grads
            .iter()
            .zip(&self.coeffs[base..base + grads.len()])
            .fold([0.0, 0.0], |acc, (g, c)| [acc[0] + c * g[0], acc[1] + c * g[1]])
    }

    pub fn mean_value(&self) -> Result<f64> {
        let m = self.space.mean_functional()?;
        Ok(m.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum())
    }

    /// Subtracts the constant that makes the field mean-free.
    pub fn remove_mean(&self) -> Result<FieldVec> {
        let m = self.space.mean_functional()?;
        let mean: f64 = m.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        let measure: f64 = m.iter().map(|v| v * v).sum();
        let shift = mean / measure;
        let coeffs = self.coeffs.iter().zip(&m).map(|(c, mi)| c - shift * mi).collect();
        Ok(FieldVec { space: Arc::clone(&self.space), coeffs })
    }

    /// Scalar field holding component `c` on the scalar space `target`.
    pub fn component(&self, c: usize, target: &Arc<DgSpace>) -> Result<FieldVec> {
        if target.n_components() != 1 || !target.same_mesh(&self.space) || target.degree() != self.space.degree() {
            return Err(Error::SpaceMismatch("component target".into()));
        }
        let nb = self.space.n_basis();
        let mut out = Vec::with_capacity(target.n_dofs());
        for e in 0..self.space.mesh().n_elements() {
            let base = self.space.dof(e, c, 0);
            out.extend_from_slice(&self.coeffs[base..base + nb]);
        }
        target.field(out)
    }

    /// Inverse of [`FieldVec::component`].
    pub fn from_components(space: &Arc<DgSpace>, parts: &[&[f64]]) -> Result<FieldVec> {
        let nb = space.n_basis();
        if parts.len() != space.n_components() || parts.iter().any(|p| p.len() * parts.len() != space.n_dofs()) {
            return Err(Error::SpaceMismatch("component count".into()));
        }
        let mut coeffs = vec![0.0; space.n_dofs()];
        for e in 0..space.mesh().n_elements() {
            for (c, part) in parts.iter().enumerate() {
                let dst = space.dof(e, c, 0);
                coeffs[dst..dst + nb].copy_from_slice(&part[e * nb..(e + 1) * nb]);
            }
        }
        space.field(coeffs)
    }

    /// CSV rows `element,x,y,value...` at the error-quadrature points.
    pub fn to_csv(&self) -> Result<String> {
        let table = VolumeTable::new(self.space.basis(), self.space.error_exactness())?;
        let mut out = String::from("element,x,y");
        for c in 0..self.space.n_components() {
            let _ = write!(out, ",v{c}");
        }
        out.push('\n');
        for e in 0..self.space.mesh().n_elements() {
            let eb = self.space.element_basis(e);
            for (p, vals) in table.points.iter().zip(&table.values) {
                let x = eb.map.to_physical(*p);
                let _ = write!(out, "{e},{},{}", x[0], x[1]);
                for c in 0..self.space.n_components() {
                    let v = eb.scale * self.combine(e, c, vals);
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        Ok(out)
    }
}

/// Local L² projection of `f` (any number of components) onto `space`.
pub fn l2_project_with(space: &Arc<DgSpace>, exactness: usize, f: impl Fn(Point, &mut [f64])) -> Result<FieldVec> {
    let table = VolumeTable::new(space.basis(), exactness)?;
    let nc = space.n_components();
    let mut coeffs = vec![0.0; space.n_dofs()];
    let mut val = vec![0.0; nc];
    for e in 0..space.mesh().n_elements() {
        let eb = space.element_basis(e);
        let jw = eb.map.det.abs() * eb.scale;
        for ((p, w), phi) in table.points.iter().zip(&table.weights).zip(&table.values) {
            f(eb.map.to_physical(*p), &mut val);
            for (c, vc) in val.iter().enumerate() {
                let base = space.dof(e, c, 0);
                for (i, v) in phi.iter().enumerate() {
                    coeffs[base + i] += w * jw * vc * v;
                }
            }
        }
    }
    space.field(coeffs)
}

pub fn project_scalar(space: &Arc<DgSpace>, f: impl Fn(Point) -> f64) -> Result<FieldVec> {
    if space.n_components() != 1 {
        return Err(Error::SpaceMismatch("scalar function on vector space".into()));
    }
    l2_project_with(space, space.error_exactness(), |x, out| out[0] = f(x))
}

pub fn project_vector(space: &Arc<DgSpace>, f: impl Fn(Point) -> [f64; 2]) -> Result<FieldVec> {
    if space.n_components() != 2 {
        return Err(Error::SpaceMismatch("vector function on scalar space".into()));
    }
    l2_project_with(space, space.error_exactness(), |x, out| out.copy_from_slice(&f(x)))
}

/// ∫ (field − f)² over the domain, by quadrature of the given exactness.
pub fn l2_distance_squared(field: &FieldVec, exactness: usize, f: impl Fn(Point, &mut [f64])) -> Result<f64> {
    let space = field.space();
    let table = VolumeTable::new(space.basis(), exactness)?;
    let nc = space.n_components();
    let mut val = vec![0.0; nc];
    let mut total = 0.0;
    for e in 0..space.mesh().n_elements() {
        let eb = space.element_basis(e);
        let jac = eb.map.det.abs();
        for ((p, w), phi) in table.points.iter().zip(&table.weights).zip(&table.values) {
            f(eb.map.to_physical(*p), &mut val);
            for (c, vc) in val.iter().enumerate() {
                let d = eb.scale * field.combine(e, c, phi) - vc;
                total += w * jac * d * d;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(TriMesh::uniform(n).unwrap())
    }

    fn value_at(field: &FieldVec, x: Point) -> Vec<f64> {
        let m = field.space().mesh();
        for e in 0..m.n_elements() {
            let r = field.space().element_basis(e).map.to_reference(x);
            if r[0] >= -1e-12 && r[1] >= -1e-12 && r[0] + r[1] <= 1.0 + 1e-12 {
                return field.evaluate(e, r).unwrap();
            }
        }
        panic!("point outside mesh");
    }

    #[test]
    fn layout() {
        let v = DgSpace::vector(mesh(2), 2).unwrap();
        assert_eq!(v.dofs_per_element(), 12);
        assert_eq!(v.n_dofs(), 8 * 12);
        assert_eq!(v.dof(1, 1, 2), 12 + 6 + 2);
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let s = DgSpace::vector(mesh(3), 2).unwrap();
        let f = |x: Point| [x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5, 3.0 * x[1] * x[1] + x[0]];
        let p = project_vector(&s, f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let v = value_at(&p, x);
            let e = f(x);
            assert!((v[0] - e[0]).abs() < 1e-10 && (v[1] - e[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_on_p0_gives_sqrt_area() {
        let s = DgSpace::scalar(mesh(4), 0).unwrap();
        let p = project_scalar(&s, |_| 1.0).unwrap();
        for (e, c) in p.coeffs().iter().enumerate() {
            assert!((c - s.mesh().area(e).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn evaluate_cases() {
        let s = DgSpace::scalar(mesh(2), 1).unwrap();
        assert_eq!(s.zeros().evaluate(3, [0.2, 0.2]).unwrap(), vec![0.0]);
        let c = project_scalar(&s, |_| 2.5).unwrap();
        assert!((c.evaluate(5, [0.1, 0.7]).unwrap()[0] - 2.5).abs() < 1e-12);
        let lin = project_scalar(&s, |x| x[0] + 2.0 * x[1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            assert!((value_at(&lin, x)[0] - x[0] - 2.0 * x[1]).abs() < 1e-10);
        }
        assert!(matches!(lin.evaluate(8, [0.1, 0.1]), Err(Error::InvalidElement(8))));
    }

    #[test]
    fn projection_rate_is_two() {
        let f = |x: Point| (PI * x[0]).sin() * (PI * x[1]).cos();
        let err = |n: usize| {
            let s = DgSpace::scalar(mesh(n), 1).unwrap();
            let p = project_scalar(&s, f).unwrap();
            l2_distance_squared(&p, 8, |x, o| o[0] = f(x)).unwrap().sqrt()
        };
        let ratio = err(4) / err(8);
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn means() {
        let s = DgSpace::scalar(mesh(4), 1).unwrap();
        assert_eq!(s.zeros().mean_value().unwrap(), 0.0);
        assert!((project_scalar(&s, |_| 1.0).unwrap().mean_value().unwrap() - 1.0).abs() < 1e-14);
        assert!(project_scalar(&s, |x| x[0] - 0.5).unwrap().mean_value().unwrap().abs() < 1e-12);
        let v = DgSpace::vector(mesh(2), 1).unwrap();
        assert!(matches!(v.zeros().mean_value(), Err(Error::NotScalar)));
    }

    #[test]
    fn remove_mean_cases() {
        let s = DgSpace::scalar(mesh(4), 2).unwrap();
        let odd = project_scalar(&s, |x| x[1] - 0.5).unwrap();
        let r = odd.remove_mean().unwrap();
        for (a, b) in r.coeffs().iter().zip(odd.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        let one = project_scalar(&s, |_| 1.0).unwrap().remove_mean().unwrap();
        assert!(one.l2_norm() < 1e-13);
        let x = project_scalar(&s, |x| x[0]).unwrap().remove_mean().unwrap();
        assert!(x.mean_value().unwrap().abs() < 1e-12);
        let d = l2_distance_squared(&x, 6, |p, o| o[0] = p[0] - 0.5).unwrap();
        assert!(d.sqrt() < 1e-12);
    }

    #[test]
    fn mass_matrix_is_identity() {
        let s = DgSpace::vector(mesh(3), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = s.field(c.clone()).unwrap();
        let sq = l2_distance_squared(&f, 6, |_, o| o.fill(0.0)).unwrap();
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        assert!((sq - norm2).abs() < 1e-10 * norm2);
    }

    #[test]
    fn projection_is_idempotent() {
        let s = DgSpace::scalar(mesh(3), 2).unwrap();
        let f = |x: Point| (3.0 * x[0]).exp() * x[1];
        let p = project_scalar(&s, f).unwrap();
        let again = project_scalar(&s, |x| value_at(&p, x)[0]).unwrap();
        for (a, b) in p.coeffs().iter().zip(again.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn components_round_trip() {
        let m = mesh(2);
        let v = DgSpace::vector(m.clone(), 1).unwrap();
        let s = DgSpace::scalar(m, 1).unwrap();
        let f = project_vector(&v, |x| [x[0], -x[1] * x[0]]).unwrap();
        let (a, b) = (f.component(0, &s).unwrap(), f.component(1, &s).unwrap());
        let back = FieldVec::from_components(&v, &[a.coeffs(), b.coeffs()]).unwrap();
        assert_eq!(back.coeffs(), f.coeffs());
    }

    #[test]
    fn csv_export() {
        let s = DgSpace::vector(mesh(1), 1).unwrap();
        let csv = s.zeros().to_csv().unwrap();
        assert!(csv.starts_with("element,x,y,v0,v1\n"));
        assert!(csv.lines().count() > 2);
    }
}
