//! Conforming triangulations of the unit square with face connectivity.
//!
//! Every face stores a single unit normal. Boundary normals point out of the
//! domain; an interior normal points from the lower-numbered adjacent element
//! (`k1`) to the higher-numbered one (`k2`). Elements never store their own
//! copy of a normal, so both sides of a face always agree on orientation.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary,
}

/// Which of the two elements adjacent to a face an element is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: [usize; 2],
    pub kind: FaceKind,
    pub k1: usize,
    pub k2: Option<usize>,
    pub normal: [f64; 2],
    /// Edge length `|F|`; in two dimensions this is also `h_F`.
    pub measure: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.kind == FaceKind::Boundary
    }

    pub fn h(&self) -> f64 {
        self.measure
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalFace {
    pub face: usize,
    pub side: Side,
}

/// The data needed to evaluate interior/exterior traces on a face.
#[derive(Debug, Clone, Copy)]
pub struct FaceTrace {
    pub k1: usize,
    /// `None` on the boundary, where the exterior trace is zero.
    pub k2: Option<usize>,
    pub normal: [f64; 2],
    pub measure: f64,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    faces: Vec<Face>,
    element_faces: Vec<[LocalFace; 3]>,
    h_max: f64,
}

impl TriMesh {
    /// Uniform mesh of the unit square: `n × n` cells, each cut along the
    /// `(0,0)–(1,1)` diagonal direction into two right triangles.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("mesh needs at least one cell per side".into()));
        }
        let nv = n + 1;
        let vertices = (0..nv)
            .flat_map(|j| (0..nv).map(move |i| [i as f64 / n as f64, j as f64 / n as f64]))
            .collect();
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * nv + i;
                let v10 = v00 + 1;
                let v01 = v00 + nv;
                let v11 = v01 + 1;
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }
        Self::from_parts(vertices, elements)
    }

    /// Builds connectivity for an arbitrary conforming triangulation.
    /// Elements must be counter-clockwise.
    pub fn from_parts(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self> {
        let mut faces: Vec<Face> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_faces = Vec::with_capacity(elements.len());
        let mut h_max: f64 = 0.0;

        for (e, tri) in elements.iter().enumerate() {
            let p = tri.map(|v| vertices[v]);
            let area = signed_area(&p);
            if area <= 1e-14 {
                return Err(Error::DegenerateElement { element: e, area });
            }
            let mut locals = [LocalFace { face: 0, side: Side::First }; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let (pa, pb) = (vertices[a], vertices[b]);
                let len = dist(pa, pb);
                h_max = h_max.max(len);
                match lookup.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.k2.is_some() {
                            return Err(Error::Config(format!(
                                "edge {key:?} shared by more than two elements"
                            )));
                        }
                        face.k2 = Some(e);
                        face.kind = FaceKind::Interior;
                        locals[k] = LocalFace { face: f, side: Side::Second };
                    }
                    None => {
                        let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
                        lookup.insert(key, faces.len());
                        locals[k] = LocalFace { face: faces.len(), side: Side::First };
                        faces.push(Face {
                            vertices: [a, b],
                            kind: FaceKind::Boundary,
                            k1: e,
                            k2: None,
                            normal,
                            measure: len,
                        });
                    }
                }
            }
            element_faces.push(locals);
        }

        Ok(Self { vertices, elements, faces, element_faces, h_max })
    }

    /// Same triangulation with elements renumbered: new element `i` is old
    /// element `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.elements.len() {
            return Err(Error::Dimension("permutation length".into()));
        }
        let elements = perm.iter().map(|&old| self.elements[old]).collect();
        Self::from_parts(self.vertices.clone(), elements)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn element_faces(&self, e: usize) -> &[LocalFace; 3] {
        &self.element_faces[e]
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        self.elements[e].map(|v| self.vertices[v])
    }

    pub fn area(&self, e: usize) -> f64 {
        signed_area(&self.element_points(e))
    }

    pub fn face_points(&self, f: usize) -> [Point; 2] {
        self.faces[f].vertices.map(|v| self.vertices[v])
    }

    pub fn face_trace_pair(&self, f: usize) -> Result<FaceTrace> {
        let face = self.faces.get(f).ok_or(Error::InvalidFace(f))?;
        Ok(FaceTrace { k1: face.k1, k2: face.k2, normal: face.normal, measure: face.measure })
    }

    /// Outward normal of element `e` on face `f` (`n_K = ±n_F`).
    pub fn outward_normal(&self, e: usize, f: usize) -> [f64; 2] {
        let face = &self.faces[f];
        if face.k1 == e {
            face.normal
        } else {
            [-face.normal[0], -face.normal[1]]
        }
    }

    /// Plain-text listing: `v <id> <x> <y>`, `e <id> <v0> <v1> <v2>`,
    /// `f <id> <v0> <v1> <k1> <k2|-1> <nx> <ny> <len>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "v {i} {} {}", p[0], p[1]);
        }
        for (i, t) in self.elements.iter().enumerate() {
            let _ = writeln!(out, "e {i} {} {} {}", t[0], t[1], t[2]);
        }
        for (i, f) in self.faces.iter().enumerate() {
            let k2 = f.k2.map_or(-1, |k| k as i64);
            let _ = writeln!(
                out,
                "f {i} {} {} {} {k2} {} {} {}",
                f.vertices[0], f.vertices[1], f.k1, f.normal[0], f.normal[1], f.measure
            );
        }
        out
    }
}

pub(crate) fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}
