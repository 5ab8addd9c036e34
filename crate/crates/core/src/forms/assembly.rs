use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::{Point, TriMesh};
use crate::space::{DgSpace, FaceQuad, FaceTable, FieldVec, VolumeTable};

/// Physical quadrature data of one element: weights include `|det J|`,
/// values and gradients include the orthonormalizing scale.
#[derive(Debug, Clone)]
pub struct ElementQuad {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

/// Precomputed volume and face quadrature for one space. Forms that couple
/// two spaces need contexts built with the same exactness so their face
/// points coincide.
#[derive(Debug, Clone)]
pub struct FormContext {
    space: Arc<DgSpace>,
    exactness: usize,
    elements: Vec<ElementQuad>,
    faces: FaceTable,
}

impl FormContext {
    pub fn new(space: &Arc<DgSpace>, exactness: usize) -> Result<Self> {
        let table = VolumeTable::new(space.basis(), exactness)?;
        let elements = (0..space.mesh().n_elements())
            .map(|e| {
                let eb = space.element_basis(e);
                let jac = eb.map.det.abs();
                ElementQuad {
                    points: table.points.iter().map(|p| eb.map.to_physical(*p)).collect(),
                    weights: table.weights.iter().map(|w| w * jac).collect(),
                    values: table.values.iter().map(|v| v.iter().map(|x| x * eb.scale).collect()).collect(),
                    grads: table
                        .grads
                        .iter()
                        .map(|g| {
                            g.iter()
                                .map(|gi| {
                                    let p = eb.map.grad_to_physical(*gi);
                                    [p[0] * eb.scale, p[1] * eb.scale]
                                })
                                .collect()
                        })
                        .collect(),
                }
            })
            .collect();
        let faces = FaceTable::new(space, exactness)?;
        Ok(Self { space: Arc::clone(space), exactness, elements, faces })
    }

    /// Context with the default form exactness of the space.
    pub fn for_space(space: &Arc<DgSpace>) -> Result<Self> {
        Self::new(space, space.form_exactness())
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn mesh(&self) -> &TriMesh {
        self.space.mesh()
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn element(&self, e: usize) -> &ElementQuad {
        &self.elements[e]
    }

    pub fn face(&self, f: usize) -> &FaceQuad {
        &self.faces.faces[f]
    }

    pub fn n_basis(&self) -> usize {
        self.space.n_basis()
    }

    /// Number of scalar dofs (one component).
    pub fn n_scalar(&self) -> usize {
        self.mesh().n_elements() * self.n_basis()
    }

    pub(crate) fn check_field(&self, field: &FieldVec) -> Result<()> {
        let s = field.space();
        if s.same_mesh(&self.space) && s.degree() == self.space.degree() && s.n_components() == self.space.n_components()
        {
            Ok(())
        } else {
            Err(Error::SpaceMismatch("field does not live on the form's space".into()))
        }
    }

    pub(crate) fn check_pair(&self, other: &FormContext) -> Result<()> {
        if !self.space.same_mesh(&other.space) {
            return Err(Error::SpaceMismatch("spaces on different meshes".into()));
        }
        if self.exactness != other.exactness {
            return Err(Error::SpaceMismatch("contexts built with different quadrature".into()));
        }
        Ok(())
    }
}

/// Jump weight of side `s`: `+1` on the first side and on boundary faces,
/// `-1` on the second side.
#[inline]
pub(crate) fn jump_sign(n_sides: usize, s: usize) -> f64 {
    if n_sides == 2 && s == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Average weight: one half on interior faces, one on the boundary.
#[inline]
pub(crate) fn avg_weight(n_sides: usize) -> f64 {
    if n_sides == 2 {
        0.5
    } else {
        1.0
    }
}

/// Value of component `c` of `field` at a point where the scaled basis
/// values of element `e` are `values`.
#[inline]
pub(crate) fn value_at(field: &FieldVec, e: usize, c: usize, values: &[f64]) -> f64 {
    let base = field.space().dof(e, c, 0);
    values.iter().zip(&field.coeffs()[base..base + values.len()]).map(|(v, x)| v * x).sum()
}

#[inline]
pub(crate) fn grad_at(field: &FieldVec, e: usize, c: usize, grads: &[[f64; 2]]) -> [f64; 2] {
    let base = field.space().dof(e, c, 0);
    grads
        .iter()
        .zip(&field.coeffs()[base..base + grads.len()])
        .fold([0.0, 0.0], |acc, (g, x)| [acc[0] + x * g[0], acc[1] + x * g[1]])
}

/// Dense element blocks on the element-plus-face-neighbours pattern. Every
/// block is stored even when it stays zero, so all operators built here on
/// the same mesh share one sparsity pattern.
pub(crate) struct BlockBuilder {
    rows_per_block: usize,
    cols_per_block: usize,
    n_col_blocks: usize,
    block_cols: Vec<Vec<usize>>,
    block_start: Vec<usize>,
    data: Vec<f64>,
}

impl BlockBuilder {
    pub(crate) fn neighbours(mesh: &TriMesh, rows_per_block: usize, cols_per_block: usize) -> Self {
        let block_cols: Vec<Vec<usize>> = (0..mesh.n_elements())
            .map(|e| {
                let mut cols: Vec<usize> = std::iter::once(e)
                    .chain(mesh.element_faces(e).iter().filter_map(|lf| {
                        let f = &mesh.faces()[lf.face];
                        f.k2.map(|k2| if k2 == e { f.k1 } else { k2 })
                    }))
                    .collect();
                cols.sort_unstable();
                cols.dedup();
                cols
            })
            .collect();
        let mut block_start = Vec::with_capacity(block_cols.len() + 1);
        let mut acc = 0;
        for c in &block_cols {
            block_start.push(acc);
            acc += c.len();
        }
        block_start.push(acc);
        Self {
            rows_per_block,
            cols_per_block,
            n_col_blocks: mesh.n_elements(),
            block_cols,
            block_start,
            data: vec![0.0; acc * rows_per_block * cols_per_block],
        }
    }

    /// Row-major block `(row element, col element)`.
    #[inline]
    pub(crate) fn block(&mut self, re: usize, ce: usize) -> &mut [f64] {
        let k = self.block_cols[re].binary_search(&ce).expect("block outside the neighbour pattern");
        let size = self.rows_per_block * self.cols_per_block;
        let start = (self.block_start[re] + k) * size;
        &mut self.data[start..start + size]
    }

    pub(crate) fn cols_per_block(&self) -> usize {
        self.cols_per_block
    }

    pub(crate) fn into_matrix(self) -> SparseMatrix {
        let (rb, cb) = (self.rows_per_block, self.cols_per_block);
        let n_rows = self.block_cols.len() * rb;
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let nnz = self.data.len();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (re, cols) in self.block_cols.iter().enumerate() {
            for i in 0..rb {
                for (k, &ce) in cols.iter().enumerate() {
                    let start = (self.block_start[re] + k) * rb * cb + i * cb;
                    col_idx.extend((0..cb).map(|j| ce * cb + j));
                    values.extend_from_slice(&self.data[start..start + cb]);
                }
                row_ptr.push(col_idx.len());
            }
        }
        SparseMatrix::from_raw_parts(n_rows, self.n_col_blocks * cb, row_ptr, col_idx, values)
            .expect("block pattern is sorted by construction")
    }
}
