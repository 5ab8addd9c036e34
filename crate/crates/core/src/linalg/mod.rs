//! Sparse storage and linear solvers.
//!
//! Direct solves go through faer's sparse LU (fill-reducing column ordering,
//! partial pivoting). faer is built without its rayon feature, so
//! factorizations run sequentially and are bitwise reproducible. A
//! Jacobi-preconditioned restarted GMRES is kept for cross-checks and for
//! solves that need a user-provided initial iterate.

mod sparse;

use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Mat;

pub use sparse::SparseMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative { iterations: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// `‖Ax − b‖₂ / max(‖b‖₂, 1)`
    pub residual: f64,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        match self.method {
            SolveMethod::Direct => 0,
            SolveMethod::Iterative { iterations } => iterations,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    norm(&r) / norm(b).max(1.0)
}

fn check_square(a: &SparseMatrix, b_len: usize) -> Result<()> {
    if a.n_rows() != a.n_cols() || a.n_rows() != b_len {
        return Err(Error::Dimension(format!("{}x{} system with rhs {b_len}", a.n_rows(), a.n_cols())));
    }
    Ok(())
}

/// Reuses the symbolic analysis across matrices with an identical pattern.
#[derive(Default)]
pub struct LuSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

/// A numeric LU factorization together with the matrix it came from.
pub struct LuFactor {
    lu: Lu<usize, f64>,
    matrix: SparseMatrix,
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&mut self, a: &SparseMatrix) -> Result<LuFactor> {
        check_square(a, a.n_rows())?;
        // the CSR arrays of Aᵀ are the CSC arrays of A
        let t = a.transpose();
        let reuse = matches!(&self.cached, Some((p, c, _)) if p == t.row_ptr() && c == t.col_idx());
        if !reuse {
            let sym = SymbolicSparseColMat::new_checked(
                a.n_rows(),
                a.n_cols(),
                t.row_ptr().to_vec(),
                None,
                t.col_idx().to_vec(),
            );
            let symbolic = SymbolicLu::try_new(sym.as_ref())
                .map_err(|e| Error::Singular(format!("symbolic analysis failed: {e:?}")))?;
            self.cached = Some((t.row_ptr().to_vec(), t.col_idx().to_vec(), symbolic));
        }
        let (col_ptr, row_idx, symbolic) = self.cached.as_ref().expect("cached above");
        let sym = SymbolicSparseColMat::new_checked(a.n_rows(), a.n_cols(), col_ptr.clone(), None, row_idx.clone());
        let mat = SparseColMatRef::new(sym.as_ref(), t.values());
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), mat)
            .map_err(|e| Error::Singular(format!("LU factorization failed: {e:?}")))?;
        Ok(LuFactor { lu, matrix: a.clone() })
    }
}

impl LuFactor {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n_rows()
    }

    /// Solves for several right-hand sides at once, without refinement.
    pub fn solve_raw(&self, rhs: &[&[f64]]) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        self.lu.solve_in_place(m.as_mut());
        (0..rhs.len()).map(|j| (0..n).map(|i| m[(i, j)]).collect()).collect()
    }

    /// Solve with up to three steps of iterative refinement.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        let start = Instant::now();
        check_square(&self.matrix, b.len())?;
        let mut x = self.solve_raw(&[b]).pop().expect("one column");
        let mut res = relative_residual(&self.matrix, &x, b);
        for _ in 0..3 {
            if res <= tol || !res.is_finite() {
                break;
            }
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = self.solve_raw(&[&r]).pop().expect("one column");
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            res = relative_residual(&self.matrix, &x, b);
        }
        if !res.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite solution (numerically singular matrix)".into()));
        }
        if res > tol {
            return Err(Error::Singular(format!("residual {res:e} above tolerance {tol:e} after refinement")));
        }
        Ok((x, SolveReport { method: SolveMethod::Direct, residual: res, wall_time: start.elapsed() }))
    }
}

/// Direct sparse solve of a general square system.
pub fn solve_general(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b.len())?;
    LuSolver::new().factor(a)?.solve(b, tol)
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, restart: 60, max_iterations: 5000 }
    }
}

/// Restarted GMRES with right Jacobi preconditioning.
pub fn gmres(a: &SparseMatrix, b: &[f64], x0: Option<&[f64]>, opts: GmresOptions) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    check_square(a, b.len())?;
    let n = b.len();
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d.abs() > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let scale = norm(b).max(1.0);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if x.len() != n {
        return Err(Error::Dimension("initial iterate".into()));
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta / scale <= opts.tol {
            return Ok((
                x,
                SolveReport {
                    method: SolveMethod::Iterative { iterations: total },
                    residual: beta / scale,
                    wall_time: start.elapsed(),
                },
            ));
        }
        if total >= opts.max_iterations {
            return Err(Error::NotConverged { iterations: total, residual: beta / scale });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total += 1;
            k_used = k + 1;
            let z: Vec<f64> = v[k].iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
            let mut w = a.mul_vec(&z);
            for (j, vj) in v.iter().enumerate() {
                let hij: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hij;
                w.iter_mut().zip(vj).for_each(|(a, b)| *a -= hij * b);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            if g[k + 1].abs() / scale <= opts.tol || hn == 0.0 || total >= opts.max_iterations {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = ((i + 1)..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, (vi, d)) in x.iter_mut().zip(v[j].iter().zip(&inv_diag)) {
                *xi += yj * vi * d;
            }
        }
    }
}

/// Solver for `A x = b` restricted to `m(x) = 0`, where `A` is singular
/// with its null space spanned by `m` (the constants). The solution equals
/// that of the bordered system `[[A, m], [mᵀ, 0]]`, but a dense border
/// destroys the sparsity of the factors, so one unknown with `m_k ≠ 0` is
/// pinned to zero instead and the mean is removed afterwards.
pub struct ZeroMeanSolver {
    factor: LuFactor,
    matrix: SparseMatrix,
    mean: Vec<f64>,
    pinned: usize,
}

impl ZeroMeanSolver {
    /// `mean` holds the coefficients of the mean functional; for the
    /// orthonormal basis these coincide with the coefficients of the constant
    /// function 1.
    pub fn new(a: &SparseMatrix, mean: &[f64]) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n || mean.len() != n || n == 0 {
            return Err(Error::Dimension("zero-mean system".into()));
        }
        let pinned = (0..n).max_by(|&i, &j| mean[i].abs().total_cmp(&mean[j].abs())).expect("n > 0");
        if mean[pinned] == 0.0 {
            return Err(Error::Dimension("mean functional is zero".into()));
        }
        let t = a
            .triplets()
            .into_iter()
            .filter(|&(i, j, _)| i != pinned && j != pinned)
            .chain(std::iter::once((pinned, pinned, 1.0)))
            .collect();
        let reduced = SparseMatrix::from_triplets(n, n, t)?;
        let factor = LuSolver::new().factor(&reduced)?;
        Ok(Self { factor, matrix: a.clone(), mean: mean.to_vec(), pinned })
    }

    pub fn solve(&self, rhs: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        let start = Instant::now();
        let n = self.mean.len();
        if rhs.len() != n {
            return Err(Error::Dimension("rhs".into()));
        }
        // ⟨rhs, 1⟩ must vanish for A x = rhs to be solvable
        let m2: f64 = self.mean.iter().map(|v| v * v).sum();
        let component = rhs.iter().zip(&self.mean).map(|(a, b)| a * b).sum::<f64>() / m2.sqrt();
        let limit = 1e-6 * norm(rhs).max(f64::MIN_POSITIVE);
        if component.abs() > limit && component.abs() > 1e-13 {
            return Err(Error::IncompatibleRhs { component: component.abs(), limit });
        }
        let mut b = rhs.to_vec();
        b[self.pinned] = 0.0;
        let remove_mean = |x: &mut Vec<f64>| {
            let shift = x.iter().zip(&self.mean).map(|(a, b)| a * b).sum::<f64>() / m2;
            x.iter_mut().zip(&self.mean).for_each(|(v, m)| *v -= shift * m);
        };
        let (mut x, _) = self.factor.solve(&b, tol)?;
        remove_mean(&mut x);
        let mut residual = relative_residual(&self.matrix, &x, rhs);
        for _ in 0..2 {
            if residual <= 0.1 * tol {
                break;
            }
            let ax = self.matrix.mul_vec(&x);
            let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(p, q)| p - q).collect();
            r[self.pinned] = 0.0;
            let dx = self.factor.solve_raw(&[&r]).pop().expect("one column");
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            remove_mean(&mut x);
            residual = relative_residual(&self.matrix, &x, rhs);
        }
        // the admitted constant component of rhs cannot be matched
        if !(residual <= tol + component.abs() / norm(rhs).max(1.0)) {
            return Err(Error::Singular(format!("zero-mean residual {residual:e} above tolerance {tol:e}")));
        }
        Ok((x, SolveReport { method: SolveMethod::Direct, residual, wall_time: start.elapsed() }))
    }
}

pub fn solve_zero_mean(a: &SparseMatrix, rhs: &[f64], mean: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    ZeroMeanSolver::new(a, mean)?.solve(rhs, tol)
}
