//! Linear algebra for the Dirichlet-reduced system.
//!
//! The reduced matrix is stored as the lower triangle in CSC form. Its
//! sparsity pattern depends only on the mesh and on which nodes carry
//! Dirichlet data, so the pattern, the element scatter map and the symbolic
//! Cholesky factorization are built once and reused for every material.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};
use serde::{Deserialize, Serialize};

use crate::elasticity::assembly::{local_dofs, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

pub const RELATIVE_TOLERANCE: f64 = 1e-10;
const SKIP: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    /// Sparse Cholesky with a fill-reducing ordering.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradient.
    ConjugateGradient,
}

/// Fixed sparsity structure of the reduced system.
#[derive(Debug)]
pub(crate) struct ReducedPattern {
    /// Global dof → reduced index, `None` for Dirichlet dofs.
    pub free: Vec<Option<usize>>,
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    /// Per triangle, 36 value positions (row-major local pairs); `SKIP` when not stored.
    scatter: Vec<u32>,
    diag_pos: Vec<usize>,
}

impl ReducedPattern {
    pub fn new<T: Real>(mesh: &Mesh<T>, fixed_node: impl Fn(usize) -> bool) -> Result<Self> {
        let mut free = vec![None; 2 * mesh.node_count()];
        let mut n = 0;
        for node in 0..mesh.node_count() {
            if !fixed_node(node) {
                free[2 * node] = Some(n);
                free[2 * node + 1] = Some(n + 1);
                n += 2;
            }
        }
        if n == 0 {
            return Err(Error::InvalidInput("every node carries Dirichlet data".into()));
        }

        let mut entries: Vec<(usize, usize)> = Vec::with_capacity(21 * mesh.triangle_count());
        for &tri in mesh.triangles() {
            let dofs = local_dofs(tri);
            for a in 0..6 {
                for b in 0..6 {
                    if let (Some(r), Some(c)) = (free[dofs[a]], free[dofs[b]]) {
                        if r >= c {
                            entries.push((c, r));
                        }
                    }
                }
            }
        }
        entries.sort_unstable();
        entries.dedup();
        if entries.len() >= SKIP as usize {
            return Err(Error::InvalidMesh("reduced system too large for 32-bit scatter map".into()));
        }

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        for &(c, r) in &entries {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }

        let position = |r: usize, c: usize| -> usize {
            let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            col_ptr[c] + rows.binary_search(&r).expect("entry present in pattern")
        };

        let mut scatter = Vec::with_capacity(36 * mesh.triangle_count());
        for &tri in mesh.triangles() {
            let dofs = local_dofs(tri);
            for a in 0..6 {
                for b in 0..6 {
                    let pos = match (free[dofs[a]], free[dofs[b]]) {
                        (Some(r), Some(c)) if r >= c => position(r, c) as u32,
                        _ => SKIP,
                    };
                    scatter.push(pos);
                }
            }
        }
        let diag_pos = (0..n).map(|i| position(i, i)).collect();

        Ok(ReducedPattern { free, n, col_ptr, row_idx, scatter, diag_pos })
    }

    #[inline]
    pub fn scatter_of(&self, t: usize) -> &[u32] {
        &self.scatter[36 * t..36 * t + 36]
    }

    #[inline]
    pub fn is_stored(pos: u32) -> bool {
        pos != SKIP
    }

    pub fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }

    /// `y = K x` using the stored lower triangle.
    pub fn sym_matvec<T: Real>(&self, values: &[T], x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                y[r] = y[r] + values[k] * x[c];
                if r != c {
                    y[c] = y[c] + values[k] * x[r];
                }
            }
        }
        y
    }

    pub fn to_symmetric<T: Real>(&self, values: &[T]) -> SymmetricMatrix<T> {
        let mut triplets = Vec::with_capacity(2 * values.len());
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                triplets.push((r, c, values[k]));
                if r != c {
                    triplets.push((c, r, values[k]));
                }
            }
        }
        SymmetricMatrix::from_triplets(self.n, triplets)
    }
}

/// `RELATIVE_TOLERANCE`, relaxed to `1000·ε` for types that cannot reach it.
pub fn relative_tolerance<T: Real>() -> T {
    T::lit(RELATIVE_TOLERANCE).max(T::epsilon() * T::lit(1000.0))
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

fn residual<T: Real>(pattern: &ReducedPattern, values: &[T], x: &[T], b: &[T]) -> Vec<T> {
    let kx = pattern.sym_matvec(values, x);
    kx.iter().zip(b).map(|(&a, &c)| a - c).collect()
}

pub(crate) struct CholeskyBackend {
    symbolic: SymbolicLlt<usize>,
}

impl CholeskyBackend {
    pub fn new(pattern: &ReducedPattern) -> Result<Self> {
        let symbolic = SymbolicLlt::try_new(pattern.symbolic(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("symbolic analysis failed: {e:?}")))?;
        Ok(CholeskyBackend { symbolic })
    }

    /// Factorizes and solves, with one step of iterative refinement if the
    /// first solve misses the relative residual target.
    pub fn solve<T: Real>(&self, pattern: &ReducedPattern, values: &[T], rhs: &[T]) -> Result<Vec<T>> {
        let mat = SparseColMatRef::new(pattern.symbolic(), values);
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::Factorization(format!("reduced stiffness is not positive definite: {e}")))?;
        let b_norm = norm(rhs);
        let mut x = rhs.to_vec();
        llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, pattern.n, 1));
        let tol = relative_tolerance::<T>();
        for refinement in 0..=1 {
            let r = residual(pattern, values, &x, rhs);
            let rel = norm(&r) / b_norm;
            if rel <= tol {
                break;
            }
            if refinement == 1 {
                return Err(Error::SolverNonConvergence { residual: rel.as_f64(), iterations: 1 });
            }
            let mut d = r;
            llt.solve_in_place(MatMut::from_column_major_slice_mut(&mut d, pattern.n, 1));
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi = *xi - *di;
            }
        }
        Ok(x)
    }
}

/// Jacobi-preconditioned CG to relative residual `RELATIVE_TOLERANCE`, at most `10·n` iterations.
pub(crate) fn conjugate_gradient<T: Real>(pattern: &ReducedPattern, values: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = pattern.n;
    let inv_diag: Vec<T> = pattern.diag_pos.iter().map(|&p| T::one() / values[p]).collect();
    let b_norm = norm(rhs);
    let tol = relative_tolerance::<T>() * b_norm;
    let mut x = vec![T::zero(); n];
    let mut r = rhs.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&a, &d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&z).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    let max_iter = 10 * n;
    for it in 0..max_iter {
        if norm(&r) <= tol {
            return Ok(x);
        }
        let q = pattern.sym_matvec(values, &p);
        let pq = p.iter().zip(&q).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        if !(pq > T::zero()) {
            return Err(Error::SolverNonConvergence { residual: (norm(&r) / b_norm).as_f64(), iterations: it });
        }
        let step = rz / pq;
        for i in 0..n {
            x[i] = x[i] + step * p[i];
            r[i] = r[i] - step * q[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = r.iter().zip(&z).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / b_norm;
    if rel <= relative_tolerance::<T>() {
        Ok(x)
    } else {
        Err(Error::SolverNonConvergence { residual: rel.as_f64(), iterations: max_iter })
    }
}
