//! P1 stiffness contributions of the bilinear form
//! `a(u, v) = ∫ λ div u div v + 2μ E(u):E(v)`.
//!
//! Local degrees of freedom are ordered `2·r + c` for vertex `r` and component `c`.

use crate::elasticity::material::MaterialField;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

pub type ElementMatrix<T> = [[T; 6]; 6];

/// The `λ` and `μ` parts of the element stiffness of triangle `t`, each for unit modulus.
pub fn element_parts<T: Real>(mesh: &Mesh<T>, t: usize) -> (ElementMatrix<T>, ElementMatrix<T>) {
    let [p0, p1, p2] = mesh.triangles()[t].map(|n| mesh.nodes()[n]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = det * T::lit(0.5);
    let grad = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    let mut k_lambda = [[T::zero(); 6]; 6];
    let mut k_mu = [[T::zero(); 6]; 6];
    for r in 0..3 {
        for s in 0..3 {
            let dot = grad[r][0] * grad[s][0] + grad[r][1] * grad[s][1];
            for a in 0..2 {
                for b in 0..2 {
                    k_lambda[2 * r + a][2 * s + b] = area * (grad[r][a] * grad[s][b]);
                    let diag = if a == b { dot } else { T::zero() };
                    k_mu[2 * r + a][2 * s + b] = area * (diag + grad[r][b] * grad[s][a]);
                }
            }
        }
    }
    (k_lambda, k_mu)
}

/// `λ·K_λ + μ·K_μ` for the material of triangle `t`.
#[inline]
pub fn element_stiffness<T: Real>(mesh: &Mesh<T>, mat: &MaterialField<T>, t: usize) -> ElementMatrix<T> {
    let (kl, km) = element_parts(mesh, t);
    let p = mat.triangle_params(t);
    let mut k = [[T::zero(); 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            k[a][b] = p.lambda * kl[a][b] + p.mu * km[a][b];
        }
    }
    k
}

#[inline]
pub(crate) fn local_dofs(tri: [usize; 3]) -> [usize; 6] {
    [2 * tri[0], 2 * tri[0] + 1, 2 * tri[1], 2 * tri[1] + 1, 2 * tri[2], 2 * tri[2] + 1]
}

/// Square sparse matrix in CSR form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SymmetricMatrix<T> {
    /// Sums duplicate entries in the order they appear in `triplets`.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                let end = values.len() - 1;
                values[end] = values[end] + v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1]).fold(T::zero(), |acc, k| acc + self.values[k] * x[self.col_idx[k]])
            })
            .collect()
    }

    /// Largest `|K_ij − K_ji|`.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                worst = worst.max((self.values[k] - self.get(self.col_idx[k], i)).abs());
            }
        }
        worst
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> T {
        (0..self.n)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).fold(T::zero(), |acc, k| acc + self.values[k].abs()))
            .fold(T::zero(), T::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.col_idx[k]] = self.values[k];
            }
        }
        dense
    }
}

/// Global stiffness matrix of size `2·nodes`, no boundary conditions applied.
pub fn assemble_stiffness<T: Real>(mesh: &Mesh<T>, mat: &MaterialField<T>) -> Result<SymmetricMatrix<T>> {
    if mat.regions().labels().len() != mesh.triangle_count() {
        return Err(Error::DimensionMismatch(format!(
            "material has {} labels, mesh has {} triangles",
            mat.regions().labels().len(),
            mesh.triangle_count()
        )));
    }
    let mut triplets = Vec::with_capacity(36 * mesh.triangle_count());
    for (t, &tri) in mesh.triangles().iter().enumerate() {
        let ke = element_stiffness(mesh, mat, t);
        let dofs = local_dofs(tri);
        for a in 0..6 {
            for b in 0..6 {
                triplets.push((dofs[a], dofs[b], ke[a][b]));
            }
        }
    }
    Ok(SymmetricMatrix::from_triplets(2 * mesh.node_count(), triplets))
}
