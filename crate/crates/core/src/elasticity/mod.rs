//! Plane linear elasticity with P1 elements.
//!
//! Solves `−div σ(u) = f` with `σ = λ div(u) I + 2μ E(u)` on the sample
//! rectangle. The compression problem clamps the bottom edge, pushes the top
//! edge down by `c_D` and leaves the sides traction-loaded (traction-free by
//! default). Dirichlet rows are eliminated with their exact values, which is
//! the same as solving for `ũ = u − Φ` with the lift `Φ(x) = (0, −c_D·x₂/l₂)`.

mod assembly;
mod material;
mod moduli;
mod solver;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use assembly::{assemble_stiffness, element_parts, element_stiffness, ElementMatrix, SymmetricMatrix};
pub use material::{MaterialField, RegionLabels};
pub use moduli::{lame_from_moduli, moduli_from_lame, ElasticModuli, LamePair};
pub use solver::{relative_tolerance, LinearSolver, RELATIVE_TOLERANCE};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::scalar::{Real, Vec2};
use solver::{conjugate_gradient, CholeskyBackend, ReducedPattern};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition<T> {
    /// Bottom clamped, top displaced by `(0, −c_D)`, sides carry the traction.
    Compression { compression: T },
    /// `u = A·x + b` on every boundary node.
    Affine { matrix: [[T; 2]; 2], offset: Vec2<T> },
}

/// Which nodes carry Dirichlet data; determines the reduced sparsity pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletSet {
    TopBottom,
    AllBoundary,
}

impl<T> BoundaryCondition<T> {
    pub fn dirichlet_set(&self) -> DirichletSet {
        match self {
            BoundaryCondition::Compression { .. } => DirichletSet::TopBottom,
            BoundaryCondition::Affine { .. } => DirichletSet::AllBoundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityBvp<T> {
    pub boundary: BoundaryCondition<T>,
    /// Constant body force (kPa/mm).
    pub body_force: Vec2<T>,
    /// Constant traction on the left and right edges (kPa).
    pub side_traction: Vec2<T>,
}

impl<T: Real> ElasticityBvp<T> {
    pub fn compression(compression: T) -> Result<Self> {
        if !(compression >= T::zero()) || !compression.is_finite() {
            return Err(Error::InvalidInput(format!("compression must be nonnegative, got {compression}")));
        }
        Ok(ElasticityBvp {
            boundary: BoundaryCondition::Compression { compression },
            body_force: [T::zero(); 2],
            side_traction: [T::zero(); 2],
        })
    }

    pub fn affine(matrix: [[T; 2]; 2], offset: Vec2<T>) -> Self {
        ElasticityBvp {
            boundary: BoundaryCondition::Affine { matrix, offset },
            body_force: [T::zero(); 2],
            side_traction: [T::zero(); 2],
        }
    }

    /// The lift `Φ` whose boundary trace is the Dirichlet data.
    pub fn homogenization(&self, mesh: &Mesh<T>, x: Vec2<T>) -> Vec2<T> {
        match self.boundary {
            BoundaryCondition::Compression { compression } => [T::zero(), -compression * x[1] / mesh.extent()[1]],
            BoundaryCondition::Affine { matrix, offset } => [
                matrix[0][0] * x[0] + matrix[0][1] * x[1] + offset[0],
                matrix[1][0] * x[0] + matrix[1][1] * x[1] + offset[1],
            ],
        }
    }

    fn dirichlet_value(&self, mesh: &Mesh<T>, node: usize) -> Vec2<T> {
        let x = mesh.nodes()[node];
        match self.boundary {
            // Exact boundary values rather than Φ(x), so top nodes get −c_D bit-exactly.
            BoundaryCondition::Compression { compression } => match mesh.boundary_tags()[node] {
                BoundaryTag::Top => [T::zero(), -compression],
                _ => [T::zero(), T::zero()],
            },
            BoundaryCondition::Affine { .. } => self.homogenization(mesh, x),
        }
    }

    fn has_side_traction(&self) -> bool {
        matches!(self.boundary, BoundaryCondition::Compression { .. })
            && (self.side_traction[0] != T::zero() || self.side_traction[1] != T::zero())
    }
}

/// Nodal displacement vectors (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField<T> {
    values: Vec<Vec2<T>>,
}

impl<T: Real> DisplacementField<T> {
    pub fn new(values: Vec<Vec2<T>>) -> Self {
        DisplacementField { values }
    }

    pub fn zeros(mesh: &Mesh<T>) -> Self {
        DisplacementField { values: vec![[T::zero(); 2]; mesh.node_count()] }
    }

    pub fn values(&self) -> &[Vec2<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }

    pub fn negated(&self) -> Self {
        DisplacementField { values: self.values.iter().map(|v| [-v[0], -v[1]]).collect() }
    }

    /// Writes `x1,x2,u1,u2` rows.
    pub fn write_csv<W: Write>(&self, mesh: &Mesh<T>, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,u1,u2")?;
        for (p, u) in mesh.nodes().iter().zip(&self.values) {
            writeln!(out, "{},{},{},{}", p[0], p[1], u[0], u[1])?;
        }
        Ok(())
    }
}

/// P1 interpolation of `u` at `p`; `Error::Outside` beyond the sample.
pub fn evaluate_displacement<T: Real>(u: &DisplacementField<T>, mesh: &Mesh<T>, p: Vec2<T>) -> Result<Vec2<T>> {
    let hit = mesh.locate_point(p).ok_or(Error::Outside)?;
    let tri = mesh.triangles()[hit.triangle];
    let mut out = [T::zero(); 2];
    for (k, &n) in tri.iter().enumerate() {
        let w = hit.weights[k];
        if w != T::zero() {
            out[0] = out[0] + w * u.values[n][0];
            out[1] = out[1] + w * u.values[n][1];
        }
    }
    Ok(out)
}

/// Reusable solver for one mesh and Dirichlet node set.
pub struct ElasticitySolver {
    pattern: ReducedPattern,
    dirichlet: DirichletSet,
    method: LinearSolver,
    cholesky: Option<CholeskyBackend>,
    nodes: usize,
    triangles: usize,
}

impl std::fmt::Debug for ElasticitySolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ElasticitySolver")
            .field("free_dofs", &self.pattern.n)
            .field("dirichlet", &self.dirichlet)
            .field("method", &self.method)
            .finish()
    }
}

impl ElasticitySolver {
    pub fn new<T: Real>(mesh: &Mesh<T>, dirichlet: DirichletSet, method: LinearSolver) -> Result<Self> {
        let tags = mesh.boundary_tags();
        let pattern = match dirichlet {
            DirichletSet::TopBottom => ReducedPattern::new(mesh, |n| tags[n].is_dirichlet())?,
            DirichletSet::AllBoundary => ReducedPattern::new(mesh, |n| tags[n].is_boundary())?,
        };
        let cholesky = match method {
            LinearSolver::Cholesky => Some(CholeskyBackend::new(&pattern)?),
            LinearSolver::ConjugateGradient => None,
        };
        Ok(ElasticitySolver {
            pattern,
            dirichlet,
            method,
            cholesky,
            nodes: mesh.node_count(),
            triangles: mesh.triangle_count(),
        })
    }

    pub fn free_dofs(&self) -> usize {
        self.pattern.n
    }

    fn check<T: Real>(&self, mesh: &Mesh<T>, mat: &MaterialField<T>, bvp: &ElasticityBvp<T>) -> Result<()> {
        if mesh.node_count() != self.nodes || mesh.triangle_count() != self.triangles {
            return Err(Error::DimensionMismatch("solver was built for a different mesh".into()));
        }
        if mat.regions().labels().len() != mesh.triangle_count() {
            return Err(Error::DimensionMismatch(format!(
                "material has {} labels, mesh has {} triangles",
                mat.regions().labels().len(),
                mesh.triangle_count()
            )));
        }
        if bvp.boundary.dirichlet_set() != self.dirichlet {
            return Err(Error::InvalidInput("boundary condition does not match the solver's Dirichlet set".into()));
        }
        Ok(())
    }

    /// Lower-triangle values of the reduced matrix and the reduced right-hand side.
    fn assemble<T: Real>(
        &self,
        mesh: &Mesh<T>,
        mat: &MaterialField<T>,
        bvp: &ElasticityBvp<T>,
        boundary_values: &[Vec2<T>],
    ) -> (Vec<T>, Vec<T>) {
        let pattern = &self.pattern;
        let mut values = vec![T::zero(); pattern.row_idx.len()];
        let mut rhs = vec![T::zero(); pattern.n];
        let third = T::lit(1.0 / 3.0);
        let has_body_force = bvp.body_force[0] != T::zero() || bvp.body_force[1] != T::zero();

        for (t, &tri) in mesh.triangles().iter().enumerate() {
            let ke = element_stiffness(mesh, mat, t);
            let dofs = assembly::local_dofs(tri);
            let scatter = pattern.scatter_of(t);
            for a in 0..6 {
                let Some(row) = pattern.free[dofs[a]] else { continue };
                for b in 0..6 {
                    let pos = scatter[6 * a + b];
                    if ReducedPattern::is_stored(pos) {
                        values[pos as usize] = values[pos as usize] + ke[a][b];
                    } else if pattern.free[dofs[b]].is_none() {
                        let g = boundary_values[tri[b / 2]][b % 2];
                        if g != T::zero() {
                            rhs[row] = rhs[row] - ke[a][b] * g;
                        }
                    }
                }
                if has_body_force {
                    rhs[row] = rhs[row] + bvp.body_force[a % 2] * mesh.signed_area(t) * third;
                }
            }
        }

        if bvp.has_side_traction() {
            let (nx, ny) = (mesh.nx(), mesh.ny());
            let hy = mesh.spacing()[1];
            let half = hy * T::lit(0.5);
            for i in [0, nx] {
                for j in 0..ny {
                    for node in [mesh.node_index(i, j), mesh.node_index(i, j + 1)] {
                        for c in 0..2 {
                            if let Some(row) = pattern.free[2 * node + c] {
                                rhs[row] = rhs[row] + bvp.side_traction[c] * half;
                            }
                        }
                    }
                }
            }
        }
        (values, rhs)
    }

    /// Dirichlet-reduced stiffness matrix, mainly for inspection.
    pub fn reduced_matrix<T: Real>(&self, mesh: &Mesh<T>, mat: &MaterialField<T>, bvp: &ElasticityBvp<T>) -> Result<SymmetricMatrix<T>> {
        self.check(mesh, mat, bvp)?;
        let boundary = self.boundary_values(mesh, bvp);
        let (values, _) = self.assemble(mesh, mat, bvp, &boundary);
        Ok(self.pattern.to_symmetric(&values))
    }

    fn boundary_values<T: Real>(&self, mesh: &Mesh<T>, bvp: &ElasticityBvp<T>) -> Vec<Vec2<T>> {
        (0..mesh.node_count())
            .map(|n| if self.pattern.free[2 * n].is_none() { bvp.dirichlet_value(mesh, n) } else { [T::zero(); 2] })
            .collect()
    }

    pub fn solve<T: Real>(&self, mesh: &Mesh<T>, mat: &MaterialField<T>, bvp: &ElasticityBvp<T>) -> Result<DisplacementField<T>> {
        self.check(mesh, mat, bvp)?;
        let boundary = self.boundary_values(mesh, bvp);
        let (values, rhs) = self.assemble(mesh, mat, bvp, &boundary);

        let reduced = if rhs.iter().all(|v| *v == T::zero()) {
            vec![T::zero(); self.pattern.n]
        } else {
            match (&self.method, &self.cholesky) {
                (LinearSolver::Cholesky, Some(chol)) => chol.solve(&self.pattern, &values, &rhs)?,
                _ => conjugate_gradient(&self.pattern, &values, &rhs)?,
            }
        };

        let mut out = boundary;
        for (node, u) in out.iter_mut().enumerate() {
            if let (Some(r0), Some(r1)) = (self.pattern.free[2 * node], self.pattern.free[2 * node + 1]) {
                *u = [reduced[r0], reduced[r1]];
            }
        }
        let field = DisplacementField { values: out };
        if !field.is_finite() {
            return Err(Error::SolverNonConvergence { residual: f64::NAN, iterations: 0 });
        }
        Ok(field)
    }
}

/// One-shot solve; builds a fresh [`ElasticitySolver`].
pub fn solve_displacement<T: Real>(mesh: &Mesh<T>, mat: &MaterialField<T>, bvp: &ElasticityBvp<T>) -> Result<DisplacementField<T>> {
    ElasticitySolver::new(mesh, bvp.boundary.dirichlet_set(), LinearSolver::Cholesky)?.solve(mesh, mat, bvp)
}
