//! Uniform right-triangle discretization of the rectangular sample.
//!
//! Every pixel cell `(i, j)` is split along its lower-left to upper-right
//! diagonal into two counter-clockwise triangles:
//!
//! ```text
//!  ul ---- ur
//!   | T1  / |
//!   |   /   |
//!   | /  T0 |
//!  ll ---- lr
//! ```
//!
//! `T0 = (ll, lr, ur)` has index `2·(j·nx + i)`, `T1 = (ll, ur, ul)` the next
//! one. Nodes are numbered row-major from the bottom-left corner.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Barycentric tolerance for point location.
pub const LOCATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// `x2 = 0`, clamped.
    Bottom,
    /// `x2 = lx2`, prescribed compression.
    Top,
    /// `x1 ∈ {0, lx1}` without the corners, traction boundary.
    LeftRight,
    Interior,
}

impl BoundaryTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryTag::Bottom | BoundaryTag::Top)
    }

    pub fn is_boundary(self) -> bool {
        !matches!(self, BoundaryTag::Interior)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nx: usize,
    ny: usize,
    lx1: T,
    lx2: T,
    nodes: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<BoundaryTag>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricHit<T> {
    pub triangle: usize,
    pub weights: [T; 3],
}

impl<T: Real> BarycentricHit<T> {
    /// Interpolates nodal values of the containing triangle.
    pub fn interpolate<V>(&self, mesh: &Mesh<T>, values: &[V]) -> V
    where
        V: Copy + std::ops::Mul<T, Output = V> + std::ops::Add<Output = V>,
    {
        let tri = mesh.triangles[self.triangle];
        values[tri[0]] * self.weights[0] + values[tri[1]] * self.weights[1] + values[tri[2]] * self.weights[2]
    }
}

/// Builds the `nx × ny` cell mesh of `[0, lx1] × [0, lx2]`.
pub fn build_uniform_mesh<T: Real>(nx: usize, ny: usize, lx1: T, lx2: T) -> Result<Mesh<T>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!("cell counts must be positive, got {nx}×{ny}")));
    }
    if !(lx1 > T::zero() && lx2 > T::zero()) || !lx1.is_finite() || !lx2.is_finite() {
        return Err(Error::InvalidMesh(format!("side lengths must be positive, got {lx1}×{lx2}")));
    }
    let hx = lx1 / T::from_usize_lossy(nx);
    let hy = lx2 / T::from_usize_lossy(ny);

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut tags = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // Pin the far edges to the exact side length instead of nx·hx.
        let y = if j == ny { lx2 } else { T::from_usize_lossy(j) * hy };
        for i in 0..=nx {
            let x = if i == nx { lx1 } else { T::from_usize_lossy(i) * hx };
            nodes.push([x, y]);
            let tag = if j == 0 {
                BoundaryTag::Bottom
            } else if j == ny {
                BoundaryTag::Top
            } else if i == 0 || i == nx {
                BoundaryTag::LeftRight
            } else {
                BoundaryTag::Interior
            };
            tags.push(tag);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let ll = j * (nx + 1) + i;
            let lr = ll + 1;
            let ul = ll + nx + 1;
            let ur = ul + 1;
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }

    Ok(Mesh { nx, ny, lx1, lx2, nodes, triangles, tags })
}

impl<T: Real> Mesh<T> {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn extent(&self) -> Vec2<T> {
        [self.lx1, self.lx2]
    }

    /// Cell sizes `(hx, hy)`.
    pub fn spacing(&self) -> Vec2<T> {
        [self.lx1 / T::from_usize_lossy(self.nx), self.lx2 / T::from_usize_lossy(self.ny)]
    }

    pub fn nodes(&self) -> &[Vec2<T>] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Twice the signed area of triangle `t`.
    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::lit(0.5)
    }

    pub fn centroid(&self, t: usize) -> Vec2<T> {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        let third = T::lit(1.0 / 3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    pub fn area(&self) -> T {
        self.lx1 * self.lx2
    }

    /// Finds the triangle containing `p` in O(1) using the grid structure.
    ///
    /// Points on shared edges resolve to the lowest triangle index. Returns
    /// `None` when `p` lies outside the closed rectangle by more than
    /// [`LOCATE_TOL`].
    pub fn locate_point(&self, p: Vec2<T>) -> Option<BarycentricHit<T>> {
        let tol = T::lit(LOCATE_TOL);
        let [x, y] = p;
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        if x < -tol || y < -tol || x > self.lx1 + tol || y > self.lx2 + tol {
            return None;
        }
        let [hx, hy] = self.spacing();
        let fx = x / hx;
        let fy = y / hy;
        // ceil − 1 sends points on a grid line to the lower-indexed cell.
        let i = cell_index(fx, self.nx);
        let j = cell_index(fy, self.ny);
        let s = clamp01(fx - T::from_usize_lossy(i));
        let t = clamp01(fy - T::from_usize_lossy(j));
        let cell = j * self.nx + i;
        let one = T::one();
        if t <= s {
            Some(BarycentricHit { triangle: 2 * cell, weights: [one - s, s - t, t] })
        } else {
            Some(BarycentricHit { triangle: 2 * cell + 1, weights: [one - t, s, t - s] })
        }
    }

    /// Writes `x1,x2` node rows followed by `n0,n1,n2` triangle rows to two CSV streams.
    pub fn write_csv<W: Write>(&self, nodes_out: &mut W, triangles_out: &mut W) -> std::io::Result<()> {
        writeln!(nodes_out, "x1,x2,tag")?;
        for (p, tag) in self.nodes.iter().zip(&self.tags) {
            writeln!(nodes_out, "{},{},{:?}", p[0], p[1], tag)?;
        }
        writeln!(triangles_out, "n0,n1,n2")?;
        for t in &self.triangles {
            writeln!(triangles_out, "{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn cell_index<T: Real>(f: T, n: usize) -> usize {
    let c = f.ceil() - T::one();
    if c <= T::zero() {
        0
    } else {
        c.to_usize().unwrap_or(n - 1).min(n - 1)
    }
}

fn clamp01<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}
