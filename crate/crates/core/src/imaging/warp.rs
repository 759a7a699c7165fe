//! Image deformation through a mesh displacement.
//!
//! Both modes work in pixel-index coordinates `q = x / h − ½`, in which pixel
//! centres sit on the integer lattice. Coordinates within [`SNAP`] of an
//! integer are snapped onto it so that lattice-preserving deformations
//! reproduce pixel values exactly.

use serde::{Deserialize, Serialize};

use crate::elasticity::DisplacementField;
use crate::error::{Error, Result};
use crate::imaging::image::ScalarImage;
use crate::mesh::{BarycentricHit, Mesh, LOCATE_TOL};
use crate::scalar::{Real, Vec2};

/// Lattice snapping tolerance in pixel units.
pub const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpMode {
    /// Moves the image with the material: the source is a P1 function on the
    /// pixel-centre lattice whose nodes are displaced by `u`, then resampled.
    PushForward,
    /// Pulls the source back: output at `x` is `source(x + u(x))`.
    Composition,
}

/// Barycentric coordinates of every pixel centre of an image grid within a mesh.
#[derive(Debug, Clone)]
pub struct PixelProbes<T> {
    width: usize,
    height: usize,
    extent: Vec2<T>,
    hits: Vec<BarycentricHit<T>>,
}

impl<T: Real> PixelProbes<T> {
    pub fn new(mesh: &Mesh<T>, width: usize, height: usize) -> Result<Self> {
        let grid = ScalarImage::filled(width, height, mesh.extent(), T::zero())?;
        let mut hits = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                hits.push(mesh.locate_point(grid.pixel_center(i, j)).ok_or(Error::Outside)?);
            }
        }
        Ok(PixelProbes { width, height, extent: mesh.extent(), hits })
    }

    pub fn matches(&self, img: &ScalarImage<T>) -> bool {
        img.width() == self.width && img.height() == self.height && img.extent() == self.extent
    }

    /// `u` at every pixel centre, row-major.
    pub fn displacements(&self, mesh: &Mesh<T>, u: &DisplacementField<T>) -> Result<Vec<Vec2<T>>> {
        if u.len() != mesh.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} displacement values for {} nodes",
                u.len(),
                mesh.node_count()
            )));
        }
        let values = u.values();
        Ok(self
            .hits
            .iter()
            .map(|hit| {
                let tri = mesh.triangles()[hit.triangle];
                let mut d = [T::zero(); 2];
                for (k, &n) in tri.iter().enumerate() {
                    let w = hit.weights[k];
                    d[0] = d[0] + w * values[n][0];
                    d[1] = d[1] + w * values[n][1];
                }
                d
            })
            .collect())
    }
}

/// Splits a lattice coordinate into a base index and fraction, clamped to `[0, n − 1]`.
#[inline]
fn split<T: Real>(f: T, n: usize) -> (usize, T) {
    let snap = T::lit(SNAP);
    let top = T::from_usize_lossy(n - 1);
    let f = f.max(T::zero()).min(top);
    let base = f.floor();
    let mut frac = f - base;
    let mut i = base.to_usize().unwrap_or(0);
    if frac < snap {
        frac = T::zero();
    } else if frac > T::one() - snap {
        frac = T::zero();
        i += 1;
    }
    if i >= n - 1 {
        (n - 1, T::zero())
    } else {
        (i, frac)
    }
}

/// Whether `y` lies in the closed image frame `[0, lx1] × [0, lx2]`, up to [`LOCATE_TOL`].
#[inline]
pub fn in_frame<T: Real>(extent: Vec2<T>, y: Vec2<T>) -> bool {
    let tol = T::lit(LOCATE_TOL);
    y[0] >= -tol && y[1] >= -tol && y[0] <= extent[0] + tol && y[1] <= extent[1] + tol
}

/// Bilinear sample at physical point `y`, constant extrapolation between the
/// outermost pixel centres and the frame, `fill` outside the frame.
#[inline]
pub fn sample_bilinear<T: Real>(src: &ScalarImage<T>, y: Vec2<T>, fill: T) -> T {
    if !in_frame(src.extent(), y) {
        return fill;
    }
    let [hx, hy] = src.pixel_size();
    let half = T::lit(0.5);
    let (i, a) = split(y[0] / hx - half, src.width());
    let (j, b) = split(y[1] / hy - half, src.height());
    let v00 = src.get(i, j);
    if a == T::zero() && b == T::zero() {
        return v00;
    }
    let i1 = (i + 1).min(src.width() - 1);
    let j1 = (j + 1).min(src.height() - 1);
    let one = T::one();
    (one - a) * (one - b) * v00 + a * (one - b) * src.get(i1, j) + (one - a) * b * src.get(i, j1) + a * b * src.get(i1, j1)
}

/// `out(x) = source(x + d(x))` with `d` given at pixel centres.
pub fn compose_into<T: Real>(source: &ScalarImage<T>, disp: &[Vec2<T>], fill: T, out: &mut [T]) -> Result<()> {
    let (w, h) = (source.width(), source.height());
    if disp.len() != w * h || out.len() != w * h {
        return Err(Error::DimensionMismatch("displacement samples do not match the image grid".into()));
    }
    for j in 0..h {
        for i in 0..w {
            let k = j * w + i;
            let x = source.pixel_center(i, j);
            out[k] = sample_bilinear(source, [x[0] + disp[k][0], x[1] + disp[k][1]], fill);
        }
    }
    Ok(())
}

pub fn compose<T: Real>(source: &ScalarImage<T>, disp: &[Vec2<T>], fill: T) -> Result<ScalarImage<T>> {
    let mut out = source.clone();
    compose_into(source, disp, fill, out.values_mut())?;
    Ok(out)
}

/// Forward-moves the pixel-centre lattice by `d` and resamples onto the
/// original lattice. Each pixel takes the value from the lowest-indexed
/// deformed lattice triangle containing it; uncovered pixels get `fill`.
pub fn push_forward<T: Real>(source: &ScalarImage<T>, disp: &[Vec2<T>], fill: T) -> Result<ScalarImage<T>> {
    let (w, h) = (source.width(), source.height());
    if disp.len() != w * h {
        return Err(Error::DimensionMismatch("displacement samples do not match the image grid".into()));
    }
    let [hx, hy] = source.pixel_size();
    let pos: Vec<Vec2<T>> = (0..w * h)
        .map(|k| {
            let (i, j) = (k % w, k / w);
            let q = [
                T::from_usize_lossy(i) + disp[k][0] / hx,
                T::from_usize_lossy(j) + disp[k][1] / hy,
            ];
            q.map(|c| {
                let r = c.round();
                if (c - r).abs() < T::lit(SNAP) { r } else { c }
            })
        })
        .collect();
    let vals = source.values();
    let mut out = vec![fill; w * h];
    let mut done = vec![false; w * h];
    if w == 1 || h == 1 {
        // degenerate lattice: only exact node hits
        for (k, p) in pos.iter().enumerate() {
            if p[0] >= T::zero() && p[1] >= T::zero() {
                let (i, j) = (p[0].to_usize().unwrap_or(usize::MAX), p[1].to_usize().unwrap_or(usize::MAX));
                if i < w && j < h && T::from_usize_lossy(i) == p[0] && T::from_usize_lossy(j) == p[1] && !done[j * w + i] {
                    out[j * w + i] = vals[k];
                    done[j * w + i] = true;
                }
            }
        }
        return ScalarImage::new(w, h, source.extent(), out);
    }

    let tol = T::lit(SNAP);
    let one = T::one();
    let wmax = T::from_usize_lossy(w - 1);
    let hmax = T::from_usize_lossy(h - 1);
    let mut raster = |tri: [usize; 3]| {
        let [a, b, c] = tri.map(|n| pos[n]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if det.abs() < T::lit(1e-14) {
            return;
        }
        let lo_x = a[0].min(b[0]).min(c[0]) - tol;
        let hi_x = a[0].max(b[0]).max(c[0]) + tol;
        let lo_y = a[1].min(b[1]).min(c[1]) - tol;
        let hi_y = a[1].max(b[1]).max(c[1]) + tol;
        if hi_x < T::zero() || hi_y < T::zero() || lo_x > wmax || lo_y > hmax {
            return;
        }
        let i0 = lo_x.max(T::zero()).ceil().to_usize().unwrap_or(0);
        let i1 = hi_x.min(wmax).floor().to_usize().unwrap_or(0);
        let j0 = lo_y.max(T::zero()).ceil().to_usize().unwrap_or(0);
        let j1 = hi_y.min(hmax).floor().to_usize().unwrap_or(0);
        for pj in j0..=j1 {
            for pi in i0..=i1 {
                let k = pj * w + pi;
                if done[k] {
                    continue;
                }
                let p = [T::from_usize_lossy(pi), T::from_usize_lossy(pj)];
                let w1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
                let w2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
                let w0 = one - w1 - w2;
                if w0 < -tol || w1 < -tol || w2 < -tol {
                    continue;
                }
                let weights = [w0, w1, w2];
                out[k] = match weights.iter().position(|&x| x > one - tol) {
                    Some(v) => vals[tri[v]],
                    None => w0 * vals[tri[0]] + w1 * vals[tri[1]] + w2 * vals[tri[2]],
                };
                done[k] = true;
            }
        }
    };
    for j in 0..h - 1 {
        for i in 0..w - 1 {
            let ll = j * w + i;
            let (lr, ul, ur) = (ll + 1, ll + w, ll + w + 1);
            raster([ll, lr, ur]);
            raster([ll, ur, ul]);
        }
    }
    ScalarImage::new(w, h, source.extent(), out)
}

/// Warps `source` through the mesh displacement `u`.
pub fn warp_image<T: Real>(
    source: &ScalarImage<T>,
    u: &DisplacementField<T>,
    mesh: &Mesh<T>,
    mode: WarpMode,
    fill: T,
) -> Result<ScalarImage<T>> {
    if source.extent() != mesh.extent() {
        return Err(Error::DimensionMismatch("image extent differs from the mesh extent".into()));
    }
    let probes = PixelProbes::new(mesh, source.width(), source.height())?;
    let disp = probes.displacements(mesh, u)?;
    match mode {
        WarpMode::PushForward => push_forward(source, &disp, fill),
        WarpMode::Composition => compose(source, &disp, fill),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;

    fn textured(w: usize, h: usize) -> ScalarImage<f64> {
        let values = (0..w * h).map(|k| ((k * 7919) % 101) as f64 / 100.0).collect();
        ScalarImage::new(w, h, [1.2, 0.7], values).unwrap()
    }

    #[test]
    fn split_snaps_and_clamps() {
        assert_eq!(split(2.0 + 1e-12, 5), (2, 0.0));
        assert_eq!(split(3.0 - 1e-12, 5), (3, 0.0));
        assert_eq!(split(-0.3, 5), (0, 0.0));
        assert_eq!(split(7.0, 5), (4, 0.0));
        let (i, a) = split(1.25, 5);
        assert_eq!(i, 1);
        assert!((a - 0.25f64).abs() < 1e-15);
    }

    #[test]
    fn bilinear_is_exact_on_affine_images() {
        let (w, h) = (6, 4);
        let values = (0..w * h).map(|k| 0.3 * (k % w) as f64 - 0.2 * (k / w) as f64).collect();
        let img = ScalarImage::new(w, h, [3.0, 2.0], values).unwrap();
        // pixel (i, j) centred at (0.5 i + 0.25, 0.5 j + 0.25)
        let v = sample_bilinear(&img, [1.0, 0.9], -1.0);
        let (qi, qj) = ((1.0 - 0.25) / 0.5, (0.9 - 0.25) / 0.5);
        assert!((v - (0.3 * qi - 0.2 * qj)).abs() < 1e-12);
        assert_eq!(sample_bilinear(&img, [3.1, 1.0], -1.0), -1.0);
        assert_eq!(sample_bilinear(&img, [2.95, 1.95], -1.0), img.get(5, 3));
    }

    #[test]
    fn identity_in_both_modes() {
        let img = textured(12, 7);
        let mesh = build_uniform_mesh(12, 7, 1.2, 0.7).unwrap();
        let u = DisplacementField::zeros(&mesh);
        for mode in [WarpMode::PushForward, WarpMode::Composition] {
            let out = warp_image(&img, &u, &mesh, mode, 0.0).unwrap();
            assert_eq!(out, img);
        }
    }

    #[test]
    fn extent_mismatch_rejected() {
        let img = textured(12, 7);
        let mesh = build_uniform_mesh(12, 7, 1.0, 0.7).unwrap();
        let u = DisplacementField::zeros(&mesh);
        assert!(warp_image(&img, &u, &mesh, WarpMode::Composition, 0.0).is_err());
    }

    #[test]
    fn push_forward_inverts_composition_for_translations() {
        let img = ScalarImage::new(10, 8, [1.0, 0.8], textured(10, 8).into_values()).unwrap();
        let shift = [0.0, -0.2];
        let disp = vec![shift; 80];
        let moved = push_forward(&img, &disp, 0.0).unwrap();
        let restored = compose(&moved, &disp, 0.0).unwrap();
        for i in 0..10 {
            assert_eq!(moved.get(i, 5), img.get(i, 7));
            assert_eq!(moved.get(i, 6), 0.0);
            assert_eq!(restored.get(i, 1), 0.0);
        }
        for j in 2..8 {
            for i in 0..10 {
                assert_eq!(restored.get(i, j), img.get(i, j));
            }
        }
    }
}
