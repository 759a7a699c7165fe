use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elasticity::RegionLabels;
use crate::error::{Error, Result};
use crate::imaging::filter::gaussian_blur;
use crate::imaging::image::ScalarImage;
use crate::mesh::Mesh;
use crate::scalar::{Real, Vec2};

const SINGLE_PRESET: &str = include_str!("../../presets/single.toml");
const FOUR_PRESET: &str = include_str!("../../presets/four.toml");

/// Axis-aligned ellipse in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipse<T> {
    pub center: Vec2<T>,
    pub semi_axes: Vec2<T>,
}

impl<T: Real> Ellipse<T> {
    pub fn contains(&self, p: Vec2<T>) -> bool {
        let dx = (p[0] - self.center[0]) / self.semi_axes[0];
        let dy = (p[1] - self.center[1]) / self.semi_axes[1];
        dx * dx + dy * dy <= T::one()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inclusion<T> {
    /// Material region, `1..=K`; region 0 is the background.
    pub region: usize,
    #[serde(flatten)]
    pub shape: Ellipse<T>,
    pub brightness: T,
}

/// Multiplicative speckle `·(1 + amplitude·ξ)` with `ξ` smoothed uniform noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeckleSpec<T> {
    pub amplitude: T,
    /// Gaussian correlation length of `ξ` in pixels.
    pub correlation_length: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec<T> {
    pub background_value: T,
    pub inclusions: Vec<Inclusion<T>>,
    /// Acquisition blur in pixels.
    pub blur_sigma: T,
    pub speckle: SpeckleSpec<T>,
    pub seed: u64,
}

impl PhantomSpec<f64> {
    /// Shipped geometries: `single` and `four`.
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "single" | "single-inclusion" => SINGLE_PRESET,
            "four" | "four-inclusion" => FOUR_PRESET,
            other => return Err(Error::Config(format!("unknown phantom preset {other:?} (expected single or four)"))),
        };
        toml::from_str(text).map_err(|e| Error::Config(format!("preset {name}: {e}")))
    }

    pub fn cast<T: Real>(&self) -> PhantomSpec<T> {
        let c = |x: f64| T::lit(x);
        PhantomSpec {
            background_value: c(self.background_value),
            inclusions: self
                .inclusions
                .iter()
                .map(|inc| Inclusion {
                    region: inc.region,
                    shape: Ellipse { center: inc.shape.center.map(c), semi_axes: inc.shape.semi_axes.map(c) },
                    brightness: c(inc.brightness),
                })
                .collect(),
            blur_sigma: c(self.blur_sigma),
            speckle: SpeckleSpec {
                amplitude: c(self.speckle.amplitude),
                correlation_length: c(self.speckle.correlation_length),
            },
            seed: self.seed,
        }
    }
}

impl<T: Real> PhantomSpec<T> {
    /// Number of material regions including the background.
    pub fn region_count(&self) -> usize {
        self.inclusions.len() + 1
    }

    pub fn validate(&self, extent: Vec2<T>) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !unit(self.background_value) {
            return Err(Error::InvalidPhantom(format!("background value {} outside [0, 1]", self.background_value)));
        }
        if !(self.blur_sigma >= T::zero()) {
            return Err(Error::InvalidPhantom("blur sigma must be non-negative".into()));
        }
        if !(self.speckle.amplitude >= T::zero() && self.speckle.correlation_length > T::zero()) {
            return Err(Error::InvalidPhantom("speckle needs amplitude ≥ 0 and correlation length > 0".into()));
        }
        let mut seen = vec![false; self.inclusions.len()];
        for inc in &self.inclusions {
            let k = inc.region;
            if k == 0 || k > self.inclusions.len() || seen[k - 1] {
                return Err(Error::InvalidPhantom(format!(
                    "inclusion regions must be a permutation of 1..={}, got {k}",
                    self.inclusions.len()
                )));
            }
            seen[k - 1] = true;
            if !unit(inc.brightness) {
                return Err(Error::InvalidPhantom(format!("region {k} brightness {} outside [0, 1]", inc.brightness)));
            }
            let Ellipse { center, semi_axes } = inc.shape;
            for d in 0..2 {
                if !(semi_axes[d] > T::zero()) {
                    return Err(Error::InvalidPhantom(format!("region {k} has a non-positive semi-axis")));
                }
                if center[d] - semi_axes[d] < T::zero() || center[d] + semi_axes[d] > extent[d] {
                    return Err(Error::InvalidPhantom(format!("region {k} leaves the sample rectangle")));
                }
            }
        }
        Ok(())
    }

    /// Region containing `p`; errors when two inclusions claim it.
    fn region_at(&self, p: Vec2<T>) -> Result<usize> {
        let mut hit = 0;
        for inc in &self.inclusions {
            if inc.shape.contains(p) {
                if hit != 0 {
                    return Err(Error::InvalidPhantom(format!(
                        "inclusions {hit} and {} overlap at ({}, {})",
                        inc.region, p[0], p[1]
                    )));
                }
                hit = inc.region;
            }
        }
        Ok(hit)
    }
}

/// Synthesizes the reference image on the mesh's pixel grid together with
/// the per-triangle region map (labelled by centroid membership).
pub fn generate_phantom<T: Real>(spec: &PhantomSpec<T>, mesh: &Mesh<T>) -> Result<(ScalarImage<T>, Arc<RegionLabels<T>>)> {
    let extent = mesh.extent();
    spec.validate(extent)?;
    let (w, h) = (mesh.nx(), mesh.ny());

    let mut brightness = vec![spec.background_value; spec.region_count()];
    for inc in &spec.inclusions {
        brightness[inc.region] = inc.brightness;
    }
    let mut img = ScalarImage::filled(w, h, extent, spec.background_value)?;
    let mut values = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            values.push(brightness[spec.region_at(img.pixel_center(i, j))?]);
        }
    }

    let labels =
        (0..mesh.triangle_count()).map(|t| spec.region_at(mesh.centroid(t))).collect::<Result<Vec<_>>>()?;
    let regions = Arc::new(RegionLabels::new(mesh, labels)?);

    let mut values = gaussian_blur(&values, w, h, spec.blur_sigma);
    if spec.speckle.amplitude > T::zero() {
        let xi = speckle_field(w, h, spec.speckle.correlation_length, spec.seed);
        for (v, x) in values.iter_mut().zip(xi) {
            *v = (*v * (T::one() + spec.speckle.amplitude * x)).max(T::zero()).min(T::one());
        }
    }
    img.values_mut().copy_from_slice(&values);
    img.rescale_unit()?;
    Ok((img, regions))
}

/// Smoothed uniform noise, renormalized to zero mean and the standard
/// deviation `1/√3` of the uniform law on `[−1, 1]`.
fn speckle_field<T: Real>(w: usize, h: usize, correlation: T, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<T> = (0..w * h).map(|_| T::lit(rng.random_range(-1.0..=1.0))).collect();
    let mut xi = gaussian_blur(&raw, w, h, correlation);
    let n = T::from_usize_lossy(xi.len());
    let mean = xi.iter().copied().sum::<T>() / n;
    let var = xi.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let scale = if var > T::zero() { T::one() / (T::lit(3.0) * var).sqrt() } else { T::zero() };
    for x in &mut xi {
        *x = (*x - mean) * scale;
    }
    xi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;

    fn small_mesh() -> Mesh<f64> {
        build_uniform_mesh(68, 29, 6.8, 2.9).unwrap()
    }

    #[test]
    fn presets_parse_and_validate() {
        for name in ["single", "four"] {
            let spec = PhantomSpec::preset(name).unwrap();
            spec.validate([6.8, 2.9]).unwrap();
        }
        assert_eq!(PhantomSpec::preset("single").unwrap().region_count(), 2);
        assert_eq!(PhantomSpec::preset("four").unwrap().region_count(), 5);
        assert!(PhantomSpec::preset("three").is_err());
    }

    #[test]
    fn unit_range_and_partition() {
        let mesh = small_mesh();
        let spec = PhantomSpec::preset("four").unwrap();
        let (img, regions) = generate_phantom(&spec, &mesh).unwrap();
        assert_eq!(img.min_max(), (0.0, 1.0));
        assert_eq!(regions.region_count(), 5);
        let total: f64 = regions.areas().iter().sum();
        assert!((total - 6.8 * 2.9).abs() < 1e-12);
    }

    #[test]
    fn inclusions_are_brighter_on_average() {
        let mesh = small_mesh();
        let spec = PhantomSpec::preset("single").unwrap();
        let (img, _) = generate_phantom(&spec, &mesh).unwrap();
        let mut inside = (0.0, 0);
        let mut outside = (0.0, 0);
        for j in 0..img.height() {
            for i in 0..img.width() {
                let acc = if spec.inclusions[0].shape.contains(img.pixel_center(i, j)) { &mut inside } else { &mut outside };
                acc.0 += img.get(i, j);
                acc.1 += 1;
            }
        }
        assert!(inside.0 / inside.1 as f64 > 2.0 * outside.0 / outside.1 as f64);
    }

    #[test]
    fn rejects_overlap_and_escape() {
        let mesh = small_mesh();
        let mut spec = PhantomSpec::preset("four").unwrap();
        spec.inclusions[2].shape.center = spec.inclusions[0].shape.center;
        assert!(matches!(generate_phantom(&spec, &mesh), Err(Error::InvalidPhantom(_))));

        let mut spec = PhantomSpec::preset("single").unwrap();
        spec.inclusions[0].shape.center = [0.5, 1.5];
        assert!(spec.validate([6.8, 2.9]).is_err());

        let mut spec = PhantomSpec::preset("single").unwrap();
        spec.inclusions[0].region = 2;
        assert!(spec.validate([6.8, 2.9]).is_err());

        let mut spec = PhantomSpec::preset("single").unwrap();
        spec.inclusions[0].brightness = 1.5;
        assert!(spec.validate([6.8, 2.9]).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{SINGLE_PRESET}\nbogus = 1\n");
        assert!(toml::from_str::<PhantomSpec<f64>>(&text).is_err());
    }

    #[test]
    fn seed_controls_speckle() {
        let mesh = small_mesh();
        let spec = PhantomSpec::preset("single").unwrap();
        let a = generate_phantom(&spec, &mesh).unwrap().0;
        let b = generate_phantom(&spec, &mesh).unwrap().0;
        assert_eq!(a, b);
        let other = PhantomSpec { seed: 7, ..spec };
        assert_ne!(generate_phantom(&other, &mesh).unwrap().0, a);
    }

    #[test]
    fn speckle_field_is_normalized() {
        let xi: Vec<f64> = speckle_field(60, 40, 2.0, 3);
        let n = xi.len() as f64;
        let mean = xi.iter().sum::<f64>() / n;
        let var = xi.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f32_phantom() {
        let mesh = build_uniform_mesh::<f32>(68, 29, 6.8, 2.9).unwrap();
        let spec = PhantomSpec::preset("single").unwrap().cast::<f32>();
        let (img, _) = generate_phantom(&spec, &mesh).unwrap();
        assert_eq!(img.min_max(), (0.0, 1.0));
    }
}
