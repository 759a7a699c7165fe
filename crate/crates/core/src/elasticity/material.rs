use std::sync::Arc;

use crate::elasticity::moduli::LamePair;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

/// Per-triangle region labels `k ∈ 0..K` with the area of each region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLabels<T> {
    labels: Vec<usize>,
    areas: Vec<T>,
}

impl<T: Real> RegionLabels<T> {
    /// Labels must cover every triangle of `mesh`; every region `0..K` must be non-empty.
    pub fn new(mesh: &Mesh<T>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != mesh.triangle_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} triangles",
                labels.len(),
                mesh.triangle_count()
            )));
        }
        let count = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut areas = vec![T::zero(); count];
        for (t, &k) in labels.iter().enumerate() {
            areas[k] = areas[k] + mesh.signed_area(t);
        }
        if let Some(k) = areas.iter().position(|a| !(*a > T::zero())) {
            return Err(Error::InvalidMaterial(format!("region {k} has no triangles")));
        }
        Ok(RegionLabels { labels, areas })
    }

    /// Single region covering the whole mesh.
    pub fn homogeneous(mesh: &Mesh<T>) -> Self {
        RegionLabels { labels: vec![0; mesh.triangle_count()], areas: vec![mesh.area()] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn region_count(&self) -> usize {
        self.areas.len()
    }
}

/// Piecewise-constant Lamé field: one `(λ_k, μ_k)` per region.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField<T> {
    regions: Arc<RegionLabels<T>>,
    params: Vec<LamePair<T>>,
}

impl<T: Real> MaterialField<T> {
    pub fn new(regions: Arc<RegionLabels<T>>, params: Vec<LamePair<T>>) -> Result<Self> {
        if params.len() != regions.region_count() {
            return Err(Error::InvalidMaterial(format!(
                "{} parameter pairs for {} regions",
                params.len(),
                regions.region_count()
            )));
        }
        for (k, p) in params.iter().enumerate() {
            if !(p.mu > T::zero()) || !p.mu.is_finite() {
                return Err(Error::InvalidMaterial(format!("μ_{k} = {} must be positive", p.mu)));
            }
            if p.lambda < T::zero() || !p.lambda.is_finite() {
                return Err(Error::InvalidMaterial(format!("λ_{k} = {} must be nonnegative", p.lambda)));
            }
        }
        Ok(MaterialField { regions, params })
    }

    pub fn homogeneous(mesh: &Mesh<T>, pair: LamePair<T>) -> Result<Self> {
        Self::new(Arc::new(RegionLabels::homogeneous(mesh)), vec![pair])
    }

    pub fn regions(&self) -> &Arc<RegionLabels<T>> {
        &self.regions
    }

    pub fn params(&self) -> &[LamePair<T>] {
        &self.params
    }

    #[inline]
    pub fn triangle_params(&self, t: usize) -> LamePair<T> {
        self.params[self.regions.labels[t]]
    }

    /// Same regions, every pair multiplied by `s`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(self.regions.clone(), self.params.iter().map(|p| p.scaled(s)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;

    #[test]
    fn areas_partition_domain() {
        let mesh = build_uniform_mesh(10, 6, 6.8, 2.9).unwrap();
        let labels = (0..mesh.triangle_count()).map(|t| usize::from(mesh.centroid(t)[0] > 3.0)).collect();
        let regions = RegionLabels::new(&mesh, labels).unwrap();
        let total: f64 = regions.areas().iter().sum();
        assert!((total - 6.8 * 2.9).abs() <= 1e-10 * 6.8 * 2.9);
    }

    #[test]
    fn rejects_bad_labels_and_params() {
        let mesh = build_uniform_mesh(2, 2, 1.0, 1.0).unwrap();
        assert!(RegionLabels::new(&mesh, vec![0; 3]).is_err());
        // region 1 empty
        assert!(RegionLabels::new(&mesh, vec![0, 0, 2, 2, 0, 0, 0, 0]).is_err());
        let regions = Arc::new(RegionLabels::homogeneous(&mesh));
        assert!(MaterialField::new(regions.clone(), vec![LamePair::new(1.0, 0.0)]).is_err());
        assert!(MaterialField::new(regions.clone(), vec![LamePair::new(-1.0, 1.0)]).is_err());
        assert!(MaterialField::new(regions, vec![LamePair::new(1.0, 1.0); 2]).is_err());
    }
}
