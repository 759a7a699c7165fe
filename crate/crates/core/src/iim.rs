//! The intensity-based data-misfit functional over piecewise-constant Lamé fields.
//!
//! `residual(a) = ‖I₂∘G(a) − I₁‖²` on the reference domain with the
//! pixel-midpoint rule, where `G(a)(x) = x + u(x; a)`; the objective adds
//! `α·Σ_k ((λ_k − λ₀_k)² + (μ_k − μ₀_k)²)·|D_k|` with the prior `a₀` zero
//! unless set.
//!
//! Pixels whose target `G(a)(x)` leaves the image frame carry no data. By
//! default they are left out of the sum ([`OutOfFrame::Exclude`]);
//! [`OutOfFrame::Fill`] compares them against the fill value instead.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elasticity::{
    DisplacementField, ElasticityBvp, ElasticitySolver, LamePair, LinearSolver, MaterialField, RegionLabels,
};
use crate::error::{Error, Result};
use crate::imaging::warp::{compose_into, in_frame, push_forward, sample_bilinear, PixelProbes};
use crate::imaging::ScalarImage;
use crate::mesh::Mesh;
use crate::scalar::{Real, Vec2};

/// Returned for parameter vectors outside the admissible box, in units of `max(‖I₁‖², 1)`.
pub const OUT_OF_BOUNDS_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InversionMode {
    /// Only the shear moduli are free; λ stays at given values.
    MuOnly,
    /// All `(λ_k, μ_k)` are free, interleaved per region.
    #[default]
    Full,
}

/// Treatment of pixels whose deformed position leaves the image frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutOfFrame {
    /// Skipped in the data term.
    #[default]
    Exclude,
    /// Compared against the fill intensity.
    Fill,
}

/// Componentwise box shared by every free parameter (kPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Bounds<T> {
    pub fn new(lower: T, upper: T) -> Result<Self> {
        if !(lower >= T::zero() && lower < upper && upper.is_finite()) {
            return Err(Error::InvalidInput(format!("bounds need 0 ≤ lower < upper < ∞, got [{lower}, {upper}]")));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Data term, penalty and their sum at one parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub residual: T,
    pub penalty: T,
    pub objective: T,
}

/// Relative L2 errors of a reconstruction, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeError<T> {
    pub lambda: T,
    pub mu: T,
    pub joint: T,
}

/// Everything needed to evaluate the functional; immutable after construction.
#[derive(Debug)]
pub struct IimContext<T> {
    mesh: Mesh<T>,
    regions: Arc<RegionLabels<T>>,
    reference: ScalarImage<T>,
    deformed: ScalarImage<T>,
    bvp: ElasticityBvp<T>,
    alpha: T,
    fixed_lambda: Option<Vec<T>>,
    bounds: Bounds<T>,
    prior: Option<Vec<LamePair<T>>>,
    fill: T,
    out_of_frame: OutOfFrame,
    solver: ElasticitySolver,
    probes: PixelProbes<T>,
    sentinel: T,
}

impl<T: Real> IimContext<T> {
    /// Context with `α = 0`, box `[10, 1000]`, no prior, fill 0 and all parameters free.
    pub fn new(
        mesh: Mesh<T>,
        regions: Arc<RegionLabels<T>>,
        reference: ScalarImage<T>,
        deformed: ScalarImage<T>,
        bvp: ElasticityBvp<T>,
    ) -> Result<Self> {
        if regions.labels().len() != mesh.triangle_count() {
            return Err(Error::DimensionMismatch("region map does not match the mesh".into()));
        }
        if !reference.same_grid(&deformed) {
            return Err(Error::DimensionMismatch("reference and deformed images differ in grid".into()));
        }
        if reference.extent() != mesh.extent() {
            return Err(Error::DimensionMismatch("image extent differs from the mesh extent".into()));
        }
        let solver = ElasticitySolver::new(&mesh, bvp.boundary.dirichlet_set(), LinearSolver::Cholesky)?;
        let probes = PixelProbes::new(&mesh, reference.width(), reference.height())?;
        let energy = reference.values().iter().fold(T::zero(), |acc, &v| acc + v * v) * reference.pixel_area();
        let sentinel = T::lit(OUT_OF_BOUNDS_FACTOR) * energy.max(T::one());
        Ok(IimContext {
            mesh,
            regions,
            reference,
            deformed,
            bvp,
            alpha: T::zero(),
            fixed_lambda: None,
            bounds: Bounds { lower: T::lit(10.0), upper: T::lit(1000.0) },
            prior: None,
            fill: T::zero(),
            out_of_frame: OutOfFrame::Exclude,
            solver,
            probes,
            sentinel,
        })
    }

    pub fn with_alpha(mut self, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be finite and non-negative, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_bounds(mut self, bounds: Bounds<T>) -> Result<Self> {
        self.bounds = Bounds::new(bounds.lower, bounds.upper)?;
        Ok(self)
    }

    /// Freezes `λ_k` at the given values and leaves only `μ_k` free.
    pub fn with_fixed_lambda(mut self, lambda: Vec<T>) -> Result<Self> {
        if lambda.len() != self.regions.region_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} frozen λ values for {} regions",
                lambda.len(),
                self.regions.region_count()
            )));
        }
        if lambda.iter().any(|l| !(*l >= T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidMaterial("frozen λ must be finite and non-negative".into()));
        }
        self.fixed_lambda = Some(lambda);
        Ok(self)
    }

    /// Penalty centre `a₀`; without it the penalty is `‖a‖²`.
    pub fn with_prior(mut self, prior: Vec<LamePair<T>>) -> Result<Self> {
        if prior.len() != self.regions.region_count() {
            return Err(Error::DimensionMismatch("prior must have one pair per region".into()));
        }
        self.prior = Some(prior);
        Ok(self)
    }

    pub fn with_fill(mut self, fill: T) -> Self {
        self.fill = fill;
        self
    }

    pub fn with_out_of_frame(mut self, policy: OutOfFrame) -> Self {
        self.out_of_frame = policy;
        self
    }

    pub fn out_of_frame(&self) -> OutOfFrame {
        self.out_of_frame
    }

    pub fn with_linear_solver(mut self, method: LinearSolver) -> Result<Self> {
        self.solver = ElasticitySolver::new(&self.mesh, self.bvp.boundary.dirichlet_set(), method)?;
        Ok(self)
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn regions(&self) -> &Arc<RegionLabels<T>> {
        &self.regions
    }

    pub fn reference(&self) -> &ScalarImage<T> {
        &self.reference
    }

    pub fn deformed(&self) -> &ScalarImage<T> {
        &self.deformed
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn bounds(&self) -> Bounds<T> {
        self.bounds
    }

    pub fn mode(&self) -> InversionMode {
        if self.fixed_lambda.is_some() {
            InversionMode::MuOnly
        } else {
            InversionMode::Full
        }
    }

    pub fn sentinel(&self) -> T {
        self.sentinel
    }

    /// Number of free parameters.
    pub fn dim(&self) -> usize {
        match self.mode() {
            InversionMode::MuOnly => self.regions.region_count(),
            InversionMode::Full => 2 * self.regions.region_count(),
        }
    }

    /// Free parameters of per-region pairs: `(μ_k)` or `(λ_0, μ_0, λ_1, μ_1, …)`.
    pub fn encode(&self, pairs: &[LamePair<T>]) -> Result<Vec<T>> {
        if pairs.len() != self.regions.region_count() {
            return Err(Error::DimensionMismatch("one pair per region expected".into()));
        }
        Ok(match self.mode() {
            InversionMode::MuOnly => pairs.iter().map(|p| p.mu).collect(),
            InversionMode::Full => pairs.iter().flat_map(|p| [p.lambda, p.mu]).collect(),
        })
    }

    pub fn decode(&self, p: &[T]) -> Result<Vec<LamePair<T>>> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{} parameters, expected {}", p.len(), self.dim())));
        }
        Ok(match &self.fixed_lambda {
            Some(lambda) => lambda.iter().zip(p).map(|(&l, &m)| LamePair::new(l, m)).collect(),
            None => p.chunks_exact(2).map(|c| LamePair::new(c[0], c[1])).collect(),
        })
    }

    pub fn in_bounds(&self, p: &[T]) -> bool {
        p.len() == self.dim() && p.iter().all(|&x| self.bounds.contains(x))
    }

    /// Solves the forward problem for the given per-region pairs.
    pub fn displacement(&self, pairs: &[LamePair<T>]) -> Result<DisplacementField<T>> {
        let mat = MaterialField::new(self.regions.clone(), pairs.to_vec())?;
        self.solver.solve(&self.mesh, &mat, &self.bvp)
    }

    /// `I₂∘G(a)` on the pixel grid.
    pub fn forward_image(&self, p: &[T]) -> Result<ScalarImage<T>> {
        let u = self.displacement(&self.decode(p)?)?;
        let disp = self.probes.displacements(&self.mesh, &u)?;
        let mut out = self.deformed.clone();
        compose_into(&self.deformed, &disp, self.fill, out.values_mut())?;
        Ok(out)
    }

    pub fn residual(&self, p: &[T]) -> Result<T> {
        let pairs = self.decode(p)?;
        if !self.in_bounds(p) {
            return Ok(self.sentinel);
        }
        let u = self.displacement(&pairs)?;
        let disp = self.probes.displacements(&self.mesh, &u)?;
        Ok(data_misfit(&self.reference, &self.deformed, &disp, self.fill, self.out_of_frame))
    }

    /// `α·‖a − a₀‖²` with frozen λ entering at their fixed values.
    pub fn penalty(&self, pairs: &[LamePair<T>]) -> T {
        let areas = self.regions.areas();
        pairs.iter().enumerate().fold(T::zero(), |acc, (k, p)| {
            let c = self.prior.as_ref().map_or(LamePair::new(T::zero(), T::zero()), |a0| a0[k]);
            let (dl, dm) = (p.lambda - c.lambda, p.mu - c.mu);
            acc + (dl * dl + dm * dm) * areas[k]
        }) * self.alpha
    }

    pub fn evaluate(&self, p: &[T]) -> Result<Evaluation<T>> {
        let pairs = self.decode(p)?;
        if !self.in_bounds(p) {
            return Ok(Evaluation { residual: self.sentinel, penalty: T::zero(), objective: self.sentinel });
        }
        let residual = self.residual(p)?;
        let penalty = self.penalty(&pairs);
        Ok(Evaluation { residual, penalty, objective: residual + penalty })
    }

    pub fn objective(&self, p: &[T]) -> Result<T> {
        Ok(self.evaluate(p)?.objective)
    }
}

/// `pixel area · Σ (deformed(x + d(x)) − reference(x))²` over the pixels selected by `policy`.
pub fn data_misfit<T: Real>(
    reference: &ScalarImage<T>,
    deformed: &ScalarImage<T>,
    disp: &[Vec2<T>],
    fill: T,
    policy: OutOfFrame,
) -> T {
    let (w, h) = (reference.width(), reference.height());
    let extent = deformed.extent();
    let mut sum = T::zero();
    for j in 0..h {
        for i in 0..w {
            let k = j * w + i;
            let x = reference.pixel_center(i, j);
            let y = [x[0] + disp[k][0], x[1] + disp[k][1]];
            if policy == OutOfFrame::Exclude && !in_frame(extent, y) {
                continue;
            }
            let d = sample_bilinear(deformed, y, fill) - reference.get(i, j);
            sum = sum + d * d;
        }
    }
    sum * reference.pixel_area()
}

/// Data misfit of `Compose(PushForward(I₁, u), u)` against `I₁`: what
/// resampling alone leaves when the true displacement `u` is known.
pub fn round_trip_floor<T: Real>(
    reference: &ScalarImage<T>,
    mesh: &Mesh<T>,
    u: &DisplacementField<T>,
    fill: T,
    policy: OutOfFrame,
) -> Result<T> {
    let probes = PixelProbes::new(mesh, reference.width(), reference.height())?;
    let disp = probes.displacements(mesh, u)?;
    let moved = push_forward(reference, &disp, fill)?;
    Ok(data_misfit(reference, &moved, &disp, fill, policy))
}

/// Region-area weighted relative errors of `recovered` against `truth`.
pub fn relative_error<T: Real>(areas: &[T], recovered: &[LamePair<T>], truth: &[LamePair<T>]) -> Result<RelativeError<T>> {
    if recovered.len() != areas.len() || truth.len() != areas.len() {
        return Err(Error::DimensionMismatch("relative error needs one pair and one area per region".into()));
    }
    let norm = |f: &dyn Fn(usize) -> T| (0..areas.len()).fold(T::zero(), |acc, k| acc + f(k) * f(k) * areas[k]).sqrt();
    let lambda_ref = norm(&|k| truth[k].lambda);
    let mu_ref = norm(&|k| truth[k].mu);
    if !(lambda_ref > T::zero() && mu_ref > T::zero()) {
        return Err(Error::InvalidInput("reference Lamé field has zero norm".into()));
    }
    let lambda = norm(&|k| recovered[k].lambda - truth[k].lambda) / lambda_ref;
    let mu = norm(&|k| recovered[k].mu - truth[k].mu) / mu_ref;
    Ok(RelativeError { lambda, mu, joint: (lambda * lambda + mu * mu).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(l: f64, m: f64) -> LamePair<f64> {
        LamePair::new(l, m)
    }

    #[test]
    fn relative_error_zero_at_truth() {
        let truth = [pair(310.0, 34.0), pair(620.0, 68.0)];
        let e = relative_error(&[3.0, 1.0], &truth, &truth).unwrap();
        assert_eq!((e.lambda, e.mu, e.joint), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_region_perturbation_closed_form() {
        let areas = [15.0, 2.5, 2.22];
        let truth = [pair(310.0, 34.0), pair(620.0, 68.0), pair(155.0, 17.0)];
        let e = 0.03;
        let mut rec = truth;
        rec[1].lambda *= 1.0 + e;
        let got = relative_error(&areas, &rec, &truth).unwrap();
        let norm: f64 = truth.iter().zip(&areas).map(|(p, a)| p.lambda * p.lambda * a).sum::<f64>().sqrt();
        let expected = e * truth[1].lambda * areas[1].sqrt() / norm;
        assert!((got.lambda - expected).abs() < 1e-15);
        assert_eq!(got.mu, 0.0);
        assert_eq!(got.joint, got.lambda);
    }

    #[test]
    fn joint_combines_components_euclidean() {
        // the tabulated pair 0.0041 / 0.0069 combines to 0.0080 at four decimals
        let joint = (0.0041f64.powi(2) + 0.0069f64.powi(2)).sqrt();
        assert_eq!(format!("{joint:.4}"), "0.0080");
    }

    #[test]
    fn zero_truth_rejected() {
        let z = [pair(0.0, 0.0)];
        assert!(relative_error(&[1.0], &z, &z).is_err());
        assert!(relative_error(&[1.0, 2.0], &z, &z).is_err());
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(10.0, 1000.0).is_ok());
        assert!(Bounds::new(10.0, 10.0).is_err());
        assert!(Bounds::new(-1.0, 10.0).is_err());
        assert!(Bounds::new(1.0, f64::INFINITY).is_err());
    }
}
