//! Intensity-based inversion of piecewise-constant Lamé parameters from a
//! pair of images taken before and after a quasi-static compression.
//!
//! The pipeline: a uniform triangular [`mesh`] of the sample, a P1
//! [`elasticity`] forward model, [`imaging`] for phantom synthesis, warping
//! and noise, the data-misfit functional in [`iim`], a bounded Nelder-Mead
//! [`optimizer`] and the configuration-driven experiment [`harness`].
//!
//! The numeric modules are generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix the scalar to `f64`, which the harness uses throughout.

pub mod elasticity;
pub mod error;
pub mod harness;
pub mod iim;
pub mod imaging;
pub mod mesh;
pub mod optimizer;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, Vec2};

pub type Mesh = mesh::Mesh<f64>;
pub type BarycentricHit = mesh::BarycentricHit<f64>;
pub type LamePair = elasticity::LamePair<f64>;
pub type ElasticModuli = elasticity::ElasticModuli<f64>;
pub type MaterialField = elasticity::MaterialField<f64>;
pub type RegionLabels = elasticity::RegionLabels<f64>;
pub type ElasticityBvp = elasticity::ElasticityBvp<f64>;
pub type DisplacementField = elasticity::DisplacementField<f64>;
pub type ScalarImage = imaging::ScalarImage<f64>;
pub type PhantomSpec = imaging::PhantomSpec<f64>;
pub type IimContext = iim::IimContext<f64>;
pub type NmOptions = optimizer::NmOptions<f64>;
pub type NmResult = optimizer::NmResult<f64>;

pub type MeshF32 = mesh::Mesh<f32>;
pub type ScalarImageF32 = imaging::ScalarImage<f32>;
