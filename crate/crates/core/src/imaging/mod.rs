//! Synthetic images, deformation of images and noise.

pub mod filter;
pub mod image;
pub mod noise;
pub mod phantom;
pub mod warp;

pub use image::ScalarImage;
pub use noise::{add_relative_noise, NoiseSpec};
pub use phantom::{generate_phantom, Ellipse, Inclusion, PhantomSpec, SpeckleSpec};
pub use warp::{warp_image, PixelProbes, WarpMode};
