//! CPU library for pixel-aligned Gaussian splat scenes: differentiable
//! rendering of color, depth, and normals; geometric prior losses
//! (orientation, alignment, flatness, normal consistency); per-scene
//! gradient-descent fitting; PnP relative pose recovery; and a TSDF
//! fusion / mesh evaluation pipeline. Everything is f64 and every
//! rendered or loss quantity exposes analytic gradients that are
//! validated against central finite differences in the test suite.
//!
//! All splats of all frames live in the first camera's coordinate frame;
//! the first camera is the identity pose by convention.

pub mod camera;
pub mod error;
pub mod geomeval;
pub mod grid;
pub mod optim;
pub mod parallel;
pub mod pose;
pub mod priors;
pub mod raster;
pub mod scene;
pub mod scenes;
pub mod splat;

pub use camera::{Camera, CameraIntrinsics, CameraPose};
pub use error::SplatError;
pub use grid::Grid;
pub use scene::{Frame, SplatScene};
pub use splat::{Covariance3, Gaussian3D, GaussianMode, Quaternion};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, SplatError>;
