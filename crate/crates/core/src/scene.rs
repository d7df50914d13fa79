use crate::camera::{CameraIntrinsics, CameraPose};
use crate::grid::Grid;
use crate::splat::{Gaussian3D, GaussianMode};
use nalgebra::Vector3;

/// One input frame: intrinsics, its H×W grid of pixel-aligned splats
/// (expressed in the first camera's coordinates), and an optional
/// ground-truth pose kept for evaluation only.
#[derive(Debug, Clone)]
pub struct Frame {
    pub intrinsics: CameraIntrinsics,
    pub gaussians: Grid<Gaussian3D>,
    pub gt_pose: Option<CameraPose>,
}

impl Frame {
    pub fn new(intrinsics: CameraIntrinsics, gaussians: Grid<Gaussian3D>) -> Self {
        assert_eq!(gaussians.width(), intrinsics.width, "grid width must match intrinsics");
        assert_eq!(gaussians.height(), intrinsics.height, "grid height must match intrinsics");
        Frame { intrinsics, gaussians, gt_pose: None }
    }
}

/// Ordered collection of frames sharing the first camera's coordinate
/// system.
#[derive(Debug, Clone)]
pub struct SplatScene {
    pub frames: Vec<Frame>,
    pub mode: GaussianMode,
}

impl SplatScene {
    pub fn new(frames: Vec<Frame>, mode: GaussianMode) -> Self {
        SplatScene { frames, mode }
    }

    pub fn num_gaussians(&self) -> usize {
        self.frames.iter().map(|f| f.gaussians.len()).sum()
    }

    /// All splats of all frames in frame order, row-major within a frame.
    pub fn iter_gaussians(&self) -> impl Iterator<Item = &Gaussian3D> {
        self.frames.iter().flat_map(|f| f.gaussians.iter())
    }

    pub fn iter_gaussians_mut(&mut self) -> impl Iterator<Item = &mut Gaussian3D> {
        self.frames.iter_mut().flat_map(|f| f.gaussians.iter_mut())
    }

    /// Mean of all splat means.
    pub fn centroid(&self) -> Vector3<f64> {
        let n = self.num_gaussians().max(1) as f64;
        let sum: Vector3<f64> = self.iter_gaussians().map(|g| g.mean).sum();
        sum / n
    }

    /// Largest distance from the centroid to any splat mean; used to
    /// scale tolerances, voxel sizes, and the surfel thickness floor.
    pub fn radius(&self) -> f64 {
        let c = self.centroid();
        self.iter_gaussians().map(|g| (g.mean - c).norm()).fold(0.0, f64::max)
    }

    /// Quick structural digest used to assert immutability across
    /// operations that must not touch splat parameters.
    pub fn checksum(&self) -> f64 {
        let mut acc = 0.0f64;
        for g in self.iter_gaussians() {
            acc += g.mean.sum()
                + g.rotation.w
                + g.rotation.x
                + g.rotation.y
                + g.rotation.z
                + g.scales.sum()
                + g.opacity
                + g.color.sum();
        }
        acc
    }
}
