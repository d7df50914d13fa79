//! Truncated signed distance fusion of depth maps.

use nalgebra::Vector3;

use crate::camera::Camera;
use crate::grid::Grid;
use crate::parallel;
use crate::{Result, SplatError};

/// Observations saturate at this weight; later updates keep averaging but
/// stop gaining influence.
pub const MAX_WEIGHT: f64 = 128.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsdfVoxel {
    /// Truncation-normalized signed distance in [-1, 1]; 1 until observed.
    pub tsdf: f64,
    /// Number of fused observations, capped at MAX_WEIGHT. 0 means unobserved.
    pub weight: f64,
}

/// Regular grid of signed distance samples. Sample (i, j, k) sits at
/// `origin + voxel_size * (i, j, k)`; mesh cells span adjacent samples.
#[derive(Debug, Clone)]
pub struct TsdfVolume {
    pub origin: Vector3<f64>,
    pub voxel_size: f64,
    pub dims: [usize; 3],
    /// Distance band fused around surfaces, in world units.
    pub truncation: f64,
    pub voxels: Vec<TsdfVoxel>,
}

impl TsdfVolume {
    /// Truncation defaults to four voxels; adjust the field before
    /// integrating if a different band is wanted.
    pub fn new(origin: Vector3<f64>, voxel_size: f64, dims: [usize; 3]) -> Self {
        assert!(voxel_size > 0.0 && voxel_size.is_finite());
        assert!(dims.iter().all(|&d| d >= 1));
        TsdfVolume {
            origin,
            voxel_size,
            dims,
            truncation: 4.0 * voxel_size,
            voxels: vec![TsdfVoxel { tsdf: 1.0, weight: 0.0 }; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn sample_point(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin + self.voxel_size * Vector3::new(i as f64, j as f64, k as f64)
    }

    pub fn tsdf(&self, i: usize, j: usize, k: usize) -> f64 {
        self.voxels[self.index(i, j, k)].tsdf
    }

    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.voxels[self.index(i, j, k)].weight
    }
}

/// Fuses one depth map into the volume. Each voxel is projected into the
/// view; the signed distance along the camera axis, `depth - z`, is
/// truncation-clamped and folded into a running average, so the result does
/// not depend on the order views arrive in. Voxels more than one truncation
/// band behind the surface, outside the image, or hitting invalid depth
/// (nonpositive or nonfinite) are left alone.
pub fn tsdf_integrate(vol: &mut TsdfVolume, depth: &Grid<f64>, cam: &Camera) -> Result<()> {
    if depth.width() != cam.intrinsics.width || depth.height() != cam.intrinsics.height {
        return Err(SplatError::invalid("tsdf_integrate: depth size mismatch"));
    }
    let origin = vol.origin;
    let voxel_size = vol.voxel_size;
    let dims = vol.dims;
    let truncation = vol.truncation;
    parallel::for_each_mut(&mut vol.voxels, |idx, vox| {
        let i = idx % dims[0];
        let j = (idx / dims[0]) % dims[1];
        let k = idx / (dims[0] * dims[1]);
        let p = origin + voxel_size * Vector3::new(i as f64, j as f64, k as f64);
        let pc = cam.to_camera(&p);
        if pc.z <= 0.0 {
            return;
        }
        let uv = cam.intrinsics.project(&pc);
        if !cam.intrinsics.in_bounds(&uv) {
            return;
        }
        let d = *depth.get(uv.x as usize, uv.y as usize);
        if !(d.is_finite() && d > 0.0) {
            return;
        }
        let sdf = d - pc.z;
        if sdf < -truncation {
            return;
        }
        let v = (sdf / truncation).clamp(-1.0, 1.0);
        vox.tsdf = (vox.tsdf * vox.weight + v) / (vox.weight + 1.0);
        vox.weight = (vox.weight + 1.0).min(MAX_WEIGHT);
    });
    Ok(())
}
