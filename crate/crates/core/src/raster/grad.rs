use crate::grid::Grid;
use crate::scene::SplatScene;
use nalgebra::{Vector2, Vector3, Vector4};

/// Gradient of a scalar loss with respect to one splat's parameters.
/// The quaternion entry is with respect to the raw stored components;
/// for a unit-norm quaternion it is tangent (orthogonal to q).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianGrad {
    pub mean: Vector3<f64>,
    pub quat: Vector4<f64>,
    pub scales: Vector3<f64>,
    pub opacity: f64,
    pub color: Vector3<f64>,
}

impl GaussianGrad {
    pub fn add_assign(&mut self, other: &GaussianGrad) {
        self.mean += other.mean;
        self.quat += other.quat;
        self.scales += other.scales;
        self.opacity += other.opacity;
        self.color += other.color;
    }

    pub fn scaled(&self, k: f64) -> GaussianGrad {
        GaussianGrad {
            mean: self.mean * k,
            quat: self.quat * k,
            scales: self.scales * k,
            opacity: self.opacity * k,
            color: self.color * k,
        }
    }
}

/// Per-splat gradients for a whole scene, flat in scene iteration order
/// (frames in order, row-major within each frame).
#[derive(Debug, Clone)]
pub struct SceneGrad {
    pub per_gaussian: Vec<GaussianGrad>,
}

impl SceneGrad {
    pub fn zeros(scene: &SplatScene) -> Self {
        SceneGrad { per_gaussian: vec![GaussianGrad::default(); scene.num_gaussians()] }
    }

    pub fn add_assign(&mut self, other: &SceneGrad) {
        assert_eq!(self.per_gaussian.len(), other.per_gaussian.len());
        for (a, b) in self.per_gaussian.iter_mut().zip(&other.per_gaussian) {
            a.add_assign(b);
        }
    }

    pub fn add_scaled(&mut self, other: &SceneGrad, k: f64) {
        assert_eq!(self.per_gaussian.len(), other.per_gaussian.len());
        for (a, b) in self.per_gaussian.iter_mut().zip(&other.per_gaussian) {
            a.add_assign(&b.scaled(k));
        }
    }

    pub fn scale(&mut self, k: f64) {
        for g in &mut self.per_gaussian {
            *g = g.scaled(k);
        }
    }
}

/// Gradient on the 6-dim rigid tangent of a camera pose, for the left
/// perturbation R ← exp([ω]×)·R, T ← T + t.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoseGrad {
    pub omega: Vector3<f64>,
    pub trans: Vector3<f64>,
}

impl PoseGrad {
    pub fn add_assign(&mut self, other: &PoseGrad) {
        self.omega += other.omega;
        self.trans += other.trans;
    }

    pub fn scaled(&self, k: f64) -> PoseGrad {
        PoseGrad { omega: self.omega * k, trans: self.trans * k }
    }

    pub fn norm(&self) -> f64 {
        (self.omega.norm_squared() + self.trans.norm_squared()).sqrt()
    }
}

/// Cotangents flowing into the rendered buffers; the renderer pulls
/// them back to splat parameters and the camera pose.
#[derive(Debug, Clone)]
pub struct BufferGrads {
    pub color: Grid<Vector3<f64>>,
    pub depth_acc: Grid<f64>,
    /// Must be zero wherever the expected depth is undefined.
    pub depth_exp: Grid<f64>,
    pub normal: Grid<Vector3<f64>>,
    pub weight_sum: Grid<f64>,
}

impl BufferGrads {
    pub fn zeros(width: usize, height: usize) -> Self {
        BufferGrads {
            color: Grid::fill(width, height, Vector3::zeros()),
            depth_acc: Grid::fill(width, height, 0.0),
            depth_exp: Grid::fill(width, height, 0.0),
            normal: Grid::fill(width, height, Vector3::zeros()),
            weight_sum: Grid::fill(width, height, 0.0),
        }
    }

    pub fn add_scaled(&mut self, other: &BufferGrads, k: f64) {
        for (a, b) in self.color.iter_mut().zip(other.color.iter()) {
            *a += k * b;
        }
        for (a, b) in self.depth_acc.iter_mut().zip(other.depth_acc.iter()) {
            *a += k * b;
        }
        for (a, b) in self.depth_exp.iter_mut().zip(other.depth_exp.iter()) {
            *a += k * b;
        }
        for (a, b) in self.normal.iter_mut().zip(other.normal.iter()) {
            *a += k * b;
        }
        for (a, b) in self.weight_sum.iter_mut().zip(other.weight_sum.iter()) {
            *a += k * b;
        }
    }
}

/// Gradient with respect to one projected (screen-space) splat.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScreenGrad {
    pub mean2d: Vector2<f64>,
    /// dL/dΣ' as (d00, d01, d11); the off-diagonal entry already carries
    /// both symmetric halves.
    pub cov2d: Vector3<f64>,
    pub depth: f64,
    pub opacity: f64,
    pub color: Vector3<f64>,
    pub normal_cam: Vector3<f64>,
}

impl ScreenGrad {
    pub fn add_assign(&mut self, other: &ScreenGrad) {
        self.mean2d += other.mean2d;
        self.cov2d += other.cov2d;
        self.depth += other.depth;
        self.opacity += other.opacity;
        self.color += other.color;
        self.normal_cam += other.normal_cam;
    }
}
