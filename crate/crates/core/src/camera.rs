use nalgebra::{Matrix3, Vector2, Vector3};

/// Pinhole intrinsics. Pixel coordinates use the pixel-center
/// convention: the center of the pixel at (col, row) is
/// (col + 0.5, row + 0.5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Self {
        assert!(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
        assert!(width >= 3 && height >= 3, "central differences need interior pixels");
        CameraIntrinsics { fx, fy, cx, cy, width, height }
    }

    /// Square image with the principal point at the center and a given
    /// horizontal field of view in degrees.
    pub fn centered(width: usize, height: usize, fov_x_deg: f64) -> Self {
        let fx = 0.5 * width as f64 / (fov_x_deg.to_radians() / 2.0).tan();
        CameraIntrinsics::new(fx, fx, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    /// Perspective projection of a camera-frame point (z > 0 assumed).
    pub fn project(&self, p: &Vector3<f64>) -> Vector2<f64> {
        Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Camera-frame ray direction with unit z through pixel (u, v).
    pub fn ray_dir(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Whether a projected point lies inside the image domain
    /// [0, W) × [0, H).
    pub fn in_bounds(&self, p: &Vector2<f64>) -> bool {
        p.x >= 0.0 && p.x < self.width as f64 && p.y >= 0.0 && p.y < self.height as f64
    }
}

/// World-to-camera rigid pose: x_cam = R · x_world + T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub const IDENTITY: CameraPose =
        CameraPose { rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0), translation: Vector3::new(0.0, 0.0, 0.0) };

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        CameraPose { rotation, translation }
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Camera center in world coordinates: −Rᵀ T.
    pub fn center(&self) -> Vector3<f64> {
        -self.rotation.transpose() * self.translation
    }

    pub fn inverse(&self) -> CameraPose {
        let rt = self.rotation.transpose();
        CameraPose { rotation: rt, translation: -rt * self.translation }
    }

    /// Composition: (self ∘ other)(x) = self(other(x)).
    pub fn compose(&self, other: &CameraPose) -> CameraPose {
        CameraPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Largest deviation from orthonormality, for invariant checks.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.rotation.transpose() * self.rotation;
        let e1 = (rtr - Matrix3::identity()).abs().max();
        let e2 = (self.rotation.determinant() - 1.0).abs();
        e1.max(e2)
    }

    /// Nearest rotation by polar decomposition (SVD), fixing sign.
    pub fn reorthonormalized(&self) -> CameraPose {
        CameraPose { rotation: nearest_rotation(&self.rotation), translation: self.translation }
    }
}

/// Projects an arbitrary 3×3 matrix to the nearest rotation.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let d = (u * vt).determinant();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum())) * vt
}

/// Rodrigues exponential of an axis-angle vector.
pub fn rotation_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = skew(w);
    if theta < 1e-12 {
        // Second-order series keeps the map exact to machine precision.
        Matrix3::identity() + k + 0.5 * k * k
    } else {
        Matrix3::identity() + (theta.sin() / theta) * k
            + ((1.0 - theta.cos()) / (theta * theta)) * k * k
    }
}

pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Intrinsics plus world-to-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: CameraPose) -> Self {
        Camera { intrinsics, pose }
    }

    /// World point to camera frame.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.pose.transform(p)
    }

    /// World point to pixel coordinates plus camera depth.
    pub fn project_world(&self, p: &Vector3<f64>) -> (Vector2<f64>, f64) {
        let c = self.to_camera(p);
        (self.intrinsics.project(&c), c.z)
    }

    /// Backprojects pixel (u, v) at camera-z `depth` to world space.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let dir = self.intrinsics.ray_dir(u, v);
        let inv = self.pose.inverse();
        inv.transform(&(dir * depth))
    }
}
