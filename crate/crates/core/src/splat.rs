use nalgebra::{Matrix3, Vector3, Vector4};

/// Unit-norm threshold shared by the rotation invariant checks.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Quaternion in (w, x, y, z) order. Stored components are not required
/// to be unit norm; every conversion to a rotation normalizes first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Quaternion for a rotation of `angle` radians about `axis`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let a = axis.normalize() * (angle / 2.0).sin();
        Quaternion { w: (angle / 2.0).cos(), x: a.x, y: a.y, z: a.z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quaternion {
        let n = self.norm();
        Quaternion { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector4<f64>) -> Self {
        Quaternion { w: v.x, x: v.y, y: v.z, z: v.w }
    }
}

/// Converts a quaternion to its rotation matrix, normalizing first.
///
/// Returns an error for a zero-norm quaternion.
pub fn quat_to_rotation(q: &Quaternion) -> crate::Result<Matrix3<f64>> {
    if q.norm() < 1e-300 {
        return Err(crate::SplatError::invalid("zero-norm quaternion"));
    }
    Ok(rotation_of_unit(&q.normalized()))
}

/// Rotation matrix of an already-normalized quaternion.
fn rotation_of_unit(q: &Quaternion) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Partial derivatives of `rotation_of_unit` with respect to the four
/// unit-quaternion components, in (w, x, y, z) order.
fn rotation_partials_unit(q: &Quaternion) -> [Matrix3<f64>; 4] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [
        2.0 * Matrix3::new(0.0, -z, y, z, 0.0, -x, -y, x, 0.0),
        2.0 * Matrix3::new(0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x),
        2.0 * Matrix3::new(-2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y),
        2.0 * Matrix3::new(-2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0),
    ]
}

/// Pulls a gradient with respect to the rotation matrix back to the raw
/// (possibly unnormalized) quaternion components.
///
/// `grad_r` is dL/dR entrywise. The chain rule runs through the internal
/// normalization, so the result is orthogonal to q for unit q.
pub fn quat_rotation_backward(q: &Quaternion, grad_r: &Matrix3<f64>) -> Vector4<f64> {
    let n = q.norm();
    let qn = q.normalized();
    let partials = rotation_partials_unit(&qn);
    let mut g_unit = Vector4::zeros();
    for i in 0..4 {
        g_unit[i] = partials[i].component_mul(grad_r).sum();
    }
    // d(q/|q|)/dq = (I - q̂ q̂ᵀ)/|q|
    let qv = qn.as_vector();
    (g_unit - qv * qv.dot(&g_unit)) / n
}

/// Symmetric positive-semidefinite 3×3 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance3(pub Matrix3<f64>);

impl Covariance3 {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Largest symmetry violation, for invariant checks.
    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).abs().max()
    }
}

/// Splat flavor: full 3D Gaussians or rank-2 surfels whose third scale
/// is pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianMode {
    ThreeDGS,
    TwoDGS,
}

/// One pixel-aligned splat. The mean lives in the first camera's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    pub mean: Vector3<f64>,
    pub rotation: Quaternion,
    /// Nonnegative; in `TwoDGS` mode the third entry is exactly 0.
    pub scales: Vector3<f64>,
    /// In [0, 1].
    pub opacity: f64,
    /// Linear RGB in [0, 1].
    pub color: Vector3<f64>,
    pub mode: GaussianMode,
}

impl Gaussian3D {
    /// Clamps opacity and scales into their invariant ranges and pins
    /// the third scale in surfel mode.
    pub fn sanitize(&mut self) {
        self.opacity = self.opacity.clamp(0.0, 1.0);
        for i in 0..3 {
            self.scales[i] = self.scales[i].max(0.0);
        }
        if self.mode == GaussianMode::TwoDGS {
            self.scales.z = 0.0;
        }
    }
}

/// Index of the smallest scale, ties broken by lowest axis index.
pub fn argmin_scale(scales: &Vector3<f64>) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if scales[i] < scales[best] {
            best = i;
        }
    }
    best
}

/// Covariance Σ = R · diag(s1, s2, s3) · Rᵀ with the scales placed on
/// the diagonal as-is. The rasterizer squares scales by default before
/// calling the same construction; see `raster::RasterConfig`.
pub fn build_covariance(g: &Gaussian3D) -> crate::Result<Covariance3> {
    let r = quat_to_rotation(&g.rotation)?;
    let d = Matrix3::from_diagonal(&g.scales);
    Ok(Covariance3(r * d * r.transpose()))
}

/// Unit normal of a splat: the rotation column of the smallest scale,
/// or the third column for surfels.
pub fn gaussian_normal(g: &Gaussian3D) -> crate::Result<Vector3<f64>> {
    let r = quat_to_rotation(&g.rotation)?;
    let axis = match g.mode {
        GaussianMode::TwoDGS => 2,
        GaussianMode::ThreeDGS => argmin_scale(&g.scales),
    };
    Ok(r.column(axis).into())
}
