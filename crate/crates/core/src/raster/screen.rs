use crate::camera::Camera;
use crate::raster::grad::{GaussianGrad, PoseGrad, ScreenGrad};
use crate::raster::RasterConfig;
use crate::splat::{argmin_scale, quat_rotation_backward, quat_to_rotation, Gaussian3D, GaussianMode};
use nalgebra::{Matrix2, Matrix3, Matrix2x3, Vector2, Vector3};

/// A splat projected into a target view.
#[derive(Debug, Clone, Copy)]
pub struct ScreenGaussian {
    pub mean2d: Vector2<f64>,
    /// Σ' upper-left 2×2 after the low-pass floor.
    pub cov2d: Matrix2<f64>,
    /// Inverse of cov2d as (i00, i01, i11); precomputed once so both
    /// render paths evaluate footprints with identical arithmetic.
    pub cinv: Vector3<f64>,
    /// Camera-z of the mean.
    pub depth: f64,
    pub opacity: f64,
    pub color: Vector3<f64>,
    /// Splat normal rotated into the target camera frame.
    pub normal_cam: Vector3<f64>,
    /// Index into the scene's flat splat order.
    pub source: usize,
}

impl ScreenGaussian {
    /// Squared-exponential footprint at a pixel center.
    #[inline]
    pub fn footprint(&self, px: f64, py: f64) -> f64 {
        let dx = px - self.mean2d.x;
        let dy = py - self.mean2d.y;
        let m2 = self.cinv.x * dx * dx + 2.0 * self.cinv.y * dx * dy + self.cinv.z * dy * dy;
        (-0.5 * m2).exp()
    }

    /// Half-widths of the screen bounding box outside which the
    /// footprint is guaranteed below `cutoff` (marginal-variance bound).
    pub fn bbox_radii(&self, cutoff: f64) -> Option<(f64, f64)> {
        if cutoff <= 0.0 {
            return None;
        }
        let k = (2.0 * (1.0 / cutoff).ln()).max(0.0).sqrt();
        Some((k * self.cov2d[(0, 0)].sqrt(), k * self.cov2d[(1, 1)].sqrt()))
    }
}

/// Effective diagonal entries of the splat's local covariance: scales
/// floored, then squared when the config says so.
#[inline]
fn effective_diag(g: &Gaussian3D, cfg: &RasterConfig) -> Vector3<f64> {
    let mut d = Vector3::zeros();
    for i in 0..3 {
        let s = g.scales[i].max(cfg.scale_floor);
        d[i] = if cfg.square_scales { s * s } else { s };
    }
    d
}

fn normal_axis(g: &Gaussian3D) -> usize {
    match g.mode {
        GaussianMode::TwoDGS => 2,
        GaussianMode::ThreeDGS => argmin_scale(&g.scales),
    }
}

/// Projects one splat into a camera. Returns `None` when the mean is at
/// or behind the near plane, when the 2D covariance is numerically
/// singular, or when the cutoff-radius footprint misses the image.
pub fn project_gaussian(
    g: &Gaussian3D,
    cam: &Camera,
    cfg: &RasterConfig,
    source: usize,
) -> Option<ScreenGaussian> {
    let x_cam = cam.to_camera(&g.mean);
    let z = x_cam.z;
    if z <= cfg.z_near {
        return None;
    }
    let intr = &cam.intrinsics;
    let mean2d = intr.project(&x_cam);

    let rq = quat_to_rotation(&g.rotation).ok()?;
    let d = effective_diag(g, cfg);
    let sigma_w = rq * Matrix3::from_diagonal(&d) * rq.transpose();
    let rc = cam.pose.rotation;
    let m = rc * sigma_w * rc.transpose();

    let j = jacobian(intr.fx, intr.fy, &x_cam);
    let mut cov2d = j * m * j.transpose();
    cov2d[(0, 0)] += cfg.low_pass;
    cov2d[(1, 1)] += cfg.low_pass;

    let det = cov2d[(0, 0)] * cov2d[(1, 1)] - cov2d[(0, 1)] * cov2d[(1, 0)];
    if !(det > 1e-300) {
        return None;
    }
    let cinv = Vector3::new(cov2d[(1, 1)] / det, -cov2d[(0, 1)] / det, cov2d[(0, 0)] / det);

    let n_world: Vector3<f64> = rq.column(normal_axis(g)).into();
    let screen = ScreenGaussian {
        mean2d,
        cov2d,
        cinv,
        depth: z,
        opacity: g.opacity,
        color: g.color,
        normal_cam: rc * n_world,
        source,
    };

    if let Some((ru, rv)) = screen.bbox_radii(cfg.cutoff) {
        let (w, h) = (intr.width as f64, intr.height as f64);
        // Pixel centers live on [0.5, W-0.5] × [0.5, H-0.5].
        if mean2d.x + ru < 0.5
            || mean2d.x - ru > w - 0.5
            || mean2d.y + rv < 0.5
            || mean2d.y - rv > h - 0.5
        {
            return None;
        }
    }
    Some(screen)
}

/// Jacobian of the perspective map (x, y, z) ↦ (fx·x/z + cx, fy·y/z + cy).
#[inline]
fn jacobian(fx: f64, fy: f64, p: &Vector3<f64>) -> Matrix2x3<f64> {
    let z = p.z;
    Matrix2x3::new(fx / z, 0.0, -fx * p.x / (z * z), 0.0, fy / z, -fy * p.y / (z * z))
}

/// Pulls a screen-space gradient back to the splat parameters and the
/// camera-pose tangent. Recomputes the forward internals; the splat must
/// be one that `project_gaussian` did not cull.
pub fn project_backward(
    g: &Gaussian3D,
    cam: &Camera,
    cfg: &RasterConfig,
    grad: &ScreenGrad,
) -> (GaussianGrad, PoseGrad) {
    let rc = cam.pose.rotation;
    let x_cam = cam.to_camera(&g.mean);
    let z = x_cam.z;
    let intr = &cam.intrinsics;

    let rq = quat_to_rotation(&g.rotation).expect("projected splat has valid rotation");
    let d = effective_diag(g, cfg);
    let sigma_w = rq * Matrix3::from_diagonal(&d) * rq.transpose();
    let m = rc * sigma_w * rc.transpose();
    let j = jacobian(intr.fx, intr.fy, &x_cam);

    // Unrestricted cotangent of cov2d from the symmetric (c00,c01,c11)
    // parameterization.
    let gc = Matrix2::new(grad.cov2d.x, grad.cov2d.y / 2.0, grad.cov2d.y / 2.0, grad.cov2d.z);

    // cov2d = J M Jᵀ (+ low-pass, which has zero derivative).
    let dj = 2.0 * gc * j * m;
    let dm = j.transpose() * gc * j;

    // M = R_c Σ_w R_cᵀ.
    let d_sigma_w = rc.transpose() * dm * rc;
    let mut d_rc = 2.0 * dm * rc * sigma_w;

    // Σ_w = R_q diag(d) R_qᵀ.
    let mut d_rq = 2.0 * d_sigma_w * rq * Matrix3::from_diagonal(&d);
    let dd_diag = rq.transpose() * d_sigma_w * rq;

    let mut d_scales = Vector3::zeros();
    for i in 0..3 {
        let s_eff = g.scales[i].max(cfg.scale_floor);
        let chain = if cfg.square_scales { 2.0 * s_eff } else { 1.0 };
        // Subgradient zero where the floor binds.
        if g.scales[i] > cfg.scale_floor {
            d_scales[i] = dd_diag[(i, i)] * chain;
        }
    }

    // Normal payload: n_cam = R_c R_q e_axis.
    let axis = normal_axis(g);
    let n_world: Vector3<f64> = rq.column(axis).into();
    let dn_world = rc.transpose() * grad.normal_cam;
    d_rc += grad.normal_cam * n_world.transpose();
    for r in 0..3 {
        d_rq[(r, axis)] += dn_world[r];
    }

    // Projection of the mean and the depth payload.
    let (fx, fy) = (intr.fx, intr.fy);
    let (x, y) = (x_cam.x, x_cam.y);
    let z2 = z * z;
    let z3 = z2 * z;
    let mut dx_cam = Vector3::new(
        grad.mean2d.x * fx / z,
        grad.mean2d.y * fy / z,
        -grad.mean2d.x * fx * x / z2 - grad.mean2d.y * fy * y / z2 + grad.depth,
    );
    // Jacobian entries depend on x_cam too.
    dx_cam.x += dj[(0, 2)] * (-fx / z2);
    dx_cam.y += dj[(1, 2)] * (-fy / z2);
    dx_cam.z += dj[(0, 0)] * (-fx / z2)
        + dj[(1, 1)] * (-fy / z2)
        + dj[(0, 2)] * (2.0 * fx * x / z3)
        + dj[(1, 2)] * (2.0 * fy * y / z3);

    // x_cam = R_c μ + T_c.
    let d_mean = rc.transpose() * dx_cam;
    d_rc += dx_cam * g.mean.transpose();
    let d_trans = dx_cam;

    let d_quat = quat_rotation_backward(&g.rotation, &d_rq);

    // Left-perturbation pose tangent: dω_i = ⟨dR_c, [e_i]× R_c⟩.
    let mut omega = Vector3::zeros();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        let gen = crate::camera::skew(&e) * rc;
        omega[i] = gen.component_mul(&d_rc).sum();
    }

    (
        GaussianGrad {
            mean: d_mean,
            quat: d_quat,
            scales: d_scales,
            opacity: grad.opacity,
            color: grad.color,
        },
        PoseGrad { omega, trans: d_trans },
    )
}
