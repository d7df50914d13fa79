use crate::camera::CameraPose;
use crate::raster::{PoseGrad, SceneGrad};
use crate::scene::SplatScene;
use nalgebra::{Vector2, Vector3};

/// Mean squared distance, in pixels², between each splat's home pixel
/// center and the reprojection of its mean into its own frame's camera.
/// Splats behind the camera or projecting outside the image are masked
/// out; the mean runs over the masked-in count across all frames.
///
/// `frame_cams` holds one world-to-camera pose per frame.
pub fn alignment_loss(scene: &SplatScene, frame_cams: &[CameraPose]) -> crate::Result<f64> {
    let (sum, count) = accumulate(scene, frame_cams, None, None)?;
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Loss plus gradients with respect to splat means and per-frame pose
/// tangents. The mask is treated as constant.
pub fn alignment_loss_grad(
    scene: &SplatScene,
    frame_cams: &[CameraPose],
) -> crate::Result<(f64, SceneGrad, Vec<PoseGrad>)> {
    // First pass pins down the masked count, second distributes 1/P.
    let (sum, count) = accumulate(scene, frame_cams, None, None)?;
    let mut grad = SceneGrad::zeros(scene);
    let mut pose_grads = vec![PoseGrad::default(); frame_cams.len()];
    if count == 0 {
        return Ok((0.0, grad, pose_grads));
    }
    accumulate(scene, frame_cams, Some(&mut grad), Some(&mut pose_grads))?;
    let inv = 1.0 / count as f64;
    grad.scale(inv);
    for p in &mut pose_grads {
        *p = p.scaled(inv);
    }
    Ok((sum * inv, grad, pose_grads))
}

fn accumulate(
    scene: &SplatScene,
    frame_cams: &[CameraPose],
    mut grad: Option<&mut SceneGrad>,
    mut pose_grads: Option<&mut Vec<PoseGrad>>,
) -> crate::Result<(f64, usize)> {
    if frame_cams.len() != scene.frames.len() {
        return Err(crate::SplatError::invalid(format!(
            "alignment needs one pose per frame, got {} poses for {} frames",
            frame_cams.len(),
            scene.frames.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut offset = 0usize;
    for (fi, frame) in scene.frames.iter().enumerate() {
        let pose = &frame_cams[fi];
        let intr = &frame.intrinsics;
        for (col, row, g) in frame.gaussians.enumerate() {
            let p_cam = pose.transform(&g.mean);
            if p_cam.z <= 0.0 {
                continue;
            }
            let proj = intr.project(&p_cam);
            if !intr.in_bounds(&proj) {
                continue;
            }
            let target = Vector2::new(col as f64 + 0.5, row as f64 + 0.5);
            let res = proj - target;
            sum += res.norm_squared();
            count += 1;
            if let Some(grad) = grad.as_deref_mut() {
                let (z, z2) = (p_cam.z, p_cam.z * p_cam.z);
                // dproj = 2·res through the pinhole Jacobian.
                let dx_cam = Vector3::new(
                    2.0 * res.x * intr.fx / z,
                    2.0 * res.y * intr.fy / z,
                    -2.0 * (res.x * intr.fx * p_cam.x + res.y * intr.fy * p_cam.y) / z2,
                );
                let idx = offset + row * frame.gaussians.width() + col;
                grad.per_gaussian[idx].mean += pose.rotation.transpose() * dx_cam;
                if let Some(pg) = pose_grads.as_deref_mut() {
                    // Left perturbation: δx_cam = ω × (R μ) + t.
                    let r_mu = pose.rotation * g.mean;
                    pg[fi].omega += r_mu.cross(&dx_cam);
                    pg[fi].trans += dx_cam;
                }
            }
        }
        offset += frame.gaussians.len();
    }
    Ok((sum, count))
}
