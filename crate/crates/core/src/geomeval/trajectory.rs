//! Camera path interpolation between two calibrated views.

use nalgebra::{Rotation3, UnitQuaternion};

use crate::camera::{Camera, CameraPose};
use crate::{Result, SplatError};

/// Interpolates `n` cameras from `a` to `b` inclusive. Rotations follow the
/// shortest-arc slerp of the relative rotation, translations are linear, and
/// both endpoints are returned bit-for-bit. Requires `n >= 2` and matching
/// intrinsics.
pub fn interpolate_trajectory(a: &Camera, b: &Camera, n: usize) -> Result<Vec<Camera>> {
    if n < 2 {
        return Err(SplatError::invalid("interpolate_trajectory: need at least two cameras"));
    }
    if a.intrinsics != b.intrinsics {
        return Err(SplatError::invalid("interpolate_trajectory: intrinsics differ"));
    }
    let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        a.pose.rotation,
    ));
    let mut qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        b.pose.rotation,
    ));
    if qa.coords.dot(&qb.coords) < 0.0 {
        qb = UnitQuaternion::new_unchecked(-qb.into_inner());
    }

    let mut cams = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 {
            cams.push(a.clone());
            continue;
        }
        if i == n - 1 {
            cams.push(b.clone());
            continue;
        }
        let t = i as f64 / (n - 1) as f64;
        let q = slerp(&qa, &qb, t);
        let translation = (1.0 - t) * a.pose.translation + t * b.pose.translation;
        let pose = CameraPose::new(*q.to_rotation_matrix().matrix(), translation);
        cams.push(Camera::new(a.intrinsics, pose));
    }
    Ok(cams)
}

/// Plain slerp; assumes the inputs already sit in the same hemisphere.
fn slerp(qa: &UnitQuaternion<f64>, qb: &UnitQuaternion<f64>, t: f64) -> UnitQuaternion<f64> {
    let dot = qa.coords.dot(&qb.coords).clamp(-1.0, 1.0);
    if dot > 1.0 - 1e-12 {
        // Nearly identical: nlerp is exact to first order and stays finite.
        return UnitQuaternion::new_normalize(
            nalgebra::Quaternion::from(qa.coords.lerp(&qb.coords, t)),
        );
    }
    let theta = dot.acos();
    let sin = theta.sin();
    let wa = ((1.0 - t) * theta).sin() / sin;
    let wb = (t * theta).sin() / sin;
    UnitQuaternion::new_normalize(nalgebra::Quaternion::from(
        wa * qa.coords + wb * qb.coords,
    ))
}
