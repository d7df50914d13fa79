//! Relative pose between frames from pixel-aligned splat means.
//!
//! Every pixel of frame t carries a 3D mean expressed in the first
//! camera's coordinates, so (pixel, mean) pairs are 2D–3D
//! correspondences and the world-to-camera pose of frame t falls out
//! of PnP. Two solvers are provided: plain least squares (damped
//! Gauss–Newton seeded by a DLT) and RANSAC around the same minimal
//! solver. Angular error and AUC metrics live here too because they
//! only ever consume these poses.

use crate::camera::{nearest_rotation, rotation_exp, skew, CameraIntrinsics, CameraPose};
use crate::error::SplatError;
use crate::parallel;
use crate::scene::SplatScene;
use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix, Vector2, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One pixel-center ↔ 3D point pair. The point is in the first
/// camera's coordinates; the pixel uses the (u + 0.5, v + 0.5) center
/// convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence2D3D {
    pub pixel: Vector2<f64>,
    pub point: Vector3<f64>,
}

/// Angular pose error in degrees. Both entries are in [0, 180].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    pub rot_deg: f64,
    /// Angle between the normalized translation vectors; defined as 0
    /// when the ground-truth baseline is shorter than 1e-9.
    pub trans_deg: f64,
}

/// Area under the cumulative recall curve of the scalar pose error,
/// one value per threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AUCResult {
    pub thresholds: Vec<f64>,
    pub auc: Vec<f64>,
}

pub const DEFAULT_AUC_THRESHOLDS: [f64; 3] = [5.0, 10.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Reprojection error below which a correspondence counts as an
    /// inlier, in pixels.
    pub threshold_px: f64,
    pub max_iters: usize,
    /// Target probability of having seen one all-inlier minimal
    /// sample; drives early termination.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig { threshold_px: 1.0, max_iters: 2048, confidence: 0.999, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoseMethod {
    LeastSquares,
    Ransac(RansacConfig),
}

const GN_MAX_ITERS: usize = 100;
const GN_STEP_TOL: f64 = 1e-10;
/// Relative singular-value cutoff below which normal equations (and
/// the DLT nullspace) are treated as rank deficient.
const RANK_TOL: f64 = 1e-10;
/// Camera depths are clamped here inside the refiner so points that
/// wander behind the camera produce large finite residuals instead of
/// poles.
const Z_CLAMP: f64 = 1e-6;

fn validate(corrs: &[Correspondence2D3D]) -> crate::Result<()> {
    if corrs.len() < 6 {
        return Err(SplatError::invalid(format!(
            "pnp needs at least 6 correspondences, got {}",
            corrs.len()
        )));
    }
    for c in corrs {
        if !(c.pixel.iter().all(|v| v.is_finite()) && c.point.iter().all(|v| v.is_finite())) {
            return Err(SplatError::invalid("non-finite correspondence"));
        }
    }
    Ok(())
}

/// Squared pixel reprojection error of one correspondence; infinite
/// for points at or behind the camera plane.
fn reproj_sq(pose: &CameraPose, intr: &CameraIntrinsics, c: &Correspondence2D3D) -> f64 {
    let p = pose.transform(&c.point);
    if p.z <= 0.0 {
        return f64::INFINITY;
    }
    (intr.project(&p) - c.pixel).norm_squared()
}

/// Direct linear transform for the 3×4 projection, with Hartley
/// normalization on both sides, decomposed into the nearest rigid
/// pose. The result is only a seed; callers refine it.
fn dlt_pose(corrs: &[Correspondence2D3D], intr: &CameraIntrinsics) -> crate::Result<CameraPose> {
    let n = corrs.len();

    // Intrinsics-normalized image coordinates, then both point sets
    // centered and scaled to mean norms √2 / √3 for conditioning.
    let cal: Vec<Vector2<f64>> = corrs
        .iter()
        .map(|c| {
            Vector2::new((c.pixel.x - intr.cx) / intr.fx, (c.pixel.y - intr.cy) / intr.fy)
        })
        .collect();
    let c2 = cal.iter().sum::<Vector2<f64>>() / n as f64;
    let c3 = corrs.iter().map(|c| c.point).sum::<Vector3<f64>>() / n as f64;
    let m2 = cal.iter().map(|p| (p - c2).norm()).sum::<f64>() / n as f64;
    let m3 = corrs.iter().map(|c| (c.point - c3).norm()).sum::<f64>() / n as f64;
    if m2 < 1e-12 || m3 < 1e-12 {
        return Err(SplatError::DegenerateConfiguration(
            "dlt: correspondences collapse to a point".into(),
        ));
    }
    let s2 = std::f64::consts::SQRT_2 / m2;
    let s3 = 3f64.sqrt() / m3;

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, c) in corrs.iter().enumerate() {
        let x = s3 * (c.point - c3);
        let u = s2 * (cal[i] - c2);
        let row = 2 * i;
        for k in 0..3 {
            a[(row, k)] = x[k];
            a[(row, 8 + k)] = -u.x * x[k];
            a[(row + 1, 4 + k)] = x[k];
            a[(row + 1, 8 + k)] = -u.y * x[k];
        }
        a[(row, 3)] = 1.0;
        a[(row, 11)] = -u.x;
        a[(row + 1, 7)] = 1.0;
        a[(row + 1, 11)] = -u.y;
    }

    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    // nalgebra does not sort singular values; pick the two smallest by
    // hand. A second near-zero value means the solution family has
    // extra dimensions (coplanar or collinear points).
    let vals = &svd.singular_values;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let max_sv = vals[order[vals.len() - 1]];
    if vals.len() >= 2 && vals[order[1]] < RANK_TOL * max_sv.max(1e-300) {
        return Err(SplatError::DegenerateConfiguration(
            "dlt: projection is not unique (coplanar or collinear points)".into(),
        ));
    }
    let p = vt.row(order[0]);

    // Undo the normalization: P = T2⁻¹ · P' · T3.
    let pn = Matrix3::new(
        p[0], p[1], p[2], p[4], p[5], p[6], p[8], p[9], p[10],
    );
    let pt = Vector3::new(p[3], p[7], p[11]);
    let t2_inv = Matrix3::new(1.0 / s2, 0.0, c2.x, 0.0, 1.0 / s2, c2.y, 0.0, 0.0, 1.0);
    #[rustfmt::skip]
    let t3 = Matrix4::new(
        s3, 0.0, 0.0, -s3 * c3.x,
        0.0, s3, 0.0, -s3 * c3.y,
        0.0, 0.0, s3, -s3 * c3.z,
        0.0, 0.0, 0.0, 1.0,
    );
    let mut full = Matrix4::identity();
    full.fixed_view_mut::<3, 3>(0, 0).copy_from(&(t2_inv * pn));
    full.fixed_view_mut::<3, 1>(0, 3).copy_from(&(t2_inv * pt));
    let full = full * t3;

    let mut m = full.fixed_view::<3, 3>(0, 0).into_owned();
    let mut t = full.fixed_view::<3, 1>(0, 3).into_owned();
    let row3 = m.row(2).norm();
    if !(row3 > 1e-12) {
        return Err(SplatError::DegenerateConfiguration("dlt: vanishing projection row".into()));
    }
    m /= row3;
    t /= row3;

    // The homogeneous solution carries a global sign; pick the one
    // that puts the majority of points in front of the camera.
    let positive = corrs
        .iter()
        .filter(|c| m.row(2).transpose().dot(&c.point) + t.z > 0.0)
        .count();
    if 2 * positive < n {
        m = -m;
        t = -t;
    }

    let pose = CameraPose::new(nearest_rotation(&m), t);
    if pose.rotation.iter().chain(pose.translation.iter()).all(|v| v.is_finite()) {
        Ok(pose)
    } else {
        Err(SplatError::DegenerateConfiguration("dlt: non-finite projection".into()))
    }
}

/// Total squared reprojection error with clamped depths; the refiner's
/// objective.
fn refine_cost(pose: &CameraPose, intr: &CameraIntrinsics, corrs: &[Correspondence2D3D]) -> f64 {
    corrs
        .iter()
        .map(|c| {
            let p = pose.transform(&c.point);
            let z = p.z.max(Z_CLAMP);
            let proj = Vector2::new(intr.fx * p.x / z + intr.cx, intr.fy * p.y / z + intr.cy);
            (proj - c.pixel).norm_squared()
        })
        .sum()
}

/// Damped Gauss–Newton on the rigid tangent (left perturbation
/// R ← exp([ω]×)·R, T ← T + t). Stops when the accepted step norm
/// drops below `GN_STEP_TOL`.
fn gn_refine(
    corrs: &[Correspondence2D3D],
    intr: &CameraIntrinsics,
    init: &CameraPose,
) -> crate::Result<CameraPose> {
    let mut pose = init.reorthonormalized();
    let mut cost = refine_cost(&pose, intr, corrs);
    let mut lambda = 1e-9;

    for iter in 0..GN_MAX_ITERS {
        let mut jtj = SMatrix::<f64, 6, 6>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        let mut clamped = false;
        for c in corrs {
            let rx = pose.rotation * c.point;
            let p = rx + pose.translation;
            clamped |= p.z < Z_CLAMP;
            let z = p.z.max(Z_CLAMP);
            let res = Vector2::new(
                intr.fx * p.x / z + intr.cx - c.pixel.x,
                intr.fy * p.y / z + intr.cy - c.pixel.y,
            );
            // ∂π/∂p stacked against ∂p/∂(ω,t) = [−[R·X]× | I].
            let dproj = SMatrix::<f64, 2, 3>::new(
                intr.fx / z,
                0.0,
                -intr.fx * p.x / (z * z),
                0.0,
                intr.fy / z,
                -intr.fy * p.y / (z * z),
            );
            let mut j = SMatrix::<f64, 2, 6>::zeros();
            j.fixed_view_mut::<2, 3>(0, 0).copy_from(&(dproj * (-skew(&rx))));
            j.fixed_view_mut::<2, 3>(0, 3).copy_from(&dproj);
            jtj += j.transpose() * j;
            jtr += j.transpose() * res;
        }

        // Clamped depths blow up individual Jacobian rows and would
        // make any spectrum test meaningless, so only judge rank when
        // the whole cloud sits in front of the camera.
        if iter == 0 && !clamped {
            let sv = jtj.svd(false, false).singular_values;
            let (lo, hi) = (sv.min(), sv.max());
            if !(lo > RANK_TOL * hi.max(1e-300)) {
                return Err(SplatError::DegenerateConfiguration(
                    "pnp: rank-deficient normal equations".into(),
                ));
            }
        }

        let scale = jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        for _ in 0..32 {
            let damped = jtj + SMatrix::<f64, 6, 6>::identity() * (lambda * scale);
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-jtr));
            let candidate = CameraPose::new(
                rotation_exp(&delta.fixed_rows::<3>(0).into_owned()) * pose.rotation,
                pose.translation + delta.fixed_rows::<3>(3).into_owned(),
            )
            .reorthonormalized();
            let new_cost = refine_cost(&candidate, intr, corrs);
            if new_cost <= cost {
                pose = candidate;
                cost = new_cost;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = delta.norm() >= GN_STEP_TOL;
                if !accepted {
                    return Ok(pose);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No step improves the cost anymore; we are at a (local)
            // minimum to working precision.
            return Ok(pose);
        }
    }
    Ok(pose)
}

/// Pose minimizing the total squared reprojection error. Seeded by
/// `init` when given, otherwise by a DLT, then polished with damped
/// Gauss–Newton.
pub fn pnp_least_squares(
    corrs: &[Correspondence2D3D],
    intr: &CameraIntrinsics,
    init: Option<&CameraPose>,
) -> crate::Result<CameraPose> {
    validate(corrs)?;
    let seed = match init {
        Some(p) => *p,
        None => dlt_pose(corrs, intr)?,
    };
    gn_refine(corrs, intr, &seed)
}

/// Number of iterations needed to hit `confidence` given the current
/// inlier fraction; the standard RANSAC stopping bound.
fn iters_needed(inlier_frac: f64, confidence: f64, max_iters: usize) -> usize {
    let w6 = inlier_frac.clamp(0.0, 1.0).powi(6);
    if w6 <= 1e-12 {
        return max_iters;
    }
    if w6 >= 1.0 - 1e-12 {
        return 1;
    }
    let n = (1.0 - confidence).ln() / (1.0 - w6).ln();
    n.ceil().min(max_iters as f64).max(1.0) as usize
}

/// Iterations are evaluated in fixed-size batches so they can run in
/// parallel; per-iteration RNGs are derived from (seed, iteration), so
/// the result is independent of thread count.
const RANSAC_BATCH: usize = 64;

fn iteration_rng(seed: u64, iter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((iter + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// RANSAC around a 6-point DLT + Gauss–Newton minimal solver, with a
/// final least-squares refit on the winning inlier set. Returns the
/// refit pose and its inlier mask. Deterministic for a fixed seed.
pub fn pnp_ransac(
    corrs: &[Correspondence2D3D],
    intr: &CameraIntrinsics,
    cfg: &RansacConfig,
) -> crate::Result<(CameraPose, Vec<bool>)> {
    validate(corrs)?;
    if !(cfg.threshold_px > 0.0) {
        return Err(SplatError::invalid("ransac threshold must be positive"));
    }
    let n = corrs.len();
    let thr_sq = cfg.threshold_px * cfg.threshold_px;

    let evaluate = |iter: usize| -> Option<(usize, CameraPose)> {
        let mut rng = iteration_rng(cfg.seed, iter as u64);
        let sample = rand::seq::index::sample(&mut rng, n, 6);
        let minimal: Vec<Correspondence2D3D> = sample.iter().map(|i| corrs[i]).collect();
        let seed_pose = dlt_pose(&minimal, intr).ok()?;
        let pose = gn_refine(&minimal, intr, &seed_pose).ok()?;
        let count = corrs.iter().filter(|c| reproj_sq(&pose, intr, c) < thr_sq).count();
        Some((count, pose))
    };

    let mut best: Option<(usize, CameraPose)> = None;
    let mut needed = cfg.max_iters;
    let mut done = 0;
    while done < needed {
        let batch = RANSAC_BATCH.min(needed - done);
        let results = parallel::map_indexed(batch, |i| evaluate(done + i));
        for r in results.into_iter().flatten() {
            // Strict improvement keeps the earliest of tied models, so
            // the outcome does not depend on batch boundaries.
            if best.as_ref().is_none_or(|b| r.0 > b.0) {
                needed = iters_needed(r.0 as f64 / n as f64, cfg.confidence, cfg.max_iters)
                    .max(done + 1);
                best = Some(r);
            }
        }
        done += batch;
    }

    let Some((count, pose)) = best else {
        return Err(SplatError::EstimationFailed(
            "ransac: no minimal sample produced a model".into(),
        ));
    };
    if count < 6 {
        return Err(SplatError::EstimationFailed(format!(
            "ransac: best model has {count} inliers, need 6"
        )));
    }
    let inliers: Vec<Correspondence2D3D> =
        corrs.iter().filter(|c| reproj_sq(&pose, intr, c) < thr_sq).copied().collect();
    let refit = gn_refine(&inliers, intr, &pose)?;
    let mask: Vec<bool> = corrs.iter().map(|c| reproj_sq(&refit, intr, c) < thr_sq).collect();
    Ok((refit, mask))
}

/// World-to-camera pose of `frame_index` (relative to frame 0, whose
/// pose is the identity by convention) from its pixel-aligned means.
pub fn relative_pose_from_scene(
    scene: &SplatScene,
    frame_index: usize,
    method: &PoseMethod,
) -> crate::Result<CameraPose> {
    let Some(frame) = scene.frames.get(frame_index) else {
        return Err(SplatError::invalid(format!(
            "frame index {frame_index} out of range for {} frames",
            scene.frames.len()
        )));
    };
    if frame_index == 0 {
        return Ok(CameraPose::IDENTITY);
    }
    let corrs: Vec<Correspondence2D3D> = frame
        .gaussians
        .enumerate()
        .filter(|(_, _, g)| g.mean.iter().all(|v| v.is_finite()))
        .map(|(col, row, g)| Correspondence2D3D {
            pixel: Vector2::new(col as f64 + 0.5, row as f64 + 0.5),
            point: g.mean,
        })
        .collect();
    match method {
        PoseMethod::LeastSquares => pnp_least_squares(&corrs, &frame.intrinsics, None),
        PoseMethod::Ransac(cfg) => pnp_ransac(&corrs, &frame.intrinsics, cfg).map(|(p, _)| p),
    }
}

/// Rotation angle between the two rotations and angle between the two
/// translation directions, both in degrees. Angles come from
/// atan2(sin, cos) rather than acos, which keeps precision linear in
/// the perturbation near 0 and 180 instead of √ε.
pub fn pose_errors(pred: &CameraPose, gt: &CameraPose) -> PoseError {
    let d = pred.rotation.transpose() * gt.rotation;
    let sin_vec = 0.5
        * Vector3::new(d[(2, 1)] - d[(1, 2)], d[(0, 2)] - d[(2, 0)], d[(1, 0)] - d[(0, 1)]);
    let rot_deg = sin_vec.norm().atan2((d.trace() - 1.0) * 0.5).to_degrees();
    let trans_deg = if gt.translation.norm() < 1e-9 {
        0.0
    } else {
        let cross = pred.translation.cross(&gt.translation).norm();
        cross.atan2(pred.translation.dot(&gt.translation)).to_degrees()
    };
    PoseError { rot_deg, trans_deg }
}

/// AUC of the cumulative recall curve of e = max(rot, trans) on [0, τ]
/// for each threshold τ. The step function integrates exactly to
/// mean(clip((τ − e)/τ, 0, 1)).
pub fn pose_auc(errors: &[PoseError], thresholds: &[f64]) -> AUCResult {
    assert!(!errors.is_empty(), "pose_auc needs at least one error");
    let per: Vec<f64> = errors.iter().map(|e| e.rot_deg.max(e.trans_deg)).collect();
    let auc = thresholds
        .iter()
        .map(|&t| per.iter().map(|&e| ((t - e) / t).clamp(0.0, 1.0)).sum::<f64>() / per.len() as f64)
        .collect();
    AUCResult { thresholds: thresholds.to_vec(), auc }
}
