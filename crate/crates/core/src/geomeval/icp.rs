//! Similarity registration of point clouds: closed-form alignment of
//! corresponded sets, and ICP for clouds without correspondences.

use nalgebra::{Matrix3, Vector3};

use crate::geomeval::kdtree::KdTree;
use crate::{Result, SplatError};

/// Similarity transform p -> scale * rotation * p + translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim3 {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Sim3 {
    pub const IDENTITY: Sim3 = Sim3 {
        scale: 1.0,
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        translation: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }
}

/// Ratio below which the second covariance eigenvalue marks a collinear set.
const COLLINEAR_TOL: f64 = 1e-12;
/// ICP stops once the RMS residual changes by less than this.
const ICP_RMS_TOL: f64 = 1e-9;

fn check_cloud(points: &[Vector3<f64>], what: &str) -> Result<()> {
    if points.len() < 3 {
        return Err(SplatError::invalid(format!("{what}: need at least 3 points")));
    }
    if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(SplatError::NonFinite(format!("{what}: nonfinite point")));
    }
    let n = points.len() as f64;
    let mean: Vector3<f64> = points.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let mut eigs = cov.symmetric_eigenvalues();
    eigs.as_mut_slice().sort_by(f64::total_cmp);
    if eigs[1] <= COLLINEAR_TOL * eigs[2].max(f64::MIN_POSITIVE) {
        return Err(SplatError::DegenerateConfiguration(format!(
            "{what}: points are collinear"
        )));
    }
    Ok(())
}

/// Least-squares similarity aligning corresponded clouds: minimizes
/// sum |dst_i - (s R src_i + t)|^2 via the SVD of the cross-covariance,
/// with the determinant sign fixed so the rotation is proper.
pub fn umeyama(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<Sim3> {
    if src.len() != dst.len() {
        return Err(SplatError::invalid("umeyama: cloud sizes differ"));
    }
    check_cloud(src, "umeyama src")?;
    check_cloud(dst, "umeyama dst")?;
    let n = src.len() as f64;
    let mu_s: Vector3<f64> = src.iter().sum::<Vector3<f64>>() / n;
    let mu_d: Vector3<f64> = dst.iter().sum::<Vector3<f64>>() / n;

    let mut sigma_s = 0.0;
    let mut cross = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let sc = s - mu_s;
        let dc = d - mu_d;
        sigma_s += sc.norm_squared();
        cross += dc * sc.transpose();
    }
    sigma_s /= n;
    cross /= n;

    let svd = cross.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut sign = Vector3::new(1.0, 1.0, 1.0);
    if (u.determinant() * vt.determinant()) < 0.0 {
        // The optimal proper rotation flips the smallest singular direction;
        // the SVD here does not sort, so find it.
        sign[svd.singular_values.imin()] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&sign) * vt;
    let scale = svd.singular_values.dot(&sign) / sigma_s;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(SplatError::DegenerateConfiguration(
            "umeyama: nonpositive scale".into(),
        ));
    }
    let translation = mu_d - scale * (rotation * mu_s);
    Ok(Sim3 { scale, rotation, translation })
}

/// Aligns `src` onto `dst` without known correspondences. Each iteration
/// matches every transformed source point to its exact nearest neighbor in
/// `dst` and refits the similarity on the original points, so convergence is
/// monotone in the matched residual. Local like any ICP: the clouds must
/// start within the basin of the true alignment.
pub fn sim3_icp(src: &[Vector3<f64>], dst: &[Vector3<f64>], max_iters: usize) -> Result<Sim3> {
    check_cloud(src, "sim3_icp src")?;
    check_cloud(dst, "sim3_icp dst")?;
    let tree = KdTree::build(dst);
    let mut transform = moment_init(src, dst);
    let mut prev_rms = f64::INFINITY;
    for _ in 0..max_iters {
        let mut matched = Vec::with_capacity(src.len());
        let mut sq_sum = 0.0;
        for p in src {
            let q = transform.apply(p);
            let (idx, dist) = tree.nearest(&q);
            matched.push(dst[idx]);
            sq_sum += dist * dist;
        }
        let rms = (sq_sum / src.len() as f64).sqrt();
        if (prev_rms - rms).abs() < ICP_RMS_TOL {
            break;
        }
        prev_rms = rms;
        transform = umeyama(src, &matched)?;
    }
    Ok(transform)
}

/// Rotation-free starting guess: match centroids and spread. Exact in scale
/// and translation when the clouds differ by a pure similarity, which keeps
/// the nearest-neighbor matching from collapsing across large scale gaps.
fn moment_init(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Sim3 {
    let var = |pts: &[Vector3<f64>]| {
        let n = pts.len() as f64;
        let mu: Vector3<f64> = pts.iter().sum::<Vector3<f64>>() / n;
        (pts.iter().map(|p| (p - mu).norm_squared()).sum::<f64>() / n, mu)
    };
    let (var_s, mu_s) = var(src);
    let (var_d, mu_d) = var(dst);
    let scale = if var_s > 0.0 && var_d > 0.0 { (var_d / var_s).sqrt() } else { 1.0 };
    Sim3 {
        scale,
        rotation: Matrix3::identity(),
        translation: mu_d - scale * mu_s,
    }
}
