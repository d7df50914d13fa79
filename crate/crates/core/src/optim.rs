//! Adam-based fitting of splat scenes and single-view pose refinement.
//!
//! Scales are optimized in log space, opacity through a logit, colors
//! clamped to [0, 1], and quaternions renormalized after every step.

use crate::camera::{rotation_exp, Camera, CameraIntrinsics, CameraPose};
use crate::grid::Grid;
use crate::priors::{total_loss, total_loss_grad, LossOptions, LossReport, TargetView};
use crate::raster::{render_backward, render_view, BufferGrads, RasterConfig};
use crate::scene::SplatScene;
use crate::splat::{GaussianMode, Quaternion};
use nalgebra::Vector3;

/// Parameters per splat in the flat optimization vector:
/// mean(3) quat(4) log-scales(3) opacity-logit(1) color(3).
const PARAMS_PER_SPLAT: usize = 14;

/// Opacities are pulled this far off the logit's poles.
pub const OPACITY_CLAMP: f64 = 1e-6;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Diagonal Adam with bias correction, β = (0.9, 0.999), ε = 1e-8.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(dim: usize) -> Self {
        Adam { m: vec![0.0; dim], v: vec![0.0; dim], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// One descent step with a per-coordinate step size.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        assert_eq!(lr.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr[i] * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Per-class Adam step sizes. Means move in world units, so their step
/// scales with the scene extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub mean: f64,
    pub quat: f64,
    pub log_scale: f64,
    pub opacity_logit: f64,
    pub color: f64,
}

impl StepSizes {
    pub fn for_scene(scene: &SplatScene) -> Self {
        StepSizes {
            mean: 1e-3 * scene.radius().max(1e-6),
            quat: 1e-3,
            log_scale: 5e-3,
            opacity_logit: 5e-2,
            color: 2.5e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub iterations: usize,
    pub options: LossOptions,
    pub steps: StepSizes,
}

impl FitConfig {
    pub fn for_scene(scene: &SplatScene) -> Self {
        FitConfig {
            iterations: 300,
            options: LossOptions::for_scene(scene),
            steps: StepSizes::for_scene(scene),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub scene: SplatScene,
    /// Loss before each step, plus a final evaluation; length is
    /// `iterations + 1`.
    pub history: Vec<LossReport>,
}

fn pack(scene: &SplatScene, params: &mut Vec<f64>) -> crate::Result<()> {
    params.clear();
    for (i, g) in scene.iter_gaussians().enumerate() {
        params.extend_from_slice(&[g.mean.x, g.mean.y, g.mean.z]);
        params.extend_from_slice(&[g.rotation.w, g.rotation.x, g.rotation.y, g.rotation.z]);
        let optimized_axes = if g.mode == GaussianMode::TwoDGS { 2 } else { 3 };
        for a in 0..3 {
            if a < optimized_axes {
                if g.scales[a] <= 0.0 {
                    return Err(crate::SplatError::invalid(format!(
                        "splat {i}: scale {a} must be positive to fit in log space"
                    )));
                }
                params.push(g.scales[a].ln());
            } else {
                params.push(0.0); // frozen surfel thickness slot
            }
        }
        params.push(logit(g.opacity.clamp(OPACITY_CLAMP, 1.0 - OPACITY_CLAMP)));
        params.extend_from_slice(&[g.color.x, g.color.y, g.color.z]);
    }
    Ok(())
}

/// Writes the parameter vector back into the scene, applying the
/// constraint projections (unit quats, [0, 1] colors) to both.
fn unpack(params: &mut [f64], scene: &mut SplatScene) {
    for (i, g) in scene.iter_gaussians_mut().enumerate() {
        let p = &mut params[i * PARAMS_PER_SPLAT..(i + 1) * PARAMS_PER_SPLAT];
        g.mean = Vector3::new(p[0], p[1], p[2]);
        let q = Quaternion::new(p[3], p[4], p[5], p[6]).normalized();
        p[3] = q.w;
        p[4] = q.x;
        p[5] = q.y;
        p[6] = q.z;
        g.rotation = q;
        let optimized_axes = if g.mode == GaussianMode::TwoDGS { 2 } else { 3 };
        for a in 0..3 {
            g.scales[a] = if a < optimized_axes { p[7 + a].exp() } else { 0.0 };
        }
        g.opacity = sigmoid(p[10]);
        for c in 0..3 {
            p[11 + c] = p[11 + c].clamp(0.0, 1.0);
            g.color[c] = p[11 + c];
        }
    }
}

/// Pulls the per-splat gradients into the reparameterized space.
fn reparam_grads(scene: &SplatScene, grad: &crate::raster::SceneGrad, out: &mut [f64]) {
    for (i, g) in scene.iter_gaussians().enumerate() {
        let sg = &grad.per_gaussian[i];
        let o = &mut out[i * PARAMS_PER_SPLAT..(i + 1) * PARAMS_PER_SPLAT];
        o[0] = sg.mean.x;
        o[1] = sg.mean.y;
        o[2] = sg.mean.z;
        for k in 0..4 {
            o[3 + k] = sg.quat[k];
        }
        let optimized_axes = if g.mode == GaussianMode::TwoDGS { 2 } else { 3 };
        for a in 0..3 {
            // d/d(ln s) = s · d/ds.
            o[7 + a] = if a < optimized_axes { sg.scales[a] * g.scales[a] } else { 0.0 };
        }
        // d/d(logit α) = α(1−α) · d/dα.
        o[10] = sg.opacity * g.opacity * (1.0 - g.opacity);
        o[11] = sg.color.x;
        o[12] = sg.color.y;
        o[13] = sg.color.z;
    }
}

fn step_size_vector(scene: &SplatScene, steps: &StepSizes) -> Vec<f64> {
    let mut lr = Vec::with_capacity(scene.num_gaussians() * PARAMS_PER_SPLAT);
    for g in scene.iter_gaussians() {
        lr.extend_from_slice(&[steps.mean; 3]);
        lr.extend_from_slice(&[steps.quat; 4]);
        let optimized_axes = if g.mode == GaussianMode::TwoDGS { 2 } else { 3 };
        for a in 0..3 {
            lr.push(if a < optimized_axes { steps.log_scale } else { 0.0 });
        }
        lr.push(steps.opacity_logit);
        lr.extend_from_slice(&[steps.color; 3]);
    }
    lr
}

/// Fits a scene to target views with Adam, holding all cameras fixed.
///
/// Aborts with `NonFinite` the moment any loss term or gradient entry
/// stops being finite, naming the term.
pub fn fit_scene(
    init: &SplatScene,
    frame_cams: &[CameraPose],
    views: &[TargetView],
    cfg: &FitConfig,
) -> crate::Result<FitResult> {
    let mut scene = init.clone();
    let mut params = Vec::new();
    pack(&scene, &mut params)?;
    let lr = step_size_vector(&scene, &cfg.steps);
    let mut adam = Adam::new(params.len());
    let mut grads = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(cfg.iterations + 1);

    for _ in 0..cfg.iterations {
        let (report, grad) = total_loss_grad(&scene, frame_cams, views, &cfg.options)?;
        if let Some(term) = report.first_non_finite() {
            return Err(crate::SplatError::NonFinite(term.to_string()));
        }
        reparam_grads(&scene, &grad, &mut grads);
        if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
            return Err(crate::SplatError::NonFinite(format!(
                "gradient entry {bad}"
            )));
        }
        history.push(report);
        adam.step(&mut params, &grads, &lr);
        unpack(&mut params, &mut scene);
    }
    let report = total_loss(&scene, frame_cams, views, &cfg.options)?;
    if let Some(term) = report.first_non_finite() {
        return Err(crate::SplatError::NonFinite(term.to_string()));
    }
    history.push(report);
    Ok(FitResult { scene, history })
}

/// Worst finite-difference mismatch found for one parameter class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckEntry {
    pub class: &'static str,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Central-difference validation of `total_loss_grad` over a set of
/// splats. Returns the worst entry per parameter class; relative error
/// is |a − n| / max(|a|, |n|, 1e-6).
pub fn gradient_check(
    scene: &SplatScene,
    frame_cams: &[CameraPose],
    views: &[TargetView],
    opts: &LossOptions,
    splats: &[usize],
    step: f64,
) -> crate::Result<Vec<GradCheckEntry>> {
    let n = scene.num_gaussians();
    for &idx in splats {
        if idx >= n {
            return Err(crate::SplatError::invalid(format!(
                "splat index {idx} out of range (scene has {n})"
            )));
        }
    }
    let (_, grad) = total_loss_grad(scene, frame_cams, views, opts)?;
    let eval = |s: &SplatScene| -> crate::Result<f64> {
        Ok(total_loss(s, frame_cams, views, opts)?.total)
    };

    type Bump = fn(&mut crate::splat::Gaussian3D, usize, f64);
    let classes: [(&'static str, Bump, usize); 5] = [
        ("mean", |g, i, d| g.mean[i] += d, 3),
        (
            "quat",
            |g, i, d| match i {
                0 => g.rotation.w += d,
                1 => g.rotation.x += d,
                2 => g.rotation.y += d,
                _ => g.rotation.z += d,
            },
            4,
        ),
        ("scales", |g, i, d| g.scales[i] += d, 3),
        ("opacity", |g, _, d| g.opacity += d, 1),
        ("color", |g, i, d| g.color[i] += d, 3),
    ];

    let mut out = Vec::new();
    for (class, bump, dims) in classes {
        let mut worst = GradCheckEntry { class, analytic: 0.0, numeric: 0.0, rel_err: 0.0 };
        for &idx in splats {
            let g = &grad.per_gaussian[idx];
            for i in 0..dims {
                let analytic = match class {
                    "mean" => g.mean[i],
                    "quat" => g.quat[i],
                    "scales" => g.scales[i],
                    "opacity" => g.opacity,
                    _ => g.color[i],
                };
                let mut plus = scene.clone();
                bump(plus.iter_gaussians_mut().nth(idx).unwrap(), i, step);
                let mut minus = scene.clone();
                bump(minus.iter_gaussians_mut().nth(idx).unwrap(), i, -step);
                let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * step);
                let rel_err =
                    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                if rel_err > worst.rel_err {
                    worst = GradCheckEntry { class, analytic, numeric, rel_err };
                }
            }
        }
        out.push(worst);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PoseRefineConfig {
    pub iterations: usize,
    pub raster: RasterConfig,
    /// Step size on the rotation tangent, radians.
    pub lr_rot: f64,
    /// Step size on the translation, world units.
    pub lr_trans: f64,
}

impl PoseRefineConfig {
    pub fn for_scene(scene: &SplatScene) -> Self {
        PoseRefineConfig {
            iterations: 100,
            raster: RasterConfig::for_scene(scene),
            lr_rot: 2e-3,
            lr_trans: 2e-3 * scene.radius().max(1e-6),
        }
    }
}

/// Refines a world-to-camera pose by photometric descent against one
/// target image, with the scene frozen.
///
/// Returns the refined pose and the per-iteration photometric loss
/// (including a final evaluation).
pub fn refine_pose(
    scene: &SplatScene,
    intr: &CameraIntrinsics,
    image: &Grid<Vector3<f64>>,
    init: &CameraPose,
    cfg: &PoseRefineConfig,
) -> crate::Result<(CameraPose, Vec<f64>)> {
    let frozen = scene.checksum();
    let mut pose = *init;
    let mut adam = Adam::new(6);
    let mut tangent = [0.0f64; 6];
    let lr = [cfg.lr_rot, cfg.lr_rot, cfg.lr_rot, cfg.lr_trans, cfg.lr_trans, cfg.lr_trans];
    let mut history = Vec::with_capacity(cfg.iterations + 1);

    for _ in 0..cfg.iterations {
        let cam = Camera::new(*intr, pose);
        let buffers = render_view(scene, &cam, &cfg.raster);
        let (loss, d_color) = crate::priors::photometric_loss_grad(&buffers.color, image, 0.0)?;
        if !loss.is_finite() {
            return Err(crate::SplatError::NonFinite("photometric".into()));
        }
        history.push(loss);
        let mut buffer_grads = BufferGrads::zeros(buffers.width(), buffers.height());
        buffer_grads.color = d_color;
        let (_, pose_grad) = render_backward(scene, &cam, &cfg.raster, &buffer_grads);

        let grads = [
            pose_grad.omega.x,
            pose_grad.omega.y,
            pose_grad.omega.z,
            pose_grad.trans.x,
            pose_grad.trans.y,
            pose_grad.trans.z,
        ];
        // The tangent is re-centered at the current pose every step, so
        // the retraction sees only this step's increment.
        let before = tangent;
        adam.step(&mut tangent, &grads, &lr);
        let d_omega = Vector3::new(
            tangent[0] - before[0],
            tangent[1] - before[1],
            tangent[2] - before[2],
        );
        let d_trans = Vector3::new(
            tangent[3] - before[3],
            tangent[4] - before[4],
            tangent[5] - before[5],
        );
        pose = CameraPose::new(rotation_exp(&d_omega) * pose.rotation, pose.translation + d_trans);
        pose = pose.reorthonormalized();
    }
    let cam = Camera::new(*intr, pose);
    let buffers = render_view(scene, &cam, &cfg.raster);
    history.push(crate::priors::photometric_loss(&buffers.color, image, 0.0)?);
    assert_eq!(scene.checksum(), frozen, "pose refinement must not touch the scene");
    Ok((pose, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PriorWeights;
    use crate::scene::Frame;
    use crate::splat::Gaussian3D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adam_minimizes_a_quadratic() {
        let target = [3.0, -1.5, 0.25];
        let mut x = [0.0; 3];
        let mut adam = Adam::new(3);
        let lr = [0.1; 3];
        for _ in 0..500 {
            let g = [
                2.0 * (x[0] - target[0]),
                2.0 * (x[1] - target[1]),
                2.0 * (x[2] - target[2]),
            ];
            adam.step(&mut x, &g, &lr);
        }
        for i in 0..3 {
            assert!((x[i] - target[i]).abs() < 1e-3, "{:?}", x);
        }
    }

    #[test]
    fn adam_first_step_has_lr_magnitude() {
        // Bias correction makes the first update lr·g/(|g| + ε),
        // essentially lr for any gradient scale well above ε.
        for scale in [1e-3, 1.0, 1e6] {
            let mut x = [0.0];
            let mut adam = Adam::new(1);
            adam.step(&mut x, &[scale], &[0.01]);
            assert!((x[0] + 0.01).abs() < 1e-6, "scale {scale}: {}", x[0]);
        }
    }

    #[test]
    fn sigmoid_logit_roundtrip() {
        for p in [1e-6, 0.25, 0.5, 0.9, 1.0 - 1e-6] {
            assert!((sigmoid(logit(p)) - p).abs() < 1e-12);
        }
    }

    fn ground_truth(seed: u64, n: usize) -> SplatScene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let intr = CameraIntrinsics::centered(n, n, 60.0);
        let cam = Camera::new(intr, CameraPose::IDENTITY);
        let grid = Grid::from_fn(n, n, |c, r| Gaussian3D {
            mean: cam.unproject(c as f64 + 0.5, r as f64 + 0.5, 2.0 + rng.gen_range(-0.05..0.05)),
            rotation: Quaternion::from_axis_angle(Vector3::x(), std::f64::consts::PI),
            scales: Vector3::new(0.15, 0.15, 0.0),
            opacity: 0.9,
            color: Vector3::new(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8)),
            mode: GaussianMode::TwoDGS,
        });
        SplatScene::new(vec![Frame::new(intr, grid)], GaussianMode::TwoDGS)
    }

    fn synthesis_only(scene: &SplatScene) -> LossOptions {
        LossOptions {
            weights: PriorWeights {
                lambda_o: 0.0,
                lambda_a: 0.0,
                lambda_flat: 0.0,
                ..PriorWeights::default()
            },
            ..LossOptions::for_scene(scene)
        }
    }

    #[test]
    fn fit_reduces_the_loss() {
        let gt = ground_truth(31, 5);
        let opts = synthesis_only(&gt);
        let cam = Camera::new(gt.frames[0].intrinsics, CameraPose::IDENTITY);
        let target = render_view(&gt, &cam, &opts.raster);
        let views = vec![TargetView { camera: cam, image: target.color }];
        let frame_cams = vec![CameraPose::IDENTITY];

        let mut init = gt.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for g in init.iter_gaussians_mut() {
            g.color += Vector3::new(
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
            );
            g.color = g.color.map(|c| c.clamp(0.0, 1.0));
            g.mean.z += rng.gen_range(-0.05..0.05);
        }
        let cfg = FitConfig { iterations: 60, options: opts, steps: StepSizes::for_scene(&init) };
        let result = fit_scene(&init, &frame_cams, &views, &cfg).unwrap();
        let first = result.history.first().unwrap().total;
        let last = result.history.last().unwrap().total;
        assert!(last < 0.5 * first, "loss {first} -> {last}");
    }

    #[test]
    fn fit_is_stationary_at_an_exact_match() {
        // Targets rendered from the init itself: L1 is exactly zero,
        // its subgradient is zero, and the first Adam step is a no-op.
        // The log/logit reparameterization reintroduces an ulp of
        // roundtrip noise per iteration, so only one step is exact.
        let gt = ground_truth(33, 4);
        let opts = synthesis_only(&gt);
        let cam = Camera::new(gt.frames[0].intrinsics, CameraPose::IDENTITY);
        let target = render_view(&gt, &cam, &opts.raster);
        let views = vec![TargetView { camera: cam, image: target.color }];
        let cfg = FitConfig { iterations: 1, options: opts, steps: StepSizes::for_scene(&gt) };
        let result = fit_scene(&gt, &[CameraPose::IDENTITY], &views, &cfg).unwrap();
        assert_eq!(result.history[0].total, 0.0);
        assert!(result.history[1].total < 1e-12, "{}", result.history[1].total);
        for (a, b) in gt.iter_gaussians().zip(result.scene.iter_gaussians()) {
            assert_eq!(a.mean, b.mean);
            assert_eq!(a.color, b.color);
            assert!((a.opacity - b.opacity).abs() < 1e-12);
            assert!((a.scales - b.scales).norm() < 1e-12);
        }
    }

    #[test]
    fn non_finite_input_aborts_with_the_term_name() {
        // A NaN color reaches the composited image and poisons the L1.
        // (A NaN mean would merely be culled by the projection guards.)
        let gt = ground_truth(34, 4);
        let opts = synthesis_only(&gt);
        let cam = Camera::new(gt.frames[0].intrinsics, CameraPose::IDENTITY);
        let target = render_view(&gt, &cam, &opts.raster);
        let views = vec![TargetView { camera: cam, image: target.color }];
        let mut poisoned = gt.clone();
        poisoned.iter_gaussians_mut().next().unwrap().color.x = f64::NAN;
        let cfg = FitConfig { iterations: 3, options: opts, steps: StepSizes::for_scene(&gt) };
        let err = fit_scene(&poisoned, &[CameraPose::IDENTITY], &views, &cfg).unwrap_err();
        match err {
            crate::SplatError::NonFinite(term) => assert_eq!(term, "synthesis"),
            other => panic!("expected NonFinite, got {other}"),
        }
    }

    #[test]
    fn gradient_check_passes_on_a_random_scene() {
        let gt = ground_truth(35, 5);
        let mut opts = synthesis_only(&gt);
        opts.weights = PriorWeights::default();
        opts.raster.cutoff = 0.0;
        let cam = Camera::new(gt.frames[0].intrinsics, CameraPose::IDENTITY);
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let image = Grid::from_fn(5, 5, |_, _| {
            Vector3::new(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8))
        });
        let views = vec![TargetView { camera: cam, image }];
        let entries =
            gradient_check(&gt, &[CameraPose::IDENTITY], &views, &opts, &[0, 12, 24], 1e-6)
                .unwrap();
        assert_eq!(entries.len(), 5);
        for e in &entries {
            assert!(
                e.rel_err < 1e-4 || (e.analytic - e.numeric).abs() < 1e-7,
                "{}: {} vs {} (rel {})",
                e.class,
                e.analytic,
                e.numeric,
                e.rel_err
            );
        }
    }

    #[test]
    fn refine_pose_recovers_a_small_perturbation() {
        let gt = ground_truth(37, 6);
        let intr = gt.frames[0].intrinsics;
        let true_pose = CameraPose::new(
            rotation_exp(&Vector3::new(0.01, -0.02, 0.005)),
            Vector3::new(0.02, 0.01, -0.01),
        );
        let cfg = PoseRefineConfig { iterations: 150, ..PoseRefineConfig::for_scene(&gt) };
        let target = render_view(&gt, &Camera::new(intr, true_pose), &cfg.raster);

        let offset = Vector3::new(0.01, 0.008, -0.012); // ~1 degree
        let init = CameraPose::new(rotation_exp(&offset) * true_pose.rotation, true_pose.translation);
        let angle = |p: &CameraPose| {
            let r = p.rotation * true_pose.rotation.transpose();
            (((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0)).acos()
        };
        let (refined, history) = refine_pose(&gt, &intr, &target.color, &init, &cfg).unwrap();
        assert!(history.last().unwrap() < &(0.2 * history[0]), "{history:?}");
        assert!(
            angle(&refined) < 0.25 * angle(&init),
            "rotation error {} -> {}",
            angle(&init),
            angle(&refined)
        );
    }
}
