use crate::camera::{Camera, CameraPose};
use crate::grid::Grid;
use crate::priors::{
    alignment_loss, alignment_loss_grad, flatness_loss, flatness_loss_grad, orientation_loss,
    orientation_loss_grad, photometric_loss, photometric_loss_grad, rnc_loss, rnc_loss_grad,
    LossReport, PriorWeights,
};
use crate::raster::{render_view, BufferGrads, RasterConfig, RenderBuffers, SceneGrad};
use crate::scene::SplatScene;
use nalgebra::Vector3;

/// Which geometric consistency term accompanies the synthesis loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationTerm {
    /// Compare each splat's normal against its mean-grid neighbors.
    MeanGridOrientation,
    /// Compare the rendered normal buffer against the normal implied by
    /// the rendered depth, per target view.
    RenderedNormalConsistency {
        /// Treat the depth branch as constant in the backward pass.
        detach_depth: bool,
    },
}

/// Everything the total loss needs besides the scene and the views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    pub weights: PriorWeights,
    /// 0 keeps synthesis pure L1; 0.15 is the value used when the
    /// structural term is wanted.
    pub ssim_weight: f64,
    pub orientation_term: OrientationTerm,
    pub raster: RasterConfig,
}

impl Default for LossOptions {
    fn default() -> Self {
        LossOptions {
            weights: PriorWeights::default(),
            ssim_weight: 0.0,
            orientation_term: OrientationTerm::MeanGridOrientation,
            raster: RasterConfig::default(),
        }
    }
}

impl LossOptions {
    /// Default options with the rasterizer's scale floor derived from
    /// the scene extent.
    pub fn for_scene(scene: &SplatScene) -> Self {
        LossOptions { raster: RasterConfig::for_scene(scene), ..LossOptions::default() }
    }
}

/// A camera to render from plus the image the render should match.
#[derive(Debug, Clone)]
pub struct TargetView {
    pub camera: Camera,
    pub image: Grid<Vector3<f64>>,
}

fn check_views(views: &[TargetView]) -> crate::Result<()> {
    for (i, v) in views.iter().enumerate() {
        if v.image.width() != v.camera.intrinsics.width
            || v.image.height() != v.camera.intrinsics.height
        {
            return Err(crate::SplatError::invalid(format!(
                "view {i}: target image {}x{} does not match intrinsics {}x{}",
                v.image.width(),
                v.image.height(),
                v.camera.intrinsics.width,
                v.camera.intrinsics.height
            )));
        }
    }
    Ok(())
}

fn assemble(report: &mut LossReport, w: &PriorWeights) {
    report.total = report.synthesis
        + w.lambda_o * (report.orient + report.rnc)
        + w.lambda_a * report.align
        + w.lambda_flat * report.flat;
}

/// Weighted training objective:
/// synthesis + λ_o·(orientation or rendered consistency) + λ_a·alignment
/// + λ_flat·flatness. Per-view terms average over `views`.
pub fn total_loss(
    scene: &SplatScene,
    frame_cams: &[CameraPose],
    views: &[TargetView],
    opts: &LossOptions,
) -> crate::Result<LossReport> {
    opts.weights.validate()?;
    check_views(views)?;
    let mut report = LossReport::default();
    let inv_views = if views.is_empty() { 0.0 } else { 1.0 / views.len() as f64 };
    for view in views {
        let buffers = render_view(scene, &view.camera, &opts.raster);
        report.synthesis +=
            inv_views * photometric_loss(&buffers.color, &view.image, opts.ssim_weight)?;
        if let OrientationTerm::RenderedNormalConsistency { .. } = opts.orientation_term {
            report.rnc +=
                inv_views * rnc_loss(&buffers, &view.camera.intrinsics, opts.raster.eps_w);
        }
    }
    if opts.orientation_term == OrientationTerm::MeanGridOrientation {
        report.orient = orientation_loss(scene, &opts.weights)?;
    }
    report.align = alignment_loss(scene, frame_cams)?;
    report.flat = flatness_loss(scene);
    assemble(&mut report, &opts.weights);
    Ok(report)
}

/// Total loss plus its gradient with respect to every splat parameter.
/// Cameras are held fixed here; pose gradients come from the renderer's
/// backward pass when a pose is being optimized on its own.
pub fn total_loss_grad(
    scene: &SplatScene,
    frame_cams: &[CameraPose],
    views: &[TargetView],
    opts: &LossOptions,
) -> crate::Result<(LossReport, SceneGrad)> {
    opts.weights.validate()?;
    check_views(views)?;
    let w = &opts.weights;
    let mut report = LossReport::default();
    let mut grad = SceneGrad::zeros(scene);
    let inv_views = if views.is_empty() { 0.0 } else { 1.0 / views.len() as f64 };

    for view in views {
        let buffers: RenderBuffers = render_view(scene, &view.camera, &opts.raster);
        let (synth, d_color) =
            photometric_loss_grad(&buffers.color, &view.image, opts.ssim_weight)?;
        report.synthesis += inv_views * synth;

        let mut buffer_grads = BufferGrads::zeros(buffers.width(), buffers.height());
        for (a, b) in buffer_grads.color.iter_mut().zip(d_color.iter()) {
            *a = inv_views * b;
        }
        if let OrientationTerm::RenderedNormalConsistency { detach_depth } = opts.orientation_term
        {
            let (rnc, rnc_grads) =
                rnc_loss_grad(&buffers, &view.camera.intrinsics, opts.raster.eps_w, detach_depth);
            report.rnc += inv_views * rnc;
            buffer_grads.add_scaled(&rnc_grads, w.lambda_o * inv_views);
        }
        let (view_grad, _pose) = crate::raster::render_backward(
            scene,
            &view.camera,
            &opts.raster,
            &buffer_grads,
        );
        grad.add_assign(&view_grad);
    }

    if opts.orientation_term == OrientationTerm::MeanGridOrientation {
        let (orient, orient_grad) = orientation_loss_grad(scene, w)?;
        report.orient = orient;
        grad.add_scaled(&orient_grad, w.lambda_o);
    }
    let (align, align_grad, _pose_grads) = alignment_loss_grad(scene, frame_cams)?;
    report.align = align;
    grad.add_scaled(&align_grad, w.lambda_a);

    let (flat, flat_grad) = flatness_loss_grad(scene);
    report.flat = flat;
    grad.add_scaled(&flat_grad, w.lambda_flat);

    assemble(&mut report, w);
    Ok((report, grad))
}
