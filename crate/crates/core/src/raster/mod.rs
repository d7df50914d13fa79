//! Projection and depth-sorted alpha compositing of splat scenes into
//! target views, with analytic gradients for every input.

mod composite;
mod grad;
mod render;
mod screen;

pub use composite::{
    composite_pixel, composite_pixel_backward, PixelGrad, PixelOut, SampleGrad, SplatSample,
    ALPHA_MAX, NORMAL_EPS,
};
pub use grad::{BufferGrads, GaussianGrad, PoseGrad, SceneGrad, ScreenGrad};
pub use render::{reference_compositor, render_backward, render_view, render_views, RenderBuffers};
pub use screen::{project_backward, project_gaussian, ScreenGaussian};

/// Which composited depth a consumer reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthRenderer {
    /// D_exp = D_acc / Σw; the default for all evaluation.
    Expected,
    /// Unnormalized D_acc.
    Accumulated,
}

/// Rasterizer settings shared by the forward and backward passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    /// Square scales before placing them on the covariance diagonal
    /// (the usual renderer convention). OFF leaves them linear.
    pub square_scales: bool,
    /// Anti-aliasing floor added to the 2D covariance diagonal, px².
    pub low_pass: f64,
    /// Contributions with footprint below this are skipped, and splats
    /// whose cutoff-radius box misses the image are culled. The default
    /// exp(−9/2) corresponds to a 3σ extent; ≤ 0 disables both.
    pub cutoff: f64,
    /// Splats at or behind this camera-z are culled.
    pub z_near: f64,
    /// Accumulated weight below which the expected depth is undefined.
    pub eps_w: f64,
    /// Floor applied to every scale before projection; gives surfels a
    /// nonzero thickness. Fixed at configuration time, not adapted as
    /// means move.
    pub scale_floor: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            square_scales: true,
            low_pass: 0.3,
            cutoff: (-4.5f64).exp(),
            z_near: 1e-4,
            eps_w: 1e-4,
            scale_floor: 0.0,
        }
    }
}

impl RasterConfig {
    /// Default config with the surfel thickness floor set from the
    /// scene extent (1e-4 of the radius).
    pub fn for_scene(scene: &crate::scene::SplatScene) -> Self {
        RasterConfig { scale_floor: 1e-4 * scene.radius(), ..RasterConfig::default() }
    }

    /// Variant whose per-pixel skip threshold matches the reference
    /// compositor, so the two paths agree bitwise.
    pub fn exhaustive(mut self) -> Self {
        self.cutoff = render::REFERENCE_CUTOFF;
        self
    }
}
