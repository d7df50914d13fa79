use nalgebra::Vector3;

/// Opacity-times-footprint is clamped just below 1 so transmittance
/// never reaches exact zero and the backward division stays finite.
pub const ALPHA_MAX: f64 = 1.0 - 1e-7;

/// Norm below which a composited normal is left undefined.
pub const NORMAL_EPS: f64 = 1e-12;

/// One depth-sorted contribution to a pixel.
#[derive(Debug, Clone, Copy)]
pub struct SplatSample {
    /// Gaussian footprint value G' in (0, 1].
    pub footprint: f64,
    pub opacity: f64,
    pub depth: f64,
    pub color: Vector3<f64>,
    pub normal: Vector3<f64>,
}

/// Composited pixel outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelOut {
    pub color: Vector3<f64>,
    pub depth_acc: f64,
    /// `None` when the accumulated weight is at or below `eps_w`.
    pub depth_exp: Option<f64>,
    /// `None` when the weighted normal sum is numerically zero.
    pub normal: Option<Vector3<f64>>,
    pub weight_sum: f64,
}

/// Front-to-back alpha compositing over depth-sorted samples:
/// w_k = T_k·α_k·G'_k with T_k = Π_{i<k}(1 − α_i·G'_i).
///
/// The input must be sorted ascending by depth; debug builds panic on a
/// violation. Background is black.
pub fn composite_pixel(samples: &[SplatSample], eps_w: f64) -> PixelOut {
    debug_assert!(
        samples.windows(2).all(|p| p[0].depth <= p[1].depth),
        "composite_pixel requires depth-sorted input"
    );
    let mut color = Vector3::zeros();
    let mut depth_acc = 0.0;
    let mut normal_raw = Vector3::zeros();
    let mut weight_sum = 0.0;
    let mut transmittance = 1.0;
    for s in samples {
        let a = (s.opacity * s.footprint).min(ALPHA_MAX);
        let w = transmittance * a;
        color += w * s.color;
        depth_acc += w * s.depth;
        normal_raw += w * s.normal;
        weight_sum += w;
        transmittance *= 1.0 - a;
    }
    let depth_exp = if weight_sum > eps_w { Some(depth_acc / weight_sum) } else { None };
    let n = normal_raw.norm();
    let normal = if n > NORMAL_EPS { Some(normal_raw / n) } else { None };
    PixelOut { color, depth_acc, depth_exp, normal, weight_sum }
}

/// Cotangents flowing into one pixel's outputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct PixelGrad {
    pub color: Vector3<f64>,
    pub depth_acc: f64,
    /// Ignored where the expected depth is undefined.
    pub depth_exp: f64,
    pub normal: Vector3<f64>,
    pub weight_sum: f64,
}

/// Per-sample gradients produced by the pixel backward pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleGrad {
    pub footprint: f64,
    pub opacity: f64,
    pub depth: f64,
    pub color: Vector3<f64>,
    pub normal: Vector3<f64>,
}

/// Reverse pass of `composite_pixel`. Recomputes the forward recurrence,
/// then walks it backward with a suffix sum so the whole pixel costs
/// O(K).
pub fn composite_pixel_backward(
    samples: &[SplatSample],
    eps_w: f64,
    grad: &PixelGrad,
    out: &mut [SampleGrad],
) {
    assert_eq!(samples.len(), out.len());
    let k_count = samples.len();
    if k_count == 0 {
        return;
    }

    // Forward replay, keeping per-sample alpha, transmittance, weight.
    let mut alphas = vec![0.0; k_count];
    let mut trans = vec![0.0; k_count];
    let mut weights = vec![0.0; k_count];
    let mut depth_acc = 0.0;
    let mut normal_raw = Vector3::zeros();
    let mut weight_sum = 0.0;
    let mut t = 1.0;
    for (k, s) in samples.iter().enumerate() {
        let a = (s.opacity * s.footprint).min(ALPHA_MAX);
        let w = t * a;
        alphas[k] = a;
        trans[k] = t;
        weights[k] = w;
        depth_acc += w * s.depth;
        normal_raw += w * s.normal;
        weight_sum += w;
        t *= 1.0 - a;
    }

    // Fold the derived outputs into the raw accumulators.
    let d_color = grad.color;
    let mut d_depth_acc = grad.depth_acc;
    let mut d_weight = grad.weight_sum;
    if weight_sum > eps_w {
        d_depth_acc += grad.depth_exp / weight_sum;
        d_weight -= grad.depth_exp * depth_acc / (weight_sum * weight_sum);
    }
    let n_norm = normal_raw.norm();
    let d_normal_raw = if n_norm > NORMAL_EPS {
        let n_hat = normal_raw / n_norm;
        (grad.normal - n_hat * n_hat.dot(&grad.normal)) / n_norm
    } else {
        Vector3::zeros()
    };

    // Suffix scan: S accumulates Σ_{j>k} g_j·w_j where g_j = dL/dw_j.
    let mut suffix = 0.0;
    for k in (0..k_count).rev() {
        let s = &samples[k];
        let g_k = d_color.dot(&s.color)
            + d_depth_acc * s.depth
            + d_normal_raw.dot(&s.normal)
            + d_weight;
        let da = trans[k] * g_k - suffix / (1.0 - alphas[k]);
        suffix += g_k * weights[k];

        let raw_alpha = s.opacity * s.footprint;
        let (d_opacity, d_footprint) = if raw_alpha < ALPHA_MAX {
            (da * s.footprint, da * s.opacity)
        } else {
            (0.0, 0.0)
        };
        out[k] = SampleGrad {
            footprint: d_footprint,
            opacity: d_opacity,
            depth: weights[k] * d_depth_acc,
            color: weights[k] * d_color,
            normal: weights[k] * d_normal_raw,
        };
    }
}
