//! Training losses: photometric synthesis, the orientation prior with
//! edge-aware weights, the pixel-alignment prior, the flatness
//! regularizer, rendered normal-depth consistency, and their weighted
//! total.

mod alignment;
mod edges;
mod flatness;
mod orientation;
mod photometric;
mod rnc;
mod total;

pub use alignment::{alignment_loss, alignment_loss_grad};
pub use edges::{
    central_differences, edge_weights, edge_weights_backward, normal_from_means, EdgeWeights,
    DEGENERATE_CROSS,
};
pub use flatness::{flatness_loss, flatness_loss_grad};
pub use orientation::{orientation_loss, orientation_loss_grad};
pub use photometric::{photometric_loss, photometric_loss_grad, ssim};
pub use rnc::{rnc_loss, rnc_loss_grad};
pub use total::{total_loss, total_loss_grad, LossOptions, OrientationTerm, TargetView};

/// Loss weights and constants. Defaults are the fixed values the whole
/// pipeline is tuned around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorWeights {
    pub lambda_o: f64,
    pub lambda_a: f64,
    /// Applied in ThreeDGS mode only.
    pub lambda_flat: f64,
    pub w0: f64,
    pub kappa: f64,
    pub q_quantile: f64,
    pub epsilon: f64,
    pub delta_huber: f64,
}

impl Default for PriorWeights {
    fn default() -> Self {
        PriorWeights {
            lambda_o: 0.05,
            lambda_a: 0.1,
            lambda_flat: 1000.0,
            w0: 10.0,
            kappa: 4.0,
            q_quantile: 0.95,
            epsilon: 1e-8,
            delta_huber: 0.1,
        }
    }
}

impl PriorWeights {
    pub fn validate(&self) -> crate::Result<()> {
        if self.lambda_o < 0.0
            || self.lambda_a < 0.0
            || self.lambda_flat < 0.0
            || self.w0 < 0.0
            || self.kappa < 0.0
            || self.epsilon < 0.0
            || self.delta_huber < 0.0
        {
            return Err(crate::SplatError::invalid("prior weights must be nonnegative"));
        }
        if !(self.q_quantile > 0.0 && self.q_quantile < 1.0) {
            return Err(crate::SplatError::invalid("q_quantile must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Per-term loss values; `total` is the weighted sum actually optimized.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub synthesis: f64,
    pub orient: f64,
    pub align: f64,
    pub flat: f64,
    pub rnc: f64,
    pub total: f64,
}

impl LossReport {
    /// Name of the first non-finite term, if any; used for abort
    /// diagnostics.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        [
            (self.synthesis, "synthesis"),
            (self.orient, "orient"),
            (self.align, "align"),
            (self.flat, "flat"),
            (self.rnc, "rnc"),
            (self.total, "total"),
        ]
        .into_iter()
        .find(|(v, _)| !v.is_finite())
        .map(|(_, n)| n)
    }
}

/// SmoothL1 (Huber): 0.5·r²/δ for |r| < δ, else |r| − 0.5·δ.
#[inline]
pub fn smooth_l1(r: f64, delta: f64) -> f64 {
    if r.abs() < delta {
        0.5 * r * r / delta
    } else {
        r.abs() - 0.5 * delta
    }
}

/// Derivative of `smooth_l1` in r.
#[inline]
pub fn smooth_l1_prime(r: f64, delta: f64) -> f64 {
    if r.abs() < delta {
        r / delta
    } else {
        r.signum()
    }
}
