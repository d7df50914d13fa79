//! Scale-aware depth map evaluation.

use crate::grid::Grid;
use crate::{Result, SplatError};

/// Aggregate depth errors over the valid ground-truth pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMetrics {
    /// Mean of |pred - gt| / gt.
    pub abs_rel: f64,
    /// Fraction of pixels with max(pred / gt, gt / pred) < 1.10.
    pub delta_110: f64,
    /// Fraction of pixels with max(pred / gt, gt / pred) < 1.25.
    pub delta_125: f64,
    pub valid_count: usize,
}

/// Compares a predicted depth map against ground truth. Pixels where the
/// ground truth is nonpositive or nonfinite are ignored. With `align_scale`
/// the prediction is first multiplied by the median of gt / pred over the
/// valid pixels, which cancels any global scale ambiguity.
pub fn depth_metrics(pred: &Grid<f64>, gt: &Grid<f64>, align_scale: bool) -> Result<DepthMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(SplatError::invalid("depth_metrics: size mismatch"));
    }
    let valid: Vec<(f64, f64)> = pred
        .iter()
        .zip(gt.iter())
        .filter(|(_, g)| g.is_finite() && **g > 0.0)
        .map(|(p, g)| (*p, *g))
        .collect();
    if valid.is_empty() {
        return Err(SplatError::invalid("depth_metrics: no valid ground-truth pixels"));
    }

    let scale = if align_scale {
        let mut ratios: Vec<f64> = valid.iter().map(|(p, g)| g / p).collect();
        ratios.sort_by(f64::total_cmp);
        ratios[ratios.len() / 2]
    } else {
        1.0
    };

    let mut abs_rel = 0.0;
    let mut n_110 = 0usize;
    let mut n_125 = 0usize;
    for &(p, g) in &valid {
        let p = p * scale;
        abs_rel += (p - g).abs() / g;
        // Nonpositive predictions get an infinite ratio and fail both deltas.
        let ratio = if p > 0.0 { (p / g).max(g / p) } else { f64::INFINITY };
        if ratio < 1.10 {
            n_110 += 1;
        }
        if ratio < 1.25 {
            n_125 += 1;
        }
    }
    let n = valid.len() as f64;
    Ok(DepthMetrics {
        abs_rel: abs_rel / n,
        delta_110: n_110 as f64 / n,
        delta_125: n_125 as f64 / n,
        valid_count: valid.len(),
    })
}
