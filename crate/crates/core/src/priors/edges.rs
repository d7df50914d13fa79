use crate::grid::Grid;
use crate::priors::PriorWeights;
use nalgebra::Vector3;

/// Cross products below this norm mark a pixel's normal as undefined.
pub const DEGENERATE_CROSS: f64 = 1e-12;

/// Central differences of a mean grid at interior pixel (u, v):
/// Δx = μ(u+1,v) − μ(u−1,v), Δy = μ(u,v+1) − μ(u,v−1).
pub fn central_differences(
    grid: &Grid<Vector3<f64>>,
    u: usize,
    v: usize,
) -> crate::Result<(Vector3<f64>, Vector3<f64>)> {
    if u < 1 || u > grid.width().saturating_sub(2) || v < 1 || v > grid.height().saturating_sub(2) {
        return Err(crate::SplatError::invalid(format!(
            "central differences need an interior pixel, got ({u}, {v}) in {}x{}",
            grid.width(),
            grid.height()
        )));
    }
    let dx = grid[(u + 1, v)] - grid[(u - 1, v)];
    let dy = grid[(u, v + 1)] - grid[(u, v - 1)];
    Ok((dx, dy))
}

/// Local surface normal normalize(Δy × Δx) at an interior pixel, or
/// `None` when the cross product is numerically zero (the pixel is then
/// excluded from the orientation domain).
pub fn normal_from_means(
    grid: &Grid<Vector3<f64>>,
    u: usize,
    v: usize,
) -> crate::Result<Option<Vector3<f64>>> {
    let (dx, dy) = central_differences(grid, u, v)?;
    let cross = dy.cross(&dx);
    let n = cross.norm();
    Ok(if n > DEGENERATE_CROSS { Some(cross / n) } else { None })
}

/// Edge-aware weights for one frame, with the ingredients exposed:
/// d = |Δx| + |Δy| per interior pixel, η its q-quantile, and
/// w = w0·exp(−κ·d/(η+ε)). Boundary pixels carry weight 0.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    pub weights: Grid<f64>,
    pub d: Grid<f64>,
    pub eta: f64,
    /// Linear pixel indices and coefficients of the two order statistics
    /// that produced η, for the backward pass.
    donors: [(usize, f64); 2],
}

impl EdgeWeights {
    pub fn donor_pixels(&self) -> [(usize, f64); 2] {
        self.donors
    }
}

/// Linear interpolation between order statistics at p = q·(n−1); the
/// convention the sort-based oracle in the tests pins down.
fn quantile_with_donors(values: &[(f64, usize)], q: f64) -> (f64, [(usize, f64); 2]) {
    debug_assert!(!values.is_empty());
    let mut sorted: Vec<(f64, usize)> = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = sorted.len();
    let p = q * (n - 1) as f64;
    let lo = (p.floor() as usize).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let f = p - lo as f64;
    let eta = (1.0 - f) * sorted[lo].0 + f * sorted[hi].0;
    (eta, [(sorted[lo].1, 1.0 - f), (sorted[hi].1, f)])
}

/// Computes edge weights over the interior of a mean grid.
///
/// The quantile is taken per frame over all interior pixels, including
/// ones whose normal is degenerate.
pub fn edge_weights(grid: &Grid<Vector3<f64>>, w: &PriorWeights) -> crate::Result<EdgeWeights> {
    let (width, height) = (grid.width(), grid.height());
    if width < 3 || height < 3 {
        return Err(crate::SplatError::invalid("edge weights need at least one interior pixel"));
    }
    let mut d = Grid::fill(width, height, 0.0);
    let mut interior = Vec::with_capacity((width - 2) * (height - 2));
    for v in 1..height - 1 {
        for u in 1..width - 1 {
            let (dx, dy) = central_differences(grid, u, v)?;
            let dv = dx.norm() + dy.norm();
            d[(u, v)] = dv;
            interior.push((dv, v * width + u));
        }
    }
    let (eta, donors) = quantile_with_donors(&interior, w.q_quantile);
    let mut weights = Grid::fill(width, height, 0.0);
    for v in 1..height - 1 {
        for u in 1..width - 1 {
            weights[(u, v)] = w.w0 * (-w.kappa * d[(u, v)] / (eta + w.epsilon)).exp();
        }
    }
    Ok(EdgeWeights { weights, d, eta, donors })
}

/// Scatters cotangents of the per-pixel d values and of η back onto the
/// mean grid. `d_of_d` must be zero outside the interior.
pub fn edge_weights_backward(
    grid: &Grid<Vector3<f64>>,
    ew: &EdgeWeights,
    d_of_d: &Grid<f64>,
    d_eta: f64,
    out: &mut Grid<Vector3<f64>>,
) {
    let (width, height) = (grid.width(), grid.height());
    // Route the η cotangent to its two donor pixels' d values.
    let mut dd = d_of_d.clone();
    for (idx, coeff) in ew.donors {
        dd.as_mut_slice()[idx] += d_eta * coeff;
    }
    for v in 1..height - 1 {
        for u in 1..width - 1 {
            let g = dd[(u, v)];
            if g == 0.0 {
                continue;
            }
            let (dx, dy) = central_differences(grid, u, v).expect("interior");
            // d = |Δx| + |Δy| with zero subgradient at a zero vector.
            let nx = dx.norm();
            if nx > 0.0 {
                let gd = g / nx * dx;
                out[(u + 1, v)] += gd;
                out[(u - 1, v)] -= gd;
            }
            let ny = dy.norm();
            if ny > 0.0 {
                let gd = g / ny * dy;
                out[(u, v + 1)] += gd;
                out[(u, v - 1)] -= gd;
            }
        }
    }
}
