use crate::grid::Grid;
use crate::priors::edges::{edge_weights, edge_weights_backward, DEGENERATE_CROSS};
use crate::priors::{smooth_l1, smooth_l1_prime, PriorWeights};
use crate::raster::SceneGrad;
use crate::scene::SplatScene;
use crate::splat::{argmin_scale, gaussian_normal, quat_rotation_backward, GaussianMode};
use nalgebra::{Matrix3, Vector3};

struct PixelTerm {
    u: usize,
    v: usize,
    /// Norm of the unnormalized Δy × Δx.
    ncross: f64,
    n_hat: Vector3<f64>,
    n_splat: Vector3<f64>,
    r: f64,
    weight: f64,
}

struct FrameCache {
    means: Grid<Vector3<f64>>,
    edge: crate::priors::EdgeWeights,
    terms: Vec<PixelTerm>,
}

fn frame_cache(scene: &SplatScene, frame_idx: usize, w: &PriorWeights) -> crate::Result<FrameCache> {
    let frame = &scene.frames[frame_idx];
    let grid = &frame.gaussians;
    if grid.width() < 3 || grid.height() < 3 {
        return Err(crate::SplatError::invalid("orientation loss needs grids of at least 3x3"));
    }
    let means = grid.map(|g| g.mean);
    let edge = edge_weights(&means, w)?;
    let mut terms = Vec::new();
    for v in 1..grid.height() - 1 {
        for u in 1..grid.width() - 1 {
            let dx = means[(u + 1, v)] - means[(u - 1, v)];
            let dy = means[(u, v + 1)] - means[(u, v - 1)];
            let cross = dy.cross(&dx);
            let ncross = cross.norm();
            if ncross <= DEGENERATE_CROSS {
                continue; // excluded from Ω
            }
            let n_hat = cross / ncross;
            let n_splat = gaussian_normal(grid.get(u, v))?;
            let r = 1.0 - n_splat.dot(&n_hat);
            terms.push(PixelTerm { u, v, ncross, n_hat, n_splat, r, weight: edge.weights[(u, v)] });
        }
    }
    Ok(FrameCache { means, edge, terms })
}

/// Edge-weighted Huber penalty in cosine space between each splat's
/// normal and the normal implied by its neighbors' means, averaged over
/// all non-degenerate interior pixels of every frame.
pub fn orientation_loss(scene: &SplatScene, w: &PriorWeights) -> crate::Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for fi in 0..scene.frames.len() {
        let cache = frame_cache(scene, fi, w)?;
        for t in &cache.terms {
            sum += t.weight * smooth_l1(t.r, w.delta_huber);
        }
        count += cache.terms.len();
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Loss plus gradients with respect to splat means (through the implied
/// normals, the edge weights, and the quantile) and quaternions
/// (through the splat normals). Scales get no gradient: the argmin axis
/// choice is piecewise constant.
pub fn orientation_loss_grad(
    scene: &SplatScene,
    w: &PriorWeights,
) -> crate::Result<(f64, SceneGrad)> {
    let mut caches = Vec::with_capacity(scene.frames.len());
    let mut count = 0usize;
    let mut sum = 0.0;
    for fi in 0..scene.frames.len() {
        let cache = frame_cache(scene, fi, w)?;
        for t in &cache.terms {
            sum += t.weight * smooth_l1(t.r, w.delta_huber);
        }
        count += cache.terms.len();
        caches.push(cache);
    }
    let mut grad = SceneGrad::zeros(scene);
    if count == 0 {
        return Ok((0.0, grad));
    }
    let inv = 1.0 / count as f64;
    let loss = sum * inv;

    let mut offset = 0usize;
    for (fi, cache) in caches.iter().enumerate() {
        let frame = &scene.frames[fi];
        let width = frame.gaussians.width();
        let mut mean_grad = Grid::fill(width, frame.gaussians.height(), Vector3::zeros());
        let mut d_of_d = Grid::fill(width, frame.gaussians.height(), 0.0);
        let mut d_eta = 0.0;
        let eta_eps = cache.edge.eta + w.epsilon;

        for t in &cache.terms {
            let h = smooth_l1(t.r, w.delta_huber);
            let hp = smooth_l1_prime(t.r, w.delta_huber);

            // Weight chain: dL/dw_j, then through w = w0·exp(−κd/(η+ε)).
            let dw = h * inv;
            d_of_d[(t.u, t.v)] += dw * t.weight * (-w.kappa / eta_eps);
            d_eta += dw * t.weight * w.kappa * cache.edge.d[(t.u, t.v)] / (eta_eps * eta_eps);

            let dr = t.weight * hp * inv;

            // Splat normal: r = 1 − ⟨N, N̂⟩.
            let dn_splat = -dr * t.n_hat;
            let g = frame.gaussians.get(t.u, t.v);
            let axis = match g.mode {
                GaussianMode::TwoDGS => 2,
                GaussianMode::ThreeDGS => argmin_scale(&g.scales),
            };
            let mut dr_mat = Matrix3::zeros();
            for row in 0..3 {
                dr_mat[(row, axis)] = dn_splat[row];
            }
            let dq = quat_rotation_backward(&g.rotation, &dr_mat);
            grad.per_gaussian[offset + t.v * width + t.u].quat += dq;

            // Implied normal: N̂ = cross/‖cross‖, cross = Δy × Δx.
            let dn_hat = -dr * t.n_splat;
            let dcross = (dn_hat - t.n_hat * t.n_hat.dot(&dn_hat)) / t.ncross;
            let dx = cache.means[(t.u + 1, t.v)] - cache.means[(t.u - 1, t.v)];
            let dy = cache.means[(t.u, t.v + 1)] - cache.means[(t.u, t.v - 1)];
            let d_dy = dx.cross(&dcross);
            let d_dx = dcross.cross(&dy);
            mean_grad[(t.u + 1, t.v)] += d_dx;
            mean_grad[(t.u - 1, t.v)] -= d_dx;
            mean_grad[(t.u, t.v + 1)] += d_dy;
            mean_grad[(t.u, t.v - 1)] -= d_dy;
        }

        edge_weights_backward(&cache.means, &cache.edge, &d_of_d, d_eta, &mut mean_grad);

        for (i, mg) in mean_grad.iter().enumerate() {
            grad.per_gaussian[offset + i].mean += *mg;
        }
        offset += frame.gaussians.len();
    }
    Ok((loss, grad))
}
