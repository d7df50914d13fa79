use crate::camera::CameraIntrinsics;
use crate::priors::edges::DEGENERATE_CROSS;
use crate::raster::{BufferGrads, RenderBuffers};
use nalgebra::Vector3;

/// Backprojected camera-frame point of a pixel from the expected depth.
#[inline]
fn point(buffers: &RenderBuffers, intr: &CameraIntrinsics, u: usize, v: usize) -> Vector3<f64> {
    buffers.depth_exp[(u, v)] * intr.ray_dir(u as f64 + 0.5, v as f64 + 0.5)
}

struct RncTerm {
    u: usize,
    v: usize,
    /// Norm of the unnormalized Δy × Δx.
    ncross: f64,
    n_hat: Vector3<f64>,
    /// Rendered normal at the pixel (unit).
    n_r: Vector3<f64>,
    /// Accumulated weight at the pixel, used as the confidence.
    omega: f64,
}

/// Pixels where both sides of the comparison exist: interior, rendered
/// normal defined, expected depth defined at the pixel and its four
/// neighbors, and the depth-implied cross product non-degenerate.
fn collect_terms(buffers: &RenderBuffers, intr: &CameraIntrinsics, eps_w: f64) -> Vec<RncTerm> {
    let (w, h) = (buffers.width(), buffers.height());
    let defined = |u: usize, v: usize| buffers.weight_sum[(u, v)] > eps_w;
    let mut terms = Vec::new();
    for v in 1..h.saturating_sub(1) {
        for u in 1..w.saturating_sub(1) {
            if !(defined(u, v)
                && defined(u + 1, v)
                && defined(u - 1, v)
                && defined(u, v + 1)
                && defined(u, v - 1))
            {
                continue;
            }
            let n_r = buffers.normal[(u, v)];
            if n_r.norm_squared() < 0.25 {
                continue; // zero vector: composited normal undefined
            }
            let dx = point(buffers, intr, u + 1, v) - point(buffers, intr, u - 1, v);
            let dy = point(buffers, intr, u, v + 1) - point(buffers, intr, u, v - 1);
            let cross = dy.cross(&dx);
            let ncross = cross.norm();
            if ncross <= DEGENERATE_CROSS {
                continue;
            }
            terms.push(RncTerm {
                u,
                v,
                ncross,
                n_hat: cross / ncross,
                n_r,
                omega: buffers.weight_sum[(u, v)],
            });
        }
    }
    terms
}

/// Consistency between the rendered normal buffer and the normal
/// implied by the rendered expected depth, weighted by the accumulated
/// alpha: (1/|V|) Σ ω·(1 − ⟨N_r, N̂⟩). Zero when no pixel qualifies.
pub fn rnc_loss(buffers: &RenderBuffers, intr: &CameraIntrinsics, eps_w: f64) -> f64 {
    let terms = collect_terms(buffers, intr, eps_w);
    if terms.is_empty() {
        return 0.0;
    }
    let sum: f64 = terms.iter().map(|t| t.omega * (1.0 - t.n_r.dot(&t.n_hat))).sum();
    sum / terms.len() as f64
}

/// Loss plus cotangents on the rendered buffers, ready to feed into the
/// renderer's backward pass. With `detach_depth` the depth branch is
/// treated as constant and only the normal buffer and the weights
/// receive gradient.
pub fn rnc_loss_grad(
    buffers: &RenderBuffers,
    intr: &CameraIntrinsics,
    eps_w: f64,
    detach_depth: bool,
) -> (f64, BufferGrads) {
    let mut grads = BufferGrads::zeros(buffers.width(), buffers.height());
    let terms = collect_terms(buffers, intr, eps_w);
    if terms.is_empty() {
        return (0.0, grads);
    }
    let inv = 1.0 / terms.len() as f64;
    let mut sum = 0.0;
    for t in &terms {
        let cos = t.n_r.dot(&t.n_hat);
        sum += t.omega * (1.0 - cos);
        grads.weight_sum[(t.u, t.v)] += (1.0 - cos) * inv;
        grads.normal[(t.u, t.v)] += -t.omega * inv * t.n_hat;
        if detach_depth {
            continue;
        }
        let dn_hat = -t.omega * inv * t.n_r;
        let dcross = (dn_hat - t.n_hat * t.n_hat.dot(&dn_hat)) / t.ncross;
        let dx = point(buffers, intr, t.u + 1, t.v) - point(buffers, intr, t.u - 1, t.v);
        let dy = point(buffers, intr, t.u, t.v + 1) - point(buffers, intr, t.u, t.v - 1);
        let d_dy = dx.cross(&dcross);
        let d_dx = dcross.cross(&dy);
        // p(u, v) = D_exp·dir, so dD_exp = ⟨dp, dir⟩ at each neighbor.
        let mut scatter = |uu: usize, vv: usize, dp: Vector3<f64>| {
            grads.depth_exp[(uu, vv)] += dp.dot(&intr.ray_dir(uu as f64 + 0.5, vv as f64 + 0.5));
        };
        scatter(t.u + 1, t.v, d_dx);
        scatter(t.u - 1, t.v, -d_dx);
        scatter(t.u, t.v + 1, d_dy);
        scatter(t.u, t.v - 1, -d_dy);
    }
    (sum * inv, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS_W: f64 = 1e-4;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::centered(8, 8, 60.0)
    }

    fn buffers_from_depth(
        depth: Grid<f64>,
        normal: Grid<Vector3<f64>>,
        weight: Grid<f64>,
    ) -> RenderBuffers {
        let (w, h) = (depth.width(), depth.height());
        RenderBuffers {
            color: Grid::fill(w, h, Vector3::zeros()),
            depth_acc: depth.clone(),
            depth_exp: depth,
            normal,
            weight_sum: weight,
        }
    }

    /// Fronto-parallel plane: depth-implied normal is (0, 0, −1).
    fn plane_buffers(d: f64) -> RenderBuffers {
        buffers_from_depth(
            Grid::fill(8, 8, d),
            Grid::fill(8, 8, Vector3::new(0.0, 0.0, -1.0)),
            Grid::fill(8, 8, 1.0),
        )
    }

    #[test]
    fn consistent_plane_scores_zero() {
        let loss = rnc_loss(&plane_buffers(2.0), &intr(), EPS_W);
        assert!(loss.abs() < 1e-12, "{loss}");
    }

    #[test]
    fn flipped_normals_score_two() {
        let mut b = plane_buffers(2.0);
        for n in b.normal.iter_mut() {
            *n = -*n;
        }
        let loss = rnc_loss(&b, &intr(), EPS_W);
        assert!((loss - 2.0).abs() < 1e-12, "{loss}");
    }

    #[test]
    fn undefined_pixels_are_skipped() {
        let mut b = plane_buffers(2.0);
        for w in b.weight_sum.iter_mut() {
            *w = 0.0;
        }
        assert_eq!(rnc_loss(&b, &intr(), EPS_W), 0.0);
        let (loss, grads) = rnc_loss_grad(&b, &intr(), EPS_W, false);
        assert_eq!(loss, 0.0);
        assert!(grads.depth_exp.iter().all(|g| *g == 0.0));
    }

    fn random_buffers(seed: u64) -> RenderBuffers {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = Grid::from_fn(8, 8, |c, r| {
            2.0 + 0.1 * (c as f64 * 0.7).sin() + 0.1 * (r as f64 * 0.9).cos()
                + rng.gen_range(-0.02..0.02)
        });
        let normal = Grid::from_fn(8, 8, |_, _| {
            Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..-0.2),
            )
            .normalize()
        });
        let weight = Grid::from_fn(8, 8, |_, _| rng.gen_range(0.4..0.95));
        buffers_from_depth(depth, normal, weight)
    }

    #[test]
    fn detached_depth_grads_are_zero() {
        let b = random_buffers(11);
        let (_, grads) = rnc_loss_grad(&b, &intr(), EPS_W, true);
        assert!(grads.depth_exp.iter().all(|g| *g == 0.0));
        assert!(grads.normal.iter().any(|g| g.norm() > 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = random_buffers(12);
        let intr = intr();
        let (_, grads) = rnc_loss_grad(&b, &intr, EPS_W, false);
        let h = 1e-6;
        for (u, v) in [(0, 3), (3, 3), (4, 6), (7, 4), (2, 2)] {
            // Depth.
            let mut plus = b.clone();
            plus.depth_exp[(u, v)] += h;
            let mut minus = b.clone();
            minus.depth_exp[(u, v)] -= h;
            let fd = (rnc_loss(&plus, &intr, EPS_W) - rnc_loss(&minus, &intr, EPS_W)) / (2.0 * h);
            let a = grads.depth_exp[(u, v)];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            assert!(err < 1e-5, "depth ({u},{v}): {a} vs {fd}");
            // Normal components (loss is linear in the buffer entries).
            for i in 0..3 {
                let mut plus = b.clone();
                plus.normal[(u, v)][i] += h;
                let mut minus = b.clone();
                minus.normal[(u, v)][i] -= h;
                let fd =
                    (rnc_loss(&plus, &intr, EPS_W) - rnc_loss(&minus, &intr, EPS_W)) / (2.0 * h);
                let a = grads.normal[(u, v)][i];
                let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                assert!(err < 1e-5, "normal ({u},{v})[{i}]: {a} vs {fd}");
            }
            // Weight (enters as the confidence; mask unchanged by ±h).
            let mut plus = b.clone();
            plus.weight_sum[(u, v)] += h;
            let mut minus = b.clone();
            minus.weight_sum[(u, v)] -= h;
            let fd = (rnc_loss(&plus, &intr, EPS_W) - rnc_loss(&minus, &intr, EPS_W)) / (2.0 * h);
            let a = grads.weight_sum[(u, v)];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            assert!(err < 1e-5, "weight ({u},{v}): {a} vs {fd}");
        }
    }
}
