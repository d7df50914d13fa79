use crate::raster::SceneGrad;
use crate::scene::SplatScene;
use crate::splat::{argmin_scale, GaussianMode};

/// Mean smallest scale over all splats. Only meaningful for full 3D
/// Gaussians; surfels already have their third scale pinned to zero, so
/// the loss is identically 0 there.
pub fn flatness_loss(scene: &SplatScene) -> f64 {
    if scene.mode == GaussianMode::TwoDGS {
        return 0.0;
    }
    let n = scene.num_gaussians();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = scene.iter_gaussians().map(|g| g.scales[argmin_scale(&g.scales)]).sum();
    sum / n as f64
}

/// Loss plus per-splat scale gradients: 1/N on each splat's argmin
/// axis. At exact ties the lowest axis index takes the subgradient.
pub fn flatness_loss_grad(scene: &SplatScene) -> (f64, SceneGrad) {
    let mut grad = SceneGrad::zeros(scene);
    if scene.mode == GaussianMode::TwoDGS || scene.num_gaussians() == 0 {
        return (0.0, grad);
    }
    let inv = 1.0 / scene.num_gaussians() as f64;
    let mut sum = 0.0;
    for (i, g) in scene.iter_gaussians().enumerate() {
        let axis = argmin_scale(&g.scales);
        sum += g.scales[axis];
        grad.per_gaussian[i].scales[axis] = inv;
    }
    (sum * inv, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;
    use crate::grid::Grid;
    use crate::scene::Frame;
    use crate::splat::{Gaussian3D, Quaternion};
    use nalgebra::Vector3;

    fn scene_with_scales(scales: Vec<Vector3<f64>>, mode: GaussianMode) -> SplatScene {
        assert_eq!(scales.len(), 9);
        let grid = Grid::from_fn(3, 3, |c, r| Gaussian3D {
            mean: Vector3::new(c as f64, r as f64, 2.0),
            rotation: Quaternion::IDENTITY,
            scales: scales[r * 3 + c],
            opacity: 0.5,
            color: Vector3::zeros(),
            mode,
        });
        SplatScene::new(vec![Frame::new(CameraIntrinsics::centered(3, 3, 60.0), grid)], mode)
    }

    #[test]
    fn mean_of_min_scales() {
        let scales: Vec<_> = (0..9)
            .map(|i| Vector3::new(0.5, 0.1 * (i + 1) as f64, 0.9))
            .collect();
        let scene = scene_with_scales(scales, GaussianMode::ThreeDGS);
        // min over each: min(0.5, 0.1(i+1), 0.9).
        let expected: f64 = (1..=9).map(|i| (0.1 * i as f64).min(0.5)).sum::<f64>() / 9.0;
        assert!((flatness_loss(&scene) - expected).abs() < 1e-12);
    }

    #[test]
    fn surfel_mode_is_zero_with_zero_grad() {
        let scales = vec![Vector3::new(0.3, 0.2, 0.0); 9];
        let scene = scene_with_scales(scales, GaussianMode::TwoDGS);
        let (loss, grad) = flatness_loss_grad(&scene);
        assert_eq!(loss, 0.0);
        assert!(grad.per_gaussian.iter().all(|g| g.scales == Vector3::zeros()));
    }

    #[test]
    fn gradient_lands_on_argmin_axis() {
        let mut scales = vec![Vector3::new(0.5, 0.4, 0.3); 9];
        scales[4] = Vector3::new(0.1, 0.4, 0.3);
        let scene = scene_with_scales(scales, GaussianMode::ThreeDGS);
        let (_, grad) = flatness_loss_grad(&scene);
        assert_eq!(grad.per_gaussian[4].scales, Vector3::new(1.0 / 9.0, 0.0, 0.0));
        assert_eq!(grad.per_gaussian[0].scales, Vector3::new(0.0, 0.0, 1.0 / 9.0));
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_ties() {
        let scales: Vec<_> = (0..9)
            .map(|i| Vector3::new(0.5 + 0.01 * i as f64, 0.2 + 0.02 * i as f64, 0.7))
            .collect();
        let scene = scene_with_scales(scales, GaussianMode::ThreeDGS);
        let (_, grad) = flatness_loss_grad(&scene);
        let h = 1e-7;
        for idx in [0, 4, 8] {
            for i in 0..3 {
                let mut plus = scene.clone();
                plus.iter_gaussians_mut().nth(idx).unwrap().scales[i] += h;
                let mut minus = scene.clone();
                minus.iter_gaussians_mut().nth(idx).unwrap().scales[i] -= h;
                let fd = (flatness_loss(&plus) - flatness_loss(&minus)) / (2.0 * h);
                assert!((grad.per_gaussian[idx].scales[i] - fd).abs() < 1e-8);
            }
        }
    }
}
