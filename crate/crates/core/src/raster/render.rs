use crate::camera::Camera;
use crate::grid::Grid;
use crate::parallel;
use crate::raster::composite::{
    composite_pixel_backward, PixelGrad, SampleGrad, SplatSample, ALPHA_MAX, NORMAL_EPS,
};
use crate::raster::grad::{BufferGrads, PoseGrad, SceneGrad, ScreenGrad};
use crate::raster::screen::{project_backward, project_gaussian, ScreenGaussian};
use crate::raster::RasterConfig;
use crate::scene::SplatScene;
use nalgebra::{Vector2, Vector3};

/// Footprint threshold of the exhaustive reference path.
pub const REFERENCE_CUTOFF: f64 = 1e-12;

/// Composited per-view images. `depth_exp` is 0 and `normal` the zero
/// vector wherever undefined; check `weight_sum` for validity.
#[derive(Debug, Clone)]
pub struct RenderBuffers {
    pub color: Grid<Vector3<f64>>,
    pub depth_acc: Grid<f64>,
    pub depth_exp: Grid<f64>,
    pub normal: Grid<Vector3<f64>>,
    pub weight_sum: Grid<f64>,
}

impl RenderBuffers {
    fn new(width: usize, height: usize) -> Self {
        RenderBuffers {
            color: Grid::fill(width, height, Vector3::zeros()),
            depth_acc: Grid::fill(width, height, 0.0),
            depth_exp: Grid::fill(width, height, 0.0),
            normal: Grid::fill(width, height, Vector3::zeros()),
            weight_sum: Grid::fill(width, height, 0.0),
        }
    }

    pub fn width(&self) -> usize {
        self.color.width()
    }

    pub fn height(&self) -> usize {
        self.color.height()
    }

    /// Whether the expected depth is defined at a pixel.
    pub fn depth_valid(&self, col: usize, row: usize, cfg: &RasterConfig) -> bool {
        *self.weight_sum.get(col, row) > cfg.eps_w
    }
}

/// Projects every splat and returns the surviving ones sorted by
/// (depth, scene index). The sort runs on indices so ties are broken
/// deterministically.
fn project_scene(scene: &SplatScene, cam: &Camera, cfg: &RasterConfig) -> Vec<ScreenGaussian> {
    let gaussians: Vec<_> = scene.iter_gaussians().collect();
    let mut projected: Vec<ScreenGaussian> = parallel::map_indexed(gaussians.len(), |i| {
        project_gaussian(gaussians[i], cam, cfg, i)
    })
    .into_iter()
    .flatten()
    .collect();
    projected.sort_by(|a, b| {
        a.depth.partial_cmp(&b.depth).unwrap().then(a.source.cmp(&b.source))
    });
    projected
}

/// Pixel-center coordinate of a column/row index.
#[inline]
fn center(i: usize) -> f64 {
    i as f64 + 0.5
}

/// Column/row ranges whose pixel centers a bbox touches; `None` radius
/// means the whole image.
fn pixel_range(mean: f64, radius: Option<f64>, len: usize) -> (usize, usize) {
    match radius {
        None => (0, len),
        Some(r) => {
            let lo = (mean - r - 0.5).ceil().max(0.0) as usize;
            let hi = ((mean + r - 0.5).floor() + 1.0).min(len as f64).max(0.0) as usize;
            (lo.min(len), hi)
        }
    }
}

/// Per-pixel contributor lists in compositing order. Entry values index
/// into the sorted projected array.
fn bin_to_pixels(
    projected: &[ScreenGaussian],
    cfg: &RasterConfig,
    width: usize,
    height: usize,
) -> Vec<Vec<u32>> {
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); width * height];
    for (pi, sg) in projected.iter().enumerate() {
        let radii = sg.bbox_radii(cfg.cutoff);
        let (c0, c1) = pixel_range(sg.mean2d.x, radii.map(|r| r.0), width);
        let (r0, r1) = pixel_range(sg.mean2d.y, radii.map(|r| r.1), height);
        for row in r0..r1 {
            for col in c0..c1 {
                bins[row * width + col].push(pi as u32);
            }
        }
    }
    bins
}

#[derive(Clone, Copy)]
struct Contribution {
    index: u32,
    footprint: f64,
}

/// Evaluates the surviving contributions for one pixel, in order.
#[inline]
fn pixel_contributions(
    projected: &[ScreenGaussian],
    candidates: &[u32],
    px: f64,
    py: f64,
    cutoff: f64,
) -> Vec<Contribution> {
    let threshold = if cutoff > 0.0 { cutoff } else { 0.0 };
    let mut out = Vec::with_capacity(candidates.len());
    for &pi in candidates {
        let g = projected[pi as usize].footprint(px, py);
        if g >= threshold && g > 0.0 {
            out.push(Contribution { index: pi, footprint: g });
        }
    }
    out
}

/// Composited values of one pixel before they land in the buffers.
#[derive(Clone, Copy)]
struct PixelValues {
    color: Vector3<f64>,
    depth_acc: f64,
    depth_exp: f64,
    normal: Vector3<f64>,
    weight_sum: f64,
}

/// The one compositing kernel both render paths share, so they agree
/// bitwise by construction.
fn composite_values(
    projected: &[ScreenGaussian],
    contributions: &[Contribution],
    cfg: &RasterConfig,
) -> PixelValues {
    let mut color = Vector3::zeros();
    let mut depth_acc = 0.0;
    let mut normal_raw = Vector3::zeros();
    let mut weight_sum = 0.0;
    let mut t = 1.0;
    for c in contributions {
        let sg = &projected[c.index as usize];
        let a = (sg.opacity * c.footprint).min(ALPHA_MAX);
        let w = t * a;
        color += w * sg.color;
        depth_acc += w * sg.depth;
        normal_raw += w * sg.normal_cam;
        weight_sum += w;
        t *= 1.0 - a;
    }
    let depth_exp = if weight_sum > cfg.eps_w { depth_acc / weight_sum } else { 0.0 };
    let n = normal_raw.norm();
    let normal = if n > NORMAL_EPS { normal_raw / n } else { Vector3::zeros() };
    PixelValues { color, depth_acc, depth_exp, normal, weight_sum }
}

/// Renders a scene into one camera. Parallelizes over rows; compositing
/// within a pixel is strictly depth-ordered, so the output is bitwise
/// identical for any thread count.
pub fn render_view(scene: &SplatScene, cam: &Camera, cfg: &RasterConfig) -> RenderBuffers {
    let (width, height) = (cam.intrinsics.width, cam.intrinsics.height);
    let projected = project_scene(scene, cam, cfg);
    let bins = bin_to_pixels(&projected, cfg, width, height);

    let mut buffers = RenderBuffers::new(width, height);
    let row_outputs: Vec<RowRender> = parallel::map_indexed(height, |row| {
        let mut out = RowRender::new(width);
        for col in 0..width {
            let candidates = &bins[row * width + col];
            let contributions =
                pixel_contributions(&projected, candidates, center(col), center(row), cfg.cutoff);
            out.composite(col, &projected, &contributions, cfg);
        }
        out
    });
    for (row, out) in row_outputs.into_iter().enumerate() {
        out.write_into(&mut buffers, row);
    }
    buffers
}

/// One row of composited outputs, produced independently per thread.
struct RowRender {
    color: Vec<Vector3<f64>>,
    depth_acc: Vec<f64>,
    depth_exp: Vec<f64>,
    normal: Vec<Vector3<f64>>,
    weight_sum: Vec<f64>,
}

impl RowRender {
    fn new(width: usize) -> Self {
        RowRender {
            color: vec![Vector3::zeros(); width],
            depth_acc: vec![0.0; width],
            depth_exp: vec![0.0; width],
            normal: vec![Vector3::zeros(); width],
            weight_sum: vec![0.0; width],
        }
    }

    fn composite(
        &mut self,
        col: usize,
        projected: &[ScreenGaussian],
        contributions: &[Contribution],
        cfg: &RasterConfig,
    ) {
        let v = composite_values(projected, contributions, cfg);
        self.color[col] = v.color;
        self.depth_acc[col] = v.depth_acc;
        self.depth_exp[col] = v.depth_exp;
        self.normal[col] = v.normal;
        self.weight_sum[col] = v.weight_sum;
    }

    fn write_into(self, buffers: &mut RenderBuffers, row: usize) {
        let width = self.color.len();
        for col in 0..width {
            *buffers.color.get_mut(col, row) = self.color[col];
            *buffers.depth_acc.get_mut(col, row) = self.depth_acc[col];
            *buffers.depth_exp.get_mut(col, row) = self.depth_exp[col];
            *buffers.normal.get_mut(col, row) = self.normal[col];
            *buffers.weight_sum.get_mut(col, row) = self.weight_sum[col];
        }
    }
}

/// Renders a scene into a list of cameras.
pub fn render_views(scene: &SplatScene, cams: &[Camera], cfg: &RasterConfig) -> Vec<RenderBuffers> {
    cams.iter().map(|cam| render_view(scene, cam, cfg)).collect()
}

/// Single-threaded oracle: every pixel scans every projected splat with
/// only the tiny fixed footprint threshold. Mathematically identical to
/// `render_view` with `RasterConfig::exhaustive`.
pub fn reference_compositor(scene: &SplatScene, cam: &Camera, cfg: &RasterConfig) -> RenderBuffers {
    let (width, height) = (cam.intrinsics.width, cam.intrinsics.height);
    let ref_cfg = RasterConfig { cutoff: REFERENCE_CUTOFF, ..*cfg };
    // Footprint culling is disabled by projecting with no cutoff;
    // z_near culling still applies.
    let project_cfg = RasterConfig { cutoff: 0.0, ..*cfg };
    let projected = project_scene(scene, cam, &project_cfg);
    let all: Vec<u32> = (0..projected.len() as u32).collect();
    let mut buffers = RenderBuffers::new(width, height);
    for row in 0..height {
        for col in 0..width {
            let contributions =
                pixel_contributions(&projected, &all, center(col), center(row), REFERENCE_CUTOFF);
            let v = composite_values(&projected, &contributions, &ref_cfg);
            *buffers.color.get_mut(col, row) = v.color;
            *buffers.depth_acc.get_mut(col, row) = v.depth_acc;
            *buffers.depth_exp.get_mut(col, row) = v.depth_exp;
            *buffers.normal.get_mut(col, row) = v.normal;
            *buffers.weight_sum.get_mut(col, row) = v.weight_sum;
        }
    }
    buffers
}

/// Backward pass of `render_view`: pulls buffer cotangents back to
/// every splat parameter and the camera-pose tangent.
///
/// `grads.depth_exp` entries where the forward expected depth was
/// undefined are ignored. Per-row partials are merged in row order, so
/// the result is bitwise deterministic across thread counts.
pub fn render_backward(
    scene: &SplatScene,
    cam: &Camera,
    cfg: &RasterConfig,
    grads: &BufferGrads,
) -> (SceneGrad, PoseGrad) {
    let (width, height) = (cam.intrinsics.width, cam.intrinsics.height);
    assert_eq!(grads.color.width(), width);
    assert_eq!(grads.color.height(), height);
    let projected = project_scene(scene, cam, cfg);
    let bins = bin_to_pixels(&projected, cfg, width, height);

    // Per-row sparse screen-space gradients: (projected index, grad).
    let row_grads: Vec<Vec<(u32, ScreenGrad)>> = parallel::map_indexed(height, |row| {
        let mut acc: Vec<(u32, ScreenGrad)> = Vec::new();
        let mut samples: Vec<SplatSample> = Vec::new();
        let mut sample_grads: Vec<SampleGrad> = Vec::new();
        for col in 0..width {
            let candidates = &bins[row * width + col];
            let (px, py) = (center(col), center(row));
            let contributions = pixel_contributions(&projected, candidates, px, py, cfg.cutoff);
            if contributions.is_empty() {
                continue;
            }
            let pixel_grad = PixelGrad {
                color: *grads.color.get(col, row),
                depth_acc: *grads.depth_acc.get(col, row),
                depth_exp: *grads.depth_exp.get(col, row),
                normal: *grads.normal.get(col, row),
                weight_sum: *grads.weight_sum.get(col, row),
            };
            samples.clear();
            samples.extend(contributions.iter().map(|c| {
                let sg = &projected[c.index as usize];
                SplatSample {
                    footprint: c.footprint,
                    opacity: sg.opacity,
                    depth: sg.depth,
                    color: sg.color,
                    normal: sg.normal_cam,
                }
            }));
            sample_grads.clear();
            sample_grads.resize(samples.len(), SampleGrad::default());
            composite_pixel_backward(&samples, cfg.eps_w, &pixel_grad, &mut sample_grads);

            for (c, sg_grad) in contributions.iter().zip(&sample_grads) {
                let sg = &projected[c.index as usize];
                // Chain the footprint back to mean2d and cov2d.
                let dx = px - sg.mean2d.x;
                let dy = py - sg.mean2d.y;
                let tix = sg.cinv.x * dx + sg.cinv.y * dy;
                let tiy = sg.cinv.y * dx + sg.cinv.z * dy;
                let dm2 = -0.5 * sg_grad.footprint * c.footprint;
                // m2 = Δᵀ C⁻¹ Δ; dΔ = 2 C⁻¹Δ · dm2, dμ = −dΔ.
                let dmean = Vector2::new(-2.0 * dm2 * tix, -2.0 * dm2 * tiy);
                // dL/dC = −dm2 (C⁻¹Δ)(C⁻¹Δ)ᵀ, off-diagonal doubled for
                // the single-parameter convention.
                let dcov = Vector3::new(-dm2 * tix * tix, -2.0 * dm2 * tix * tiy, -dm2 * tiy * tiy);
                acc.push((
                    c.index,
                    ScreenGrad {
                        mean2d: dmean,
                        cov2d: dcov,
                        depth: sg_grad.depth,
                        opacity: sg_grad.opacity,
                        color: sg_grad.color,
                        normal_cam: sg_grad.normal,
                    },
                ));
            }
        }
        acc
    });

    // Merge in row order into dense per-projected-splat gradients.
    let mut screen_grads = vec![ScreenGrad::default(); projected.len()];
    for row in row_grads {
        for (pi, g) in row {
            screen_grads[pi as usize].add_assign(&g);
        }
    }

    // Map screen gradients through the projection backward, splats in
    // parallel, pose contributions reduced in sorted order.
    let gaussians: Vec<_> = scene.iter_gaussians().collect();
    let per_splat: Vec<(usize, crate::raster::grad::GaussianGrad, PoseGrad)> =
        parallel::map_indexed(projected.len(), |pi| {
            let sg = &projected[pi];
            let (g_grad, p_grad) = project_backward(gaussians[sg.source], cam, cfg, &screen_grads[pi]);
            (sg.source, g_grad, p_grad)
        });

    let mut scene_grad = SceneGrad::zeros(scene);
    let mut pose_grad = PoseGrad::default();
    for (source, g_grad, p_grad) in per_splat {
        scene_grad.per_gaussian[source].add_assign(&g_grad);
        pose_grad.add_assign(&p_grad);
    }
    (scene_grad, pose_grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, CameraPose};
    use crate::grid::Grid;
    use crate::scene::Frame;
    use crate::splat::{Gaussian3D, GaussianMode, Quaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scene(seed: u64, n: usize, mode: GaussianMode) -> (SplatScene, Camera) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = (n as f64).sqrt().ceil() as usize;
        let side = side.max(3);
        let mut gaussians = Vec::with_capacity(side * side);
        for _ in 0..side * side {
            let mut g = Gaussian3D {
                mean: Vector3::new(
                    rng.gen_range(-0.8..0.8),
                    rng.gen_range(-0.8..0.8),
                    rng.gen_range(1.5..4.0),
                ),
                rotation: Quaternion::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
                scales: Vector3::new(
                    rng.gen_range(0.02..0.3),
                    rng.gen_range(0.02..0.3),
                    rng.gen_range(0.02..0.3),
                ),
                opacity: rng.gen_range(0.1..0.95),
                color: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                mode,
            };
            if g.rotation.norm() < 0.1 {
                g.rotation = Quaternion::IDENTITY;
            }
            if mode == GaussianMode::TwoDGS {
                g.scales.z = 0.0;
            }
            gaussians.push(g);
        }
        let intr = CameraIntrinsics::centered(side, side, 70.0);
        let grid = Grid::from_vec(side, side, gaussians);
        let scene = SplatScene::new(vec![Frame::new(intr, grid)], mode);
        let cam = Camera::new(CameraIntrinsics::centered(64, 64, 70.0), CameraPose::IDENTITY);
        (scene, cam)
    }

    #[test]
    fn render_matches_reference_bitwise_with_exhaustive_cutoff() {
        for seed in 0..3 {
            let (scene, cam) = random_scene(seed, 50, GaussianMode::ThreeDGS);
            let cfg = RasterConfig::default().exhaustive();
            let fast = render_view(&scene, &cam, &cfg);
            let slow = reference_compositor(&scene, &cam, &cfg);
            for i in 0..fast.color.len() {
                assert_eq!(fast.color.as_slice()[i], slow.color.as_slice()[i]);
                assert_eq!(fast.depth_acc.as_slice()[i], slow.depth_acc.as_slice()[i]);
                assert_eq!(fast.depth_exp.as_slice()[i], slow.depth_exp.as_slice()[i]);
                assert_eq!(fast.normal.as_slice()[i], slow.normal.as_slice()[i]);
                assert_eq!(fast.weight_sum.as_slice()[i], slow.weight_sum.as_slice()[i]);
            }
        }
    }

    #[test]
    fn permuting_splats_leaves_output_unchanged() {
        let (scene, cam) = random_scene(11, 30, GaussianMode::ThreeDGS);
        let cfg = RasterConfig::default();
        let base = render_view(&scene, &cam, &cfg);

        // Reverse the grid, which permutes the input order.
        let mut reversed = scene.clone();
        let frame = &mut reversed.frames[0];
        let (w, h) = (frame.gaussians.width(), frame.gaussians.height());
        let mut data: Vec<_> = frame.gaussians.iter().cloned().collect();
        data.reverse();
        frame.gaussians = Grid::from_vec(w, h, data);

        let out = render_view(&reversed, &cam, &cfg);
        for i in 0..base.color.len() {
            let d = (base.color.as_slice()[i] - out.color.as_slice()[i]).abs().max();
            assert!(d < 1e-12, "color differs by {d} at {i}");
            assert!((base.depth_acc.as_slice()[i] - out.depth_acc.as_slice()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_conservation_against_product_form() {
        let (scene, cam) = random_scene(5, 40, GaussianMode::ThreeDGS);
        let cfg = RasterConfig::default().exhaustive();
        let project_cfg = RasterConfig { cutoff: 0.0, ..cfg };
        let projected = project_scene(&scene, &cam, &project_cfg);
        let buffers = reference_compositor(&scene, &cam, &cfg);
        for row in 0..64 {
            for col in 0..64 {
                let (px, py) = (center(col), center(row));
                let mut product = 1.0;
                for sg in &projected {
                    let g = sg.footprint(px, py);
                    if g >= REFERENCE_CUTOFF {
                        product *= 1.0 - (sg.opacity * g).min(ALPHA_MAX);
                    }
                }
                let w = *buffers.weight_sum.get(col, row);
                assert!((w - (1.0 - product)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_fronto_parallel_splat_gives_its_depth() {
        let intr = CameraIntrinsics::centered(9, 9, 60.0);
        let cam = Camera::new(intr, CameraPose::IDENTITY);
        let g = Gaussian3D {
            mean: Vector3::new(0.0, 0.0, 2.0),
            rotation: Quaternion::IDENTITY,
            scales: Vector3::new(0.5, 0.5, 0.0),
            opacity: 1.0,
            color: Vector3::new(1.0, 0.0, 0.0),
            mode: GaussianMode::TwoDGS,
        };
        let mut grid = Grid::fill(3, 3, g);
        for gg in grid.iter_mut() {
            gg.opacity = 1.0;
        }
        let scene = SplatScene::new(
            vec![Frame::new(CameraIntrinsics::centered(3, 3, 60.0), grid)],
            GaussianMode::TwoDGS,
        );
        let mut cfg = RasterConfig::for_scene(&scene);
        cfg.scale_floor = 1e-4;
        let buffers = render_view(&scene, &cam, &cfg);
        // Center pixel looks straight at the splat.
        assert!(buffers.depth_valid(4, 4, &cfg));
        assert!((buffers.depth_exp.get(4, 4) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_scene_renders_background() {
        let intr = CameraIntrinsics::centered(4, 4, 60.0);
        let grid = Grid::from_fn(4, 4, |_, _| Gaussian3D {
            mean: Vector3::new(0.0, 0.0, -5.0), // all behind the camera
            rotation: Quaternion::IDENTITY,
            scales: Vector3::new(0.1, 0.1, 0.1),
            opacity: 0.5,
            color: Vector3::new(1.0, 1.0, 1.0),
            mode: GaussianMode::ThreeDGS,
        });
        let scene = SplatScene::new(vec![Frame::new(intr, grid)], GaussianMode::ThreeDGS);
        let cam = Camera::new(CameraIntrinsics::centered(8, 8, 60.0), CameraPose::IDENTITY);
        let buffers = render_view(&scene, &cam, &RasterConfig::default());
        assert!(buffers.color.iter().all(|c| *c == Vector3::zeros()));
        assert!(buffers.weight_sum.iter().all(|w| *w == 0.0));
    }

    /// Probe functional Σ ⟨probe, buffers⟩ with the probe zeroed where
    /// outputs are undefined, so the scalar is smooth at the base point.
    fn probe_scalar(buffers: &RenderBuffers, probe: &BufferGrads) -> f64 {
        let mut acc = 0.0;
        for i in 0..buffers.color.len() {
            acc += probe.color.as_slice()[i].dot(&buffers.color.as_slice()[i]);
            acc += probe.depth_acc.as_slice()[i] * buffers.depth_acc.as_slice()[i];
            acc += probe.depth_exp.as_slice()[i] * buffers.depth_exp.as_slice()[i];
            acc += probe.normal.as_slice()[i].dot(&buffers.normal.as_slice()[i]);
            acc += probe.weight_sum.as_slice()[i] * buffers.weight_sum.as_slice()[i];
        }
        acc
    }

    fn make_probe(base: &RenderBuffers, cfg: &RasterConfig, seed: u64) -> BufferGrads {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (base.width(), base.height());
        let mut probe = BufferGrads::zeros(w, h);
        for i in 0..w * h {
            let ws = base.weight_sum.as_slice()[i];
            probe.color.as_mut_slice()[i] =
                Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            probe.depth_acc.as_mut_slice()[i] = rng.gen_range(-1.0..1.0);
            probe.weight_sum.as_mut_slice()[i] = rng.gen_range(-1.0..1.0);
            // Only probe derived outputs where they are robustly defined.
            if ws > 100.0 * cfg.eps_w {
                probe.depth_exp.as_mut_slice()[i] = rng.gen_range(-1.0..1.0);
            }
            if base.normal.as_slice()[i].norm() > 0.5 && ws > 0.01 {
                probe.normal.as_mut_slice()[i] =
                    Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        probe
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
    }

    #[test]
    fn render_backward_matches_finite_differences() {
        for mode in [GaussianMode::ThreeDGS, GaussianMode::TwoDGS] {
            let (scene, mut cam) = random_scene(33, 9, mode);
            cam.pose = CameraPose::new(
                crate::camera::rotation_exp(&Vector3::new(0.03, -0.05, 0.02)),
                Vector3::new(0.05, -0.02, 0.1),
            );
            let mut cfg = RasterConfig::default();
            cfg.cutoff = 0.0; // no skip kinks under FD wiggles
            cfg.scale_floor = if mode == GaussianMode::TwoDGS { 1e-3 } else { 0.0 };
            let base = render_view(&scene, &cam, &cfg);
            let probe = make_probe(&base, &cfg, 77);
            let (scene_grad, pose_grad) = render_backward(&scene, &cam, &cfg, &probe);

            let h = 1e-5;
            let eval = |s: &SplatScene, c: &Camera| probe_scalar(&render_view(s, c, &cfg), &probe);

            // Splat parameters, a few spot-checked splats.
            for idx in [0, 4, 8] {
                let g = scene_grad.per_gaussian[idx];
                let fd_param = |set: &dyn Fn(&mut Gaussian3D, f64)| {
                    let mut plus = scene.clone();
                    set(plus.iter_gaussians_mut().nth(idx).unwrap(), h);
                    let mut minus = scene.clone();
                    set(minus.iter_gaussians_mut().nth(idx).unwrap(), -h);
                    (eval(&plus, &cam) - eval(&minus, &cam)) / (2.0 * h)
                };
                for i in 0..3 {
                    assert!(
                        rel_err(g.mean[i], fd_param(&|gg, d| gg.mean[i] += d)) < 1e-4,
                        "mean[{i}] of splat {idx} ({mode:?})"
                    );
                    assert!(
                        rel_err(g.color[i], fd_param(&|gg, d| gg.color[i] += d)) < 1e-4,
                        "color[{i}] of splat {idx}"
                    );
                }
                let n_scales = if mode == GaussianMode::TwoDGS { 2 } else { 3 };
                for i in 0..n_scales {
                    assert!(
                        rel_err(g.scales[i], fd_param(&|gg, d| gg.scales[i] += d)) < 1e-4,
                        "scales[{i}] of splat {idx} ({mode:?})"
                    );
                }
                let quat_fd = [
                    fd_param(&|gg, d| gg.rotation.w += d),
                    fd_param(&|gg, d| gg.rotation.x += d),
                    fd_param(&|gg, d| gg.rotation.y += d),
                    fd_param(&|gg, d| gg.rotation.z += d),
                ];
                for i in 0..4 {
                    assert!(
                        rel_err(g.quat[i], quat_fd[i]) < 1e-4,
                        "quat[{i}] of splat {idx}: {} vs {}",
                        g.quat[i],
                        quat_fd[i]
                    );
                }
                assert!(rel_err(g.opacity, fd_param(&|gg, d| gg.opacity += d)) < 1e-4);
            }

            // Pose tangent.
            for i in 0..3 {
                let mut axis = Vector3::zeros();
                axis[i] = h;
                let mut cp = cam;
                cp.pose.rotation = crate::camera::rotation_exp(&axis) * cam.pose.rotation;
                let mut cm = cam;
                cm.pose.rotation = crate::camera::rotation_exp(&(-axis)) * cam.pose.rotation;
                let fd = (eval(&scene, &cp) - eval(&scene, &cm)) / (2.0 * h);
                assert!(
                    rel_err(pose_grad.omega[i], fd) < 1e-4,
                    "omega[{i}]: {} vs {}",
                    pose_grad.omega[i],
                    fd
                );

                let mut tp = cam;
                tp.pose.translation[i] += h;
                let mut tm = cam;
                tm.pose.translation[i] -= h;
                let fd_t = (eval(&scene, &tp) - eval(&scene, &tm)) / (2.0 * h);
                assert!(rel_err(pose_grad.trans[i], fd_t) < 1e-4, "trans[{i}]");
            }
        }
    }

    /// D_exp scale covariance: scaling means and camera translation by λ
    /// scales D_exp by exactly λ (scales must follow too so footprints
    /// are unchanged).
    #[test]
    fn expected_depth_is_scale_covariant() {
        let (scene, cam) = random_scene(21, 30, GaussianMode::ThreeDGS);
        let cfg = RasterConfig::default();
        let lambda = 2.0;
        let mut scaled = scene.clone();
        for g in scaled.iter_gaussians_mut() {
            g.mean *= lambda;
            g.scales *= lambda;
        }
        let mut cam2 = cam;
        cam2.pose.translation *= lambda;
        let mut cfg2 = cfg;
        cfg2.low_pass = 0.0;
        let mut cfg1 = cfg;
        cfg1.low_pass = 0.0;
        let a = render_view(&scene, &cam, &cfg1);
        let b = render_view(&scaled, &cam2, &cfg2);
        for i in 0..a.depth_exp.len() {
            let wa = a.weight_sum.as_slice()[i];
            if wa > cfg.eps_w {
                let da = a.depth_exp.as_slice()[i];
                let db = b.depth_exp.as_slice()[i];
                assert!(
                    (db - lambda * da).abs() <= 1e-9 * lambda * da.abs().max(1.0),
                    "pixel {i}: {db} vs λ·{da}"
                );
            }
        }
    }
}
