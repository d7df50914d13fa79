//! Synthetic scenes with analytic ground truth.
//!
//! A scene is a handful of textured, bounded planes, so every quantity
//! the library estimates elsewhere (depth, normals, splat parameters,
//! meshes, relative poses) has a closed form here. The oracle tests
//! and the CLI fixtures are all built on this module.

use crate::camera::{rotation_exp, Camera, CameraIntrinsics, CameraPose};
use crate::geomeval::TriangleMesh;
use crate::grid::Grid;
use crate::scene::Frame;
use crate::splat::{Gaussian3D, GaussianMode, Quaternion};
use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Checkerboard plus two octaves of seeded value noise, evaluated in
/// the plane's own (s, t) coordinates so it is resolution independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneTexture {
    pub seed: u64,
    /// Checker cell edge length in world units.
    pub cell: f64,
    pub color_a: Vector3<f64>,
    pub color_b: Vector3<f64>,
    /// Peak-to-peak amplitude of the noise perturbation per channel.
    pub noise_amp: f64,
    /// Feature size of the base noise octave in world units.
    pub noise_scale: f64,
}

/// SplitMix-style integer hash to a float in [0, 1).
fn hash01(seed: u64, ix: i64, iy: i64) -> f64 {
    let mut h = seed
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Smoothstep-interpolated lattice noise in [0, 1).
fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (ix, iy) = (x.floor(), y.floor());
    let (fx, fy) = (x - ix, y - iy);
    let sx = fx * fx * (3.0 - 2.0 * fx);
    let sy = fy * fy * (3.0 - 2.0 * fy);
    let (ix, iy) = (ix as i64, iy as i64);
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    lerp(
        lerp(hash01(seed, ix, iy), hash01(seed, ix + 1, iy), sx),
        lerp(hash01(seed, ix, iy + 1), hash01(seed, ix + 1, iy + 1), sx),
        sy,
    )
}

impl PlaneTexture {
    pub fn sample(&self, s: f64, t: f64) -> Vector3<f64> {
        let parity =
            ((s / self.cell).floor() as i64 + (t / self.cell).floor() as i64).rem_euclid(2);
        let base = if parity == 0 { self.color_a } else { self.color_b };
        let mut c = base;
        for ch in 0..3 {
            let seed = self.seed.wrapping_add(ch as u64).wrapping_mul(0x0E1B_5A97);
            let n = (value_noise(seed, s / self.noise_scale, t / self.noise_scale)
                + 0.5 * value_noise(seed ^ 0xA5A5, 2.0 * s / self.noise_scale + 17.0, 2.0 * t / self.noise_scale - 9.0))
                / 1.5;
            c[ch] = (c[ch] + self.noise_amp * (n - 0.5)).clamp(0.0, 1.0);
        }
        c
    }
}

/// A textured rectangle: the plane n·x = offset restricted to
/// |(x − center)·tangent_u| ≤ half_u, likewise for v. The tangents and
/// the normal form an orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPlane {
    /// Unit normal, oriented toward the cameras that view it.
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub center: Vector3<f64>,
    pub tangent_u: Vector3<f64>,
    pub tangent_v: Vector3<f64>,
    pub half_u: f64,
    pub half_v: f64,
    pub texture: PlaneTexture,
}

impl AnalyticPlane {
    pub fn plane_coords(&self, p: &Vector3<f64>) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(&self.tangent_u), d.dot(&self.tangent_v))
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let (s, t) = self.plane_coords(p);
        s.abs() <= self.half_u && t.abs() <= self.half_v
    }

    /// Rectangle corners in counter-clockwise order as seen from the
    /// normal side.
    pub fn corners(&self) -> [Vector3<f64>; 4] {
        let u = self.tangent_u * self.half_u;
        let v = self.tangent_v * self.half_v;
        [
            self.center - u - v,
            self.center + u - v,
            self.center + u + v,
            self.center - u + v,
        ]
    }
}

/// A bundle of bounded planes with exact depth/normal/color answers.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticScene {
    pub planes: Vec<AnalyticPlane>,
    /// Nominal scene scale; step sizes and fusion volumes key off it.
    pub radius: f64,
}

impl AnalyticScene {
    pub fn center(&self) -> Vector3<f64> {
        if self.planes.is_empty() {
            return Vector3::zeros();
        }
        self.planes.iter().map(|p| p.center).sum::<Vector3<f64>>() / self.planes.len() as f64
    }
}

/// Floor and back wall meeting at a right angle along the line
/// (x, 1, 4), both facing a camera near the origin that looks down +z.
/// Textures are derived from `seed`; geometry is seed independent.
pub fn make_two_plane_room(seed: u64) -> AnalyticScene {
    let wall = AnalyticPlane {
        normal: Vector3::new(0.0, 0.0, -1.0),
        offset: -4.0,
        center: Vector3::new(0.0, -0.6, 4.0),
        tangent_u: Vector3::new(1.0, 0.0, 0.0),
        tangent_v: Vector3::new(0.0, 1.0, 0.0),
        half_u: 3.6,
        half_v: 1.6,
        texture: PlaneTexture {
            seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
            cell: 0.5,
            color_a: Vector3::new(0.78, 0.80, 0.84),
            color_b: Vector3::new(0.34, 0.38, 0.46),
            noise_amp: 0.25,
            noise_scale: 0.37,
        },
    };
    let floor = AnalyticPlane {
        normal: Vector3::new(0.0, -1.0, 0.0),
        offset: -1.0,
        center: Vector3::new(0.0, 1.0, 2.5),
        tangent_u: Vector3::new(1.0, 0.0, 0.0),
        tangent_v: Vector3::new(0.0, 0.0, 1.0),
        half_u: 3.6,
        half_v: 1.5,
        texture: PlaneTexture {
            seed: seed.wrapping_mul(0xC2B2_AE3D_27D4_EB4F).wrapping_add(2),
            cell: 0.5,
            color_a: Vector3::new(0.72, 0.56, 0.40),
            color_b: Vector3::new(0.30, 0.22, 0.16),
            noise_amp: 0.25,
            noise_scale: 0.41,
        },
    };
    AnalyticScene { planes: vec![wall, floor], radius: 4.0 }
}

/// Ray-cast ground truth for one camera. Misses carry depth 0, black
/// color, and a zero normal.
#[derive(Debug, Clone)]
pub struct AnalyticView {
    pub color: Grid<Vector3<f64>>,
    /// Camera-z depth, not ray length; 0 marks a miss.
    pub depth: Grid<f64>,
    /// World-space plane normal of the hit surface.
    pub normal: Grid<Vector3<f64>>,
}

impl AnalyticView {
    pub fn hit(&self, col: usize, row: usize) -> bool {
        self.depth[(col, row)] > 0.0
    }
}

/// Nearest ray–plane intersection per pixel. Ray directions have unit
/// camera z, so the ray parameter is the camera-z depth directly.
pub fn analytic_render(scene: &AnalyticScene, cam: &Camera) -> AnalyticView {
    let intr = &cam.intrinsics;
    let origin = cam.pose.center();
    let rot_t = cam.pose.rotation.transpose();
    let mut color = Grid::fill(intr.width, intr.height, Vector3::zeros());
    let mut depth = Grid::fill(intr.width, intr.height, 0.0f64);
    let mut normal = Grid::fill(intr.width, intr.height, Vector3::zeros());
    for row in 0..intr.height {
        for col in 0..intr.width {
            let dir = rot_t * intr.ray_dir(col as f64 + 0.5, row as f64 + 0.5);
            let mut best: Option<(f64, usize)> = None;
            for (pi, plane) in scene.planes.iter().enumerate() {
                let denom = plane.normal.dot(&dir);
                if denom.abs() < 1e-12 {
                    continue;
                }
                let t = (plane.offset - plane.normal.dot(&origin)) / denom;
                if t <= 1e-9 || best.is_some_and(|(bt, _)| t >= bt) {
                    continue;
                }
                if plane.contains(&(origin + dir * t)) {
                    best = Some((t, pi));
                }
            }
            if let Some((t, pi)) = best {
                let plane = &scene.planes[pi];
                let (s, tt) = plane.plane_coords(&(origin + dir * t));
                color[(col, row)] = plane.texture.sample(s, tt);
                depth[(col, row)] = t;
                normal[(col, row)] = plane.normal;
            }
        }
    }
    AnalyticView { color, depth, normal }
}

/// Rotation whose third column is `normal`, as a unit quaternion.
fn normal_aligned_rotation(normal: &Vector3<f64>, tangent: &Vector3<f64>) -> Quaternion {
    let t2 = normal.cross(tangent);
    let m = Matrix3::from_columns(&[*tangent, t2, *normal]);
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
    Quaternion::new(q.w, q.i, q.j, q.k)
}

/// One splat per pixel: mean exactly backprojected, rotation aligned
/// so the splat normal equals the plane normal, in-plane scales a
/// fixed fraction of the pixel footprint at that depth, opacity 1,
/// color from the texture. Missed pixels get far-away zero-opacity
/// placeholders so the grid stays dense.
pub fn splats_from_analytic(scene: &AnalyticScene, cam: &Camera, mode: GaussianMode) -> Frame {
    let view = analytic_render(scene, cam);
    let intr = cam.intrinsics;
    // σ ≈ a third of a pixel: wide enough for gap-free coverage with
    // the renderer's low-pass, narrow enough that each pixel center is
    // dominated by its own splat's color.
    const FOOTPRINT: f64 = 0.35;
    let gaussians = Grid::from_fn(intr.width, intr.height, |col, row| {
        let (u, v) = (col as f64 + 0.5, row as f64 + 0.5);
        if view.hit(col, row) {
            let z = view.depth[(col, row)];
            let n = view.normal[(col, row)];
            let plane = scene
                .planes
                .iter()
                .find(|p| p.normal == n)
                .expect("hit normal comes from a scene plane");
            let (su, sv) = (FOOTPRINT * z / intr.fx, FOOTPRINT * z / intr.fy);
            let s3 = match mode {
                GaussianMode::ThreeDGS => 0.25 * su.min(sv),
                GaussianMode::TwoDGS => 0.0,
            };
            Gaussian3D {
                mean: cam.unproject(u, v, z),
                rotation: normal_aligned_rotation(&n, &plane.tangent_u),
                scales: Vector3::new(su, sv, s3),
                opacity: 1.0,
                color: view.color[(col, row)],
                mode,
            }
        } else {
            let z = 2.0 * scene.radius;
            Gaussian3D {
                mean: cam.unproject(u, v, z),
                rotation: Quaternion::IDENTITY,
                scales: Vector3::new(
                    FOOTPRINT * z / intr.fx,
                    FOOTPRINT * z / intr.fy,
                    if mode == GaussianMode::TwoDGS {
                        0.0
                    } else {
                        0.25 * FOOTPRINT * z / intr.fx.max(intr.fy)
                    },
                ),
                opacity: 0.0,
                color: Vector3::zeros(),
                mode,
            }
        }
    });
    let mut frame = Frame::new(intr, gaussians);
    frame.gt_pose = Some(cam.pose);
    frame
}

/// Destroys the geometry of a pixel-aligned frame while keeping its
/// appearance: every splat slides to a uniform random depth along its
/// own pixel ray, with scales stretched by the depth ratio so screen
/// footprints survive. Rotations, opacities and colors stay put.
/// Placeholder splats (opacity 0) are left alone.
pub fn randomize_depths(frame: &mut Frame, cam: &Camera, lo: f64, hi: f64, seed: u64) {
    assert!(lo > 0.0 && hi > lo, "depth range must satisfy 0 < lo < hi");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (frame.gaussians.width(), frame.gaussians.height());
    for row in 0..h {
        for col in 0..w {
            let g = &mut frame.gaussians[(col, row)];
            // rand draws happen for every pixel so the pattern does not
            // depend on which pixels are placeholders.
            let z = rng.gen_range(lo..hi);
            if g.opacity == 0.0 {
                continue;
            }
            let old_z = (cam.pose.rotation * g.mean + cam.pose.translation).z;
            if old_z <= 0.0 {
                continue;
            }
            g.mean = cam.unproject(col as f64 + 0.5, row as f64 + 0.5, z);
            g.scales *= z / old_z;
        }
    }
}

/// The scene's exact surface, tessellated at roughly radius/16 so edge
/// lengths stay small enough for per-vertex frustum cropping.
pub fn analytic_mesh(scene: &AnalyticScene) -> TriangleMesh {
    analytic_mesh_with_edge(scene, scene.radius / 16.0)
}

/// Each rectangle becomes a grid of cells no wider than `max_edge`.
pub fn analytic_mesh_with_edge(scene: &AnalyticScene, max_edge: f64) -> TriangleMesh {
    assert!(max_edge > 0.0);
    let mut mesh = TriangleMesh::default();
    for plane in &scene.planes {
        let nu = ((2.0 * plane.half_u) / max_edge).ceil().max(1.0) as usize;
        let nv = ((2.0 * plane.half_v) / max_edge).ceil().max(1.0) as usize;
        let base = mesh.vertices.len();
        for jv in 0..=nv {
            for iu in 0..=nu {
                let s = plane.half_u * (2.0 * iu as f64 / nu as f64 - 1.0);
                let t = plane.half_v * (2.0 * jv as f64 / nv as f64 - 1.0);
                mesh.vertices.push(plane.center + s * plane.tangent_u + t * plane.tangent_v);
            }
        }
        let stride = nu + 1;
        for jv in 0..nv {
            for iu in 0..nu {
                let a = base + jv * stride + iu;
                let b = a + 1;
                let c = a + stride + 1;
                let d = a + stride;
                mesh.triangles.push([a, b, c]);
                mesh.triangles.push([a, c, d]);
            }
        }
    }
    mesh
}

/// Two cameras looking into the scene: the first at the origin with
/// the identity pose, the second displaced by `baseline_frac·radius`
/// along a jittered x direction and rotated `rot_deg` about a jittered
/// y axis. Returns both cameras plus the exact relative pose.
pub fn make_camera_pair(
    scene: &AnalyticScene,
    baseline_frac: f64,
    rot_deg: f64,
    seed: u64,
) -> (Camera, Camera, CameraPose) {
    make_camera_pair_with_size(scene, baseline_frac, rot_deg, seed, 64, 48)
}

pub fn make_camera_pair_with_size(
    scene: &AnalyticScene,
    baseline_frac: f64,
    rot_deg: f64,
    seed: u64,
    width: usize,
    height: usize,
) -> (Camera, Camera, CameraPose) {
    assert!((0.0..1.0).contains(&baseline_frac), "baseline_frac must be in [0, 1)");
    let intr = CameraIntrinsics::centered(width, height, 70.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = || -> Vector3<f64> {
        Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    };
    let axis = (Vector3::<f64>::y() + 0.12 * jitter()).normalize();
    let rotation = rotation_exp(&(axis * rot_deg.to_radians()));
    let dir = (Vector3::<f64>::x() + 0.12 * jitter()).normalize();
    let center = dir * (baseline_frac * scene.radius);
    let pose_b = CameraPose::new(rotation, -rotation * center);
    (Camera::new(intr, CameraPose::IDENTITY), Camera::new(intr, pose_b), pose_b)
}

/// Peak signal-to-noise ratio in dB between two color images with
/// unit peak; infinite for identical inputs.
pub fn psnr(a: &Grid<Vector3<f64>>, b: &Grid<Vector3<f64>>) -> f64 {
    assert_eq!(a.width(), b.width());
    assert_eq!(a.height(), b.height());
    let mse = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_squared())
        .sum::<f64>()
        / (3 * a.len()) as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}
