//! Indexed triangle meshes: extraction from signed distance volumes and
//! visibility cropping.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::camera::Camera;
use crate::geomeval::mc_tables::{CORNER_OFFSETS, EDGE_CORNERS, EDGE_TABLE, TRIANGLE_TABLE};
use crate::geomeval::tsdf::TsdfVolume;
use crate::{Result, SplatError};

#[derive(Debug, Clone, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Indices into `vertices`, counter-clockwise seen from outside.
    pub triangles: Vec<[usize; 3]>,
    /// Per-vertex colors in [0, 1], if any; same length as `vertices`.
    pub colors: Option<Vec<Vector3<f64>>>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let u = self.vertices[b] - self.vertices[a];
        let v = self.vertices[c] - self.vertices[a];
        0.5 * u.cross(&v).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Drops vertices no triangle references, remapping indices.
    pub fn compact(&mut self) {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept = 0usize;
        for tri in &self.triangles {
            for &v in tri {
                if remap[v] == usize::MAX {
                    remap[v] = kept;
                    kept += 1;
                }
            }
        }
        let mut vertices = vec![Vector3::zeros(); kept];
        let mut colors = self.colors.as_ref().map(|_| vec![Vector3::zeros(); kept]);
        for (old, &new) in remap.iter().enumerate() {
            if new != usize::MAX {
                vertices[new] = self.vertices[old];
                if let (Some(dst), Some(src)) = (colors.as_mut(), self.colors.as_ref()) {
                    dst[new] = src[old];
                }
            }
        }
        for tri in &mut self.triangles {
            for v in tri.iter_mut() {
                *v = remap[*v];
            }
        }
        self.vertices = vertices;
        self.colors = colors;
    }
}

/// Marching cubes at iso level zero over the fully observed cells (all eight
/// corner weights positive). Vertices on shared cell edges are welded, slivers
/// are dropped, and only the largest connected component survives; a volume
/// with no sign change yields `EmptyMesh`.
pub fn extract_mesh(vol: &TsdfVolume) -> Result<TriangleMesh> {
    let [nx, ny, nz] = vol.dims;
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(SplatError::invalid("extract_mesh: volume has no cells"));
    }

    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    // Global edge key: lowest-coordinate sample plus edge axis.
    let mut edge_vertex: HashMap<(usize, usize, usize, u8), usize> = HashMap::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut vals = [0.0f64; 8];
                let mut case = 0usize;
                let mut observed = true;
                for (c, off) in CORNER_OFFSETS.iter().enumerate() {
                    let (ci, cj, ck) = (i + off[0], j + off[1], k + off[2]);
                    if vol.weight(ci, cj, ck) == 0.0 {
                        observed = false;
                        break;
                    }
                    vals[c] = vol.tsdf(ci, cj, ck);
                    if vals[c] < 0.0 {
                        case |= 1 << c;
                    }
                }
                if !observed || EDGE_TABLE[case] == 0 {
                    continue;
                }

                let mut cell_verts = [usize::MAX; 12];
                for (e, corners) in EDGE_CORNERS.iter().enumerate() {
                    if EDGE_TABLE[case] & (1 << e) == 0 {
                        continue;
                    }
                    let (a, b) = (corners[0], corners[1]);
                    let oa = CORNER_OFFSETS[a];
                    let ob = CORNER_OFFSETS[b];
                    let ga = (i + oa[0], j + oa[1], k + oa[2]);
                    let axis = if oa[0] != ob[0] { 0 } else if oa[1] != ob[1] { 1 } else { 2 };
                    // Key on the lower endpoint along the edge axis.
                    let gb = (i + ob[0], j + ob[1], k + ob[2]);
                    let lo = [ga, gb][usize::from(gb <= ga)];
                    let key = (lo.0, lo.1, lo.2, axis as u8);
                    let idx = *edge_vertex.entry(key).or_insert_with(|| {
                        let va = vals[a];
                        let vb = vals[b];
                        let denom = va - vb;
                        let t = if denom.abs() < 1e-300 { 0.5 } else { (va / denom).clamp(0.0, 1.0) };
                        let pa = vol.sample_point(ga.0, ga.1, ga.2);
                        let pb = vol.sample_point(gb.0, gb.1, gb.2);
                        vertices.push(pa + t * (pb - pa));
                        vertices.len() - 1
                    });
                    cell_verts[e] = idx;
                }

                let tri_edges = &TRIANGLE_TABLE[case];
                let mut t = 0;
                while tri_edges[t] >= 0 {
                    let tri = [
                        cell_verts[tri_edges[t] as usize],
                        cell_verts[tri_edges[t + 1] as usize],
                        cell_verts[tri_edges[t + 2] as usize],
                    ];
                    if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                        triangles.push(tri);
                    }
                    t += 3;
                }
            }
        }
    }

    if triangles.is_empty() {
        return Err(SplatError::EmptyMesh("extract_mesh: no zero crossing".into()));
    }

    let mut mesh = TriangleMesh { vertices, triangles, colors: None };
    keep_largest_component(&mut mesh);
    mesh.triangles.retain(|t| {
        let u = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        let v = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        u.cross(&v).norm() > 1e-12 * vol.voxel_size * vol.voxel_size
    });
    mesh.compact();
    if mesh.is_empty() {
        return Err(SplatError::EmptyMesh("extract_mesh: only degenerate faces".into()));
    }
    Ok(mesh)
}

/// Union-find over vertices; components connect through triangle edges and
/// the one with the most triangles wins.
fn keep_largest_component(mesh: &mut TriangleMesh) {
    let mut parent: Vec<usize> = (0..mesh.vertices.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for tri in &mesh.triangles {
        let r0 = find(&mut parent, tri[0]);
        let r1 = find(&mut parent, tri[1]);
        let r2 = find(&mut parent, tri[2]);
        parent[r1] = r0;
        parent[r2] = find(&mut parent, r1);
    }
    let mut count: HashMap<usize, usize> = HashMap::new();
    for t in 0..mesh.triangles.len() {
        let root = find(&mut parent, mesh.triangles[t][0]);
        *count.entry(root).or_insert(0) += 1;
    }
    // Ties break on the lowest root so extraction stays deterministic.
    let best = count
        .iter()
        .max_by_key(|(&root, &n)| (n, usize::MAX - root))
        .map(|(&root, _)| root);
    if let Some(best) = best {
        let parent = &mut parent;
        mesh.triangles.retain(|t| find(parent, t[0]) == best);
    }
}

/// Keeps triangles with at least one vertex inside any camera frustum, i.e.
/// projecting in bounds with depth in (near, far). Unreferenced vertices are
/// dropped. Applying the same crop twice is a no-op.
pub fn frustum_crop(
    mesh: &TriangleMesh,
    cams: &[Camera],
    near: f64,
    far: f64,
) -> TriangleMesh {
    let inside = |p: &Vector3<f64>| {
        cams.iter().any(|cam| {
            let pc = cam.to_camera(p);
            pc.z > near && pc.z < far && cam.intrinsics.in_bounds(&cam.intrinsics.project(&pc))
        })
    };
    let keep: Vec<bool> = mesh.vertices.iter().map(inside).collect();
    let mut out = TriangleMesh {
        vertices: mesh.vertices.clone(),
        triangles: mesh
            .triangles
            .iter()
            .filter(|t| t.iter().any(|&v| keep[v]))
            .copied()
            .collect(),
        colors: mesh.colors.clone(),
    };
    out.compact();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, CameraPose};
    use crate::geomeval::tsdf::TsdfVoxel;

    /// Fully observed volume sampling a signed distance field.
    fn volume_from_sdf(
        origin: Vector3<f64>,
        voxel: f64,
        dims: [usize; 3],
        sdf: impl Fn(&Vector3<f64>) -> f64,
    ) -> TsdfVolume {
        let mut vol = TsdfVolume::new(origin, voxel, dims);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = vol.sample_point(i, j, k);
                    let idx = vol.index(i, j, k);
                    vol.voxels[idx] = TsdfVoxel {
                        tsdf: (sdf(&p) / vol.truncation).clamp(-1.0, 1.0),
                        weight: 1.0,
                    };
                }
            }
        }
        vol
    }

    #[test]
    fn plane_extracts_at_the_right_height() {
        let plane_z = 0.437;
        let vol = volume_from_sdf(Vector3::zeros(), 0.1, [11, 11, 11], |p| plane_z - p.z);
        let mesh = extract_mesh(&vol).unwrap();
        assert!(!mesh.is_empty());
        for v in &mesh.vertices {
            assert!((v.z - plane_z).abs() < vol.voxel_size, "vertex at z {}", v.z);
        }
        // Linear fields are reproduced exactly by edge interpolation.
        for v in &mesh.vertices {
            assert!((v.z - plane_z).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_radius_is_recovered_within_half_a_voxel() {
        let r = 0.55;
        let c = Vector3::new(0.75, 0.75, 0.75);
        let vol = volume_from_sdf(Vector3::zeros(), 0.05, [31, 31, 31], |p| (p - c).norm() - r);
        let mesh = extract_mesh(&vol).unwrap();
        let mean_err: f64 = mesh
            .vertices
            .iter()
            .map(|v| ((v - c).norm() - r).abs())
            .sum::<f64>()
            / mesh.vertices.len() as f64;
        assert!(mean_err < 0.5 * vol.voxel_size, "mean radial error {mean_err}");
    }

    #[test]
    fn all_positive_volume_is_empty() {
        let vol = volume_from_sdf(Vector3::zeros(), 0.1, [5, 5, 5], |_| 1.0);
        assert!(matches!(extract_mesh(&vol), Err(SplatError::EmptyMesh(_))));
    }

    #[test]
    fn unobserved_corners_suppress_cells() {
        let plane_z = 0.25;
        let mut vol = volume_from_sdf(Vector3::zeros(), 0.1, [6, 6, 6], |p| plane_z - p.z);
        // Knock out one sample; the four cells sharing it must vanish.
        let idx = vol.index(2, 2, 2);
        vol.voxels[idx].weight = 0.0;
        let mesh = extract_mesh(&vol).unwrap();
        let full = extract_mesh(&volume_from_sdf(Vector3::zeros(), 0.1, [6, 6, 6], |p| {
            plane_z - p.z
        }))
        .unwrap();
        assert!(mesh.triangles.len() < full.triangles.len());
        for v in &mesh.vertices {
            let dx = (v.x - 0.2).abs();
            let dy = (v.y - 0.2).abs();
            assert!(dx.max(dy) >= 0.1 - 1e-12, "vertex survived at {v:?}");
        }
    }

    #[test]
    fn shared_edges_are_welded() {
        let vol = volume_from_sdf(Vector3::zeros(), 0.1, [8, 8, 8], |p| 0.33 - p.z);
        let mesh = extract_mesh(&vol).unwrap();
        // A 7x7 cell sheet has an 8x8 vertex lattice once edges are shared.
        assert_eq!(mesh.vertices.len(), 64);
        let mut seen = std::collections::HashSet::new();
        for v in &mesh.vertices {
            assert!(seen.insert((format!("{:.9}", v.x), format!("{:.9}", v.y))));
        }
    }

    #[test]
    fn only_the_largest_component_survives() {
        // Two spheres, radii 0.3 and 0.15, far apart.
        let c1 = Vector3::new(0.5, 0.5, 0.5);
        let c2 = Vector3::new(1.7, 0.5, 0.5);
        let vol = volume_from_sdf(Vector3::zeros(), 0.05, [45, 21, 21], |p| {
            ((p - c1).norm() - 0.3).min((p - c2).norm() - 0.15)
        });
        let mesh = extract_mesh(&vol).unwrap();
        for v in &mesh.vertices {
            assert!((v - c1).norm() < 0.5, "small component survived at {v:?}");
        }
    }

    fn crop_cam() -> Camera {
        Camera::new(CameraIntrinsics::centered(32, 24, 60.0), CameraPose::IDENTITY)
    }

    fn strip_mesh() -> TriangleMesh {
        // Quads along x at z = 2, one unit apart, centered on the axis.
        let mut mesh = TriangleMesh::default();
        for q in 0..5 {
            let x = -4.0 + 2.0 * q as f64;
            let base = mesh.vertices.len();
            mesh.vertices.extend([
                Vector3::new(x - 0.2, -0.2, 2.0),
                Vector3::new(x + 0.2, -0.2, 2.0),
                Vector3::new(x + 0.2, 0.2, 2.0),
                Vector3::new(x - 0.2, 0.2, 2.0),
            ]);
            mesh.triangles.push([base, base + 1, base + 2]);
            mesh.triangles.push([base, base + 2, base + 3]);
        }
        mesh
    }

    #[test]
    fn crop_keeps_visible_and_drops_hidden() {
        let mesh = strip_mesh();
        // 60 degree fov at z=2 sees |x| < 1.15: only the middle quad.
        let cropped = frustum_crop(&mesh, &[crop_cam()], 1e-3, 100.0);
        assert_eq!(cropped.triangles.len(), 2);
        assert_eq!(cropped.vertices.len(), 4);
        for v in &cropped.vertices {
            assert!(v.x.abs() < 0.5);
        }
    }

    #[test]
    fn crop_is_idempotent() {
        let mesh = strip_mesh();
        let once = frustum_crop(&mesh, &[crop_cam()], 1e-3, 100.0);
        let twice = frustum_crop(&once, &[crop_cam()], 1e-3, 100.0);
        assert_eq!(once.vertices, twice.vertices);
        assert_eq!(once.triangles, twice.triangles);
    }

    #[test]
    fn mesh_behind_all_cameras_is_empty() {
        let mut mesh = strip_mesh();
        for v in &mut mesh.vertices {
            v.z = -2.0;
        }
        let cropped = frustum_crop(&mesh, &[crop_cam()], 1e-3, 100.0);
        assert!(cropped.is_empty());
        assert!(cropped.vertices.is_empty());
    }

    #[test]
    fn triangles_straddling_the_frustum_stay() {
        let mut mesh = TriangleMesh::default();
        mesh.vertices.extend([
            Vector3::new(0.0, 0.0, 2.0),   // inside
            Vector3::new(50.0, 0.0, 2.0),  // far outside
            Vector3::new(50.0, 1.0, 2.0),  // far outside
        ]);
        mesh.triangles.push([0, 1, 2]);
        let cropped = frustum_crop(&mesh, &[crop_cam()], 1e-3, 100.0);
        assert_eq!(cropped.triangles.len(), 1);
        assert_eq!(cropped.vertices.len(), 3);
    }

    #[test]
    fn union_of_frusta_is_used() {
        let mesh = strip_mesh();
        let left = Camera::new(
            CameraIntrinsics::centered(32, 24, 60.0),
            CameraPose::new(nalgebra::Matrix3::identity(), Vector3::new(4.0, 0.0, 0.0)),
        );
        let right = Camera::new(
            CameraIntrinsics::centered(32, 24, 60.0),
            CameraPose::new(nalgebra::Matrix3::identity(), Vector3::new(-4.0, 0.0, 0.0)),
        );
        let cropped = frustum_crop(&mesh, &[left, right], 1e-3, 100.0);
        let xs: std::collections::BTreeSet<i64> =
            cropped.vertices.iter().map(|v| v.x.round() as i64).collect();
        assert!(xs.contains(&4) && xs.contains(&-4));
        assert_eq!(cropped.triangles.len(), 4);
    }

    #[test]
    fn near_and_far_planes_are_strict() {
        let mut mesh = TriangleMesh::default();
        mesh.vertices.extend([
            Vector3::new(0.0, 0.0, 0.5),
            Vector3::new(0.1, 0.0, 0.5),
            Vector3::new(0.0, 0.1, 0.5),
        ]);
        mesh.triangles.push([0, 1, 2]);
        assert!(frustum_crop(&mesh, &[crop_cam()], 1.0, 100.0).is_empty());
        assert!(!frustum_crop(&mesh, &[crop_cam()], 0.1, 100.0).is_empty());
        assert!(frustum_crop(&mesh, &[crop_cam()], 1e-3, 0.4).is_empty());
    }

    #[test]
    fn compact_preserves_colors() {
        let mut mesh = TriangleMesh {
            vertices: vec![Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()],
            triangles: vec![[0, 2, 3]],
            colors: Some(vec![
                Vector3::new(0.1, 0.0, 0.0),
                Vector3::new(0.2, 0.0, 0.0),
                Vector3::new(0.3, 0.0, 0.0),
                Vector3::new(0.4, 0.0, 0.0),
            ]),
        };
        mesh.compact();
        assert_eq!(mesh.vertices.len(), 3);
        let colors = mesh.colors.unwrap();
        assert_eq!(colors[0].x, 0.1);
        assert_eq!(colors[1].x, 0.3);
        assert_eq!(colors[2].x, 0.4);
    }
}
