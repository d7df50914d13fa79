//! Binary little-endian PLY, in the layout community splat viewers expect:
//! positions, DC color coefficients, logit opacity, log scales, and raw
//! (unnormalized) quaternions, all float32. Meshes use plain x/y/z vertices
//! with optional uchar colors and integer-list faces.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::Vector3;
use splatprior_core::geomeval::TriangleMesh;
use splatprior_core::grid::Grid;
use splatprior_core::optim::{logit, sigmoid};
use splatprior_core::splat::{Gaussian3D, GaussianMode, Quaternion};

use crate::{CliError, CliResult};

/// Zeroth spherical-harmonic basis constant; colors are stored as
/// (color - 0.5) / SH_C0 for viewer interop.
pub const SH_C0: f64 = 0.28209479177;

/// Opacities are clamped into this open interval before the logit.
const OPACITY_CLAMP: f64 = 1e-6;

const SPLAT_PROPS: [&str; 14] = [
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
];

pub fn write_splat_ply(path: &Path, splats: &Grid<Gaussian3D>) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", splats.len()));
    for p in SPLAT_PROPS {
        header.push_str(&format!("property float {p}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;

    for g in splats.iter() {
        let f_dc = (g.color - Vector3::repeat(0.5)) / SH_C0;
        let alpha = g.opacity.clamp(OPACITY_CLAMP, 1.0 - OPACITY_CLAMP);
        let vals = [
            g.mean.x,
            g.mean.y,
            g.mean.z,
            f_dc.x,
            f_dc.y,
            f_dc.z,
            logit(alpha),
            g.scales.x.ln(),
            g.scales.y.ln(),
            g.scales.z.ln(),
            g.rotation.w,
            g.rotation.x,
            g.rotation.y,
            g.rotation.z,
        ];
        for v in vals {
            w.write_f32::<LittleEndian>(v as f32).map_err(|e| CliError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a splat cloud written by `write_splat_ply` or any viewer-style
/// PLY carrying the same float properties (extras are skipped). The vertex
/// count must equal `width * height`; splats are row-major.
pub fn read_splat_ply(
    path: &Path,
    mode: GaussianMode,
    width: usize,
    height: usize,
) -> CliResult<Grid<Gaussian3D>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = BufReader::new(file);
    let header = PlyHeader::parse(path, &mut r)?;
    if header.faces.is_some() {
        return Err(CliError::format(path, "expected a splat cloud, found a mesh"));
    }
    if header.vertex_count != width * height {
        return Err(CliError::format(
            path,
            format!(
                "vertex count {} does not match {}x{} grid",
                header.vertex_count, width, height
            ),
        ));
    }
    if header.vertex_props.iter().any(|p| p.kind != PropKind::Float) {
        return Err(CliError::format(path, "splat cloud must be all-float properties"));
    }
    let idx: Vec<usize> = SPLAT_PROPS
        .iter()
        .map(|p| {
            header
                .float_index(p)
                .ok_or_else(|| CliError::format(path, format!("missing property {p}")))
        })
        .collect::<CliResult<_>>()?;

    let mut row = vec![0f32; header.vertex_props.len()];
    let mut splats = Vec::with_capacity(header.vertex_count);
    for _ in 0..header.vertex_count {
        for slot in row.iter_mut() {
            *slot = r.read_f32::<LittleEndian>().map_err(|e| CliError::io(path, e))?;
        }
        let v = |i: usize| row[idx[i]] as f64;
        let mut scales = Vector3::new(v(7).exp(), v(8).exp(), v(9).exp());
        if mode == GaussianMode::TwoDGS {
            scales.z = 0.0;
        }
        splats.push(Gaussian3D {
            mean: Vector3::new(v(0), v(1), v(2)),
            rotation: Quaternion { w: v(10), x: v(11), y: v(12), z: v(13) },
            scales,
            opacity: sigmoid(v(6)),
            color: Vector3::new(v(3), v(4), v(5)) * SH_C0 + Vector3::repeat(0.5),
            mode,
        });
    }
    Ok(Grid::from_vec(width, height, splats))
}

pub fn write_mesh_ply(path: &Path, mesh: &TriangleMesh) -> CliResult<()> {
    if let Some(colors) = &mesh.colors {
        if colors.len() != mesh.vertices.len() {
            return Err(CliError::format(path, "color count does not match vertices"));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", mesh.vertices.len()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    if mesh.colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str(&format!("element face {}\n", mesh.triangles.len()));
    header.push_str("property list uchar int vertex_indices\nend_header\n");
    w.write_all(header.as_bytes()).map_err(|e| CliError::io(path, e))?;

    for (i, v) in mesh.vertices.iter().enumerate() {
        for c in [v.x, v.y, v.z] {
            w.write_f32::<LittleEndian>(c as f32).map_err(|e| CliError::io(path, e))?;
        }
        if let Some(colors) = &mesh.colors {
            for c in [colors[i].x, colors[i].y, colors[i].z] {
                let byte = (c.clamp(0.0, 1.0) * 255.0).round() as u8;
                w.write_u8(byte).map_err(|e| CliError::io(path, e))?;
            }
        }
    }
    for t in &mesh.triangles {
        w.write_u8(3).map_err(|e| CliError::io(path, e))?;
        for &v in t {
            if v > i32::MAX as usize {
                return Err(CliError::format(path, "vertex index exceeds int32"));
            }
            w.write_i32::<LittleEndian>(v as i32).map_err(|e| CliError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_mesh_ply(path: &Path) -> CliResult<TriangleMesh> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = BufReader::new(file);
    let header = PlyHeader::parse(path, &mut r)?;
    let faces = header
        .faces
        .as_ref()
        .ok_or_else(|| CliError::format(path, "expected a mesh, found no face element"))?
        .clone();

    let xyz: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|p| {
            header
                .float_index(p)
                .ok_or_else(|| CliError::format(path, format!("missing property {p}")))
        })
        .collect::<CliResult<_>>()?;
    let rgb: Option<Vec<usize>> = ["red", "green", "blue"]
        .iter()
        .map(|p| header.uchar_index(p))
        .collect();

    let mut vertices = Vec::with_capacity(header.vertex_count);
    let mut colors = rgb.as_ref().map(|_| Vec::with_capacity(header.vertex_count));
    for _ in 0..header.vertex_count {
        let mut floats = vec![0f64; header.vertex_props.len()];
        for (slot, prop) in floats.iter_mut().zip(&header.vertex_props) {
            *slot = match prop.kind {
                PropKind::Float => {
                    r.read_f32::<LittleEndian>().map_err(|e| CliError::io(path, e))? as f64
                }
                PropKind::Uchar => {
                    r.read_u8().map_err(|e| CliError::io(path, e))? as f64
                }
            };
        }
        vertices.push(Vector3::new(floats[xyz[0]], floats[xyz[1]], floats[xyz[2]]));
        if let (Some(out), Some(rgb)) = (colors.as_mut(), rgb.as_ref()) {
            out.push(Vector3::new(
                floats[rgb[0]] / 255.0,
                floats[rgb[1]] / 255.0,
                floats[rgb[2]] / 255.0,
            ));
        }
    }

    let mut triangles = Vec::with_capacity(faces.count);
    for _ in 0..faces.count {
        let n = r.read_u8().map_err(|e| CliError::io(path, e))?;
        if n != 3 {
            return Err(CliError::format(path, format!("face with {n} vertices, want 3")));
        }
        let mut tri = [0usize; 3];
        for slot in &mut tri {
            let v = r.read_i32::<LittleEndian>().map_err(|e| CliError::io(path, e))?;
            if v < 0 || v as usize >= vertices.len() {
                return Err(CliError::format(path, format!("face index {v} out of range")));
            }
            *slot = v as usize;
        }
        triangles.push(tri);
    }
    Ok(TriangleMesh { vertices, triangles, colors })
}

#[derive(Clone, Copy, PartialEq)]
enum PropKind {
    Float,
    Uchar,
}

struct Prop {
    name: String,
    kind: PropKind,
}

#[derive(Clone)]
struct FaceElement {
    count: usize,
}

struct PlyHeader {
    vertex_count: usize,
    vertex_props: Vec<Prop>,
    faces: Option<FaceElement>,
}

impl PlyHeader {
    fn float_index(&self, name: &str) -> Option<usize> {
        self.vertex_props
            .iter()
            .position(|p| p.name == name && p.kind == PropKind::Float)
    }

    fn uchar_index(&self, name: &str) -> Option<usize> {
        self.vertex_props
            .iter()
            .position(|p| p.name == name && p.kind == PropKind::Uchar)
    }

    fn parse(path: &Path, r: &mut impl BufRead) -> CliResult<PlyHeader> {
        let bad = |msg: &str| CliError::format(path, msg.to_string());
        let mut line = String::new();
        let read_line = |r: &mut dyn BufRead, line: &mut String| -> CliResult<()> {
            line.clear();
            let n = r.read_line(line).map_err(|e| CliError::io(path, e))?;
            if n == 0 {
                return Err(CliError::format(path, "truncated header"));
            }
            Ok(())
        };

        read_line(r, &mut line)?;
        if line.trim_end() != "ply" {
            return Err(bad("not a PLY file"));
        }
        read_line(r, &mut line)?;
        if line.trim_end() != "format binary_little_endian 1.0" {
            return Err(bad("only binary little-endian PLY is supported"));
        }

        let mut vertex_count = None;
        let mut vertex_props = Vec::new();
        let mut faces: Option<FaceElement> = None;
        // Which element block property lines currently belong to.
        let mut current: Option<&'static str> = None;
        loop {
            read_line(r, &mut line)?;
            let trimmed = line.trim_end();
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            match fields.as_slice() {
                ["end_header"] => break,
                ["comment", ..] => {}
                ["element", "vertex", n] => {
                    vertex_count =
                        Some(n.parse().map_err(|_| bad("bad vertex count"))?);
                    current = Some("vertex");
                }
                ["element", "face", n] => {
                    faces = Some(FaceElement {
                        count: n.parse().map_err(|_| bad("bad face count"))?,
                    });
                    current = Some("face");
                }
                ["element", ..] => return Err(bad("unsupported element")),
                ["property", "list", "uchar", "int" | "uint", "vertex_indices" | "vertex_index"] =>
                {
                    if current != Some("face") {
                        return Err(bad("list property outside face element"));
                    }
                }
                ["property", kind, name] => {
                    if current != Some("vertex") {
                        return Err(bad("scalar property outside vertex element"));
                    }
                    let kind = match *kind {
                        "float" | "float32" => PropKind::Float,
                        "uchar" | "uint8" => PropKind::Uchar,
                        other => {
                            return Err(CliError::format(
                                path,
                                format!("unsupported property type {other}"),
                            ))
                        }
                    };
                    vertex_props.push(Prop { name: name.to_string(), kind });
                }
                _ => return Err(bad("unrecognized header line")),
            }
        }
        Ok(PlyHeader {
            vertex_count: vertex_count.ok_or_else(|| bad("missing vertex element"))?,
            vertex_props,
            faces,
        })
    }
}
