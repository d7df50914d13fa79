//! Fuses rendered depth along the first-to-last frame trajectory into
//! a triangle mesh.

use std::path::PathBuf;

use serde::Serialize;
use splatprior_core::geomeval::{reconstruct_mesh_pipeline, MeshPipelineConfig};

use crate::commands::REPORT_SCHEMA;
use crate::config::Config;
use crate::formats::{write_mesh_ply, SceneDir};
use crate::{CliError, CliResult};

pub struct FuseMeshArgs {
    pub scene: PathBuf,
    pub manifest: Option<String>,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct FuseMeshReport {
    pub schema: u32,
    pub command: &'static str,
    pub n_views: usize,
    pub voxel_size: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub total_area: f64,
}

pub fn run(args: &FuseMeshArgs) -> CliResult<FuseMeshReport> {
    let cfg = Config::load(args.config.as_deref())?;
    let dir = SceneDir::open(&args.scene, args.manifest.as_deref())?;
    let scene = dir.load_scene()?;
    let cams = dir.cameras()?;
    if cams.len() < 2 {
        return Err(CliError::usage("fuse-mesh needs a scene with at least two frames"));
    }

    let voxel = cfg
        .mesh
        .voxel_size
        .unwrap_or_else(|| scene.radius() / cfg.mesh.voxel_divisor);
    if !(voxel > 0.0) {
        return Err(CliError::usage("voxel size must be positive"));
    }
    let pipeline = MeshPipelineConfig {
        n_views: cfg.mesh.n_views,
        voxel_size: Some(voxel),
        truncation_voxels: cfg.mesh.truncation_voxels,
        raster: cfg.raster.to_raster(&scene),
    };
    let mesh =
        reconstruct_mesh_pipeline(&scene, &cams[0], &cams[cams.len() - 1], &pipeline)?;
    write_mesh_ply(&args.out, &mesh)?;

    Ok(FuseMeshReport {
        schema: REPORT_SCHEMA,
        command: "fuse-mesh",
        n_views: pipeline.n_views,
        voxel_size: voxel,
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        total_area: mesh.total_area(),
    })
}
