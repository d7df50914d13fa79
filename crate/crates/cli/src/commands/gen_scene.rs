//! Writes a self-contained two-frame fixture scene to disk.

use std::path::PathBuf;

use serde::Serialize;
use splatprior_core::scene::SplatScene;
use splatprior_core::scenes::{
    analytic_mesh, analytic_render, make_camera_pair_with_size, make_two_plane_room,
    splats_from_analytic,
};
use splatprior_core::splat::GaussianMode;

use crate::commands::REPORT_SCHEMA;
use crate::formats::{
    write_camera, write_mesh_ply, write_pfm, write_ppm, write_splat_ply, FrameEntry, SceneManifest,
};
use crate::config::ModeName;
use crate::{CliError, CliResult};

pub struct GenSceneArgs {
    pub out: PathBuf,
    pub seed: u64,
    pub mode: GaussianMode,
    pub width: usize,
    pub height: usize,
    pub baseline_frac: f64,
    pub rot_deg: f64,
}

#[derive(Debug, Serialize)]
pub struct GenSceneReport {
    pub schema: u32,
    pub command: &'static str,
    pub out: String,
    pub seed: u64,
    pub mode: &'static str,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub splats_per_frame: usize,
    pub gt_mesh_vertices: usize,
    pub scene_radius: f64,
    pub scene_checksum: f64,
}

pub fn run(args: &GenSceneArgs) -> CliResult<GenSceneReport> {
    if args.width == 0 || args.height == 0 {
        return Err(CliError::usage("image dimensions must be positive"));
    }
    let room = make_two_plane_room(args.seed);
    let (cam_a, cam_b, _) = make_camera_pair_with_size(
        &room,
        args.baseline_frac,
        args.rot_deg,
        args.seed,
        args.width,
        args.height,
    );
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let cams = [cam_a, cam_b];
    let mut frames = Vec::new();
    let mut entries = Vec::new();
    for (i, cam) in cams.iter().enumerate() {
        let frame = splats_from_analytic(&room, cam, args.mode);
        let view = analytic_render(&room, cam);
        let entry = FrameEntry {
            splats: format!("splats_{i}.ply"),
            camera: format!("camera_{i}.json"),
            color: format!("color_{i}.ppm"),
            depth: format!("depth_{i}.pfm"),
        };
        write_splat_ply(&args.out.join(&entry.splats), &frame.gaussians)?;
        write_camera(&args.out.join(&entry.camera), cam)?;
        write_ppm(&args.out.join(&entry.color), &view.color)?;
        write_pfm(&args.out.join(&entry.depth), &view.depth)?;
        frames.push(frame);
        entries.push(entry);
    }

    let mesh = analytic_mesh(&room);
    write_mesh_ply(&args.out.join("gt_mesh.ply"), &mesh)?;

    let manifest = SceneManifest {
        schema: 1,
        seed: args.seed,
        mode: ModeName::from_mode(args.mode),
        width: args.width,
        height: args.height,
        radius: room.radius,
        frames: entries,
        gt_mesh: Some("gt_mesh.ply".to_string()),
    };
    manifest.save(&args.out.join("scene.json"))?;

    let scene = SplatScene::new(frames, args.mode);
    Ok(GenSceneReport {
        schema: REPORT_SCHEMA,
        command: "gen-scene",
        out: args.out.display().to_string(),
        seed: args.seed,
        mode: ModeName::from_mode(args.mode).as_str(),
        width: args.width,
        height: args.height,
        frames: scene.frames.len(),
        splats_per_frame: args.width * args.height,
        gt_mesh_vertices: mesh.vertices.len(),
        scene_radius: room.radius,
        scene_checksum: scene.checksum(),
    })
}
