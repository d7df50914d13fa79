//! Sampled accuracy/completeness/chamfer between two mesh PLYs.

use std::path::PathBuf;

use serde::Serialize;
use splatprior_core::geomeval::{frustum_crop, mesh_metrics};

use crate::commands::REPORT_SCHEMA;
use crate::config::Config;
use crate::formats::{read_mesh_ply, SceneDir};
use crate::CliResult;

pub struct EvalMeshArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// When set, both meshes are cropped to the union of this scene's
    /// camera frusta before sampling, so unobserved surface does not
    /// count against completeness.
    pub crop_scene: Option<PathBuf>,
    pub manifest: Option<String>,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct EvalMeshReport {
    pub schema: u32,
    pub command: &'static str,
    pub samples: usize,
    pub seed: u64,
    pub cropped: bool,
    pub accuracy: f64,
    pub completeness: f64,
    pub chamfer: f64,
}

pub fn run(args: &EvalMeshArgs) -> CliResult<EvalMeshReport> {
    let cfg = Config::load(args.config.as_deref())?;
    let samples = args.samples.unwrap_or(cfg.mesh.metric_samples);
    let seed = args.seed.unwrap_or(cfg.seed);

    let mut pred = read_mesh_ply(&args.pred)?;
    let mut gt = read_mesh_ply(&args.gt)?;

    let cropped = if let Some(scene_path) = &args.crop_scene {
        let dir = SceneDir::open(scene_path, args.manifest.as_deref())?;
        let cams = dir.cameras()?;
        let far = 10.0 * dir.manifest.radius.max(1.0);
        pred = frustum_crop(&pred, &cams, 1e-3, far);
        gt = frustum_crop(&gt, &cams, 1e-3, far);
        true
    } else {
        false
    };

    let m = mesh_metrics(&pred, &gt, samples, seed)?;
    Ok(EvalMeshReport {
        schema: REPORT_SCHEMA,
        command: "eval-mesh",
        samples,
        seed,
        cropped,
        accuracy: m.accuracy,
        completeness: m.completeness,
        chamfer: m.chamfer,
    })
}
