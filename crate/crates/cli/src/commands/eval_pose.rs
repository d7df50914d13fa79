//! Recovers a frame's pose from its pixel-aligned splats and compares
//! it against the camera stored with the scene.

use std::path::PathBuf;

use serde::Serialize;
use splatprior_core::pose::{
    pose_auc, pose_errors, relative_pose_from_scene, PoseMethod, DEFAULT_AUC_THRESHOLDS,
};

use crate::commands::REPORT_SCHEMA;
use crate::config::Config;
use crate::formats::SceneDir;
use crate::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Ls,
    Ransac,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Ls => "ls",
            MethodKind::Ransac => "ransac",
        }
    }
}

impl std::str::FromStr for MethodKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ls" => Ok(MethodKind::Ls),
            "ransac" => Ok(MethodKind::Ransac),
            other => Err(format!("unknown method '{other}' (expected ls|ransac)")),
        }
    }
}

pub struct EvalPoseArgs {
    pub scene: PathBuf,
    pub manifest: Option<String>,
    pub frame: usize,
    pub method: MethodKind,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct EvalPoseReport {
    pub schema: u32,
    pub command: &'static str,
    pub frame: usize,
    pub method: &'static str,
    pub rot_deg: f64,
    pub trans_deg: f64,
    pub auc_thresholds: Vec<f64>,
    pub auc: Vec<f64>,
}

pub fn run(args: &EvalPoseArgs) -> CliResult<EvalPoseReport> {
    let cfg = Config::load(args.config.as_deref())?;
    let dir = SceneDir::open(&args.scene, args.manifest.as_deref())?;
    let scene = dir.load_scene()?;
    let gt = dir.camera(args.frame)?.pose;

    let method = match args.method {
        MethodKind::Ls => PoseMethod::LeastSquares,
        MethodKind::Ransac => cfg.ransac.to_method(cfg.seed),
    };
    let pred = relative_pose_from_scene(&scene, args.frame, &method)?;
    let err = pose_errors(&pred, &gt);
    let auc = pose_auc(&[err], &DEFAULT_AUC_THRESHOLDS);

    Ok(EvalPoseReport {
        schema: REPORT_SCHEMA,
        command: "eval-pose",
        frame: args.frame,
        method: args.method.as_str(),
        rot_deg: err.rot_deg,
        trans_deg: err.trans_deg,
        auc_thresholds: auc.thresholds,
        auc: auc.auc,
    })
}
