//! Optimizes a scene against its target images and writes the result
//! back as a sibling manifest.

use std::path::PathBuf;

use serde::Serialize;
use splatprior_core::optim::fit_scene;
use splatprior_core::priors::TargetView;
use splatprior_core::scenes::randomize_depths;

use crate::commands::{LossBreakdown, REPORT_SCHEMA};
use crate::config::Config;
use crate::formats::{read_ppm, write_splat_ply, SceneDir};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Start from the splats stored in the scene directory.
    Stored,
    /// Keep stored appearance but scatter each splat to a random depth
    /// along its pixel ray before fitting.
    RandomDepth,
}

impl InitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::Stored => "stored",
            InitKind::RandomDepth => "random-depth",
        }
    }
}

impl std::str::FromStr for InitKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stored" => Ok(InitKind::Stored),
            "random-depth" => Ok(InitKind::RandomDepth),
            other => Err(format!("unknown init '{other}' (expected stored|random-depth)")),
        }
    }
}

pub struct FitArgs {
    pub scene: PathBuf,
    pub manifest: Option<String>,
    pub out_manifest: String,
    pub init: InitKind,
    pub iterations: Option<usize>,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema: u32,
    pub command: &'static str,
    pub init: &'static str,
    pub iterations: usize,
    pub frames: usize,
    pub splats: usize,
    pub initial: LossBreakdown,
    #[serde(rename = "final")]
    pub final_loss: LossBreakdown,
}

pub fn run(args: &FitArgs) -> CliResult<FitReport> {
    let cfg = Config::load(args.config.as_deref())?;
    let dir = SceneDir::open(&args.scene, args.manifest.as_deref())?;
    let cams = dir.cameras()?;
    let mut scene = dir.load_scene()?;

    if args.init == InitKind::RandomDepth {
        let radius = dir.manifest.radius;
        if !(radius > 0.0) {
            return Err(CliError::format(&args.scene, "manifest radius must be positive"));
        }
        for (i, frame) in scene.frames.iter_mut().enumerate() {
            randomize_depths(frame, &cams[i], 0.25 * radius, 1.25 * radius, cfg.seed + i as u64);
        }
    }

    let frame_cams: Vec<_> = cams.iter().map(|c| c.pose).collect();
    let mut views = Vec::new();
    for (cam, entry) in cams.iter().zip(&dir.manifest.frames) {
        let image = read_ppm(&dir.resolve(&entry.color))?;
        if image.width() != cam.intrinsics.width || image.height() != cam.intrinsics.height {
            return Err(CliError::format(
                &dir.resolve(&entry.color),
                "target image size does not match the camera",
            ));
        }
        views.push(TargetView { camera: *cam, image });
    }

    let mut fit_cfg = cfg.fit_config(&scene)?;
    if let Some(iters) = args.iterations {
        fit_cfg.iterations = iters;
    }
    let result = fit_scene(&scene, &frame_cams, &views, &fit_cfg)?;

    let mut manifest = dir.manifest.clone();
    for (i, frame) in result.scene.frames.iter().enumerate() {
        let name = format!("fitted_{i}.ply");
        write_splat_ply(&dir.dir.join(&name), &frame.gaussians)?;
        manifest.frames[i].splats = name;
    }
    manifest.save(&dir.dir.join(&args.out_manifest))?;

    let initial = result.history.first().expect("history is never empty");
    let final_loss = result.history.last().expect("history is never empty");
    Ok(FitReport {
        schema: REPORT_SCHEMA,
        command: "fit",
        init: args.init.as_str(),
        iterations: fit_cfg.iterations,
        frames: result.scene.frames.len(),
        splats: result.scene.num_gaussians(),
        initial: initial.into(),
        final_loss: final_loss.into(),
    })
}
