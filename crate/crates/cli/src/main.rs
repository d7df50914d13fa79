use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use splatprior_cli::commands::{
    eval_depth, eval_mesh, eval_pose, fit, fuse_mesh, gen_scene, gradcheck, render,
};
use splatprior_cli::config::{Config, ModeName};
use splatprior_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "splatprior", version, about = "Depth-prior splat fitting and evaluation")]
struct Cli {
    /// Worker thread count for parallel sections. Changes wall time
    /// only; every emitted number is identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic two-frame scene with exact ground truth.
    GenScene {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<ModeName>,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 48)]
        height: usize,
        #[arg(long, default_value_t = 0.1)]
        baseline_frac: f64,
        #[arg(long, default_value_t = 8.0)]
        rot_deg: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render one frame of a scene directory.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        manifest: Option<String>,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long)]
        out_color: Option<PathBuf>,
        #[arg(long)]
        out_depth: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Optimize splats against the scene's target images.
    Fit {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        manifest: Option<String>,
        #[arg(long, default_value = "fitted.json")]
        out_manifest: String,
        #[arg(long, default_value = "stored")]
        init: fit::InitKind,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Recover a frame's camera pose from its splats and score it.
    EvalPose {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        manifest: Option<String>,
        #[arg(long, default_value_t = 1)]
        frame: usize,
        #[arg(long, default_value = "ls")]
        method: eval_pose::MethodKind,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare two depth maps stored as PFM.
    EvalDepth {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Median-align predicted depth scale before scoring.
        #[arg(long)]
        align_scale: bool,
    },
    /// Fuse rendered depth into a triangle mesh.
    FuseMesh {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        manifest: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sampled chamfer metrics between two mesh PLYs.
    EvalMesh {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Crop both meshes to this scene's camera frusta first.
        #[arg(long)]
        crop_scene: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Validate analytic gradients against central differences.
    Gradcheck {
        #[arg(long)]
        loss: gradcheck::LossKind,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<ModeName>,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[cfg(feature = "parallel")]
fn init_threads(n: usize) {
    // Ignore the error: the global pool can only be built once, and a
    // second initialization means it is already sized.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_n: usize) {}

fn emit<T: Serialize>(report: &T) -> CliResult<()> {
    let line = serde_json::to_string(report)
        .map_err(|e| CliError::usage(format!("report serialization failed: {e}")))?;
    println!("{line}");
    Ok(())
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::GenScene { out, seed, mode, width, height, baseline_frac, rot_deg, config } => {
            let cfg = Config::load(config.as_deref())?;
            let report = gen_scene::run(&gen_scene::GenSceneArgs {
                out,
                seed: seed.unwrap_or(cfg.seed),
                mode: mode.unwrap_or(cfg.mode).to_mode(),
                width,
                height,
                baseline_frac,
                rot_deg,
            })?;
            emit(&report)?;
        }
        Command::Render { scene, manifest, frame, out_color, out_depth, config } => {
            let report =
                render::run(&render::RenderArgs { scene, manifest, frame, out_color, out_depth, config })?;
            emit(&report)?;
        }
        Command::Fit { scene, manifest, out_manifest, init, iterations, config } => {
            let report = fit::run(&fit::FitArgs {
                scene,
                manifest,
                out_manifest,
                init,
                iterations,
                config,
            })?;
            emit(&report)?;
        }
        Command::EvalPose { scene, manifest, frame, method, config } => {
            let report =
                eval_pose::run(&eval_pose::EvalPoseArgs { scene, manifest, frame, method, config })?;
            emit(&report)?;
        }
        Command::EvalDepth { pred, gt, align_scale } => {
            let report = eval_depth::run(&eval_depth::EvalDepthArgs { pred, gt, align_scale })?;
            emit(&report)?;
        }
        Command::FuseMesh { scene, manifest, out, config } => {
            let report = fuse_mesh::run(&fuse_mesh::FuseMeshArgs { scene, manifest, out, config })?;
            emit(&report)?;
        }
        Command::EvalMesh { pred, gt, samples, seed, crop_scene, manifest, config } => {
            let report = eval_mesh::run(&eval_mesh::EvalMeshArgs {
                pred,
                gt,
                samples,
                seed,
                crop_scene,
                manifest,
                config,
            })?;
            emit(&report)?;
        }
        Command::Gradcheck { loss, seed, mode, step, tol, config } => {
            let cfg = Config::load(config.as_deref())?;
            let report = gradcheck::run(&gradcheck::GradcheckArgs {
                loss,
                seed: seed.unwrap_or(cfg.seed),
                mode: mode.map(ModeName::to_mode),
                step,
                tol,
                config,
            })?;
            let pass = report.pass;
            emit(&report)?;
            if !pass {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        init_threads(n);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
