//! Renders one frame of a scene directory and reports buffer stats.

use std::path::PathBuf;

use nalgebra::Vector3;
use serde::Serialize;
use splatprior_core::grid::Grid;
use splatprior_core::raster::render_view;

use crate::commands::REPORT_SCHEMA;
use crate::config::Config;
use crate::formats::{write_pfm, write_ppm, SceneDir};
use crate::CliResult;

pub struct RenderArgs {
    pub scene: PathBuf,
    pub manifest: Option<String>,
    pub frame: usize,
    pub out_color: Option<PathBuf>,
    pub out_depth: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct RenderReport {
    pub schema: u32,
    pub command: &'static str,
    pub frame: usize,
    pub width: usize,
    pub height: usize,
    pub valid_depth_fraction: f64,
    pub mean_valid_depth: f64,
    pub mean_color: [f64; 3],
}

pub fn run(args: &RenderArgs) -> CliResult<RenderReport> {
    let cfg = Config::load(args.config.as_deref())?;
    let dir = SceneDir::open(&args.scene, args.manifest.as_deref())?;
    let scene = dir.load_scene()?;
    let cam = dir.camera(args.frame)?;
    let raster = cfg.raster.to_raster(&scene);

    let buffers = render_view(&scene, &cam, &raster);
    let (w, h) = (cam.intrinsics.width, cam.intrinsics.height);
    let depth = Grid::from_fn(w, h, |col, row| {
        if buffers.depth_valid(col, row, &raster) {
            buffers.depth_exp[(col, row)]
        } else {
            0.0
        }
    });

    let mut valid = 0usize;
    let mut depth_sum = 0.0;
    let mut color_sum = Vector3::zeros();
    for row in 0..h {
        for col in 0..w {
            let d = depth[(col, row)];
            if d > 0.0 {
                valid += 1;
                depth_sum += d;
            }
            color_sum += buffers.color[(col, row)];
        }
    }

    if let Some(path) = &args.out_color {
        write_ppm(path, &buffers.color)?;
    }
    if let Some(path) = &args.out_depth {
        write_pfm(path, &depth)?;
    }

    let n = (w * h) as f64;
    let mean_color = color_sum / n;
    Ok(RenderReport {
        schema: REPORT_SCHEMA,
        command: "render",
        frame: args.frame,
        width: w,
        height: h,
        valid_depth_fraction: valid as f64 / n,
        mean_valid_depth: if valid > 0 { depth_sum / valid as f64 } else { 0.0 },
        mean_color: [mean_color.x, mean_color.y, mean_color.z],
    })
}
