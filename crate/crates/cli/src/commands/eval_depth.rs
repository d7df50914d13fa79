//! Depth-map accuracy metrics between two PFM files.

use std::path::PathBuf;

use serde::Serialize;
use splatprior_core::geomeval::depth_metrics;

use crate::commands::REPORT_SCHEMA;
use crate::formats::read_pfm;
use crate::CliResult;

pub struct EvalDepthArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub align_scale: bool,
}

#[derive(Debug, Serialize)]
pub struct EvalDepthReport {
    pub schema: u32,
    pub command: &'static str,
    pub align_scale: bool,
    pub valid_count: usize,
    pub abs_rel: f64,
    pub delta_110: f64,
    pub delta_125: f64,
}

pub fn run(args: &EvalDepthArgs) -> CliResult<EvalDepthReport> {
    let pred = read_pfm(&args.pred)?;
    let gt = read_pfm(&args.gt)?;
    let m = depth_metrics(&pred, &gt, args.align_scale)?;
    Ok(EvalDepthReport {
        schema: REPORT_SCHEMA,
        command: "eval-depth",
        align_scale: args.align_scale,
        valid_count: m.valid_count,
        abs_rel: m.abs_rel,
        delta_110: m.delta_110,
        delta_125: m.delta_125,
    })
}
