//! Subcommand implementations.
//!
//! Each command is a plain function from parsed arguments to a typed
//! report struct; `main` owns argv parsing, JSON emission and exit
//! codes. Field order in the report structs is the order serde_json
//! writes them, so reports stay byte-stable across runs.

pub mod eval_depth;
pub mod eval_mesh;
pub mod eval_pose;
pub mod fit;
pub mod fuse_mesh;
pub mod gen_scene;
pub mod gradcheck;
pub mod render;

use serde::Serialize;
use splatprior_core::priors::LossReport;

/// Report schema version shared by every subcommand.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossBreakdown {
    pub synthesis: f64,
    pub orient: f64,
    pub align: f64,
    pub flat: f64,
    pub rnc: f64,
    pub total: f64,
}

impl From<&LossReport> for LossBreakdown {
    fn from(r: &LossReport) -> Self {
        LossBreakdown {
            synthesis: r.synthesis,
            orient: r.orient,
            align: r.align,
            flat: r.flat,
            rnc: r.rnc,
            total: r.total,
        }
    }
}
