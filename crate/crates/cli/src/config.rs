//! Run configuration: one JSON file covering every tunable, with the
//! defaults the rest of the crate is calibrated around. Unknown keys are
//! rejected so typos fail loudly instead of silently using a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use splatprior_core::optim::{FitConfig, StepSizes};
use splatprior_core::pose::{PoseMethod, RansacConfig};
use splatprior_core::priors::{LossOptions, OrientationTerm, PriorWeights};
use splatprior_core::raster::RasterConfig;
use splatprior_core::splat::GaussianMode;
use splatprior_core::SplatScene;

use crate::{CliError, CliResult};

pub const SEED_ENV: &str = "SPLATPRIOR_SEED";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub mode: ModeName,
    pub priors: PriorsSection,
    pub loss: LossSection,
    pub fit: FitSection,
    pub raster: RasterSection,
    pub ransac: RansacSection,
    pub mesh: MeshSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            mode: ModeName::ThreeDgs,
            priors: PriorsSection::default(),
            loss: LossSection::default(),
            fit: FitSection::default(),
            raster: RasterSection::default(),
            ransac: RansacSection::default(),
            mesh: MeshSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeName {
    #[serde(rename = "3dgs")]
    ThreeDgs,
    #[serde(rename = "2dgs")]
    TwoDgs,
}

impl ModeName {
    pub fn to_mode(self) -> GaussianMode {
        match self {
            ModeName::ThreeDgs => GaussianMode::ThreeDGS,
            ModeName::TwoDgs => GaussianMode::TwoDGS,
        }
    }

    pub fn from_mode(mode: GaussianMode) -> Self {
        match mode {
            GaussianMode::ThreeDGS => ModeName::ThreeDgs,
            GaussianMode::TwoDGS => ModeName::TwoDgs,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::ThreeDgs => "3dgs",
            ModeName::TwoDgs => "2dgs",
        }
    }
}

impl std::str::FromStr for ModeName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "3dgs" => Ok(ModeName::ThreeDgs),
            "2dgs" => Ok(ModeName::TwoDgs),
            other => Err(format!("unknown mode {other:?}, expected 3dgs or 2dgs")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorsSection {
    pub lambda_align: f64,
    pub lambda_orient: f64,
    pub lambda_flat: f64,
    pub w0: f64,
    pub kappa: f64,
    pub quantile: f64,
    pub epsilon: f64,
    pub huber_delta: f64,
}

impl Default for PriorsSection {
    fn default() -> Self {
        let w = PriorWeights::default();
        PriorsSection {
            lambda_align: w.lambda_a,
            lambda_orient: w.lambda_o,
            lambda_flat: w.lambda_flat,
            w0: w.w0,
            kappa: w.kappa,
            quantile: w.q_quantile,
            epsilon: w.epsilon,
            huber_delta: w.delta_huber,
        }
    }
}

impl PriorsSection {
    pub fn to_weights(&self) -> PriorWeights {
        PriorWeights {
            lambda_a: self.lambda_align,
            lambda_o: self.lambda_orient,
            lambda_flat: self.lambda_flat,
            w0: self.w0,
            kappa: self.kappa,
            q_quantile: self.quantile,
            epsilon: self.epsilon,
            delta_huber: self.huber_delta,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSection {
    /// 0 keeps synthesis pure L1.
    pub ssim_weight: f64,
    /// "mean-grid" or "rendered-normal".
    pub orientation_term: String,
    /// Only read for "rendered-normal".
    pub detach_depth: bool,
}

impl Default for LossSection {
    fn default() -> Self {
        LossSection {
            ssim_weight: 0.0,
            orientation_term: "mean-grid".to_string(),
            detach_depth: true,
        }
    }
}

impl LossSection {
    pub fn to_term(&self) -> CliResult<OrientationTerm> {
        match self.orientation_term.as_str() {
            "mean-grid" => Ok(OrientationTerm::MeanGridOrientation),
            "rendered-normal" => Ok(OrientationTerm::RenderedNormalConsistency {
                detach_depth: self.detach_depth,
            }),
            other => Err(CliError::usage(format!(
                "config: unknown orientation_term {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub iterations: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection { iterations: 300 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RasterSection {
    pub square_scales: bool,
    pub low_pass: f64,
    pub cutoff: f64,
    pub z_near: f64,
    pub eps_w: f64,
    /// `None` derives the floor from the scene extent.
    pub scale_floor: Option<f64>,
}

impl Default for RasterSection {
    fn default() -> Self {
        let r = RasterConfig::default();
        RasterSection {
            square_scales: r.square_scales,
            low_pass: r.low_pass,
            cutoff: r.cutoff,
            z_near: r.z_near,
            eps_w: r.eps_w,
            scale_floor: None,
        }
    }
}

impl RasterSection {
    pub fn to_raster(&self, scene: &SplatScene) -> RasterConfig {
        let derived = RasterConfig::for_scene(scene);
        RasterConfig {
            square_scales: self.square_scales,
            low_pass: self.low_pass,
            cutoff: self.cutoff,
            z_near: self.z_near,
            eps_w: self.eps_w,
            scale_floor: self.scale_floor.unwrap_or(derived.scale_floor),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RansacSection {
    pub threshold_px: f64,
    pub max_iters: usize,
    pub confidence: f64,
}

impl Default for RansacSection {
    fn default() -> Self {
        let r = RansacConfig::default();
        RansacSection {
            threshold_px: r.threshold_px,
            max_iters: r.max_iters,
            confidence: r.confidence,
        }
    }
}

impl RansacSection {
    pub fn to_method(&self, seed: u64) -> PoseMethod {
        PoseMethod::Ransac(RansacConfig {
            threshold_px: self.threshold_px,
            max_iters: self.max_iters,
            confidence: self.confidence,
            seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub n_views: usize,
    /// Used when `voxel_size` is absent: voxel = scene radius / divisor.
    pub voxel_divisor: f64,
    pub voxel_size: Option<f64>,
    pub truncation_voxels: f64,
    pub metric_samples: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            n_views: 20,
            voxel_divisor: 128.0,
            voxel_size: None,
            truncation_voxels: 4.0,
            metric_samples: 100_000,
        }
    }
}

impl Config {
    /// Default config, a JSON file if given, then the SPLATPRIOR_SEED
    /// environment override, in that order.
    pub fn load(path: Option<&Path>) -> CliResult<Config> {
        let mut cfg = match path {
            None => Config::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::format(p, e.to_string()))?
            }
        };
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.seed = seed
                .parse()
                .map_err(|_| CliError::usage(format!("{SEED_ENV} must be an integer, got {seed:?}")))?;
        }
        Ok(cfg)
    }

    pub fn loss_options(&self, scene: &SplatScene) -> CliResult<LossOptions> {
        Ok(LossOptions {
            weights: self.priors.to_weights(),
            ssim_weight: self.loss.ssim_weight,
            orientation_term: self.loss.to_term()?,
            raster: self.raster.to_raster(scene),
        })
    }

    pub fn fit_config(&self, scene: &SplatScene) -> CliResult<FitConfig> {
        Ok(FitConfig {
            iterations: self.fit.iterations,
            options: self.loss_options(scene)?,
            steps: StepSizes::for_scene(scene),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_calibrated_values() {
        let c = Config::default();
        assert_eq!(c.priors.lambda_align, 0.1);
        assert_eq!(c.priors.lambda_orient, 0.05);
        assert_eq!(c.priors.lambda_flat, 1000.0);
        assert_eq!(c.priors.w0, 10.0);
        assert_eq!(c.priors.kappa, 4.0);
        assert_eq!(c.priors.quantile, 0.95);
        assert_eq!(c.priors.epsilon, 1e-8);
        assert_eq!(c.priors.huber_delta, 0.1);
        assert_eq!(c.loss.ssim_weight, 0.0);
        assert_eq!(c.ransac.threshold_px, 1.0);
        assert_eq!(c.mesh.n_views, 20);
        assert_eq!(c.mesh.voxel_divisor, 128.0);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<Config>(r#"{"seeed": 3}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<Config>(r#"{"priors": {"lambda": 1.0}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn partial_configs_fill_in_defaults() {
        let c: Config = serde_json::from_str(r#"{"seed": 9, "priors": {"lambda_orient": 0.5}}"#)
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.priors.lambda_orient, 0.5);
        assert_eq!(c.priors.lambda_align, 0.1);
        assert_eq!(c.fit.iterations, 300);
    }

    #[test]
    fn config_json_round_trips() {
        let c = Config::default();
        let text = serde_json::to_string(&c).unwrap();
        let back: Config = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
