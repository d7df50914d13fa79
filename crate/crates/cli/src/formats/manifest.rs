//! Scene directory manifest: which files hold each frame's splats, camera,
//! and reference images, plus enough metadata to rebuild the in-memory
//! scene. All paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splatprior_core::splat::GaussianMode;
use splatprior_core::{Camera, Frame, SplatScene};

use crate::config::ModeName;
use crate::formats::{camera, ply};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub splats: String,
    pub camera: String,
    pub color: String,
    pub depth: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub schema: u32,
    pub seed: u64,
    pub mode: ModeName,
    pub width: usize,
    pub height: usize,
    pub radius: f64,
    pub frames: Vec<FrameEntry>,
    pub gt_mesh: Option<String>,
}

impl SceneManifest {
    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::format(path, e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<SceneManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: SceneManifest =
            serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
        if manifest.schema != 1 {
            return Err(CliError::format(path, format!("unsupported schema {}", manifest.schema)));
        }
        if manifest.frames.is_empty() {
            return Err(CliError::format(path, "manifest lists no frames"));
        }
        Ok(manifest)
    }
}

/// A manifest resolved against its directory, with loaders for the pieces
/// subcommands need.
pub struct SceneDir {
    pub dir: PathBuf,
    pub manifest: SceneManifest,
}

impl SceneDir {
    /// `path` may be the directory (implying `scene.json`) or a manifest
    /// file inside it.
    pub fn open(path: &Path, manifest_name: Option<&str>) -> CliResult<SceneDir> {
        let manifest_path = if path.is_dir() {
            path.join(manifest_name.unwrap_or("scene.json"))
        } else {
            path.to_path_buf()
        };
        let dir = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let manifest = SceneManifest::load(&manifest_path)?;
        Ok(SceneDir { dir, manifest })
    }

    pub fn mode(&self) -> GaussianMode {
        self.manifest.mode.to_mode()
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn camera(&self, frame: usize) -> CliResult<Camera> {
        let entry = self.frame_entry(frame)?;
        camera::read_camera(&self.resolve(&entry.camera))
    }

    pub fn cameras(&self) -> CliResult<Vec<Camera>> {
        (0..self.manifest.frames.len()).map(|i| self.camera(i)).collect()
    }

    /// Loads every frame's splats and cameras into one scene; each frame's
    /// ground-truth pose is the pose in its camera file.
    pub fn load_scene(&self) -> CliResult<SplatScene> {
        let mode = self.mode();
        let mut frames = Vec::with_capacity(self.manifest.frames.len());
        for (i, entry) in self.manifest.frames.iter().enumerate() {
            let cam = self.camera(i)?;
            if cam.intrinsics.width != self.manifest.width
                || cam.intrinsics.height != self.manifest.height
            {
                return Err(CliError::format(
                    &self.resolve(&entry.camera),
                    "camera size does not match manifest",
                ));
            }
            let gaussians = ply::read_splat_ply(
                &self.resolve(&entry.splats),
                mode,
                self.manifest.width,
                self.manifest.height,
            )?;
            let mut frame = Frame::new(cam.intrinsics, gaussians);
            frame.gt_pose = Some(cam.pose);
            frames.push(frame);
        }
        Ok(SplatScene::new(frames, mode))
    }

    fn frame_entry(&self, frame: usize) -> CliResult<&FrameEntry> {
        self.manifest.frames.get(frame).ok_or_else(|| {
            CliError::usage(format!(
                "frame {frame} out of range, scene has {}",
                self.manifest.frames.len()
            ))
        })
    }
}
