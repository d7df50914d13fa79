//! Camera files: intrinsics plus world-to-camera pose as JSON. Rotation is
//! a row-major 9-array; the "convention" field pins pixel coordinates to
//! sample at pixel centers (u = col + 0.5).

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use splatprior_core::{Camera, CameraIntrinsics, CameraPose};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    pub schema: u32,
    pub convention: String,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl CameraFile {
    pub fn from_camera(cam: &Camera) -> Self {
        let r = &cam.pose.rotation;
        CameraFile {
            schema: 1,
            convention: "pixel-center".to_string(),
            fx: cam.intrinsics.fx,
            fy: cam.intrinsics.fy,
            cx: cam.intrinsics.cx,
            cy: cam.intrinsics.cy,
            width: cam.intrinsics.width,
            height: cam.intrinsics.height,
            rotation: [
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
            ],
            translation: [cam.pose.translation.x, cam.pose.translation.y, cam.pose.translation.z],
        }
    }

    pub fn to_camera(&self) -> Camera {
        let m = self.rotation;
        let rotation = Matrix3::new(m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]);
        let translation = Vector3::new(self.translation[0], self.translation[1], self.translation[2]);
        Camera::new(
            CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height),
            CameraPose::new(rotation, translation),
        )
    }
}

pub fn write_camera(path: &Path, cam: &Camera) -> CliResult<()> {
    let file = CameraFile::from_camera(cam);
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_camera(path: &Path) -> CliResult<Camera> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: CameraFile =
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    if file.schema != 1 {
        return Err(CliError::format(path, format!("unsupported schema {}", file.schema)));
    }
    if file.convention != "pixel-center" {
        return Err(CliError::format(
            path,
            format!("unsupported convention {:?}", file.convention),
        ));
    }
    Ok(file.to_camera())
}

#[cfg(test)]
mod tests {
    use super::*;
    use splatprior_core::camera::rotation_exp;

    #[test]
    fn camera_json_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join("splatprior_cam_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cam.json");
        let cam = Camera::new(
            CameraIntrinsics::new(321.5, 320.25, 31.5, 23.5, 64, 48),
            CameraPose::new(
                rotation_exp(&Vector3::new(0.123456789, -0.4, 0.7)),
                Vector3::new(0.1, -2.5, 3.75),
            ),
        );
        write_camera(&path, &cam).unwrap();
        let back = read_camera(&path).unwrap();
        assert_eq!(back.intrinsics, cam.intrinsics);
        assert_eq!(back.pose.rotation, cam.pose.rotation);
        assert_eq!(back.pose.translation, cam.pose.translation);
        // And the file itself is reproduced byte for byte.
        let path2 = dir.join("cam2.json");
        write_camera(&path2, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn unknown_fields_and_conventions_fail() {
        let dir = std::env::temp_dir().join("splatprior_cam_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        std::fs::write(&path, r#"{"schema":1,"bogus":3}"#).unwrap();
        assert!(read_camera(&path).is_err());

        let cam = Camera::new(CameraIntrinsics::centered(8, 6, 60.0), CameraPose::IDENTITY);
        let mut file = CameraFile::from_camera(&cam);
        file.convention = "corner".to_string();
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(read_camera(&path).is_err());
    }
}
