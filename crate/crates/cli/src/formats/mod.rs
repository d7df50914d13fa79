//! On-disk formats. Binary payloads are little-endian float32; JSON is
//! pretty-printed with a stable field order so identical runs produce
//! identical bytes.

pub mod camera;
pub mod manifest;
pub mod pfm;
pub mod ply;
pub mod ppm;

pub use camera::{read_camera, write_camera, CameraFile};
pub use manifest::{FrameEntry, SceneDir, SceneManifest};
pub use pfm::{read_pfm, write_pfm};
pub use ply::{read_mesh_ply, read_splat_ply, write_mesh_ply, write_splat_ply, SH_C0};
pub use ppm::{read_ppm, write_ppm};
