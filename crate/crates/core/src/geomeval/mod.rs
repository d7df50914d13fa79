//! Geometry evaluation: depth and pose-free mesh metrics, depth fusion, and
//! the render-fuse-extract reconstruction path.

pub mod depth;
pub mod icp;
pub mod kdtree;
pub mod mc_tables;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod trajectory;
pub mod tsdf;

pub use depth::{depth_metrics, DepthMetrics};
pub use icp::{sim3_icp, umeyama, Sim3};
pub use kdtree::KdTree;
pub use mesh::{extract_mesh, frustum_crop, TriangleMesh};
pub use metrics::{mesh_metrics, sample_mesh, MeshMetrics};
pub use pipeline::{reconstruct_mesh_pipeline, MeshPipelineConfig};
pub use trajectory::interpolate_trajectory;
pub use tsdf::{tsdf_integrate, TsdfVolume, TsdfVoxel, MAX_WEIGHT};
