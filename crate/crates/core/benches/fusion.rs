//! Depth-fusion throughput: TSDF integration, isosurface extraction,
//! and the full render-to-mesh pipeline.
//!
//! Compare the rayon path against the sequential fallback:
//!   cargo bench -p splatprior-core --bench fusion
//!   cargo bench -p splatprior-core --bench fusion --no-default-features

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nalgebra::Vector3;
use splatprior_core::geomeval::{
    extract_mesh, reconstruct_mesh_pipeline, tsdf_integrate, MeshPipelineConfig, TsdfVolume,
};
use splatprior_core::grid::Grid;
use splatprior_core::raster::RasterConfig;
use splatprior_core::scene::SplatScene;
use splatprior_core::scenes::{
    analytic_render, make_camera_pair_with_size, make_two_plane_room, splats_from_analytic,
};
use splatprior_core::splat::GaussianMode;

fn bench_fusion(c: &mut Criterion) {
    let room = make_two_plane_room(11);
    let (cam_a, cam_b, _) = make_camera_pair_with_size(&room, 0.1, 8.0, 11, 64, 48);
    let view = analytic_render(&room, &cam_a);

    let voxel = room.radius / 96.0;
    let origin = Vector3::new(-room.radius, -room.radius, 0.5);
    let dims = [
        (2.0 * room.radius / voxel) as usize,
        (2.0 * room.radius / voxel) as usize,
        (1.2 * room.radius / voxel) as usize,
    ];

    let mut group = c.benchmark_group("fusion");
    group.sample_size(10);
    group.bench_function("tsdf_integrate_one_view", |b| {
        b.iter(|| {
            let mut vol = TsdfVolume::new(origin, voxel, dims);
            tsdf_integrate(&mut vol, &view.depth, &cam_a).unwrap();
            black_box(vol.voxels.len())
        })
    });

    let mut vol = TsdfVolume::new(origin, voxel, dims);
    let depth: Grid<f64> = view.depth.clone();
    tsdf_integrate(&mut vol, &depth, &cam_a).unwrap();
    tsdf_integrate(&mut vol, &analytic_render(&room, &cam_b).depth, &cam_b).unwrap();
    group.bench_function("extract_mesh", |b| {
        b.iter(|| black_box(extract_mesh(&vol).unwrap().triangles.len()))
    });

    let frame = splats_from_analytic(&room, &cam_a, GaussianMode::TwoDGS);
    let scene = SplatScene::new(vec![frame], GaussianMode::TwoDGS);
    let cfg = MeshPipelineConfig {
        n_views: 8,
        voxel_size: Some(room.radius / 64.0),
        truncation_voxels: 4.0,
        raster: RasterConfig::for_scene(&scene),
    };
    group.bench_function("pipeline_8_views_r64", |b| {
        b.iter(|| {
            black_box(
                reconstruct_mesh_pipeline(&scene, &cam_a, &cam_b, &cfg).unwrap().triangles.len(),
            )
        })
    });
    group.finish();
}

criterion_group!(benches, bench_fusion);
criterion_main!(benches);
