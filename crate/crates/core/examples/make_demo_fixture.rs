//! Regenerates `fixtures/demo`: a bulged-tube target surface, its landmarks,
//! a small sphere mask, and a pipeline config sized for a quick run.
//!
//! cargo run --release --example make_demo_fixture [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::geometry::Vec3;
use aortamesh::io::{write_landmarks, write_mask, write_surface, VoxelMask};
use aortamesh::pipeline::{Inputs, PipelineConfig};
use aortamesh::synthetic::BulgedTube;
use aortamesh::template::TemplateConfig;

fn main() -> anyhow::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo"));
    std::fs::create_dir_all(&out)?;

    let tube = BulgedTube::default();
    write_surface(&tube.surface(121, 48)?, &out.join("bulged_tube.stl"))?;
    write_landmarks(&tube.landmarks(100)?, &out.join("landmarks.json"))?;

    let c = Vec3::new(8.0, 8.0, 8.0);
    let mask = VoxelMask::from_fn([17; 3], [1.0; 3], Vec3::zeros(), |p| (p - c).norm() <= 6.0)?;
    write_mask(&mask, &out.join("sphere_mask.json"))?;

    let mut cfg = PipelineConfig {
        template: TemplateConfig {
            n_sections: 100,
            n_ring: 32,
            ..TemplateConfig::default()
        },
        inputs: Some(Inputs {
            patient_id: "demo".into(),
            group: Some("aneurysm".into()),
            surface: Some("bulged_tube.stl".into()),
            mask: None,
            landmarks: "landmarks.json".into(),
        }),
        output_dir: Some("out".into()),
        // One layer keeps the coarse hexes from turning plate-like.
        layers: 1,
        ..PipelineConfig::default()
    };
    cfg.fit.sample_count = 20_000;
    cfg.fit.max_iters = 400;
    std::fs::write(out.join("demo.json"), cfg.to_json())?;
    println!("wrote fixture to {}", out.display());
    Ok(())
}
