//! Fits a straight tube template to an aneurysm-like bulged tube.
//!
//! cargo run --release --example fit_bulged_tube [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::fitting::{fit_template, inverted_quads, FitConfig};
use aortamesh::geometry::SpatialIndex;
use aortamesh::io::{sample_surface, write_quad_vtk, VtkData};
use aortamesh::synthetic::BulgedTube;
use aortamesh::template::{build_template, TemplateConfig};

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    std::fs::create_dir_all(&out)?;

    let tube = BulgedTube::default();
    let cfg = FitConfig::default();
    let cloud = sample_surface(&tube.surface(601, 256)?, cfg.sample_count, 0)?;
    let target = SpatialIndex::new(cloud.points)?;
    let template = build_template(&tube.landmarks(320)?, Some(&target), &TemplateConfig::default())?;

    let (fitted, report) = fit_template(&template, &target, &cfg)?;
    for (i, r) in report.loss_history.iter().enumerate().step_by(5) {
        println!("iter {i:4}  total {:9.4}  chamfer {:9.4}", r.total, r.chamfer);
    }
    println!(
        "stopped after {} iterations ({:?}): chamfer rms {:.3} mm, {} inverted quads",
        report.iterations_run,
        report.terminated_by,
        report.final_chamfer_rms,
        inverted_quads(&fitted, Some(&template)).len()
    );
    write_quad_vtk(&template, &VtkData::default(), &out.join("template.vtk"))?;
    write_quad_vtk(&fitted, &VtkData::default(), &out.join("fitted.vtk"))?;
    Ok(())
}
