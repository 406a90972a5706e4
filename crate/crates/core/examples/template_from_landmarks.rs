//! Builds the 320 x 78 template from synthetic landmarks and writes it as VTK.
//!
//! cargo run --release --example template_from_landmarks [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::io::{write_quad_vtk, VtkData};
use aortamesh::synthetic::BulgedTube;
use aortamesh::template::{build_template, TemplateConfig};

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    std::fs::create_dir_all(&out)?;

    let landmarks = BulgedTube::default().landmarks(200)?;
    let cfg = TemplateConfig::default();
    let mesh = build_template(&landmarks, None, &cfg)?;
    println!(
        "{} sections x {} ring -> {} vertices, {} quads",
        cfg.n_sections,
        cfg.n_ring,
        mesh.vertices.len(),
        mesh.quads.len()
    );
    let path = out.join("template.vtk");
    write_quad_vtk(&mesh, &VtkData::default(), &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
