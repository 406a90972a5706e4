//! Extrudes a bulged-tube surface into a two-layer hexahedral wall and
//! reports element quality.
//!
//! cargo run --release --example extrude_wall [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::io::{write_hex_vtk, VtkData};
use aortamesh::solidify::{extrude_to_hex, hex_quality};
use aortamesh::synthetic::BulgedTube;

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    std::fs::create_dir_all(&out)?;

    let surface = BulgedTube::default().quad_mesh(320, 78)?;
    let hex = extrude_to_hex(&surface, 2.0, 2)?;
    let q = hex_quality(&hex);
    println!("{} nodes, {} hexes", hex.nodes.len(), hex.hexes.len());
    println!(
        "min scaled Jacobian {:.4}, {} inverted",
        q.min_scaled_jacobian, q.inverted_count
    );
    for (name, set) in &hex.node_sets {
        println!("node set {name}: {} nodes", set.len());
    }

    let mut data = VtkData::default();
    data.cell_scalars.insert("scaled_jacobian".into(), q.scaled_jacobians);
    let path = out.join("wall.vtk");
    write_hex_vtk(&hex, &data, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
