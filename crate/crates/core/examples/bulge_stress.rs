//! Wall stress along a bulged tube: the dilated segment carries the peak.
//!
//! cargo run --release --example bulge_stress [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::fea::{run_sda, BoundaryConditions, Material};
use aortamesh::geometry::Vec3;
use aortamesh::io::write_hex_vtk;
use aortamesh::pipeline::result_data;
use aortamesh::solidify::extrude_to_hex;
use aortamesh::synthetic::BulgedTube;

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    std::fs::create_dir_all(&out)?;

    let tube = BulgedTube::default();
    let hex = extrude_to_hex(&tube.quad_mesh(160, 48)?, 2.0, 2)?;
    let r = run_sda(&hex, 16.0, &Material::default(), &BoundaryConditions::default(), 1e-8)?;

    let bins = 15;
    let mut acc = vec![(0.0, 0usize, 0.0f64); bins];
    for e in 0..hex.hexes.len() {
        let z = (hex.corners(e).iter().sum::<Vec3>() / 8.0).z;
        let k = ((z / tube.length * bins as f64) as usize).min(bins - 1);
        let s = r.max_abs_principal[e];
        acc[k].0 += s;
        acc[k].1 += 1;
        acc[k].2 = acc[k].2.max(s);
    }
    println!("{:>9} {:>9} {:>10} {:>10}", "z (mm)", "radius", "mean kPa", "peak kPa");
    for (k, (sum, n, peak)) in acc.iter().enumerate() {
        let z = (k as f64 + 0.5) * tube.length / bins as f64;
        println!("{z:9.1} {:9.2} {:10.1} {peak:10.1}", tube.radius_at(z), sum / *n as f64);
    }

    let path = out.join("bulge_result.vtk");
    write_hex_vtk(&hex, &result_data(&r, None), &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
