//! Extracts the surface of a voxelised sphere and compares it with the
//! exact area and volume.
//!
//! cargo run --release --example isosurface_sphere [-- <out_dir>]

use std::f64::consts::PI;
use std::path::PathBuf;

use aortamesh::geometry::Vec3;
use aortamesh::io::{is_watertight, mask_to_surface, write_surface, VoxelMask};

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    std::fs::create_dir_all(&out)?;

    let r = 20.0;
    let c = Vec3::new(22.0, 22.0, 22.0);
    let mask = VoxelMask::from_fn([45; 3], [1.0; 3], Vec3::zeros(), |p| (p - c).norm() <= r)?;
    let s = mask_to_surface(&mask, 0.5)?;

    let area = 4.0 * PI * r * r;
    let volume = 4.0 / 3.0 * PI * r * r * r;
    println!(
        "{} vertices, {} triangles, watertight {}",
        s.vertices.len(),
        s.triangles.len(),
        is_watertight(&s)
    );
    println!(
        "area   {:9.1} mm2 vs {area:9.1} ({:+.2}%)",
        s.area(),
        100.0 * (s.area() / area - 1.0)
    );
    println!(
        "volume {:9.1} mm3 vs {volume:9.1} ({:+.2}%)",
        s.signed_volume(),
        100.0 * (s.signed_volume() / volume - 1.0)
    );
    // Staircase facets overstate the area of a digitised smooth surface.

    let path = out.join("sphere.stl");
    write_surface(&s, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
