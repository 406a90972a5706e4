//! Simulates a handful of synthetic patients and writes the cohort table.
//!
//! cargo run --release --example cohort_summary [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::analysis::{assign_regions, cohort_table, default_breakpoints, region_stats};
use aortamesh::fea::{run_sda, BoundaryConditions, Material};
use aortamesh::solidify::extrude_to_hex;
use aortamesh::synthetic::BulgedTube;

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    std::fs::create_dir_all(&out)?;

    // Peak radius stands in for disease: near-straight controls, dilated aneurysms.
    let patients = [
        ("c01", "control", 12.5),
        ("c02", "control", 13.0),
        ("c03", "control", 13.5),
        ("a01", "aneurysm", 18.0),
        ("a02", "aneurysm", 21.0),
        ("a03", "aneurysm", 24.0),
    ];
    let mut rows = Vec::new();
    for (id, group, peak_radius) in patients {
        let tube = BulgedTube {
            peak_radius,
            ..BulgedTube::default()
        };
        let lm = tube.landmarks(120)?;
        let hex = extrude_to_hex(&tube.quad_mesh(120, 32)?, 2.0, 1)?;
        let r = run_sda(&hex, 16.0, &Material::default(), &BoundaryConditions::default(), 1e-8)?;
        let bp = default_breakpoints(&lm.centerline.points, &lm.arch_curves)?;
        let stats = region_stats(&r.max_abs_principal, &assign_regions(&hex, &lm.centerline, &bp)?)?;
        println!(
            "{id} ({group}, peak radius {peak_radius} mm): peak stress {:.1} kPa",
            stats.peak
        );
        rows.push((id.to_string(), group.to_string(), stats));
    }

    let summary = cohort_table(&rows)?;
    for g in &summary.groups {
        println!("{}: peak {:.1} ± {:.1} kPa", g.group, g.peak.mean, g.peak.std);
    }
    let path = out.join("cohort.csv");
    summary.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
