//! Runs every stage on the bundled demo fixture.
//!
//! cargo run --release --example full_pipeline [-- <out_dir>]

use std::path::PathBuf;

use aortamesh::pipeline::{run_pipeline, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo/demo.json");
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out/pipeline".into()));
    let cfg = PipelineConfig::load(&fixture)?;
    let o = run_pipeline(&cfg, &out)?;

    println!(
        "fit: {} iterations, chamfer rms {:.3} mm",
        o.fit_report.iterations_run, o.fit_report.final_chamfer_rms
    );
    println!(
        "wall: {} hexes, min scaled Jacobian {:.3}",
        o.hex.hexes.len(),
        o.quality.min_scaled_jacobian
    );
    println!(
        "solve: {} CG iterations, equilibrium error {:.1e}",
        o.result.solver_stats.iterations,
        o.result.equilibrium.relative_error()
    );
    for r in &o.patient.stats.regions {
        match r.moments {
            Some(m) => println!(
                "{:>10}: {:5} elements, mean {:7.2}, peak {:7.2} kPa",
                r.region.name(),
                r.count,
                m.mean,
                m.peak
            ),
            None => println!("{:>10}: empty", r.region.name()),
        }
    }
    println!("products in {}", out.display());
    Ok(())
}
