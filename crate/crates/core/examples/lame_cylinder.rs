//! Pressurised thick cylinder against the closed-form hoop stress.
//!
//! cargo run --release --example lame_cylinder

use aortamesh::fea::{run_sda, BoundaryConditions, Material};
use aortamesh::geometry::Vec3;
use aortamesh::solidify::extrude_to_hex;
use aortamesh::synthetic::cylinder_mesh;

fn main() -> anyhow::Result<()> {
    let (a, b, p, len) = (15.0, 17.0, 16.0, 100.0);
    let layers = 4;
    let hex = extrude_to_hex(&cylinder_mesh(a, len, 160, 40)?, b - a, layers)?;
    let r = run_sda(&hex, p, &Material::default(), &BoundaryConditions::default(), 1e-8)?;
    println!(
        "{} CG iterations, equilibrium error {:.1e}",
        r.solver_stats.iterations,
        r.equilibrium.relative_error()
    );

    let lame = |rho: f64| p * a * a / (b * b - a * a) * (1.0 + b * b / (rho * rho));
    let nq = hex.hexes.len() / layers;
    println!("{:>8} {:>10} {:>10}", "r (mm)", "hoop", "closed");
    for l in 0..layers {
        let (mut sum, mut n, mut rho) = (0.0, 0, 0.0);
        for e in l * nq..(l + 1) * nq {
            let c = hex.corners(e).iter().sum::<Vec3>() / 8.0;
            if (c.z - 0.5 * len).abs() > 2.5 {
                continue;
            }
            let dir = Vec3::new(-c.y, c.x, 0.0).normalize();
            sum += r.element_stress[e].normal(&dir);
            rho += c.xy().norm();
            n += 1;
        }
        let rho = rho / n as f64;
        println!("{rho:8.3} {:10.2} {:10.2}", sum / n as f64, lame(rho));
    }
    Ok(())
}
