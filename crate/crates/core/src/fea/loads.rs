use crate::error::Result;
use crate::geometry::Vec3;
use crate::solidify::{HexMesh, GAUSS_1D};

/// Consistent nodal forces (mN) for pressure `p` (kPa) on a face set.
///
/// Faces are wound outward from the solid; the pressure pushes against that
/// normal, into the wall.
pub fn pressure_loads(mesh: &HexMesh, face_set: &str, pressure: f64) -> Result<Vec<Vec3>> {
    let faces = mesh.face_set(face_set)?;
    let mut f = vec![Vec3::zeros(); mesh.nodes.len()];
    const SIGNS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    for &face in faces {
        let ids = mesh.face_nodes(face);
        let p = ids.map(|v| mesh.nodes[v]);
        for s in GAUSS_1D {
            for t in GAUSS_1D {
                let mut xs = Vec3::zeros();
                let mut xt = Vec3::zeros();
                let mut n = [0.0; 4];
                for (a, sg) in SIGNS.iter().enumerate() {
                    n[a] = 0.25 * (1.0 + sg[0] * s) * (1.0 + sg[1] * t);
                    xs += p[a] * (0.25 * sg[0] * (1.0 + sg[1] * t));
                    xt += p[a] * (0.25 * sg[1] * (1.0 + sg[0] * s));
                }
                // |xs × xt| is the surface Jacobian; Gauss weights are 1.
                let da = xs.cross(&xt);
                for a in 0..4 {
                    f[ids[a]] -= da * (pressure * n[a]);
                }
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::solidify::{extrude_to_hex, HexFace, INNER_SURFACE};
    use crate::synthetic::cylinder_mesh;
    use crate::template::QuadMesh;
    use std::f64::consts::PI;

    fn unit_cube() -> HexMesh {
        let v = vec![
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(1., 1., 0.),
            Vec3::new(0., 1., 0.),
        ];
        extrude_to_hex(&QuadMesh::new(v, vec![[0, 1, 2, 3]]).unwrap(), 1.0, 1).unwrap()
    }

    #[test]
    fn flat_unit_face() {
        let h = unit_cube();
        let f = pressure_loads(&h, INNER_SURFACE, 1.0).unwrap();
        // Bottom face: outward normal −z, pressure pushes +z.
        for a in 0..4 {
            assert!((f[a] - Vec3::new(0.0, 0.0, 0.25)).norm() < 1e-15);
        }
        assert!(f[4..].iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn closed_surface_has_no_net_force() {
        // Twisted, tapered block of hexes with its whole skin loaded.
        let m = cylinder_mesh(5.0, 8.0, 5, 7).unwrap();
        let mut h = extrude_to_hex(&m, 3.0, 3).unwrap();
        for p in &mut h.nodes {
            let a = 0.05 * p.z;
            *p = Vec3::new(p.x * a.cos() - p.y * a.sin(), p.x * a.sin() + p.y * a.cos(), p.z) * (1.0 + 0.02 * p.z);
        }
        let skin: Vec<HexFace> = h.boundary_faces();
        h.face_sets.insert("skin".into(), skin);
        let p = 16.0;
        let f = pressure_loads(&h, "skin", p).unwrap();
        let net: Vec3 = f.iter().sum();
        let area: f64 = f.iter().map(|v| v.norm()).sum::<f64>() / p;
        assert!(net.norm() <= 1e-6 * p * area, "net {net}");
    }

    #[test]
    fn cylinder_line_load() {
        let (r, len, p, nr) = (15.0, 100.0, 16.0, 48);
        let m = cylinder_mesh(r, len, 41, nr).unwrap();
        let h = extrude_to_hex(&m, 2.0, 2).unwrap();
        let f = pressure_loads(&h, INNER_SURFACE, p).unwrap();
        let radial: f64 = h
            .nodes
            .iter()
            .zip(&f)
            .map(|(x, v)| {
                let d = Vec3::new(x.x, x.y, 0.0);
                if d.norm() > 0.0 {
                    v.dot(&d.normalize())
                } else {
                    0.0
                }
            })
            .sum();
        let exact = 2.0 * PI * r * p * len;
        assert!((radial - exact).abs() < 0.01 * exact);
        assert!(f.iter().sum::<Vec3>().norm() < 1e-9 * exact);
    }

    #[test]
    fn scales_with_pressure() {
        let h = unit_cube();
        let f1 = pressure_loads(&h, INNER_SURFACE, 1.0).unwrap();
        let f3 = pressure_loads(&h, INNER_SURFACE, 3.0).unwrap();
        for (a, b) in f1.iter().zip(&f3) {
            assert!((a * 3.0 - b).norm() < 1e-15);
        }
        assert!(matches!(pressure_loads(&h, "none", 1.0), Err(Error::UnknownSet(_))));
    }
}
