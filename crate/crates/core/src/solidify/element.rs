use nalgebra::Matrix3;

use crate::geometry::Vec3;

/// Local coordinates of the eight corners, in hexahedron node order.
pub const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Local faces, each listed counter-clockwise seen from outside the element.
/// Order: ζ−, ζ+, η−, ξ+, η+, ξ−.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [0, 4, 7, 3],
];

pub const FACE_ZETA_MINUS: usize = 0;
pub const FACE_ZETA_PLUS: usize = 1;

/// For each corner, the neighbours along +ξ-ish, +η-ish and +ζ-ish edges,
/// ordered so an undistorted element gives a right-handed frame.
const CORNER_EDGES: [[usize; 3]; 8] = [
    [1, 3, 4],
    [2, 0, 5],
    [3, 1, 6],
    [0, 2, 7],
    [7, 5, 0],
    [4, 6, 1],
    [5, 7, 2],
    [6, 4, 3],
];

/// Trilinear shape functions and their local derivatives at `(ξ, η, ζ)`.
pub fn shape_hex8(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 3]; 8];
    for (a, s) in HEX_CORNERS.iter().enumerate() {
        let f = [1.0 + s[0] * xi[0], 1.0 + s[1] * xi[1], 1.0 + s[2] * xi[2]];
        n[a] = 0.125 * f[0] * f[1] * f[2];
        dn[a] = [
            0.125 * s[0] * f[1] * f[2],
            0.125 * s[1] * f[0] * f[2],
            0.125 * s[2] * f[0] * f[1],
        ];
    }
    (n, dn)
}

/// Jacobian `∂x/∂(ξ,η,ζ)`, columns are the local derivatives of position.
pub fn jacobian(corners: &[Vec3; 8], dn: &[[f64; 3]; 8]) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for (p, d) in corners.iter().zip(dn) {
        for c in 0..3 {
            j.column_mut(c).axpy(d[c], p, 1.0);
        }
    }
    j
}

pub(crate) const GAUSS_1D: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// 2×2×2 Gauss points (all weights 1).
pub fn gauss_points() -> impl Iterator<Item = [f64; 3]> {
    GAUSS_1D.into_iter().flat_map(|z| {
        GAUSS_1D
            .into_iter()
            .flat_map(move |y| GAUSS_1D.into_iter().map(move |x| [x, y, z]))
    })
}

/// Corner determinants of the edge frames, unnormalised and scaled.
pub fn corner_jacobians(corners: &[Vec3; 8]) -> [(f64, f64); 8] {
    let mut out = [(0.0, 0.0); 8];
    for (k, e) in CORNER_EDGES.iter().enumerate() {
        let a = corners[e[0]] - corners[k];
        let b = corners[e[1]] - corners[k];
        let c = corners[e[2]] - corners[k];
        let det = a.cross(&b).dot(&c);
        let len = a.norm() * b.norm() * c.norm();
        out[k] = (det, if len > 0.0 { det / len } else { 0.0 });
    }
    out
}

/// Minimum corner scaled Jacobian.
pub fn scaled_jacobian(corners: &[Vec3; 8]) -> f64 {
    corner_jacobians(corners)
        .iter()
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min)
}

/// Exact for trilinear geometry.
pub fn hex_volume(corners: &[Vec3; 8]) -> f64 {
    gauss_points()
        .map(|g| jacobian(corners, &shape_hex8(g).1).determinant())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn unit_cube() -> [Vec3; 8] {
        HEX_CORNERS.map(|s| Vec3::new(0.5 * (s[0] + 1.0), 0.5 * (s[1] + 1.0), 0.5 * (s[2] + 1.0)))
    }

    #[test]
    fn centre_values() {
        let (n, _) = shape_hex8([0.0; 3]);
        assert!(n.iter().all(|&v| v == 0.125));
    }

    #[test]
    fn interpolates_corners() {
        for (a, s) in HEX_CORNERS.iter().enumerate() {
            let (n, _) = shape_hex8(*s);
            for (b, v) in n.iter().enumerate() {
                assert_eq!(*v, if a == b { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
            let (n, dn) = shape_hex8(x);
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for c in 0..3 {
                assert!(dn.iter().map(|d| d[c]).sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let x = [0.3, -0.2, 0.7];
        let (_, dn) = shape_hex8(x);
        let h = 1e-6;
        for c in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[c] += h;
            xm[c] -= h;
            let (np, nm) = (shape_hex8(xp).0, shape_hex8(xm).0);
            for a in 0..8 {
                assert!(((np[a] - nm[a]) / (2.0 * h) - dn[a][c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn faces_point_outward() {
        let p = unit_cube();
        let centre = p.iter().sum::<Vec3>() / 8.0;
        for f in HEX_FACES {
            let n = (p[f[2]] - p[f[0]]).cross(&(p[f[3]] - p[f[1]]));
            let c = f.iter().map(|&k| p[k]).sum::<Vec3>() / 4.0;
            assert!(n.dot(&(c - centre)) > 0.0);
        }
    }

    #[test]
    fn unit_cube_quality_and_volume() {
        let p = unit_cube();
        assert_eq!(scaled_jacobian(&p), 1.0);
        assert!((hex_volume(&p) - 1.0).abs() < 1e-14);
        assert!(corner_jacobians(&p).iter().all(|c| c.0 == 1.0));
    }

    #[test]
    fn sheared_cube() {
        let mut p = unit_cube();
        for v in &mut p[4..] {
            v.x += 1.0;
        }
        assert!((scaled_jacobian(&p) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((hex_volume(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swapped_corners_invert() {
        let mut p = unit_cube();
        p.swap(0, 1);
        assert!(scaled_jacobian(&p) < 0.0);
    }

    #[test]
    fn trilinear_volume_is_exact() {
        // Frustum-like element: top face scaled by 1/2 about its centre.
        let mut p = unit_cube();
        for v in &mut p[4..] {
            v.x = 0.25 + 0.5 * v.x;
            v.y = 0.25 + 0.5 * v.y;
        }
        // ∫_0^1 (1 − z/2)² dz
        assert!((hex_volume(&p) - 7.0 / 12.0).abs() < 1e-14);
    }
}
