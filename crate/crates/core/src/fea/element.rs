use nalgebra::{Matrix3, SMatrix, SVector};

use super::Material;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solidify::{gauss_points, jacobian, shape_hex8};

pub type ElementMatrix = SMatrix<f64, 24, 24>;
pub(crate) type Voigt = SVector<f64, 6>;

/// Isotropic elasticity in Voigt order `xx, yy, zz, xy, yz, zx` with
/// engineering shear strains.
pub fn elasticity_matrix(mat: &Material) -> SMatrix<f64, 6, 6> {
    let (e, nu) = (mat.youngs_modulus, mat.poisson_ratio);
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut c = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = lambda;
        }
        c[(i, i)] = lambda + 2.0 * mu;
        c[(i + 3, i + 3)] = mu;
    }
    c
}

/// Physical shape-function gradients and `det J` at each 2×2×2 Gauss point.
/// Fails on the first point with non-positive `det J`.
pub(crate) fn gauss_gradients(corners: &[Vec3; 8]) -> std::result::Result<[([Vec3; 8], f64); 8], f64> {
    let mut out = [([Vec3::zeros(); 8], 0.0); 8];
    for (g, xi) in gauss_points().enumerate() {
        let (_, dn) = shape_hex8(xi);
        let j = jacobian(corners, &dn);
        let det = j.determinant();
        if !(det > 0.0) {
            return Err(det);
        }
        let jit: Matrix3<f64> = j.try_inverse().ok_or(det)?.transpose();
        let mut grads = [Vec3::zeros(); 8];
        for a in 0..8 {
            grads[a] = jit * Vec3::new(dn[a][0], dn[a][1], dn[a][2]);
        }
        out[g] = (grads, det);
    }
    Ok(out)
}

pub(crate) fn degenerate(index: usize, det: f64) -> Error {
    Error::DegenerateElement {
        index,
        reason: format!("non-positive Jacobian determinant {det:.3e} at a Gauss point"),
    }
}

pub(crate) fn strain_displacement(grads: &[Vec3; 8]) -> SMatrix<f64, 6, 24> {
    let mut b = SMatrix::<f64, 6, 24>::zeros();
    for (a, g) in grads.iter().enumerate() {
        let c = 3 * a;
        b[(0, c)] = g.x;
        b[(1, c + 1)] = g.y;
        b[(2, c + 2)] = g.z;
        b[(3, c)] = g.y;
        b[(3, c + 1)] = g.x;
        b[(4, c + 1)] = g.z;
        b[(4, c + 2)] = g.y;
        b[(5, c)] = g.z;
        b[(5, c + 2)] = g.x;
    }
    b
}

/// Small-strain vector `B u` for one Gauss point.
pub(crate) fn strain(grads: &[Vec3; 8], u: &[Vec3; 8]) -> Voigt {
    let mut e = Voigt::zeros();
    for (g, d) in grads.iter().zip(u) {
        e[0] += g.x * d.x;
        e[1] += g.y * d.y;
        e[2] += g.z * d.z;
        e[3] += g.y * d.x + g.x * d.y;
        e[4] += g.z * d.y + g.y * d.z;
        e[5] += g.z * d.x + g.x * d.z;
    }
    e
}

pub(crate) fn element_stiffness_at(index: usize, corners: &[Vec3; 8], c: &SMatrix<f64, 6, 6>) -> Result<ElementMatrix> {
    let gg = gauss_gradients(corners).map_err(|det| degenerate(index, det))?;
    let mut k = ElementMatrix::zeros();
    for (grads, det) in &gg {
        let b = strain_displacement(grads);
        let cb = c * b * *det;
        k.gemm_tr(1.0, &b, &cb, 1.0);
    }
    // Exact symmetry for the assembled system.
    for i in 0..24 {
        for j in 0..i {
            let m = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = m;
            k[(j, i)] = m;
        }
    }
    Ok(k)
}

/// 24×24 stiffness, DOFs ordered node-major `(x, y, z)`, full 2×2×2 quadrature.
pub fn element_stiffness(corners: &[Vec3; 8], mat: &Material) -> Result<ElementMatrix> {
    mat.validate()?;
    element_stiffness_at(0, corners, &elasticity_matrix(mat))
}
