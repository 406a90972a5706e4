use std::f64::consts::TAU;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::element::{degenerate, elasticity_matrix, gauss_gradients, strain, Voigt};
use super::Material;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solidify::HexMesh;

/// Relative asymmetry accepted by [`principal_max_abs`].
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric Cauchy stress (kPa), stored by its six independent components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StressTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub yz: f64,
    pub zx: f64,
}

impl StressTensor {
    pub(crate) fn from_voigt(v: &Voigt) -> Self {
        StressTensor {
            xx: v[0],
            yy: v[1],
            zz: v[2],
            xy: v[3],
            yz: v[4],
            zx: v[5],
        }
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        check_symmetric(m)?;
        Ok(StressTensor {
            xx: m[(0, 0)],
            yy: m[(1, 1)],
            zz: m[(2, 2)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            zx: 0.5 * (m[(2, 0)] + m[(0, 2)]),
        })
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.zx, //
            self.xy, self.yy, self.yz, //
            self.zx, self.yz, self.zz,
        )
    }

    /// Normal stress along the unit direction `d`.
    pub fn normal(&self, d: &Vec3) -> f64 {
        d.dot(&(self.to_matrix() * d))
    }

    /// Eigenvalues, descending.
    pub fn principal(&self) -> [f64; 3] {
        symmetric_eigenvalues(&self.to_matrix())
    }

    pub fn max_abs_principal(&self) -> f64 {
        self.principal().iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

fn check_symmetric(m: &Matrix3<f64>) -> Result<()> {
    let scale = m.abs().max();
    let asym = (m - m.transpose()).abs().max();
    if !(asym <= SYMMETRY_TOL * scale) {
        return Err(Error::InvalidTensor(if scale > 0.0 { asym / scale } else { asym }));
    }
    Ok(())
}

/// Trigonometric closed form for the eigenvalues of a symmetric 3×3 matrix,
/// returned in descending order.
pub fn symmetric_eigenvalues(a: &Matrix3<f64>) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    let d = [a[(0, 0)] - q, a[(1, 1)] - q, a[(2, 2)] - q];
    let p2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let b = (a - Matrix3::identity() * q) / p;
    let r = (0.5 * b.determinant()).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + TAU / 3.0).cos();
    [l1, 3.0 * q - l1 - l3, l3]
}

/// Largest absolute eigenvalue of a symmetric stress matrix (kPa).
pub fn principal_max_abs(sigma: &Matrix3<f64>) -> Result<f64> {
    check_symmetric(sigma)?;
    Ok(StressTensor::from_matrix(sigma)?.max_abs_principal())
}

fn element_displacements(mesh: &HexMesh, e: usize, u: &[Vec3]) -> [Vec3; 8] {
    mesh.hexes[e].map(|v| u[v])
}

/// Centroid stress per element: `C ε` averaged over the 8 Gauss points.
pub fn recover_stress(mesh: &HexMesh, mat: &Material, displacements: &[Vec3]) -> Result<Vec<StressTensor>> {
    mat.validate()?;
    if displacements.len() != mesh.nodes.len() {
        return Err(Error::invalid("displacement count does not match node count"));
    }
    let c = elasticity_matrix(mat);
    (0..mesh.hexes.len())
        .map(|e| {
            let gg = gauss_gradients(&mesh.corners(e)).map_err(|det| degenerate(e, det))?;
            let ue = element_displacements(mesh, e, displacements);
            let mut eps = Voigt::zeros();
            for (grads, _) in &gg {
                eps += strain(grads, &ue);
            }
            Ok(StressTensor::from_voigt(&(c * eps / 8.0)))
        })
        .collect()
}

/// Nodal internal forces `Σ_e ∫ Bᵀ σ dV`, equal to `K u` on the full mesh.
pub fn internal_forces(mesh: &HexMesh, mat: &Material, displacements: &[Vec3]) -> Result<Vec<Vec3>> {
    let c = elasticity_matrix(mat);
    let mut f = vec![Vec3::zeros(); mesh.nodes.len()];
    for (e, h) in mesh.hexes.iter().enumerate() {
        let gg = gauss_gradients(&mesh.corners(e)).map_err(|det| degenerate(e, det))?;
        let ue = element_displacements(mesh, e, displacements);
        for (grads, det) in &gg {
            let s = c * strain(grads, &ue) * *det;
            for (a, g) in grads.iter().enumerate() {
                f[h[a]] += Vec3::new(
                    g.x * s[0] + g.y * s[3] + g.z * s[5],
                    g.y * s[1] + g.x * s[3] + g.z * s[4],
                    g.z * s[2] + g.y * s[4] + g.x * s[5],
                );
            }
        }
    }
    Ok(f)
}
