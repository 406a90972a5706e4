//! Linear-elastic hex8 wall-stress analysis with a stiff surrogate material.
//!
//! The imaged geometry is taken as the loaded configuration. With a stiff
//! material the displacements stay tiny and the stress field is set by
//! equilibrium alone, so it does not depend on the chosen Young's modulus.

mod element;
mod loads;
mod stress;
mod system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solidify::{HexMesh, HOLE_RIMS, INLET_RING, INNER_SURFACE, OUTLET_RING};

pub use crate::solidify::shape_hex8;
pub use element::{elasticity_matrix, element_stiffness, ElementMatrix};
pub use loads::pressure_loads;
pub use stress::{internal_forces, principal_max_abs, recover_stress, symmetric_eigenvalues, StressTensor};
pub use system::{assemble_system, constrained_nodes, iteration_cap, solve_system, SolverStats, SparseSystem};

/// Systolic luminal pressure (kPa).
pub const DEFAULT_PRESSURE: f64 = 16.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Material {
    /// kPa
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            youngs_modulus: 1.0e6,
            poisson_ratio: 0.3,
        }
    }
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(Error::invalid(format!(
                "Young's modulus must be positive, got {}",
                self.youngs_modulus
            )));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::invalid(format!(
                "Poisson ratio must lie in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConditions {
    /// Node sets fixed in all three translations.
    pub fixed_node_sets: Vec<String>,
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        BoundaryConditions {
            fixed_node_sets: [INLET_RING, OUTLET_RING, HOLE_RIMS].map(String::from).to_vec(),
        }
    }
}

/// Net applied load against net reaction at the constrained nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub applied: [f64; 3],
    pub reaction: [f64; 3],
    /// Sum of nodal load magnitudes (mN), the scale for the relative error.
    pub load_magnitude: f64,
}

impl Equilibrium {
    /// `|Σ reactions + Σ loads| / Σ |load|`.
    pub fn relative_error(&self) -> f64 {
        let s = Vec3::from(self.applied) + Vec3::from(self.reaction);
        if self.load_magnitude > 0.0 {
            s.norm() / self.load_magnitude
        } else {
            s.norm()
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeaResult {
    pub displacements: Vec<Vec3>,
    pub element_stress: Vec<StressTensor>,
    /// kPa per element.
    pub max_abs_principal: Vec<f64>,
    pub solver_stats: SolverStats,
    pub equilibrium: Equilibrium,
}

impl FeaResult {
    pub fn max_displacement(&self) -> f64 {
        self.displacements.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }
}

/// Pressure on `inner_surface`, solve, and per-element principal stresses.
pub fn run_sda(mesh: &HexMesh, pressure: f64, mat: &Material, bcs: &BoundaryConditions, tol: f64) -> Result<FeaResult> {
    if !pressure.is_finite() {
        return Err(Error::invalid(format!("pressure must be finite, got {pressure}")));
    }
    let loads = pressure_loads(mesh, INNER_SURFACE, pressure)?;
    solve_loaded(mesh, &loads, mat, bcs, tol)
}

/// As [`run_sda`] with arbitrary nodal loads.
pub fn solve_loaded(
    mesh: &HexMesh,
    loads: &[Vec3],
    mat: &Material,
    bcs: &BoundaryConditions,
    tol: f64,
) -> Result<FeaResult> {
    let sys = assemble_system(mesh, mat, bcs)?;
    let (displacements, solver_stats) = solve_system(&sys, loads, tol)?;
    let element_stress = recover_stress(mesh, mat, &displacements)?;
    let max_abs_principal = element_stress.iter().map(StressTensor::max_abs_principal).collect();

    let fint = internal_forces(mesh, mat, &displacements)?;
    let reaction: Vec3 = sys.constrained.iter().map(|&v| fint[v] - loads[v]).sum();
    let applied: Vec3 = loads.iter().sum();
    let equilibrium = Equilibrium {
        applied: applied.into(),
        reaction: reaction.into(),
        load_magnitude: loads.iter().map(|f| f.norm()).sum(),
    };
    Ok(FeaResult {
        displacements,
        element_stress,
        max_abs_principal,
        solver_stats,
        equilibrium,
    })
}
