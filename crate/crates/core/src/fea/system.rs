use serde::{Deserialize, Serialize};

use super::element::{elasticity_matrix, element_stiffness_at};
use super::{BoundaryConditions, Material};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solidify::HexMesh;

/// Stiffness over the free nodes in block-CSR form (3×3 blocks, row-major).
///
/// Constrained nodes and nodes outside every element are removed; `free_index`
/// maps mesh nodes to block rows and never changes after assembly.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub free_index: Vec<Option<usize>>,
    pub free_nodes: Vec<usize>,
    pub constrained: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    blocks: Vec<[f64; 9]>,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        3 * self.free_nodes.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `y = K x` over free DOFs.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.free_nodes.len() {
            let mut acc = [0.0; 3];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = 3 * self.cols[k] as usize;
                let b = &self.blocks[k];
                let (x0, x1, x2) = (x[c], x[c + 1], x[c + 2]);
                acc[0] += b[0] * x0 + b[1] * x1 + b[2] * x2;
                acc[1] += b[3] * x0 + b[4] * x1 + b[5] * x2;
                acc[2] += b[6] * x0 + b[7] * x1 + b[8] * x2;
            }
            y[3 * r..3 * r + 3].copy_from_slice(&acc);
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_dofs()];
        for r in 0..self.free_nodes.len() {
            let k = self.find(r, r).expect("diagonal block present");
            for i in 0..3 {
                d[3 * r + i] = self.blocks[k][4 * i];
            }
        }
        d
    }

    fn find(&self, r: usize, c: usize) -> Option<usize> {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&(c as u32)).ok().map(|k| self.row_ptr[r] + k)
    }

    /// Entry `(i, j)` of the free-DOF matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i / 3, j / 3)
            .map_or(0.0, |k| self.blocks[k][3 * (i % 3) + j % 3])
    }

    /// Dense copy, for small systems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n_dofs();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for r in 0..self.free_nodes.len() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                for i in 0..3 {
                    for j in 0..3 {
                        m[(3 * r + i, 3 * c + j)] = self.blocks[k][3 * i + j];
                    }
                }
            }
        }
        m
    }

    /// Free-DOF vector from per-node values.
    pub fn restrict(&self, per_node: &[Vec3]) -> Vec<f64> {
        self.free_nodes
            .iter()
            .flat_map(|&n| [per_node[n].x, per_node[n].y, per_node[n].z])
            .collect()
    }

    /// Per-node values from a free-DOF vector; removed nodes get zero.
    pub fn expand(&self, free: &[f64]) -> Vec<Vec3> {
        self.free_index
            .iter()
            .map(|f| {
                f.map_or(Vec3::zeros(), |r| {
                    Vec3::new(free[3 * r], free[3 * r + 1], free[3 * r + 2])
                })
            })
            .collect()
    }
}

/// Nodes of the mesh constrained by `bcs`, sorted and deduplicated.
pub fn constrained_nodes(mesh: &HexMesh, bcs: &BoundaryConditions) -> Result<Vec<usize>> {
    let mut fixed = Vec::new();
    for name in &bcs.fixed_node_sets {
        fixed.extend_from_slice(mesh.node_set(name)?);
    }
    fixed.sort_unstable();
    fixed.dedup();
    Ok(fixed)
}

pub fn assemble_system(mesh: &HexMesh, mat: &Material, bcs: &BoundaryConditions) -> Result<SparseSystem> {
    mat.validate()?;
    let n = mesh.nodes.len();
    if let Some(e) = mesh.hexes.iter().position(|h| h.iter().any(|&v| v >= n)) {
        return Err(Error::invalid(format!("hex {e} references a node out of range")));
    }
    let constrained = constrained_nodes(mesh, bcs)?;
    let mut used = vec![false; n];
    for h in &mesh.hexes {
        for &v in h {
            used[v] = true;
        }
    }
    if !constrained.iter().any(|&v| used[v]) {
        return Err(Error::SingularSystem(
            "no constrained degrees of freedom on the elements".into(),
        ));
    }
    for &v in &constrained {
        used[v] = false;
    }
    let mut free_index = vec![None; n];
    let mut free_nodes = Vec::new();
    for v in 0..n {
        if used[v] {
            free_index[v] = Some(free_nodes.len());
            free_nodes.push(v);
        }
    }

    // Sparsity: every pair of free nodes sharing an element.
    let nf = free_nodes.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); nf];
    for h in &mesh.hexes {
        for &a in h {
            if let Some(ra) = free_index[a] {
                adj[ra].extend(h.iter().filter_map(|&b| free_index[b].map(|c| c as u32)));
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(nf + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
        cols.extend_from_slice(row);
        row_ptr.push(cols.len());
        *row = Vec::new();
    }
    let mut sys = SparseSystem {
        free_index,
        free_nodes,
        constrained,
        row_ptr,
        blocks: vec![[0.0; 9]; cols.len()],
        cols,
    };

    let c = elasticity_matrix(mat);
    for (e, h) in mesh.hexes.iter().enumerate() {
        let ke = element_stiffness_at(e, &mesh.corners(e), &c)?;
        let rows = h.map(|v| sys.free_index[v]);
        for a in 0..8 {
            let Some(ra) = rows[a] else { continue };
            for b in 0..8 {
                let Some(rb) = rows[b] else { continue };
                let k = sys.find(ra, rb).expect("pattern covers element pairs");
                let blk = &mut sys.blocks[k];
                for i in 0..3 {
                    for j in 0..3 {
                        blk[3 * i + j] += ke[(3 * a + i, 3 * b + j)];
                    }
                }
            }
        }
    }
    Ok(sys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    /// Final `‖K u − f‖ / ‖f‖` over free DOFs.
    pub residual: f64,
}

pub fn iteration_cap(n_dofs: usize) -> usize {
    (20.0 * (n_dofs as f64).sqrt()).ceil() as usize + 1000
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients on the free DOFs.
///
/// `loads` is per mesh node; entries on removed nodes are ignored. Accepts
/// only when the true residual, not the recurrence, is within `tol`.
pub fn solve_system(sys: &SparseSystem, loads: &[Vec3], tol: f64) -> Result<(Vec<Vec3>, SolverStats)> {
    if loads.len() != sys.free_index.len() {
        return Err(Error::invalid(format!(
            "load vector has {} entries for {} nodes",
            loads.len(),
            sys.free_index.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("solver tolerance must be positive, got {tol}")));
    }
    let b = sys.restrict(loads);
    let n = b.len();
    let bnorm = dot(&b, &b).sqrt();
    if !bnorm.is_finite() {
        return Err(Error::invalid("load vector is not finite"));
    }
    if bnorm == 0.0 {
        return Ok((
            vec![Vec3::zeros(); loads.len()],
            SolverStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = sys
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let cap = iteration_cap(n);
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut history = Vec::new();
    let mut it = 0;
    loop {
        // (Re)start from the current true residual.
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut rel = dot(&r, &r).sqrt() / bnorm;
        while rel > tol && it < cap {
            sys.mul(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::SingularSystem(format!(
                    "non-positive curvature p'Kp = {pq:.3e} at iteration {it}"
                )));
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
                z[i] = inv_diag[i] * r[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            it += 1;
            rel = dot(&r, &r).sqrt() / bnorm;
            history.push(rel);
        }
        sys.mul(&x, &mut q);
        for i in 0..n {
            r[i] = b[i] - q[i];
        }
        let true_rel = dot(&r, &r).sqrt() / bnorm;
        if true_rel <= tol {
            let stats = SolverStats {
                iterations: it,
                residual: true_rel,
            };
            return Ok((sys.expand(&x), stats));
        }
        if it >= cap || !true_rel.is_finite() {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: true_rel,
                residual_history: history,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solidify::{extrude_to_hex, INLET_RING, OUTLET_RING};
    use crate::synthetic::cylinder_mesh;
    use crate::template::QuadMesh;
    use nalgebra::{DMatrix, DVector};

    /// `nz` unit cubes stacked along z.
    fn stack(nz: usize) -> HexMesh {
        let v = vec![
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(1., 1., 0.),
            Vec3::new(0., 1., 0.),
        ];
        let q = QuadMesh::new(v, vec![[0, 1, 2, 3]]).unwrap();
        let mut h = extrude_to_hex(&q, nz as f64, nz).unwrap();
        h.node_sets.insert("base".into(), vec![0, 1, 2, 3]);
        h
    }

    fn fix(sets: &[&str]) -> BoundaryConditions {
        BoundaryConditions {
            fixed_node_sets: sets.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn single_cube_one_face_fixed() {
        let h = stack(1);
        let sys = assemble_system(&h, &Material::default(), &fix(&["base"])).unwrap();
        assert_eq!(sys.n_dofs(), 12);
        let k = sys.to_dense();
        assert!((&k - k.transpose()).abs().max() <= 1e-9 * k.abs().max());
        assert!(k.cholesky().is_some());
    }

    #[test]
    fn matches_dense_assembly() {
        let h = stack(2);
        let mat = Material {
            youngs_modulus: 7.0,
            poisson_ratio: 0.2,
        };
        let sys = assemble_system(&h, &mat, &fix(&["base"])).unwrap();
        let mut dense = DMatrix::<f64>::zeros(3 * h.nodes.len(), 3 * h.nodes.len());
        for e in 0..h.hexes.len() {
            let ke = crate::fea::element_stiffness(&h.corners(e), &mat).unwrap();
            for a in 0..8 {
                for b in 0..8 {
                    for i in 0..3 {
                        for j in 0..3 {
                            dense[(3 * h.hexes[e][a] + i, 3 * h.hexes[e][b] + j)] += ke[(3 * a + i, 3 * b + j)];
                        }
                    }
                }
            }
        }
        assert_eq!(sys.free_nodes, (4..12).collect::<Vec<_>>());
        let k = sys.to_dense();
        for (r, &nr) in sys.free_nodes.iter().enumerate() {
            for (c, &nc) in sys.free_nodes.iter().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        let want = dense[(3 * nr + i, 3 * nc + j)];
                        assert!((k[(3 * r + i, 3 * c + j)] - want).abs() <= 1e-12 * want.abs().max(1.0));
                        assert_eq!(sys.get(3 * r + i, 3 * c + j), k[(3 * r + i, 3 * c + j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn no_constraints_is_singular() {
        let h = stack(1);
        assert!(matches!(
            assemble_system(&h, &Material::default(), &fix(&[])),
            Err(Error::SingularSystem(_))
        ));
        assert!(matches!(
            assemble_system(&h, &Material::default(), &fix(&["missing"])),
            Err(Error::UnknownSet(_))
        ));
    }

    #[test]
    fn pcg_matches_dense_solve() {
        let h = stack(3);
        let sys = assemble_system(&h, &Material::default(), &fix(&["base"])).unwrap();
        let loads: Vec<Vec3> = (0..h.nodes.len())
            .map(|i| Vec3::new(1.0, -0.5, 1.0 + i as f64))
            .collect();
        let (u, stats) = solve_system(&sys, &loads, 1e-12).unwrap();
        let k = sys.to_dense();
        let f = DVector::from_vec(sys.restrict(&loads));
        let exact = k.clone().cholesky().unwrap().solve(&f);
        let got = DVector::from_vec(sys.restrict(&u));
        assert!((&got - &exact).norm() <= 1e-8 * exact.norm());
        assert!((&k * &got - &f).norm() / f.norm() <= 1e-12);
        assert!(stats.residual <= 1e-12);
        for v in 0..4 {
            assert_eq!(u[v], Vec3::zeros());
        }
    }

    #[test]
    fn zero_load_zero_displacement() {
        let h = stack(2);
        let sys = assemble_system(&h, &Material::default(), &fix(&["base"])).unwrap();
        let (u, stats) = solve_system(&sys, &vec![Vec3::zeros(); h.nodes.len()], 1e-8).unwrap();
        assert!(u.iter().all(|d| *d == Vec3::zeros()));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn residual_within_tolerance() {
        let m = cylinder_mesh(15.0, 40.0, 11, 24).unwrap();
        let h = extrude_to_hex(&m, 2.0, 2).unwrap();
        let sys = assemble_system(&h, &Material::default(), &fix(&[INLET_RING, OUTLET_RING])).unwrap();
        let loads: Vec<Vec3> = h.nodes.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
        for tol in [1e-6, 1e-8, 1e-10] {
            let (u, stats) = solve_system(&sys, &loads, tol).unwrap();
            let x = sys.restrict(&u);
            let f = sys.restrict(&loads);
            let mut kx = vec![0.0; x.len()];
            sys.mul(&x, &mut kx);
            let res = kx.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                / f.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= tol);
            assert!((res - stats.residual).abs() <= 1e-3 * tol);
            assert!(stats.iterations <= iteration_cap(sys.n_dofs()));
        }
    }

    #[test]
    fn non_convergence_reports_history() {
        let m = cylinder_mesh(15.0, 40.0, 11, 24).unwrap();
        let h = extrude_to_hex(&m, 2.0, 2).unwrap();
        let sys = assemble_system(&h, &Material::default(), &fix(&[INLET_RING])).unwrap();
        let loads = vec![Vec3::new(0.0, 0.0, 1.0); h.nodes.len()];
        match solve_system(&sys, &loads, 1e-300) {
            Err(Error::SolverFailure {
                iterations,
                residual_history,
                ..
            }) => {
                assert_eq!(iterations, iteration_cap(sys.n_dofs()));
                assert_eq!(residual_history.len(), iterations);
            }
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn unused_nodes_are_dropped() {
        let mut h = stack(1);
        h.nodes.push(Vec3::new(9., 9., 9.));
        let sys = assemble_system(&h, &Material::default(), &fix(&["base"])).unwrap();
        assert_eq!(sys.free_index[8], None);
        assert_eq!(sys.n_dofs(), 12);
    }
}
