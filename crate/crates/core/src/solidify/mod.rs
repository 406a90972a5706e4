//! Layered hexahedral wall built by extruding a quad surface outward.

mod element;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::template::{grid_connectivity, QuadMesh};

pub(crate) use element::GAUSS_1D;
pub use element::{
    corner_jacobians, gauss_points, hex_volume, jacobian, scaled_jacobian, shape_hex8, FACE_ZETA_MINUS, FACE_ZETA_PLUS,
    HEX_CORNERS, HEX_FACES,
};

pub const INLET_RING: &str = "inlet_ring";
pub const OUTLET_RING: &str = "outlet_ring";
pub const HOLE_RIMS: &str = "hole_rims";
pub const INNER_SURFACE: &str = "inner_surface";
pub const OUTER_SURFACE: &str = "outer_surface";

/// One local face of one hexahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HexFace {
    pub hex: usize,
    /// Index into [`HEX_FACES`].
    pub face: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexMesh {
    pub nodes: Vec<Vec3>,
    /// Corner order: bottom face counter-clockwise seen from the top, then the top face.
    pub hexes: Vec<[usize; 8]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub face_sets: BTreeMap<String, Vec<HexFace>>,
    pub layers: usize,
    /// Total wall thickness (mm).
    pub thickness: f64,
}

impl HexMesh {
    pub fn corners(&self, e: usize) -> [Vec3; 8] {
        self.hexes[e].map(|v| self.nodes[v])
    }

    pub fn face_nodes(&self, f: HexFace) -> [usize; 4] {
        HEX_FACES[f.face].map(|k| self.hexes[f.hex][k])
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownSet(name.to_string()))
    }

    pub fn face_set(&self, name: &str) -> Result<&[HexFace]> {
        self.face_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownSet(name.to_string()))
    }

    pub fn volume(&self) -> f64 {
        (0..self.hexes.len()).map(|e| hex_volume(&self.corners(e))).sum()
    }

    /// Faces used by exactly one element.
    pub fn boundary_faces(&self) -> Vec<HexFace> {
        let mut uses: HashMap<[usize; 4], (usize, HexFace)> = HashMap::new();
        for hex in 0..self.hexes.len() {
            for face in 0..6 {
                let f = HexFace { hex, face };
                let mut key = self.face_nodes(f);
                key.sort_unstable();
                uses.entry(key).and_modify(|u| u.0 += 1).or_insert((1, f));
            }
        }
        let mut out: Vec<HexFace> = uses.into_values().filter(|u| u.0 == 1).map(|u| u.1).collect();
        out.sort_unstable();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if let Some(e) = self.hexes.iter().position(|h| h.iter().any(|&v| v >= n)) {
            return Err(Error::invalid(format!("hex {e} references a node out of range")));
        }
        for (name, set) in &self.node_sets {
            if set.iter().any(|&v| v >= n) {
                return Err(Error::invalid(format!(
                    "node set '{name}' references a node out of range"
                )));
            }
        }
        let boundary: std::collections::HashSet<HexFace> = self.boundary_faces().into_iter().collect();
        for (name, set) in &self.face_sets {
            if let Some(f) = set.iter().find(|f| f.hex >= self.hexes.len() || f.face >= 6) {
                return Err(Error::invalid(format!("face set '{name}' has invalid face {f:?}")));
            }
            if let Some(f) = set.iter().find(|f| !boundary.contains(f)) {
                return Err(Error::invalid(format!(
                    "face set '{name}' contains interior face {f:?}"
                )));
            }
        }
        let q = hex_quality(self);
        if q.inverted_count > 0 {
            return Err(self_intersection(&q));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexQualityReport {
    pub min_scaled_jacobian: f64,
    pub inverted_count: usize,
    pub scaled_jacobians: Vec<f64>,
}

impl HexQualityReport {
    pub fn inverted(&self) -> Vec<usize> {
        (0..self.scaled_jacobians.len())
            .filter(|&e| self.scaled_jacobians[e] <= 0.0)
            .collect()
    }
}

pub fn hex_quality(mesh: &HexMesh) -> HexQualityReport {
    let scaled_jacobians: Vec<f64> = (0..mesh.hexes.len())
        .map(|e| scaled_jacobian(&mesh.corners(e)))
        .collect();
    HexQualityReport {
        min_scaled_jacobian: scaled_jacobians.iter().copied().fold(f64::INFINITY, f64::min),
        inverted_count: scaled_jacobians.iter().filter(|&&s| s <= 0.0).count(),
        scaled_jacobians,
    }
}

fn self_intersection(q: &HexQualityReport) -> Error {
    let bad = q.inverted();
    Error::SelfIntersection {
        count: bad.len(),
        elements: bad.into_iter().take(10).collect(),
    }
}

fn accumulate_normals(vertices: &[Vec3], quads: &[[usize; 4]]) -> (Vec<Vec3>, Vec<bool>) {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    let mut touched = vec![false; vertices.len()];
    for q in quads {
        let p = q.map(|v| vertices[v]);
        let n = (p[2] - p[0]).cross(&(p[3] - p[1]));
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        for k in 0..4 {
            let e1 = p[(k + 1) % 4] - p[k];
            let e2 = p[(k + 3) % 4] - p[k];
            let angle = e1.cross(&e2).norm().atan2(e1.dot(&e2));
            acc[q[k]] += n * angle;
            touched[q[k]] = true;
        }
    }
    (acc, touched)
}

/// Angle-weighted average of incident quad normals, normalised.
pub fn vertex_normals(mesh: &QuadMesh) -> Result<Vec<Vec3>> {
    let (acc, touched) = accumulate_normals(&mesh.vertices, &mesh.quads);
    acc.into_iter()
        .enumerate()
        .map(|(v, n)| {
            if !touched[v] {
                return Err(Error::OrphanVertex { vertex: v });
            }
            let len = n.norm();
            if len > 0.0 && len.is_finite() {
                Ok(n / len)
            } else {
                Err(Error::DegenerateElement {
                    index: v,
                    reason: "incident quad normals cancel".into(),
                })
            }
        })
        .collect()
}

/// Normals for extrusion: vertices left without quads by hole cutting take
/// their normal from the uncut grid, so every node keeps its place.
fn extrusion_normals(mesh: &QuadMesh) -> Result<Vec<Vec3>> {
    match vertex_normals(mesh) {
        Err(Error::OrphanVertex { vertex }) => {
            let Some((ns, nr)) = mesh.grid_dims else {
                return Err(Error::OrphanVertex { vertex });
            };
            let full = grid_connectivity(ns, nr, &Default::default());
            let (acc, _) = accumulate_normals(&mesh.vertices, &full);
            let (live, touched) = accumulate_normals(&mesh.vertices, &mesh.quads);
            acc.iter()
                .zip(&live)
                .zip(&touched)
                .enumerate()
                .map(|(v, ((a, l), &t))| {
                    let n = if t { l } else { a };
                    let len = n.norm();
                    if len > 0.0 && len.is_finite() {
                        Ok(n / len)
                    } else {
                        Err(Error::OrphanVertex { vertex: v })
                    }
                })
                .collect()
        }
        other => other,
    }
}

/// Offsets the surface outward in `layers` equal steps of `thickness / layers`.
///
/// Node `l·V + v` is surface vertex `v` on layer `l`; hex `l·Q + q` sits on
/// quad `q` between layers `l` and `l + 1`.
pub fn extrude_to_hex(mesh: &QuadMesh, thickness: f64, layers: usize) -> Result<HexMesh> {
    if !(thickness > 0.0 && thickness.is_finite()) {
        return Err(Error::invalid(format!(
            "wall thickness must be positive, got {thickness}"
        )));
    }
    if layers == 0 {
        return Err(Error::invalid("at least one layer is required"));
    }
    mesh.validate()?;
    let normals = extrusion_normals(mesh)?;
    let nv = mesh.vertices.len();
    let nq = mesh.quads.len();

    let mut nodes = Vec::with_capacity(nv * (layers + 1));
    for l in 0..=layers {
        let d = thickness * l as f64 / layers as f64;
        nodes.extend(mesh.vertices.iter().zip(&normals).map(|(p, n)| p + n * d));
    }
    let mut hexes = Vec::with_capacity(nq * layers);
    for l in 0..layers {
        let (lo, hi) = (l * nv, (l + 1) * nv);
        hexes.extend(mesh.quads.iter().map(|q| {
            [
                q[0] + lo,
                q[1] + lo,
                q[2] + lo,
                q[3] + lo,
                q[0] + hi,
                q[1] + hi,
                q[2] + hi,
                q[3] + hi,
            ]
        }));
    }

    let all_layers = |verts: &[usize]| -> Vec<usize> {
        (0..=layers)
            .flat_map(|l| verts.iter().map(move |&v| l * nv + v))
            .collect()
    };
    let mut rims: Vec<usize> = mesh.hole_loops.iter().flatten().copied().collect();
    rims.sort_unstable();
    rims.dedup();
    let mut node_sets = BTreeMap::new();
    node_sets.insert(INLET_RING.to_string(), all_layers(&mesh.inlet_ring()));
    node_sets.insert(OUTLET_RING.to_string(), all_layers(&mesh.outlet_ring()));
    node_sets.insert(HOLE_RIMS.to_string(), all_layers(&rims));

    let mut face_sets = BTreeMap::new();
    face_sets.insert(
        INNER_SURFACE.to_string(),
        (0..nq)
            .map(|q| HexFace {
                hex: q,
                face: FACE_ZETA_MINUS,
            })
            .collect(),
    );
    face_sets.insert(
        OUTER_SURFACE.to_string(),
        (0..nq)
            .map(|q| HexFace {
                hex: (layers - 1) * nq + q,
                face: FACE_ZETA_PLUS,
            })
            .collect(),
    );

    let hex = HexMesh {
        nodes,
        hexes,
        node_sets,
        face_sets,
        layers,
        thickness,
    };
    let q = hex_quality(&hex);
    if q.inverted_count > 0 {
        return Err(self_intersection(&q));
    }
    Ok(hex)
}
