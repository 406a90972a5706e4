//! Tubular quadrilateral template with fixed grid topology.
//!
//! Vertex `(i, j)` is ring point `i` of cross-section `j` and lives at index
//! `j * n_ring + i`. Quad `(i, j)` joins sections `j` and `j + 1`:
//!
//! ```text
//! (P[i,j], P[i+1,j], P[i+1,j+1], P[i,j+1])     i + 1 taken modulo n_ring
//! ```
//!
//! Connectivity depends only on `(n_sections, n_ring, removed_quads)`, which is
//! what gives every patient mesh the same node and element numbering.

mod holes;

pub use holes::cut_branch_holes;

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    centroid, compute_radii, fit_plane, transport_frames_with_tangents, Frame, LandmarkSet, SpatialIndex, Vec3,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateConfig {
    pub n_sections: usize,
    pub n_ring: usize,
    /// Band half-width around each arch-curve plane inside which quads may be cut (mm).
    pub max_plane_distance: f64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig {
            n_sections: 320,
            n_ring: 78,
            max_plane_distance: 5.0,
        }
    }
}

impl TemplateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sections < 2 {
            return Err(Error::invalid("n_sections must be >= 2"));
        }
        if self.n_ring < 3 {
            return Err(Error::invalid("n_ring must be >= 3"));
        }
        if !(self.max_plane_distance > 0.0) {
            return Err(Error::invalid("max_plane_distance must be > 0"));
        }
        Ok(())
    }
}

/// One ring of the template.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub center: Vec3,
    pub radius: f64,
    pub frame: Frame,
    pub ring: Vec<Vec3>,
}

/// `ring[k] = center + r cos(θk) N + r sin(θk) B` with `θk = 2πk / n_ring`.
pub fn cross_section(center: Vec3, radius: f64, frame: &Frame, n_ring: usize) -> Result<CrossSection> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidRadius(radius));
    }
    if n_ring < 3 {
        return Err(Error::invalid(format!("n_ring must be >= 3, got {n_ring}")));
    }
    if frame.orthonormality_error() > 1e-9 {
        return Err(Error::invalid("cross-section frame is not orthonormal"));
    }
    let ring = (0..n_ring)
        .map(|k| {
            let theta = TAU * k as f64 / n_ring as f64;
            center + frame.n * (radius * theta.cos()) + frame.b * (radius * theta.sin())
        })
        .collect();
    Ok(CrossSection {
        center,
        radius,
        frame: *frame,
        ring,
    })
}

/// Quadrilateral surface mesh, optionally carrying its structured grid layout.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    pub vertices: Vec<Vec3>,
    /// Counter-clockwise seen from outside: right-hand normals point away from the lumen.
    pub quads: Vec<[usize; 4]>,
    /// `(n_sections, n_ring)` for template-derived meshes.
    pub grid_dims: Option<(usize, usize)>,
    pub hole_loops: Vec<Vec<usize>>,
    /// `(section, ring)` coordinates of quads cut out of the grid, sorted.
    pub removed_quads: Vec<(usize, usize)>,
}

/// Wrap-around quad connectivity for a grid minus the given removed quads.
pub fn grid_connectivity(n_sections: usize, n_ring: usize, removed: &BTreeSet<(usize, usize)>) -> Vec<[usize; 4]> {
    let mut quads = Vec::with_capacity((n_sections - 1) * n_ring - removed.len());
    for j in 0..n_sections - 1 {
        for i in 0..n_ring {
            if removed.contains(&(j, i)) {
                continue;
            }
            quads.push(grid_quad(n_ring, i, j));
        }
    }
    quads
}

pub(crate) fn grid_quad(n_ring: usize, i: usize, j: usize) -> [usize; 4] {
    let i1 = (i + 1) % n_ring;
    [
        j * n_ring + i,
        j * n_ring + i1,
        (j + 1) * n_ring + i1,
        (j + 1) * n_ring + i,
    ]
}

impl QuadMesh {
    /// Free-form quad mesh without grid structure.
    pub fn new(vertices: Vec<Vec3>, quads: Vec<[usize; 4]>) -> Result<Self> {
        let m = QuadMesh {
            vertices,
            quads,
            grid_dims: None,
            hole_loops: Vec::new(),
            removed_quads: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut seen = HashMap::new();
        for (q, quad) in self.quads.iter().enumerate() {
            if quad.iter().any(|&v| v >= nv) {
                return Err(Error::invalid(format!("quad {q} references a vertex out of range")));
            }
            let mut key = *quad;
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("quad {q} repeats a vertex")));
            }
            if let Some(prev) = seen.insert(key, q) {
                return Err(Error::invalid(format!("quads {prev} and {q} are duplicates")));
            }
        }
        if let Some((ns, nr)) = self.grid_dims {
            if ns * nr != nv {
                return Err(Error::invalid(format!("grid {ns}x{nr} does not match {nv} vertices")));
            }
            let removed: BTreeSet<_> = self.removed_quads.iter().copied().collect();
            if grid_connectivity(ns, nr, &removed) != self.quads {
                return Err(Error::invalid("quads do not match the grid connectivity"));
            }
        }
        for (l, lp) in self.hole_loops.iter().enumerate() {
            if lp.len() < 3 || lp.iter().any(|&v| v >= nv) {
                return Err(Error::invalid(format!("hole loop {l} is malformed")));
            }
        }
        Ok(())
    }

    pub fn n_sections(&self) -> Option<usize> {
        self.grid_dims.map(|d| d.0)
    }

    pub fn n_ring(&self) -> Option<usize> {
        self.grid_dims.map(|d| d.1)
    }

    pub fn quad_points(&self, q: usize) -> [Vec3; 4] {
        self.quads[q].map(|v| self.vertices[v])
    }

    pub fn quad_centroid(&self, q: usize) -> Vec3 {
        let p = self.quad_points(q);
        (p[0] + p[1] + p[2] + p[3]) * 0.25
    }

    /// Vector area `½ (p2 − p0) × (p3 − p1)`; its direction is the quad normal.
    pub fn quad_vector_area(&self, q: usize) -> Vec3 {
        let p = self.quad_points(q);
        (p[2] - p[0]).cross(&(p[3] - p[1])) * 0.5
    }

    /// Number of live quads touching each vertex.
    pub fn vertex_valence(&self) -> Vec<usize> {
        let mut val = vec![0; self.vertices.len()];
        for q in &self.quads {
            for &v in q {
                val[v] += 1;
            }
        }
        val
    }

    /// Vertex ids of cross-section `j` of a grid mesh.
    pub fn section_vertices(&self, j: usize) -> Vec<usize> {
        match self.grid_dims {
            Some((_, nr)) => (j * nr..(j + 1) * nr).collect(),
            None => Vec::new(),
        }
    }

    pub fn inlet_ring(&self) -> Vec<usize> {
        self.section_vertices(0)
    }

    pub fn outlet_ring(&self) -> Vec<usize> {
        match self.grid_dims {
            Some((ns, _)) => self.section_vertices(ns - 1),
            None => Vec::new(),
        }
    }

    /// Undirected edges and the number of live quads using each.
    pub fn edge_use_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for q in &self.quads {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Assembles sections into a closed-ring tube, section-major.
pub fn build_tube(sections: &[CrossSection]) -> Result<QuadMesh> {
    if sections.len() < 2 {
        return Err(Error::invalid("a tube needs at least 2 cross-sections"));
    }
    let n_ring = sections[0].ring.len();
    for (j, s) in sections.iter().enumerate() {
        if s.ring.len() != n_ring {
            return Err(Error::InconsistentSections {
                index: j,
                expected: n_ring,
                found: s.ring.len(),
            });
        }
    }
    let vertices: Vec<Vec3> = sections.iter().flat_map(|s| s.ring.iter().copied()).collect();
    let quads = grid_connectivity(sections.len(), n_ring, &BTreeSet::new());
    Ok(QuadMesh {
        vertices,
        quads,
        grid_dims: Some((sections.len(), n_ring)),
        hole_loops: Vec::new(),
        removed_quads: Vec::new(),
    })
}

/// Centerline spine of a template: resampled points, radii, and frames.
#[derive(Debug, Clone)]
pub struct TemplateSpine {
    pub points: Vec<Vec3>,
    pub radii: Vec<f64>,
    pub frames: Vec<Frame>,
}

/// The landmark centerline with its ends moved to the hinge-point centroid
/// and the end-curve centroid, resampled to `n_sections` points.
pub fn spine_centerline(landmarks: &LandmarkSet, n_sections: usize) -> Result<crate::geometry::Centerline> {
    landmarks.validate()?;
    let start = landmarks.hinge_centroid();
    let end = centroid(&landmarks.end_curve);

    let mut pts = landmarks.centerline.points.clone();
    let mut radii = landmarks.centerline.radii.clone();
    let last = pts.len() - 1;
    pts[0] = start;
    pts[last] = end;
    // Replacing the ends can create coincident neighbours; drop them.
    let mut keep = vec![true; pts.len()];
    for i in 1..pts.len() {
        if (pts[i] - pts[i - 1]).norm() == 0.0 {
            keep[if i == last { i - 1 } else { i }] = false;
        }
    }
    let mut it = keep.iter();
    pts.retain(|_| *it.next().unwrap());
    if let Some(r) = radii.as_mut() {
        let mut it = keep.iter();
        r.retain(|_| *it.next().unwrap());
    }
    crate::geometry::Centerline::new(pts, radii)?.resampled(n_sections)
}

/// Resamples the centerline between the hinge-point centroid and the end-curve
/// centroid and transports frames whose end tangents are the inlet and outlet
/// plane normals.
pub fn template_spine(
    landmarks: &LandmarkSet,
    target_index: Option<&SpatialIndex>,
    n_sections: usize,
) -> Result<TemplateSpine> {
    let cl = spine_centerline(landmarks, n_sections)?;

    let radii = match cl.radii.clone() {
        Some(r) => r,
        None => {
            let index = target_index
                .ok_or_else(|| Error::invalid("centerline has no radii and no target surface was supplied"))?;
            let r = compute_radii(&cl.points, index)?;
            if let Some(&bad) = r.iter().find(|&&x| !(x > 0.0)) {
                return Err(Error::InvalidRadius(bad));
            }
            r
        }
    };

    let n = cl.points.len();
    let mut tangents: Vec<Vec3> = (0..n)
        .map(|i| {
            let d = if i == 0 {
                cl.points[1] - cl.points[0]
            } else if i == n - 1 {
                cl.points[n - 1] - cl.points[n - 2]
            } else {
                cl.points[i + 1] - cl.points[i - 1]
            };
            d.normalize()
        })
        .collect();
    let inlet_n = landmarks.hinge_normal();
    tangents[0] = if inlet_n.dot(&tangents[0]) < 0.0 {
        -inlet_n
    } else {
        inlet_n
    };
    let (_, outlet_n) = fit_plane(&landmarks.end_curve);
    tangents[n - 1] = if outlet_n.dot(&tangents[n - 1]) < 0.0 {
        -outlet_n
    } else {
        outlet_n
    };

    let frames = transport_frames_with_tangents(&tangents)?;
    Ok(TemplateSpine {
        points: cl.points,
        radii,
        frames,
    })
}

/// Builds the patient template: spine, one cross-section per centerline
/// point, tube connectivity, then branch holes from the arch curves.
pub fn build_template(
    landmarks: &LandmarkSet,
    target_index: Option<&SpatialIndex>,
    cfg: &TemplateConfig,
) -> Result<QuadMesh> {
    cfg.validate()?;
    let spine = template_spine(landmarks, target_index, cfg.n_sections)?;
    let sections = spine
        .points
        .iter()
        .zip(&spine.radii)
        .zip(&spine.frames)
        .map(|((c, &r), f)| cross_section(*c, r, f, cfg.n_ring))
        .collect::<Result<Vec<_>>>()?;
    let tube = build_tube(&sections)?;
    cut_branch_holes(&tube, &landmarks.arch_curves, cfg.max_plane_distance)
}
