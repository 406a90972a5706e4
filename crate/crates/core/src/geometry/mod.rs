//! Core 3D types shared by every stage of the pipeline.
//!
//! All lengths are millimetres. Positions and directions both use [`Vec3`];
//! frame axes are unit vectors.

mod frames;
mod kdtree;
mod polyline;

pub use frames::{initial_normal, transport_frames, transport_frames_with_tangents, Frame};
pub use kdtree::{compute_radii, SpatialIndex};
pub use polyline::{polyline_length, resample_polyline, resample_with_values};

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Ordered centerline samples with optional inscribed-sphere radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    pub points: Vec<Vec3>,
    pub radii: Option<Vec<f64>>,
}

impl Centerline {
    pub fn new(points: Vec<Vec3>, radii: Option<Vec<f64>>) -> Result<Self> {
        let c = Centerline { points, radii };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::DegeneratePolyline);
        }
        if self.points.iter().any(|p| !is_finite(p)) {
            return Err(Error::invalid("centerline contains non-finite coordinates"));
        }
        for (i, w) in self.points.windows(2).enumerate() {
            if (w[1] - w[0]).norm() == 0.0 {
                return Err(Error::invalid(format!("centerline points {i} and {} coincide", i + 1)));
            }
        }
        if let Some(r) = &self.radii {
            if r.len() != self.points.len() {
                return Err(Error::invalid(format!(
                    "centerline has {} points but {} radii",
                    self.points.len(),
                    r.len()
                )));
            }
            if let Some(&bad) = r.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidRadius(bad));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arc-length resampling of the points, carrying radii along by linear interpolation.
    pub fn resampled(&self, n: usize) -> Result<Centerline> {
        match &self.radii {
            None => Ok(Centerline {
                points: resample_polyline(&self.points, n)?,
                radii: None,
            }),
            Some(r) => {
                let (points, radii) = resample_with_values(&self.points, r, n)?;
                Ok(Centerline {
                    points,
                    radii: Some(radii),
                })
            }
        }
    }
}

/// Annotated anatomical landmarks of one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub hinge_points: [Vec3; 3],
    pub end_curve: Vec<Vec3>,
    pub arch_curves: Vec<Vec<Vec3>>,
    pub centerline: Centerline,
    pub region_breakpoints: Option<Vec<usize>>,
}

impl LandmarkSet {
    pub fn validate(&self) -> Result<()> {
        let [a, b, c] = &self.hinge_points;
        let area2 = (b - a).cross(&(c - a)).norm();
        let scale = (b - a).norm().max((c - a).norm()).max(1e-300);
        if area2 <= 1e-12 * scale * scale {
            return Err(Error::invalid("hinge points are collinear"));
        }
        if self.end_curve.len() < 3 {
            return Err(Error::invalid("end_curve needs at least 3 points"));
        }
        for (i, curve) in self.arch_curves.iter().enumerate() {
            if curve.len() < 3 {
                return Err(Error::invalid(format!("arch curve {i} needs at least 3 points")));
            }
        }
        self.centerline.validate()?;
        if let Some(bp) = &self.region_breakpoints {
            if bp.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidBreakpoints(bp.clone()));
            }
        }
        Ok(())
    }

    pub fn hinge_centroid(&self) -> Vec3 {
        (self.hinge_points[0] + self.hinge_points[1] + self.hinge_points[2]) / 3.0
    }

    /// Unit normal of the plane through the three hinge points.
    pub fn hinge_normal(&self) -> Vec3 {
        let [a, b, c] = &self.hinge_points;
        (b - a).cross(&(c - a)).normalize()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud"));
        }
        if points.iter().any(|p| !is_finite(p)) {
            return Err(Error::invalid("point cloud contains non-finite coordinates"));
        }
        Ok(PointCloud { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Triangle soup with shared vertices, e.g. an isosurface or an STL import.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleSurface {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

/// Triangles with area at or below this are considered degenerate (mm²).
pub const DEGENERATE_TRIANGLE_AREA: f64 = 1e-12;

impl TriangleSurface {
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::invalid(format!("triangle {t} references a vertex out of range")));
            }
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Signed enclosed volume (divergence theorem); positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0)
            .sum()
    }

    /// Drops triangles whose area is at or below [`DEGENERATE_TRIANGLE_AREA`].
    pub fn without_degenerate(mut self) -> Self {
        let keep: Vec<[usize; 3]> = (0..self.triangles.len())
            .filter(|&t| self.triangle_area(t) > DEGENERATE_TRIANGLE_AREA)
            .map(|t| self.triangles[t])
            .collect();
        self.triangles = keep;
        self
    }
}

pub(crate) fn is_finite(p: &Vec3) -> bool {
    p.x.is_finite() && p.y.is_finite() && p.z.is_finite()
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Least-squares plane through `points`: (centroid, unit normal).
///
/// The normal is the eigenvector of the scatter matrix with the smallest
/// eigenvalue. Its sign is arbitrary.
pub fn fit_plane(points: &[Vec3]) -> (Vec3, Vec3) {
    let c = centroid(points);
    let mut s = Matrix3::zeros();
    for p in points {
        let d = p - c;
        s += d * d.transpose();
    }
    let eig = SymmetricEigen::new(s);
    let imin = eig.eigenvalues.imin();
    let n: Vec3 = eig.eigenvectors.column(imin).into_owned();
    (c, n.normalize())
}
