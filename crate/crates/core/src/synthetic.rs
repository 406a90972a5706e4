//! Analytic test geometry: a straight tube with a Gaussian bulge, and the
//! landmarks that go with it.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Centerline, Frame, LandmarkSet, TriangleSurface, Vec3};
use crate::template::{build_tube, cross_section, QuadMesh};

/// Tube along +z from `z = 0` to `z = length` with radius
/// `base + (peak − base) · exp(−(z − center)² / (2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulgedTube {
    pub base_radius: f64,
    pub peak_radius: f64,
    pub length: f64,
    pub bulge_center: f64,
    pub bulge_width: f64,
}

impl Default for BulgedTube {
    fn default() -> Self {
        BulgedTube {
            base_radius: 12.0,
            peak_radius: 22.0,
            length: 300.0,
            bulge_center: 150.0,
            bulge_width: 20.0,
        }
    }
}

impl BulgedTube {
    pub fn straight(radius: f64, length: f64) -> Self {
        BulgedTube {
            base_radius: radius,
            peak_radius: radius,
            length,
            bulge_center: 0.5 * length,
            bulge_width: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.base_radius > 0.0
            && self.peak_radius > 0.0
            && self.length > 0.0
            && self.bulge_width > 0.0
            && self.bulge_center.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid bulged tube {self:?}")))
        }
    }

    pub fn radius_at(&self, z: f64) -> f64 {
        let s = (z - self.bulge_center) / self.bulge_width;
        self.base_radius + (self.peak_radius - self.base_radius) * (-0.5 * s * s).exp()
    }

    /// Axial interval where the radius exceeds the base by more than `fraction`
    /// of the bulge height.
    pub fn bulge_interval(&self, fraction: f64) -> (f64, f64) {
        let half = self.bulge_width * (-2.0 * fraction.ln()).sqrt();
        (self.bulge_center - half, self.bulge_center + half)
    }

    pub fn surface_point(&self, z: f64, angle: f64) -> Vec3 {
        let r = self.radius_at(z);
        Vec3::new(r * angle.cos(), r * angle.sin(), z)
    }

    /// Open triangulated wall, outward-facing, `n_axial` rings of `n_theta` points.
    pub fn surface(&self, n_axial: usize, n_theta: usize) -> Result<TriangleSurface> {
        self.validate()?;
        if n_axial < 2 || n_theta < 3 {
            return Err(Error::invalid("bulged tube needs at least 2 rings of 3 points"));
        }
        let mut vertices = Vec::with_capacity(n_axial * n_theta);
        for j in 0..n_axial {
            let z = self.length * j as f64 / (n_axial - 1) as f64;
            for i in 0..n_theta {
                vertices.push(self.surface_point(z, TAU * i as f64 / n_theta as f64));
            }
        }
        let mut triangles = Vec::with_capacity(2 * (n_axial - 1) * n_theta);
        for j in 0..n_axial - 1 {
            for i in 0..n_theta {
                let i1 = (i + 1) % n_theta;
                let (a, b) = (j * n_theta + i, j * n_theta + i1);
                let (c, d) = ((j + 1) * n_theta + i1, (j + 1) * n_theta + i);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(TriangleSurface { vertices, triangles })
    }

    /// Quad wall with `n_sections` rings of `n_ring` vertices on the exact profile.
    pub fn quad_mesh(&self, n_sections: usize, n_ring: usize) -> Result<QuadMesh> {
        self.validate()?;
        if n_sections < 2 {
            return Err(Error::invalid("bulged tube needs at least 2 sections"));
        }
        let frame = Frame {
            t: Vec3::z(),
            n: Vec3::x(),
            b: Vec3::y(),
        };
        let sections = (0..n_sections)
            .map(|j| {
                let z = self.length * j as f64 / (n_sections - 1) as f64;
                cross_section(Vec3::new(0.0, 0.0, z), self.radius_at(z), &frame, n_ring)
            })
            .collect::<Result<Vec<_>>>()?;
        build_tube(&sections)
    }

    /// Straight z-axis centerline with hinge points on the inlet rim and a
    /// circular end curve. Radii are the base radius throughout, so the
    /// template built from these landmarks is a plain cylinder.
    pub fn landmarks(&self, n_centerline: usize) -> Result<LandmarkSet> {
        self.validate()?;
        if n_centerline < 2 {
            return Err(Error::invalid("centerline needs at least 2 points"));
        }
        let points: Vec<Vec3> = (0..n_centerline)
            .map(|k| Vec3::new(0.0, 0.0, self.length * k as f64 / (n_centerline - 1) as f64))
            .collect();
        let rim = |z: f64, k: usize, n: usize| {
            let a = TAU * k as f64 / n as f64;
            Vec3::new(self.base_radius * a.cos(), self.base_radius * a.sin(), z)
        };
        let lm = LandmarkSet {
            hinge_points: [rim(0.0, 0, 3), rim(0.0, 1, 3), rim(0.0, 2, 3)],
            end_curve: (0..24).map(|k| rim(self.length, k, 24)).collect(),
            arch_curves: Vec::new(),
            centerline: Centerline::new(points, Some(vec![self.base_radius; n_centerline]))?,
            region_breakpoints: None,
        };
        lm.validate()?;
        Ok(lm)
    }
}

/// Straight quad tube along +z, `n_sections` rings of `n_ring` vertices.
pub fn cylinder_mesh(radius: f64, length: f64, n_sections: usize, n_ring: usize) -> Result<QuadMesh> {
    if n_sections < 2 || !(length > 0.0) {
        return Err(Error::invalid(
            "cylinder needs a positive length and at least 2 sections",
        ));
    }
    let frame = Frame {
        t: Vec3::z(),
        n: Vec3::x(),
        b: Vec3::y(),
    };
    let sections = (0..n_sections)
        .map(|j| {
            let z = length * j as f64 / (n_sections - 1) as f64;
            cross_section(Vec3::new(0.0, 0.0, z), radius, &frame, n_ring)
        })
        .collect::<Result<Vec<_>>>()?;
    build_tube(&sections)
}
