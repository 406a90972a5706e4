use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, TriangleSurface};

/// Draws `n` points uniformly by area: a triangle with probability
/// proportional to its area, then a uniform barycentric point inside it.
pub fn sample_surface(surface: &TriangleSurface, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    surface.validate()?;
    let areas: Vec<f64> = (0..surface.triangles.len()).map(|t| surface.triangle_area(t)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSurface("surface has zero total area".into()));
    }
    let pick = WeightedIndex::new(&areas).map_err(|e| Error::DegenerateSurface(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let [a, b, c] = surface.triangles[pick.sample(&mut rng)];
        let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let (pa, pb, pc) = (surface.vertices[a], surface.vertices[b], surface.vertices[c]);
        points.push(pa + (pb - pa) * u + (pc - pa) * v);
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn tri(scale: f64) -> TriangleSurface {
        TriangleSurface {
            vertices: vec![Vec3::zeros(), Vec3::new(scale, 0., 0.), Vec3::new(0., scale, 0.)],
            triangles: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn points_stay_inside_single_triangle() {
        let c = sample_surface(&tri(2.0), 5000, 1).unwrap();
        for p in &c.points {
            // Barycentric coordinates of (x, y) in the right triangle of leg 2.
            let (l1, l2) = (p.x / 2.0, p.y / 2.0);
            assert!(l1 >= 0.0 && l2 >= 0.0 && 1.0 - l1 - l2 >= -1e-15);
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn area_weighted_split() {
        // Areas 9 : 1, disjoint in x.
        let s = TriangleSurface {
            vertices: vec![
                Vec3::zeros(),
                Vec3::new(3., 0., 0.),
                Vec3::new(0., 6., 0.),
                Vec3::new(10., 0., 0.),
                Vec3::new(11., 0., 0.),
                Vec3::new(10., 2., 0.),
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        };
        let n = 10_000;
        let c = sample_surface(&s, n, 7).unwrap();
        let big = c.points.iter().filter(|p| p.x < 5.0).count() as f64;
        let (p, nf) = (0.9, n as f64);
        let sigma = (nf * p * (1.0 - p)).sqrt();
        assert!((big - nf * p).abs() <= 3.0 * sigma, "{big}");
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = sample_surface(&tri(1.0), 100, 42).unwrap();
        let b = sample_surface(&tri(1.0), 100, 42).unwrap();
        let c = sample_surface(&tri(1.0), 100, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_area_rejected() {
        let s = TriangleSurface {
            vertices: vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0],
            triangles: vec![[0, 1, 2]],
        };
        assert!(matches!(sample_surface(&s, 10, 0), Err(Error::DegenerateSurface(_))));
    }
}
