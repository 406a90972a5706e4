//! Scale-invariant element-quality terms for quad surface meshes.
//!
//! * area: `mean_q (A_q / Ā − 1)²`, with `A_q = |½ (p2 − p0) × (p3 − p1)|`
//! * flatness: `mean_q d_q² / A_q`, `d_q` the RMS distance of the corners to
//!   their least-squares plane
//! * angle: `mean over corners of cos²(interior angle)`
//! * edge: `mean_q var(edge lengths) / mean(edge lengths)²`
//!
//! Every term comes with its exact gradient w.r.t. the vertex positions.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::template::QuadMesh;

/// Quads with a vector area below this are rejected (mm²).
pub const DEGENERATE_QUAD_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QualityComponents {
    pub area: f64,
    pub flatness: f64,
    pub angle: f64,
    pub edge: f64,
}

#[derive(Debug, Clone)]
pub struct QualityEval {
    pub components: QualityComponents,
    pub area_grad: Vec<Vec3>,
    pub flatness_grad: Vec<Vec3>,
    pub angle_grad: Vec<Vec3>,
    pub edge_grad: Vec<Vec3>,
}

/// Area magnitude and its gradient w.r.t. the four corners.
fn quad_area(p: &[Vec3; 4]) -> (f64, [Vec3; 4]) {
    let d20 = p[2] - p[0];
    let d31 = p[3] - p[1];
    let s = d20.cross(&d31) * 0.5;
    let a = s.norm();
    let n = s / a;
    let g2 = d31.cross(&n) * 0.5;
    let g3 = n.cross(&d20) * 0.5;
    (a, [-g2, -g3, g2, g3])
}

/// Squared RMS corner-to-plane distance and its gradient.
fn plane_deviation(p: &[Vec3; 4]) -> (f64, [Vec3; 4]) {
    let c = (p[0] + p[1] + p[2] + p[3]) * 0.25;
    let mut s = Matrix3::zeros();
    for q in p {
        let d = q - c;
        s += d * d.transpose();
    }
    let eig = SymmetricEigen::new(s);
    let k = eig.eigenvalues.imin();
    let lambda = eig.eigenvalues[k].max(0.0);
    let n: Vec3 = eig.eigenvectors.column(k).into_owned();
    // dλ = nᵀ dS n; the centroid's own variation cancels.
    let g = p.map(|q| n * (0.5 * n.dot(&(q - c))));
    (lambda * 0.25, g)
}

fn corner_cosines(p: &[Vec3; 4]) -> ([f64; 4], [[Vec3; 4]; 4]) {
    let mut cos = [0.0; 4];
    let mut grads = [[Vec3::zeros(); 4]; 4];
    for k in 0..4 {
        let next = (k + 1) % 4;
        let prev = (k + 3) % 4;
        let u = p[next] - p[k];
        let v = p[prev] - p[k];
        let (lu, lv) = (u.norm(), v.norm());
        let c = u.dot(&v) / (lu * lv);
        let dc_du = v / (lu * lv) - u * (c / (lu * lu));
        let dc_dv = u / (lu * lv) - v * (c / (lv * lv));
        cos[k] = c;
        grads[k][next] += dc_du;
        grads[k][prev] += dc_dv;
        grads[k][k] -= dc_du + dc_dv;
    }
    (cos, grads)
}

/// Edge-length variance over squared mean, and its gradient.
fn edge_irregularity(p: &[Vec3; 4]) -> (f64, [Vec3; 4]) {
    let mut len = [0.0; 4];
    let mut dir = [Vec3::zeros(); 4];
    for e in 0..4 {
        let d = p[(e + 1) % 4] - p[e];
        len[e] = d.norm();
        dir[e] = d / len[e];
    }
    let m = len.iter().sum::<f64>() * 0.25;
    let var = len.iter().map(|l| (l - m) * (l - m)).sum::<f64>() * 0.25;
    let value = var / (m * m);
    let mut g = [Vec3::zeros(); 4];
    for e in 0..4 {
        let dl = 0.5 * (len[e] - m) / (m * m) - 0.5 * var / (m * m * m);
        g[(e + 1) % 4] += dir[e] * dl;
        g[e] -= dir[e] * dl;
    }
    (value, g)
}

/// Evaluates all four quality terms over the live quads of `mesh`.
pub fn quality_loss(mesh: &QuadMesh) -> Result<QualityEval> {
    let nq = mesh.quads.len();
    if nq == 0 {
        return Err(Error::EmptyInput("quad mesh"));
    }
    let nv = mesh.vertices.len();
    let mut area_grad = vec![Vec3::zeros(); nv];
    let mut flatness_grad = vec![Vec3::zeros(); nv];
    let mut angle_grad = vec![Vec3::zeros(); nv];
    let mut edge_grad = vec![Vec3::zeros(); nv];
    let inv_q = 1.0 / nq as f64;

    let mut areas = Vec::with_capacity(nq);
    let mut area_grads = Vec::with_capacity(nq);
    let mut flatness = 0.0;
    let mut angle = 0.0;
    let mut edge = 0.0;
    for (q, quad) in mesh.quads.iter().enumerate() {
        let p = mesh.quad_points(q);
        let (a, ga) = quad_area(&p);
        if !(a >= DEGENERATE_QUAD_AREA) {
            return Err(Error::DegenerateElement {
                index: q,
                reason: format!("quad area {a:.3e} mm²"),
            });
        }

        let (d2, gd) = plane_deviation(&p);
        flatness += d2 / a;
        for k in 0..4 {
            flatness_grad[quad[k]] += (gd[k] / a - ga[k] * (d2 / (a * a))) * inv_q;
        }

        let (cos, gc) = corner_cosines(&p);
        for k in 0..4 {
            angle += cos[k] * cos[k];
            for m in 0..4 {
                angle_grad[quad[m]] += gc[k][m] * (2.0 * cos[k] * 0.25 * inv_q);
            }
        }

        let (ev, ge) = edge_irregularity(&p);
        edge += ev;
        for k in 0..4 {
            edge_grad[quad[k]] += ge[k] * inv_q;
        }

        areas.push(a);
        area_grads.push(ga);
    }

    let mean_a = areas.iter().sum::<f64>() * inv_q;
    let mut area = 0.0;
    let mut cross = 0.0;
    for &a in &areas {
        let r = a / mean_a;
        area += (r - 1.0) * (r - 1.0);
        cross += (r - 1.0) * r;
    }
    area *= inv_q;
    cross *= inv_q;
    for (q, quad) in mesh.quads.iter().enumerate() {
        let r = areas[q] / mean_a;
        let d_term_d_a = 2.0 * inv_q / mean_a * ((r - 1.0) - cross);
        for k in 0..4 {
            area_grad[quad[k]] += area_grads[q][k] * d_term_d_a;
        }
    }

    Ok(QualityEval {
        components: QualityComponents {
            area,
            flatness: flatness * inv_q,
            angle: angle * 0.25 * inv_q,
            edge: edge * inv_q,
        },
        area_grad,
        flatness_grad,
        angle_grad,
        edge_grad,
    })
}

/// Quads that are folded (a corner normal opposes the quad normal) or, when a
/// reference mesh with the same connectivity is given, flipped relative to it.
pub fn inverted_quads(mesh: &QuadMesh, reference: Option<&QuadMesh>) -> Vec<usize> {
    let mut out = Vec::new();
    for q in 0..mesh.quads.len() {
        let p = mesh.quad_points(q);
        let s = mesh.quad_vector_area(q);
        let folded = (0..4).any(|k| {
            let u = p[(k + 1) % 4] - p[k];
            let v = p[(k + 3) % 4] - p[k];
            u.cross(&v).dot(&s) <= 0.0
        });
        let flipped = reference.is_some_and(|r| r.quad_vector_area(q).dot(&s) <= 0.0);
        if folded || flipped {
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Frame;
    use crate::template::{build_tube, cross_section};

    fn unit_square(h: f64) -> QuadMesh {
        QuadMesh::new(
            vec![
                Vec3::new(0., 0., 0.),
                Vec3::new(1., 0., 0.),
                Vec3::new(1., 1., 0.),
                Vec3::new(0., 1., h),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn tube(ns: usize, nr: usize) -> QuadMesh {
        let f = Frame {
            t: Vec3::z(),
            n: Vec3::x(),
            b: Vec3::y(),
        };
        let secs: Vec<_> = (0..ns)
            .map(|j| cross_section(Vec3::new(0., 0., j as f64 * 0.8), 5.0, &f, nr).unwrap())
            .collect();
        build_tube(&secs).unwrap()
    }

    #[test]
    fn planar_rectangles_are_flat_and_square() {
        let q = quality_loss(&tube(12, 16)).unwrap().components;
        assert!(q.flatness < 1e-14, "flatness {}", q.flatness);
        assert!(q.angle < 1e-14, "angle {}", q.angle);
        assert!(q.area < 1e-20);
    }

    #[test]
    fn lifted_square_matches_formulas() {
        // Independent evaluation for the unit square with p3 lifted by h = 0.2:
        // plane fit through the 4 points via the smallest singular direction.
        let h: f64 = 0.2;
        let q = quality_loss(&unit_square(h)).unwrap().components;
        // Single quad: area ratio is exactly 1.
        assert_eq!(q.area, 0.0);
        // Vector area ½ (p2 - p0) × (p3 - p1) = ½ (1,1,0) × (-1,1,h).
        let s = Vec3::new(1., 1., 0.).cross(&Vec3::new(-1., 1., h)) * 0.5;
        let area = s.norm();
        // Corner deviations from the best plane of a "one corner lifted" quad
        // are ±h/4 in the plane-normal direction; solve the 3x3 scatter
        // eigenproblem independently by power iteration on (tr S) I - S.
        let pts = [
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(1., 1., 0.),
            Vec3::new(0., 1., h),
        ];
        let c = (pts[0] + pts[1] + pts[2] + pts[3]) / 4.0;
        let mut sm = Matrix3::zeros();
        for p in &pts {
            sm += (p - c) * (p - c).transpose();
        }
        let shifted = Matrix3::identity() * sm.trace() - sm;
        let mut x = Vec3::new(0.3, -0.2, 1.0);
        for _ in 0..2000 {
            x = (shifted * x).normalize();
        }
        let lambda_min = x.dot(&(sm * x));
        let d2 = lambda_min / 4.0;
        assert!(
            (q.flatness - d2 / area).abs() < 1e-12,
            "{} vs {}",
            q.flatness,
            d2 / area
        );
        // Corner angles.
        let mut cos2 = 0.0;
        for k in 0..4 {
            let u = pts[(k + 1) % 4] - pts[k];
            let v = pts[(k + 3) % 4] - pts[k];
            let c = u.dot(&v) / (u.norm() * v.norm());
            cos2 += c * c;
        }
        assert!((q.angle - cos2 / 4.0).abs() < 1e-15);
        // Edge lengths 1, 1, sqrt(1+h²), sqrt(1+h²).
        let l = [1.0, 1.0, (1.0 + h * h).sqrt(), (1.0 + h * h).sqrt()];
        let m = l.iter().sum::<f64>() / 4.0;
        let var = l.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((q.edge - var / (m * m)).abs() < 1e-15);
        assert!(q.flatness > 0.0 && q.angle > 0.0 && q.edge > 0.0);
    }

    #[test]
    fn scale_invariant() {
        let mut m = tube(6, 9);
        for (k, v) in m.vertices.iter_mut().enumerate() {
            v.x += 0.3 * ((k * 7 % 11) as f64 / 11.0 - 0.5);
            v.z += 0.2 * ((k * 5 % 13) as f64 / 13.0 - 0.5);
        }
        let a = quality_loss(&m).unwrap().components;
        for v in m.vertices.iter_mut() {
            *v *= 2.0;
        }
        let b = quality_loss(&m).unwrap().components;
        for (x, y) in [
            (a.area, b.area),
            (a.flatness, b.flatness),
            (a.angle, b.angle),
            (a.edge, b.edge),
        ] {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12));
        }
    }

    #[test]
    fn degenerate_quad_named() {
        let m = QuadMesh::new(
            vec![
                Vec3::new(0., 0., 0.),
                Vec3::new(1., 0., 0.),
                Vec3::new(2., 0., 0.),
                Vec3::new(3., 0., 0.),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        assert!(matches!(
            quality_loss(&m),
            Err(Error::DegenerateElement { index: 0, .. })
        ));
    }

    #[test]
    fn folded_quad_detected() {
        let m = QuadMesh::new(
            vec![
                Vec3::new(0., 0., 0.),
                Vec3::new(1., 0., 0.),
                Vec3::new(0., 1., 0.),
                Vec3::new(1., 1., 0.),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        assert_eq!(inverted_quads(&m, None), vec![0]);
        assert!(inverted_quads(&unit_square(0.0), None).is_empty());
    }
}
