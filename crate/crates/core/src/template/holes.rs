use std::collections::{BTreeMap, BTreeSet};

use super::{grid_connectivity, grid_quad, QuadMesh};
use crate::error::{Error, Result};
use crate::geometry::{fit_plane, Vec3};

/// Even-odd point-in-polygon test in 2D.
pub(crate) fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > p.1) != (yj > p.1) {
            let x_cross = xj + (p.1 - yj) * (xi - xj) / (yi - yj);
            if p.0 < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Quads `(section, ring)` of a hole-free grid selected by one arch curve.
pub(crate) fn quads_selected_by_curve(mesh: &QuadMesh, curve: &[Vec3], max_plane_distance: f64) -> Vec<(usize, usize)> {
    let (ns, nr) = mesh.grid_dims.expect("grid mesh");
    let (c, n) = fit_plane(curve);
    // In-plane basis.
    let u = {
        let a = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        (a - n * n.dot(&a)).normalize()
    };
    let v = n.cross(&u);
    let poly: Vec<(f64, f64)> = curve.iter().map(|p| ((p - c).dot(&u), (p - c).dot(&v))).collect();
    let mut out = Vec::new();
    for j in 0..ns - 1 {
        for i in 0..nr {
            let q = grid_quad(nr, i, j);
            let centroid = q.iter().fold(Vec3::zeros(), |acc, &k| acc + mesh.vertices[k]) * 0.25;
            let d = centroid - c;
            if d.dot(&n).abs() > max_plane_distance {
                continue;
            }
            if point_in_polygon((d.dot(&u), d.dot(&v)), &poly) {
                out.push((j, i));
            }
        }
    }
    out
}

/// Removes whole quads inside each arch curve and records the hole boundaries.
///
/// A quad is cut when its centroid lies within `max_plane_distance` of the
/// curve's least-squares plane and its projection falls inside the projected
/// curve. Every edge-connected group of cut quads must be bounded by one
/// simple closed loop that stays clear of the inlet and outlet rims.
pub fn cut_branch_holes(mesh: &QuadMesh, arch_curves: &[Vec<Vec3>], max_plane_distance: f64) -> Result<QuadMesh> {
    if arch_curves.is_empty() {
        return Ok(mesh.clone());
    }
    let (ns, nr) = mesh
        .grid_dims
        .ok_or_else(|| Error::invalid("hole cutting needs a grid-structured mesh"))?;
    if !mesh.removed_quads.is_empty() {
        return Err(Error::invalid("mesh already has holes"));
    }
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (ci, curve) in arch_curves.iter().enumerate() {
        if curve.len() < 3 {
            return Err(Error::invalid(format!("arch curve {ci} needs at least 3 points")));
        }
        let sel = quads_selected_by_curve(mesh, curve, max_plane_distance);
        if sel.is_empty() {
            return Err(Error::CurveMissesMesh { curve: ci });
        }
        for q in sel {
            owner.entry(q).or_insert(ci);
        }
    }
    let removed: BTreeSet<(usize, usize)> = owner.keys().copied().collect();

    // Edge-connected components of the removed set.
    let neighbours = |(j, i): (usize, usize)| {
        let mut out = vec![(j, (i + 1) % nr), (j, (i + nr - 1) % nr)];
        if j > 0 {
            out.push((j - 1, i));
        }
        if j + 2 < ns {
            out.push((j + 1, i));
        }
        out
    };
    let mut component: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut n_comp = 0;
    for &start in &removed {
        if component.contains_key(&start) {
            continue;
        }
        let mut stack = vec![start];
        component.insert(start, n_comp);
        while let Some(q) = stack.pop() {
            for nb in neighbours(q) {
                if removed.contains(&nb) && !component.contains_key(&nb) {
                    component.insert(nb, n_comp);
                    stack.push(nb);
                }
            }
        }
        n_comp += 1;
    }

    // Directed boundary edges of the removed region, oriented like the quads.
    let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut comp_of_vertex: BTreeMap<usize, usize> = BTreeMap::new();
    let mut curve_of_comp = vec![usize::MAX; n_comp];
    for (&(j, i), &c) in &component {
        curve_of_comp[c] = curve_of_comp[c].min(owner[&(j, i)]);
        let q = grid_quad(nr, i, j);
        // Quad across each edge, in the order (0-1, 1-2, 2-3, 3-0).
        let across = [
            if j > 0 { Some((j - 1, i)) } else { None },
            Some((j, (i + 1) % nr)),
            if j + 2 < ns { Some((j + 1, i)) } else { None },
            Some((j, (i + nr - 1) % nr)),
        ];
        for k in 0..4 {
            match across[k] {
                None => {
                    return Err(Error::NonSimpleHole {
                        curve: owner[&(j, i)],
                        loops: 0,
                        pinched: 0,
                    })
                }
                Some(nb) if removed.contains(&nb) => {}
                Some(_) => {
                    let (a, b) = (q[k], q[(k + 1) % 4]);
                    next.entry(a).or_default().push(b);
                    comp_of_vertex.insert(a, c);
                }
            }
        }
    }

    let pinched: Vec<usize> = next.iter().filter(|(_, v)| v.len() != 1).map(|(&k, _)| k).collect();
    if let Some(&p) = pinched.first() {
        let c = comp_of_vertex[&p];
        return Err(Error::NonSimpleHole {
            curve: curve_of_comp[c],
            loops: 0,
            pinched: pinched.len(),
        });
    }

    let mut visited = BTreeSet::new();
    let mut loops_of_comp: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n_comp];
    for &start in next.keys() {
        if visited.contains(&start) {
            continue;
        }
        let mut lp = vec![start];
        visited.insert(start);
        let mut cur = next[&start][0];
        while cur != start {
            if !visited.insert(cur) {
                break;
            }
            lp.push(cur);
            cur = next[&cur][0];
        }
        loops_of_comp[comp_of_vertex[&start]].push(lp);
    }
    for (c, loops) in loops_of_comp.iter().enumerate() {
        if loops.len() != 1 {
            return Err(Error::NonSimpleHole {
                curve: curve_of_comp[c],
                loops: loops.len(),
                pinched: 0,
            });
        }
    }

    let mut hole_loops: Vec<Vec<usize>> = loops_of_comp.into_iter().flatten().collect();
    // Deterministic order: start each loop at its smallest vertex, sort loops.
    for lp in hole_loops.iter_mut() {
        let k = lp.iter().enumerate().min_by_key(|(_, &v)| v).unwrap().0;
        lp.rotate_left(k);
    }
    hole_loops.sort();

    Ok(QuadMesh {
        vertices: mesh.vertices.clone(),
        quads: grid_connectivity(ns, nr, &removed),
        grid_dims: Some((ns, nr)),
        hole_loops,
        removed_quads: removed.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Frame;
    use crate::template::{build_tube, cross_section, CrossSection};
    use std::f64::consts::TAU;

    fn tube(ns: usize, nr: usize, r: f64, len: f64) -> QuadMesh {
        let f = Frame {
            t: Vec3::z(),
            n: Vec3::x(),
            b: Vec3::y(),
        };
        let secs: Vec<CrossSection> = (0..ns)
            .map(|j| cross_section(Vec3::new(0., 0., len * j as f64 / (ns - 1) as f64), r, &f, nr).unwrap())
            .collect();
        build_tube(&secs).unwrap()
    }

    /// Circle of radius `rc` in the plane x = `offset`, centred at height `zc`.
    fn circle_in_tangent_plane(offset: f64, zc: f64, rc: f64) -> Vec<Vec3> {
        (0..24)
            .map(|k| {
                let a = TAU * k as f64 / 24.0;
                Vec3::new(offset, rc * a.cos(), zc + rc * a.sin())
            })
            .collect()
    }

    #[test]
    fn no_curves_is_noop() {
        let m = tube(10, 12, 5.0, 20.0);
        assert_eq!(cut_branch_holes(&m, &[], 5.0).unwrap(), m);
    }

    #[test]
    fn circle_matches_brute_force_centroid_test() {
        let m = tube(80, 48, 12.0, 100.0);
        let curve = circle_in_tangent_plane(12.0 + 2.0, 50.0, 4.0);
        let cut = cut_branch_holes(&m, &[curve], 5.0).unwrap();
        // Oracle: centroid within 5 mm of x = 14 and (y, z - 50) inside radius 4.
        let mut expected = Vec::new();
        for j in 0..79 {
            for i in 0..48 {
                let q = grid_quad(48, i, j);
                let c = q.iter().fold(Vec3::zeros(), |a, &k| a + m.vertices[k]) * 0.25;
                let dx = (c.x - 14.0).abs();
                if dx <= 5.0 && c.y * c.y + (c.z - 50.0).powi(2) < 16.0 {
                    expected.push((j, i));
                }
            }
        }
        assert!(!expected.is_empty());
        assert_eq!(cut.removed_quads, expected);
        assert_eq!(cut.quads.len(), 79 * 48 - expected.len());
        assert_eq!(cut.hole_loops.len(), 1);
        cut.validate().unwrap();
        // Hole rim edges are now used by exactly one quad.
        let counts = cut.edge_use_counts();
        let lp = &cut.hole_loops[0];
        for k in 0..lp.len() {
            let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
            assert_eq!(counts[&(a.min(b), a.max(b))], 1);
        }
    }

    #[test]
    fn far_curve_misses() {
        let m = tube(20, 16, 10.0, 50.0);
        let curve = circle_in_tangent_plane(110.0, 25.0, 4.0);
        assert!(matches!(
            cut_branch_holes(&m, &[curve], 5.0),
            Err(Error::CurveMissesMesh { curve: 0 })
        ));
    }

    #[test]
    fn hole_touching_the_inlet_is_rejected() {
        let m = tube(20, 16, 10.0, 50.0);
        let curve = circle_in_tangent_plane(11.0, 0.5, 4.0);
        assert!(matches!(
            cut_branch_holes(&m, &[curve], 5.0),
            Err(Error::NonSimpleHole { curve: 0, .. })
        ));
    }

    #[test]
    fn two_holes_two_loops() {
        let m = tube(80, 48, 12.0, 100.0);
        let a = circle_in_tangent_plane(13.0, 30.0, 4.0);
        let b = circle_in_tangent_plane(13.0, 70.0, 5.0);
        let cut = cut_branch_holes(&m, &[a, b], 5.0).unwrap();
        assert_eq!(cut.hole_loops.len(), 2);
        let counts = cut.edge_use_counts();
        let rim_edges: usize = cut.hole_loops.iter().map(|l| l.len()).sum();
        let boundary = counts.values().filter(|&&c| c == 1).count();
        assert_eq!(boundary, rim_edges + 2 * 48);
    }

    #[test]
    fn polygon_even_odd() {
        let sq = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)];
        assert!(point_in_polygon((1.0, 1.0), &sq));
        assert!(!point_in_polygon((3.0, 1.0), &sq));
        assert!(!point_in_polygon((-0.1, 1.0), &sq));
    }
}
