//! Marching cubes over a voxel mask.
//!
//! The case table is built once from the cube faces: on each face the level
//! line runs from where a counter-clockwise walk enters the foreground to
//! where it leaves, with diagonal foreground corners kept apart. Neighbouring
//! cubes see the same face the same way, so the result is watertight, and
//! the walk direction makes every triangle face away from the foreground.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::VoxelMask;
use crate::error::{Error, Result};
use crate::geometry::TriangleSurface;

/// Corner `c` sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const FACES: [[usize; 4]; 6] = [
    [0, 2, 3, 1],
    [4, 5, 7, 6],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 4, 6, 2],
    [1, 3, 7, 5],
];

/// Edges as `(lower corner, axis)`.
fn edges() -> Vec<(usize, usize)> {
    let mut e = Vec::with_capacity(12);
    for c in 0..8 {
        for axis in 0..3 {
            if c & (1 << axis) == 0 {
                e.push((c, axis));
            }
        }
    }
    e
}

fn edge_between(a: usize, b: usize) -> (usize, usize) {
    let (lo, hi) = (a.min(b), a.max(b));
    (lo, (hi ^ lo).trailing_zeros() as usize)
}

type CaseTable = Vec<Vec<[u8; 3]>>;

fn build_table() -> CaseTable {
    let edge_list = edges();
    let edge_id = |a: usize, b: usize| edge_list.iter().position(|&e| e == edge_between(a, b)).unwrap() as u8;
    (0..256usize)
        .map(|case| {
            let inside = |c: usize| case & (1 << c) != 0;
            let mut next: HashMap<u8, u8> = HashMap::new();
            for f in FACES {
                for k in 0..4 {
                    let (prev, cur) = (f[(k + 3) % 4], f[k]);
                    if inside(prev) || !inside(cur) {
                        continue;
                    }
                    // Walk the inside run to its exit.
                    let mut m = k;
                    while inside(f[(m + 1) % 4]) {
                        m = (m + 1) % 4;
                    }
                    next.insert(edge_id(prev, cur), edge_id(f[m], f[(m + 1) % 4]));
                }
            }
            let mut tris = Vec::new();
            let mut starts: Vec<u8> = next.keys().copied().collect();
            starts.sort_unstable();
            let mut used = [false; 12];
            for s in starts {
                if used[s as usize] {
                    continue;
                }
                let mut lp = vec![s];
                used[s as usize] = true;
                let mut e = next[&s];
                while e != s {
                    used[e as usize] = true;
                    lp.push(e);
                    e = next[&e];
                }
                for i in 1..lp.len() - 1 {
                    tris.push([lp[0], lp[i], lp[i + 1]]);
                }
            }
            tris
        })
        .collect()
}

fn table() -> &'static CaseTable {
    static TABLE: OnceLock<CaseTable> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

/// Triangulated `iso` level set of the mask in world coordinates, facing
/// away from the foreground (values above `iso`).
pub fn mask_to_surface(mask: &VoxelMask, iso: f64) -> Result<TriangleSurface> {
    mask.validate()?;
    let has_fg = mask.values.iter().any(|&v| v as f64 > iso);
    let has_bg = mask.values.iter().any(|&v| v as f64 <= iso);
    if !(has_fg && has_bg) {
        return Err(Error::NoIsosurface(iso));
    }
    let [nx, ny, nz] = mask.dims;
    let edge_list = edges();
    let table = table();
    let mut vertex_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut surf = TriangleSurface::default();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let corner = |c: usize| (i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                let mut case = 0;
                for c in 0..8 {
                    let (a, b, d) = corner(c);
                    if mask.get(a, b, d) as f64 > iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                for tri in &table[case] {
                    let ids = tri.map(|e| {
                        let (c, axis) = edge_list[e as usize];
                        let (a, b, d) = corner(c);
                        let key = (mask.index(a, b, d), axis);
                        *vertex_of.entry(key).or_insert_with(|| {
                            let (a2, b2, d2) = corner(c | (1 << axis));
                            let (v0, v1) = (mask.get(a, b, d) as f64, mask.get(a2, b2, d2) as f64);
                            let t = (iso - v0) / (v1 - v0);
                            let p0 = mask.position(a, b, d);
                            let p1 = mask.position(a2, b2, d2);
                            surf.vertices.push(p0 + (p1 - p0) * t);
                            surf.vertices.len() - 1
                        })
                    });
                    surf.triangles.push(ids);
                }
            }
        }
    }
    Ok(surf)
}

/// Directed-edge check: every edge is used once in each direction.
pub fn is_watertight(s: &TriangleSurface) -> bool {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &s.triangles {
        for k in 0..3 {
            *directed.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}
