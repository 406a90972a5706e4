//! Triangle surfaces: STL (binary and ASCII) and Wavefront OBJ.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::{TriangleSurface, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceFormat {
    StlBinary,
    StlAscii,
    Obj,
}

impl SurfaceFormat {
    /// From the extension; `.stl` is written binary.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("stl") => Ok(SurfaceFormat::StlBinary),
            Some("obj") => Ok(SurfaceFormat::Obj),
            _ => Err(Error::invalid(format!(
                "unknown surface format for {} (expected .stl or .obj)",
                path.display()
            ))),
        }
    }
}

/// Collapses bitwise-identical positions to one vertex.
struct Welder {
    index: HashMap<[u64; 3], usize>,
    vertices: Vec<Vec3>,
}

impl Welder {
    fn new() -> Self {
        Welder {
            index: HashMap::new(),
            vertices: Vec::new(),
        }
    }

    fn add(&mut self, p: Vec3) -> usize {
        // +0.0 and -0.0 are the same point.
        let key = [p.x, p.y, p.z].map(|c| if c == 0.0 { 0 } else { c.to_bits() });
        let n = self.vertices.len();
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            n
        })
    }
}

pub fn read_surface(path: &Path) -> Result<TriangleSurface> {
    let bytes = read_file(path)?;
    let s = match SurfaceFormat::from_path(path)? {
        SurfaceFormat::Obj => parse_obj(path, text(path, &bytes)?)?,
        _ if is_binary_stl(&bytes) => parse_stl_binary(path, &bytes)?,
        _ => parse_stl_ascii(path, text(path, &bytes)?)?,
    };
    s.validate()?;
    Ok(s)
}

pub fn write_surface(surface: &TriangleSurface, path: &Path) -> Result<()> {
    write_surface_as(surface, path, SurfaceFormat::from_path(path)?)
}

pub fn write_surface_as(surface: &TriangleSurface, path: &Path, format: SurfaceFormat) -> Result<()> {
    surface.validate()?;
    let bytes = match format {
        SurfaceFormat::StlBinary => stl_binary(surface),
        SurfaceFormat::StlAscii => stl_ascii(surface).into_bytes(),
        SurfaceFormat::Obj => obj(surface).into_bytes(),
    };
    write_atomic(path, &bytes)
}

fn text<'a>(path: &Path, bytes: &'a [u8]) -> Result<&'a str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(path.display().to_string(), line, "invalid UTF-8")
    })
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let sized = bytes.len() == 84 + 50 * n;
    sized || !bytes.trim_ascii_start().starts_with(b"solid")
}

fn facet_normal(s: &TriangleSurface, t: [usize; 3]) -> Vec3 {
    let [a, b, c] = t.map(|i| s.vertices[i]);
    (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
}

fn stl_binary(s: &TriangleSurface) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * s.triangles.len());
    let mut header = [b' '; 80];
    header[..8].copy_from_slice(b"aortamsh");
    out.extend_from_slice(&header);
    out.extend_from_slice(&(s.triangles.len() as u32).to_le_bytes());
    for &t in &s.triangles {
        let n = facet_normal(s, t);
        for p in std::iter::once(n).chain(t.iter().map(|&i| s.vertices[i])) {
            for c in [p.x, p.y, p.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

fn parse_stl_binary(path: &Path, bytes: &[u8]) -> Result<TriangleSurface> {
    let name = path.display().to_string();
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() < 84 + 50 * n {
        return Err(Error::parse(
            name,
            0,
            format!(
                "binary STL declares {n} triangles but has {} bytes (byte offset {})",
                bytes.len(),
                bytes.len()
            ),
        ));
    }
    let mut w = Welder::new();
    let mut triangles = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + 50 * t + 12;
        let mut tri = [0; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let c: [f64; 3] = std::array::from_fn(|d| {
                let o = base + 12 * k + 4 * d;
                f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64
            });
            let p = Vec3::from(c);
            if !crate::geometry::is_finite(&p) {
                return Err(Error::parse(
                    name,
                    0,
                    format!("non-finite vertex at byte offset {}", base + 12 * k),
                ));
            }
            *slot = w.add(p);
        }
        triangles.push(tri);
    }
    Ok(TriangleSurface {
        vertices: w.vertices,
        triangles,
    })
}

fn stl_ascii(s: &TriangleSurface) -> String {
    let mut o = String::from("solid aortamesh\n");
    for &t in &s.triangles {
        let n = facet_normal(s, t);
        let _ = writeln!(o, "  facet normal {:e} {:e} {:e}\n    outer loop", n.x, n.y, n.z);
        for i in t {
            let p = s.vertices[i];
            let _ = writeln!(o, "      vertex {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
        }
        o.push_str("    endloop\n  endfacet\n");
    }
    o.push_str("endsolid aortamesh\n");
    o
}

fn parse_coords(name: &str, line: usize, words: &[&str]) -> Result<Vec3> {
    if words.len() < 3 {
        return Err(Error::parse(name, line, "expected three coordinates"));
    }
    let mut c = [0.0; 3];
    for (d, w) in words[..3].iter().enumerate() {
        c[d] = w
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(name, line, format!("bad coordinate {w:?}")))?;
    }
    Ok(Vec3::from(c))
}

fn parse_stl_ascii(path: &Path, src: &str) -> Result<TriangleSurface> {
    let name = path.display().to_string();
    let mut w = Welder::new();
    let mut triangles = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut in_loop = false;
    for (i, line) in src.lines().enumerate() {
        let ln = i + 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first().copied() {
            None | Some("solid") | Some("endsolid") | Some("facet") | Some("endfacet") => {}
            Some("outer") => {
                in_loop = true;
                current.clear();
            }
            Some("vertex") => {
                if !in_loop {
                    return Err(Error::parse(&name, ln, "vertex outside outer loop"));
                }
                current.push(w.add(parse_coords(&name, ln, &words[1..])?));
            }
            Some("endloop") => {
                if current.len() != 3 {
                    return Err(Error::parse(&name, ln, format!("facet has {} vertices", current.len())));
                }
                triangles.push([current[0], current[1], current[2]]);
                in_loop = false;
            }
            Some(other) => return Err(Error::parse(&name, ln, format!("unexpected keyword {other:?}"))),
        }
    }
    if in_loop {
        return Err(Error::parse(&name, src.lines().count(), "unterminated facet"));
    }
    Ok(TriangleSurface {
        vertices: w.vertices,
        triangles,
    })
}

fn obj(s: &TriangleSurface) -> String {
    let mut o = String::new();
    for p in &s.vertices {
        let _ = writeln!(o, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for t in &s.triangles {
        let _ = writeln!(o, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    o
}

fn parse_obj(path: &Path, src: &str) -> Result<TriangleSurface> {
    let name = path.display().to_string();
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("");
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first().copied() {
            Some("v") => vertices.push(parse_coords(&name, ln, &words[1..])?),
            Some("f") => {
                let idx = words[1..]
                    .iter()
                    .map(|w| {
                        w.split('/')
                            .next()
                            .and_then(|s| s.parse::<i64>().ok())
                            .ok_or_else(|| Error::parse(&name, ln, format!("bad face index {w:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(&name, ln, "face needs at least 3 vertices"));
                }
                faces.push((ln, idx));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut triangles = Vec::new();
    for (ln, idx) in faces {
        let resolved = idx
            .iter()
            .map(|&k| {
                let j = if k < 0 { n + k } else { k - 1 };
                if (0..n).contains(&j) {
                    Ok(j as usize)
                } else {
                    Err(Error::parse(
                        &name,
                        ln,
                        format!("face index {k} out of range (1..={n})"),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for k in 1..resolved.len() - 1 {
            triangles.push([resolved[0], resolved[k], resolved[k + 1]]);
        }
    }
    Ok(TriangleSurface { vertices, triangles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tetra() -> TriangleSurface {
        TriangleSurface {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            triangles: vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        }
    }

    /// STL has no vertex indices, so compare corner positions per triangle.
    fn soup(s: &TriangleSurface) -> Vec<[Vec3; 3]> {
        s.triangles.iter().map(|t| t.map(|i| s.vertices[i])).collect()
    }

    #[test]
    fn stl_round_trips_weld_vertices() {
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("a.stl", SurfaceFormat::StlBinary), ("b.stl", SurfaceFormat::StlAscii)] {
            let p = dir.path().join(name);
            write_surface_as(&tetra(), &p, fmt).unwrap();
            let s = read_surface(&p).unwrap();
            assert_eq!(s.vertices.len(), 4, "{name}");
            assert_eq!(soup(&s), soup(&tetra()), "{name}");
        }
    }

    #[test]
    fn obj_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.obj");
        let mut s = tetra();
        s.vertices[3] = Vec3::new(0.1, 1.0 / 3.0, std::f64::consts::PI);
        write_surface(&s, &p).unwrap();
        assert_eq!(read_surface(&p).unwrap(), s);
    }

    #[test]
    fn obj_quads_and_negative_indices() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.obj");
        std::fs::write(
            &p,
            "# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\nf -4 -2 -1\n",
        )
        .unwrap();
        let s = read_surface(&p).unwrap();
        assert_eq!(s.triangles, vec![[0, 1, 2], [0, 2, 3], [0, 2, 3]]);
    }

    #[test]
    fn malformed_files_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.obj");
        std::fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n").unwrap();
        assert!(matches!(read_surface(&p), Err(Error::Parse { line: 4, .. })));
        let p = dir.path().join("bad.stl");
        std::fs::write(&p, "solid x\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 nope\n").unwrap();
        assert!(matches!(read_surface(&p), Err(Error::Parse { line: 4, .. })));
        let p = dir.path().join("short.stl");
        let mut b = stl_binary(&tetra());
        b.truncate(120);
        std::fs::write(&p, b).unwrap();
        assert!(matches!(read_surface(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_extension() {
        assert!(SurfaceFormat::from_path(Path::new("x.ply")).is_err());
    }

    proptest! {
        #[test]
        fn ascii_formats_are_bitwise_stable(coords in prop::collection::vec(-1e3f64..1e3, 12)) {
            let mut s = tetra();
            for (k, p) in s.vertices.iter_mut().enumerate() {
                *p += Vec3::new(coords[3 * k], coords[3 * k + 1], coords[3 * k + 2]) * 1e-3;
            }
            let dir = tempfile::tempdir().unwrap();
            for name in ["t.obj", "t.stl"] {
                let p = dir.path().join(name);
                let fmt = if name.ends_with("obj") { SurfaceFormat::Obj } else { SurfaceFormat::StlAscii };
                write_surface_as(&s, &p, fmt).unwrap();
                prop_assert_eq!(soup(&read_surface(&p).unwrap()), soup(&s));
            }
        }
    }
}
