//! Legacy ASCII VTK for quad surfaces (POLYDATA) and hex meshes
//! (UNSTRUCTURED_GRID, cell type 12).
//!
//! Mesh metadata that VTK has no slot for (grid layout, holes, node and face
//! sets, wall thickness) goes into dataset FIELD arrays, so a file read back
//! gives the same mesh. Coordinates carry 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::solidify::{HexFace, HexMesh};
use crate::template::QuadMesh;

pub const VTK_QUAD: u8 = 9;
pub const VTK_HEXAHEDRON: u8 = 12;

const NODE_SET_PREFIX: &str = "node_set:";
const FACE_SET_PREFIX: &str = "face_set:";
const HOLE_PREFIX: &str = "hole_loop:";

/// Per-cell scalars and per-point vectors attached to a mesh file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkData {
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<Vec3>>,
}

enum Field {
    Int(usize, Vec<usize>),
    Float(usize, Vec<f64>),
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::invalid(format!(
            "VTK array name {name:?} must be non-empty without spaces"
        )));
    }
    Ok(())
}

fn header(o: &mut String, title: &str, dataset: &str) {
    let _ = write!(o, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET {dataset}\n");
}

fn write_fields(o: &mut String, fields: &[(String, Field)]) {
    if fields.is_empty() {
        return;
    }
    let _ = writeln!(o, "FIELD FieldData {}", fields.len());
    for (name, f) in fields {
        match f {
            Field::Int(nc, v) => {
                let _ = writeln!(o, "{name} {nc} {} int", v.len() / nc);
                for row in v.chunks(*nc) {
                    let _ = writeln!(o, "{}", row.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
                }
            }
            Field::Float(nc, v) => {
                let _ = writeln!(o, "{name} {nc} {} double", v.len() / nc);
                for row in v.chunks(*nc) {
                    let _ = writeln!(
                        o,
                        "{}",
                        row.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
                    );
                }
            }
        }
    }
}

fn write_points(o: &mut String, pts: &[Vec3]) {
    let _ = writeln!(o, "POINTS {} double", pts.len());
    for p in pts {
        let _ = writeln!(o, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
}

fn write_attributes(o: &mut String, data: &VtkData, n_cells: usize, n_points: usize) -> Result<()> {
    if !data.cell_scalars.is_empty() {
        let _ = writeln!(o, "CELL_DATA {n_cells}");
        for (name, v) in &data.cell_scalars {
            check_name(name)?;
            if v.len() != n_cells {
                return Err(Error::invalid(format!(
                    "cell array {name} has {} values for {n_cells} cells",
                    v.len()
                )));
            }
            let _ = writeln!(o, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v {
                let _ = writeln!(o, "{x:.16e}");
            }
        }
    }
    if !data.point_vectors.is_empty() {
        let _ = writeln!(o, "POINT_DATA {n_points}");
        for (name, v) in &data.point_vectors {
            check_name(name)?;
            if v.len() != n_points {
                return Err(Error::invalid(format!(
                    "point array {name} has {} values for {n_points} points",
                    v.len()
                )));
            }
            let _ = writeln!(o, "VECTORS {name} double");
            for p in v {
                let _ = writeln!(o, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
            }
        }
    }
    Ok(())
}

pub fn quad_vtk_string(mesh: &QuadMesh, data: &VtkData) -> Result<String> {
    mesh.validate()?;
    let mut o = String::new();
    header(&mut o, "aortamesh quad surface", "POLYDATA");
    let mut fields = Vec::new();
    if let Some((ns, nr)) = mesh.grid_dims {
        fields.push(("grid_dims".to_string(), Field::Int(2, vec![ns, nr])));
    }
    if !mesh.removed_quads.is_empty() {
        let removed = mesh.removed_quads.iter().flat_map(|&(s, r)| [s, r]).collect();
        fields.push(("removed_quads".to_string(), Field::Int(2, removed)));
    }
    for (k, lp) in mesh.hole_loops.iter().enumerate() {
        fields.push((format!("{HOLE_PREFIX}{k}"), Field::Int(1, lp.clone())));
    }
    write_fields(&mut o, &fields);
    write_points(&mut o, &mesh.vertices);
    let n = mesh.quads.len();
    let _ = writeln!(o, "POLYGONS {n} {}", 5 * n);
    for q in &mesh.quads {
        let _ = writeln!(o, "4 {} {} {} {}", q[0], q[1], q[2], q[3]);
    }
    write_attributes(&mut o, data, n, mesh.vertices.len())?;
    Ok(o)
}

pub fn hex_vtk_string(mesh: &HexMesh, data: &VtkData) -> Result<String> {
    let mut o = String::new();
    header(&mut o, "aortamesh hex wall", "UNSTRUCTURED_GRID");
    let mut fields = vec![
        ("layers".to_string(), Field::Int(1, vec![mesh.layers])),
        ("thickness".to_string(), Field::Float(1, vec![mesh.thickness])),
    ];
    for (name, set) in &mesh.node_sets {
        check_name(name)?;
        fields.push((format!("{NODE_SET_PREFIX}{name}"), Field::Int(1, set.clone())));
    }
    for (name, set) in &mesh.face_sets {
        check_name(name)?;
        let flat = set.iter().flat_map(|f| [f.hex, f.face]).collect();
        fields.push((format!("{FACE_SET_PREFIX}{name}"), Field::Int(2, flat)));
    }
    write_fields(&mut o, &fields);
    write_points(&mut o, &mesh.nodes);
    let n = mesh.hexes.len();
    let _ = writeln!(o, "CELLS {n} {}", 9 * n);
    for h in &mesh.hexes {
        let _ = writeln!(o, "8 {}", h.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    }
    let _ = writeln!(o, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(o, "{VTK_HEXAHEDRON}");
    }
    write_attributes(&mut o, data, n, mesh.nodes.len())?;
    Ok(o)
}

pub fn write_quad_vtk(mesh: &QuadMesh, data: &VtkData, path: &Path) -> Result<()> {
    write_atomic(path, quad_vtk_string(mesh, data)?.as_bytes())
}

pub fn write_hex_vtk(mesh: &HexMesh, data: &VtkData, path: &Path) -> Result<()> {
    write_atomic(path, hex_vtk_string(mesh, data)?.as_bytes())
}

/// Whitespace tokens with their 1-based line numbers.
struct Tokens<'a> {
    name: String,
    words: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(name: String, body: &'a str, first_line: usize) -> Self {
        let words = body
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |w| (first_line + i, w)))
            .collect();
        Tokens { name, words, pos: 0 }
    }

    fn line(&self) -> usize {
        self.words
            .get(self.pos)
            .or_else(|| self.words.last())
            .map_or(0, |w| w.0)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.name.clone(), self.line(), msg)
    }

    fn peek(&self) -> Option<&'a str> {
        self.words.get(self.pos).map(|w| w.1)
    }

    fn next(&mut self) -> Result<&'a str> {
        let w = self.peek().ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(w)
    }

    fn expect(&mut self, kw: &str) -> Result<()> {
        let w = self.next()?;
        if w.eq_ignore_ascii_case(kw) {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {kw}, found {w:?}")))
        }
    }

    fn usize(&mut self) -> Result<usize> {
        let w = self.next()?;
        w.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected a non-negative integer, found {w:?}"))
        })
    }

    fn f64(&mut self) -> Result<f64> {
        let w = self.next()?;
        w.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            self.pos -= 1;
            self.err(format!("expected a finite number, found {w:?}"))
        })
    }

    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
}

struct Parsed {
    dataset: String,
    fields: BTreeMap<String, Field>,
    points: Vec<Vec3>,
    cells: Vec<Vec<usize>>,
    cell_types: Option<Vec<usize>>,
    data: VtkData,
}

fn parse(path: &Path, src: &str) -> Result<Parsed> {
    let name = path.display().to_string();
    let mut lines = src.lines();
    let first = lines.next().unwrap_or("");
    if !first.starts_with("# vtk DataFile") {
        return Err(Error::parse(name, 1, "missing '# vtk DataFile' header"));
    }
    let _title = lines.next();
    let body_start = src.match_indices('\n').nth(1).map_or(src.len(), |(i, _)| i + 1);
    let mut t = Tokens::new(name, &src[body_start..], 3);
    t.expect("ASCII")?;
    t.expect("DATASET")?;
    let dataset = t.next()?.to_ascii_uppercase();
    let mut p = Parsed {
        dataset,
        fields: BTreeMap::new(),
        points: Vec::new(),
        cells: Vec::new(),
        cell_types: None,
        data: VtkData::default(),
    };
    let mut n_cell_data = None;
    let mut n_point_data = None;
    while let Some(kw) = t.peek() {
        t.pos += 1;
        match kw.to_ascii_uppercase().as_str() {
            "FIELD" => {
                t.next()?;
                let k = t.usize()?;
                for _ in 0..k {
                    let fname = t.next()?.to_string();
                    let nc = t.usize()?;
                    let nt = t.usize()?;
                    let ty = t.next()?.to_ascii_lowercase();
                    if nc == 0 {
                        return Err(t.err(format!("field {fname} has zero components")));
                    }
                    let f = match ty.as_str() {
                        "int" | "long" | "vtkidtype" => {
                            Field::Int(nc, (0..nc * nt).map(|_| t.usize()).collect::<Result<_>>()?)
                        }
                        "double" | "float" => Field::Float(nc, (0..nc * nt).map(|_| t.f64()).collect::<Result<_>>()?),
                        other => return Err(t.err(format!("unsupported field type {other:?}"))),
                    };
                    p.fields.insert(fname, f);
                }
            }
            "POINTS" => {
                let n = t.usize()?;
                t.next()?;
                p.points = (0..n).map(|_| t.vec3()).collect::<Result<_>>()?;
            }
            "POLYGONS" | "CELLS" => {
                let n = t.usize()?;
                let size = t.usize()?;
                let mut used = 0;
                for _ in 0..n {
                    let k = t.usize()?;
                    p.cells.push((0..k).map(|_| t.usize()).collect::<Result<_>>()?);
                    used += k + 1;
                }
                if used != size {
                    return Err(t.err(format!("cell list size {size} does not match its contents ({used})")));
                }
            }
            "CELL_TYPES" => {
                let n = t.usize()?;
                p.cell_types = Some((0..n).map(|_| t.usize()).collect::<Result<_>>()?);
            }
            "CELL_DATA" => n_cell_data = Some(t.usize()?),
            "POINT_DATA" => n_point_data = Some(t.usize()?),
            "SCALARS" => {
                let n = n_cell_data.ok_or_else(|| t.err("SCALARS outside CELL_DATA"))?;
                let sname = t.next()?.to_string();
                t.next()?;
                if t.peek() == Some("1") {
                    t.next()?;
                }
                t.expect("LOOKUP_TABLE")?;
                t.next()?;
                let v = (0..n).map(|_| t.f64()).collect::<Result<_>>()?;
                p.data.cell_scalars.insert(sname, v);
            }
            "VECTORS" => {
                let n = n_point_data.ok_or_else(|| t.err("VECTORS outside POINT_DATA"))?;
                let vname = t.next()?.to_string();
                t.next()?;
                let v = (0..n).map(|_| t.vec3()).collect::<Result<_>>()?;
                p.data.point_vectors.insert(vname, v);
            }
            other => {
                t.pos -= 1;
                return Err(t.err(format!("unsupported keyword {other:?}")));
            }
        }
    }
    let np = p.points.len();
    if let Some((c, _)) = p.cells.iter().enumerate().find(|(_, c)| c.iter().any(|&v| v >= np)) {
        return Err(Error::parse(
            t.name,
            0,
            format!("cell {c} references a point out of range"),
        ));
    }
    Ok(p)
}

fn take_int(fields: &mut BTreeMap<String, Field>, name: &str, nc: usize, path: &Path) -> Result<Vec<usize>> {
    match fields.remove(name) {
        None => Ok(Vec::new()),
        Some(Field::Int(c, v)) if c == nc => Ok(v),
        Some(_) => Err(Error::parse(
            path.display().to_string(),
            0,
            format!("field {name} must be int with {nc} components"),
        )),
    }
}

pub fn read_quad_vtk(path: &Path) -> Result<(QuadMesh, VtkData)> {
    let bytes = read_file(path)?;
    let src = std::str::from_utf8(&bytes).map_err(|_| Error::parse(path.display().to_string(), 0, "invalid UTF-8"))?;
    let mut p = parse(path, src)?;
    let bad = |msg: String| Error::parse(path.display().to_string(), 0, msg);
    if p.dataset != "POLYDATA" {
        return Err(bad(format!("expected POLYDATA, found {}", p.dataset)));
    }
    let quads = p
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            <[usize; 4]>::try_from(c.as_slice())
                .map_err(|_| bad(format!("polygon {i} has {} points, expected 4", c.len())))
        })
        .collect::<Result<Vec<_>>>()?;
    let gd = take_int(&mut p.fields, "grid_dims", 2, path)?;
    let grid_dims = match gd.as_slice() {
        [] => None,
        [s, r] => Some((*s, *r)),
        _ => return Err(bad("grid_dims must hold one tuple".into())),
    };
    let removed_quads = take_int(&mut p.fields, "removed_quads", 2, path)?
        .chunks(2)
        .map(|c| (c[0], c[1]))
        .collect();
    let mut holes: Vec<(usize, Vec<usize>)> = Vec::new();
    let keys: Vec<String> = p
        .fields
        .keys()
        .filter(|k| k.starts_with(HOLE_PREFIX))
        .cloned()
        .collect();
    for k in keys {
        let idx: usize = k[HOLE_PREFIX.len()..]
            .parse()
            .map_err(|_| bad(format!("bad hole field {k}")))?;
        holes.push((idx, take_int(&mut p.fields, &k, 1, path)?));
    }
    holes.sort();
    let mesh = QuadMesh {
        vertices: p.points,
        quads,
        grid_dims,
        hole_loops: holes.into_iter().map(|h| h.1).collect(),
        removed_quads,
    };
    mesh.validate()?;
    Ok((mesh, p.data))
}

pub fn read_hex_vtk(path: &Path) -> Result<(HexMesh, VtkData)> {
    let bytes = read_file(path)?;
    let src = std::str::from_utf8(&bytes).map_err(|_| Error::parse(path.display().to_string(), 0, "invalid UTF-8"))?;
    let mut p = parse(path, src)?;
    let bad = |msg: String| Error::parse(path.display().to_string(), 0, msg);
    if p.dataset != "UNSTRUCTURED_GRID" {
        return Err(bad(format!("expected UNSTRUCTURED_GRID, found {}", p.dataset)));
    }
    let types = p.cell_types.take().ok_or_else(|| bad("missing CELL_TYPES".into()))?;
    if types.len() != p.cells.len() || types.iter().any(|&c| c != VTK_HEXAHEDRON as usize) {
        return Err(bad(format!(
            "all {} cells must have type {VTK_HEXAHEDRON}",
            p.cells.len()
        )));
    }
    let hexes = p
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            <[usize; 8]>::try_from(c.as_slice())
                .map_err(|_| bad(format!("cell {i} has {} points, expected 8", c.len())))
        })
        .collect::<Result<Vec<_>>>()?;
    let layers = match take_int(&mut p.fields, "layers", 1, path)?.as_slice() {
        [l] => *l,
        _ => return Err(bad("missing layers field".into())),
    };
    let thickness = match p.fields.remove("thickness") {
        Some(Field::Float(1, v)) if v.len() == 1 => v[0],
        _ => return Err(bad("missing thickness field".into())),
    };
    let mut node_sets = BTreeMap::new();
    let mut face_sets = BTreeMap::new();
    let keys: Vec<String> = p.fields.keys().cloned().collect();
    for k in keys {
        if let Some(n) = k.strip_prefix(NODE_SET_PREFIX) {
            node_sets.insert(n.to_string(), take_int(&mut p.fields, &k, 1, path)?);
        } else if let Some(n) = k.strip_prefix(FACE_SET_PREFIX) {
            let flat = take_int(&mut p.fields, &k, 2, path)?;
            let faces = flat.chunks(2).map(|c| HexFace { hex: c[0], face: c[1] }).collect();
            face_sets.insert(n.to_string(), faces);
        }
    }
    let mesh = HexMesh {
        nodes: p.points,
        hexes,
        node_sets,
        face_sets,
        layers,
        thickness,
    };
    mesh.validate()?;
    Ok((mesh, p.data))
}
