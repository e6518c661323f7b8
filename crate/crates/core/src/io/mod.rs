//! Text exports: legacy-VTK ASCII, CSV, node/element listings and Matrix
//! Market. Numbers are written with the shortest round-trip representation,
//! so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, FemField, SpaceKind};
use crate::mesh::{Mesh2D, Point};
use crate::microlocal::Bicharacteristic;

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(context: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.display().to_string(),
        message: message.into(),
    }
}

/// Nodal and per-triangle data attached to a VTK unstructured grid.
#[derive(Debug, Default, Clone)]
pub struct VtkData<'a> {
    /// Lagrange1 fields written as POINT_DATA scalars.
    pub point_scalars: Vec<(&'a str, &'a FemField)>,
    /// Per-triangle scalars written as CELL_DATA.
    pub cell_scalars: Vec<(&'a str, Vec<f64>)>,
    /// Per-triangle vectors written as CELL_DATA (z component 0).
    pub cell_vectors: Vec<(&'a str, Vec<[f64; 2]>)>,
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::invalid(format!("VTK array name '{name}' must be non-empty without spaces")));
    }
    Ok(())
}

/// Legacy-VTK ASCII unstructured grid (triangles are cell type 5).
pub fn vtk_string(mesh: &Mesh2D, data: &VtkData) -> Result<String> {
    let mut s = String::new();
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "# vtk DataFile Version 2.0\nhybridtomo\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    if !data.point_scalars.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, f) in &data.point_scalars {
            check_name(name)?;
            if f.mesh_id() != mesh.id() || f.space().kind() != SpaceKind::Lagrange1 {
                return Err(Error::invalid(format!("point data '{name}' must be a Lagrange1 field on this mesh")));
            }
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in f.values() {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    if !data.cell_scalars.is_empty() || !data.cell_vectors.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for (name, vals) in &data.cell_scalars {
            check_name(name)?;
            if vals.len() != nt {
                return Err(Error::invalid(format!("cell data '{name}' has {} entries for {nt} cells", vals.len())));
            }
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals {
                let _ = writeln!(s, "{v}");
            }
        }
        for (name, vals) in &data.cell_vectors {
            check_name(name)?;
            if vals.len() != nt {
                return Err(Error::invalid(format!("cell data '{name}' has {} entries for {nt} cells", vals.len())));
            }
            let _ = writeln!(s, "VECTORS {name} double");
            for v in vals {
                let _ = writeln!(s, "{} {} 0", v[0], v[1]);
            }
        }
    }
    Ok(s)
}

pub fn write_vtk(path: &Path, mesh: &Mesh2D, data: &VtkData) -> Result<()> {
    write_text(path, &vtk_string(mesh, data)?)
}

/// Reads the POINTS and CELLS sections of a legacy-VTK triangle grid.
pub fn read_mesh_vtk(path: &Path) -> Result<Mesh2D> {
    let text = read_text(path)?;
    let mut tokens = text.split_whitespace();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let num = |tok: Option<&str>, what: &str| -> Result<f64> {
        tok.and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| parse_err(path, format!("expected a number for {what}")))
    };
    while let Some(tok) = tokens.next() {
        match tok {
            "POINTS" => {
                let n = num(tokens.next(), "point count")? as usize;
                tokens.next();
                for _ in 0..n {
                    let x = num(tokens.next(), "x")?;
                    let y = num(tokens.next(), "y")?;
                    num(tokens.next(), "z")?;
                    vertices.push([x, y]);
                }
            }
            "CELLS" => {
                let n = num(tokens.next(), "cell count")? as usize;
                tokens.next();
                for _ in 0..n {
                    let k = num(tokens.next(), "cell size")? as usize;
                    if k != 3 {
                        return Err(parse_err(path, format!("only triangles are supported (cell of size {k})")));
                    }
                    let mut tri = [0usize; 3];
                    for v in &mut tri {
                        *v = num(tokens.next(), "vertex index")? as usize;
                    }
                    triangles.push(tri);
                }
            }
            "CELL_TYPES" => {
                let n = num(tokens.next(), "cell type count")? as usize;
                for _ in 0..n {
                    if num(tokens.next(), "cell type")? as usize != 5 {
                        return Err(parse_err(path, "only VTK_TRIANGLE cells are supported"));
                    }
                }
            }
            "POINT_DATA" | "CELL_DATA" => break,
            _ => {}
        }
    }
    Mesh2D::from_parts(vertices, triangles)
}

/// Mesh and one POINT_DATA scalar array of a legacy-VTK file written by
/// [`write_vtk`].
pub fn read_vtk_point_scalars(path: &Path, name: &str) -> Result<(Mesh2D, Vec<f64>)> {
    let mesh = read_mesh_vtk(path)?;
    let text = read_text(path)?;
    let header = format!("SCALARS {name} double 1");
    let start = text
        .find(&format!("POINT_DATA {}", mesh.num_vertices()))
        .and_then(|p| text[p..].find(&header).map(|q| p + q))
        .ok_or_else(|| parse_err(path, format!("no point data array '{name}'")))?;
    let values: Vec<f64> = text[start..]
        .lines()
        .skip(2)
        .take(mesh.num_vertices())
        .map(|l| l.trim().parse::<f64>().map_err(|_| parse_err(path, format!("bad value '{l}' in '{name}'"))))
        .collect::<Result<_>>()?;
    if values.len() != mesh.num_vertices() {
        return Err(parse_err(path, format!("array '{name}' is truncated")));
    }
    Ok((mesh, values))
}

/// Plain-text listing: `nodes N`, then `x y` per line, then `triangles M`,
/// then `a b c` per line.
pub fn mesh_text(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn write_mesh_text(path: &Path, mesh: &Mesh2D) -> Result<()> {
    write_text(path, &mesh_text(mesh))
}

pub fn read_mesh_text(path: &Path) -> Result<Mesh2D> {
    let text = read_text(path)?;
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    let mut cursor = 0;
    let mut next = || -> Result<&str> {
        let line = lines.get(cursor).copied().ok_or_else(|| parse_err(path, "unexpected end of file"))?;
        cursor += 1;
        Ok(line)
    };
    let header = |line: &str, key: &str| -> Result<usize> {
        match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            [k, n] if *k == key => n.parse().map_err(|_| parse_err(path, format!("bad count in '{line}'"))),
            _ => Err(parse_err(path, format!("expected '{key} <count>', found '{line}'"))),
        }
    };
    let numbers = |line: &str, width: usize| -> Result<Vec<f64>> {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(path, format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(parse_err(path, format!("expected {width} values in '{line}'")));
        }
        Ok(vals)
    };
    let nv = header(next()?, "nodes")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let r = numbers(next()?, 2)?;
        vertices.push([r[0], r[1]]);
    }
    let nt = header(next()?, "triangles")?;
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = next()?;
        let r = numbers(line, 3)?;
        if r.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(parse_err(path, format!("bad vertex index in '{line}'")));
        }
        tris.push([r[0] as usize, r[1] as usize, r[2] as usize]);
    }
    Mesh2D::from_parts(vertices, tris)
}

/// CSV with columns `x,y,<name>...`, one row per mesh vertex.
pub fn fields_csv(mesh: &Mesh2D, fields: &[(&str, &FemField)]) -> Result<String> {
    for (name, f) in fields {
        if f.mesh_id() != mesh.id() || f.space().kind() != SpaceKind::Lagrange1 {
            return Err(Error::invalid(format!("CSV column '{name}' must be a Lagrange1 field on this mesh")));
        }
    }
    let mut s = String::from("x,y");
    for (name, _) in fields {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for (v, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "{},{}", p[0], p[1]);
        for (_, f) in fields {
            let _ = write!(s, ",{}", f.values()[v]);
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn write_fields_csv(path: &Path, mesh: &Mesh2D, fields: &[(&str, &FemField)]) -> Result<()> {
    write_text(path, &fields_csv(mesh, fields)?)
}

pub fn write_matrix_market(path: &Path, matrix: &CsrMatrix) -> Result<()> {
    write_text(path, &matrix.to_matrix_market())
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    CsrMatrix::from_matrix_market(&read_text(path)?)
}

/// CSV with columns `trace,t,x,y,xi1,xi2`.
pub fn traces_csv(traces: &[Bicharacteristic]) -> String {
    let mut s = String::from("trace,t,x,y,xi1,xi2\n");
    for (k, tr) in traces.iter().enumerate() {
        for (t, (x, xi)) in tr.t_values.iter().zip(&tr.points) {
            let _ = writeln!(s, "{k},{t},{},{},{},{}", x[0], x[1], xi[0], xi[1]);
        }
    }
    s
}

/// Legacy-VTK POLYDATA with one polyline per trace.
pub fn traces_vtk(traces: &[Bicharacteristic]) -> String {
    let total: usize = traces.iter().map(|t| t.points.len()).sum();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 2.0\nhybridtomo bicharacteristics\nASCII\nDATASET POLYDATA");
    let _ = writeln!(s, "POINTS {total} double");
    for tr in traces {
        for (x, _) in &tr.points {
            let _ = writeln!(s, "{} {} 0", x[0], x[1]);
        }
    }
    let _ = writeln!(s, "LINES {} {}", traces.len(), total + traces.len());
    let mut start = 0;
    for tr in traces {
        let n = tr.points.len();
        let _ = write!(s, "{n}");
        for i in start..start + n {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
        start += n;
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS measurement int 1\nLOOKUP_TABLE default", traces.len());
    for tr in traces {
        let _ = writeln!(s, "{}", tr.measurement);
    }
    s
}
