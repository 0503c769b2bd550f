//! Legacy ASCII VTK output.
//!
//! Discontinuous fields are written with every element owning its own three
//! vertices, so `POINTS` has `3 · #elements` entries and each cell is a
//! `VTK_TRIANGLE` (type 5) referencing consecutive points. Point data are
//! the element-local traces of the field at its vertices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dg_space::DgFunction;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::Real;

fn type_name<T: Real>() -> &'static str {
    if std::mem::size_of::<T>() == 4 { "float" } else { "double" }
}

fn geometry<T: Real>(mesh: &Mesh<T>, title: &str) -> String {
    let ne = mesh.num_elements();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} {}", 3 * ne, type_name::<T>());
    for el in &mesh.elements {
        for &v in el {
            let x = mesh.vertices[v];
            let _ = writeln!(s, "{} {} 0", x[0], x[1]);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", ne, 4 * ne);
    for k in 0..ne {
        let _ = writeln!(s, "3 {} {} {}", 3 * k, 3 * k + 1, 3 * k + 2);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("5\n");
    }
    s
}

/// Mesh only, without data.
pub fn mesh_to_string<T: Real>(mesh: &Mesh<T>) -> String {
    geometry(mesh, "mesh")
}

/// Both fields sampled at the element vertices.
pub fn fields_to_string<T: Real>(u_h: &DgFunction<'_, T>, d_h: &DgFunction<'_, T>) -> Result<String> {
    let space = u_h.space();
    if space.total_dofs() != d_h.space().total_dofs() {
        return Err(Error::InvalidArgument("u_h and d_h live on different spaces".into()));
    }
    let mesh = space.mesh();
    let mut s = geometry(mesh, "u_h and d_h");
    let _ = writeln!(s, "POINT_DATA {}", 3 * mesh.num_elements());
    for (name, field) in [("u_h", u_h), ("d_h", d_h)] {
        let _ = writeln!(s, "SCALARS {name} {} 1\nLOOKUP_TABLE default", type_name::<T>());
        for (k, el) in mesh.elements.iter().enumerate() {
            for &v in el {
                let _ = writeln!(s, "{}", field.value_physical(k, mesh.vertices[v]));
            }
        }
    }
    Ok(s)
}

pub fn write_mesh<T: Real>(mesh: &Mesh<T>, path: &Path) -> Result<()> {
    Ok(fs::write(path, mesh_to_string(mesh))?)
}

pub fn emit_vtk<T: Real>(u_h: &DgFunction<'_, T>, d_h: &DgFunction<'_, T>, path: &Path) -> Result<()> {
    Ok(fs::write(path, fields_to_string(u_h, d_h)?)?)
}

/// What [`read`] recovers from a file written by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkSummary {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u32>,
    pub fields: Vec<(String, Vec<f64>)>,
}

/// Parses the subset of the legacy format written here.
pub fn parse(text: &str) -> Result<VtkSummary> {
    let bad = |msg: &str| Error::Parse(msg.to_string());
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(bad("missing vtk header"));
    }
    lines.next();
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err(bad("only ASCII files are supported"));
    }
    if lines.next().map(str::trim) != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(bad("expected an unstructured grid"));
    }
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = || tokens.next().ok_or_else(|| bad("unexpected end of file"));
    fn num<N: std::str::FromStr>(t: &str) -> Result<N> {
        t.parse().map_err(|_| Error::Parse(format!("bad number '{t}'")))
    }
    let mut out = VtkSummary { points: vec![], cells: vec![], cell_types: vec![], fields: vec![] };
    let mut npoint_data = 0;
    while let Ok(keyword) = next() {
        match keyword {
            "POINTS" => {
                let n: usize = num(next()?)?;
                next()?;
                for _ in 0..n {
                    out.points.push([num(next()?)?, num(next()?)?, num(next()?)?]);
                }
            }
            "CELLS" => {
                let n: usize = num(next()?)?;
                let size: usize = num(next()?)?;
                let mut read = 0;
                for _ in 0..n {
                    let m: usize = num(next()?)?;
                    let cell = (0..m).map(|_| next().and_then(num)).collect::<Result<Vec<usize>>>()?;
                    read += m + 1;
                    out.cells.push(cell);
                }
                if read != size {
                    return Err(bad("CELLS size does not match its entries"));
                }
            }
            "CELL_TYPES" => {
                let n: usize = num(next()?)?;
                for _ in 0..n {
                    out.cell_types.push(num(next()?)?);
                }
            }
            "POINT_DATA" => npoint_data = num(next()?)?,
            "SCALARS" => {
                let name = next()?.to_string();
                next()?;
                next()?;
                if next()? != "LOOKUP_TABLE" {
                    return Err(bad("expected LOOKUP_TABLE"));
                }
                next()?;
                let values = (0..npoint_data).map(|_| next().and_then(num)).collect::<Result<Vec<f64>>>()?;
                out.fields.push((name, values));
            }
            other => return Err(Error::Parse(format!("unexpected keyword '{other}'"))),
        }
    }
    if out.cells.len() != out.cell_types.len() || out.cells.iter().flatten().any(|&i| i >= out.points.len()) {
        return Err(bad("inconsistent cell data"));
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<VtkSummary> {
    parse(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg_space::DgSpace;

    #[test]
    fn mesh_round_trip() {
        let mesh = Mesh::<f64>::build_structured(3).unwrap();
        let s = parse(&mesh_to_string(&mesh)).unwrap();
        assert_eq!(s.points.len(), 54);
        assert_eq!(s.cells.len(), 18);
        assert!(s.cell_types.iter().all(|&t| t == 5));
        assert!(s.fields.is_empty());
        let area: f64 = s
            .cells
            .iter()
            .map(|c| {
                let [a, b, d] = [s.points[c[0]], s.points[c[1]], s.points[c[2]]];
                0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]))
            })
            .sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_fields_are_zero() {
        let space = DgSpace::new(Mesh::<f64>::build_structured(2).unwrap(), 2).unwrap();
        let z = space.zero_function();
        let s = parse(&fields_to_string(&z, &z).unwrap()).unwrap();
        assert_eq!(s.fields.len(), 2);
        assert_eq!(s.fields[0].0, "u_h");
        assert_eq!(s.fields[1].0, "d_h");
        for (_, v) in &s.fields {
            assert_eq!(v.len(), 24);
            assert!(v.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn file_round_trip_samples_field() {
        let space = DgSpace::new(Mesh::<f64>::build_structured(2).unwrap(), 2).unwrap();
        let v = space.l2_project(|x| 1.0 + x[0] * x[1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.vtk");
        emit_vtk(&v, &v, &path).unwrap();
        let s = read(&path).unwrap();
        for (pt, val) in s.points.iter().zip(&s.fields[0].1) {
            assert!((val - (1.0 + pt[0] * pt[1])).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse("hello").is_err());
        let mesh = Mesh::<f64>::build_structured(1).unwrap();
        let text = mesh_to_string(&mesh).replace("CELLS 2 8", "CELLS 2 9");
        assert!(parse(&text).is_err());
    }
}
