//! Native text format:
//!
//! ```text
//! qfvm-mesh 1
//! <#vertices> <#tets>
//! x y z            (one line per vertex)
//! i1 i2 i3 i4      (one line per tet, 1-based)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Files beginning with
//! `$MeshFormat` are read as Gmsh ASCII v2.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{gmsh, Mesh};
use crate::error::{QfvmError, Result};
use crate::geometry::Vec3;

pub const HEADER: &str = "qfvm-mesh 1";

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, &path.display().to_string())
}

/// Parses either format; `label` names the source in error messages.
pub fn parse_mesh(text: &str, label: &str) -> Result<Mesh> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    if first.is_some_and(|l| l.starts_with("$MeshFormat")) {
        return gmsh::parse_gmsh(text, label);
    }
    parse_native(text, label)
}

fn parse_native(text: &str, label: &str) -> Result<Mesh> {
    let err = |line: usize, msg: String| QfvmError::Parse { path: label.to_string(), line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let last_line = text.lines().count().max(1);
    let mut next = |what: &str| lines.next().ok_or_else(|| err(last_line, format!("unexpected end of file, expected {what}")));

    let (ln, header) = next("header")?;
    if header != HEADER {
        return Err(err(ln, format!("expected header '{HEADER}', found '{header}'")));
    }
    let (ln, counts) = next("counts")?;
    let counts = parse_fields::<usize>(counts, 2).map_err(|m| err(ln, format!("counts: {m}")))?;
    let (nv, nt) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex line")?;
        let c = parse_fields::<f64>(l, 3).map_err(|m| err(ln, format!("vertex: {m}")))?;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(err(ln, "vertex coordinate is not finite".into()));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("tet line")?;
        let idx = parse_fields::<usize>(l, 4).map_err(|m| err(ln, format!("tet: {m}")))?;
        let mut t = [0; 4];
        for (slot, &i) in t.iter_mut().zip(&idx) {
            if i == 0 || i > nv {
                return Err(err(ln, format!("vertex index {i} outside 1..={nv} (indices are 1-based)")));
            }
            *slot = i - 1;
        }
        tets.push(t);
    }
    if let Some((ln, l)) = lines.next() {
        return Err(err(ln, format!("trailing content '{l}'")));
    }
    Mesh::new(vertices, tets)
}

fn parse_fields<T: std::str::FromStr>(line: &str, n: usize) -> std::result::Result<Vec<T>, String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != n {
        return Err(format!("expected {n} fields, found {}", parts.len()));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|_| format!("cannot parse '{p}'"))).collect()
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "{} {}", mesh.num_vertices(), mesh.num_elements()).unwrap();
    for v in mesh.vertices() {
        // `{:?}` on f64 prints the shortest round-tripping representation.
        writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for t in mesh.tets() {
        writeln!(s, "{} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1).unwrap();
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_mesh(mesh))?;
    Ok(())
}
