//! Gmsh ASCII v2 import (`$Nodes` and `$Elements`).
//!
//! Tetrahedra (type 4) become elements. Points, lines and triangles
//! (types 15, 1, 2) are boundary annotations and are skipped; any other
//! element type is rejected.

use std::collections::HashMap;

use super::Mesh;
use crate::error::{QfvmError, Result};
use crate::geometry::Vec3;

const TET: usize = 4;
const SKIPPED: [usize; 3] = [1, 2, 15];

pub(super) fn parse_gmsh(text: &str, label: &str) -> Result<Mesh> {
    let err = |line: usize, msg: String| QfvmError::Parse { path: label.to_string(), line, msg };
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    let end = text.lines().count().max(1);

    let section = |name: &str| -> Result<(usize, usize)> {
        let start = lines
            .iter()
            .position(|(_, l)| *l == format!("${name}"))
            .ok_or_else(|| err(end, format!("missing ${name} section")))?;
        let stop = lines[start..]
            .iter()
            .position(|(_, l)| *l == format!("$End{name}"))
            .map(|p| start + p)
            .ok_or_else(|| err(lines[start].0, format!("unterminated ${name} section")))?;
        Ok((start + 1, stop))
    };

    let (fs, fe) = section("MeshFormat")?;
    if fe != fs + 1 {
        return Err(err(lines[fs.min(lines.len() - 1)].0, "malformed $MeshFormat".into()));
    }
    let (ln, fmt) = lines[fs];
    let parts: Vec<&str> = fmt.split_whitespace().collect();
    if parts.len() != 3 || !parts[0].starts_with('2') {
        return Err(err(ln, format!("unsupported mesh format '{fmt}' (only ASCII v2 is read)")));
    }
    if parts[1] != "0" {
        return Err(err(ln, "binary Gmsh files are not supported".into()));
    }

    let (ns, ne) = section("Nodes")?;
    let declared = count_line(&lines, ns, ne, &err)?;
    let mut ids = HashMap::with_capacity(declared);
    let mut vertices = Vec::with_capacity(declared);
    for &(ln, l) in &lines[ns + 1..ne] {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(err(ln, format!("node line needs 4 fields, found {}", f.len())));
        }
        let id: usize = f[0].parse().map_err(|_| err(ln, format!("bad node id '{}'", f[0])))?;
        let mut c = [0.0; 3];
        for k in 0..3 {
            c[k] = f[k + 1].parse().map_err(|_| err(ln, format!("bad coordinate '{}'", f[k + 1])))?;
        }
        if ids.insert(id, vertices.len()).is_some() {
            return Err(err(ln, format!("duplicate node id {id}")));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    if vertices.len() != declared {
        return Err(err(lines[ns].0, format!("declared {declared} nodes, found {}", vertices.len())));
    }

    let (es, ee) = section("Elements")?;
    let declared = count_line(&lines, es, ee, &err)?;
    let mut tets = Vec::new();
    for &(ln, l) in &lines[es + 1..ee] {
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| err(ln, format!("bad integer '{x}'"))))
            .collect::<Result<_>>()?;
        if f.len() < 3 || f.len() < 3 + f[2] {
            return Err(err(ln, "truncated element line".into()));
        }
        let (ty, ntags) = (f[1], f[2]);
        let nodes = &f[3 + ntags..];
        if ty == TET {
            if nodes.len() != 4 {
                return Err(err(ln, format!("tetrahedron needs 4 nodes, found {}", nodes.len())));
            }
            let mut t = [0; 4];
            for (slot, id) in t.iter_mut().zip(nodes) {
                *slot = *ids.get(id).ok_or_else(|| err(ln, format!("unknown node id {id}")))?;
            }
            tets.push(t);
        } else if !SKIPPED.contains(&ty) {
            return Err(err(ln, format!("element type {ty} is not supported (tetrahedra only)")));
        }
    }
    if ee - es - 1 != declared {
        return Err(err(lines[es].0, format!("declared {declared} elements, found {}", ee - es - 1)));
    }
    if tets.is_empty() {
        return Err(err(lines[es].0, "no tetrahedra in file".into()));
    }
    Mesh::new(vertices, tets)
}

fn count_line(
    lines: &[(usize, &str)],
    start: usize,
    stop: usize,
    err: &impl Fn(usize, String) -> QfvmError,
) -> Result<usize> {
    if start >= stop {
        return Err(err(lines[start.min(lines.len() - 1)].0, "missing count line".into()));
    }
    let (ln, l) = lines[start];
    l.parse().map_err(|_| err(ln, format!("bad count '{l}'")))
}
