//! Tetrahedral meshes with quadratic node numbering.
//!
//! Global node `n < num_vertices()` is a vertex; node `num_vertices() + e` is
//! the midpoint of edge `e`. Edges are kept sorted, so numbering depends only
//! on the input connectivity.

mod generate;
mod gmsh;
mod io;
mod quality;

pub use generate::{generate_structured, perturb};
pub use io::{parse_mesh, read_mesh, write_mesh};
pub use quality::{audit, QualityReport};

use crate::error::{QfvmError, Result};
use crate::geometry::{Tet, TetGeometry, Vec3, MIDPOINT_NODES};

/// Local faces with outward orientation for a positively oriented tet;
/// `OUTWARD_FACES[i]` is the face opposite vertex `i`.
pub const OUTWARD_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    elem_nodes: Vec<[usize; 10]>,
    boundary: Vec<bool>,
    h: f64,
}

impl Mesh {
    /// Builds a mesh, swapping two local vertices of any negatively oriented tet.
    pub fn new(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Mesh> {
        check_indices(&vertices, &tets)?;
        let mut oriented = tets;
        for (e, t) in oriented.iter_mut().enumerate() {
            let tet = element_tet(&vertices, t, e)?;
            if tet.signed_volume() < 0.0 {
                t.swap(2, 3);
            }
        }
        Mesh::build(vertices, oriented)
    }

    /// Builds a mesh whose tets must already be positively oriented.
    pub fn from_oriented(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Mesh> {
        check_indices(&vertices, &tets)?;
        for (e, t) in tets.iter().enumerate() {
            let volume = element_tet(&vertices, t, e)?.signed_volume();
            if volume <= 0.0 {
                return Err(QfvmError::InvertedElement { element: e, volume });
            }
        }
        Mesh::build(vertices, tets)
    }

    fn build(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Mesh> {
        let mut edges: Vec<[usize; 2]> = tets
            .iter()
            .flat_map(|t| MIDPOINT_NODES.iter().map(move |&(j, k)| sorted2(t[j], t[k])))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let nv = vertices.len();
        let edge_of = |a: usize, b: usize| nv + edges.binary_search(&sorted2(a, b)).expect("edge was collected");
        let elem_nodes: Vec<[usize; 10]> = tets
            .iter()
            .map(|t| {
                let mut n = [0; 10];
                n[..4].copy_from_slice(t);
                for (m, &(j, k)) in MIDPOINT_NODES.iter().enumerate() {
                    n[4 + m] = edge_of(t[j], t[k]);
                }
                n
            })
            .collect();

        let boundary_faces = check_conformity(&tets)?;
        let mut boundary = vec![false; nv + edges.len()];
        for f in &boundary_faces {
            for i in 0..3 {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                boundary[a] = true;
                boundary[edge_of(a, b)] = true;
            }
        }

        let h = tets
            .iter()
            .map(|t| Tet { p: t.map(|i| vertices[i]) }.longest_edge())
            .fold(0.0, f64::max);

        Ok(Mesh { vertices, tets, edges, elem_nodes, boundary, h })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.tets.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    /// Global node indices of element `e` in local node order.
    pub fn element_nodes(&self, e: usize) -> &[usize; 10] {
        &self.elem_nodes[e]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Longest edge over all elements.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node_coords(&self, node: usize) -> Vec3 {
        let nv = self.vertices.len();
        if node < nv {
            self.vertices[node]
        } else {
            let [a, b] = self.edges[node - nv];
            (self.vertices[a] + self.vertices[b]) * 0.5
        }
    }

    pub fn element(&self, e: usize) -> Tet {
        Tet { p: self.tets[e].map(|i| self.vertices[i]) }
    }

    pub fn element_geometry(&self, e: usize) -> Result<TetGeometry> {
        TetGeometry::new(&self.element(e))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|e| self.element(e).signed_volume()).sum()
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn check_indices(vertices: &[Vec3], tets: &[[usize; 4]]) -> Result<()> {
    for (e, t) in tets.iter().enumerate() {
        if let Some(&bad) = t.iter().find(|&&i| i >= vertices.len()) {
            return Err(QfvmError::Conformity(format!(
                "element {e} references vertex {bad} but only {} exist",
                vertices.len()
            )));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if t[i] == t[j] {
                    return Err(QfvmError::Conformity(format!("element {e} repeats vertex {}", t[i])));
                }
            }
        }
    }
    Ok(())
}

fn element_tet(vertices: &[Vec3], t: &[usize; 4], e: usize) -> Result<Tet> {
    Tet::from_points(t.map(|i| vertices[i])).map_err(|err| match err {
        QfvmError::DegenerateTet { volume, .. } => QfvmError::InvertedElement { element: e, volume },
        other => other,
    })
}

/// Rotates a face so its smallest index is first; keeps orientation.
fn canonical_rotation(f: [usize; 3]) -> [usize; 3] {
    let m = (0..3).min_by_key(|&i| f[i]).unwrap();
    [f[m], f[(m + 1) % 3], f[(m + 2) % 3]]
}

/// Checks face sharing and returns the outward-oriented boundary faces.
fn check_conformity(tets: &[[usize; 4]]) -> Result<Vec<[usize; 3]>> {
    let mut faces: Vec<([usize; 3], [usize; 3], usize)> = Vec::with_capacity(4 * tets.len());
    for (e, t) in tets.iter().enumerate() {
        for lf in OUTWARD_FACES {
            let oriented = canonical_rotation(lf.map(|i| t[i]));
            let mut key = oriented;
            key.sort_unstable();
            faces.push((key, oriented, e));
        }
    }
    faces.sort_unstable();

    let mut boundary = Vec::new();
    let mut i = 0;
    while i < faces.len() {
        let mut j = i + 1;
        while j < faces.len() && faces[j].0 == faces[i].0 {
            j += 1;
        }
        match j - i {
            1 => boundary.push(faces[i].1),
            2 => {
                if faces[i].1 == faces[i + 1].1 {
                    return Err(QfvmError::Conformity(format!(
                        "elements {} and {} induce the same orientation on face {:?}; they overlap",
                        faces[i].2, faces[i + 1].2, faces[i].0
                    )));
                }
            }
            n => {
                return Err(QfvmError::Conformity(format!("face {:?} is shared by {n} elements", faces[i].0)));
            }
        }
        i = j;
    }

    // A closed boundary surface pairs every directed edge with its reverse.
    let mut directed: Vec<[usize; 2]> =
        boundary.iter().flat_map(|f| (0..3).map(move |k| [f[k], f[(k + 1) % 3]])).collect();
    directed.sort_unstable();
    for d in &directed {
        if directed.binary_search(&[d[1], d[0]]).is_err() {
            return Err(QfvmError::Conformity(format!(
                "boundary edge {:?} has no matching neighbour face; the surface is not closed",
                d
            )));
        }
    }
    Ok(boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_tet;

    #[test]
    fn outward_faces_point_outward() {
        let tet = regular_tet();
        let c = tet.centroid();
        for (i, f) in OUTWARD_FACES.iter().enumerate() {
            let [a, b, d] = f.map(|k| tet.p[k]);
            let n = (b - a).cross(&(d - a));
            assert!(n.dot(&(a - c)) > 0.0, "face opposite {i}");
            assert!(!f.contains(&i));
        }
    }

    #[test]
    fn single_tet_mesh() {
        let t = regular_tet();
        let mesh = Mesh::new(t.p.to_vec(), vec![[0, 1, 2, 3]]).unwrap();
        assert_eq!(mesh.num_nodes(), 10);
        assert_eq!(mesh.num_boundary_nodes(), 10);
        for m in 4..10 {
            let n = mesh.element_nodes(0)[m];
            let (j, k) = MIDPOINT_NODES[m - 4];
            assert_eq!(mesh.node_coords(n), (t.p[j] + t.p[k]) * 0.5);
        }
    }

    #[test]
    fn negative_orientation_is_normalised() {
        let t = regular_tet();
        let mesh = Mesh::new(vec![t.p[0], t.p[1], t.p[3], t.p[2]], vec![[0, 1, 2, 3]]).unwrap();
        assert!(mesh.element(0).signed_volume() > 0.0);
        assert!(Mesh::from_oriented(vec![t.p[0], t.p[1], t.p[3], t.p[2]], vec![[0, 1, 2, 3]]).is_err());
    }

    #[test]
    fn overlapping_tets_rejected() {
        let t = regular_tet();
        let apex = t.p[3] + (t.p[3] - t.centroid()) * 0.1;
        let verts = vec![t.p[0], t.p[1], t.p[2], t.p[3], apex];
        // Both tets sit on the same side of face (0, 1, 2).
        let err = Mesh::new(verts, vec![[0, 1, 2, 3], [0, 1, 2, 4]]).unwrap_err();
        assert!(matches!(err, QfvmError::Conformity(_)), "{err}");
    }

    #[test]
    fn triply_shared_face_rejected() {
        let t = regular_tet();
        let c = t.centroid();
        let below = c - (t.p[3] - c);
        let verts = vec![t.p[0], t.p[1], t.p[2], t.p[3], below, t.p[3] * 1.5];
        let err = Mesh::new(verts, vec![[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]]).unwrap_err();
        assert!(matches!(err, QfvmError::Conformity(_)));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let t = regular_tet();
        assert!(Mesh::new(t.p.to_vec(), vec![[0, 1, 2, 4]]).is_err());
        assert!(Mesh::new(t.p.to_vec(), vec![[0, 1, 2, 2]]).is_err());
    }
}
