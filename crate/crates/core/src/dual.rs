//! The ten-cell dual partition of one tetrahedron.
//!
//! Dual points (indices are local vertices `0..4`):
//!
//! * `A(i, j)`: fraction `alpha` from `P_i` toward `P_j`;
//! * `B(i, j, k)`: fraction `beta` from `P_i` toward `M_jk`, `j < k`;
//! * `F(l)`: centroid of the face opposite `P_l`;
//! * `Qg(i)`: fraction `gamma` from `P_i` toward `F(i)`;
//! * `Qc`: the element centroid.
//!
//! A vertex cell is a hexahedron `(P_i, A(i,*), B(i,*), Qg(i))`. Every other
//! point of `K` belongs to one of the six midpoint cells. Interfaces are the
//! 12 quads `(A(i,j), B(i,jk), Qg(i), B(i,jl))` between `P_i` and `M_ij`, and
//! the 12 planar quads `(B(i,jk), F(l), Qc, Qg(i))` between `M_ij` and `M_ik`
//! inside face `T_l`'s median plane.
//!
//! Quads are split into two triangles along the diagonal through their
//! smallest [`PointId`], so both sides see the same surface.

use std::fmt::Write as _;

use crate::error::{QfvmError, Result};
use crate::geometry::{complement, edge_index, face_vertices, midpoint_node, Tet, Vec3};
use crate::quadrature::{tet_rule, triangle_rule};
use crate::scheme::SchemeParams;

/// Canonical dual-point identifier. The derived order is the tie-breaker for
/// quad diagonals; it must not change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointId {
    Vertex(usize),
    A(usize, usize),
    B(usize, usize, usize),
    F(usize),
    Qg(usize),
    Qc,
}

impl PointId {
    /// `B(i, j, k)` with the pair sorted.
    pub fn b(i: usize, j: usize, k: usize) -> PointId {
        if j < k {
            PointId::B(i, j, k)
        } else {
            PointId::B(i, k, j)
        }
    }
}

#[derive(Clone, Debug)]
pub struct DualPoints {
    pub vertex: [Vec3; 4],
    /// `a[i][j]`; the diagonal is unused.
    pub a: [[Vec3; 4]; 4],
    /// `b[i][e]` for the edge `e` (in `EDGES` order) opposite `P_i` in one face.
    pub b: [[Vec3; 6]; 4],
    pub f: [Vec3; 4],
    pub qg: [Vec3; 4],
    pub qc: Vec3,
}

impl DualPoints {
    pub fn new(tet: &Tet, params: &SchemeParams) -> DualPoints {
        let p = &tet.p;
        let (al, be, ga) = (params.alpha, params.beta, params.gamma);
        let f = [0, 1, 2, 3].map(|l| {
            let [a, b, c] = face_vertices(l);
            (p[a] + p[b] + p[c]) / 3.0
        });
        let mut a = [[Vec3::zeros(); 4]; 4];
        let mut b = [[Vec3::zeros(); 6]; 4];
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    a[i][j] = p[i] + (p[j] - p[i]) * al;
                }
            }
            for (e, &(j, k)) in crate::geometry::EDGES.iter().enumerate() {
                if j != i && k != i {
                    let m = (p[j] + p[k]) * 0.5;
                    b[i][e] = p[i] + (m - p[i]) * be;
                }
            }
        }
        let qg = [0, 1, 2, 3].map(|i| p[i] + (f[i] - p[i]) * ga);
        DualPoints { vertex: *p, a, b, f, qg, qc: tet.centroid() }
    }

    pub fn get(&self, id: PointId) -> Vec3 {
        match id {
            PointId::Vertex(i) => self.vertex[i],
            PointId::A(i, j) => self.a[i][j],
            PointId::B(i, j, k) => self.b[i][edge_index(j, k)],
            PointId::F(l) => self.f[l],
            PointId::Qg(i) => self.qg[i],
            PointId::Qc => self.qc,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Triangle {
    pub ids: [PointId; 3],
    pub p: [Vec3; 3],
}

impl Triangle {
    /// Area-weighted normal, `|n| = area`.
    pub fn area_vector(&self) -> Vec3 {
        (self.p[1] - self.p[0]).cross(&(self.p[2] - self.p[0])) * 0.5
    }

    pub fn area(&self) -> f64 {
        self.area_vector().norm()
    }

    pub fn centroid(&self) -> Vec3 {
        (self.p[0] + self.p[1] + self.p[2]) / 3.0
    }

    pub fn point_at(&self, l: &[f64; 3]) -> Vec3 {
        self.p[0] * l[0] + self.p[1] * l[1] + self.p[2] * l[2]
    }

    fn reversed(&self) -> Triangle {
        Triangle { ids: [self.ids[0], self.ids[2], self.ids[1]], p: [self.p[0], self.p[2], self.p[1]] }
    }
}

/// An interface inside `K`. Triangles are oriented from `left` into `right`.
#[derive(Clone, Debug)]
pub struct InternalFace {
    pub left: usize,
    pub right: usize,
    pub polygon: [PointId; 4],
    pub triangles: [Triangle; 2],
}

impl InternalFace {
    pub fn area_vector(&self) -> Vec3 {
        self.triangles[0].area_vector() + self.triangles[1].area_vector()
    }

    pub fn area(&self) -> f64 {
        self.triangles[0].area() + self.triangles[1].area()
    }
}

/// A piece of `∂K` owned by one node; triangles face out of `K`.
#[derive(Clone, Debug)]
pub struct BoundaryPatch {
    pub owner: usize,
    /// Host face `T_l`, i.e. the face opposite vertex `l`.
    pub face: usize,
    pub polygon: Vec<PointId>,
    /// Signed fan from `polygon[0]`; a triangle with reversed orientation
    /// carries negative measure.
    pub triangles: Vec<Triangle>,
}

impl BoundaryPatch {
    pub fn area_vector(&self) -> Vec3 {
        self.triangles.iter().map(Triangle::area_vector).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub node: usize,
    /// `(internal face index, true if this cell is the face's left side)`.
    pub internal: Vec<(usize, bool)>,
    pub boundary: Vec<usize>,
    /// Cone tetrahedra `(node, triangle)` with positive orientation.
    pub cones: Vec<[Vec3; 4]>,
    pub volume: f64,
}

#[derive(Clone, Debug)]
pub struct DualComplex {
    pub tet: Tet,
    pub points: DualPoints,
    pub internal_faces: Vec<InternalFace>,
    pub boundary_patches: Vec<BoundaryPatch>,
    pub cells: Vec<Cell>,
}

fn node_point(tet: &Tet, node: usize) -> Vec3 {
    tet.node(node)
}

fn split_quad(points: &DualPoints, quad: [PointId; 4]) -> [Triangle; 2] {
    let m = (0..4).min_by_key(|&i| quad[i]).unwrap();
    let id = |k: usize| quad[(m + k) % 4];
    let tri = |ids: [PointId; 3]| Triangle { ids, p: ids.map(|i| points.get(i)) };
    [tri([id(0), id(1), id(2)]), tri([id(0), id(2), id(3)])]
}

fn fan(points: &DualPoints, poly: &[PointId]) -> Vec<Triangle> {
    (1..poly.len() - 1)
        .map(|k| {
            let ids = [poly[0], poly[k], poly[k + 1]];
            Triangle { ids, p: ids.map(|i| points.get(i)) }
        })
        .collect()
}

fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

/// Interface quads with their (left, right) nodes, in a fixed order.
fn internal_quads() -> Vec<(usize, usize, [PointId; 4])> {
    let mut out = Vec::with_capacity(24);
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let (k, l) = complement(i, j);
            let quad = [PointId::A(i, j), PointId::b(i, j, k), PointId::Qg(i), PointId::b(i, j, l)];
            out.push((i, midpoint_node(i, j), quad));
        }
    }
    for l in 0..4 {
        for i in face_vertices(l) {
            let (j, k) = complement(i, l);
            let quad = [PointId::b(i, j, k), PointId::F(l), PointId::Qc, PointId::Qg(i)];
            out.push((midpoint_node(i, j), midpoint_node(i, k), quad));
        }
    }
    out
}

/// The six regions of face `T_l`: three vertex quads then three midpoint
/// pentagons, each with its owning local node. Vertices are listed so that
/// the polygon winds like `face_vertices(l)`.
pub fn face_regions(l: usize) -> Vec<(usize, Vec<PointId>)> {
    let fv = face_vertices(l);
    let mut out = Vec::with_capacity(6);
    for s in 0..3 {
        let (i, j, k) = (fv[s], fv[(s + 1) % 3], fv[(s + 2) % 3]);
        out.push((i, vec![PointId::Vertex(i), PointId::A(i, j), PointId::b(i, j, k), PointId::A(i, k)]));
    }
    for s in 0..3 {
        let (i, j, k) = (fv[s], fv[(s + 1) % 3], fv[(s + 2) % 3]);
        let poly = vec![PointId::A(i, j), PointId::A(j, i), PointId::b(j, i, k), PointId::F(l), PointId::b(i, j, k)];
        out.push((midpoint_node(i, j), poly));
    }
    out
}

/// Region polygons of face `T_l` as coordinates, with owners.
pub fn face_partition_2d(tet: &Tet, l: usize, params: &SchemeParams) -> Vec<(usize, Vec<Vec3>)> {
    let pts = DualPoints::new(tet, params);
    face_regions(l).into_iter().map(|(o, poly)| (o, poly.into_iter().map(|id| pts.get(id)).collect())).collect()
}

impl DualComplex {
    pub fn new(tet: &Tet, params: &SchemeParams) -> Result<DualComplex> {
        let tet = *tet;
        let points = DualPoints::new(&tet, params);

        let mut internal_faces = Vec::with_capacity(24);
        for (left, right, quad) in internal_quads() {
            let mut tris = split_quad(&points, quad);
            let av = tris[0].area_vector() + tris[1].area_vector();
            let c = quad.iter().map(|&id| points.get(id)).sum::<Vec3>() / 4.0;
            if av.dot(&(c - node_point(&tet, left))) < 0.0 {
                tris = [tris[0].reversed(), tris[1].reversed()];
            }
            internal_faces.push(InternalFace { left, right, polygon: quad, triangles: tris });
        }

        let centroid = tet.centroid();
        let mut boundary_patches = Vec::with_capacity(24);
        for l in 0..4 {
            for (owner, poly) in face_regions(l) {
                let mut poly = poly;
                let outward = points.f[l] - centroid;
                if fan(&points, &poly).iter().map(Triangle::area_vector).sum::<Vec3>().dot(&outward) < 0.0 {
                    poly.reverse();
                }
                let triangles = fan(&points, &poly);
                boundary_patches.push(BoundaryPatch { owner, face: l, polygon: poly, triangles });
            }
        }

        let mut cells: Vec<Cell> = (0..10)
            .map(|node| Cell { node, internal: Vec::new(), boundary: Vec::new(), cones: Vec::new(), volume: 0.0 })
            .collect();
        for (f, face) in internal_faces.iter().enumerate() {
            cells[face.left].internal.push((f, true));
            cells[face.right].internal.push((f, false));
        }
        for (b, patch) in boundary_patches.iter().enumerate() {
            cells[patch.owner].boundary.push(b);
        }
        for cell in &mut cells {
            let x = node_point(&tet, cell.node);
            for &(f, is_left) in &cell.internal {
                for t in &internal_faces[f].triangles {
                    let t = if is_left { *t } else { t.reversed() };
                    let v = signed_volume(&x, &t.p[0], &t.p[1], &t.p[2]);
                    if !(v > 0.0) {
                        return Err(QfvmError::StarShape { cell: cell.node, volume: v });
                    }
                    cell.volume += v;
                    cell.cones.push([x, t.p[0], t.p[1], t.p[2]]);
                }
            }
        }

        Ok(DualComplex { tet, points, internal_faces, boundary_patches, cells })
    }

    /// Sum of outward area vectors over every face of `cell`.
    pub fn closure_defect(&self, cell: usize) -> Vec3 {
        let c = &self.cells[cell];
        let internal: Vec3 = c
            .internal
            .iter()
            .map(|&(f, left)| {
                let a = self.internal_faces[f].area_vector();
                if left {
                    a
                } else {
                    -a
                }
            })
            .sum();
        let boundary: Vec3 = c.boundary.iter().map(|&b| self.boundary_patches[b].area_vector()).sum();
        internal + boundary
    }

    /// Distinct points and `(vertices, edges, faces)` counts of a cell's boundary.
    pub fn cell_topology(&self, cell: usize) -> (usize, usize, usize) {
        let c = &self.cells[cell];
        let mut polys: Vec<Vec<PointId>> =
            c.internal.iter().map(|&(f, _)| self.internal_faces[f].polygon.to_vec()).collect();
        polys.extend(c.boundary.iter().map(|&b| self.boundary_patches[b].polygon.clone()));
        let mut verts: Vec<PointId> = polys.iter().flatten().copied().collect();
        verts.sort();
        verts.dedup();
        let mut edges: Vec<(PointId, PointId)> = polys
            .iter()
            .flat_map(|p| {
                (0..p.len()).map(move |k| {
                    let (a, b) = (p[k], p[(k + 1) % p.len()]);
                    if a < b {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
            })
            .collect();
        edges.sort();
        edges.dedup();
        (verts.len(), edges.len(), polys.len())
    }

    /// Points and polygons in Wavefront OBJ form, one group per cell.
    pub fn to_obj(&self) -> String {
        let mut ids: Vec<PointId> = self
            .internal_faces
            .iter()
            .flat_map(|f| f.polygon)
            .chain(self.boundary_patches.iter().flat_map(|b| b.polygon.clone()))
            .collect();
        ids.sort();
        ids.dedup();
        let mut s = String::new();
        for id in &ids {
            let p = self.points.get(*id);
            writeln!(s, "v {} {} {}  # {:?}", p.x, p.y, p.z, id).unwrap();
        }
        let index = |id: &PointId| ids.binary_search(id).unwrap() + 1;
        for cell in &self.cells {
            writeln!(s, "g cell{}", cell.node).unwrap();
            for &(f, left) in &cell.internal {
                let face = &self.internal_faces[f];
                for t in &face.triangles {
                    let t = if left { *t } else { t.reversed() };
                    writeln!(s, "f {} {} {}", index(&t.ids[0]), index(&t.ids[1]), index(&t.ids[2])).unwrap();
                }
            }
            for &b in &cell.boundary {
                let poly: Vec<String> =
                    self.boundary_patches[b].polygon.iter().map(|id| index(id).to_string()).collect();
                writeln!(s, "f {}", poly.join(" ")).unwrap();
            }
        }
        s
    }
}

pub fn build_dual(tet: &Tet, params: &SchemeParams) -> Result<DualComplex> {
    DualComplex::new(tet, params)
}

/// Quadrature on one internal face; weights are area-scaled and the unit
/// normal points from `left` into `right`.
#[derive(Clone, Debug)]
pub struct FaceQuadrature {
    pub left: usize,
    pub right: usize,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub normals: Vec<Vec3>,
}

pub fn internal_surface_quadrature(complex: &DualComplex, degree: usize) -> Result<Vec<FaceQuadrature>> {
    let rule = triangle_rule(degree)?;
    Ok(complex
        .internal_faces
        .iter()
        .map(|face| {
            let mut q = FaceQuadrature {
                left: face.left,
                right: face.right,
                points: Vec::new(),
                weights: Vec::new(),
                normals: Vec::new(),
            };
            for t in &face.triangles {
                let av = t.area_vector();
                let area = av.norm();
                let n = av / area;
                for (l, w) in rule.points.iter().zip(&rule.weights) {
                    q.points.push(t.point_at(l));
                    q.weights.push(w * area);
                    q.normals.push(n);
                }
            }
            q
        })
        .collect())
}

/// `∭_{D_m} f` for each cell `m` using the cone tetrahedra.
pub fn cell_integrals(complex: &DualComplex, degree: usize, f: impl Fn(&Vec3) -> f64) -> Result<[f64; 10]> {
    let rule = tet_rule(degree)?;
    let mut out = [0.0; 10];
    for cell in &complex.cells {
        let mut acc = 0.0;
        for cone in &cell.cones {
            let v = signed_volume(&cone[0], &cone[1], &cone[2], &cone[3]);
            let s: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(l, w)| w * f(&(cone[0] * l[0] + cone[1] * l[1] + cone[2] * l[2] + cone[3] * l[3])))
                .sum();
            acc += v * s;
        }
        out[cell.node] = acc;
    }
    Ok(out)
}

/// `∬_{patch} f dS` over every boundary patch, signed-fan aware.
pub fn patch_integral(patch: &BoundaryPatch, degree: usize, f: impl Fn(&Vec3) -> f64) -> Result<f64> {
    let rule = triangle_rule(degree)?;
    let total = patch.area_vector();
    let n = total / total.norm();
    Ok(patch
        .triangles
        .iter()
        .map(|t| {
            let signed_area = t.area_vector().dot(&n);
            signed_area * rule.points.iter().zip(&rule.weights).map(|(l, w)| w * f(&t.point_at(l))).sum::<f64>()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_tet, regular_tet};
    use crate::scheme::{t_integrals, Preset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> Tet {
        Tet::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::zeros()).unwrap()
    }

    #[test]
    fn counts_and_volumes_on_reference() {
        let p = Preset::Qfvs2.params();
        let d = DualComplex::new(&reference(), &p).unwrap();
        assert_eq!(d.internal_faces.len(), 24);
        assert_eq!(d.boundary_patches.len(), 24);
        assert_eq!(d.cells.len(), 10);
        let total: f64 = d.cells.iter().map(|c| c.volume).sum();
        assert!((total - 1.0 / 6.0).abs() < 1e-14);
        let abg = p.alpha * p.beta * p.gamma;
        for c in &d.cells {
            let expect = if c.node < 4 { abg / 6.0 } else { (1.0 - 4.0 * abg) / 36.0 };
            assert!((c.volume - expect).abs() < 1e-14, "cell {}: {} vs {}", c.node, c.volume, expect);
        }
    }

    #[test]
    fn qfvs1_volume_fractions() {
        let p = Preset::Qfvs1.params();
        let abg = p.alpha * p.beta * p.gamma;
        assert!((abg - 0.0028995).abs() < 5e-8);
        assert!(((1.0 - 4.0 * abg) / 6.0 - 0.1647337).abs() < 5e-8);
    }

    #[test]
    fn cell_topology_and_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tet = random_tet(&mut rng, 20.0);
        let d = DualComplex::new(&tet, &Preset::Qfvs3.params()).unwrap();
        let h = tet.longest_edge();
        for c in 0..10 {
            let (v, e, f) = d.cell_topology(c);
            if c < 4 {
                assert_eq!((v, e, f), (8, 12, 6));
            } else {
                assert_eq!((v, e, f), (11, 17, 8));
            }
            assert_eq!(v + f, e + 2);
            assert!(d.closure_defect(c).norm() < 1e-13 * h * h);
        }
    }

    #[test]
    fn midpoint_quads_are_planar() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = DualComplex::new(&random_tet(&mut rng, 20.0), &Preset::Qfvs1.params()).unwrap();
        for face in &d.internal_faces[12..] {
            let [a, b] = face.triangles;
            let n = a.area_vector().normalize();
            for p in b.p {
                assert!((p - a.p[0]).dot(&n).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shared_triangles_are_bit_identical() {
        let d = DualComplex::new(&regular_tet(), &Preset::Qfvs2.params()).unwrap();
        for face in &d.internal_faces {
            let mut ids: Vec<_> = face.triangles.iter().flat_map(|t| t.ids).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), 4);
            let min = *face.polygon.iter().min().unwrap();
            assert!(face.triangles.iter().all(|t| t.ids.contains(&min)));
        }
    }

    #[test]
    fn face_regions_tile_each_face() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tet = random_tet(&mut rng, 20.0).positively_oriented();
        for preset in [Preset::Qfvs1, Preset::Qfvs3] {
            let d = DualComplex::new(&tet, &preset.params()).unwrap();
            for l in 0..4 {
                let [a, b, c] = face_vertices(l).map(|i| tet.p[i]);
                let area = 0.5 * (b - a).cross(&(c - a)).norm();
                let sum: f64 =
                    d.boundary_patches.iter().filter(|p| p.face == l).map(|p| p.area_vector().norm()).sum();
                assert!((sum - area).abs() < 1e-13 * area.max(1.0));
            }
        }
    }

    /// `(L1, L2)` is `(x, y)` on the face `z = 0` of this tet.
    fn planar_reference() -> Tet {
        Tet::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn t_integrals_match_region_quadrature() {
        let (alpha, beta) = (0.3, 0.4);
        let params = SchemeParams::new(alpha, beta, 0.25, 1.0).unwrap();
        let tet = planar_reference().positively_oriented();
        let d = DualComplex::new(&tet, &params).unwrap();
        // Locate the node owning each region through coordinates, since
        // orientation normalisation may relabel vertices.
        let owner_at = |target: Vec3| (0..10).find(|&n| (d.tet.node(n) - target).norm() < 1e-15).unwrap();
        let (p1, p2, p3) = (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::zeros());
        let face = (0..4).find(|&l| d.points.f[l].z.abs() < 1e-15 && d.tet.p[l].z == 1.0).unwrap();
        let moment = |owner: usize| -> f64 {
            d.boundary_patches
                .iter()
                .filter(|p| p.face == face && p.owner == owner)
                .map(|p| patch_integral(p, 5, |x| x.x).unwrap())
                .sum()
        };
        let (t1, t2, t3, t4) = t_integrals(alpha, beta).unwrap();
        assert!((moment(owner_at(p1)) - t1).abs() < 1e-8);
        assert!((moment(owner_at(p2)) - t2).abs() < 1e-8);
        assert!((moment(owner_at(p3)) - t2).abs() < 1e-8);
        assert!((moment(owner_at((p1 + p3) * 0.5)) - t3).abs() < 1e-8);
        assert!((moment(owner_at((p1 + p2) * 0.5)) - t3).abs() < 1e-8);
        assert!((moment(owner_at((p2 + p3) * 0.5)) - t4).abs() < 1e-8);
    }

    #[test]
    fn vertex_region_area_closed_form() {
        let (alpha, beta) = (0.3, 0.4);
        let params = SchemeParams::new(alpha, beta, 0.25, 1.0).unwrap();
        let tet = planar_reference();
        for (owner, poly) in face_partition_2d(&tet, 3, &params) {
            if owner < 4 {
                let mut av = Vec3::zeros();
                for k in 0..poly.len() {
                    av += poly[k].cross(&poly[(k + 1) % poly.len()]) * 0.5;
                }
                let closed = alpha * beta * (1.0 - (alpha + beta) / 2.0) + alpha * beta * (alpha + beta) / 2.0;
                assert!((av.norm() - closed * 0.5).abs() < 1e-14, "{} vs {}", av.norm(), closed * 0.5);
            }
        }
    }

    #[test]
    fn surface_quadrature_weights() {
        let d = DualComplex::new(&regular_tet(), &Preset::Qfvs1.params()).unwrap();
        let q = internal_surface_quadrature(&d, 5).unwrap();
        let total: f64 = q.iter().flat_map(|f| &f.weights).sum();
        let areas: f64 = d.internal_faces.iter().map(InternalFace::area).sum();
        assert!((total - areas).abs() < 1e-14);
        assert!(internal_surface_quadrature(&d, 0).is_err());
    }

    #[test]
    fn linear_integrand_over_planar_quad() {
        let d = DualComplex::new(&regular_tet(), &Preset::Qfvs2.params()).unwrap();
        let q = &internal_surface_quadrature(&d, 1).unwrap()[12];
        let face = &d.internal_faces[12];
        // For a planar polygon, ∫ x dS = area-weighted centroid of the triangles.
        let expect: f64 = face.triangles.iter().map(|t| t.area() * t.centroid().x).sum();
        let got: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p.x).sum();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn obj_export_lists_cells() {
        let d = DualComplex::new(&regular_tet(), &Preset::Qfvs1.params()).unwrap();
        let obj = d.to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("g ")).count(), 10);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 4 + 12 + 12 + 4 + 4 + 1);
    }
}
