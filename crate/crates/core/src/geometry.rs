//! Per-tetrahedron geometric kernels.
//!
//! Index conventions (0-based, shared by every module):
//!
//! * edges follow [`EDGES`]: `12, 13, 14, 23, 24, 34`;
//! * the twelve plane angles follow [`PLANE_ANGLES`]: three per vertex;
//! * face `T_i` is the face opposite vertex `P_i`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::error::{QfvmError, Result};

pub type Vec3 = Vector3<f64>;

/// Default rejection threshold: `|K| < DEGENERACY_TOL * h_K^3` is degenerate.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// Arccos arguments within this distance of `±1` are clamped; beyond it the
/// five-angle set is infeasible.
pub const ACOS_CLAMP: f64 = 1e-12;

/// Edge `e` joins vertices `EDGES[e].0 < EDGES[e].1`.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local midpoint nodes 4..10 in order `M23, M13, M12, M14, M24, M34`.
pub const MIDPOINT_NODES: [(usize, usize); 6] = [(1, 2), (0, 2), (0, 1), (0, 3), (1, 3), (2, 3)];

/// `PLANE_ANGLES[v][m] = (j, k)`: the angle `theta_{m+1, P_{v+1}}` sits at
/// vertex `v` between the edges towards `j` and `k`.
pub const PLANE_ANGLES: [[(usize, usize); 3]; 4] = [
    [(1, 3), (1, 2), (2, 3)],
    [(0, 3), (0, 2), (2, 3)],
    [(0, 3), (0, 1), (1, 3)],
    [(0, 1), (0, 2), (1, 2)],
];

/// Index into [`EDGES`] of the edge joining `j` and `k`.
pub fn edge_index(j: usize, k: usize) -> usize {
    let (a, b) = if j < k { (j, k) } else { (k, j) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("no edge between local vertices {j} and {k}"),
    }
}

/// Local node index (4..10) of the midpoint of edge `jk`.
pub fn midpoint_node(j: usize, k: usize) -> usize {
    let (a, b) = if j < k { (j, k) } else { (k, j) };
    4 + MIDPOINT_NODES.iter().position(|&e| e == (a, b)).expect("distinct local vertices")
}

/// The two vertices not in `{j, k}`, ascending.
pub fn complement(j: usize, k: usize) -> (usize, usize) {
    let mut rest = (0..4).filter(|&v| v != j && v != k);
    (rest.next().unwrap(), rest.next().unwrap())
}

/// The three vertices of face `T_i`, ascending.
pub fn face_vertices(i: usize) -> [usize; 3] {
    let mut out = [0; 3];
    let mut n = 0;
    for v in 0..4 {
        if v != i {
            out[n] = v;
            n += 1;
        }
    }
    out
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// A tetrahedron with fixed local vertex order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tet {
    pub p: [Vec3; 4],
}

impl Tet {
    /// Either orientation is accepted; only near-coplanar input is rejected.
    pub fn new(p1: Vec3, p2: Vec3, p3: Vec3, p4: Vec3) -> Result<Tet> {
        Tet::with_tolerance([p1, p2, p3, p4], DEGENERACY_TOL)
    }

    pub fn from_points(p: [Vec3; 4]) -> Result<Tet> {
        Tet::with_tolerance(p, DEGENERACY_TOL)
    }

    pub fn with_tolerance(p: [Vec3; 4], tol: f64) -> Result<Tet> {
        let tet = Tet { p };
        let h = tet.longest_edge();
        let volume = tet.signed_volume().abs();
        if !(volume >= tol * h * h * h) || h == 0.0 {
            return Err(QfvmError::DegenerateTet { volume, tol });
        }
        Ok(tet)
    }

    /// `det[P2-P1, P3-P1, P4-P1] / 6`, equal to the 4x4 homogeneous determinant.
    pub fn signed_volume(&self) -> f64 {
        let [p1, p2, p3, p4] = &self.p;
        (p2 - p1).dot(&(p3 - p1).cross(&(p4 - p1))) / 6.0
    }

    pub fn longest_edge(&self) -> f64 {
        EDGES
            .iter()
            .map(|&(j, k)| (self.p[k] - self.p[j]).norm())
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Vec3 {
        (self.p[0] + self.p[1] + self.p[2] + self.p[3]) / 4.0
    }

    /// Cartesian point of the barycentric coordinates `l`.
    pub fn point_at(&self, l: &[f64; 4]) -> Vec3 {
        self.p[0] * l[0] + self.p[1] * l[1] + self.p[2] * l[2] + self.p[3] * l[3]
    }

    /// Local node `n` in `0..10` (vertices, then midpoints).
    pub fn node(&self, n: usize) -> Vec3 {
        if n < 4 {
            self.p[n]
        } else {
            let (j, k) = MIDPOINT_NODES[n - 4];
            (self.p[j] + self.p[k]) * 0.5
        }
    }

    pub fn scaled(&self, s: f64) -> Tet {
        Tet { p: self.p.map(|q| q * s) }
    }

    /// Swap `P3` and `P4` so the signed volume becomes positive.
    pub fn positively_oriented(&self) -> Tet {
        if self.signed_volume() >= 0.0 {
            *self
        } else {
            Tet { p: [self.p[0], self.p[1], self.p[3], self.p[2]] }
        }
    }
}

/// All per-element geometric quantities.
#[derive(Clone, Debug)]
pub struct TetGeometry {
    pub tet: Tet,
    pub volume: f64,
    pub grad_l: [Vec3; 4],
    /// `r_jk = |P_j P_k| cot(theta_jk)` in [`EDGES`] order.
    pub r: [f64; 6],
    /// `R_i`: sum of the three `r_jk` with `i` not in `{j, k}`.
    pub big_r: [f64; 4],
    pub face_areas: [f64; 4],
    pub edge_lengths: [f64; 6],
    /// `plane_angles[v][m]` in [`PLANE_ANGLES`] order.
    pub plane_angles: [[f64; 3]; 4],
    /// Dihedral angle at each edge, [`EDGES`] order.
    pub dihedral: [f64; 6],
    pub h: f64,
    /// Inscribed-sphere diameter.
    pub rho: f64,
    pub circumradius: f64,
}

impl TetGeometry {
    pub fn new(tet: &Tet) -> Result<TetGeometry> {
        let tet = Tet::from_points(tet.p)?;
        let p = &tet.p;
        let volume = tet.signed_volume().abs();

        let mut grad_l = [Vec3::zeros(); 4];
        let mut face_areas = [0.0; 4];
        for i in 0..4 {
            let [j, k, l] = face_vertices(i);
            let n = (p[k] - p[j]).cross(&(p[l] - p[j]));
            face_areas[i] = 0.5 * n.norm();
            grad_l[i] = n / n.dot(&(p[i] - p[j]));
        }

        let mut edge_lengths = [0.0; 6];
        let mut dihedral = [0.0; 6];
        let mut r = [0.0; 6];
        for (e, &(j, k)) in EDGES.iter().enumerate() {
            edge_lengths[e] = (p[k] - p[j]).norm();
            let (a, b) = complement(j, k);
            // Outer normals are -grad L, so cos(theta) = -n_a.n_b = -(gA.gB)/(|gA||gB|).
            let (ga, gb) = (&grad_l[a], &grad_l[b]);
            let theta = ga.cross(gb).norm().atan2(-ga.dot(gb));
            dihedral[e] = theta;
            r[e] = edge_lengths[e] * theta.cos() / theta.sin();
        }

        let mut big_r = [0.0; 4];
        for (i, out) in big_r.iter_mut().enumerate() {
            *out = EDGES
                .iter()
                .zip(r.iter())
                .filter(|(&(j, k), _)| j != i && k != i)
                .map(|(_, &v)| v)
                .sum();
        }

        let mut plane_angles = [[0.0; 3]; 4];
        for v in 0..4 {
            for m in 0..3 {
                let (j, k) = PLANE_ANGLES[v][m];
                plane_angles[v][m] = angle_between(&(p[j] - p[v]), &(p[k] - p[v]));
            }
        }

        let h = edge_lengths.iter().copied().fold(0.0, f64::max);
        let rho = 6.0 * volume / face_areas.iter().sum::<f64>();
        let circumradius = circumradius(&tet)?;

        Ok(TetGeometry {
            tet,
            volume,
            grad_l,
            r,
            big_r,
            face_areas,
            edge_lengths,
            plane_angles,
            dihedral,
            h,
            rho,
            circumradius,
        })
    }

    /// `r_jk` for any ordering of `j, k`.
    pub fn r_edge(&self, j: usize, k: usize) -> f64 {
        self.r[edge_index(j, k)]
    }

    /// Barycentric coordinates of `x`.
    pub fn barycentric(&self, x: &Vec3) -> [f64; 4] {
        let mut l = [0.0; 4];
        for (i, li) in l.iter_mut().enumerate() {
            let [j, _, _] = face_vertices(i);
            *li = self.grad_l[i].dot(&(x - self.tet.p[j]));
        }
        l
    }

    /// V-angle at vertex `v`.
    pub fn v_angle(&self, v: usize) -> f64 {
        v_angle_of(&self.plane_angles[v])
    }

    /// Minimum V-angle `theta_K` in radians.
    pub fn min_v_angle(&self) -> f64 {
        (0..4).map(|v| self.v_angle(v)).fold(f64::INFINITY, f64::min)
    }

    pub fn theta5(&self) -> Theta5 {
        let a = &self.plane_angles;
        Theta5([a[0][0], a[0][1], a[1][0], a[1][1], a[1][2]])
    }
}

fn circumradius(tet: &Tet) -> Result<f64> {
    let p = &tet.p;
    let mut m = Matrix3::zeros();
    let mut rhs = Vec3::zeros();
    for i in 0..3 {
        let d = p[i + 1] - p[0];
        m.set_row(i, &(2.0 * d).transpose());
        rhs[i] = d.norm_squared();
    }
    // Centre relative to P1.
    let c = m
        .lu()
        .solve(&rhs)
        .ok_or(QfvmError::DegenerateTet { volume: tet.signed_volume().abs(), tol: DEGENERACY_TOL })?;
    Ok(c.norm())
}

/// `theta_1 + theta_2 + theta_3 - 2 max(theta_i)`.
pub fn v_angle_of(angles: &[f64; 3]) -> f64 {
    let max = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    angles.iter().sum::<f64>() - 2.0 * max
}

/// `(theta_{1,P1}, theta_{2,P1}, theta_{1,P2}, theta_{2,P2}, theta_{3,P2})` in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theta5(pub [f64; 5]);

impl Theta5 {
    pub fn from_degrees(d: [f64; 5]) -> Theta5 {
        Theta5(d.map(f64::to_radians))
    }

    pub fn regular() -> Theta5 {
        Theta5::from_degrees([60.0; 5])
    }
}

/// The complete angle set of a tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSet {
    /// [`PLANE_ANGLES`] order.
    pub plane: [[f64; 3]; 4],
    /// [`EDGES`] order.
    pub dihedral: [f64; 6],
}

impl AngleSet {
    /// Plane angle at vertex `v` between the edges towards `j` and `k`.
    pub fn plane_at(&self, v: usize, j: usize, k: usize) -> f64 {
        let m = PLANE_ANGLES[v]
            .iter()
            .position(|&(a, b)| (a, b) == (j, k) || (a, b) == (k, j))
            .expect("edges must meet at the vertex");
        self.plane[v][m]
    }

    pub fn v_angles(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|v| v_angle_of(&self.plane[v]))
    }
}

fn checked_acos(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() {
        return Err(QfvmError::InfeasibleTheta5(format!("{what}: non-finite cosine")));
    }
    if x.abs() <= 1.0 {
        return Ok(x.acos());
    }
    if x.abs() <= 1.0 + ACOS_CLAMP {
        return Ok(x.clamp(-1.0, 1.0).acos());
    }
    Err(QfvmError::InfeasibleTheta5(format!("{what}: cosine {x} outside [-1, 1]")))
}

/// Dihedral angle at an edge from the two face angles adjacent to it at one
/// vertex (`a`, `b`) and the face angle opposite it there (`opp`).
fn dihedral_from_trihedral(a: f64, b: f64, opp: f64, what: &str) -> Result<f64> {
    checked_acos((opp.cos() - a.cos() * b.cos()) / (a.sin() * b.sin()), what)
}

fn positive_angle(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x < std::f64::consts::PI {
        Ok(x)
    } else {
        Err(QfvmError::InfeasibleTheta5(format!("{what} = {} deg outside (0, 180)", x.to_degrees())))
    }
}

/// Recover all twelve plane angles and six dihedral angles from five.
pub fn reconstruct_from_theta5(t5: &Theta5) -> Result<AngleSet> {
    use std::f64::consts::PI;
    let [a1, a2, b1, b2, b3] = t5.0;
    for (i, &x) in t5.0.iter().enumerate() {
        positive_angle(x, &format!("Theta5[{i}]"))?;
    }

    let t1p4 = positive_angle(PI - a1 - b1, "theta_{1,P4}")?;
    let t2p3 = positive_angle(PI - a2 - b2, "theta_{2,P3}")?;

    // Trihedral at P2: faces 124 (b1), 123 (b2), 234 (b3).
    let th12 = dihedral_from_trihedral(b1, b2, b3, "theta_12")?;
    let th24 = dihedral_from_trihedral(b1, b3, b2, "theta_24")?;
    let th23 = dihedral_from_trihedral(b2, b3, b1, "theta_23")?;

    // Trihedral at P1: faces 124 (a1), 123 (a2) meet at edge 12.
    let t3p1 = checked_acos(th12.cos() * a1.sin() * a2.sin() + a1.cos() * a2.cos(), "theta_{3,P1}")?;
    let t3p1 = positive_angle(t3p1, "theta_{3,P1}")?;
    let th14 = dihedral_from_trihedral(a1, t3p1, a2, "theta_14")?;
    let th13 = dihedral_from_trihedral(a2, t3p1, a1, "theta_13")?;

    // Trihedral at P4 from the face angle P1P4P2 and its two adjacent dihedrals.
    let (s1, c1) = t1p4.sin_cos();
    let t2p4 = (s1 * th24.sin()).atan2(c1 * th24.sin() * th14.cos() + th24.cos() * th14.sin());
    let t3p4 = (s1 * th14.sin()).atan2(c1 * th14.sin() * th24.cos() + th14.cos() * th24.sin());
    let t2p4 = positive_angle(t2p4, "theta_{2,P4}")?;
    let t3p4 = positive_angle(t3p4, "theta_{3,P4}")?;

    let t1p3 = positive_angle(PI - t3p1 - t2p4, "theta_{1,P3}")?;
    let t3p3 = positive_angle(PI - b3 - t3p4, "theta_{3,P3}")?;

    // Trihedral at P3: edge 34 lies between faces 134 (t1p3) and 234 (t3p3).
    let th34 = dihedral_from_trihedral(t1p3, t3p3, t2p3, "theta_34")?;

    Ok(AngleSet {
        plane: [[a1, a2, t3p1], [b1, b2, b3], [t1p3, t2p3, t3p3], [t1p4, t2p4, t3p4]],
        dihedral: [th12, th13, th14, th23, th24, th34],
    })
}

/// Scale-free ratios `r_jk / R_K` in [`EDGES`] order, from the complete angle set.
pub fn r_over_circumradius_from_angles(angles: &AngleSet) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (e, &(j, k)) in EDGES.iter().enumerate() {
        let (a, b) = complement(j, k);
        let th = angles.dihedral[e];
        let cot_a = 1.0 / angles.plane_at(a, j, k).tan();
        let cot_b = 1.0 / angles.plane_at(b, j, k).tan();
        let (s, c) = th.sin_cos();
        let denom = (s * s + cot_a * cot_a + cot_b * cot_b - 2.0 * cot_a * cot_b * c).sqrt();
        out[e] = 2.0 * c / denom;
    }
    out
}

/// Scale-free ratios `r_jk / R_K` determined by five plane angles.
pub fn r_over_circumradius(t5: &Theta5) -> Result<[f64; 6]> {
    Ok(r_over_circumradius_from_angles(&reconstruct_from_theta5(t5)?))
}

/// A random tetrahedron with `h/rho` below `max_ratio`, positively oriented.
///
/// Sampling helper for property tests and benchmarks.
pub fn random_tet<R: Rng + ?Sized>(rng: &mut R, max_ratio: f64) -> Tet {
    loop {
        let p = [0; 4].map(|_| Vec3::new(rng.random(), rng.random(), rng.random()));
        if let Ok(tet) = Tet::from_points(p) {
            let tet = tet.positively_oriented();
            if let Ok(g) = TetGeometry::new(&tet) {
                if g.h / g.rho < max_ratio {
                    return tet;
                }
            }
        }
    }
}

/// Unit-edge regular tetrahedron.
pub fn regular_tet() -> Tet {
    let s = 1.0 / 2f64.sqrt();
    Tet {
        p: [
            Vec3::new(1.0, 0.0, -s) * 0.5,
            Vec3::new(-1.0, 0.0, -s) * 0.5,
            Vec3::new(0.0, 1.0, s) * 0.5,
            Vec3::new(0.0, -1.0, s) * 0.5,
        ],
    }
    .positively_oriented()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_tet() -> Tet {
        Tet::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::zeros(),
        )
        .unwrap()
    }

    #[test]
    fn reference_tet_volume_and_gradient() {
        let g = TetGeometry::new(&reference_tet()).unwrap();
        assert_relative_eq!(g.volume, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(g.grad_l[0], Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(g.grad_l[3], Vec3::new(-1.0, -1.0, -1.0), epsilon = 1e-15);
    }

    #[test]
    fn regular_tet_closed_forms() {
        let g = TetGeometry::new(&regular_tet()).unwrap();
        let dihedral = (1.0f64 / 3.0).acos();
        let c = 1.0 / (2.0 * 2f64.sqrt());
        for e in 0..6 {
            assert_relative_eq!(g.edge_lengths[e], 1.0, epsilon = 1e-14);
            assert_relative_eq!(g.dihedral[e], dihedral, epsilon = 1e-14);
            assert_relative_eq!(g.r[e], c, epsilon = 1e-14);
        }
        for i in 0..4 {
            assert_relative_eq!(g.big_r[i], 3.0 * c, epsilon = 1e-14);
        }
        assert_relative_eq!(g.min_v_angle().to_degrees(), 60.0, epsilon = 1e-12);
        assert_relative_eq!(g.circumradius, (3.0f64 / 8.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn dihedral_matches_brute_force_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = TetGeometry::new(&random_tet(&mut rng, 30.0)).unwrap();
        let p = &g.tet.p;
        let c = g.tet.centroid();
        for (e, &(j, k)) in EDGES.iter().enumerate() {
            let (a, b) = complement(j, k);
            // Outward normals of the faces opposite a and b.
            let outward = |i: usize| {
                let [u, v, w] = face_vertices(i);
                let n = (p[v] - p[u]).cross(&(p[w] - p[u]));
                if n.dot(&(p[u] - c)) > 0.0 { n.normalize() } else { -n.normalize() }
            };
            let expect = (-outward(a).dot(&outward(b))).acos();
            assert_relative_eq!(g.dihedral[e], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn structured_cube_tet_v_angle() {
        let tet = Tet::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 1.0),
        )
        .unwrap();
        let g = TetGeometry::new(&tet).unwrap();
        let expect = (2f64.sqrt() / 2.0).atan().to_degrees() + 45.0 - 2f64.sqrt().atan().to_degrees();
        assert_relative_eq!(g.min_v_angle().to_degrees(), expect, epsilon = 1e-10);
        assert!((expect - 25.52878).abs() < 1e-5);
    }

    #[test]
    fn square_degenerate_tet() {
        let tet = Tet::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 1e-6),
            Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        let g = TetGeometry::new(&tet).unwrap();
        assert!(g.min_v_angle().to_degrees() < 0.01);
        let min_plane = g.plane_angles.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min_plane.to_degrees(), 45.0, epsilon = 1e-3);
    }

    #[test]
    fn coplanar_rejected() {
        let err = Tet::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        );
        assert!(matches!(err, Err(QfvmError::DegenerateTet { .. })));
    }

    #[test]
    fn regular_theta5_reconstruction() {
        let a = reconstruct_from_theta5(&Theta5::regular()).unwrap();
        for v in 0..4 {
            for m in 0..3 {
                assert_relative_eq!(a.plane[v][m].to_degrees(), 60.0, epsilon = 1e-12);
            }
        }
        for e in 0..6 {
            assert_relative_eq!(a.dihedral[e], (1.0f64 / 3.0).acos(), epsilon = 1e-12);
        }
        let ratios = r_over_circumradius(&Theta5::regular()).unwrap();
        for e in 1..6 {
            assert_relative_eq!(ratios[e], ratios[0], epsilon = 1e-14);
        }
    }

    #[test]
    fn triangle_sum_violation_is_infeasible() {
        let t5 = Theta5::from_degrees([100.0, 60.0, 85.0, 60.0, 60.0]);
        assert!(matches!(reconstruct_from_theta5(&t5), Err(QfvmError::InfeasibleTheta5(_))));
    }

    #[test]
    fn spherical_triangle_violation_is_infeasible() {
        // b3 > b1 + b2 cannot close a trihedral angle at P2.
        let t5 = Theta5::from_degrees([60.0, 60.0, 30.0, 30.0, 70.0]);
        assert!(matches!(reconstruct_from_theta5(&t5), Err(QfvmError::InfeasibleTheta5(_))));
    }

    fn arb_tet() -> impl Strategy<Value = Tet> {
        any::<u64>().prop_map(|s| random_tet(&mut ChaCha8Rng::seed_from_u64(s), 40.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gradients_sum_to_zero_and_cotangent_identities(tet in arb_tet()) {
            let g = TetGeometry::new(&tet).unwrap();
            let sum = g.grad_l.iter().fold(Vec3::zeros(), |a, b| a + b);
            let scale = g.grad_l.iter().map(|v| v.norm()).fold(0.0, f64::max);
            prop_assert!(sum.norm() <= 1e-12 * scale);
            let six_k = 6.0 * g.volume;
            for (e, &(j, k)) in EDGES.iter().enumerate() {
                let (a, b) = complement(j, k);
                let lhs = six_k * g.grad_l[a].dot(&g.grad_l[b]);
                prop_assert!((lhs + g.r[e]).abs() <= 1e-12 * g.h.max(g.r[e].abs()) * 10.0);
            }
            for i in 0..4 {
                let lhs = six_k * g.grad_l[i].norm_squared();
                prop_assert!((lhs - g.big_r[i]).abs() <= 1e-12 * lhs.abs() * 10.0);
            }
        }

        #[test]
        fn volume_from_two_faces(tet in arb_tet()) {
            let g = TetGeometry::new(&tet).unwrap();
            for (e, &(j, k)) in EDGES.iter().enumerate() {
                let (a, b) = complement(j, k);
                let rhs = 2.0 * g.face_areas[a] * g.face_areas[b] * g.dihedral[e].sin() / g.edge_lengths[e];
                prop_assert!((3.0 * g.volume - rhs).abs() <= 1e-12 * rhs);
            }
        }

        #[test]
        fn theta5_round_trip(tet in arb_tet()) {
            let g = TetGeometry::new(&tet).unwrap();
            let a = reconstruct_from_theta5(&g.theta5()).unwrap();
            for v in 0..4 {
                for m in 0..3 {
                    prop_assert!((a.plane[v][m] - g.plane_angles[v][m]).abs() < 1e-10);
                }
            }
            for e in 0..6 {
                prop_assert!((a.dihedral[e] - g.dihedral[e]).abs() < 1e-10);
            }
        }

        #[test]
        fn ratios_match_coordinates(tet in arb_tet()) {
            let g = TetGeometry::new(&tet).unwrap();
            let ratios = r_over_circumradius(&g.theta5()).unwrap();
            let scale = g.r.iter().map(|v| v.abs()).fold(0.0, f64::max) / g.circumradius;
            for e in 0..6 {
                let expect = g.r[e] / g.circumradius;
                prop_assert!((ratios[e] - expect).abs() <= 1e-9 * scale, "{} vs {}", ratios[e], expect);
            }
        }

        #[test]
        fn edge_length_over_circumradius(tet in arb_tet()) {
            let g = TetGeometry::new(&tet).unwrap();
            let angles = AngleSet { plane: g.plane_angles, dihedral: g.dihedral };
            for (e, &(j, k)) in EDGES.iter().enumerate() {
                let (a, b) = complement(j, k);
                let th = g.dihedral[e];
                let ca = 1.0 / angles.plane_at(a, j, k).tan();
                let cb = 1.0 / angles.plane_at(b, j, k).tan();
                let len = 2.0 * g.circumradius * th.sin()
                    / (th.sin().powi(2) + ca * ca + cb * cb - 2.0 * ca * cb * th.cos()).sqrt();
                prop_assert!((len - g.edge_lengths[e]).abs() <= 1e-9 * g.edge_lengths[e]);
            }
        }

        #[test]
        fn ratios_scale_invariant(tet in arb_tet(), s in 0.01f64..100.0) {
            let a = r_over_circumradius(&TetGeometry::new(&tet).unwrap().theta5()).unwrap();
            let b = r_over_circumradius(&TetGeometry::new(&tet.scaled(s)).unwrap().theta5()).unwrap();
            for e in 0..6 {
                prop_assert!((a[e] - b[e]).abs() <= 1e-9 * a[e].abs().max(1.0));
            }
        }

        #[test]
        fn v_angle_invariances(tet in arb_tet(), s in 0.01f64..100.0) {
            let g = TetGeometry::new(&tet).unwrap();
            let gs = TetGeometry::new(&tet.scaled(s)).unwrap();
            // Relabel P2 <-> P3: the incident-edge order at P1 changes, the V-angle does not.
            let swapped = Tet { p: [tet.p[0], tet.p[2], tet.p[1], tet.p[3]] };
            let gw = TetGeometry::new(&swapped).unwrap();
            prop_assert!((g.v_angle(0) - gw.v_angle(0)).abs() < 1e-12);
            prop_assert!((g.min_v_angle() - gs.min_v_angle()).abs() < 1e-12);
            prop_assert!(g.min_v_angle() > 0.0 && g.min_v_angle() <= std::f64::consts::FRAC_PI_3 + 1e-12);
        }
    }
}
