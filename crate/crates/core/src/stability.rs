//! Local stability of the element bilinear form and the `v*` search.
//!
//! The direct route checks `(1/h) sym(T^T A_{K,λ} T)`; the reduced route
//! checks the blocks `M` and `N` obtained after a congruence that decouples
//! them whenever the surface orthogonality residual `s*` vanishes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{Matrix3, SMatrix, SVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::element_matrix_closed_form;
use crate::error::{QfvmError, Result};
use crate::geometry::{edge_index, r_over_circumradius_from_angles, reconstruct_from_theta5, TetGeometry, Theta5};
use crate::scheme::{lambda_range, mapping_matrix_s, Mat10, SchemeConstants, SchemeParams};

pub type Mat3 = Matrix3<f64>;
pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Mat9x10 = SMatrix<f64, 9, 10>;
pub type Mat10x9 = SMatrix<f64, 10, 9>;

/// `|s*|` below this counts as surface-orthogonal.
pub const S_STAR_TOL: f64 = 1e-12;
/// Positive definite means `λ_min > PD_REL_TOL · ‖X‖_F`.
pub const PD_REL_TOL: f64 = 1e-12;

#[rustfmt::skip]
const G_ROWS: [f64; 90] = [
    -1., 0., 0., -3., 0., 0., 0., 4., 0., 0.,
    0., -1., 0., -3., 0., 0., 0., 0., 4., 0.,
    0., 0., -1., -3., 0., 0., 0., 0., 0., 4.,
    2., 0., 0., 2., 0., 0., 0., -4., 0., 0.,
    0., 2., 0., 2., 0., 0., 0., 0., -4., 0.,
    0., 0., 2., 2., 0., 0., 0., 0., 0., -4.,
    0., 0., 0., 4., 4., 0., 0., 0., -4., -4.,
    0., 0., 0., 4., 0., 4., 0., -4., 0., -4.,
    0., 0., 0., 4., 0., 0., 4., -4., -4., 0.,
];

#[rustfmt::skip]
const T_ROWS_X40: [f64; 90] = [
    30., -10., -10., 33., -7., -7., -1., -1., -1.,
    -10., 30., -10., -7., 33., -7., -1., -1., -1.,
    -10., -10., 30., -7., -7., 33., -1., -1., -1.,
    -10., -10., -10., -7., -7., -7., -1., -1., -1.,
    -10., 10., 10., -7., 3., 3., 9., -1., -1.,
    10., -10., 10., 3., -7., 3., -1., 9., -1.,
    10., 10., -10., 3., 3., -7., -1., -1., 9.,
    10., -10., -10., 3., -7., -7., -1., -1., -1.,
    -10., 10., -10., -7., 3., -7., -1., -1., -1.,
    -10., -10., 10., -7., -7., 3., -1., -1., -1.,
];

#[rustfmt::skip]
const W_ROWS_X120: [f64; 81] = [
    20., 0., 0., 10., 0., 0., 0., 5., 5.,
    0., 20., 0., 0., 10., 0., 5., 0., 5.,
    0., 0., 20., 0., 0., 10., 5., 5., 0.,
    10., 0., 0., 8., 0., 0., 0., 2., 2.,
    0., 10., 0., 0., 8., 0., 2., 0., 2.,
    0., 0., 10., 0., 0., 8., 2., 2., 0.,
    0., 5., 5., 0., 2., 2., 4., 1., 1.,
    5., 0., 5., 2., 0., 2., 1., 4., 1.,
    5., 5., 0., 2., 2., 0., 1., 1., 4.,
];

#[rustfmt::skip]
const C1_LOWER: [f64; 36] = [
    1., 0., 0., 0., 0., 0.,
    -1., 1., 0., 0., 0., 0.,
    0., -1., 1., 0., 0., 0.,
    0., 0., 1., 1., 0., 0.,
    0., -2., 2., -1., 1., 0.,
    0., 2., 0., 0., -1., 1.,
];

/// Gradient extraction `G`, its pseudo-inverse `T` and the Gram matrix `W`.
///
/// `G u_K` lists the nine edge derivatives of the quadratic on the reference
/// element; `G 1 = 0` and `T G = E - 1/10`.
#[derive(Clone, Debug)]
pub struct StabilityKit {
    pub g: Mat9x10,
    pub t: Mat10x9,
    pub w: Mat9,
}

pub fn build_kit() -> StabilityKit {
    StabilityKit {
        g: Mat9x10::from_row_slice(&G_ROWS),
        t: Mat10x9::from_row_slice(&T_ROWS_X40) / 40.0,
        w: Mat9::from_row_slice(&W_ROWS_X120) / 120.0,
    }
}

pub fn kit() -> &'static StabilityKit {
    static KIT: OnceLock<StabilityKit> = OnceLock::new();
    KIT.get_or_init(build_kit)
}

/// Congruence used in the regular-tetrahedron determinant identities.
pub fn c1_matrix() -> Mat9 {
    let mut c = Mat9::identity();
    let lower = SMatrix::<f64, 6, 6>::from_row_slice(&C1_LOWER);
    c.fixed_view_mut::<6, 6>(3, 3).copy_from(&lower);
    c
}

/// Congruence `C2(η1, η2)`; `C2 B̄ C2^T` is block diagonal for the tuned `η`.
pub fn c2_matrix(eta1: f64, eta2: f64) -> Mat9 {
    let mut c = Mat9::identity();
    c.fixed_view_mut::<3, 3>(3, 0).copy_from(&(Mat3::identity() * eta1));
    c.fixed_view_mut::<3, 3>(6, 0).copy_from(&(c3() * eta2));
    c
}

/// `(η1, η2)` that cancel the off-diagonal blocks when `s* = 0`.
pub fn etas(c: &SchemeConstants) -> (f64, f64) {
    let q = 2.0 * c.s2 + c.s3;
    (q / (4.0 * c.s1) - 0.75, -q / (8.0 * c.s1) - 0.125)
}

/// `h_K ‖G u_K‖²`, equivalent to `|u_h|²_{1,K}` on shape-regular elements.
pub fn discrete_norm(geom: &TetGeometry, u: &SVector<f64, 10>) -> f64 {
    geom.h * (kit().g * u).norm_squared()
}

/// The edge quantities `r_jk` and `R_i` that every symbolic block is linear in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCotangents {
    /// `EDGES` order: r12, r13, r14, r23, r24, r34.
    pub r: [f64; 6],
    pub big_r: [f64; 4],
}

impl EdgeCotangents {
    pub fn from_r(r: [f64; 6]) -> EdgeCotangents {
        // R_i sums the edges of the face opposite P_i.
        let big_r = [r[3] + r[4] + r[5], r[1] + r[2] + r[5], r[0] + r[2] + r[4], r[0] + r[1] + r[3]];
        EdgeCotangents { r, big_r }
    }

    pub fn from_geometry(geom: &TetGeometry) -> EdgeCotangents {
        EdgeCotangents { r: geom.r, big_r: geom.big_r }
    }

    /// 1-based edge lookup to keep the block formulas readable.
    fn e(&self, j: usize, k: usize) -> f64 {
        self.r[edge_index(j - 1, k - 1)]
    }

    fn rr(&self, i: usize) -> f64 {
        self.big_r[i - 1]
    }
}

pub fn c3() -> Mat3 {
    Mat3::new(0., 1., 1., 1., 0., 1., 1., 1., 0.)
}

pub fn m_block(e: &EdgeCotangents) -> Mat3 {
    Mat3::new(
        e.rr(1), -e.e(3, 4), -e.e(2, 4),
        -e.e(3, 4), e.rr(2), -e.e(1, 4),
        -e.e(2, 4), -e.e(1, 4), e.rr(3),
    )
}

fn j1(e: &EdgeCotangents) -> Mat3 {
    let row = [e.rr(1), e.rr(2), e.rr(3)];
    Mat3::from_fn(|_, c| row[c])
}

fn j2(e: &EdgeCotangents) -> Mat3 {
    let row = [e.e(1, 4), e.e(2, 4), e.e(3, 4)];
    Mat3::from_fn(|_, c| row[c])
}

fn q1(e: &EdgeCotangents) -> Mat3 {
    Mat3::new(
        -2.0 * e.rr(1), e.e(1, 3) + e.e(1, 4), e.e(1, 2) + e.e(1, 4),
        e.e(2, 3) + e.e(2, 4), -2.0 * e.rr(2), e.e(1, 2) + e.e(2, 4),
        e.e(2, 3) + e.e(3, 4), e.e(1, 3) + e.e(3, 4), -2.0 * e.rr(3),
    )
}

fn q2(e: &EdgeCotangents) -> Mat3 {
    let (a, b, c) = (e.e(1, 4), e.e(2, 4), e.e(3, 4));
    Mat3::new(
        -2.0 * a - b - c, e.rr(1) + b, e.rr(1) + c,
        e.rr(2) + a, -a - 2.0 * b - c, e.rr(2) + c,
        e.rr(3) + a, e.rr(3) + b, -a - b - 2.0 * c,
    )
}

fn d_blocks(e: &EdgeCotangents) -> [Mat3; 4] {
    [
        Mat3::from_diagonal(&[e.rr(1), e.rr(2), e.rr(3)].into()),
        Mat3::from_diagonal(&[e.e(1, 4), e.e(2, 4), e.e(3, 4)].into()),
        Mat3::from_diagonal(&[e.e(2, 3), e.e(1, 3), e.e(1, 2)].into()),
        Mat3::new(0., e.e(1, 2), e.e(1, 3), e.e(1, 2), 0., e.e(2, 3), e.e(1, 3), e.e(2, 3), 0.),
    ]
}

/// Lower blocks `L1..L4` of `T^T S A T`.
pub fn l_blocks(e: &EdgeCotangents, c: &SchemeConstants) -> [Mat3; 4] {
    let (s1, s2, s3, ss) = (c.s1, c.s2, c.s3, c.s_star);
    let (m, cc) = (m_block(e), c3());
    let (j1, j2, q1, q2) = (j1(e), j2(e), q1(e), q2(e));
    let [d1, d2, d3, d4] = d_blocks(e);
    [
        m * (s1 / 2.0 - (s2 + s3) / 2.0) + j1 * (3.0 * s1 / 20.0 - (s2 + s3) / 2.0) + d1 * s3 + q1 * (ss / 2.0),
        (m * cc) * (s1 / 4.0 - (s2 + s3) / 4.0) - j2 * (3.0 * s1 / 20.0 - s2 / 2.0) + d2 * (s3 / 2.0) + q2 * (ss / 4.0),
        (cc * m) * (s2 / 2.0) - j1 * (s1 / 20.0) + d1 * (s2 / 2.0) - d3 * ((s2 - s3) / 2.0),
        (cc * m * cc) * (s2 / 4.0) + j2 * (s1 / 20.0 - s2 / 4.0) + d2 * (s2 / 4.0) - d4 * ((s2 - s3) / 4.0),
    ]
}

/// Lower-right block of `C2 B̄ C2^T` for the given `η`, from the symbolic blocks.
pub fn n_block_with(e: &EdgeCotangents, c: &SchemeConstants, eta1: f64, eta2: f64) -> Mat6 {
    let (s0, s1, ss) = (c.s0, c.s1, c.s_star);
    let q = 2.0 * c.s2 + c.s3;
    let (m, cc) = (m_block(e), c3());
    let [l1, l2, l3, l4] = l_blocks(e, c);
    let (j1, j2, q1, q2) = (j1(e), j2(e), q1(e), q2(e));

    let lt1 = l1 + m * (((1.5 + eta1) * s1 - q / 2.0) * eta1) + q1 * (ss / 2.0 * eta1);
    let lt2 = l2 + (m * cc) * (s1 / 4.0 * eta1 + ((1.0 + eta1) * s1 - q / 2.0) * eta2) + q2 * (ss / 4.0 * eta1);
    let lt3 = l3 + (cc * m) * (s1 / 2.0 * eta2 + (eta2 * s1 + q / 4.0) * eta1) + (cc * q1) * (ss / 2.0 * eta2);
    let lt4 = l4 + (cc * m * cc) * (s1 / 4.0 * eta2 + (eta2 * s1 + q / 4.0) * eta2) + (cc * q2) * (ss / 4.0 * eta2);

    let x1 = lt1 - j1 * (6.0 * s0);
    let y = lt2 + j2 * (6.0 * s0);
    let z = lt3 + j1 * (2.0 * s0);
    let x4 = lt4 - j2 * (2.0 * s0);

    let mut n = Mat6::zeros();
    n.fixed_view_mut::<3, 3>(0, 0).copy_from(&((x1 + x1.transpose()) / 2.0));
    n.fixed_view_mut::<3, 3>(0, 3).copy_from(&((y + z.transpose()) / 2.0));
    n.fixed_view_mut::<3, 3>(3, 0).copy_from(&((z + y.transpose()) / 2.0));
    n.fixed_view_mut::<3, 3>(3, 3).copy_from(&((x4 + x4.transpose()) / 2.0));
    n
}

/// `N^{K,λ}` at the decoupling `η`.
pub fn n_block(e: &EdgeCotangents, c: &SchemeConstants) -> Mat6 {
    let (eta1, eta2) = etas(c);
    n_block_with(e, c, eta1, eta2)
}

fn require_surface_orthogonal(c: &SchemeConstants) -> Result<()> {
    if c.s_star.abs() > S_STAR_TOL {
        return Err(QfvmError::Domain(format!(
            "the block reduction needs s* = 0 (surface orthogonality); s* = {:e}",
            c.s_star
        )));
    }
    Ok(())
}

/// `Ñ(Θ5)`: `N` with every `r_jk` replaced by `r_jk / R_K`.
pub fn n_tilde(t5: &Theta5, params: &SchemeParams) -> Result<Mat6> {
    let c = params.constants();
    require_surface_orthogonal(&c)?;
    let angles = reconstruct_from_theta5(t5)?;
    Ok(n_block(&EdgeCotangents::from_r(r_over_circumradius_from_angles(&angles)), &c))
}

/// Smallest eigenvalue of a symmetric matrix and the PD verdict.
pub fn pd_check<const D: usize>(x: &SMatrix<f64, D, D>) -> (f64, bool) {
    let d = nalgebra::DMatrix::from_column_slice(D, D, x.as_slice());
    let min = d.symmetric_eigenvalues().min();
    (min, min > PD_REL_TOL * x.norm())
}

#[derive(Clone, Debug)]
pub struct ElementStability {
    /// `S A_{K,1}`.
    pub a_lambda: Mat10,
    /// `T^T A_{K,λ} T`.
    pub b: Mat9,
    pub b_bar: Mat9,
    pub m: Mat3,
    /// Present only when `s* = 0`.
    pub n: Option<Mat6>,
    /// `λ_min((1/h) B̄)`.
    pub min_eig_direct: f64,
    pub stable_direct: bool,
    /// `PD(M) && PD(N)`; `None` when `s* != 0`.
    pub stable_reduced: Option<bool>,
}

impl ElementStability {
    pub fn is_stable(&self) -> bool {
        self.stable_direct
    }
}

pub fn element_stability(geom: &TetGeometry, params: &SchemeParams) -> Result<ElementStability> {
    let k = kit();
    let c = params.constants();
    let a_lambda = mapping_matrix_s(params.lambda)? * element_matrix_closed_form(geom, params);
    let b = k.t.transpose() * a_lambda * k.t;
    let b_bar = (b + b.transpose()) / 2.0;
    let (min_eig_direct, stable_direct) = pd_check(&(b_bar / geom.h));

    let e = EdgeCotangents::from_geometry(geom);
    let m = m_block(&e);
    let (n, stable_reduced) = if c.s_star.abs() <= S_STAR_TOL {
        let n = n_block(&e, &c);
        let ok = pd_check(&(m / geom.h)).1 && pd_check(&(n / geom.h)).1;
        (Some(n), Some(ok))
    } else {
        (None, None)
    };
    Ok(ElementStability { a_lambda, b, b_bar, m, n, min_eig_direct, stable_direct, stable_reduced })
}

/// Leading principal minors `1..=9` of `C1^T (1/h) B̄ C1`.
pub fn leading_minors(geom: &TetGeometry, params: &SchemeParams) -> Result<[f64; 9]> {
    let st = element_stability(geom, params)?;
    let c1 = c1_matrix();
    let x = c1.transpose() * (st.b_bar / geom.h) * c1;
    let mut out = [0.0; 9];
    for (k, o) in out.iter_mut().enumerate() {
        *o = x.view((0, 0), (k + 1, k + 1)).clone_owned().determinant();
    }
    Ok(out)
}

/// Membership of `Θ5` (radians) in `Q_v` (radians).
pub fn q_v_membership(t5: &Theta5, v: f64) -> bool {
    q_v_ratios(t5, v).is_some()
}

/// Ratios `r_jk / R_K` when `Θ5 ∈ Q_v`.
fn q_v_ratios(t5: &Theta5, v: f64) -> Option<[f64; 6]> {
    use std::f64::consts::PI;
    let [a1, a2, b1, b2, b3] = t5.0;
    if t5.0.iter().any(|&x| !(x > 0.0)) || a1 + b1 >= PI || a2 + b2 >= PI || b1 + b2 + b3 >= 2.0 * PI {
        return None;
    }
    let angles = reconstruct_from_theta5(t5).ok()?;
    // Grid points sit exactly on the boundary of Q_v.
    if angles.v_angles().iter().any(|&va| !(va >= v - 1e-12)) {
        return None;
    }
    let r = r_over_circumradius_from_angles(&angles);
    r.iter().all(|x| x.is_finite()).then_some(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct VStarOptions {
    /// Increasing division numbers `N_n`.
    pub primes: Vec<usize>,
    /// Bisection stops when the bracket is at most this wide (degrees).
    pub precision: f64,
}

impl Default for VStarOptions {
    fn default() -> Self {
        VStarOptions { primes: vec![3, 5, 7, 11, 13, 17], precision: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BisectionStep {
    /// Degrees.
    pub v: f64,
    pub accepted: bool,
    /// `(N_n, Θ5 in degrees)` of the first violation in grid order.
    pub violation: Option<(usize, [f64; 5])>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VStarResult {
    /// Degrees; the upper bisection bound.
    pub vstar: f64,
    pub steps: Vec<BisectionStep>,
}

/// Members of `P_v^(N) ∩ Q_v` as `(grid index, r / R_K)`, in grid order.
type GridMembers = Arc<Vec<(usize, [f64; 6])>>;

/// Memoises `P_v^(N) ∩ Q_v` across searches that revisit the same `v`
/// (for example a sweep over `λ`). Bounded by a member budget.
pub struct GridCache {
    map: Mutex<HashMap<(u64, usize), GridMembers>>,
    budget: usize,
    used: Mutex<usize>,
}

impl GridCache {
    /// `budget` is the total number of cached grid members.
    pub fn new(budget: usize) -> GridCache {
        GridCache { map: Mutex::new(HashMap::new()), budget, used: Mutex::new(0) }
    }

    fn members(&self, v_deg: f64, n: usize) -> Option<GridMembers> {
        self.map.lock().unwrap().get(&(v_deg.to_bits(), n)).cloned()
    }

    fn insert(&self, v_deg: f64, n: usize, members: GridMembers) {
        let mut used = self.used.lock().unwrap();
        if *used + members.len() <= self.budget {
            *used += members.len();
            self.map.lock().unwrap().insert((v_deg.to_bits(), n), members);
        }
    }
}

fn grid_point(v: f64, n: usize, idx: usize) -> Theta5 {
    let step = (180.0 - 3.0 * v) / n as f64;
    let mut rem = idx;
    let mut d = [0.0; 5];
    for x in d.iter_mut().rev() {
        *x = v + step * (rem % (n + 1)) as f64;
        rem /= n + 1;
    }
    Theta5::from_degrees(d)
}

fn grid_members(v_deg: f64, n: usize) -> Vec<(usize, [f64; 6])> {
    let total = (n + 1).pow(5);
    let v = v_deg.to_radians();
    (0..total)
        .into_par_iter()
        .filter_map(|idx| q_v_ratios(&grid_point(v_deg, n, idx), v).map(|r| (idx, r)))
        .collect()
}

/// `Ñ` is linear in the six ratios; one basis matrix per edge.
fn n_basis(c: &SchemeConstants) -> [Mat6; 6] {
    std::array::from_fn(|e| {
        let mut r = [0.0; 6];
        r[e] = 1.0;
        n_block(&EdgeCotangents::from_r(r), c)
    })
}

fn det_positive(basis: &[Mat6; 6], r: &[f64; 6]) -> bool {
    let n = basis.iter().zip(r).fold(Mat6::zeros(), |acc, (b, &x)| acc + b * x);
    n.determinant() > 0.0
}

/// First violation of `det Ñ > 0` on `P_v^(N) ∩ Q_v`, in grid order.
fn first_violation(basis: &[Mat6; 6], v_deg: f64, n: usize, cache: Option<&GridCache>) -> Option<usize> {
    if let Some(cache) = cache {
        let members = cache.members(v_deg, n).unwrap_or_else(|| {
            let m = Arc::new(grid_members(v_deg, n));
            cache.insert(v_deg, n, m.clone());
            m
        });
        return members.par_iter().find_first(|(_, r)| !det_positive(basis, r)).map(|(i, _)| *i);
    }
    let v = v_deg.to_radians();
    (0..(n + 1).pow(5)).into_par_iter().find_first(|&idx| {
        q_v_ratios(&grid_point(v_deg, n, idx), v).is_some_and(|r| !det_positive(basis, &r))
    })
}

/// Bisection for `v*` on `(0°, 60°]`; requires `s* = 0` and `λ` inside its
/// admissible interval.
pub fn vstar_search(params: &SchemeParams, opts: &VStarOptions) -> Result<VStarResult> {
    vstar_search_cached(params, opts, None)
}

pub fn vstar_search_cached(params: &SchemeParams, opts: &VStarOptions, cache: Option<&GridCache>) -> Result<VStarResult> {
    let c = params.constants();
    require_surface_orthogonal(&c)?;
    let (lo, hi) = lambda_range(params.alpha, params.beta)?;
    if !(params.lambda > lo && params.lambda < hi) {
        return Err(QfvmError::Domain(format!(
            "lambda = {} outside the admissible interval ({lo:.6}, {hi:.6})",
            params.lambda
        )));
    }
    if !(opts.precision > 0.0) {
        return Err(QfvmError::Argument(format!("precision {} must be positive", opts.precision)));
    }
    if opts.primes.is_empty() || opts.primes.iter().any(|&p| p == 0) || opts.primes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QfvmError::Argument(format!("division numbers {:?} must be positive and increasing", opts.primes)));
    }

    let basis = n_basis(&c);
    let (mut t0, mut t1) = (0.0f64, 60.0f64);
    let mut steps = Vec::new();
    while t1 - t0 > opts.precision {
        let v = 0.5 * (t0 + t1);
        let violation = opts.primes.iter().find_map(|&n| {
            first_violation(&basis, v, n, cache).map(|idx| (n, grid_point(v, n, idx).0.map(f64::to_degrees)))
        });
        let accepted = violation.is_none();
        if accepted {
            t1 = v;
        } else {
            t0 = v;
        }
        steps.push(BisectionStep { v, accepted, violation });
    }
    Ok(VStarResult { vstar: t1, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::basis_grad;
    use crate::geometry::{random_tet, regular_tet, Tet, Vec3, MIDPOINT_NODES};
    use crate::quadrature::tet_rule;
    use crate::scheme::{default_lambda, Preset};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64 {
        m.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    fn qfvs1_default() -> SchemeParams {
        let p = Preset::Qfvs1.params();
        p.with_lambda(default_lambda(p.alpha, p.beta)).unwrap()
    }

    #[test]
    fn kit_identities() {
        let k = build_kit();
        let tg = k.t * k.g;
        let expect = SMatrix::<f64, 10, 10>::from_fn(|i, j| if i == j { 0.9 } else { -0.1 });
        assert!(max_abs(&(tg - expect)) < 1e-14);
        assert!(max_abs(&(k.t * k.g * k.t - k.t)) < 1e-14);
        assert!(max_abs(&(k.g * k.t * k.g - k.g)) < 1e-13);
        let gt = k.g * k.t;
        assert!(max_abs(&(gt - gt.transpose())) < 1e-14);
        assert!(max_abs(&(k.g * SVector::<f64, 10>::repeat(1.0))) == 0.0);
        assert!(k.w.symmetric_eigenvalues().min() > 0.0);
        assert_eq!(k.w, k.w.transpose());
    }

    #[test]
    fn w_is_gram_of_edge_derivatives() {
        // W = ∫ Σ w_i^T w_i over the unit reference simplex.
        let rule = tet_rule(2).unwrap();
        let mut w = Mat9::zeros();
        for (p, &wt) in rule.points.iter().zip(&rule.weights) {
            let (l1, l2, l3) = (p[0], p[1], p[2]);
            let rows = [
                [1., 0., 0., 2. * l1, 0., 0., 0., l3, l2],
                [0., 1., 0., 0., 2. * l2, 0., l3, 0., l1],
                [0., 0., 1., 0., 0., 2. * l3, l2, l1, 0.],
            ];
            for r in rows {
                let v = SVector::<f64, 9>::from_row_slice(&r);
                w += v * v.transpose() * (wt / 6.0);
            }
        }
        assert!(max_abs(&(w - kit().w)) < 1e-15);
    }

    #[test]
    fn g_extracts_reference_derivatives() {
        // G u for u = L1 (nodal values on vertices and midpoints).
        let mut u = SVector::<f64, 10>::zeros();
        u[0] = 1.0;
        for (m, &(j, k)) in MIDPOINT_NODES.iter().enumerate() {
            if j == 0 || k == 0 {
                u[4 + m] = 0.5;
            }
        }
        let gu = kit().g * u;
        assert_eq!(gu.as_slice(), &[1., 0., 0., 0., 0., 0., 0., 0., 0.]);
    }

    fn reference_tet() -> Tet {
        Tet::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::zeros()).unwrap()
    }

    fn h1_seminorm_sq(geom: &TetGeometry, u: &SVector<f64, 10>) -> f64 {
        let rule = tet_rule(2).unwrap();
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| {
                let g: Vec3 = (0..10).map(|n| basis_grad(geom, n, l) * u[n]).sum();
                w * g.norm_squared()
            })
            .sum::<f64>()
            * geom.volume
    }

    #[test]
    fn discrete_norm_regressions() {
        let g = TetGeometry::new(&reference_tet()).unwrap();
        assert_eq!(discrete_norm(&g, &SVector::repeat(3.0)), 0.0);
        let mut u = SVector::<f64, 10>::zeros();
        u[0] = 1.0;
        u[5] = 0.5;
        u[6] = 0.5;
        u[7] = 0.5;
        let exact = h1_seminorm_sq(&g, &u);
        assert!((exact - 1.0 / 6.0).abs() < 1e-14);
        // |L1|² = |K| = 1/6 while h‖G u‖² = √2: ratio 1/(6√2).
        assert!((discrete_norm(&g, &u) - 2f64.sqrt()).abs() < 1e-14);
        let s = TetGeometry::new(&reference_tet().scaled(3.0)).unwrap();
        assert!((discrete_norm(&s, &u) / discrete_norm(&g, &u) - 3.0).abs() < 1e-13);
        assert!((h1_seminorm_sq(&s, &u) / exact - 3.0).abs() < 1e-13);
    }

    #[test]
    fn regular_tet_stable_at_unit_lambda() {
        let g = TetGeometry::new(&regular_tet()).unwrap();
        let st = element_stability(&g, &Preset::Qfvs1.params().with_lambda(1.0).unwrap()).unwrap();
        assert!(st.stable_direct);
        assert_eq!(st.stable_reduced, Some(true));
    }

    #[test]
    fn reconstruction_and_quadratic_form() {
        let k = kit();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [Preset::Qfvs1, Preset::Qfvs3] {
            let params = p.params();
            for lambda in [1.0, default_lambda(params.alpha, params.beta)] {
                let params = params.with_lambda(lambda).unwrap();
                for _ in 0..20 {
                    let g = TetGeometry::new(&random_tet(&mut rng, 12.0)).unwrap();
                    let st = element_stability(&g, &params).unwrap();
                    let a = st.a_lambda;
                    let scale = max_abs(&a);
                    assert!(max_abs(&(k.g.transpose() * k.t.transpose() * a * k.t * k.g - a)) < 1e-12 * scale);
                    let ones = SVector::<f64, 10>::repeat(1.0);
                    assert!((a * ones).amax() < 1e-12 * scale);
                    assert!((ones.transpose() * a).amax() < 1e-12 * scale);
                    let u = SVector::<f64, 10>::from_fn(|_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
                    let lhs = (u.transpose() * a * u)[0];
                    let gu = k.g * u;
                    let rhs = (gu.transpose() * st.b_bar * gu)[0];
                    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(scale));
                }
            }
        }
    }

    #[test]
    fn symbolic_blocks_match_numeric_congruence() {
        // Independent route: C2 B̄ C2^T from the assembled element matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [Preset::Qfvs1, Preset::Qfvs2, Preset::Qfvs3, Preset::Qfvs4] {
            let params = p.params();
            let c = params.constants();
            let (e1, e2) = etas(&c);
            for _ in 0..25 {
                let g = TetGeometry::new(&random_tet(&mut rng, 15.0)).unwrap();
                let st = element_stability(&g, &params).unwrap();
                let c2 = c2_matrix(e1, e2);
                let x = c2 * st.b_bar * c2.transpose();
                let scale = max_abs(&st.b_bar);
                let m = x.fixed_view::<3, 3>(0, 0).clone_owned();
                assert!(max_abs(&(m - st.m * c.s1)) < 1e-12 * scale);
                assert!(max_abs(&x.fixed_view::<3, 6>(0, 3).clone_owned()) < 1e-12 * scale);
                let n = x.fixed_view::<6, 6>(3, 3).clone_owned();
                assert!(max_abs(&(n - st.n.unwrap())) < 1e-12 * scale, "{p}");
                assert_eq!(st.stable_direct, st.stable_reduced.unwrap());
            }
        }
    }

    #[test]
    fn symbolic_blocks_match_for_general_eta_and_s_star() {
        // Off the orthogonal manifold the η-dependent formulas still hold.
        let params = SchemeParams::new(0.3, 0.3, 0.25, 1.3).unwrap();
        let c = params.constants();
        assert!(c.s_star.abs() > 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (e1, e2) in [(0.0, 0.0), (0.3, -0.7), etas(&c)] {
            let g = TetGeometry::new(&random_tet(&mut rng, 10.0)).unwrap();
            let st = element_stability(&g, &params).unwrap();
            assert!(st.stable_reduced.is_none());
            let x = c2_matrix(e1, e2) * st.b_bar * c2_matrix(e1, e2).transpose();
            let n = x.fixed_view::<6, 6>(3, 3).clone_owned();
            let sym = n_block_with(&EdgeCotangents::from_geometry(&g), &c, e1, e2);
            assert!(max_abs(&(n - sym)) < 1e-12 * max_abs(&st.b_bar));
            if (e1, e2) == etas(&c) {
                assert!(max_abs(&x.fixed_view::<3, 6>(0, 3).clone_owned()) > 1e-6 * max_abs(&st.b_bar));
            }
        }
    }

    #[test]
    fn regular_tet_leading_minors() {
        let params = Preset::Qfvs1.params().with_lambda(1.0).unwrap();
        let c = params.constants();
        let g = TetGeometry::new(&regular_tet()).unwrap();
        let minors = leading_minors(&g, &params).unwrap();
        let cc = g.r[0] / g.h;
        assert!((cc - 1.0 / 8f64.sqrt()).abs() < 1e-14);
        let phi1 = 2.0 / 27.0 * (-3.0 * (2.0 * c.s2 + c.s3).powi(2) + (2.0 * c.s2 + 5.0 * c.s3) - 1.0 / 12.0);
        let phi2 = -240.0 * c.s0 - 20.0 * c.s2 - 10.0 * c.s3 + 1.0;
        let ab = params.alpha * params.beta;
        assert!((phi2 - 5.0 / 3.0 * ab * (3.0 - 4.0 * params.gamma) * params.lambda).abs() < 1e-14);
        assert!((phi1 - 0.0044964).abs() < 1e-6);
        assert!((phi2 - 0.2668028).abs() < 1e-6);
        let d = c.s2 - c.s3;
        let expect = [
            2.0 * cc.powi(3) / 27.0,
            cc.powi(4) * phi1,
            8.0 * cc.powi(5) * d * phi1,
            81.0 * cc.powi(6) / 4.0 * d * phi1 * phi1,
            243.0 * cc.powi(7) / 8.0 * d * d * phi1 * phi1,
            2187.0 * cc.powi(8) / 32.0 * d * d * phi1.powi(3),
            729.0 * cc.powi(9) / 1280.0 * d * d * phi1.powi(3) * phi2,
        ];
        for (k, e) in expect.iter().enumerate() {
            let got = minors[k + 2];
            assert!(((got - e) / e).abs() < 1e-9, "minor {}: {got} vs {e}", k + 3);
        }
    }

    #[test]
    fn stability_flips_outside_lambda_interval() {
        let p = Preset::Qfvs1.params();
        let g = TetGeometry::new(&regular_tet()).unwrap();
        let (lo, hi) = lambda_range(p.alpha, p.beta).unwrap();
        for (lambda, expect) in [(lo * 0.99, false), (lo * 1.01, true), (1.0, true), (hi * 0.99, true), (hi * 1.01, false), (3.1, false)] {
            let st = element_stability(&g, &p.with_lambda(lambda).unwrap()).unwrap();
            assert_eq!(st.stable_direct, expect, "lambda = {lambda}");
            assert_eq!(st.stable_reduced, Some(expect), "lambda = {lambda}");
        }
    }

    #[test]
    fn det_m_equals_six_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let g = TetGeometry::new(&random_tet(&mut rng, 20.0)).unwrap();
            let m = m_block(&EdgeCotangents::from_geometry(&g)) / g.h;
            let expect = 6.0 * g.volume / g.h.powi(3);
            assert!(((m.determinant() - expect) / expect).abs() < 1e-10);
            assert!(pd_check(&m).1);
        }
    }

    #[test]
    fn n_tilde_matches_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = qfvs1_default();
        let c = params.constants();
        for _ in 0..100 {
            let g = TetGeometry::new(&random_tet(&mut rng, 15.0)).unwrap();
            let direct = n_block(&EdgeCotangents::from_geometry(&g), &c);
            let scaled = n_tilde(&g.theta5(), &params).unwrap() * g.circumradius;
            assert!(max_abs(&(direct - scaled)) <= 1e-9 * direct.norm());
            let nt = n_tilde(&g.theta5(), &params).unwrap();
            assert_eq!(nt, nt.transpose());
        }
        assert!(pd_check(&n_tilde(&Theta5::regular(), &params).unwrap()).1);
        assert!(n_tilde(&Theta5::regular(), &SchemeParams::new(0.3, 0.3, 0.25, 1.0).unwrap()).is_err());
    }

    #[test]
    fn q_v_examples() {
        let reg = Theta5::regular();
        assert!(q_v_membership(&reg, 60f64.to_radians()));
        assert!(!q_v_membership(&reg, 61f64.to_radians()));
        let structured = crate::mesh::generate_structured(1).unwrap();
        let g = structured.element_geometry(0).unwrap();
        assert!(q_v_membership(&g.theta5(), 25f64.to_radians()));
        assert!(!q_v_membership(&g.theta5(), 26f64.to_radians()));
        assert!(!q_v_membership(&Theta5::from_degrees([100.0, 60.0, 90.0, 60.0, 60.0]), 1e-3));
    }

    #[test]
    fn grid_spans_the_angle_box() {
        let v = 20.0;
        assert_eq!(grid_point(v, 7, 0).0.map(f64::to_degrees).map(|x| (x * 1e9).round() / 1e9), [20.0; 5]);
        let last = grid_point(v, 7, 8usize.pow(5) - 1).0.map(f64::to_degrees);
        assert!(last.iter().all(|x| (x - 140.0).abs() < 1e-12));
    }

    #[test]
    fn vstar_rejects_bad_inputs() {
        let p = Preset::Qfvs1.params();
        assert!(vstar_search(&p.with_lambda(3.2).unwrap(), &VStarOptions::default()).is_err());
        let bad = VStarOptions { primes: vec![5, 3], precision: 0.1 };
        assert!(vstar_search(&p, &bad).is_err());
        assert!(vstar_search(&SchemeParams::new(0.3, 0.3, 0.25, 1.0).unwrap(), &VStarOptions::default()).is_err());
    }

    #[test]
    fn cached_search_matches_uncached() {
        let p = qfvs1_default();
        let opts = VStarOptions { primes: vec![3, 5, 7], precision: 0.5 };
        let cache = GridCache::new(1 << 22);
        let a = vstar_search(&p, &opts).unwrap();
        let b = vstar_search_cached(&p, &opts, Some(&cache)).unwrap();
        let c = vstar_search_cached(&p, &opts, Some(&cache)).unwrap();
        assert_eq!(a.vstar, b.vstar);
        assert_eq!(b.vstar, c.vstar);
        assert_eq!(format!("{:?}", a.steps), format!("{:?}", c.steps));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn stability_invariant_under_similarity(seed in 0u64..1000, s in 0.1f64..10.0, ax in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tet = random_tet(&mut rng, 10.0);
            let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vec3::new(1.0, 2.0, -0.5)), ax);
            let moved = Tet::from_points(tet.p.map(|x| rot * x * s + Vec3::new(0.3, -1.0, 2.0))).unwrap();
            let params = Preset::Qfvs2.params();
            let a = element_stability(&TetGeometry::new(&tet).unwrap(), &params).unwrap();
            let b = element_stability(&TetGeometry::new(&moved).unwrap(), &params).unwrap();
            prop_assert!((a.min_eig_direct - b.min_eig_direct).abs() < 1e-9 * a.min_eig_direct.abs().max(1e-3));
            prop_assert_eq!(a.stable_direct, b.stable_direct);
            prop_assert_eq!(a.stable_reduced, b.stable_reduced);
        }

        #[test]
        fn discrete_norm_ratio_bounded(seed in 0u64..5000) {
            // Empirical equivalence constants for h/ρ < 8; regression bounds, not sharp.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = TetGeometry::new(&random_tet(&mut rng, 8.0)).unwrap();
            let u = SVector::<f64, 10>::from_fn(|_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let ratio = h1_seminorm_sq(&g, &u) / discrete_norm(&g, &u);
            prop_assert!(ratio > 1e-3 && ratio < 1e3, "ratio {}", ratio);
        }
    }
}
