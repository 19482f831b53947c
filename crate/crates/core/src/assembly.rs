//! Element flux matrices, dual-cell right-hand sides and global assembly.
//!
//! `a[m][n] = -∫ κ ∇φ_n · n dS` over the interior part of the boundary of
//! dual cell `m`, with `n` the outward normal of that cell. Rows are test
//! cells, columns are trial basis functions.

use nalgebra::SVector;
use rayon::prelude::*;

use crate::dual::{cell_integrals, DualComplex};
use crate::error::{QfvmError, Result};
use crate::geometry::{complement, TetGeometry, Vec3, MIDPOINT_NODES};
use crate::mesh::Mesh;
use crate::quadrature::triangle_rule;
use crate::scheme::{Mat10, SchemeConstants, SchemeParams};
use crate::solver::CsrMatrix;

pub type ElementMatrix = Mat10;
pub type Vec10 = SVector<f64, 10>;

/// Diffusion coefficient `κ`.
#[derive(Clone, Copy)]
pub enum Diffusion<'a> {
    Constant(f64),
    Field(&'a (dyn Fn(&Vec3) -> f64 + Sync)),
}

impl Diffusion<'_> {
    pub fn eval(&self, x: &Vec3) -> Result<f64> {
        let v = match self {
            Diffusion::Constant(c) => *c,
            Diffusion::Field(f) => f(x),
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(QfvmError::Coefficient { value: v, x: x.x, y: x.y, z: x.z })
        }
    }
}

/// Quadratic Lagrange basis function of local node `node` at barycentric `l`.
pub fn basis_eval(node: usize, l: &[f64; 4]) -> f64 {
    if node < 4 {
        l[node] * (2.0 * l[node] - 1.0)
    } else {
        let (j, k) = MIDPOINT_NODES[node - 4];
        4.0 * l[j] * l[k]
    }
}

pub fn basis_grad(geom: &TetGeometry, node: usize, l: &[f64; 4]) -> Vec3 {
    let g = &geom.grad_l;
    if node < 4 {
        g[node] * (4.0 * l[node] - 1.0)
    } else {
        let (j, k) = MIDPOINT_NODES[node - 4];
        (g[k] * l[j] + g[j] * l[k]) * 4.0
    }
}

/// `6|K| Δφ_n`; constant on `K`.
pub fn laplacian_vector(geom: &TetGeometry) -> Vec10 {
    let mut v = Vec10::zeros();
    for i in 0..4 {
        v[i] = 4.0 * geom.big_r[i];
    }
    for (m, &(j, k)) in MIDPOINT_NODES.iter().enumerate() {
        let (a, b) = complement(j, k);
        v[4 + m] = -8.0 * geom.r_edge(a, b);
    }
    v
}

/// Cell volumes over `6|K|`.
pub fn volume_vector(params: &SchemeParams) -> Vec10 {
    let abg = params.alpha * params.beta * params.gamma;
    Vec10::from_fn(|i, _| if i < 4 { abg / 6.0 } else { (1.0 - 4.0 * abg) / 36.0 })
}

/// Boundary part `A(m, n) = ∫_{∂K ∩ D_m} ∇φ_n · n dS`, linear in `r`, `R`.
pub fn boundary_flux_matrix(geom: &TetGeometry, c: &SchemeConstants) -> Mat10 {
    let (t1, t2, t3, t4) = (c.t1, c.t2, c.t3, c.t4);
    let r = |a: usize, b: usize| geom.r_edge(a, b);
    let rr = |i: usize| geom.big_r[i];
    let opp = |j: usize, k: usize| {
        let (a, b) = complement(j, k);
        r(a, b)
    };
    let mut a = Mat10::zeros();

    for m in 0..4 {
        for n in 0..4 {
            a[(m, n)] = if m == n { (3.0 * t1 - 2.0 * t2) * rr(m) } else { 4.0 * t2 * rr(n) + (t1 - 2.0 * t2) * opp(m, n) };
        }
    }
    for (mm, &(j, k)) in MIDPOINT_NODES.iter().enumerate() {
        for i in 0..4 {
            let on_edge = i == j || i == k;
            // Vertex row i, midpoint column jk.
            let a2 = if on_edge {
                t2 * rr(i) - (t1 + t2) * opp(j, k)
            } else {
                -t2 * (rr(j) + rr(k) - r(i, j) - r(i, k))
            };
            a[(i, 4 + mm)] = 4.0 * a2;
            // Midpoint row jk, vertex column i.
            a[(4 + mm, i)] = if on_edge {
                (2.0 * t3 - t4) * (rr(i) - opp(j, k))
            } else {
                (2.0 * t3 + t4) * rr(i) - (2.0 * t3 - 3.0 * t4) * r(j, k)
            };
        }
        for (nn, &(p, q)) in MIDPOINT_NODES.iter().enumerate() {
            let shared = [j, k].into_iter().find(|&s| s == p || s == q);
            let a4 = if mm == nn {
                let (x, y) = complement(j, k);
                t3 * (rr(x) + rr(y) - 2.0 * r(j, k))
            } else if let Some(s) = shared {
                let jo = if j == s { k } else { j };
                let po = if p == s { q } else { p };
                t4 * r(jo, po) - t3 * (rr(po) - r(j, k))
            } else {
                let (x, y) = complement(j, k);
                -t4 * (rr(x) + rr(y))
            };
            a[(4 + mm, 4 + nn)] = 4.0 * a4;
        }
    }
    a
}

/// `A_{K,1} = A - v1 v2^T` for `κ ≡ 1`.
pub fn element_matrix_closed_form(geom: &TetGeometry, params: &SchemeParams) -> ElementMatrix {
    let c = params.constants();
    boundary_flux_matrix(geom, &c) - volume_vector(params) * laplacian_vector(geom).transpose()
}

/// Flux matrix by surface quadrature over the 24 interfaces.
pub fn element_matrix_quadrature(
    geom: &TetGeometry,
    complex: &DualComplex,
    kappa: &Diffusion<'_>,
    degree: usize,
) -> Result<ElementMatrix> {
    let rule = triangle_rule(degree)?;
    let mut a = Mat10::zeros();
    for face in &complex.internal_faces {
        let mut flux = Vec10::zeros();
        for t in &face.triangles {
            let n = t.area_vector();
            for (bl, w) in rule.points.iter().zip(&rule.weights) {
                let x = t.point_at(bl);
                let k = kappa.eval(&x)? * w;
                let l = geom.barycentric(&x);
                for node in 0..10 {
                    flux[node] += k * basis_grad(geom, node, &l).dot(&n);
                }
            }
        }
        for node in 0..10 {
            a[(face.left, node)] -= flux[node];
            a[(face.right, node)] += flux[node];
        }
    }
    Ok(a)
}

/// `∭_{D_m} f` for each local node `m`.
pub fn rhs_element(complex: &DualComplex, f: &(dyn Fn(&Vec3) -> f64 + Sync), degree: usize) -> Result<Vec10> {
    Ok(Vec10::from(cell_integrals(complex, degree, f)?))
}

#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions {
    pub surface_degree: usize,
    pub volume_degree: usize,
    /// Replace boundary rows by identity rows with zero right-hand side.
    pub dirichlet: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { surface_degree: 5, volume_degree: 5, dirichlet: true }
    }
}

#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<bool>,
}

/// Element contributions in element order; constant `κ` uses the closed form.
pub fn element_contributions(
    mesh: &Mesh,
    params: &SchemeParams,
    kappa: &Diffusion<'_>,
    f: &(dyn Fn(&Vec3) -> f64 + Sync),
    opts: &AssemblyOptions,
) -> Result<Vec<(ElementMatrix, Vec10)>> {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = mesh.element_geometry(e)?;
            let complex = DualComplex::new(&geom.tet, params)?;
            let a = match kappa {
                Diffusion::Constant(c) => {
                    kappa.eval(&geom.tet.centroid())?;
                    element_matrix_closed_form(&geom, params) * *c
                }
                Diffusion::Field(_) => element_matrix_quadrature(&geom, &complex, kappa, opts.surface_degree)?,
            };
            Ok((a, rhs_element(&complex, f, opts.volume_degree)?))
        })
        .collect()
}

/// Global system. Element work runs in parallel; the scatter is sequential in
/// element order, so entries are bit-reproducible for any thread count.
pub fn assemble(
    mesh: &Mesh,
    params: &SchemeParams,
    kappa: &Diffusion<'_>,
    f: &(dyn Fn(&Vec3) -> f64 + Sync),
    opts: &AssemblyOptions,
) -> Result<GlobalSystem> {
    let n = mesh.num_nodes();
    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element_nodes(e);
        for &row in nodes {
            pattern[row].extend_from_slice(nodes);
        }
    }
    let mut matrix = CsrMatrix::from_pattern(n, pattern);
    let mut rhs = vec![0.0; n];

    for (e, (a, b)) in element_contributions(mesh, params, kappa, f, opts)?.into_iter().enumerate() {
        let nodes = mesh.element_nodes(e);
        for (m, &row) in nodes.iter().enumerate() {
            rhs[row] += b[m];
            for (k, &col) in nodes.iter().enumerate() {
                *matrix.entry_mut(row, col).expect("pattern covers element") += a[(m, k)];
            }
        }
    }

    let dirichlet = mesh.boundary_flags().to_vec();
    if opts.dirichlet {
        for (row, &bc) in dirichlet.iter().enumerate() {
            if bc {
                matrix.set_identity_row(row);
                rhs[row] = 0.0;
            }
        }
    }
    Ok(GlobalSystem { matrix, rhs, dirichlet })
}
