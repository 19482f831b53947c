//! Manufactured solutions, discrete error norms and convergence studies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble, basis_eval, basis_grad, AssemblyOptions, Diffusion};
use crate::error::{QfvmError, Result};
use crate::geometry::Vec3;
use crate::mesh::{audit, generate_structured, perturb, Mesh};
use crate::quadrature::tet_rule;
use crate::scheme::SchemeParams;
use crate::solver::{solve, SolveReport, SolverOptions};

/// Quadrature degree for the error integrals.
pub const NORM_DEGREE: usize = 6;

/// Closed-form test problems on the unit cube with `u = 0` on the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ManufacturedCase {
    /// `u = sin(πx) sin(πy) sin(πz)`, `κ = exp(x + 2y + 3z)`.
    ExpKappaSine,
    /// Same `u` with `κ ≡ 1`.
    PoissonSine,
}

impl ManufacturedCase {
    pub const ALL: [ManufacturedCase; 2] = [ManufacturedCase::ExpKappaSine, ManufacturedCase::PoissonSine];

    pub fn name(self) -> &'static str {
        match self {
            ManufacturedCase::ExpKappaSine => "paper-sine",
            ManufacturedCase::PoissonSine => "poisson-sine",
        }
    }

    pub fn u(self, x: &Vec3) -> f64 {
        (PI * x.x).sin() * (PI * x.y).sin() * (PI * x.z).sin()
    }

    pub fn grad(self, x: &Vec3) -> Vec3 {
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        let (sz, cz) = (PI * x.z).sin_cos();
        Vec3::new(cx * sy * sz, sx * cy * sz, sx * sy * cz) * PI
    }

    pub fn kappa(self, x: &Vec3) -> f64 {
        match self {
            ManufacturedCase::ExpKappaSine => (x.x + 2.0 * x.y + 3.0 * x.z).exp(),
            ManufacturedCase::PoissonSine => 1.0,
        }
    }

    /// `f = -∇·(κ∇u) = -κ (∇ln κ · ∇u + Δu)` with `Δu = -3π² u`.
    pub fn f(self, x: &Vec3) -> f64 {
        let lap = -3.0 * PI * PI * self.u(x);
        match self {
            ManufacturedCase::ExpKappaSine => -self.kappa(x) * (Vec3::new(1.0, 2.0, 3.0).dot(&self.grad(x)) + lap),
            ManufacturedCase::PoissonSine => -lap,
        }
    }
}

impl FromStr for ManufacturedCase {
    type Err = QfvmError;

    fn from_str(s: &str) -> Result<Self> {
        ManufacturedCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| QfvmError::Argument(format!("unknown case '{s}' (expected paper-sine or poisson-sine)")))
    }
}

/// Nodal interpolant of `g` (vertices, then edge midpoints).
pub fn interpolate(mesh: &Mesh, g: impl Fn(&Vec3) -> f64) -> Vec<f64> {
    (0..mesh.num_nodes()).map(|n| g(&mesh.node_coords(n))).collect()
}

/// `(|u - u_h|_1, ‖u - u_h‖_0)` by elementwise quadrature.
pub fn error_norms(mesh: &Mesh, uh: &[f64], case: ManufacturedCase, degree: usize) -> Result<(f64, f64)> {
    if uh.len() != mesh.num_nodes() {
        return Err(QfvmError::Argument(format!(
            "solution has {} entries for {} nodes",
            uh.len(),
            mesh.num_nodes()
        )));
    }
    let rule = tet_rule(degree)?;
    let per: Vec<(f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geom = mesh.element_geometry(e)?;
            let nodes = mesh.element_nodes(e);
            let (mut h1, mut l2) = (0.0, 0.0);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let x = geom.tet.point_at(l);
                let mut val = 0.0;
                let mut grad = Vec3::zeros();
                for (k, &n) in nodes.iter().enumerate() {
                    val += uh[n] * basis_eval(k, l);
                    grad += basis_grad(&geom, k, l) * uh[n];
                }
                l2 += w * (case.u(&x) - val).powi(2);
                h1 += w * (case.grad(&x) - grad).norm_squared();
            }
            Ok((h1 * geom.volume, l2 * geom.volume))
        })
        .collect::<Result<_>>()?;
    // Sequential sum in element order: independent of the thread count.
    let (h1, l2) = per.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok((h1.sqrt(), l2.sqrt()))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CaseOptions {
    pub assembly: AssemblyOptions,
    pub solver: SolverOptions,
}

/// Assemble and solve one manufactured problem.
pub fn solve_case(
    mesh: &Mesh,
    params: &SchemeParams,
    case: ManufacturedCase,
    opts: &CaseOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let kf = |x: &Vec3| case.kappa(x);
    let kappa = match case {
        ManufacturedCase::PoissonSine => Diffusion::Constant(1.0),
        ManufacturedCase::ExpKappaSine => Diffusion::Field(&kf),
    };
    let f = |x: &Vec3| case.f(x);
    let system = assemble(mesh, params, &kappa, &f, &opts.assembly)?;
    solve(&system.matrix, &system.rhs, &opts.solver)
}

/// Unit-cube meshes indexed by the subdivision number `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MeshFamily {
    Structured,
    /// Vertices displaced by up to `rate / N` per free coordinate.
    Perturbed { rate: f64, seed: u64 },
}

impl MeshFamily {
    pub fn build(&self, n: usize) -> Result<Mesh> {
        let base = generate_structured(n)?;
        match *self {
            MeshFamily::Structured => Ok(base),
            MeshFamily::Perturbed { rate, seed } => perturb(&base, rate / n as f64, seed),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceOptions {
    pub case: CaseOptions,
    /// Rows whose mesh has `θ_K` below this (degrees) fail the audit.
    pub vangle_threshold: Option<f64>,
    /// The squared error's leading term has degree 6; lower rules bias the L² value.
    pub norm_degree: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { case: CaseOptions::default(), vangle_threshold: None, norm_degree: NORM_DEGREE }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub h1_error: f64,
    pub h1_order: Option<f64>,
    pub l2_error: f64,
    pub l2_order: Option<f64>,
    /// Degrees.
    pub min_v_angle: f64,
    pub solve: SolveReport,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowFailure {
    pub n: usize,
    pub message: String,
    /// Elements below the V-angle threshold, when the audit failed.
    pub offending: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub failures: Vec<RowFailure>,
}

/// `log(e_prev / e_cur) / log(N_cur / N_prev)`.
pub fn order(e_prev: f64, e_cur: f64, n_prev: usize, n_cur: usize) -> f64 {
    (e_prev / e_cur).ln() / (n_cur as f64 / n_prev as f64).ln()
}

/// Scientific notation with six significant digits and a two-digit exponent.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "N,h,h1_error,h1_order,l2_error,l2_order";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        let opt = |o: Option<f64>| o.map(format_sci).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                r.n,
                format_sci(r.h),
                format_sci(r.h1_error),
                opt(r.h1_order),
                format_sci(r.l2_error),
                opt(r.l2_order)
            )
            .unwrap();
        }
        s
    }
}

fn run_row(
    n: usize,
    params: &SchemeParams,
    family: &MeshFamily,
    case: ManufacturedCase,
    opts: &ConvergenceOptions,
) -> std::result::Result<(f64, f64, f64, f64, SolveReport), RowFailure> {
    let fail = |e: QfvmError| RowFailure { n, message: e.to_string(), offending: Vec::new() };
    let mesh = family.build(n).map_err(fail)?;
    let quality = audit(&mesh).map_err(fail)?;
    if let Some(t) = opts.vangle_threshold {
        if !quality.passes(t) {
            return Err(RowFailure {
                n,
                message: format!("minimum V-angle {:.4} deg below threshold {t} deg", quality.min_v_angle),
                offending: quality.offending(t),
            });
        }
    }
    let (uh, rep) = solve_case(&mesh, params, case, &opts.case).map_err(fail)?;
    let (h1, l2) = error_norms(&mesh, &uh, case, opts.norm_degree).map_err(fail)?;
    Ok((mesh.h(), h1, l2, quality.min_v_angle, rep))
}

/// One row per `N`; a failing row is recorded and the study continues.
pub fn run_convergence(
    params: &SchemeParams,
    family: &MeshFamily,
    case: ManufacturedCase,
    ns: &[usize],
    opts: &ConvergenceOptions,
) -> ConvergenceReport {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut failures = Vec::new();
    for &n in ns {
        let start = Instant::now();
        match run_row(n, params, family, case, opts) {
            Ok((h, h1, l2, min_v_angle, solve)) => {
                let prev = rows.last();
                rows.push(ConvergenceRow {
                    n,
                    h,
                    h1_error: h1,
                    h1_order: prev.map(|p| order(p.h1_error, h1, p.n, n)),
                    l2_error: l2,
                    l2_order: prev.map(|p| order(p.l2_error, l2, p.n, n)),
                    min_v_angle,
                    solve,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
            Err(f) => failures.push(f),
        }
    }
    ConvergenceReport { rows, failures }
}
