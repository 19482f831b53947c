//! `qfvm` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime or solver failure, 2 bad arguments or
//! parameters outside their admissible range.

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qfvm::assembly::{element_matrix_closed_form, boundary_flux_matrix, AssemblyOptions};
use qfvm::geometry::{regular_tet, Tet, TetGeometry};
use qfvm::mesh::{audit, generate_structured, read_mesh, write_mesh, Mesh};
use qfvm::norms::{
    error_norms, format_sci, run_convergence, solve_case, CaseOptions, ConvergenceOptions, ManufacturedCase, MeshFamily,
    NORM_DEGREE,
};
use qfvm::scheme::{default_lambda, lambda_range, solve_orthogonal, Preset, SchemeParams};
use qfvm::solver::{Method, SolverOptions};
use qfvm::stability::{element_stability, vstar_search_cached, GridCache, VStarOptions};
use qfvm::{QfvmError, Vec3};

use output::{matrix_block, write_or_print};

/// Residuals below this count as satisfied when labelling a scheme.
const ORTHO_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "qfvm", version, about = "Quadratic finite volume schemes on tetrahedral meshes")]
struct Cli {
    /// Worker threads for element loops and grid scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the orthogonal conditions and print derived constants.
    Params(ParamsArgs),
    /// Convergence study on a family of unit-cube meshes.
    Convergence(ConvergenceArgs),
    /// Critical V-angle search, optionally swept over lambda.
    Vstar(VstarArgs),
    /// Mesh quality report.
    Audit(AuditArgs),
    /// Single manufactured-solution solve.
    Solve(SolveArgs),
    /// Element matrices and stability verdict for one tetrahedron.
    Element(ElementArgs),
}

#[derive(Args, Debug, Clone)]
struct SchemeArgs {
    /// Preset scheme(s): qfvs1..qfvs4.
    #[arg(long, value_delimiter = ',', conflicts_with = "alpha")]
    scheme: Vec<Preset>,
    /// Custom alpha; beta and gamma default to the orthogonal solution.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    beta: Option<f64>,
    #[arg(long, requires = "alpha")]
    gamma: Option<f64>,
    /// Defaults to 1/(1 - 3 alpha beta).
    #[arg(long)]
    lambda: Option<f64>,
}

impl SchemeArgs {
    /// `(label, params)` per requested scheme; QFVS-1 when nothing is given.
    fn resolve(&self) -> qfvm::Result<Vec<(String, SchemeParams)>> {
        let with_lambda = |p: SchemeParams| match self.lambda {
            Some(l) => p.with_lambda(l),
            None => Ok(p),
        };
        if let Some(alpha) = self.alpha {
            let (beta, gamma) = match (self.beta, self.gamma) {
                (Some(b), Some(g)) => (b, g),
                (b, g) => {
                    let (bo, go) = solve_orthogonal(alpha)?;
                    (b.unwrap_or(bo), g.unwrap_or(go))
                }
            };
            let p = with_lambda(SchemeParams::with_default_lambda(alpha, beta, gamma)?)?;
            return Ok(vec![(format!("alpha={alpha}"), p)]);
        }
        let presets = if self.scheme.is_empty() { vec![Preset::Qfvs1] } else { self.scheme.clone() };
        presets.into_iter().map(|s| Ok((s.name().to_string(), with_lambda(s.params())?))).collect()
    }

    fn single(&self) -> qfvm::Result<(String, SchemeParams)> {
        let mut all = self.resolve()?;
        if all.len() != 1 {
            return Err(QfvmError::Argument("this command takes exactly one scheme".into()));
        }
        Ok(all.remove(0))
    }
}

#[derive(Args, Debug)]
struct ParamsArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SolverKind {
    Bicgstab,
    Lu,
}

#[derive(Args, Debug, Clone)]
struct NumericArgs {
    #[arg(long, value_enum, default_value = "bicgstab")]
    solver: SolverKind,
    #[arg(long, default_value_t = 1e-12)]
    rtol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Interface quadrature degree for variable coefficients.
    #[arg(long, default_value_t = 5)]
    surface_degree: usize,
    /// Dual-cell quadrature degree for the right-hand side.
    #[arg(long, default_value_t = 5)]
    volume_degree: usize,
    /// Quadrature degree of the error norms.
    #[arg(long, default_value_t = NORM_DEGREE)]
    norm_degree: usize,
}

impl NumericArgs {
    fn case_options(&self) -> CaseOptions {
        CaseOptions {
            assembly: AssemblyOptions {
                surface_degree: self.surface_degree,
                volume_degree: self.volume_degree,
                dirichlet: true,
            },
            solver: SolverOptions {
                method: match self.solver {
                    SolverKind::Bicgstab => Method::BiCgStab,
                    SolverKind::Lu => Method::Lu,
                },
                rtol: self.rtol,
                max_iter: self.max_iter,
            },
        }
    }
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Subdivision numbers N of the unit cube.
    #[arg(long, value_delimiter = ',', required = true)]
    structured: Vec<usize>,
    /// Random vertex displacement of up to RATE/N per coordinate.
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long, default_value_t = 0, requires = "perturb")]
    seed: u64,
    #[arg(long, default_value = "paper-sine")]
    case: ManufacturedCase,
    /// Fail rows whose minimum V-angle (degrees) is below this.
    #[arg(long)]
    vangle_threshold: Option<f64>,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Directory for one `<scheme>.csv` (and `.json` with --json) per scheme.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VstarArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Explicit lambda values to sweep.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["lambda", "sweep"])]
    lambdas: Vec<f64>,
    /// Sweep K equally spaced interior points of the admissible lambda interval.
    #[arg(long, conflicts_with = "lambda")]
    sweep: Option<usize>,
    /// Increasing grid division numbers.
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,11,13,17")]
    primes: Vec<usize>,
    /// Bisection precision in degrees.
    #[arg(long, default_value_t = 0.1)]
    precision: f64,
    /// Grid members kept in memory across the sweep.
    #[arg(long, default_value_t = 4_000_000)]
    cache_members: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone)]
struct MeshArgs {
    /// Structured unit-cube mesh with N^3 cubes of six tetrahedra.
    #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
    structured: Option<usize>,
    /// Mesh file (native format or Gmsh ASCII v2).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Random vertex displacement of up to RATE/N per coordinate.
    #[arg(long, requires = "structured")]
    perturb: Option<f64>,
    #[arg(long, default_value_t = 0, requires = "perturb")]
    seed: u64,
}

impl MeshArgs {
    fn build(&self) -> qfvm::Result<Mesh> {
        match (&self.mesh, self.structured) {
            (Some(path), _) => read_mesh(path),
            (None, Some(n)) => match self.perturb {
                Some(rate) => MeshFamily::Perturbed { rate, seed: self.seed }.build(n),
                None => generate_structured(n),
            },
            (None, None) => Err(QfvmError::Argument("a mesh source is required".into())),
        }
    }
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    /// Report (and fail on) elements with V-angle below this, degrees.
    #[arg(long, conflicts_with = "scheme")]
    threshold: Option<f64>,
    /// Check the minimum V-angle condition for a preset: threshold is its
    /// published v* plus `--epsilon`.
    #[arg(long)]
    scheme: Option<Preset>,
    /// Margin above v* in degrees.
    #[arg(long, default_value_t = 0.5, requires = "scheme")]
    epsilon: f64,
    /// Print a V-angle histogram with this many bins over [0, 60].
    #[arg(long)]
    histogram: Option<usize>,
    /// Write the (possibly perturbed) mesh in native format.
    #[arg(long)]
    write: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value = "paper-sine")]
    case: ManufacturedCase,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Write `x y z u_h` per node.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ElementArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Four vertices as `x,y,z;x,y,z;x,y,z;x,y,z` (default: unit regular tetrahedron).
    #[arg(long)]
    tet: Option<String>,
    #[arg(long)]
    json: bool,
}

/// Runtime failure that is not a library error.
struct Failed(String);

enum CmdError {
    Lib(QfvmError),
    Failed(Failed),
}

impl From<QfvmError> for CmdError {
    fn from(e: QfvmError) -> Self {
        CmdError::Lib(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Lib(QfvmError::Io(e))
    }
}

type CmdResult = std::result::Result<(), CmdError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.cmd {
        Command::Params(a) => cmd_params(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Vstar(a) => cmd_vstar(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Element(a) => cmd_element(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
        Err(CmdError::Failed(Failed(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn orthogonality_label(surface: f64, volume: f64) -> &'static str {
    match (surface.abs() <= ORTHO_TOL, volume.abs() <= ORTHO_TOL) {
        (true, true) => "orthogonal",
        (true, false) => "surface-only",
        _ => "non-orthogonal",
    }
}

fn cmd_params(a: ParamsArgs) -> CmdResult {
    let mut records = Vec::new();
    for (label, p) in a.scheme.resolve()? {
        let c = p.constants();
        let (surface, volume) = p.residuals();
        let (lo, hi) = lambda_range(p.alpha, p.beta)?;
        let kind = orthogonality_label(surface, volume);
        if a.json {
            records.push(json!({
                "scheme": label,
                "alpha": p.alpha, "beta": p.beta, "gamma": p.gamma, "lambda": p.lambda,
                "default_lambda": default_lambda(p.alpha, p.beta),
                "lambda_range": [lo, hi],
                "constants": c,
                "residuals": { "surface": surface, "volume": volume },
                "orthogonality": kind,
            }));
            continue;
        }
        println!("scheme        {label}");
        println!("alpha         {:.15}", p.alpha);
        println!("beta          {:.15}", p.beta);
        println!("gamma         {:.15}", p.gamma);
        println!("lambda        {:.15}", p.lambda);
        println!("lambda range  ({lo:.7}, {hi:.7})");
        println!("t1..t4        {:.10e} {:.10e} {:.10e} {:.10e}", c.t1, c.t2, c.t3, c.t4);
        println!("s0..s3        {:.10e} {:.10e} {:.10e} {:.10e}", c.s0, c.s1, c.s2, c.s3);
        println!("s*            {:.3e}", c.s_star);
        println!("residuals     surface {surface:.3e}  volume {volume:.3e}  [{kind}]");
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&records).expect("serialisable"));
    }
    Ok(())
}

fn cmd_convergence(a: ConvergenceArgs) -> CmdResult {
    let family = match a.perturb {
        Some(rate) => MeshFamily::Perturbed { rate, seed: a.seed },
        None => MeshFamily::Structured,
    };
    let opts = ConvergenceOptions {
        case: a.numeric.case_options(),
        vangle_threshold: a.vangle_threshold,
        norm_degree: a.numeric.norm_degree,
    };
    let schemes = a.scheme.resolve()?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut all_ok = true;
    for (label, params) in schemes {
        let report = run_convergence(&params, &family, a.case, &a.structured, &opts);
        for f in &report.failures {
            all_ok = false;
            eprintln!("{label}: N={} failed: {}", f.n, f.message);
            if !f.offending.is_empty() {
                eprintln!("{label}: N={} offending elements: {:?}", f.n, f.offending);
            }
        }
        let json = serde_json::to_string_pretty(&json!({ "scheme": label, "case": a.case.name(), "report": report }))
            .expect("serialisable");
        match &a.out_dir {
            Some(dir) => {
                fs::write(dir.join(format!("{label}.csv")), report.to_csv())?;
                if a.json {
                    fs::write(dir.join(format!("{label}.json")), &json)?;
                }
            }
            None if a.json => println!("{json}"),
            None => print!("# {label}\n{}", report.to_csv()),
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(CmdError::Failed(Failed("some convergence rows did not complete".into())))
    }
}

fn cmd_vstar(a: VstarArgs) -> CmdResult {
    let (label, base) = a.scheme.single()?;
    let (lo, hi) = lambda_range(base.alpha, base.beta)?;
    let requested: Vec<f64> = if !a.lambdas.is_empty() {
        a.lambdas.clone()
    } else if let Some(k) = a.sweep {
        if k == 0 {
            return Err(QfvmError::Argument("--sweep needs at least one point".into()).into());
        }
        (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect()
    } else {
        vec![base.lambda]
    };
    let lambdas: Vec<f64> = requested
        .into_iter()
        .filter(|&l| {
            let ok = l > lo && l < hi;
            if !ok {
                eprintln!("warning: lambda {l} outside ({lo:.7}, {hi:.7}); skipped");
            }
            ok
        })
        .collect();
    if lambdas.is_empty() {
        return Err(QfvmError::Domain("no lambda inside the admissible interval".into()).into());
    }
    let opts = VStarOptions { primes: a.primes.clone(), precision: a.precision };
    let cache = GridCache::new(a.cache_members);
    let primes = a.primes.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";");
    let mut csv = String::from("lambda,vstar_degrees,primes,precision,wallclock\n");
    let mut rows = Vec::new();
    for l in lambdas {
        let start = Instant::now();
        let res = vstar_search_cached(&base.with_lambda(l)?, &opts, Some(&cache))?;
        let secs = start.elapsed().as_secs_f64();
        csv.push_str(&format!("{},{},{primes},{},{}\n", format_sci(l), format_sci(res.vstar), format_sci(a.precision), format_sci(secs)));
        rows.push(json!({ "lambda": l, "vstar_degrees": res.vstar, "wallclock": secs, "steps": res.steps }));
    }
    if a.json {
        let doc = json!({ "scheme": label, "primes": a.primes, "precision": a.precision, "rows": rows });
        write_or_print(a.out.as_deref(), &serde_json::to_string_pretty(&doc).expect("serialisable"))?;
    } else {
        write_or_print(a.out.as_deref(), &csv)?;
    }
    Ok(())
}

fn cmd_audit(a: AuditArgs) -> CmdResult {
    let mesh = a.mesh.build()?;
    let q = audit(&mesh)?;
    if let Some(path) = &a.write {
        write_mesh(&mesh, path)?;
    }
    if !(a.epsilon > 0.0) {
        return Err(QfvmError::Argument(format!("--epsilon must be positive, got {}", a.epsilon)).into());
    }
    let threshold = a.threshold.or(a.scheme.map(|p| p.published_vstar() + a.epsilon));
    let offending = threshold.map(|t| q.offending(t)).unwrap_or_default();
    if a.json {
        let mut doc = json!({
            "elements": mesh.num_elements(),
            "nodes": mesh.num_nodes(),
            "h": mesh.h(),
            "min_v_angle": q.min_v_angle,
            "worst_element": q.worst_element,
            "max_shape_ratio": q.max_shape_ratio,
        });
        if let Some(t) = threshold {
            doc["threshold"] = json!(t);
            doc["offending"] = json!(offending);
        }
        if let Some(b) = a.histogram {
            doc["histogram"] = json!(q.histogram(b));
        }
        println!("{}", serde_json::to_string_pretty(&doc).expect("serialisable"));
    } else {
        println!("elements         {}", mesh.num_elements());
        println!("nodes            {}", mesh.num_nodes());
        println!("h                {:.6e}", mesh.h());
        println!("min V-angle      {:.4} deg (element {})", q.min_v_angle, q.worst_element);
        println!("max h/rho        {:.4}", q.max_shape_ratio);
        if let Some(t) = threshold {
            println!("below {t} deg     {} elements {:?}", offending.len(), offending);
        }
        if let Some(b) = a.histogram {
            for (i, c) in q.histogram(b).iter().enumerate() {
                let w = 60.0 / b as f64;
                println!("[{:6.2}, {:6.2})  {c}", w * i as f64, w * (i + 1) as f64);
            }
        }
    }
    if offending.is_empty() {
        Ok(())
    } else {
        Err(CmdError::Failed(Failed(format!("{} elements below the V-angle threshold", offending.len()))))
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let mesh = a.mesh.build()?;
    let (label, params) = a.scheme.single()?;
    let (uh, rep) = solve_case(&mesh, &params, a.case, &a.numeric.case_options())?;
    let (h1, l2) = error_norms(&mesh, &uh, a.case, a.numeric.norm_degree)?;
    let interior: Vec<usize> = (0..mesh.num_nodes()).filter(|&n| !mesh.is_boundary(n)).collect();
    if let Some(path) = &a.out {
        let mut s = String::new();
        for (n, u) in uh.iter().enumerate() {
            let x = mesh.node_coords(n);
            s.push_str(&format!("{:e} {:e} {:e} {:e}\n", x.x, x.y, x.z, u));
        }
        fs::write(path, s)?;
    }
    if a.json {
        let shown: Vec<_> = interior.iter().take(10).map(|&n| json!({ "node": n, "x": mesh.node_coords(n).as_slice(), "u_h": uh[n] })).collect();
        let doc = json!({
            "scheme": label, "case": a.case.name(),
            "nodes": mesh.num_nodes(), "unknowns": interior.len(),
            "solve": rep, "h1_error": h1, "l2_error": l2, "interior_values": shown,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serialisable"));
        return Ok(());
    }
    println!("scheme      {label}");
    println!("case        {}", a.case.name());
    println!("nodes       {} ({} unknowns)", mesh.num_nodes(), interior.len());
    println!("solver      {:?}, {} iterations, residual {:.3e}", rep.method, rep.iterations, rep.residual);
    println!("h1 error    {}", format_sci(h1));
    println!("l2 error    {}", format_sci(l2));
    if interior.len() <= 10 {
        for n in interior {
            let x = mesh.node_coords(n);
            println!("u_h({:.4}, {:.4}, {:.4}) = {:.15e}", x.x, x.y, x.z, uh[n]);
        }
    }
    Ok(())
}

fn parse_tet(s: &str) -> qfvm::Result<Tet> {
    let pts: Vec<Vec3> = s
        .split(';')
        .map(|p| {
            let c: Vec<f64> = p
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| QfvmError::Argument(format!("bad coordinate '{x}'"))))
                .collect::<qfvm::Result<_>>()?;
            match c.as_slice() {
                [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
                _ => Err(QfvmError::Argument(format!("vertex '{p}' needs three coordinates"))),
            }
        })
        .collect::<qfvm::Result<_>>()?;
    let p: [Vec3; 4] = pts.try_into().map_err(|_| QfvmError::Argument("--tet needs four vertices".into()))?;
    Tet::from_points(p)
}

fn cmd_element(a: ElementArgs) -> CmdResult {
    let tet = match &a.tet {
        Some(s) => parse_tet(s)?,
        None => regular_tet(),
    };
    let geom = TetGeometry::new(&tet)?;
    let (label, params) = a.scheme.single()?;
    let c = params.constants();
    let boundary = boundary_flux_matrix(&geom, &c);
    let a1 = element_matrix_closed_form(&geom, &params);
    let st = element_stability(&geom, &params)?;
    let (lo, hi) = lambda_range(params.alpha, params.beta)?;
    let verdict = if st.is_stable() { "stable" } else { "unstable" };
    if a.json {
        let m = |x: &dyn Fn(usize, usize) -> f64, r: usize, c: usize| -> Vec<Vec<f64>> {
            (0..r).map(|i| (0..c).map(|j| x(i, j)).collect()).collect()
        };
        let doc = json!({
            "scheme": label, "lambda": params.lambda, "lambda_range": [lo, hi],
            "volume": geom.volume, "min_v_angle": geom.min_v_angle().to_degrees(),
            "A": m(&|i, j| boundary[(i, j)], 10, 10),
            "A_K1": m(&|i, j| a1[(i, j)], 10, 10),
            "A_Klambda": m(&|i, j| st.a_lambda[(i, j)], 10, 10),
            "B_bar": m(&|i, j| st.b_bar[(i, j)], 9, 9),
            "M": m(&|i, j| st.m[(i, j)], 3, 3),
            "N": st.n.map(|n| m(&|i, j| n[(i, j)], 6, 6)),
            "min_eig": st.min_eig_direct,
            "stable_direct": st.stable_direct,
            "stable_reduced": st.stable_reduced,
            "verdict": verdict,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serialisable"));
        return Ok(());
    }
    println!("scheme {label}, lambda {:.10} in ({lo:.7}, {hi:.7})", params.lambda);
    println!("|K| = {:.10e}, theta_K = {:.6} deg, h = {:.6e}", geom.volume, geom.min_v_angle().to_degrees(), geom.h);
    print!("{}", matrix_block("A (boundary fluxes)", &boundary));
    print!("{}", matrix_block("A_K,1", &a1));
    print!("{}", matrix_block("A_K,lambda", &st.a_lambda));
    print!("{}", matrix_block("B_bar", &st.b_bar));
    print!("{}", matrix_block("M", &st.m));
    match &st.n {
        Some(n) => print!("{}", matrix_block("N", n)),
        None => println!("N: not defined (s* = {:.3e})", c.s_star),
    }
    println!("min eigenvalue of B_bar/h: {:.6e}", st.min_eig_direct);
    if let Some(r) = st.stable_reduced {
        println!("reduced check (M, N): {}", if r { "stable" } else { "unstable" });
    }
    println!("verdict: {verdict}");
    Ok(())
}
