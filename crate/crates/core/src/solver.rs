//! Sparse storage and solvers for the nonsymmetric global system.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QfvmError, Result};

/// Largest system the dense fallback accepts.
pub const DENSE_CAP: usize = 5000;

/// Reductions use fixed chunks so results do not depend on the thread count.
const CHUNK: usize = 4096;

/// Compressed-row matrix; column indices are sorted and unique per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given per-row column lists (duplicates allowed).
    pub fn from_pattern(n: usize, mut rows: Vec<Vec<usize>>) -> CsrMatrix {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            assert!(r.last().is_none_or(|&c| c < n), "column out of range");
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { nrows: n, ncols: n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    /// Sums duplicate entries in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c, v) = triplets[i];
            assert!(r < nrows && c < ncols, "triplet out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn from_dense(a: &DMatrix<f64>) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(a.nrows(), a.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(columns, values)` of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Mutable access to a stored entry; `None` outside the pattern.
    pub fn entry_mut(&mut self, i: usize, j: usize) -> Option<&mut f64> {
        let a = self.row_ptr[i];
        let b = self.row_ptr[i + 1];
        let k = self.col_idx[a..b].binary_search(&j).ok()?;
        Some(&mut self.values[a + k])
    }

    /// Zeroes row `i` except a unit diagonal (which must be in the pattern).
    pub fn set_identity_row(&mut self, i: usize) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        for k in a..b {
            self.values[k] = if self.col_idx[k] == i { 1.0 } else { 0.0 };
        }
        assert!(self.col_idx[a..b].binary_search(&i).is_ok(), "diagonal missing from pattern");
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`; each row is summed sequentially.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                d[(i, c)] = v;
            }
        }
        d
    }

    /// 1-based `i j value` lines, one per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(s, "{} {} {:e}", i + 1, c + 1, v).unwrap();
            }
        }
        s
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> =
        a.par_chunks(CHUNK).zip(b.par_chunks(CHUNK)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
    partial.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.mul_vec(x);
    r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    BiCgStab,
    Lu,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖` recomputed from the returned solution.
    pub residual: f64,
    pub method: Method,
    pub wall_time: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub method: Method,
    pub rtol: f64,
    /// Defaults to `10 n` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { method: Method::BiCgStab, rtol: 1e-12, max_iter: None }
    }
}

pub fn solve(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(QfvmError::Argument(format!(
            "system is {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if !(opts.rtol > 0.0 && opts.rtol < 1.0) {
        return Err(QfvmError::Argument(format!("rtol {} outside (0, 1)", opts.rtol)));
    }
    let start = Instant::now();
    let (x, iterations) = match opts.method {
        Method::Lu => (dense_lu(a, b)?, 1),
        Method::BiCgStab => bicgstab(a, b, opts.rtol, opts.max_iter.unwrap_or(10 * a.nrows().max(1)))?,
    };
    let bn = norm(b);
    let rel = if bn == 0.0 { norm(&residual(a, &x, b)) } else { norm(&residual(a, &x, b)) / bn };
    if opts.method == Method::Lu && !(rel <= opts.rtol) {
        return Err(QfvmError::Solver {
            msg: "dense LU did not reach the requested tolerance".into(),
            residual: rel,
            iterations,
            best: Box::new(x),
        });
    }
    Ok((x, SolveReport { iterations, residual: rel, method: opts.method, wall_time: start.elapsed().as_secs_f64() }))
}

fn dense_lu(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n > DENSE_CAP {
        return Err(QfvmError::DenseTooLarge { n, cap: DENSE_CAP });
    }
    let x = a.to_dense().lu().solve(&DVector::from_column_slice(b)).ok_or_else(|| QfvmError::Solver {
        msg: "matrix is singular".into(),
        residual: f64::INFINITY,
        iterations: 0,
        best: Box::new(vec![0.0; n]),
    })?;
    Ok(x.as_slice().to_vec())
}

/// Jacobi-preconditioned BiCGStab.
///
/// Convergence is declared only on the recomputed residual. One restart is
/// allowed after a `rho` breakdown; restarts after a stale recursive residual
/// are not counted against it.
fn bicgstab(a: &CsrMatrix, b: &[f64], rtol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        out.par_iter_mut().zip(v).zip(&inv_diag).for_each(|((o, v), d)| *o = v * d);
    };

    let mut r = residual(a, &x, b);
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut restarted = false;
    let mut best = (f64::INFINITY, x.clone());

    let fail = |msg: &str, it: usize, best: (f64, Vec<f64>)| QfvmError::Solver {
        msg: msg.into(),
        residual: best.0,
        iterations: it,
        best: Box::new(best.1),
    };

    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 || !rho_new.is_finite() {
            if restarted {
                return Err(fail("rho breakdown after restart", it, best));
            }
            restarted = true;
            r = residual(a, &x, b);
            r_hat.copy_from_slice(&r);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut().zip(&r).zip(&v).for_each(|((p, r), v)| *p = r + beta * (*p - omega * v));
        precond(&p, &mut y);
        a.mul_vec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            return Err(fail("breakdown: r_hat . v vanished", it, best));
        }
        alpha = rho / rv;
        s.par_iter_mut().zip(&r).zip(&v).for_each(|((s, r), v)| *s = r - alpha * v);
        x.par_iter_mut().zip(&y).for_each(|(x, y)| *x += alpha * y);
        if norm(&s) / bn <= rtol {
            let true_res = norm(&residual(a, &x, b)) / bn;
            if true_res <= rtol {
                return Ok((x, it));
            }
        }
        precond(&s, &mut z);
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        x.par_iter_mut().zip(&z).for_each(|(x, z)| *x += omega * z);
        r.par_iter_mut().zip(&s).zip(&t).for_each(|((r, s), t)| *r = s - omega * t);

        let rec = norm(&r) / bn;
        if rec <= rtol || omega == 0.0 {
            r = residual(a, &x, b);
            let true_res = norm(&r) / bn;
            if true_res < best.0 {
                best = (true_res, x.clone());
            }
            if true_res <= rtol {
                return Ok((x, it));
            }
            // Recursive residual drifted; restart the Krylov space from the truth.
            r_hat.copy_from_slice(&r);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
        } else if it % 50 == 0 {
            let true_res = norm(&residual(a, &x, b)) / bn;
            if true_res < best.0 {
                best = (true_res, x.clone());
            }
        }
    }
    let true_res = norm(&residual(a, &x, b)) / bn;
    if true_res < best.0 {
        best = (true_res, x);
    }
    Err(fail("no convergence within the iteration limit", max_iter, best))
}
