//! The `(alpha, beta, gamma, lambda)` parameter algebra.
//!
//! `alpha` places the dual points on edges, `beta` on face medians, `gamma`
//! on the segments from a vertex to the opposite face centroid. `lambda`
//! only enters the stability analysis through the trial-to-test map.

use std::fmt;
use std::str::FromStr;

use nalgebra::SMatrix;
use serde::Serialize;

use crate::error::{QfvmError, Result};

pub type Mat10 = SMatrix<f64, 10, 10>;

/// Lower end of the `alpha` interval on which the orthogonal system has a solution.
pub fn alpha_min() -> f64 {
    0.5 - 6f64.sqrt() / 6.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Preset {
    Qfvs1,
    Qfvs2,
    Qfvs3,
    Qfvs4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Qfvs1, Preset::Qfvs2, Preset::Qfvs3, Preset::Qfvs4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Qfvs1 => "qfvs1",
            Preset::Qfvs2 => "qfvs2",
            Preset::Qfvs3 => "qfvs3",
            Preset::Qfvs4 => "qfvs4",
        }
    }

    /// `(alpha, beta, gamma)` of the preset.
    pub fn abg(self) -> (f64, f64, f64) {
        let s3 = 3f64.sqrt();
        let alpha2 = 0.5 - s3 / 6.0;
        let beta2 = 2.0 / 3.0 + s3 / 9.0 - (21.0 + 6.0 * s3).sqrt() / 9.0;
        match self {
            Preset::Qfvs1 => (0.1, 14.0 / 15.0 - 2.0 * 66f64.sqrt() / 45.0, 0.050667311760225),
            Preset::Qfvs2 => (alpha2, beta2, 0.052883196779577),
            Preset::Qfvs3 => {
                // The published closed form for beta carries a stray factor 2
                // (it would be negative); both values follow from the solver.
                let (beta, gamma) = solve_orthogonal(0.4).expect("0.4 is admissible");
                (0.4, beta, gamma)
            }
            Preset::Qfvs4 => (alpha2, beta2, 0.25),
        }
    }

    /// Published `v*` at `lambda = 1/(1 - 3 alpha beta)`, degrees.
    pub fn published_vstar(self) -> f64 {
        match self {
            Preset::Qfvs1 => 20.5,
            Preset::Qfvs2 => 17.0,
            Preset::Qfvs3 => 16.7,
            Preset::Qfvs4 => 18.2,
        }
    }

    pub fn params(self) -> SchemeParams {
        let (a, b, g) = self.abg();
        SchemeParams::with_default_lambda(a, b, g).expect("presets are admissible")
    }
}

impl FromStr for Preset {
    type Err = QfvmError;
    fn from_str(s: &str) -> Result<Preset> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "qfvs1" => Ok(Preset::Qfvs1),
            "qfvs2" => Ok(Preset::Qfvs2),
            "qfvs3" => Ok(Preset::Qfvs3),
            "qfvs4" => Ok(Preset::Qfvs4),
            _ => Err(QfvmError::Argument(format!("unknown scheme '{s}' (expected qfvs1..qfvs4)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Invariant: `0 < alpha < 1/2`, `0 < beta < 2/3`, `0 < gamma < 3/4`, `lambda != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl SchemeParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, lambda: f64) -> Result<SchemeParams> {
        check_ab(alpha, beta)?;
        if !(gamma > 0.0 && gamma < 0.75) {
            return Err(QfvmError::Domain(format!("gamma = {gamma} outside (0, 3/4)")));
        }
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(QfvmError::Domain(format!("lambda = {lambda} must be finite and nonzero")));
        }
        Ok(SchemeParams { alpha, beta, gamma, lambda })
    }

    /// Uses `lambda = 1/(1 - 3 alpha beta)`.
    pub fn with_default_lambda(alpha: f64, beta: f64, gamma: f64) -> Result<SchemeParams> {
        check_ab(alpha, beta)?;
        SchemeParams::new(alpha, beta, gamma, default_lambda(alpha, beta))
    }

    pub fn with_lambda(self, lambda: f64) -> Result<SchemeParams> {
        SchemeParams::new(self.alpha, self.beta, self.gamma, lambda)
    }

    pub fn constants(&self) -> SchemeConstants {
        SchemeConstants::new(self)
    }

    pub fn residuals(&self) -> (f64, f64) {
        orthogonality_residuals(self.alpha, self.beta, self.gamma)
    }
}

fn check_ab(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(QfvmError::Domain(format!("alpha = {alpha} outside (0, 1/2)")));
    }
    if !(beta > 0.0 && beta < 2.0 / 3.0) {
        return Err(QfvmError::Domain(format!("beta = {beta} outside (0, 2/3)")));
    }
    Ok(())
}

pub fn default_lambda(alpha: f64, beta: f64) -> f64 {
    1.0 / (1.0 - 3.0 * alpha * beta)
}

/// Invariant: `t1 + 2 t2 + 2 t3 + t4 = s1 = 1/6`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeConstants {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s_star: f64,
}

impl SchemeConstants {
    pub fn new(p: &SchemeParams) -> SchemeConstants {
        let (t1, t2, t3, t4) = t_integrals_unchecked(p.alpha, p.beta);
        let l = p.lambda;
        SchemeConstants {
            t1,
            t2,
            t3,
            t4,
            s0: 1.0 / 240.0 + (4.0 * p.alpha * p.beta * p.gamma - 1.0) * l / 144.0,
            s1: 1.0 / 6.0,
            s2: t3 * l,
            s3: t4 * l,
            s_star: -t1 + 2.0 * t2 + t4,
        }
    }
}

fn t_integrals_unchecked(a: f64, b: f64) -> (f64, f64, f64, f64) {
    let ab = a * b;
    (
        ab / 2.0 * (1.0 - (a + b) / 3.0),
        ab * (a + b) / 12.0,
        2.0 / 27.0 - ab / 4.0 * (1.0 - b / 6.0),
        1.0 / 54.0 - a * b * b / 12.0,
    )
}

/// Moments of `L1` over the dual regions of a reference face:
/// vertex region of `P1` (`t1`), of `P2` or `P3` (`t2`), midpoint regions on
/// edges through `P1` (`t3`) and the midpoint region opposite `P1` (`t4`).
pub fn t_integrals(alpha: f64, beta: f64) -> Result<(f64, f64, f64, f64)> {
    check_ab(alpha, beta)?;
    Ok(t_integrals_unchecked(alpha, beta))
}

/// `(surface, volume)` residuals of the orthogonal conditions.
pub fn orthogonality_residuals(alpha: f64, beta: f64, gamma: f64) -> (f64, f64) {
    let ab = alpha * beta;
    (
        ab * (-0.5 + alpha / 3.0 + beta / 4.0) + 1.0 / 54.0,
        ab * gamma * (-1.0 + alpha / 2.0 + 3.0 * beta / 8.0 + gamma / 3.0) + 1.0 / 480.0,
    )
}

/// The unique `(beta, gamma)` making both residuals vanish.
pub fn solve_orthogonal(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > alpha_min() && alpha < 0.5) {
        return Err(QfvmError::Domain(format!(
            "alpha = {alpha} outside ({:.6}, 1/2) where the orthogonal conditions are solvable",
            alpha_min()
        )));
    }
    // Smaller roots of x^2 - 2 b x + c, written as c / (b + sqrt(b^2 - c)).
    let b = 1.0 - 2.0 * alpha / 3.0;
    let c = 2.0 / (27.0 * alpha);
    let beta = c / (b + (b * b - c).sqrt());
    let ab = alpha * beta;
    let b = 3.0 / 8.0 + 1.0 / (24.0 * ab);
    let c = 1.0 / (160.0 * ab);
    let gamma = c / (b + (b * b - c).sqrt());
    Ok((beta, gamma))
}

/// Open interval of `lambda` for which the regular tetrahedron is stable.
pub fn lambda_range(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let (_, _, t3, t4) = t_integrals(alpha, beta)?;
    let num = 2.0 * t3 + 5.0 * t4;
    let disc = 2.0 * (2.0 * t4 * (2.0 * t3 + 3.0 * t4)).sqrt();
    let den = 6.0 * (2.0 * t3 + t4).powi(2);
    Ok(((num - disc) / den, (num + disc) / den))
}

/// Trial-to-test map: node values of `Pi*_lambda u` are `S^T u`.
pub fn mapping_matrix_s(lambda: f64) -> Result<Mat10> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(QfvmError::Domain(format!("lambda = {lambda} must be finite and nonzero")));
    }
    let mut s = Mat10::identity();
    let off = (1.0 - lambda) / 2.0;
    for m in 4..10 {
        s[(m, m)] = lambda;
    }
    for (row, cols) in [[5, 6, 7], [4, 6, 8], [4, 5, 9], [7, 8, 9]].iter().enumerate() {
        for &c in cols {
            s[(row, c)] = off;
        }
    }
    Ok(s)
}
