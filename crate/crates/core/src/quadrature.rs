//! Triangle and tetrahedron quadrature in barycentric form.
//!
//! Weights are normalised to sum to 1, so an integral is
//! `measure * sum(w * f(point))`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{QfvmError, Result};

/// Highest supported polynomial degree for both shapes.
pub const MAX_DEGREE: usize = 7;

#[derive(Clone, Debug)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[0, 1]` via Golub-Welsch.
pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            // Weight on [-1, 1] is 2 v0^2; halve for [0, 1].
            (0.5 * (eig.eigenvalues[i] + 1.0), v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(QfvmError::Argument(format!(
            "quadrature degree {degree} unsupported (expected 1..={MAX_DEGREE})"
        )));
    }
    Ok(())
}

/// Symmetric rules up to degree 5, collapsed Gauss above.
pub fn triangle_rule(degree: usize) -> Result<TriRule> {
    check_degree(degree)?;
    Ok(match degree {
        1 => TriRule { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0] },
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            TriRule { points: vec![[a, b, b], [b, a, b], [b, b, a]], weights: vec![1.0 / 3.0; 3] }
        }
        3..=5 => radon7(),
        _ => collapsed_triangle(degree),
    })
}

/// Radon's seven-point degree-5 rule.
fn radon7() -> TriRule {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 1200.0;
    let wb = (155.0 + s15) / 1200.0;
    let mut points = vec![[1.0 / 3.0; 3]];
    let mut weights = vec![9.0 / 40.0];
    for (x, w) in [(a, wa), (b, wb)] {
        let y = 1.0 - 2.0 * x;
        points.extend([[y, x, x], [x, y, x], [x, x, y]]);
        weights.extend([w; 3]);
    }
    TriRule { points, weights }
}

fn collapsed_triangle(degree: usize) -> TriRule {
    // Duffy map x = u, y = v (1 - u); the Jacobian adds one degree in u.
    let n = (degree + 3).div_ceil(2);
    let (x, w) = gauss_legendre01(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in x.iter().zip(&w) {
        for (&v, &wv) in x.iter().zip(&w) {
            let (l1, l2) = (u, v * (1.0 - u));
            points.push([1.0 - l1 - l2, l1, l2]);
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    TriRule { points, weights }
}

/// Symmetric rules up to degree 5, collapsed Gauss above.
pub fn tet_rule(degree: usize) -> Result<TetRule> {
    check_degree(degree)?;
    Ok(match degree {
        1 => TetRule { points: vec![[0.25; 4]], weights: vec![1.0] },
        2 => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            TetRule {
                points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
                weights: vec![0.25; 4],
            }
        }
        3..=5 => tet14(),
        _ => collapsed_tet(degree),
    })
}

/// Fourteen-point degree-5 rule with positive weights.
fn tet14() -> TetRule {
    let mut points = Vec::with_capacity(14);
    let mut weights = Vec::with_capacity(14);
    for (a, w) in [(0.092_735_250_310_891_2, 0.073_493_043_116_362_0), (0.310_885_919_263_300_6, 0.112_687_925_718_015_9)] {
        let c = 1.0 - 3.0 * a;
        for i in 0..4 {
            let mut p = [a; 4];
            p[i] = c;
            points.push(p);
            weights.push(w);
        }
    }
    let b = 0.045_503_704_125_649_6;
    let c = 0.5 - b;
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut p = [c; 4];
        p[i] = b;
        p[j] = b;
        points.push(p);
        weights.push(0.042_546_020_777_081_5);
    }
    // The tabulated weights sum to 1 - O(1e-16); renormalise exactly.
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    TetRule { points, weights }
}

fn collapsed_tet(degree: usize) -> TetRule {
    // x = u, y = v (1 - u), z = w (1 - u)(1 - v); Jacobian (1 - u)^2 (1 - v).
    let n = (degree + 4).div_ceil(2);
    let (x, w) = gauss_legendre01(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (&u, &wu) in x.iter().zip(&w) {
        for (&v, &wv) in x.iter().zip(&w) {
            for (&t, &wt) in x.iter().zip(&w) {
                let l1 = u;
                let l2 = v * (1.0 - u);
                let l3 = t * (1.0 - u) * (1.0 - v);
                points.push([1.0 - l1 - l2 - l3, l1, l2, l3]);
                weights.push(6.0 * wu * wv * wt * (1.0 - u).powi(2) * (1.0 - v));
            }
        }
    }
    TetRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact `(1/|T|) * int L^a` over a simplex of dimension `d`.
    fn simplex_moment(exps: &[u32], d: u32) -> f64 {
        let num: f64 = exps.iter().map(|&e| factorial(e)).product();
        let s: u32 = exps.iter().sum();
        num * factorial(d) / factorial(s + d)
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..8 {
            let (x, w) = gauss_legendre01(n);
            for p in 0..(2 * n) as i32 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_monomial_exactness() {
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let c = degree as u32 - a - b;
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    let exact = simplex_moment(&[a, b, c], 2);
                    assert!((q - exact).abs() < 1e-14, "degree {degree}: ({a},{b},{c}) {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn tet_monomial_exactness() {
        for degree in 1..=MAX_DEGREE {
            let rule = tet_rule(degree).unwrap();
            let d = degree as u32;
            for a in 0..=d {
                for b in 0..=(d - a) {
                    for c in 0..=(d - a - b) {
                        let e = d - a - b - c;
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| {
                                w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32) * p[3].powi(e as i32)
                            })
                            .sum();
                        let exact = simplex_moment(&[a, b, c, e], 3);
                        assert!((q - exact).abs() < 1e-14, "degree {degree}: ({a},{b},{c},{e})");
                    }
                }
            }
        }
    }

    #[test]
    fn weights_positive_and_normalised() {
        for degree in 1..=MAX_DEGREE {
            let t = triangle_rule(degree).unwrap();
            assert!(t.weights.iter().all(|&w| w > 0.0));
            assert!((t.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let k = tet_rule(degree).unwrap();
            assert!(k.weights.iter().all(|&w| w > 0.0));
            assert!((k.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(triangle_rule(0).is_err());
        assert!(tet_rule(MAX_DEGREE + 1).is_err());
    }
}
