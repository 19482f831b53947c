use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mesh;
use crate::error::{QfvmError, Result};
use crate::geometry::Vec3;

/// All orderings of the three axes; each yields one Kuhn simplex.
const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Unit cube split into `n^3` subcubes of six tets sharing the main diagonal.
pub fn generate_structured(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(QfvmError::Argument("structured mesh needs n >= 1".into()));
    }
    let m = n + 1;
    let index = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let step = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Vec3::new(i as f64 * step, j as f64 * step, k as f64 * step));
            }
        }
    }
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMUTATIONS {
                    let mut c = [i, j, k];
                    let mut t = [index(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        t[s + 1] = index(c[0], c[1], c[2]);
                    }
                    tets.push(t);
                }
            }
        }
    }
    Mesh::new(vertices, tets)
}

/// Random displacement of a unit-cube mesh, uniform in `[-rate, rate]` per
/// free coordinate.
///
/// Coordinates equal to 0 or 1 stay fixed, so corners do not move, cube-edge
/// vertices slide along their edge and face vertices stay in their face.
/// Vertices are visited in ascending order and each consumes exactly three
/// draws from `ChaCha8Rng::seed_from_u64(seed)`, so the result is
/// platform-independent.
pub fn perturb(mesh: &Mesh, rate: f64, seed: u64) -> Result<Mesh> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(QfvmError::Argument(format!("perturbation rate {rate} must be finite and >= 0")));
    }
    if rate == 0.0 {
        return Ok(mesh.clone());
    }
    const ON_FACE: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .map(|v| {
            let mut out = *v;
            for c in 0..3 {
                let d: f64 = rng.random_range(-rate..=rate);
                if v[c].abs() > ON_FACE && (v[c] - 1.0).abs() > ON_FACE {
                    out[c] += d;
                }
            }
            out
        })
        .collect();
    Mesh::from_oriented(vertices, mesh.tets().to_vec())
}
