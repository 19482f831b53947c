//! Parametric quadratic finite volume schemes on tetrahedral meshes.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: per-tetrahedron kernels (volume coordinates, cotangent
//!   weights, plane/dihedral/V-angles, five-angle reconstruction).
//! * [`quadrature`]: triangle and tetrahedron rules.
//! * [`mesh`]: mesh container, structured/perturbed generators, I/O, audit.
//! * [`scheme`]: the `(alpha, beta, gamma, lambda)` parameter algebra.
//! * [`dual`]: the ten-cell dual partition of one tetrahedron.
//! * [`assembly`]: element matrices, right-hand sides, global system.
//! * [`solver`]: CSR storage, BiCGStab and a dense fallback.
//! * [`stability`]: element stability matrices and the `v*` search.
//! * [`norms`]: manufactured solutions, error norms and convergence studies.
//!
//! Local node order inside a tetrahedron is fixed crate-wide: the four
//! vertices `P1..P4` followed by the midpoints `M23, M13, M12, M14, M24, M34`.

pub mod assembly;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod scheme;
pub mod solver;
pub mod stability;

pub use error::{QfvmError, Result};
pub use geometry::{Tet, TetGeometry, Theta5, Vec3};
pub use mesh::Mesh;
pub use scheme::{Preset, SchemeConstants, SchemeParams};
