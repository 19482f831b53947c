use thiserror::Error;

pub type Result<T> = std::result::Result<T, QfvmError>;

#[derive(Debug, Error)]
pub enum QfvmError {
    #[error("degenerate tetrahedron: |K| = {volume:e} below {tol:e} * h^3")]
    DegenerateTet { volume: f64, tol: f64 },

    #[error("five-angle set is not realizable: {0}")]
    InfeasibleTheta5(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dual cell {cell} is not star-shaped about its node (cone volume {volume:e})")]
    StarShape { cell: usize, volume: f64 },

    #[error("diffusion coefficient {value} is not positive at ({x}, {y}, {z})")]
    Coefficient { value: f64, x: f64, y: f64, z: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("nonconforming mesh: {0}")]
    Conformity(String),

    #[error("element {element} has non-positive volume {volume:e}")]
    InvertedElement { element: usize, volume: f64 },

    #[error("solver failed: {msg} (relative residual {residual:e} after {iterations} iterations)")]
    Solver {
        msg: String,
        residual: f64,
        iterations: usize,
        /// Best iterate seen before giving up.
        best: Box<Vec<f64>>,
    },

    #[error("dense LU refused: dimension {n} exceeds cap {cap}")]
    DenseTooLarge { n: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QfvmError {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            QfvmError::Domain(_) | QfvmError::Argument(_) | QfvmError::InfeasibleTheta5(_)
        )
    }
}
