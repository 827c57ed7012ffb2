use thiserror::Error;

/// Error type shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate or knot lies outside the valid parametric range.
    #[error("domain: {0}")]
    Domain(String),

    /// An argument violates a structural precondition (derivative order,
    /// malformed foil code, inconsistent array lengths, ...).
    #[error("argument: {0}")]
    Argument(String),

    /// Geometric mapping failure tied to a specific element.
    #[error("geometry failure in element {element}: {detail}")]
    Geometry { element: usize, detail: String },

    /// A linear system that must be invertible is numerically singular.
    #[error("singular system: {0}")]
    Singular(String),

    /// The first and last temporal slices cannot be identified with each other.
    #[error("periodicity: {0}")]
    Periodicity(String),

    /// The mesh does not carry the structure an operation relies on.
    #[error("structure: {0}")]
    Structure(String),

    /// Iterative linear solver breakdown.
    #[error("linear solver failed after {iterations} iterations: {detail}")]
    Solver { iterations: usize, detail: String },

    /// Convergence-order extrapolation cannot be applied to the samples.
    #[error("extrapolation: {0}")]
    Extrapolation(String),

    /// Invalid or contradictory run configuration.
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
