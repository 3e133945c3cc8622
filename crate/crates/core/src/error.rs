use num_complex::Complex64;

/// Error type shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A state was outside the domain of definition of the system.
    #[error("state outside system domain: {0}")]
    DomainViolation(String),

    /// A matrix required to be invertible was (numerically) singular.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// An iterative solver failed to converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Invalid constitutive or configuration parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested operation is not supported for this system.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The hyperbolic/parabolic compatibility condition fails: an eigenvalue of
    /// Ã = B₂₂⁻¹(A₂₂ − A₂₁A₁₁⁻¹A₁₂) sits in 2πiℤ \ {0}, so the linear
    /// solution map C₂ ↦ U_II(1) is singular.
    #[error("spectral compatibility condition violated: eigenvalue {eigenvalue} of the reduced matrix lies in 2πi·Z\\{{0}}")]
    SpectralCondition { eigenvalue: Complex64 },

    /// Generic numerical failure (blow-up, ill-conditioning, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
