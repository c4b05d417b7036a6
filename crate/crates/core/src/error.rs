use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant corresponds to a precondition that the caller can check or a
/// numerical limit that was hit; none of them are retried internally.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `w(z)` or `erf(z)` would overflow (strongly negative `Im z` or large `|z|`).
    #[error("special function argument {re}+{im}i is outside the representable range")]
    Range { re: f64, im: f64 },

    /// A kernel was requested at (or too close to) a caustic time.
    #[error("singular time t = {t} (guard {guard})")]
    SingularTime { t: f64, guard: f64 },

    /// Requested time lies outside the branch cell the kernel supports.
    #[error("time t = {t} outside the supported range ({lo}, {hi})")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    /// Energy is not in the resolvent set handled by the Green's function.
    #[error("energy {re}+{im}i is on the spectrum or unsupported for this base problem")]
    SpectralBoundary { re: f64, im: f64 },

    /// The transformation parameters allow `u` to vanish on the real axis.
    #[error("transformation function may vanish on the real line: {0}")]
    RealZeroRisk(String),

    /// `|u(x)|` dropped below the near-zero threshold.
    #[error("transformation function nearly vanishes at x = {x} (|u| = {modulus:e})")]
    NearZero { x: f64, modulus: f64 },

    /// `E_n = alpha`, so the normalization `(E_n - alpha)^(-1/2)` is undefined.
    #[error("degenerate normalization for level {n}")]
    DegenerateNormalization { n: usize },

    /// Bound state requested for an isospectral (case I) transformation.
    #[error("the transformation adds no bound state")]
    NoBoundState,

    /// Operation needs a discrete base spectrum.
    #[error("operation requires a base problem with a discrete spectrum")]
    ContinuousSpectrum,

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {value_re}+{value_im}i, error {error:e}")]
    QuadratureNonConvergence {
        value_re: f64,
        value_im: f64,
        error: f64,
    },

    /// Tail contribution of an improper integral is not negligible.
    #[error("integral tail does not converge (tail estimate {tail:e})")]
    Divergence { tail: f64 },

    /// A sampled state is not negligible at the edges of its grid.
    #[error("domain too small: boundary amplitude {amplitude:e} exceeds {limit:e}")]
    DomainTooSmall { amplitude: f64, limit: f64 },

    /// Two sampled quantities live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Invalid grid or configuration.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Tridiagonal system without diagonal dominance.
    #[error("tridiagonal system is not diagonally dominant at row {row}")]
    NotDiagonallyDominant { row: usize },

    /// Eigenvalue iteration failed to converge.
    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
