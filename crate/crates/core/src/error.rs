use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("modulation width {w} must lie in (0, a/2) for lattice constant {a}")]
    ModulationTooWide { a: f64, w: f64 },

    #[error("integration failed at z = {z:e} m: step size underflow")]
    Integration { z: f64 },

    #[error("monodromy is defective (band-edge degeneracy), eigenvalue split {split:e}")]
    BandEdgeDegeneracy { split: f64 },

    #[error("left/right mode pairing {pairing:e} vanishes; mode sits on a band-edge degeneracy")]
    ModeOrthogonality { pairing: f64 },

    #[error("mode is not normalized: |integral(psi phi) - 1| = {0:e}")]
    UnnormalizedMode(f64),

    #[error("r1 + r2 vanishes at the entrance face; reflectivity is singular")]
    TotalReflection,

    #[error("reflectivity {0} exceeds unity")]
    ReflectivityAboveOne(f64),

    #[error("Re(d gamma / Gamma) vanishes; damping parameter undefined")]
    DampingUndefined,

    #[error("walk-off beta*L/T = {0:.3e} exceeds 0.1; use pde::propagate instead of the analytic kernel")]
    WalkOffTooLarge(f64),

    #[error("input signal has zero norm")]
    ZeroNormInput,

    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("band scan failed at k_s = {k_s:e} 1/m: {source}")]
    BandScan { k_s: f64, source: Box<Error> },

    #[error("pde march failed at tau = {tau:e} s: {reason}; refine the grid")]
    StepSize { tau: f64, reason: String },

    #[error("sample count mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
