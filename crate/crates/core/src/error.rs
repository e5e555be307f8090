use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficients are not real-valued: c(-{freq}) differs from conj c({freq}) by {defect:e}")]
    NotRealValued { freq: i64, defect: f64 },
    #[error("plane-wave cutoff {cutoff} is smaller than the potential bandwidth {bandwidth}")]
    CutoffTooSmall { cutoff: usize, bandwidth: usize },
    #[error("requested {requested} bands but at most {available} are reliable at this cutoff")]
    BandCountTooLarge { requested: usize, available: usize },
    #[error("eigensolver failure: {0}")]
    SolverFailure(String),
    #[error("symmetry violated: {0}")]
    SymmetryViolated(String),
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("no Dirac degeneracy: |E_n(pi) - E_(n+1)(pi)| = {gap:e}")]
    NotDegenerate { gap: f64 },
    #[error("Fermi velocity {nu} has the wrong sign for gap index {n}")]
    SignMismatch { n: usize, nu: f64 },
    #[error("hypothesis (H2) violated: min |theta(t)| = {min_modulus:e} at t = {t}")]
    H2Violated { min_modulus: f64, t: f64 },
    #[error("winding {winding} is even; the coupling curve is under-resolved")]
    NotOdd { winding: i64 },
    #[error("phase increments exceed a quarter turn between samples {index} and {next}")]
    CurveUnderresolved { index: usize, next: usize },
    #[error("hypothesis (H1) violated: gap {gap:e} at s = {s}, t = {t}")]
    H1Violated { gap: f64, s: f64, t: f64 },
    #[error("spectral gap closed at torus node (xi = {xi}, t = {t}): gap {gap:e}")]
    GapClosedAtNode { xi: f64, t: f64, gap: f64 },
    #[error("plaquette flux {flux} is too close to pi; refine the grid")]
    PlaquetteSaturated { flux: f64 },
    #[error("link variable modulus {modulus:e} vanishes")]
    VortexOnLink { modulus: f64 },
    #[error("Chern sum {raw} is not within 1e-6 of an integer")]
    NotQuantized { raw: f64 },
    #[error("t = {t} lies outside the open interval (0, 2 pi)")]
    OutOfRange { t: f64 },
    #[error("energy {energy} has no decaying direction (gap edge {edge})")]
    NoDecayingDirection { energy: f64, edge: f64 },
    #[error("branch tracking is ambiguous near t = {t}")]
    BranchTrackingAmbiguous { t: f64 },
    #[error("domain half-length {half_length} is below the required {required}")]
    DomainTooSmall { half_length: f64, required: f64 },
    #[error("energy {energy} is not inside the bulk gap: Floquet multiplier modulus {modulus}")]
    InGapViolation { energy: f64, modulus: f64 },
    #[error("expected {expected} junction states, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("crossing branch localized at <x> = {center} cannot be classified")]
    UnclassifiedBranch { center: f64 },
    #[error("Fourier condition violated: {0}")]
    FourierConditionViolated(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("corrupt cache entry {0}")]
    CacheCorrupt(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the analytic hypotheses rather than of the code.
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(
            self,
            Error::H1Violated { .. }
                | Error::H2Violated { .. }
                | Error::GapClosedAtNode { .. }
                | Error::NotDegenerate { .. }
                | Error::InGapViolation { .. }
                | Error::FourierConditionViolated(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
