//! Error type shared by all solver stages.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spectral point within {margin:e} of the Rayleigh branch point |kappa_{n}| = {branch}")]
    BranchPointProximity { n: i64, branch: f64, margin: f64 },

    #[error("Green function evaluated at coincident source and observation points")]
    SingularArgument,

    #[error("series for {what} did not reach tolerance {tol:e} within {max_terms} terms")]
    NonConvergence {
        what: &'static str,
        tol: f64,
        max_terms: usize,
    },

    #[error("interior cavity mode resonance: |sin gamma_{m}| = {value:e} below tolerance")]
    ModeResonance { m: usize, value: f64 },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("linear system is singular (condition estimate {cond:e})")]
    SingularSystem { cond: f64 },

    #[error("discretized operator is singular")]
    SingularOperator,

    #[error("evaluation point outside the valid region: {0}")]
    OutsideValidRegion(String),

    #[error("lambda vanishes at the requested point (exactly on a resonance)")]
    DivisionByZeroLambda,

    #[error("contour passes through a zero of lambda (|lambda| = {min_abs:e})")]
    ContourThroughZero { min_abs: f64 },

    #[error("contour crosses a branch cut of zeta_{n}")]
    BranchCut { n: i64 },

    #[error("root refinement did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("root iterate escaped the seeding box")]
    EscapedRegion,

    #[error("argument-principle count {found} disagrees with the refined root count {expected}")]
    RootCountMismatch { expected: i64, found: i64 },

    #[error("Fano feature not bracketed up to window factor c = {c_max} (best dip {best_dip}, best peak {best_peak})")]
    FeatureNotFound {
        c_max: f64,
        best_dip: f64,
        best_peak: f64,
    },

    #[error("spectral point outside the single-propagating-mode diamond")]
    OutsideDiamond,
}

pub type Result<T> = std::result::Result<T, Error>;
