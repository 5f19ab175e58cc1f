use thiserror::Error;

/// Failure modes shared across the crate.
///
/// Variants carry enough numbers to write a diagnostics record without
/// re-running the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("{what} = {value} outside the admissible range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("radius {r} outside the metric domain (0, {r_max}]")]
    Domain { r: f64, r_max: f64 },

    #[error("no admissible shift a found for the March construction with c = {c}")]
    NoAdmissibleShift { c: f64 },

    #[error("ODE integration failed at r = {r}: step size {step} below minimum")]
    IntegrationFailure { r: f64, step: f64 },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (error estimate {estimate})")]
    QuadratureFailure { a: f64, b: f64, estimate: f64 },

    #[error("horizon {horizon} too small for a stable tail fit")]
    HorizonTooSmall { horizon: f64 },

    #[error("defining integral diverges; no barrier exists")]
    CriterionDivergent,

    #[error("defining integral could not be classified; no barrier certified")]
    CriterionInconclusive,

    #[error("criterion verdict is inconclusive at c = {c}")]
    ScanInconclusive { c: f64 },

    #[error("both endpoints classify identically ({status}); no threshold inside the range")]
    NonMonotoneEndpoints { status: &'static str },

    #[error("gradient of the barrier vanishes at r = {r}, theta = {theta}")]
    DegenerateGradient { r: f64, theta: f64 },

    #[error("spherical Hessian bound {sup_hess} not below {bound}; rescale b by at most {required_scale}")]
    HessianTooLarge {
        sup_hess: f64,
        bound: f64,
        required_scale: f64,
    },

    #[error("barrier search exhausted after {doublings} doublings of k")]
    SearchExhausted { doublings: u32 },

    #[error("radial stretch ratio {ratio} exceeds 1.2")]
    StretchTooLarge { ratio: f64 },

    #[error("nonlinear solve did not converge in {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear system is singular at pivot {pivot}")]
    DegenerateSystem { pivot: usize },

    #[error("sample for t = {t} missing from the oscillation record")]
    MissingSample { t: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
