use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("finite-difference stencil leaves the domain at ({r1}, {r2})")]
    StencilOutOfDomain { r1: f64, r2: f64 },

    #[error("point ({r1}, {r2}) lies outside the domain")]
    OutOfDomain { r1: f64, r2: f64 },

    #[error("potential `{name}` vanishes at ({r1}, {r2})")]
    ZeroPotential { name: &'static str, r1: f64, r2: f64 },

    #[error("degenerate jet: first derivative vanishes at t = {t}")]
    DegenerateJet { t: f64 },

    #[error("ODE solution escaped |y| <= {bound} at t = {t}")]
    OdeBlowUp { t: f64, bound: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("integration step underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("sphere degenerates to a plane (|y0 + y1| = {denom:e})")]
    PlaneAtInfinity { denom: f64 },

    #[error("curvature spheres coincide (|w1 - w2| = {gap:e})")]
    UmbilicDegeneracy { gap: f64 },

    #[error("degenerate parametrization at ({r1}, {r2})")]
    DegenerateParametrization { r1: f64, r2: f64 },

    #[error("umbilic point at ({r1}, {r2})")]
    UmbilicPoint { r1: f64, r2: f64 },

    #[error("third fundamental form degenerates at ({r1}, {r2})")]
    DegenerateThirdForm { r1: f64, r2: f64 },

    #[error("canal-type input: principal radius w{direction} is infinite")]
    CanalTypeInput { direction: u8 },

    #[error("metric degenerates at ({r1}, {r2})")]
    MetricDegenerate { r1: f64, r2: f64 },

    #[error("pole of the profile at y = {y}")]
    PoleOnGrid { y: f64 },

    #[error("vectors are linearly dependent")]
    DependentVectors,

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
