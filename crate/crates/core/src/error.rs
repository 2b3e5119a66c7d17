use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("k = {0} lies on the open branch cut, the sheets meet there")]
    BranchCut(Complex64),
    #[error("k coincides with the branch point x, λ has a pole there")]
    Pole,
    #[error("z = {0} lies on the unit circle, the sheet is ambiguous")]
    SheetAmbiguity(Complex64),
    #[error("spectral point k = {0} lies on the forbidden interval")]
    ForbiddenInterval(Complex64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown datum family `{0}`")]
    UnknownFamily(String),
    #[error("invalid table: {0}")]
    Table(String),
    #[error("integrator failed: {0}")]
    Integrator(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("corner extrapolation does not converge (spread {spread:e}); datum inconsistent with α = {alpha}")]
    CornerDivergence { alpha: f64, spread: f64 },
    #[error("evaluation point {0} is closer to the contour than the node spacing")]
    NearContour(Complex64),
    #[error("I - C_w is numerically singular (condition estimate {0:e})")]
    SingularSystem(f64),
    #[error("recovery denominator 1 + m11 + m21 vanishes")]
    Degenerate,
    #[error("solver check failed: {0}")]
    Check(String),
}

pub type Result<T> = std::result::Result<T, Error>;
