use num_complex::Complex64;
use thiserror::Error;

use crate::complexplane::PoleRecord;
use crate::materials::MaterialError;
use crate::specfun::SpecFunError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no convergence after {iterations} iterations (last estimate {last})")]
    NoConvergence { iterations: usize, last: Complex64 },
    #[error("iteration left the admissible domain at {0}")]
    DivergedOutOfDomain(Complex64),
    #[error("multipole sum not converged at order {order} (relative tail {tail:.3e})")]
    SeriesNotConverged { order: usize, tail: f64 },
    #[error("contour quadrature did not settle: {0}")]
    QuadratureNotConverged(String),
    #[error("contour at {center} (radius {radius:.3e}) appears to enclose more than one singularity")]
    MultipleSingularities { center: Complex64, radius: f64 },
    #[error("function magnitude varies by {decades:.1} decades on the contour")]
    IllConditioned { decades: f64 },
    #[error("function value vanishes at {0}")]
    ZeroValue(Complex64),
    #[error("expected a simple singularity at {location}, winding number is {winding}")]
    SimplePoleViolation { location: Complex64, winding: i64 },
    #[error("singularity at {0} lies on the real axis; linewidth is zero")]
    RealAxisPole(Complex64),
    #[error("lost track of the singularity at path parameter {parameter}")]
    LostTrack {
        parameter: f64,
        last: Option<Box<PoleRecord>>,
    },
    #[error("transfer matrix is singular at omega = {0}")]
    SingularTransfer(Complex64),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}
