use thiserror::Error;

/// Errors for rejected inputs. Verification *verdicts* (a theorem check that
/// fails on some instance) are values, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("topology axiom violation: {0}")]
    Topology(String),
    #[error("invalid open set index {0}")]
    BadOpen(usize),
    #[error("invalid point index {0}")]
    BadPoint(usize),
    #[error("open {sub} is not contained in open {sup}")]
    NotSubOpen { sub: usize, sup: usize },
    #[error("values live over different spaces or fields")]
    SpaceMismatch,
    #[error("submodules have different ambient presheaves")]
    AmbientMismatch,
    #[error("not a basis: singular on component {component} of open {open}")]
    SingularBasis { open: usize, component: usize },
    #[error("left kernel is nonzero: witness section over open {open}")]
    NonzeroLeftKernel { open: usize },
    #[error("restriction compatibility fails for opens ({sup}, {sub})")]
    IncompatibleRestriction { sup: usize, sub: usize },
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
