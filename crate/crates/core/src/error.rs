use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("NonCoercive: rho*m0 + m1 has minimum {gamma} <= 0")]
    NonCoercive { gamma: f64 },
    #[error("BadPartition: {0}")]
    BadPartition(String),
    #[error("BadWeight: rho = {0} must be positive")]
    BadWeight(f64),
    #[error("DegreeTooSmall: degree {got}, need at least {min}")]
    DegreeTooSmall { got: usize, min: usize },
    #[error("UnresolvedRegion: region boundary x = {x} is not a node of the {cells}-cell mesh")]
    UnresolvedRegion { x: f64, cells: usize },
    #[error("BoundaryMismatch: first component is {value} at x = {x}, expected 0")]
    BoundaryMismatch { x: f64, value: f64 },
    #[error("KinkNotResolved: source kink at t = {t} lies inside a time slab")]
    KinkNotResolved { t: f64 },
    #[error("SingularSystem: slab {slab}: {detail}")]
    SingularSystem { slab: usize, detail: String },
    #[error("OutOfDomain: ({t}, {x}) is outside the space-time domain")]
    OutOfDomain { t: f64, x: f64 },
    #[error("NotAKnot: t = {0} is not a partition knot")]
    NotAKnot(f64),
    #[error("NotNested: {0}")]
    NotNested(String),
    #[error("StabilityViolated: minimum margin {margin} at knot {knot} (scale {scale})")]
    StabilityViolated { knot: usize, margin: f64, scale: f64 },
    #[error("ZeroError: error vanishes at level {0}, rate undefined")]
    ZeroError(usize),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("Io: {0}")]
    Io(String),
    #[error("BadDump: {0}")]
    BadDump(String),
}

impl Error {
    /// Errors caused by the input description rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::NonCoercive { .. }
                | Error::BadPartition(_)
                | Error::BadWeight(_)
                | Error::DegreeTooSmall { .. }
                | Error::UnresolvedRegion { .. }
                | Error::BoundaryMismatch { .. }
                | Error::KinkNotResolved { .. }
                | Error::InvalidConfig(_)
                | Error::NotNested(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
