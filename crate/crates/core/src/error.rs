use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented bound.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("endpoint pair excluded: r = {r}, p = {p} (need r > 2)")]
    Endpoint { r: String, p: String },

    #[error("governing equation has no solution: {0}")]
    NoSolution(String),

    #[error("degenerate assumptions: {0}")]
    DegenerateAssumptions(String),

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ellipticity violated: {0}")]
    Ellipticity(String),

    /// Condition (A1) fails: the symbol gradient along the solved axis vanishes.
    #[error("degenerate characteristic point: {0}")]
    Degeneracy(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("grid too small: {0}")]
    DomainSize(String),

    #[error("placement error: {0}")]
    Placement(String),

    #[error("caustic at t = {time:.6}: {detail}")]
    Caustic { time: f64, detail: String },

    #[error("characteristics escape the sampled box: {0}")]
    DomainEscape(String),

    #[error("over budget: {0}")]
    Budget(String),

    #[error("degenerate regression design: {0}")]
    Collinear(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid experiment: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Same variant with `ctx` prefixed to the message.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        let wrap = |m: String| format!("{ctx}: {m}");
        match self {
            Error::Domain(m) => Error::Domain(wrap(m)),
            Error::NoSolution(m) => Error::NoSolution(wrap(m)),
            Error::DegenerateAssumptions(m) => Error::DegenerateAssumptions(wrap(m)),
            Error::Aliasing(m) => Error::Aliasing(wrap(m)),
            Error::Dimension(m) => Error::Dimension(wrap(m)),
            Error::Ellipticity(m) => Error::Ellipticity(wrap(m)),
            Error::Degeneracy(m) => Error::Degeneracy(wrap(m)),
            Error::RootFinding(m) => Error::RootFinding(wrap(m)),
            Error::Resolution(m) => Error::Resolution(wrap(m)),
            Error::DomainSize(m) => Error::DomainSize(wrap(m)),
            Error::Placement(m) => Error::Placement(wrap(m)),
            Error::Caustic { time, detail } => Error::Caustic { time, detail: wrap(detail) },
            Error::DomainEscape(m) => Error::DomainEscape(wrap(m)),
            Error::Budget(m) => Error::Budget(wrap(m)),
            Error::Collinear(m) => Error::Collinear(wrap(m)),
            Error::Data(m) => Error::Data(wrap(m)),
            Error::Config(m) => Error::Config(wrap(m)),
            e @ Error::Endpoint { .. } => e,
        }
    }
}
