use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zeta index {0:?} is not admissible (needs a leading entry >= 2 and all entries >= 1)")]
    Inadmissible(Vec<u32>),
    #[error("coefficient domains differ: {0} vs {1}")]
    DomainMismatch(&'static str, &'static str),
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("series has a nonzero constant term")]
    NonzeroConstant,
    #[error("series constant term is not 1")]
    NonUnitConstant,
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("singularity at {what} (distance {distance:.3e})")]
    Singular { what: String, distance: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("endpoints do not match: {0}")]
    EndpointMismatch(String),
    #[error("boundary condition violated for {name}: {detail}")]
    Boundary { name: String, detail: String },
    #[error("non-finite value produced")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, Error>;
