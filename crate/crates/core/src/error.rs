use thiserror::Error;

/// Errors raised by the density catalog, the maps, and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("point {re}+{im}i is not interior to the domain")]
    NotInterior { re: f64, im: f64 },

    #[error("start point lies on the boundary")]
    StartOnBoundary,

    #[error("map `{map}` is not analytic at {re}+{im}i")]
    Singular { map: String, re: f64, im: f64 },

    #[error("derivative of `{map}` vanishes at a preimage of the target point")]
    BranchPoint { map: String },

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("series did not converge within {terms} terms (achieved bound {bound})")]
    Series { terms: usize, bound: f64 },

    #[error("unknown identifier `{0}`")]
    Unknown(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
