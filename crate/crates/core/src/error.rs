use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op} failed to converge on a {rows}x{cols} matrix")]
    NonConvergence {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not an isometry (deviation {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("site {site} out of range for a {num_sites}-site state")]
    SiteOutOfRange { site: usize, num_sites: usize },

    #[error("bond {bond} out of range for a {num_sites}-site state")]
    BondOutOfRange { bond: usize, num_sites: usize },

    #[error("{num_sites} sites exceeds the dense statevector cap of {cap}")]
    TooLarge { num_sites: usize, cap: usize },

    #[error("bond {bond} has dimension {dim}, expected at most 2")]
    BondTooLarge { bond: usize, dim: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
