use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("decoy ratio lock violated: nu_a/mu_a = {alice}, nu_b/mu_b = {bob}")]
    RatioLock { alice: f64, bob: f64 },

    #[error("count table: {0}")]
    CountTable(String),

    #[error("count table is missing pair `{0}`")]
    MissingPair(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Rejects NaN and values outside `[lo, hi]`.
pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_nan() || value < lo || value > hi {
        return Err(Error::invalid(
            name,
            format!("{value} is outside [{lo}, {hi}]"),
        ));
    }
    Ok(())
}
