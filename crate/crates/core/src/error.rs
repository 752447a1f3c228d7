use thiserror::Error;

pub type Result<T> = std::result::Result<T, FnlsError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FnlsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("density exponent {exponent} overflows")]
    Overflow { exponent: f64 },

    #[error("{flagged} of {total} samples returned non-finite values")]
    TooManyNonFinite { flagged: usize, total: usize },

    #[error("time grid is not uniform")]
    NonUniformGrid,

    #[error("trajectory covers [{have_lo}, {have_hi}] but [{need_lo}, {need_hi}] is required")]
    Coverage { need_lo: f64, need_hi: f64, have_lo: f64, have_hi: f64 },
}
