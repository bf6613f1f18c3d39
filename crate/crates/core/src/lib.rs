//! Varying-exponent Lebesgue norms defined by an ODE, nested varying-exponent
//! sequence norms, and the stage maps that embed the former into ultrapowers
//! of the latter.

pub mod approx;
pub mod certify;
pub mod embed;
pub mod exponents;
pub mod odenorm;
pub mod props;
pub mod registry;
pub mod seminorm;
pub mod seqspace;

use thiserror::Error;

/// Any error raised by this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Exponent(#[from] exponents::ExponentError),
    #[error(transparent)]
    Seq(#[from] seqspace::SeqError),
    #[error(transparent)]
    Norm(#[from] odenorm::NormError),
    #[error(transparent)]
    Approx(#[from] approx::ApproxError),
    #[error(transparent)]
    Seminorm(#[from] seminorm::SeminormError),
    #[error(transparent)]
    Embed(#[from] embed::EmbedError),
    #[error(transparent)]
    Certify(#[from] certify::CertifyError),
    #[error(transparent)]
    Strategy(#[from] registry::UnknownStrategy),
}

impl Error {
    /// True when a search or stage budget ran out, as opposed to invalid input.
    pub fn is_budget(&self) -> bool {
        match self {
            Error::Exponent(e) => {
                matches!(
                    e,
                    exponents::ExponentError::BudgetExceeded { .. } | exponents::ExponentError::Exhausted
                )
            }
            Error::Seq(seqspace::SeqError::Enumeration(e)) => Error::Exponent(e.clone()).is_budget(),
            Error::Embed(e) => e.is_budget(),
            Error::Certify(e) => e.is_budget(),
            _ => false,
        }
    }
}
