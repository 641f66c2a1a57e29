use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root refinement did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("equilibrium residual {residual:e} exceeds tolerance {tolerance:e}")]
    EquilibriumResidual { residual: f64, tolerance: f64 },

    #[error("|G(i omega)| = {modulus} deviates from 1 (omega = {omega})")]
    NotAFrequencyRoot { omega: f64, modulus: f64 },

    #[error("degenerate Hopf point: {0}")]
    DegenerateHopf(String),

    #[error("near-singular linear system (condition estimate {condition:e}): {context}")]
    Singular { condition: f64, context: &'static str },

    #[error("eigenproblem residual {residual:e} exceeds tolerance: {context}")]
    EigenResidual { residual: f64, context: &'static str },

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("invalid step: {0}")]
    InvalidStep(String),
}

pub type Result<T> = std::result::Result<T, Error>;
