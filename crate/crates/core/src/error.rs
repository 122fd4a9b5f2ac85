use thiserror::Error;

use crate::ortho::Infeasibility;

/// Errors raised by the channel, orthogonalization and power-minimization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("orthogonalization infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error("{what} violates its constraint (residual {residual:e})")]
    Constraint { what: &'static str, residual: f64 },

    #[error("{what} is ill-conditioned (condition number {condition:e})")]
    IllConditioned { what: &'static str, condition: f64 },

    #[error("enumeration budget exceeded: {needed} candidates, limit {limit}")]
    Budget { needed: u128, limit: u128 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
