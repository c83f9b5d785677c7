use thiserror::Error;

use crate::params::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {}", format_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("{0}")]
    InvalidArgument(String),

    /// Expected retransmission count diverges.
    #[error("success probability product is zero (rho_u = {rho_u}, rho_d = {rho_d})")]
    ZeroSuccess { rho_u: f64, rho_d: f64 },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (value {value:e}, error estimate {abs_error:e})"
    )]
    NonConvergence {
        value: f64,
        abs_error: f64,
        subdivisions: usize,
    },

    #[error("typical base station left unpaired in {resamples} of {iterations} iterations")]
    ExcessiveResampling { resamples: u64, iterations: u64 },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
