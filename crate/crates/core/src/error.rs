use thiserror::Error;

use crate::dp::DpSolution;

/// Name of a model parameter, used to point at the offending field in
/// validation errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamField {
    C,
    Gamma,
    Beta,
    Delta,
    Sigma,
}

impl ParamField {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamField::C => "c",
            ParamField::Gamma => "gamma",
            ParamField::Beta => "beta",
            ParamField::Delta => "delta",
            ParamField::Sigma => "sigma",
        }
    }
}

impl std::fmt::Display for ParamField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field} = {value}: {reason}")]
    Domain {
        field: String,
        value: f64,
        reason: &'static str,
    },

    #[error("certainty equivalent is undefined without a contract")]
    NoContract,

    #[error(
        "participation constraint violated: certainty equivalent {ce} below reference {reference}"
    )]
    ParticipationViolated { ce: f64, reference: f64 },

    #[error("tabulated policy cannot cover reference {reference} (grid [{r_min}, {r_max}])")]
    PolicyRange {
        reference: f64,
        r_min: f64,
        r_max: f64,
    },

    #[error("invalid quadrature node count {nodes}: {reason}")]
    Quadrature { nodes: usize, reason: &'static str },

    #[error("value iteration did not converge after {iterations} iterations (sup-norm change {sup_delta:e})")]
    NoConvergence {
        iterations: usize,
        sup_delta: f64,
        /// Last iterate, with the failure recorded in its report.
        partial: Box<DpSolution>,
    },
}

impl Error {
    pub(crate) fn domain(field: impl Into<String>, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            field: field.into(),
            value,
            reason,
        }
    }

    pub(crate) fn param(field: ParamField, value: f64, reason: &'static str) -> Self {
        Self::domain(field.as_str(), value, reason)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
