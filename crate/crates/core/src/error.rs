use std::fmt;

use thiserror::Error;

/// Which cluster condition a node pair violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Two nodes of one cluster are closer than Δ.
    MinSeparation,
    /// Two nodes of one cluster are farther apart than τΔ.
    ClusterDiameter,
    /// Two nodes of different clusters are closer than θ.
    InterClusterSeparation,
    /// A linked cluster has more than ℓ nodes.
    Multiplicity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::MinSeparation => "within-cluster distance below delta",
            Self::ClusterDiameter => "within-cluster distance above tau*delta",
            Self::InterClusterSeparation => "inter-cluster distance below theta",
            Self::Multiplicity => "cluster multiplicity above ell",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("validation failed for nodes {i} and {j}: {violation} (distance {distance})")]
    Validation {
        i: usize,
        j: usize,
        violation: Violation,
        distance: String,
    },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual})")]
    NoConvergence { sweeps: usize, residual: String },
    #[error("insufficient precision: {0}")]
    Precision(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl LabError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidParameter(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Self::DegenerateInput(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Self::Parse(msg.into())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
