//! Boundary parametrization of self-adjoint extensions: the rho/sigma
//! splitting, the canonical (C, theta) decomposition, extension descriptors,
//! and domain-membership tests.

mod descriptor;
mod sigma;

pub use descriptor::{
    canonical_c_theta, extension_from_theta, extensions_equal, radial_half_line, theta_decompose,
    BoundaryCombination, BoundaryParameter, ExtensionDescriptor, ExtensionKind, Frame,
};
pub use sigma::{
    boundary_wronskian_limit, domain_membership, rho_sigma, C2Fn, CutoffTimes, ExtControls,
    Membership, SigmaDecomposition, SigmaPart,
};

use thiserror::Error;

use crate::sl::SlError;
use crate::weyl::ClassifyError;

#[derive(Debug, Error)]
pub enum ExtError {
    #[error("theta = {0} is outside [0, pi)")]
    InvalidTheta(f64),
    #[error("fundamental system is numerically degenerate")]
    DegenerateFrame,
    #[error("the solution is trivial; no boundary angle exists")]
    TrivialSolution,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("usage error: {0}")]
    UsageError(String),
    #[error("integrability failure: {0}")]
    IntegrabilityError(String),
    #[error(transparent)]
    Sl(#[from] SlError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}
