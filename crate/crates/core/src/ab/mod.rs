//! Flux, channel structure, symmetry-preserving extension families, and the
//! direct-integral spectrum assembly of the solenoid Hamiltonian, with
//! desk-scale validation of the diagonalizing transform.

mod family;
mod flux;
mod tau;
mod transform;

pub use family::{
    ab_spectrum, build_family, AbFamilySpec, AbSpectrumReport, BoundPoint, ChannelCurve,
    CurvePoint, FamilyAssignment, FamilyChannel,
};
pub use flux::{
    channel_kappa, channel_operator, m_of_phi, singular_channels, Channel, ChannelOperator,
    FluxParameter,
};
pub use tau::{TauExpr, TauSpec};
pub use transform::{
    channel_window, transform_checks, transform_forward, trapezoid_weights, AnalyticField,
    ChannelAmplitudes, CylindricalField, CylindricalGrid, HarmonicMode, ModeSum,
    TransformDiagnostics,
};

use thiserror::Error;

use crate::ext::ExtError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum AbError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
