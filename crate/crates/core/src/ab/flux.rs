use serde::{Deserialize, Serialize};

use super::AbError;
use crate::sl::Potential;
use crate::weyl::ExtensionStructure;

/// Dimensionless reduced flux of the solenoid; the physical constants are
/// absorbed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxParameter(f64);

impl FluxParameter {
    pub fn new(phi: f64) -> Result<Self, AbError> {
        if !phi.is_finite() || phi.abs() >= 2f64.powi(52) {
            return Err(AbError::Validation(format!("flux must be finite, got {phi}")));
        }
        Ok(Self(phi))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.fract() == 0.0
    }
}

/// The unique integer with m - phi in (-1, 0], i.e. floor(phi).
pub fn m_of_phi(phi: FluxParameter) -> i64 {
    phi.0.floor() as i64
}

/// Channels whose radial operator is not essentially self-adjoint:
/// exactly those with |m - phi| < 1.
pub fn singular_channels(phi: FluxParameter) -> Vec<i64> {
    let m = m_of_phi(phi);
    if phi.is_integer() {
        vec![m]
    } else {
        vec![m, m + 1]
    }
}

/// kappa = m - phi in reduced form: the integer offset from floor(phi) minus
/// the fractional part. Channels related by (phi, m) -> (phi+1, m+1) get
/// bit-identical kappa whenever phi+1 is exact.
pub fn channel_kappa(m: i64, phi: FluxParameter) -> f64 {
    let base = m_of_phi(phi);
    let frac = phi.0 - base as f64;
    (m - base) as f64 - frac
}

/// One point of the direct-integral base space S = Z x R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Channel {
    pub m: i64,
    pub p: f64,
    pub kappa: f64,
}

impl Channel {
    pub fn new(m: i64, p: f64, phi: FluxParameter) -> Self {
        Self {
            m,
            p,
            kappa: channel_kappa(m, phi),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.kappa.abs() < 1.0
    }
}

/// Handle on the radial channel operator h_{m-phi} + p^2.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelOperator {
    pub channel: Channel,
    pub shift: f64,
    pub structure: ExtensionStructure,
}

impl ChannelOperator {
    pub fn radial_potential(&self) -> Potential {
        Potential::inverse_square(self.channel.kappa)
    }
}

pub fn channel_operator(m: i64, p: f64, phi: FluxParameter) -> ChannelOperator {
    let channel = Channel::new(m, p, phi);
    let structure = if channel.is_singular() {
        ExtensionStructure::OneParameterFamily
    } else {
        ExtensionStructure::EssentiallySelfAdjoint
    };
    ChannelOperator {
        channel,
        shift: p * p,
        structure,
    }
}
