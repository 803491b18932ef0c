use serde::{Deserialize, Serialize};

use super::SlError;

/// One end of the base interval; singular problems use `Finite(0.0)` or an
/// infinite end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Finite(f64),
    NegInfinity,
    PosInfinity,
}

impl Endpoint {
    pub fn finite_value(&self) -> Option<f64> {
        match self {
            Endpoint::Finite(v) => Some(*v),
            _ => None,
        }
    }

    fn as_f64(&self) -> f64 {
        match self {
            Endpoint::Finite(v) => *v,
            Endpoint::NegInfinity => f64::NEG_INFINITY,
            Endpoint::PosInfinity => f64::INFINITY,
        }
    }
}

/// Open interval (a, b), a < b, either end possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    a: Endpoint,
    b: Endpoint,
}

impl Interval {
    pub fn new(a: Endpoint, b: Endpoint) -> Result<Self, SlError> {
        if let Endpoint::Finite(v) = a {
            if !v.is_finite() {
                return Err(SlError::InvalidInterval("left endpoint is not finite".into()));
            }
        }
        if let Endpoint::Finite(v) = b {
            if !v.is_finite() {
                return Err(SlError::InvalidInterval("right endpoint is not finite".into()));
            }
        }
        if !(a.as_f64() < b.as_f64()) {
            return Err(SlError::InvalidInterval(format!(
                "need a < b, got ({:?}, {:?})",
                a, b
            )));
        }
        Ok(Self { a, b })
    }

    /// The half-line (0, infinity) of the radial problems.
    pub fn positive_half_line() -> Self {
        Self {
            a: Endpoint::Finite(0.0),
            b: Endpoint::PosInfinity,
        }
    }

    pub fn bounded(a: f64, b: f64) -> Result<Self, SlError> {
        Self::new(Endpoint::Finite(a), Endpoint::Finite(b))
    }

    pub fn left(&self) -> Endpoint {
        self.a
    }

    pub fn right(&self) -> Endpoint {
        self.b
    }

    pub fn lower_bound(&self) -> f64 {
        self.a.as_f64()
    }

    pub fn upper_bound(&self) -> f64 {
        self.b.as_f64()
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x.is_finite() && x > self.a.as_f64() && x < self.b.as_f64()
    }
}
