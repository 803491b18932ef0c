use serde::Serialize;

use super::potential::Potential;
use super::solution::{PointState, ProblemTag, Solution};
use super::SlError;

/// Closed-form homogeneous solutions of -u'' + (kappa^2 - 1/4)/r^2 u = 0:
/// r^(1/2 + kappa) and r^(1/2 - kappa), or (r^(1/2), r^(1/2) ln r) at
/// kappa = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrobeniusBranch {
    Power { exponent: f64 },
    SqrtLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusSolution {
    kappa: f64,
    branch: FrobeniusBranch,
    tag: ProblemTag,
}

impl FrobeniusSolution {
    fn new(kappa: f64, branch: FrobeniusBranch) -> Self {
        Self {
            kappa,
            branch,
            tag: ProblemTag {
                potential: Potential::inverse_square(kappa),
                energy: 0.0,
            },
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn branch(&self) -> FrobeniusBranch {
        self.branch
    }

    pub fn value(&self, r: f64) -> f64 {
        match self.branch {
            FrobeniusBranch::Power { exponent } => r.powf(exponent),
            FrobeniusBranch::SqrtLog => r.sqrt() * r.ln(),
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        match self.branch {
            FrobeniusBranch::Power { exponent } => exponent * r.powf(exponent - 1.0),
            FrobeniusBranch::SqrtLog => (0.5 * r.ln() + 1.0) / r.sqrt(),
        }
    }

    pub fn deriv2(&self, r: f64) -> f64 {
        match self.branch {
            FrobeniusBranch::Power { exponent } => {
                exponent * (exponent - 1.0) * r.powf(exponent - 2.0)
            }
            FrobeniusBranch::SqrtLog => -0.25 * r.ln() / r.powf(1.5),
        }
    }
}

impl Solution for FrobeniusSolution {
    fn eval(&self, x: f64) -> Result<PointState, SlError> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(SlError::OutOfRange {
                x,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(PointState {
            u: self.value(x),
            du: self.deriv(x),
        })
    }

    fn problem(&self) -> Option<&ProblemTag> {
        Some(&self.tag)
    }
}

/// The closed-form pair (psi1, psi2) for the inverse-square problem.
pub fn frobenius_pair(kappa: f64) -> (FrobeniusSolution, FrobeniusSolution) {
    if kappa == 0.0 {
        (
            FrobeniusSolution::new(0.0, FrobeniusBranch::Power { exponent: 0.5 }),
            FrobeniusSolution::new(0.0, FrobeniusBranch::SqrtLog),
        )
    } else {
        (
            FrobeniusSolution::new(
                kappa,
                FrobeniusBranch::Power {
                    exponent: 0.5 + kappa,
                },
            ),
            FrobeniusSolution::new(
                kappa,
                FrobeniusBranch::Power {
                    exponent: 0.5 - kappa,
                },
            ),
        )
    }
}

/// W(psi1, psi2), constant in r: -2*kappa for kappa != 0, and 1 at kappa = 0.
pub fn frobenius_wronskian(kappa: f64) -> f64 {
    if kappa == 0.0 {
        1.0
    } else {
        -2.0 * kappa
    }
}
