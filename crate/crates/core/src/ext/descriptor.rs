use serde::{Deserialize, Serialize};

use super::ExtError;
use crate::sl::{
    frobenius_pair, frobenius_wronskian, Interval, PointState, Potential, ProblemTag, Solution,
    Trajectory,
};
use crate::weyl::{extension_structure, ClassifyControls, ExtensionStructure};

/// Boundary angle theta in [0, pi) selecting a self-adjoint realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundaryParameter(f64);

impl BoundaryParameter {
    pub fn new(theta: f64) -> Result<Self, ExtError> {
        if !theta.is_finite() || !(0.0..std::f64::consts::PI).contains(&theta) {
            return Err(ExtError::InvalidTheta(theta));
        }
        Ok(Self(theta))
    }

    /// Reduce an arbitrary finite angle modulo pi into [0, pi).
    pub fn canonical(theta: f64) -> Result<Self, ExtError> {
        if !theta.is_finite() {
            return Err(ExtError::InvalidTheta(theta));
        }
        let mut t = theta.rem_euclid(std::f64::consts::PI);
        if t >= std::f64::consts::PI {
            t = 0.0;
        }
        Ok(Self(t))
    }

    pub fn angle(&self) -> f64 {
        self.0
    }

    /// Distance on the projective circle of boundary conditions.
    pub fn circular_distance(&self, other: &BoundaryParameter) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(std::f64::consts::PI - d)
    }
}

/// The fundamental system a boundary angle refers to.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Closed-form pair r^(1/2+kappa), r^(1/2-kappa) (log pair at kappa = 0).
    Frobenius { kappa: f64 },
    /// Numerically built pair normalized at `anchor`. Experimental: supports
    /// potentials without closed-form endpoint behavior.
    Numeric {
        f1: Trajectory,
        f2: Trajectory,
        anchor: f64,
    },
}

impl Frame {
    pub fn anchor(&self) -> f64 {
        match self {
            Frame::Frobenius { .. } => 1.0,
            Frame::Numeric { anchor, .. } => *anchor,
        }
    }

    pub fn basis_at(&self, x: f64) -> Result<(PointState, PointState), ExtError> {
        match self {
            Frame::Frobenius { kappa } => {
                let (p1, p2) = frobenius_pair(*kappa);
                Ok((p1.eval(x)?, p2.eval(x)?))
            }
            Frame::Numeric { f1, f2, .. } => Ok((f1.eval(x)?, f2.eval(x)?)),
        }
    }

    /// W(f1, f2) at the anchor (constant for true solutions).
    pub fn basis_wronskian(&self) -> Result<f64, ExtError> {
        match self {
            Frame::Frobenius { kappa } => Ok(frobenius_wronskian(*kappa)),
            Frame::Numeric { .. } => {
                let x = self.anchor();
                let (b1, b2) = self.basis_at(x)?;
                let w = b1.u * b2.du - b1.du * b2.u;
                if w.abs() < 1e-12 {
                    Err(ExtError::DegenerateFrame)
                } else {
                    Ok(w)
                }
            }
        }
    }

    fn problem_tag(&self) -> ProblemTag {
        match self {
            Frame::Frobenius { kappa } => ProblemTag {
                potential: Potential::inverse_square(*kappa),
                energy: 0.0,
            },
            Frame::Numeric { f1, .. } => ProblemTag {
                potential: f1.potential().clone(),
                energy: f1.energy(),
            },
        }
    }
}

/// c1 * f1 + c2 * f2 over a frame; the concrete boundary solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCombination {
    frame: Frame,
    c1: f64,
    c2: f64,
    #[serde(skip)]
    tag: ProblemTag,
}

impl BoundaryCombination {
    pub fn new(frame: Frame, c1: f64, c2: f64) -> Self {
        let tag = frame.problem_tag();
        Self { frame, c1, c2, tag }
    }

    pub fn coefficients(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }
}

impl Solution for BoundaryCombination {
    fn eval(&self, x: f64) -> Result<PointState, crate::sl::SlError> {
        let (b1, b2) = self.frame.basis_at(x).map_err(|e| match e {
            ExtError::Sl(e) => e,
            _ => crate::sl::SlError::OutOfRange {
                x,
                lo: f64::NAN,
                hi: f64::NAN,
            },
        })?;
        Ok(PointState {
            u: self.c1 * b1.u + self.c2 * b2.u,
            du: self.c1 * b1.du + self.c2 * b2.du,
        })
    }

    fn problem(&self) -> Option<&ProblemTag> {
        Some(&self.tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    /// The closure; the unique realization in the essentially self-adjoint
    /// case.
    Closure,
    /// Boundary condition lim W(psi, f1 cos theta + f2 sin theta) = 0 at the
    /// left endpoint.
    Theta {
        theta: BoundaryParameter,
        frame: Frame,
    },
}

/// A self-adjoint realization of -u'' + q u.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionDescriptor {
    potential: Potential,
    kind: ExtensionKind,
}

impl ExtensionDescriptor {
    pub fn closure(potential: Potential) -> Self {
        Self {
            potential,
            kind: ExtensionKind::Closure,
        }
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn kind(&self) -> &ExtensionKind {
        &self.kind
    }

    pub fn theta(&self) -> Option<BoundaryParameter> {
        match &self.kind {
            ExtensionKind::Theta { theta, .. } => Some(*theta),
            ExtensionKind::Closure => None,
        }
    }

    pub fn frame(&self) -> Option<&Frame> {
        match &self.kind {
            ExtensionKind::Theta { frame, .. } => Some(frame),
            ExtensionKind::Closure => None,
        }
    }

    /// The defining boundary solution f1 cos theta + f2 sin theta.
    pub fn boundary_solution(&self) -> Option<BoundaryCombination> {
        match &self.kind {
            ExtensionKind::Theta { theta, frame } => Some(BoundaryCombination::new(
                frame.clone(),
                theta.angle().cos(),
                theta.angle().sin(),
            )),
            ExtensionKind::Closure => None,
        }
    }
}

/// The extension selected by theta relative to a frame. Rejected when q is
/// essentially self-adjoint (its unique realization is the closure).
pub fn extension_from_theta(
    q: &Potential,
    theta: BoundaryParameter,
    frame: Frame,
) -> Result<ExtensionDescriptor, ExtError> {
    match &frame {
        Frame::Frobenius { kappa } => {
            let Some(qk) = q.inverse_square_kappa() else {
                return Err(ExtError::UsageError(
                    "frobenius frame requires an inverse-square potential".into(),
                ));
            };
            if qk != *kappa {
                return Err(ExtError::UsageError(format!(
                    "frame kappa {kappa} does not match potential kappa {qk}"
                )));
            }
            if kappa.abs() >= 1.0 {
                return Err(ExtError::InvalidRequest(format!(
                    "kappa = {kappa} is essentially self-adjoint; only the closure exists"
                )));
            }
        }
        Frame::Numeric { f1, f2, anchor } => {
            if f1.potential() != q || f2.potential() != q {
                return Err(ExtError::UsageError(
                    "frame trajectories were not solved against this potential".into(),
                ));
            }
            if f1.energy() != 0.0 || f2.energy() != 0.0 {
                return Err(ExtError::UsageError(
                    "frame trajectories must solve the E = 0 homogeneous equation".into(),
                ));
            }
            frame_anchor_in_range(f1, *anchor)?;
            frame_anchor_in_range(f2, *anchor)?;
            frame.basis_wronskian()?;
            let structure = extension_structure(q, &ClassifyControls::default())?;
            if structure == ExtensionStructure::EssentiallySelfAdjoint {
                return Err(ExtError::InvalidRequest(
                    "essentially self-adjoint potential; only the closure exists".into(),
                ));
            }
        }
    }
    Ok(ExtensionDescriptor {
        potential: q.clone(),
        kind: ExtensionKind::Theta { theta, frame },
    })
}

fn frame_anchor_in_range(t: &Trajectory, anchor: f64) -> Result<(), ExtError> {
    let (lo, hi) = t.range();
    if anchor < lo || anchor > hi {
        return Err(ExtError::UsageError(format!(
            "frame anchor {anchor} outside trajectory range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// (C, theta) with C real and theta in [0, pi): the canonical decomposition
/// of a nontrivial real homogeneous solution over the frame.
pub fn theta_decompose(
    f: &dyn Solution,
    frame: &Frame,
) -> Result<(f64, BoundaryParameter), ExtError> {
    let x = frame.anchor();
    let (b1, b2) = frame.basis_at(x)?;
    let fs = f.eval(x)?;
    let w12 = frame.basis_wronskian()?;
    let w_f_f2 = fs.u * b2.du - fs.du * b2.u;
    let w_f_f1 = fs.u * b1.du - fs.du * b1.u;

    let scale_f = fs.u.abs() + fs.du.abs();
    let scale_b = (b1.u.abs() + b1.du.abs()).max(b2.u.abs() + b2.du.abs());
    if w_f_f2.hypot(w_f_f1) <= 1e-12 * (scale_f * scale_b + f64::MIN_POSITIVE) {
        return Err(ExtError::TrivialSolution);
    }

    let c1 = w_f_f2 / w12;
    let c2 = -w_f_f1 / w12;
    Ok(canonical_c_theta(c1, c2))
}

/// Normalize coefficients (c1, c2) != 0 to C * (cos theta, sin theta) with
/// theta in [0, pi): C is positive exactly when (c1, c2) lies in the closed
/// upper half-plane with the positive x-axis included.
pub fn canonical_c_theta(c1: f64, c2: f64) -> (f64, BoundaryParameter) {
    let in_upper = c2 > 0.0 || (c2 == 0.0 && c1 >= 0.0);
    let mut c = c1.hypot(c2);
    if !in_upper {
        c = -c;
    }
    let mut theta = (c2 / c).atan2(c1 / c);
    if theta < 0.0 {
        theta += std::f64::consts::PI;
    }
    if theta >= std::f64::consts::PI {
        theta = 0.0;
    }
    (c, BoundaryParameter(theta))
}

/// Equality of realizations: closures agree when the potentials do; theta
/// kinds agree when their boundary solutions are proportional over a real
/// constant (the proportionality is tested by decomposing in one frame).
pub fn extensions_equal(
    e1: &ExtensionDescriptor,
    e2: &ExtensionDescriptor,
) -> Result<bool, ExtError> {
    if e1.potential() != e2.potential() {
        return Err(ExtError::UsageError(
            "descriptors refer to different potentials".into(),
        ));
    }
    match (&e1.kind, &e2.kind) {
        (ExtensionKind::Closure, ExtensionKind::Closure) => Ok(true),
        (ExtensionKind::Theta { theta, frame }, ExtensionKind::Theta { .. }) => {
            let other = e2.boundary_solution().expect("theta kind has a boundary solution");
            let (_, theta2) = theta_decompose(&other, frame)?;
            Ok(theta.circular_distance(&theta2) <= 1e-9)
        }
        _ => Ok(false),
    }
}

/// Helper for the half-line inverse-square channels.
pub fn radial_half_line() -> Interval {
    Interval::positive_half_line()
}
