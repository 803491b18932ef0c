use super::potential::Potential;
use super::SlError;

/// Value and first derivative of a solution at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub u: f64,
    pub du: f64,
}

/// The (q, E) a solution was produced against.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemTag {
    pub potential: Potential,
    pub energy: f64,
}

/// Anything that behaves like a solved radial function: sampled trajectories,
/// closed-form solutions, and linear combinations of either.
pub trait Solution {
    fn eval(&self, x: f64) -> Result<PointState, SlError>;

    /// (q, E) provenance when known; used to reject cross-problem Wronskians.
    fn problem(&self) -> Option<&ProblemTag> {
        None
    }
}

/// W(f,g)(x) = f g' - f' g without provenance checking.
pub fn wronskian_at(f: &dyn Solution, g: &dyn Solution, x: f64) -> Result<f64, SlError> {
    let a = f.eval(x)?;
    let b = g.eval(x)?;
    Ok(a.u * b.du - a.du * b.u)
}

/// W(f,g)(x) for two solutions of the same (q, E).
pub fn wronskian(f: &dyn Solution, g: &dyn Solution, x: f64) -> Result<f64, SlError> {
    if let (Some(a), Some(b)) = (f.problem(), g.problem()) {
        if a != b {
            return Err(SlError::MismatchedProblem);
        }
    }
    wronskian_at(f, g, x)
}

/// a*f + b*g over borrowed solutions; provenance follows the operands.
pub struct Combination<'a> {
    pub a: f64,
    pub f: &'a dyn Solution,
    pub b: f64,
    pub g: &'a dyn Solution,
}

impl Solution for Combination<'_> {
    fn eval(&self, x: f64) -> Result<PointState, SlError> {
        let p = self.f.eval(x)?;
        let q = self.g.eval(x)?;
        Ok(PointState {
            u: self.a * p.u + self.b * q.u,
            du: self.a * p.du + self.b * q.du,
        })
    }

    fn problem(&self) -> Option<&ProblemTag> {
        self.f.problem().or_else(|| self.g.problem())
    }
}
