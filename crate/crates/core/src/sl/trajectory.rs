use serde::Serialize;

use super::potential::Potential;
use super::solution::{PointState, ProblemTag, Solution};
use super::SlError;

/// Sampled solution (x, u, u') of -u'' + q u = E u on a strictly increasing
/// grid. Between samples the trajectory is the cubic Hermite interpolant of
/// the (u, u') pairs; every evaluation below uses that interpolant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    xs: Vec<f64>,
    us: Vec<f64>,
    dus: Vec<f64>,
    energy: f64,
    potential: Potential,
    #[serde(skip)]
    tag: ProblemTag,
}

impl Trajectory {
    pub fn new(
        xs: Vec<f64>,
        us: Vec<f64>,
        dus: Vec<f64>,
        energy: f64,
        potential: Potential,
    ) -> Result<Self, SlError> {
        if xs.len() < 2 || xs.len() != us.len() || xs.len() != dus.len() {
            return Err(SlError::InvalidControls(
                "trajectory needs >= 2 matched samples".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SlError::InvalidControls(
                "trajectory grid must be strictly increasing".into(),
            ));
        }
        let tag = ProblemTag {
            potential: potential.clone(),
            energy,
        };
        Ok(Self {
            xs,
            us,
            dus,
            energy,
            potential,
            tag,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn us(&self) -> &[f64] {
        &self.us
    }

    pub fn dus(&self) -> &[f64] {
        &self.dus
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn first(&self) -> (f64, PointState) {
        (
            self.xs[0],
            PointState {
                u: self.us[0],
                du: self.dus[0],
            },
        )
    }

    pub fn last(&self) -> (f64, PointState) {
        let i = self.xs.len() - 1;
        (
            self.xs[i],
            PointState {
                u: self.us[i],
                du: self.dus[i],
            },
        )
    }

    /// Second derivative from the differential equation itself.
    pub fn ode_deriv2(&self, x: f64) -> Result<f64, SlError> {
        let s = self.eval_point(x)?;
        Ok((self.potential.evaluate(x)? - self.energy) * s.u)
    }

    pub fn eval_point(&self, x: f64) -> Result<PointState, SlError> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if x < lo - slack || x > hi + slack {
            return Err(SlError::OutOfRange { x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        let i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => {
                return Ok(PointState {
                    u: self.us[i],
                    du: self.dus[i],
                })
            }
            Err(i) => i.clamp(1, self.xs.len() - 1),
        };
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (u0, u1, d0, d1) = (self.us[i - 1], self.us[i], self.dus[i - 1], self.dus[i]);
        let t2 = t * t;
        let t3 = t2 * t;
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * h * d1;
        let du = ((6.0 * t2 - 6.0 * t) * u0
            + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
            + (6.0 * t - 6.0 * t2) * u1
            + (3.0 * t2 - 2.0 * t) * h * d1)
            / h;
        Ok(PointState { u, du })
    }
}

impl Solution for Trajectory {
    fn eval(&self, x: f64) -> Result<PointState, SlError> {
        self.eval_point(x)
    }

    fn problem(&self) -> Option<&ProblemTag> {
        Some(&self.tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl::interval::Interval;
    use approx::assert_relative_eq;

    fn cubic_trajectory() -> Trajectory {
        // u(x) = x^3 is reproduced exactly by cubic Hermite interpolation.
        let xs: Vec<f64> = (0..=10).map(|i| 1.0 + 0.3 * i as f64).collect();
        let us = xs.iter().map(|x| x * x * x).collect();
        let dus = xs.iter().map(|x| 3.0 * x * x).collect();
        Trajectory::new(
            xs,
            us,
            dus,
            0.0,
            Potential::constant(0.0, Interval::positive_half_line()),
        )
        .unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics_exactly() {
        let t = cubic_trajectory();
        for &x in &[1.05, 1.77, 2.5, 3.94] {
            let s = t.eval_point(x).unwrap();
            assert_relative_eq!(s.u, x * x * x, max_relative = 1e-14);
            assert_relative_eq!(s.du, 3.0 * x * x, max_relative = 1e-13);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let t = cubic_trajectory();
        assert!(matches!(
            t.eval_point(0.5),
            Err(SlError::OutOfRange { .. })
        ));
        assert!(t.eval_point(4.0).is_ok());
    }

    #[test]
    fn rejects_bad_grids() {
        let q = Potential::constant(0.0, Interval::positive_half_line());
        assert!(Trajectory::new(vec![1.0], vec![1.0], vec![0.0], 0.0, q.clone()).is_err());
        assert!(
            Trajectory::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0], 0.0, q).is_err()
        );
    }
}
