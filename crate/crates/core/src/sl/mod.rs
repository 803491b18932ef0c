//! Potentials, initial-value solvers, Wronskians, and fundamental systems for
//! -u'' + q(x) u = E u on an interval with possibly singular endpoints.

mod frobenius;
mod interval;
mod ivp;
mod potential;
mod solution;
mod trajectory;

pub use frobenius::{frobenius_pair, frobenius_wronskian, FrobeniusBranch, FrobeniusSolution};
pub use interval::{Endpoint, Interval};
pub use ivp::{
    extend_trajectory, fundamental_system, solve_ivp, solve_ivp_pair, IvpControls, IvpMethod,
};
pub(crate) use ivp::integrate_rk;
pub use potential::{Potential, PotentialKind};
pub use solution::{wronskian, wronskian_at, Combination, PointState, ProblemTag, Solution};
pub use trajectory::Trajectory;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SlError {
    #[error("x = {x} is outside the potential domain")]
    DomainError { x: f64 },
    #[error("x = {x} is outside the tabulated grid")]
    TableRange { x: f64 },
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid controls: {0}")]
    InvalidControls(String),
    #[error("integration failed: {0}")]
    IntegrationError(String),
    #[error("integrator did not converge: {detail}")]
    ConvergenceError { detail: String },
    #[error("picard iteration is not contracting: {detail}")]
    NonContraction { detail: String },
    #[error("solutions belong to different (q, E) problems")]
    MismatchedProblem,
    #[error("x = {x} is outside the sampled range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("start point x = {x} is within {eps} of a singular endpoint")]
    StartTooCloseToSingular { x: f64, eps: f64 },
}
