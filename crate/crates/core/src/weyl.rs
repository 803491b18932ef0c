//! Limit-point / limit-circle classification at interval endpoints and the
//! resulting extension structure.
//!
//! The numerical test extends a fundamental system toward the endpoint over a
//! geometric window sequence and watches the windowed L^2 integrals of both
//! solutions: the endpoint is limit circle iff both integrals converge.
//! Decisions come from explicit, overridable thresholds; evidence that fits
//! neither rule is reported as inconclusive, never silently guessed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sl::{
    extend_trajectory, frobenius_pair, frobenius_wronskian, fundamental_system, IvpControls,
    Potential, SlError, Solution, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// All homogeneous solutions square-integrable at the endpoint (lcc).
    LimitCircle,
    /// Some solution fails to be square-integrable there (lpc).
    LimitPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationMethod {
    Analytic,
    Numerical,
}

/// Windowed evidence: edge sequence toward the endpoint and the per-window
/// L^2 integrals of the two fundamental solutions.
#[derive(Debug, Clone, Serialize)]
pub struct WindowDiagnostics {
    pub edges: Vec<f64>,
    pub integrals_f1: Vec<f64>,
    pub integrals_f2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointClassification {
    pub endpoint: EndpointSide,
    pub verdict: Verdict,
    pub method: ClassificationMethod,
    pub diagnostics: Option<WindowDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyControls {
    /// Interior anchor for the fundamental system; a domain-derived default
    /// is used when absent.
    pub anchor: Option<f64>,
    /// Geometric factor of the window sequence toward a finite endpoint.
    pub window_ratio: f64,
    /// A solution counts as converged once its window increments fall below
    /// this fraction of the running total for `consecutive` windows.
    pub cauchy_rel_tol: f64,
    /// A solution counts as diverged once window ratios exceed this for
    /// `consecutive` windows.
    pub divergence_ratio: f64,
    pub consecutive: usize,
    pub max_windows: usize,
    /// Margin around ratio 1 for the limiting-ratio decision; ratios inside
    /// the band are inconclusive.
    pub ratio_margin: f64,
    /// Relative stability required of successive window ratios before the
    /// limiting-ratio rule may fire early.
    pub ratio_stability: f64,
    /// Skip registered closed-form verdicts and run the windowed test.
    pub force_numerical: bool,
    pub ivp: IvpControls,
}

impl Default for ClassifyControls {
    fn default() -> Self {
        Self {
            anchor: None,
            window_ratio: 0.5,
            cauchy_rel_tol: 1e-6,
            divergence_ratio: 10.0,
            consecutive: 3,
            max_windows: 36,
            ratio_margin: 0.01,
            ratio_stability: 0.05,
            force_numerical: false,
            ivp: IvpControls::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionStructure {
    /// lpc at the left endpoint: the closure is the unique realization.
    EssentiallySelfAdjoint,
    /// lcc at the left endpoint: boundary conditions form a one-parameter
    /// family indexed by theta in [0, pi).
    OneParameterFamily,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("windowed evidence at {endpoint:?} is inconclusive")]
    Inconclusive {
        endpoint: EndpointSide,
        diagnostics: WindowDiagnostics,
    },
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error(transparent)]
    Sl(#[from] SlError),
}

/// Classify one endpoint of q at spectral parameter `energy` (the verdict is
/// energy-independent in theory; callers normally pass 0).
pub fn classify_endpoint(
    q: &Potential,
    energy: f64,
    side: EndpointSide,
    controls: &ClassifyControls,
) -> Result<EndpointClassification, ClassifyError> {
    if !controls.force_numerical {
        if let Some(verdict) = analytic_verdict(q, side) {
            return Ok(EndpointClassification {
                endpoint: side,
                verdict,
                method: ClassificationMethod::Analytic,
                diagnostics: None,
            });
        }
    }
    numerical_classification(q, energy, side, controls)
}

/// Extension structure of q under the standing assumption of lpc at the
/// right endpoint; a limit-circle right endpoint is rejected.
pub fn extension_structure(
    q: &Potential,
    controls: &ClassifyControls,
) -> Result<ExtensionStructure, ClassifyError> {
    let right = classify_endpoint(q, 0.0, EndpointSide::Right, controls)?;
    if right.verdict == Verdict::LimitCircle {
        return Err(ClassifyError::UnsupportedConfiguration(
            "limit circle at the right endpoint is outside the supported configuration".into(),
        ));
    }
    let left = classify_endpoint(q, 0.0, EndpointSide::Left, controls)?;
    Ok(match left.verdict {
        Verdict::LimitPoint => ExtensionStructure::EssentiallySelfAdjoint,
        Verdict::LimitCircle => ExtensionStructure::OneParameterFamily,
    })
}

/// Registered closed-form verdicts (inverse-square family only).
fn analytic_verdict(q: &Potential, side: EndpointSide) -> Option<Verdict> {
    let kappa = q.inverse_square_kappa()?;
    match side {
        EndpointSide::Left => Some(if kappa.abs() < 1.0 {
            Verdict::LimitCircle
        } else {
            Verdict::LimitPoint
        }),
        EndpointSide::Right => {
            if q.domain().right().finite_value().is_none() {
                Some(Verdict::LimitPoint)
            } else {
                None
            }
        }
    }
}

fn default_anchor(q: &Potential) -> f64 {
    let a = q.domain().lower_bound();
    let b = q.domain().upper_bound();
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    }
}

fn window_edges(q: &Potential, side: EndpointSide, anchor: f64, controls: &ClassifyControls) -> Vec<f64> {
    let rho = controls.window_ratio;
    let n = controls.max_windows + 1;
    let mut edges = Vec::with_capacity(n + 1);
    match side {
        EndpointSide::Left => {
            let a = q.domain().lower_bound();
            if a.is_finite() {
                for k in 0..=n {
                    edges.push(a + (anchor - a) * rho.powi(k as i32));
                }
            } else {
                for k in 0..=n {
                    edges.push(anchor - (2f64.powi(k as i32) - 1.0));
                }
            }
        }
        EndpointSide::Right => {
            let b = q.domain().upper_bound();
            if b.is_finite() {
                for k in 0..=n {
                    edges.push(b - (b - anchor) * rho.powi(k as i32));
                }
            } else if anchor > 0.0 {
                let factor = 1.0 / rho;
                for k in 0..=n {
                    edges.push(anchor * factor.powi(k as i32));
                }
            } else {
                for k in 0..=n {
                    edges.push(anchor + (2f64.powi(k as i32) - 1.0));
                }
            }
        }
    }
    edges
}

/// Windowed L^2 mass source for one solution.
enum SolutionWindows {
    /// Coefficients in the closed-form frobenius basis; window integrals are
    /// exact moments. Used for inverse-square potentials to avoid driving the
    /// integrator into the r^-2 singularity.
    Moments { kappa: f64, alpha: f64, beta: f64 },
    /// Sampled trajectory extended window by window.
    Sampled {
        traj: Trajectory,
        ivp: IvpControls,
    },
}

impl SolutionWindows {
    fn window_integral(&mut self, lo: f64, hi: f64) -> Result<f64, SlError> {
        match self {
            SolutionWindows::Moments { kappa, alpha, beta } => {
                Ok(frobenius_window_mass(*kappa, *alpha, *beta, lo, hi))
            }
            SolutionWindows::Sampled { traj, ivp } => {
                let (rlo, rhi) = traj.range();
                // refuse to extend past an overflowing solution
                let edge_state = if lo < rlo { traj.first().1 } else { traj.last().1 };
                if edge_state.u.abs().max(edge_state.du.abs()) > 1e120 {
                    return Ok(f64::INFINITY);
                }
                if lo < rlo {
                    *traj = extend_trajectory(traj, lo, ivp)?;
                } else if hi > rhi {
                    *traj = extend_trajectory(traj, hi, ivp)?;
                }
                simpson_l2(traj, lo, hi, 64)
            }
        }
    }
}

fn power_moment(exponent: f64, lo: f64, hi: f64) -> f64 {
    let e1 = exponent + 1.0;
    if e1.abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(e1) - lo.powf(e1)) / e1
    }
}

/// Integral of (alpha psi1 + beta psi2)^2 over [lo, hi] in closed form.
fn frobenius_window_mass(kappa: f64, alpha: f64, beta: f64, lo: f64, hi: f64) -> f64 {
    if kappa == 0.0 {
        let m_r = power_moment(1.0, lo, hi);
        let m_rln = (hi * hi * (2.0 * hi.ln() - 1.0) - lo * lo * (2.0 * lo.ln() - 1.0)) / 4.0;
        let m_rln2 = (hi * hi * (2.0 * hi.ln() * hi.ln() - 2.0 * hi.ln() + 1.0)
            - lo * lo * (2.0 * lo.ln() * lo.ln() - 2.0 * lo.ln() + 1.0))
            / 4.0;
        alpha * alpha * m_r + 2.0 * alpha * beta * m_rln + beta * beta * m_rln2
    } else {
        alpha * alpha * power_moment(1.0 + 2.0 * kappa, lo, hi)
            + 2.0 * alpha * beta * power_moment(1.0, lo, hi)
            + beta * beta * power_moment(1.0 - 2.0 * kappa, lo, hi)
    }
}

fn simpson_l2(traj: &Trajectory, lo: f64, hi: f64, panels: usize) -> Result<f64, SlError> {
    let n = 2 * panels;
    let h = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let x = lo + h * i as f64;
        let u = traj.eval(x)?.u;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * u * u;
    }
    Ok(acc * h / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Converged,
    Diverged,
}

struct WindowJudge {
    integrals: Vec<f64>,
    total: f64,
    cauchy_streak: usize,
    blowup_streak: usize,
    status: Status,
}

impl WindowJudge {
    fn new() -> Self {
        Self {
            integrals: Vec::new(),
            total: 0.0,
            cauchy_streak: 0,
            blowup_streak: 0,
            status: Status::Pending,
        }
    }

    fn push(&mut self, value: f64, controls: &ClassifyControls) {
        if self.status != Status::Pending {
            return;
        }
        if !value.is_finite() || self.total > 1e280 {
            self.integrals.push(f64::MAX);
            self.status = Status::Diverged;
            return;
        }
        self.total += value;
        self.integrals.push(value);

        if self.total > 0.0 && value <= controls.cauchy_rel_tol * self.total {
            self.cauchy_streak += 1;
        } else {
            self.cauchy_streak = 0;
        }
        let n = self.integrals.len();
        if n >= 2 {
            let prev = self.integrals[n - 2];
            if prev > 0.0 && value / prev >= controls.divergence_ratio {
                self.blowup_streak += 1;
            } else {
                self.blowup_streak = 0;
            }
        }
        if self.cauchy_streak >= controls.consecutive {
            self.status = Status::Converged;
        } else if self.blowup_streak >= controls.consecutive {
            self.status = Status::Diverged;
        } else if let Some(rho) = self.stable_ratio(controls) {
            if rho <= 1.0 - controls.ratio_margin {
                self.status = Status::Converged;
            } else if rho >= 1.0 + controls.ratio_margin {
                self.status = Status::Diverged;
            }
        }
    }

    /// Last `consecutive + 1` ratios, if they agree to `ratio_stability`.
    fn stable_ratio(&self, controls: &ClassifyControls) -> Option<f64> {
        let need = controls.consecutive + 1;
        let n = self.integrals.len();
        if n < need + 3 {
            return None;
        }
        let mut ratios = Vec::with_capacity(need);
        for i in (n - need)..n {
            let prev = self.integrals[i - 1];
            if prev <= 0.0 {
                return None;
            }
            ratios.push(self.integrals[i] / prev);
        }
        let mid = ratios[ratios.len() / 2];
        if ratios
            .iter()
            .all(|r| (r - mid).abs() <= controls.ratio_stability * mid.max(1e-300))
        {
            Some(mid)
        } else {
            None
        }
    }

    /// Limiting-ratio fallback once the window budget is spent.
    fn settle(&mut self, controls: &ClassifyControls) {
        if self.status != Status::Pending {
            return;
        }
        let n = self.integrals.len();
        if n < 4 {
            return;
        }
        let mut last: Vec<f64> = (n - 3..n)
            .filter(|&i| self.integrals[i - 1] > 0.0)
            .map(|i| self.integrals[i] / self.integrals[i - 1])
            .collect();
        if last.is_empty() {
            // mass identically exhausted: nothing left to diverge
            self.status = Status::Converged;
            return;
        }
        last.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rho = last[last.len() / 2];
        if rho <= 1.0 - controls.ratio_margin {
            self.status = Status::Converged;
        } else if rho >= 1.0 - 0.5 * controls.ratio_margin {
            self.status = Status::Diverged;
        }
    }
}

fn numerical_classification(
    q: &Potential,
    energy: f64,
    side: EndpointSide,
    controls: &ClassifyControls,
) -> Result<EndpointClassification, ClassifyError> {
    let anchor = controls.anchor.unwrap_or_else(|| default_anchor(q));
    if !q.domain().contains_interior(anchor) {
        return Err(SlError::DomainError { x: anchor }.into());
    }
    let edges = window_edges(q, side, anchor, controls);

    let mut sols = build_solution_windows(q, energy, anchor, controls)?;
    let mut judges = [WindowJudge::new(), WindowJudge::new()];

    for k in 0..controls.max_windows {
        let (lo, hi) = match side {
            EndpointSide::Left => (edges[k + 1], edges[k]),
            EndpointSide::Right => (edges[k], edges[k + 1]),
        };
        for (sol, judge) in sols.iter_mut().zip(judges.iter_mut()) {
            if judge.status == Status::Pending {
                let val = sol.window_integral(lo, hi)?;
                judge.push(val, controls);
            }
        }
        if judges.iter().any(|j| j.status == Status::Diverged)
            || judges.iter().all(|j| j.status == Status::Converged)
        {
            break;
        }
    }
    for judge in judges.iter_mut() {
        judge.settle(controls);
    }

    let diagnostics = WindowDiagnostics {
        edges: edges[..=judges[0].integrals.len().max(judges[1].integrals.len())].to_vec(),
        integrals_f1: judges[0].integrals.clone(),
        integrals_f2: judges[1].integrals.clone(),
    };
    let verdict = if judges.iter().any(|j| j.status == Status::Diverged) {
        Verdict::LimitPoint
    } else if judges.iter().all(|j| j.status == Status::Converged) {
        Verdict::LimitCircle
    } else {
        return Err(ClassifyError::Inconclusive {
            endpoint: side,
            diagnostics,
        });
    };
    Ok(EndpointClassification {
        endpoint: side,
        verdict,
        method: ClassificationMethod::Numerical,
        diagnostics: Some(diagnostics),
    })
}

fn build_solution_windows(
    q: &Potential,
    energy: f64,
    anchor: f64,
    controls: &ClassifyControls,
) -> Result<[SolutionWindows; 2], ClassifyError> {
    if let Some(kappa) = q.inverse_square_kappa() {
        if energy == 0.0 {
            // express the canonical fundamental system in the frobenius basis
            let (p1, p2) = frobenius_pair(kappa);
            let w = frobenius_wronskian(kappa);
            let (v1, d1) = (p1.value(anchor), p1.deriv(anchor));
            let (v2, d2) = (p2.value(anchor), p2.deriv(anchor));
            // f1: (1, 0); f2: (0, 1) at the anchor
            let f1 = SolutionWindows::Moments {
                kappa,
                alpha: d2 / w,
                beta: -d1 / w,
            };
            let f2 = SolutionWindows::Moments {
                kappa,
                alpha: -v2 / w,
                beta: v1 / w,
            };
            return Ok([f1, f2]);
        }
    }
    let (f1, f2) = fundamental_system(q, energy, anchor, &controls.ivp)?;
    Ok([
        SolutionWindows::Sampled {
            traj: f1,
            ivp: controls.ivp,
        },
        SolutionWindows::Sampled {
            traj: f2,
            ivp: controls.ivp,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl::Interval;

    fn classify(q: &Potential, side: EndpointSide) -> Verdict {
        classify_endpoint(q, 0.0, side, &ClassifyControls::default())
            .unwrap()
            .verdict
    }

    #[test]
    fn inverse_square_analytic_table() {
        for kappa in [0.0, 0.25, 0.5, 0.75, 0.99] {
            let q = Potential::inverse_square(kappa);
            assert_eq!(classify(&q, EndpointSide::Left), Verdict::LimitCircle);
            assert_eq!(classify(&q, EndpointSide::Right), Verdict::LimitPoint);
        }
        for kappa in [1.0, 1.25, 1.5, 2.5] {
            let q = Potential::inverse_square(kappa);
            assert_eq!(classify(&q, EndpointSide::Left), Verdict::LimitPoint);
            assert_eq!(classify(&q, EndpointSide::Right), Verdict::LimitPoint);
        }
    }

    #[test]
    fn free_problem_on_unit_interval_is_lcc_numerically() {
        let q = Potential::constant(0.0, Interval::bounded(0.0, 1.0).unwrap());
        let c = classify_endpoint(&q, 0.0, EndpointSide::Left, &ClassifyControls::default())
            .unwrap();
        assert_eq!(c.verdict, Verdict::LimitCircle);
        assert_eq!(c.method, ClassificationMethod::Numerical);
        assert!(c.diagnostics.is_some());
    }

    #[test]
    fn numerical_agrees_with_analytic_for_inverse_square() {
        let controls = ClassifyControls {
            force_numerical: true,
            ..ClassifyControls::default()
        };
        for kappa in [0.0, 0.5, 0.99, 1.0, 1.25] {
            let q = Potential::inverse_square(kappa);
            let num = classify_endpoint(&q, 0.0, EndpointSide::Left, &controls)
                .unwrap()
                .verdict;
            let ana = classify(&q, EndpointSide::Left);
            assert_eq!(num, ana, "kappa = {kappa}");
        }
    }

    #[test]
    fn anchor_choice_does_not_change_the_verdict() {
        let q = Potential::inverse_square(0.6);
        for anchor in [0.5, 2.0] {
            let controls = ClassifyControls {
                force_numerical: true,
                anchor: Some(anchor),
                ..ClassifyControls::default()
            };
            let c = classify_endpoint(&q, 0.0, EndpointSide::Left, &controls).unwrap();
            assert_eq!(c.verdict, Verdict::LimitCircle);
        }
    }

    #[test]
    fn structure_of_the_radial_family() {
        let controls = ClassifyControls::default();
        assert_eq!(
            extension_structure(&Potential::inverse_square(2.5), &controls).unwrap(),
            ExtensionStructure::EssentiallySelfAdjoint
        );
        assert_eq!(
            extension_structure(&Potential::inverse_square(0.0), &controls).unwrap(),
            ExtensionStructure::OneParameterFamily
        );
        assert_eq!(
            extension_structure(&Potential::inverse_square(-0.99), &controls).unwrap(),
            ExtensionStructure::OneParameterFamily
        );
    }

    #[test]
    fn lcc_right_end_is_rejected() {
        let q = Potential::constant(0.0, Interval::bounded(0.0, 1.0).unwrap());
        let r = extension_structure(&q, &ClassifyControls::default());
        assert!(matches!(
            r,
            Err(ClassifyError::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn verdict_symmetric_in_kappa_sign() {
        for kappa in [0.3, 0.99, 1.2] {
            assert_eq!(
                classify(&Potential::inverse_square(kappa), EndpointSide::Left),
                classify(&Potential::inverse_square(-kappa), EndpointSide::Left)
            );
        }
    }
}
