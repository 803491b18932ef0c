use serde::{Deserialize, Serialize};

use super::potential::Potential;
use super::trajectory::Trajectory;
use super::SlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvpMethod {
    /// Embedded Dormand-Prince 5(4) pair with step control; the default.
    AdaptiveRk,
    /// Fixed-point sweeps on the integral form, segmented so each segment
    /// contracts; retained as an independent cross-check of the RK path.
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Optional upper bound on accepted step sizes; unlimited when absent.
    pub max_step: Option<f64>,
    pub method: IvpMethod,
    pub picard_max_sweeps: usize,
    /// Minimum distance kept from a singular endpoint, in interval units.
    pub eps_start: f64,
}

impl Default for IvpControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            method: IvpMethod::AdaptiveRk,
            picard_max_sweeps: 64,
            eps_start: 1e-8,
        }
    }
}

impl IvpControls {
    pub fn validate(&self) -> Result<(), SlError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(SlError::InvalidControls("tolerances must be > 0".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(SlError::InvalidControls("max_step must be > 0".into()));
            }
        }
        if !(self.eps_start > 0.0) {
            return Err(SlError::InvalidControls("eps_start must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_method(mut self, method: IvpMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tols(mut self, rel: f64, abs: f64) -> Self {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 8_000_000;

/// Adaptive integration of y' = f(x, y) from x0 to x_end, either direction.
/// Calls `on_accept` after every accepted step (not for the initial point).
pub(crate) fn integrate_rk<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    rel: f64,
    abs: f64,
    max_step: f64,
    on_accept: &mut impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N], SlError> {
    let dir = if x_end > x0 { 1.0 } else { -1.0 };
    let span = (x_end - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);

    // initial step from the local scale of (y, y')
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..N {
        let sc = abs + rel * y[i].abs();
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    let mut h = if d1 > 1e-300 {
        0.01 * (d0.sqrt() / d1.sqrt())
    } else {
        1e-3 * span
    };
    h = h.min(max_step).min(span / 2.0).max(span * 1e-12);
    h *= dir;

    let mut steps = 0usize;
    while (x_end - x) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(SlError::IntegrationError(format!(
                "step limit exceeded near x = {x}"
            )));
        }
        if (x + h - x_end) * dir > 0.0 {
            h = x_end - x;
        }
        if h.abs() < 1e-14 * x.abs().max(1.0) {
            return Err(SlError::ConvergenceError {
                detail: format!("step underflow at x = {x}"),
            });
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        let mut y_stage = [0.0; N];
        for s in 1..7 {
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s - 1][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            k[s] = f(x + C[s - 1] * h, &y_stage);
        }
        // stage 7 is evaluated at the 5th-order solution (FSAL)
        let y5 = y_stage;
        let mut err_norm: f64 = 0.0;
        for i in 0..N {
            let mut y4 = y[i];
            for (j, kj) in k.iter().enumerate() {
                y4 += h * B4[j] * kj[i];
            }
            let sc = abs + rel * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4) / sc;
            err_norm += e * e;
        }
        err_norm = (err_norm / N as f64).sqrt();
        if !err_norm.is_finite() {
            return Err(SlError::IntegrationError(format!(
                "non-finite state near x = {x}"
            )));
        }

        if err_norm <= 1.0 {
            x += h;
            y = y5;
            k1 = k[6];
            on_accept(x, &y);
            let scale = (0.9 * err_norm.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = (h * scale).clamp(-max_step, max_step);
        } else {
            let scale = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            h *= scale;
        }
    }
    Ok(y)
}

fn check_problem_span(
    q: &Potential,
    energy: f64,
    x0: f64,
    x_target: f64,
    controls: &IvpControls,
) -> Result<(), SlError> {
    controls.validate()?;
    if !energy.is_finite() || !x0.is_finite() || !x_target.is_finite() {
        return Err(SlError::InvalidControls("non-finite solve inputs".into()));
    }
    if x0 == x_target {
        return Err(SlError::InvalidControls("empty integration span".into()));
    }
    let (lo, hi) = (x0.min(x_target), x0.max(x_target));
    q.check_span(lo, hi)?;
    let (sing_lo, sing_hi) = q.singular_ends();
    if sing_lo {
        if let Some(a) = q.domain().left().finite_value() {
            if lo < a + controls.eps_start {
                return Err(SlError::StartTooCloseToSingular {
                    x: lo,
                    eps: controls.eps_start,
                });
            }
        }
    }
    if sing_hi {
        if let Some(b) = q.domain().right().finite_value() {
            if hi > b - controls.eps_start {
                return Err(SlError::StartTooCloseToSingular {
                    x: hi,
                    eps: controls.eps_start,
                });
            }
        }
    }
    Ok(())
}

fn build_trajectory(
    mut xs: Vec<f64>,
    mut us: Vec<f64>,
    mut dus: Vec<f64>,
    ascending: bool,
    energy: f64,
    q: &Potential,
) -> Result<Trajectory, SlError> {
    if !ascending {
        xs.reverse();
        us.reverse();
        dus.reverse();
    }
    Trajectory::new(xs, us, dus, energy, q.clone())
}

/// Solve -u'' + (q - E) u = 0 from (x0, u0, u0') to x_target.
/// Samples are returned in ascending x regardless of integration direction.
#[allow(clippy::too_many_arguments)]
pub fn solve_ivp(
    q: &Potential,
    energy: f64,
    x0: f64,
    u0: f64,
    du0: f64,
    x_target: f64,
    controls: &IvpControls,
) -> Result<Trajectory, SlError> {
    check_problem_span(q, energy, x0, x_target, controls)?;
    match controls.method {
        IvpMethod::AdaptiveRk => {
            let qf = q.evaluator();
            let f = move |x: f64, y: &[f64; 2]| [y[1], (qf(x) - energy) * y[0]];
            let mut xs = vec![x0];
            let mut us = vec![u0];
            let mut dus = vec![du0];
            integrate_rk(
                &f,
                x0,
                [u0, du0],
                x_target,
                controls.rel_tol,
                controls.abs_tol,
                controls.max_step.unwrap_or(f64::INFINITY),
                &mut |x, y| {
                    xs.push(x);
                    us.push(y[0]);
                    dus.push(y[1]);
                },
            )?;
            build_trajectory(xs, us, dus, x_target > x0, energy, q)
        }
        IvpMethod::Picard => picard_solve(q, energy, x0, u0, du0, x_target, controls),
    }
}

/// Jointly integrate two solutions of the same (q, E) on one shared adaptive
/// grid, so Wronskians between them can be formed at exact sample points.
#[allow(clippy::too_many_arguments)]
pub fn solve_ivp_pair(
    q: &Potential,
    energy: f64,
    x0: f64,
    ic_u: (f64, f64),
    ic_v: (f64, f64),
    x_target: f64,
    controls: &IvpControls,
) -> Result<(Trajectory, Trajectory), SlError> {
    check_problem_span(q, energy, x0, x_target, controls)?;
    let qf = q.evaluator();
    let f = move |x: f64, y: &[f64; 4]| {
        let w = qf(x) - energy;
        [y[1], w * y[0], y[3], w * y[2]]
    };
    let mut xs = vec![x0];
    let mut ys: Vec<[f64; 4]> = vec![[ic_u.0, ic_u.1, ic_v.0, ic_v.1]];
    integrate_rk(
        &f,
        x0,
        [ic_u.0, ic_u.1, ic_v.0, ic_v.1],
        x_target,
        controls.rel_tol,
        controls.abs_tol,
        controls.max_step.unwrap_or(f64::INFINITY),
        &mut |x, y| {
            xs.push(x);
            ys.push(*y);
        },
    )?;
    let ascending = x_target > x0;
    let u = build_trajectory(
        xs.clone(),
        ys.iter().map(|y| y[0]).collect(),
        ys.iter().map(|y| y[1]).collect(),
        ascending,
        energy,
        q,
    )?;
    let v = build_trajectory(
        xs,
        ys.iter().map(|y| y[2]).collect(),
        ys.iter().map(|y| y[3]).collect(),
        ascending,
        energy,
        q,
    )?;
    Ok((u, v))
}

fn glue(left: Option<(Vec<f64>, Vec<[f64; 4]>)>, mid: (f64, [f64; 4]), right: Option<(Vec<f64>, Vec<[f64; 4]>)>) -> (Vec<f64>, Vec<[f64; 4]>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    if let Some((lx, ly)) = left {
        // descending solve; reverse to ascending, endpoint x0 excluded
        for (x, y) in lx.into_iter().zip(ly).rev() {
            xs.push(x);
            ys.push(y);
        }
    }
    xs.push(mid.0);
    ys.push(mid.1);
    if let Some((rx, ry)) = right {
        for (x, y) in rx.into_iter().zip(ry) {
            xs.push(x);
            ys.push(y);
        }
    }
    (xs, ys)
}

/// Default two-sided span around the anchor used by `fundamental_system`.
fn default_span(q: &Potential, x0: f64, controls: &IvpControls) -> (f64, f64) {
    let (ra, rb) = q.evaluable_range();
    let mut lo = if ra.is_finite() { ra + (x0 - ra) / 8.0 } else { x0 - 1.0 };
    let mut hi = if rb.is_finite() { rb - (rb - x0) / 8.0 } else { x0 + 1.0 };
    let (sing_lo, sing_hi) = q.singular_ends();
    if sing_lo && ra.is_finite() {
        lo = lo.max(ra + controls.eps_start);
    }
    if sing_hi && rb.is_finite() {
        hi = hi.min(rb - controls.eps_start);
    }
    (lo.min(x0), hi.max(x0))
}

/// The canonical fundamental system at x0: f1(x0)=1, f1'(x0)=0 and
/// f2(x0)=0, f2'(x0)=1, solved on a shared grid over a default span around
/// x0. Use `extend_trajectory` to push either solution toward an endpoint.
pub fn fundamental_system(
    q: &Potential,
    energy: f64,
    x0: f64,
    controls: &IvpControls,
) -> Result<(Trajectory, Trajectory), SlError> {
    if !q.domain().contains_interior(x0) {
        return Err(SlError::DomainError { x: x0 });
    }
    let (lo, hi) = default_span(q, x0, controls);
    let qf = q.evaluator();
    let f = move |x: f64, y: &[f64; 4]| {
        let w = qf(x) - energy;
        [y[1], w * y[0], y[3], w * y[2]]
    };
    let y0 = [1.0, 0.0, 0.0, 1.0];

    let run = |target: f64| -> Result<Option<(Vec<f64>, Vec<[f64; 4]>)>, SlError> {
        if (target - x0).abs() < 1e-14 * x0.abs().max(1.0) {
            return Ok(None);
        }
        check_problem_span(q, energy, x0, target, controls)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        integrate_rk(
            &f,
            x0,
            y0,
            target,
            controls.rel_tol,
            controls.abs_tol,
            controls.max_step.unwrap_or(f64::INFINITY),
            &mut |x, y| {
                xs.push(x);
                ys.push(*y);
            },
        )?;
        Ok(Some((xs, ys)))
    };

    let left = run(lo)?;
    let right = run(hi)?;
    if left.is_none() && right.is_none() {
        return Err(SlError::InvalidControls(
            "fundamental system span collapsed to the anchor".into(),
        ));
    }
    let (xs, ys) = glue(left, (x0, y0), right);
    let f1 = Trajectory::new(
        xs.clone(),
        ys.iter().map(|y| y[0]).collect(),
        ys.iter().map(|y| y[1]).collect(),
        energy,
        q.clone(),
    )?;
    let f2 = Trajectory::new(
        xs,
        ys.iter().map(|y| y[2]).collect(),
        ys.iter().map(|y| y[3]).collect(),
        energy,
        q.clone(),
    )?;
    Ok((f1, f2))
}

/// Grow a trajectory so its sample range covers x_target; returns a new value.
pub fn extend_trajectory(
    t: &Trajectory,
    x_target: f64,
    controls: &IvpControls,
) -> Result<Trajectory, SlError> {
    let (lo, hi) = t.range();
    if x_target >= lo && x_target <= hi {
        return Ok(t.clone());
    }
    let (anchor_x, state) = if x_target > hi { t.last() } else { t.first() };
    let ext = solve_ivp(
        t.potential(),
        t.energy(),
        anchor_x,
        state.u,
        state.du,
        x_target,
        controls,
    )?;
    let mut xs = Vec::new();
    let mut us = Vec::new();
    let mut dus = Vec::new();
    if x_target > hi {
        xs.extend_from_slice(t.xs());
        us.extend_from_slice(t.us());
        dus.extend_from_slice(t.dus());
        xs.extend_from_slice(&ext.xs()[1..]);
        us.extend_from_slice(&ext.us()[1..]);
        dus.extend_from_slice(&ext.dus()[1..]);
    } else {
        let n = ext.xs().len();
        xs.extend_from_slice(&ext.xs()[..n - 1]);
        us.extend_from_slice(&ext.us()[..n - 1]);
        dus.extend_from_slice(&ext.dus()[..n - 1]);
        xs.extend_from_slice(t.xs());
        us.extend_from_slice(t.us());
        dus.extend_from_slice(t.dus());
    }
    Trajectory::new(xs, us, dus, t.energy(), t.potential().clone())
}

// ---------------------------------------------------------------------------
// Picard path

const PICARD_GRID: usize = 2048;
const PICARD_RECORD_EVERY: usize = 32;
const PICARD_MAX_DEPTH: usize = 48;

fn picard_solve(
    q: &Potential,
    energy: f64,
    x0: f64,
    u0: f64,
    du0: f64,
    x_target: f64,
    controls: &IvpControls,
) -> Result<Trajectory, SlError> {
    let qf = q.evaluator();
    let v = |x: f64| qf(x) - energy;

    let mut xs = vec![x0];
    let mut us = vec![u0];
    let mut dus = vec![du0];
    let mut state = (x0, u0, du0);
    let mut stack = vec![(x0, x_target, 0usize)];
    let mut segments: Vec<(f64, f64)> = Vec::new();
    // resolve contraction-satisfying segments in integration order
    while let Some((s0, s1, depth)) = stack.pop() {
        let len = (s1 - s0).abs();
        let n = 64;
        let h = (s1 - s0) / n as f64;
        let mut int_abs = 0.0;
        for i in 0..n {
            let a = v(s0 + h * i as f64).abs();
            let b = v(s0 + h * (i + 1) as f64).abs();
            int_abs += 0.5 * (a + b) * h.abs();
        }
        if len * int_abs > 0.5 {
            if depth >= PICARD_MAX_DEPTH {
                return Err(SlError::NonContraction {
                    detail: format!("segment [{s0}, {s1}] cannot satisfy the contraction bound"),
                });
            }
            let mid = 0.5 * (s0 + s1);
            // push in reverse so the near segment is processed first
            stack.push((mid, s1, depth + 1));
            stack.push((s0, mid, depth + 1));
        } else {
            segments.push((s0, s1));
        }
    }

    for (s0, s1) in segments {
        debug_assert!((state.0 - s0).abs() <= 1e-10 * s0.abs().max(1.0));
        let (grid, u_vals, du_vals) =
            picard_segment(&v, s0, state.1, state.2, s1, controls.picard_max_sweeps)?;
        let last = grid.len() - 1;
        for i in (PICARD_RECORD_EVERY..=last).step_by(PICARD_RECORD_EVERY) {
            xs.push(grid[i]);
            us.push(u_vals[i]);
            dus.push(du_vals[i]);
        }
        if last % PICARD_RECORD_EVERY != 0 {
            xs.push(grid[last]);
            us.push(u_vals[last]);
            dus.push(du_vals[last]);
        }
        state = (s1, u_vals[last], du_vals[last]);
    }
    build_trajectory(xs, us, dus, x_target > x0, energy, q)
}

/// One contraction segment: iterate u_{n}(x) = u0 + u0'(x - s0)
/// + int_{s0}^x int_{s0}^{x'} v u_{n-1}, on a fixed fine grid.
fn picard_segment(
    v: &impl Fn(f64) -> f64,
    s0: f64,
    u0: f64,
    du0: f64,
    s1: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), SlError> {
    let n = PICARD_GRID;
    let h = (s1 - s0) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| s0 + h * i as f64).collect();
    let vg: Vec<f64> = grid.iter().map(|&x| v(x)).collect();
    let base: Vec<f64> = grid.iter().map(|&x| u0 + du0 * (x - s0)).collect();
    let mut u = base.clone();
    let mut g = vec![0.0; n + 1];
    let scale = u.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);

    for _ in 0..max_sweeps {
        // g = cumulative integral of v*u, F = cumulative integral of g
        let mut acc = 0.0;
        g[0] = 0.0;
        for i in 1..=n {
            acc += 0.5 * (vg[i - 1] * u[i - 1] + vg[i] * u[i]) * h;
            g[i] = acc;
        }
        let mut facc = 0.0;
        let mut max_change = 0.0f64;
        let mut next = vec![0.0; n + 1];
        next[0] = base[0];
        for i in 1..=n {
            facc += 0.5 * (g[i - 1] + g[i]) * h;
            next[i] = base[i] + facc;
            max_change = max_change.max((next[i] - u[i]).abs());
        }
        u = next;
        if max_change <= 1e-15 * scale {
            let dus: Vec<f64> = (0..=n).map(|i| du0 + g[i]).collect();
            return Ok((grid, u, dus));
        }
    }
    Err(SlError::NonContraction {
        detail: format!("picard sweeps exhausted on [{s0}, {s1}]"),
    })
}
