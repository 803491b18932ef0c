//! Eigenvalues of a self-adjoint realization on the half-line by shooting
//! against the Wronskian boundary condition, plus the p^2 channel shift.
//!
//! The searched spectrum is the discrete part below 0; the continuous part
//! [p^2, inf) of a channel is reported structurally, never scanned.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ext::{BoundaryParameter, ExtError, ExtensionDescriptor, ExtensionKind, Frame};
use crate::sl::{extend_trajectory, integrate_rk, IvpControls, PointState, SlError, Trajectory};
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyWindow {
    pub e_min: f64,
    pub e_max: f64,
}

impl EnergyWindow {
    pub fn new(e_min: f64, e_max: f64) -> Result<Self, SpectralError> {
        if !e_min.is_finite() || !e_max.is_finite() || !(e_min < e_max) {
            return Err(SpectralError::InvalidWindow(format!(
                "need finite e_min < e_max, got [{e_min}, {e_max}]"
            )));
        }
        Ok(Self { e_min, e_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralControls {
    /// Right cutoff is placed so sqrt(-E) * (R - x_match) >= cutoff_factor,
    /// truncating the decaying branch at exp(-cutoff_factor).
    pub cutoff_factor: f64,
    /// Matching seed radius r_seed = seed_factor / sqrt(-E). The default
    /// balances the seed-series truncation (shrinks with r_seed) against the
    /// growth-mode error amplification (r_seed/x_match)^(-2|kappa|) of the
    /// outward integration.
    pub seed_factor: f64,
    /// Log-spaced scan density for bracketing.
    pub mesh_per_decade: usize,
    /// Bisection stops at this bracket width relative to max(1, |E|).
    pub bracket_width: f64,
    /// Roots closer than this in E are merged.
    pub merge_tol: f64,
    /// Returned results must carry a normalized residual below this bound.
    pub residual_bound: f64,
    /// Explicit right cutoff override.
    pub r_cutoff: Option<f64>,
    pub ivp: IvpControls,
}

impl Default for SpectralControls {
    fn default() -> Self {
        Self {
            cutoff_factor: 30.0,
            seed_factor: 1e-3,
            mesh_per_decade: 64,
            bracket_width: 1e-12,
            merge_tol: 1e-9,
            residual_bound: 1e-5,
            r_cutoff: None,
            ivp: IvpControls::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub energy: f64,
    pub eigenfunction: Trajectory,
    /// Normalized L^2 defect of the interpolated eigenfunction in the
    /// equation, collocated at step midpoints.
    pub residual: f64,
    /// Root-finder trace: (E, mismatch) pairs of the refinement.
    pub mismatch_history: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootFailure {
    pub bracket: (f64, f64),
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenScan {
    pub results: Vec<EigenResult>,
    pub failures: Vec<RootFailure>,
    pub mesh_size: usize,
    pub scanned: (f64, f64),
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("unsupported spectral request: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid energy window: {0}")]
    InvalidWindow(String),
    #[error("oracle domain error: {0}")]
    OracleDomain(String),
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error(transparent)]
    Sl(#[from] SlError),
}

struct ShootGeometry {
    lambda: f64,
    r_seed: f64,
    x_match: f64,
    r_cutoff: f64,
}

fn geometry(energy: f64, controls: &SpectralControls) -> Result<ShootGeometry, SpectralError> {
    if !(energy < 0.0) || !energy.is_finite() {
        return Err(SpectralError::Unsupported(format!(
            "no decaying seed exists for E = {energy}; only E < 0 is searched"
        )));
    }
    let lambda = (-energy).sqrt();
    let x_match = 1.0 / lambda;
    let r_seed = (controls.seed_factor / lambda).max(controls.ivp.eps_start);
    let r_cutoff = match controls.r_cutoff {
        Some(r) => {
            if lambda * (r - x_match) < 5.0 {
                return Err(SpectralError::Config(format!(
                    "right cutoff {r} is too small: decay not yet asymptotic at this energy"
                )));
            }
            r
        }
        None => x_match + controls.cutoff_factor / lambda,
    };
    if r_seed >= x_match {
        return Err(SpectralError::Config(format!(
            "seed radius {r_seed} reaches the matching point {x_match}"
        )));
    }
    Ok(ShootGeometry {
        lambda,
        r_seed,
        x_match,
        r_cutoff,
    })
}

/// Power branch r^s of the inverse-square problem with two E-series
/// corrections: u = r^s + a1 r^(s+2) + a2 r^(s+4), a1 = lambda^2/(2(2s+1)),
/// a2 = lambda^4/(8(2s+1)(2s+3)). Seeding with the bare E = 0 branch leaves
/// an O(lambda * r) derivative error at the seed radius; the corrected seed
/// is accurate to O((lambda * r)^6).
fn corrected_power(s: f64, lambda: f64, r: f64) -> PointState {
    let l2 = lambda * lambda;
    let a1 = l2 / (2.0 * (2.0 * s + 1.0));
    let a2 = l2 * l2 / (8.0 * (2.0 * s + 1.0) * (2.0 * s + 3.0));
    PointState {
        u: r.powf(s) + a1 * r.powf(s + 2.0) + a2 * r.powf(s + 4.0),
        du: s * r.powf(s - 1.0)
            + a1 * (s + 2.0) * r.powf(s + 1.0)
            + a2 * (s + 4.0) * r.powf(s + 3.0),
    }
}

/// Same correction for the logarithmic branch sqrt(r) ln r at kappa = 0:
/// u = sqrt(r) ln r + (lambda^2/4) r^(5/2) (ln r - 1).
fn corrected_log_branch(lambda: f64, r: f64) -> PointState {
    let c = 0.25 * lambda * lambda;
    let s = r.sqrt();
    let ln = r.ln();
    PointState {
        u: s * ln + c * r.powf(2.5) * (ln - 1.0),
        du: (0.5 * ln + 1.0) / s + c * r.powf(1.5) * (2.5 * ln - 1.5),
    }
}

/// Values of the boundary solution at the seed radius, corrected to first
/// order in E. For theta kinds this follows f1 cos theta + f2 sin theta; for
/// the closure of an inverse-square channel, the recessive branch
/// r^(1/2+|kappa|).
fn left_seed(
    e: &ExtensionDescriptor,
    r: f64,
    energy: f64,
    controls: &SpectralControls,
) -> Result<PointState, SpectralError> {
    let lambda = (-energy).sqrt();
    match e.kind() {
        ExtensionKind::Theta { theta, frame } => {
            let b = e.boundary_solution().expect("theta kind");
            match frame {
                Frame::Frobenius { kappa } => {
                    let (ct, st) = (theta.angle().cos(), theta.angle().sin());
                    let (b1, b2) = if *kappa == 0.0 {
                        (
                            corrected_power(0.5, lambda, r),
                            corrected_log_branch(lambda, r),
                        )
                    } else {
                        (
                            corrected_power(0.5 + kappa, lambda, r),
                            corrected_power(0.5 - kappa, lambda, r),
                        )
                    };
                    Ok(PointState {
                        u: ct * b1.u + st * b2.u,
                        du: ct * b1.du + st * b2.du,
                    })
                }
                Frame::Numeric { f1, f2, anchor } => {
                    // experimental: grow the frame down to the seed radius
                    let e1 = extend_trajectory(f1, r, &controls.ivp)?;
                    let e2 = extend_trajectory(f2, r, &controls.ivp)?;
                    let grown = Frame::Numeric {
                        f1: e1,
                        f2: e2,
                        anchor: *anchor,
                    };
                    let (c1, c2) = b.coefficients();
                    let (b1, b2) = grown.basis_at(r)?;
                    Ok(PointState {
                        u: c1 * b1.u + c2 * b2.u,
                        du: c1 * b1.du + c2 * b2.du,
                    })
                }
            }
        }
        ExtensionKind::Closure => {
            let Some(kappa) = e.potential().inverse_square_kappa() else {
                return Err(SpectralError::Unsupported(
                    "closure shooting is supported for inverse-square potentials only".into(),
                ));
            };
            Ok(corrected_power(0.5 + kappa.abs(), lambda, r))
        }
    }
}

/// Endpoint states of the two shot solutions at the matching point.
fn shoot_states(
    e: &ExtensionDescriptor,
    energy: f64,
    controls: &SpectralControls,
) -> Result<(PointState, PointState, ShootGeometry), SpectralError> {
    let geo = geometry(energy, controls)?;
    let q = e.potential();
    q.check_span(geo.r_seed, geo.r_cutoff)?;
    let qf = q.evaluator();
    let f = move |x: f64, y: &[f64; 2]| [y[1], (qf(x) - energy) * y[0]];

    let seed = left_seed(e, geo.r_seed, energy, controls)?;
    let left = integrate_rk(
        &f,
        geo.r_seed,
        [seed.u, seed.du],
        geo.x_match,
        controls.ivp.rel_tol,
        controls.ivp.abs_tol,
        controls.ivp.max_step.unwrap_or(f64::INFINITY),
        &mut |_, _| {},
    )?;
    let right = integrate_rk(
        &f,
        geo.r_cutoff,
        [1.0, -geo.lambda],
        geo.x_match,
        controls.ivp.rel_tol,
        controls.ivp.abs_tol,
        controls.ivp.max_step.unwrap_or(f64::INFINITY),
        &mut |_, _| {},
    )?;
    Ok((
        PointState {
            u: left[0],
            du: left[1],
        },
        PointState {
            u: right[0],
            du: right[1],
        },
        geo,
    ))
}

/// Normalized Wronskian mismatch W(u_left, u_right)(x_match); its zeros in E
/// are the eigenvalues of the realization.
pub fn shoot_mismatch(
    e: &ExtensionDescriptor,
    energy: f64,
    controls: &SpectralControls,
) -> Result<f64, SpectralError> {
    let (l, r, geo) = shoot_states(e, energy, controls)?;
    Ok(normalized_mismatch(&l, &r, geo.lambda))
}

fn normalized_mismatch(l: &PointState, r: &PointState, lambda: f64) -> f64 {
    let w = l.u * r.du - l.du * r.u;
    let sl = l.u.hypot(l.du / lambda);
    let sr = r.u.hypot(r.du / lambda);
    w / (sl * sr)
}

/// All eigenvalues of the realization inside the window, by sign-change
/// bracketing on a log energy mesh refined by bisection plus one secant
/// polish. Root-level failures are recorded and the scan continues.
pub fn eigenvalues_below(
    e: &ExtensionDescriptor,
    window: &EnergyWindow,
    controls: &SpectralControls,
) -> Result<EigenScan, SpectralError> {
    if window.e_max > 0.0 {
        return Err(SpectralError::InvalidWindow(format!(
            "discrete search window must satisfy e_max <= 0, got {}",
            window.e_max
        )));
    }
    let e_top = window.e_max.min(-1e-12);
    if !(window.e_min < e_top) {
        return Err(SpectralError::InvalidWindow(
            "window is empty after clamping away from the continuous spectrum".into(),
        ));
    }

    let decades = ((window.e_min / e_top).abs().log10()).max(0.1);
    let n = ((decades * controls.mesh_per_decade as f64).ceil() as usize).max(8);
    let ratio = (e_top / window.e_min).powf(1.0 / n as f64);
    let mesh: Vec<f64> = (0..=n).map(|i| window.e_min * ratio.powi(i as i32)).collect();

    let evals: Vec<Result<f64, String>> = mesh
        .par_iter()
        .map(|&en| shoot_mismatch(e, en, controls).map_err(|err| err.to_string()))
        .collect();

    let mut failures: Vec<RootFailure> = Vec::new();
    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    for i in 0..n {
        match (&evals[i], &evals[i + 1]) {
            (Ok(a), Ok(b)) => {
                if *a == 0.0 {
                    brackets.push((mesh[i], mesh[i], *a, *a));
                } else if a * b < 0.0 {
                    brackets.push((mesh[i], mesh[i + 1], *a, *b));
                }
            }
            (Err(reason), _) => failures.push(RootFailure {
                bracket: (mesh[i], mesh[i]),
                reason: reason.clone(),
            }),
            _ => {}
        }
    }

    let mut roots: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    'bracket: for (mut a, mut b, mut ma, mut mb) in brackets {
        let mut trace = vec![(a, ma), (b, mb)];
        if a == b {
            roots.push((a, trace));
            continue;
        }
        while (b - a).abs() > controls.bracket_width * b.abs().max(1.0) {
            let mid = 0.5 * (a + b);
            let mm = match shoot_mismatch(e, mid, controls) {
                Ok(v) => v,
                Err(err) => {
                    failures.push(RootFailure {
                        bracket: (a, b),
                        reason: err.to_string(),
                    });
                    continue 'bracket;
                }
            };
            trace.push((mid, mm));
            if mm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if ma * mm < 0.0 {
                b = mid;
                mb = mm;
            } else {
                a = mid;
                ma = mm;
            }
        }
        let root = if a == b || mb == ma {
            0.5 * (a + b)
        } else {
            // one secant polish inside the final bracket
            let s = b - mb * (b - a) / (mb - ma);
            if s.is_finite() && s > a.min(b) && s < a.max(b) {
                s
            } else {
                0.5 * (a + b)
            }
        };
        roots.push((root, trace));
    }

    roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    roots.dedup_by(|second, first| {
        (second.0 - first.0).abs() <= controls.merge_tol * second.0.abs().max(1.0)
    });

    let mut results = Vec::new();
    for (root, trace) in roots {
        match assemble_eigenfunction(e, root, controls) {
            Ok((traj, residual)) => {
                if residual <= controls.residual_bound {
                    results.push(EigenResult {
                        energy: root,
                        eigenfunction: traj,
                        residual,
                        mismatch_history: trace,
                    });
                } else {
                    failures.push(RootFailure {
                        bracket: (root, root),
                        reason: format!(
                            "eigenfunction residual {residual:.3e} exceeds the bound {}",
                            controls.residual_bound
                        ),
                    });
                }
            }
            Err(err) => failures.push(RootFailure {
                bracket: (root, root),
                reason: err.to_string(),
            }),
        }
    }
    Ok(EigenScan {
        results,
        failures,
        mesh_size: mesh.len(),
        scanned: (window.e_min, e_top),
    })
}

/// Integrate along an explicit node sequence, recording the state exactly at
/// the nodes (the integrator subdivides in between as needed).
fn integrate_on_grid(
    f: &impl Fn(f64, &[f64; 2]) -> [f64; 2],
    nodes: &[f64],
    y0: [f64; 2],
    rel: f64,
    abs: f64,
) -> Result<Vec<[f64; 2]>, SlError> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut y = y0;
    out.push(y);
    for w in nodes.windows(2) {
        y = integrate_rk(f, w[0], y, w[1], rel, abs, f64::INFINITY, &mut |_, _| {})?;
        out.push(y);
    }
    Ok(out)
}

// Node spacing target: keeps the Hermite midpoint defect of the sampled
// eigenfunction near (C_H)^2/16, well under the residual bound.
const EIGENFUNCTION_STEP: f64 = 0.009;

/// Glue the two shot branches at the matching point into one normalized
/// eigenfunction and measure its collocation residual.
fn assemble_eigenfunction(
    e: &ExtensionDescriptor,
    energy: f64,
    controls: &SpectralControls,
) -> Result<(Trajectory, f64), SpectralError> {
    let geo = geometry(energy, controls)?;
    let q = e.potential();
    q.check_span(geo.r_seed, geo.r_cutoff)?;
    let rel = controls.ivp.rel_tol.min(1e-12);
    let abs = controls.ivp.abs_tol.min(1e-14);
    let qf = q.evaluator();
    let f = move |x: f64, y: &[f64; 2]| [y[1], (qf(x) - energy) * y[0]];

    // sqrt of the inverse-square coupling bounds h * sqrt(|q - E|) on both
    // sides of the matching point
    let coupling = q
        .inverse_square_kappa()
        .map(|k| (k * k - 0.25).abs().sqrt())
        .unwrap_or(1.0);
    let delta = EIGENFUNCTION_STEP / (1.0 + coupling);

    // geometric nodes from the seed to the matching point
    let n_left = ((geo.x_match / geo.r_seed).ln() / delta).ceil().max(8.0) as usize;
    let ratio = (geo.x_match / geo.r_seed).powf(1.0 / n_left as f64);
    let mut left_nodes: Vec<f64> = (0..=n_left)
        .map(|i| geo.r_seed * ratio.powi(i as i32))
        .collect();
    *left_nodes.last_mut().unwrap() = geo.x_match;

    // uniform nodes (in lambda*r) from the cutoff down to the matching point
    let n_right = ((geo.r_cutoff - geo.x_match) * geo.lambda / delta)
        .ceil()
        .max(8.0) as usize;
    let h_right = (geo.r_cutoff - geo.x_match) / n_right as f64;
    let mut right_nodes: Vec<f64> = (0..=n_right)
        .map(|i| geo.r_cutoff - h_right * i as f64)
        .collect();
    *right_nodes.last_mut().unwrap() = geo.x_match;

    let seed = left_seed(e, geo.r_seed, energy, controls)?;
    let left = integrate_on_grid(&f, &left_nodes, [seed.u, seed.du], rel, abs)?;
    let right = integrate_on_grid(&f, &right_nodes, [1.0, -geo.lambda], rel, abs)?;

    let (lx, lu, ld): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        left_nodes,
        left.iter().map(|y| y[0]).collect(),
        left.iter().map(|y| y[1]).collect(),
    );
    let mut rx = right_nodes;
    let mut ru: Vec<f64> = right.iter().map(|y| y[0]).collect();
    let mut rd: Vec<f64> = right.iter().map(|y| y[1]).collect();
    rx.reverse();
    ru.reverse();
    rd.reverse();

    // scale the right branch onto the left at the matching point
    let (l_end_u, l_end_d) = (*lu.last().unwrap(), *ld.last().unwrap());
    let (r_beg_u, r_beg_d) = (ru[0], rd[0]);
    let beta = if r_beg_u.abs() * geo.lambda > r_beg_d.abs() {
        l_end_u / r_beg_u
    } else {
        l_end_d / r_beg_d
    };
    let mut xs = lx;
    let mut us = lu;
    let mut ds = ld;
    for i in 1..rx.len() {
        xs.push(rx[i]);
        us.push(beta * ru[i]);
        ds.push(beta * rd[i]);
    }

    // discrete L^2 normalization (trapezoid)
    let mut norm2 = 0.0;
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        norm2 += 0.5 * h * (us[i] * us[i] + us[i - 1] * us[i - 1]);
    }
    let scale = norm2.sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(SpectralError::Config(
            "eigenfunction normalization collapsed".into(),
        ));
    }
    for (u, d) in us.iter_mut().zip(ds.iter_mut()) {
        *u /= scale;
        *d /= scale;
    }

    // midpoint collocation residual of the Hermite interpolant
    let mut defect2 = 0.0;
    let mut scale2 = 0.0;
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        let xm = 0.5 * (xs[i - 1] + xs[i]);
        let um = 0.5 * (us[i - 1] + us[i]) + 0.125 * h * (ds[i - 1] - ds[i]);
        let d2m = (ds[i] - ds[i - 1]) / h;
        let w = q.evaluate(xm)? - energy;
        let defect = -d2m + w * um;
        let local = d2m.abs() + w.abs() * um.abs() + (1.0 + energy.abs()) * um.abs();
        defect2 += h * defect * defect;
        scale2 += h * local * local;
    }
    let residual = (defect2 / scale2.max(f64::MIN_POSITIVE)).sqrt();

    let traj = Trajectory::new(xs, us, ds, energy, q.clone())?;
    Ok((traj, residual))
}

/// Closed-form matching oracle for the inverse-square channels, derived
/// from the small-r expansion of the decaying solution sqrt(r) K_nu and
/// frozen here: with nu = |kappa| and g = Gamma(1+nu)/Gamma(1-nu), a bound
/// state exists iff tan(theta) < 0, at
///   E = -4 (-g / tan theta)^(1/nu)   for kappa > 0,
///   E = -4 (-g * tan theta)^(1/nu)   for kappa < 0.
pub fn bound_state_oracle(
    kappa: f64,
    theta: BoundaryParameter,
) -> Result<Option<f64>, SpectralError> {
    if !kappa.is_finite() || kappa == 0.0 || kappa.abs() >= 1.0 {
        return Err(SpectralError::OracleDomain(format!(
            "oracle covers kappa in (-1, 1) excluding 0, got {kappa}"
        )));
    }
    let t = theta.angle();
    if t <= std::f64::consts::FRAC_PI_2 {
        // tan(theta) >= 0, or the threshold boundary solution at pi/2:
        // the matching relation has no negative-energy root
        return Ok(None);
    }
    let nu = kappa.abs();
    let ratio = gamma(1.0 + nu) / gamma(1.0 - nu);
    let tan_t = t.tan();
    let base = if kappa > 0.0 {
        -ratio / tan_t
    } else {
        -ratio * tan_t
    };
    Ok(Some(-4.0 * base.powf(1.0 / nu)))
}

/// Channel eigenvalues shifted by the axial kinetic term p^2.
pub fn shifted_spectrum(channel_eigs: &[f64], p: f64) -> Vec<f64> {
    channel_eigs.iter().map(|e| e + p * p).collect()
}
