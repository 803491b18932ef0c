use serde::Serialize;

use super::descriptor::{
    canonical_c_theta, BoundaryCombination, BoundaryParameter, ExtensionDescriptor, ExtensionKind,
    Frame,
};
use super::ExtError;
use crate::sl::{extend_trajectory, IvpControls, PointState, Potential, Solution};
use crate::special::SmoothCutoff;

/// A function with two derivatives, the regularity the rho/sigma splitting
/// needs. Callers keep evaluation inside the prepared range.
pub trait C2Fn {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn deriv2(&self, x: f64) -> f64;
}

impl C2Fn for SmoothCutoff {
    fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
    fn deriv(&self, x: f64) -> f64 {
        self.eval(x).1
    }
    fn deriv2(&self, x: f64) -> f64 {
        self.eval(x).2
    }
}

impl C2Fn for crate::sl::FrobeniusSolution {
    fn value(&self, x: f64) -> f64 {
        FrobeniusEval::value(self, x)
    }
    fn deriv(&self, x: f64) -> f64 {
        FrobeniusEval::deriv(self, x)
    }
    fn deriv2(&self, x: f64) -> f64 {
        FrobeniusEval::deriv2(self, x)
    }
}

// disambiguate the inherent methods from the trait methods
trait FrobeniusEval {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn deriv2(&self, x: f64) -> f64;
}
impl FrobeniusEval for crate::sl::FrobeniusSolution {
    fn value(&self, x: f64) -> f64 {
        crate::sl::FrobeniusSolution::value(self, x)
    }
    fn deriv(&self, x: f64) -> f64 {
        crate::sl::FrobeniusSolution::deriv(self, x)
    }
    fn deriv2(&self, x: f64) -> f64 {
        crate::sl::FrobeniusSolution::deriv2(self, x)
    }
}

impl C2Fn for BoundaryCombination {
    fn value(&self, x: f64) -> f64 {
        Solution::eval(self, x).expect("boundary combination evaluated outside range").u
    }
    fn deriv(&self, x: f64) -> f64 {
        Solution::eval(self, x).expect("boundary combination evaluated outside range").du
    }
    fn deriv2(&self, x: f64) -> f64 {
        // second derivative from the homogeneous equation at E = 0
        let tag = Solution::problem(self).expect("combination carries its problem");
        let q = tag
            .potential
            .evaluate(x)
            .expect("potential evaluated outside domain");
        (q - tag.energy) * self.value(x)
    }
}

/// tau(x) * f(x) with tau a smooth cutoff; the standard device for building
/// domain elements with prescribed endpoint behavior.
pub struct CutoffTimes<'a> {
    pub tau: SmoothCutoff,
    pub inner: &'a dyn C2Fn,
}

impl C2Fn for CutoffTimes<'_> {
    fn value(&self, x: f64) -> f64 {
        self.tau.value(x) * self.inner.value(x)
    }
    fn deriv(&self, x: f64) -> f64 {
        let (t, dt, _) = self.tau.eval(x);
        t * self.inner.deriv(x) + dt * self.inner.value(x)
    }
    fn deriv2(&self, x: f64) -> f64 {
        let (t, dt, d2t) = self.tau.eval(x);
        t * self.inner.deriv2(x) + 2.0 * dt * self.inner.deriv(x) + d2t * self.inner.value(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtControls {
    /// sigma counts as trivial when both frame coefficients stay below
    /// tol_sigma times the scale of g.
    pub tol_sigma: f64,
    /// Circular tolerance for matching sigma's angle against a descriptor.
    pub theta_match_tol: f64,
    /// Geometric quadrature cells toward the singular endpoint.
    pub quad_cells: usize,
    /// Gauss-Legendre nodes per cell.
    pub quad_points: usize,
    /// Points of the reporting grid carrying rho samples.
    pub report_points: usize,
    /// Upper end of the reporting grid; defaults to 4x the frame anchor.
    pub report_hi: Option<f64>,
    pub ivp: IvpControls,
}

impl Default for ExtControls {
    fn default() -> Self {
        Self {
            tol_sigma: 1e-8,
            theta_match_tol: 1e-6,
            quad_cells: 60,
            quad_points: 8,
            report_points: 96,
            report_hi: None,
            ivp: IvpControls::default(),
        }
    }
}

/// Splitting g = rho_g + sigma_g: rho_g carries the same l_q-image as g and
/// has vanishing Wronskians at the left endpoint; sigma_g solves the
/// homogeneous equation and identifies the extension whose domain holds g.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaDecomposition {
    pub grid: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub rho_derivs: Vec<f64>,
    pub g_values: Vec<f64>,
    pub sigma: SigmaPart,
    pub scale_g: f64,
    frame: Frame,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPart {
    Trivial,
    Homogeneous {
        c1: f64,
        c2: f64,
        c: f64,
        theta: BoundaryParameter,
    },
}

impl SigmaDecomposition {
    pub fn sigma_is_trivial(&self) -> bool {
        matches!(self.sigma, SigmaPart::Trivial)
    }

    pub fn sigma_theta(&self) -> Option<BoundaryParameter> {
        match self.sigma {
            SigmaPart::Homogeneous { theta, .. } => Some(theta),
            SigmaPart::Trivial => None,
        }
    }

    /// sigma as a concrete solution (zero when trivial is represented by
    /// zero coefficients).
    pub fn sigma_solution(&self) -> BoundaryCombination {
        match self.sigma {
            SigmaPart::Trivial => BoundaryCombination::new(self.frame.clone(), 0.0, 0.0),
            SigmaPart::Homogeneous { c1, c2, .. } => {
                BoundaryCombination::new(self.frame.clone(), c1, c2)
            }
        }
    }

    pub fn sigma_at(&self, x: f64) -> Result<PointState, ExtError> {
        Solution::eval(&self.sigma_solution(), x).map_err(ExtError::Sl)
    }
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn gauss_cell(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (n, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * f(mid + half * n);
    }
    acc * half
}

/// Integral from the left endpoint `a` to `x_first` with geometric cell
/// refinement toward `a`; cells are summed innermost-first. Errors when the
/// innermost contributions grow toward the endpoint.
fn endpoint_integral(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    x_first: f64,
    cells: usize,
) -> Result<f64, ExtError> {
    let mut contributions = Vec::with_capacity(cells);
    for j in (0..cells).rev() {
        let hi = a + (x_first - a) * 0.5f64.powi(j as i32);
        let lo = if j + 1 == cells {
            a + (x_first - a) * 0.5f64.powi(cells as i32)
        } else {
            a + (x_first - a) * 0.5f64.powi(j as i32 + 1)
        };
        contributions.push(gauss_cell(f, lo, hi));
    }
    // contributions[0] is innermost; growth toward the endpoint means the
    // integral does not settle
    let inner: Vec<f64> = contributions.iter().take(4).map(|c| c.abs()).collect();
    let growing = inner.windows(2).all(|w| w[0] > 1.2 * w[1] && w[0] > 0.0);
    let magnitude: f64 = contributions.iter().map(|c| c.abs()).sum();
    if growing && inner[0] > 1e-3 * magnitude {
        return Err(ExtError::IntegrabilityError(format!(
            "quadrature does not settle toward the endpoint {a}"
        )));
    }
    Ok(contributions.iter().sum())
}

/// The rho/sigma decomposition of g against the frame's fundamental system.
pub fn rho_sigma(
    g: &dyn C2Fn,
    q: &Potential,
    frame: &Frame,
    controls: &ExtControls,
) -> Result<SigmaDecomposition, ExtError> {
    let a = q.domain().lower_bound();
    if !a.is_finite() {
        return Err(ExtError::IntegrabilityError(
            "rho/sigma splitting needs a finite left endpoint".into(),
        ));
    }
    let w12 = frame.basis_wronskian()?;
    let anchor = frame.anchor();
    let hi = controls.report_hi.unwrap_or(a + 4.0 * (anchor - a));

    // reporting grid: geometric into the endpoint, linear beyond the anchor,
    // anchor included exactly
    let n_half = (controls.report_points / 2).max(4);
    let mut grid = Vec::with_capacity(2 * n_half + 1);
    for k in (1..=n_half).rev() {
        let t = (anchor - a) * 0.5f64.powf(12.0 * k as f64 / n_half as f64);
        grid.push(a + t);
    }
    grid.push(anchor);
    for k in 1..=n_half {
        grid.push(anchor + (hi - anchor) * k as f64 / n_half as f64);
    }
    grid.dedup_by(|x, y| x == y);

    // frame coverage for numeric frames
    let frame = prepared_frame(frame, grid[0], *grid.last().unwrap(), controls)?;

    let phi = |x: f64| -g.deriv2(x) + q.evaluate(x).map(|v| v * g.value(x)).unwrap_or(f64::NAN);
    let basis = |x: f64| frame.basis_at(x);

    // cumulative integrals of phi*f2 and phi*f1 from the endpoint
    let mut i1 = Vec::with_capacity(grid.len());
    let mut i2 = Vec::with_capacity(grid.len());
    {
        let mut f_phi_f2 = |x: f64| phi(x) * basis(x).map(|(_, b2)| b2.u).unwrap_or(f64::NAN);
        i1.push(endpoint_integral(&mut f_phi_f2, a, grid[0], controls.quad_cells)?);
    }
    {
        let mut f_phi_f1 = |x: f64| phi(x) * basis(x).map(|(b1, _)| b1.u).unwrap_or(f64::NAN);
        i2.push(endpoint_integral(&mut f_phi_f1, a, grid[0], controls.quad_cells)?);
    }
    for k in 1..grid.len() {
        let (lo, hi) = (grid[k - 1], grid[k]);
        let mut f_phi_f2 = |x: f64| phi(x) * basis(x).map(|(_, b2)| b2.u).unwrap_or(f64::NAN);
        let d1 = gauss_cell(&mut f_phi_f2, lo, hi);
        let mut f_phi_f1 = |x: f64| phi(x) * basis(x).map(|(b1, _)| b1.u).unwrap_or(f64::NAN);
        let d2 = gauss_cell(&mut f_phi_f1, lo, hi);
        i1.push(i1[k - 1] + d1);
        i2.push(i2[k - 1] + d2);
    }
    if i1.iter().chain(i2.iter()).any(|v| !v.is_finite()) {
        return Err(ExtError::IntegrabilityError(
            "non-finite quadrature of l_q g against the fundamental system".into(),
        ));
    }

    let mut rho_values = Vec::with_capacity(grid.len());
    let mut rho_derivs = Vec::with_capacity(grid.len());
    let mut g_values = Vec::with_capacity(grid.len());
    let mut scale_g: f64 = 0.0;
    let mut anchor_idx = 0;
    for (k, &x) in grid.iter().enumerate() {
        let (b1, b2) = frame.basis_at(x)?;
        rho_values.push((b1.u * i1[k] - b2.u * i2[k]) / w12);
        rho_derivs.push((b1.du * i1[k] - b2.du * i2[k]) / w12);
        let gv = g.value(x);
        scale_g = scale_g.max(gv.abs());
        g_values.push(gv);
        if x == anchor {
            anchor_idx = k;
        }
    }

    // project sigma = g - rho onto the solution space at the anchor
    let sv = g_values[anchor_idx] - rho_values[anchor_idx];
    let sd = g.deriv(anchor) - rho_derivs[anchor_idx];
    let (b1, b2) = frame.basis_at(anchor)?;
    let det = b1.u * b2.du - b1.du * b2.u;
    let c1 = (sv * b2.du - sd * b2.u) / det;
    let c2 = (sd * b1.u - sv * b1.du) / det;

    let sigma = if c1.abs().max(c2.abs()) < controls.tol_sigma * (scale_g + f64::MIN_POSITIVE) {
        SigmaPart::Trivial
    } else {
        let (c, theta) = canonical_c_theta(c1, c2);
        SigmaPart::Homogeneous { c1, c2, c, theta }
    };

    Ok(SigmaDecomposition {
        grid,
        rho_values,
        rho_derivs,
        g_values,
        sigma,
        scale_g,
        frame,
    })
}

fn prepared_frame(
    frame: &Frame,
    lo: f64,
    hi: f64,
    controls: &ExtControls,
) -> Result<Frame, ExtError> {
    match frame {
        Frame::Frobenius { .. } => Ok(frame.clone()),
        Frame::Numeric { f1, f2, anchor } => {
            if f1.potential().singular_ends().0 {
                return Err(ExtError::UsageError(
                    "numeric frames cannot be integrated into a singular endpoint; \
                     use the closed-form frame"
                        .into(),
                ));
            }
            // cover the quadrature range, including the refined cells near lo
            let a = f1.potential().domain().lower_bound();
            let deep = a + (lo - a) * 0.5f64.powi(controls.quad_cells as i32);
            let mut e1 = extend_trajectory(f1, deep.max(f64::MIN_POSITIVE), &controls.ivp)?;
            let mut e2 = extend_trajectory(f2, deep.max(f64::MIN_POSITIVE), &controls.ivp)?;
            e1 = extend_trajectory(&e1, hi, &controls.ivp)?;
            e2 = extend_trajectory(&e2, hi, &controls.ivp)?;
            Ok(Frame::Numeric {
                f1: e1,
                f2: e2,
                anchor: *anchor,
            })
        }
    }
}

/// lim_{r -> a} W(g, boundary solution)(r), evaluated by Richardson
/// extrapolation over a geometric radius sequence rather than at one small
/// radius. This is the boundary condition in its direct form; a vanishing
/// limit puts g in the descriptor's domain. The sigma route in
/// `domain_membership` is the better-conditioned test; this one exists as
/// the independent check of the same condition.
pub fn boundary_wronskian_limit(
    g: &dyn C2Fn,
    e: &ExtensionDescriptor,
) -> Result<f64, ExtError> {
    let Some(boundary) = e.boundary_solution() else {
        return Err(ExtError::InvalidRequest(
            "the closure kind carries no boundary solution".into(),
        ));
    };
    let a = e.potential().domain().lower_bound();
    if !a.is_finite() {
        return Err(ExtError::IntegrabilityError(
            "endpoint limit needs a finite left endpoint".into(),
        ));
    }
    let frame_anchor = e.frame().map(|f| f.anchor()).unwrap_or(1.0);
    let r0 = a + 0.25 * (frame_anchor - a);
    let n = 12;
    let mut w = Vec::with_capacity(n);
    for k in 0..n {
        let r = a + (r0 - a) * 0.5f64.powi(k as i32);
        let b = Solution::eval(&boundary, r)?;
        w.push(g.value(r) * b.du - g.deriv(r) * b.u);
    }
    // two Aitken sweeps accelerate W(r) = W0 + C r^alpha + ...
    for _ in 0..2 {
        let mut next = Vec::with_capacity(w.len().saturating_sub(2));
        for k in 0..w.len().saturating_sub(2) {
            let (w0, w1, w2) = (w[k], w[k + 1], w[k + 2]);
            let denom = (w2 - w1) - (w1 - w0);
            next.push(if denom.abs() < 1e-300 {
                w2
            } else {
                w2 - (w2 - w1) * (w2 - w1) / denom
            });
        }
        if next.is_empty() {
            break;
        }
        w = next;
    }
    w.last()
        .copied()
        .ok_or_else(|| ExtError::IntegrabilityError("window sequence collapsed".into()))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ExtError::IntegrabilityError(
                    "endpoint Wronskian limit did not settle".into(),
                ))
            }
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    InClosure,
    InExtensionOnly,
    Outside,
}

/// Locate g relative to an extension's domain: trivial sigma means g lies in
/// the closure; a sigma proportional to the descriptor's boundary solution
/// puts g in that extension's domain and no other; anything else is outside.
pub fn domain_membership(
    g: &dyn C2Fn,
    e: &ExtensionDescriptor,
    controls: &ExtControls,
) -> Result<Membership, ExtError> {
    match e.kind() {
        ExtensionKind::Closure => {
            // lpc at the endpoint: certify the integrability preconditions,
            // under which g belongs to the closure domain
            let q = e.potential();
            let a = q.domain().lower_bound();
            if !a.is_finite() {
                return Err(ExtError::IntegrabilityError(
                    "membership test needs a finite left endpoint".into(),
                ));
            }
            let anchor = 1.0_f64.min(a + 1.0).max(a + 1e-3);
            let mut g2 = |x: f64| g.value(x) * g.value(x);
            endpoint_integral(&mut g2, a, anchor, controls.quad_cells)?;
            let mut phi2 = |x: f64| {
                let p = -g.deriv2(x) + q.evaluate(x).map(|v| v * g.value(x)).unwrap_or(f64::NAN);
                p * p
            };
            endpoint_integral(&mut phi2, a, anchor, controls.quad_cells)?;
            Ok(Membership::InClosure)
        }
        ExtensionKind::Theta { theta, frame } => {
            let dec = rho_sigma(g, e.potential(), frame, controls)?;
            match dec.sigma_theta() {
                None => Ok(Membership::InClosure),
                Some(t) => {
                    if t.circular_distance(theta) <= controls.theta_match_tol {
                        Ok(Membership::InExtensionOnly)
                    } else {
                        Ok(Membership::Outside)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::descriptor::extension_from_theta;
    use crate::sl::frobenius_pair;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    /// g solving the homogeneous equation: rho = 0 and sigma = g.
    #[test]
    fn solutions_have_zero_rho() {
        let q = Potential::inverse_square(0.5);
        let frame = Frame::Frobenius { kappa: 0.5 };
        let (_, p2) = frobenius_pair(0.5);
        let dec = rho_sigma(&p2, &q, &frame, &ExtControls::default()).unwrap();
        for (&x, &r) in dec.grid.iter().zip(&dec.rho_values) {
            assert!(r.abs() < 1e-10, "rho({x}) = {r}");
        }
        match dec.sigma {
            SigmaPart::Homogeneous { c1, c2, .. } => {
                assert_relative_eq!(c1, 0.0, epsilon = 1e-10);
                assert_relative_eq!(c2, 1.0, max_relative = 1e-10);
            }
            SigmaPart::Trivial => panic!("sigma must be nontrivial"),
        }
    }

    /// g vanishing identically near the endpoint: sigma = 0.
    #[test]
    fn far_supported_g_has_trivial_sigma() {
        let q = Potential::inverse_square(0.5);
        let frame = Frame::Frobenius { kappa: 0.5 };
        // 1 - tau is 0 near the origin and 1 beyond r = 2... then cut off
        // again far out so g has two derivatives and compact support
        struct FarBump;
        impl C2Fn for FarBump {
            fn value(&self, x: f64) -> f64 {
                crate::special::Bump::new(3.0, 1.0).value(x)
            }
            fn deriv(&self, x: f64) -> f64 {
                crate::special::Bump::new(3.0, 1.0).deriv(x)
            }
            fn deriv2(&self, x: f64) -> f64 {
                crate::special::Bump::new(3.0, 1.0).deriv2(x)
            }
        }
        let dec = rho_sigma(&FarBump, &q, &frame, &ExtControls::default()).unwrap();
        assert!(dec.sigma_is_trivial());
    }

    /// The cutoff example: q = q_{1/2} (identically zero), g = tau * 1.
    /// sigma must be the constant solution psi2 = 1.
    #[test]
    fn cutoff_times_constant_recovers_psi2() {
        let q = Potential::inverse_square(0.5);
        let frame = Frame::Frobenius { kappa: 0.5 };
        let tau = SmoothCutoff::new(1.0, 2.0);
        let dec = rho_sigma(&tau, &q, &frame, &ExtControls::default()).unwrap();
        match dec.sigma {
            SigmaPart::Homogeneous { c1, c2, theta, .. } => {
                assert_relative_eq!(c1, 0.0, epsilon = 1e-8);
                assert_relative_eq!(c2, 1.0, max_relative = 1e-8);
                assert_relative_eq!(theta.angle(), FRAC_PI_2, max_relative = 1e-8);
            }
            SigmaPart::Trivial => panic!("sigma must be the constant solution"),
        }
        // rho + sigma reproduces g on the reporting grid
        for ((&x, &r), &gv) in dec.grid.iter().zip(&dec.rho_values).zip(&dec.g_values) {
            let s = dec.sigma_at(x).unwrap().u;
            assert_relative_eq!(r + s, gv, epsilon = 1e-8);
        }
    }

    #[test]
    fn membership_trichotomy_on_the_cutoff_example() {
        let q = Potential::inverse_square(0.5);
        let frame = Frame::Frobenius { kappa: 0.5 };
        let tau = SmoothCutoff::new(1.0, 2.0);
        let controls = ExtControls::default();

        let second = extension_from_theta(
            &q,
            BoundaryParameter::new(FRAC_PI_2).unwrap(),
            frame.clone(),
        )
        .unwrap();
        assert_eq!(
            domain_membership(&tau, &second, &controls).unwrap(),
            Membership::InExtensionOnly
        );

        let principal =
            extension_from_theta(&q, BoundaryParameter::new(0.0).unwrap(), frame.clone()).unwrap();
        assert_eq!(
            domain_membership(&tau, &principal, &controls).unwrap(),
            Membership::Outside
        );

        let far = crate::special::Bump::new(3.0, 1.0);
        struct BumpFn(crate::special::Bump);
        impl C2Fn for BumpFn {
            fn value(&self, x: f64) -> f64 {
                self.0.value(x)
            }
            fn deriv(&self, x: f64) -> f64 {
                self.0.deriv(x)
            }
            fn deriv2(&self, x: f64) -> f64 {
                self.0.deriv2(x)
            }
        }
        assert_eq!(
            domain_membership(&BumpFn(far), &principal, &controls).unwrap(),
            Membership::InClosure
        );
    }

    #[test]
    fn endpoint_wronskian_limit_detects_the_boundary_condition() {
        // q = q_{1/2}: g = tau * 1 satisfies the theta = pi/2 condition
        // (limit 0 against the constant solution) and violates theta = 0
        // (limit W(1, r)(0) = 1 against the principal solution r)
        let q = Potential::inverse_square(0.5);
        let frame = Frame::Frobenius { kappa: 0.5 };
        let tau = SmoothCutoff::new(1.0, 2.0);
        let second = extension_from_theta(
            &q,
            BoundaryParameter::new(FRAC_PI_2).unwrap(),
            frame.clone(),
        )
        .unwrap();
        let lim = boundary_wronskian_limit(&tau, &second).unwrap();
        assert!(lim.abs() < 1e-10, "limit {lim}");

        let principal =
            extension_from_theta(&q, BoundaryParameter::new(0.0).unwrap(), frame).unwrap();
        let lim = boundary_wronskian_limit(&tau, &principal).unwrap();
        assert_relative_eq!(lim, 1.0, max_relative = 1e-8);

        // a genuinely singular channel: tau * psi1 against its own condition
        let kappa = 0.3;
        let q = Potential::inverse_square(kappa);
        let (p1, _) = frobenius_pair(kappa);
        let g = CutoffTimes {
            tau: SmoothCutoff::new(1.0, 2.0),
            inner: &p1,
        };
        let own = extension_from_theta(
            &q,
            BoundaryParameter::new(0.0).unwrap(),
            Frame::Frobenius { kappa },
        )
        .unwrap();
        let lim = boundary_wronskian_limit(&g, &own).unwrap();
        assert!(lim.abs() < 1e-10, "limit {lim}");
        let other = extension_from_theta(
            &q,
            BoundaryParameter::new(FRAC_PI_2).unwrap(),
            Frame::Frobenius { kappa },
        )
        .unwrap();
        let lim = boundary_wronskian_limit(&g, &other).unwrap();
        // W(psi1, psi2) = -2 kappa
        assert_relative_eq!(lim, -2.0 * kappa, max_relative = 1e-8);
    }

    #[test]
    fn closure_membership_never_reports_extension_only() {
        let q = Potential::inverse_square(1.5);
        let e = ExtensionDescriptor::closure(q);
        // cutoff times the recessive solution r^2: both g and l_q g are
        // square-integrable at 0
        let (p1, _) = frobenius_pair(1.5);
        let g = CutoffTimes {
            tau: SmoothCutoff::new(1.0, 2.0),
            inner: &p1,
        };
        let m = domain_membership(&g, &e, &ExtControls::default()).unwrap();
        assert_eq!(m, Membership::InClosure);

        // cutoff times the constant violates the integrability precondition
        // for this kappa (q*g is not square-integrable at 0)
        let tau = SmoothCutoff::new(1.0, 2.0);
        assert!(domain_membership(&tau, &e, &ExtControls::default()).is_err());
    }
}
