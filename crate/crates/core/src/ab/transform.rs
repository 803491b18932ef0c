use num_complex::Complex64;
use serde::Serialize;

use super::flux::{channel_kappa, FluxParameter};
use super::AbError;
use crate::special::CosWindow;

/// Tensor grid in cylindrical coordinates: uniform periodic angle, uniform z
/// box, increasing radial grid on (0, inf).
#[derive(Debug, Clone, PartialEq)]
pub struct CylindricalGrid {
    n_ang: usize,
    zs: Vec<f64>,
    rs: Vec<f64>,
    dz: f64,
}

impl CylindricalGrid {
    pub fn uniform(
        n_ang: usize,
        z_half_width: f64,
        n_z: usize,
        rs: Vec<f64>,
    ) -> Result<Self, AbError> {
        if n_ang < 4 || n_z < 4 {
            return Err(AbError::Validation(
                "grid needs at least 4 angular and 4 axial points".into(),
            ));
        }
        if !(z_half_width > 0.0) {
            return Err(AbError::Validation("z half-width must be positive".into()));
        }
        if rs.len() < 8 || rs.windows(2).any(|w| !(w[0] < w[1])) || rs[0] <= 0.0 {
            return Err(AbError::Validation(
                "radial grid must be strictly increasing with r > 0".into(),
            ));
        }
        let dz = 2.0 * z_half_width / n_z as f64;
        let zs = (0..n_z).map(|k| -z_half_width + dz * k as f64).collect();
        Ok(Self { n_ang, zs, rs, dz })
    }

    /// Validate externally supplied axes; a non-uniform angular or axial grid
    /// is unsupported.
    pub fn from_axes(phis: &[f64], zs: Vec<f64>, rs: Vec<f64>) -> Result<Self, AbError> {
        let n = phis.len();
        if n < 4 {
            return Err(AbError::Validation("need at least 4 angular points".into()));
        }
        let dphi = 2.0 * std::f64::consts::PI / n as f64;
        for (j, &p) in phis.iter().enumerate() {
            if (p - dphi * j as f64).abs() > 1e-9 {
                return Err(AbError::Validation(
                    "angular grid must be uniform on [0, 2*pi)".into(),
                ));
            }
        }
        if zs.len() < 4 {
            return Err(AbError::Validation("need at least 4 axial points".into()));
        }
        let dz = zs[1] - zs[0];
        if zs.windows(2).any(|w| ((w[1] - w[0]) - dz).abs() > 1e-9 * dz.abs()) {
            return Err(AbError::Validation("axial grid must be uniform".into()));
        }
        if rs.len() < 8 || rs.windows(2).any(|w| !(w[0] < w[1])) || rs[0] <= 0.0 {
            return Err(AbError::Validation(
                "radial grid must be strictly increasing with r > 0".into(),
            ));
        }
        Ok(Self {
            n_ang: n,
            zs,
            rs,
            dz,
        })
    }

    /// Geometric radial grid on [r_min, r_max].
    pub fn geometric_radii(r_min: f64, r_max: f64, n_r: usize) -> Result<Vec<f64>, AbError> {
        if !(r_min > 0.0) || !(r_max > r_min) || n_r < 8 {
            return Err(AbError::Validation(
                "geometric radial grid needs 0 < r_min < r_max and n_r >= 8".into(),
            ));
        }
        let ratio = (r_max / r_min).powf(1.0 / (n_r - 1) as f64);
        Ok((0..n_r).map(|i| r_min * ratio.powi(i as i32)).collect())
    }

    pub fn n_ang(&self) -> usize {
        self.n_ang
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_ang as f64
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    pub fn rs(&self) -> &[f64] {
        &self.rs
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn dphi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_ang as f64
    }

    /// The DFT-dual axial momenta, ascending.
    pub fn dual_momenta(&self) -> Vec<f64> {
        let n = self.zs.len() as i64;
        let length = self.dz * n as f64;
        (0..n)
            .map(|l| 2.0 * std::f64::consts::PI * (l - n / 2) as f64 / length)
            .collect()
    }
}

/// Sampled complex field on a cylindrical grid; index order (r, z, phi).
#[derive(Debug, Clone)]
pub struct CylindricalField {
    grid: CylindricalGrid,
    values: Vec<Complex64>,
}

impl CylindricalField {
    pub fn from_fn(
        grid: CylindricalGrid,
        f: impl Fn(f64, f64, f64) -> Complex64,
    ) -> CylindricalField {
        let mut values =
            Vec::with_capacity(grid.rs.len() * grid.zs.len() * grid.n_ang);
        for &r in &grid.rs {
            for &z in &grid.zs {
                for j in 0..grid.n_ang {
                    values.push(f(grid.phi(j), z, r));
                }
            }
        }
        CylindricalField { grid, values }
    }

    pub fn grid(&self) -> &CylindricalGrid {
        &self.grid
    }

    pub fn value(&self, ir: usize, iz: usize, iphi: usize) -> Complex64 {
        self.values[(ir * self.grid.zs.len() + iz) * self.grid.n_ang + iphi]
    }

    /// Cylindrical-measure L^2 norm squared (trapezoid in r, rectangle rule
    /// in the periodic angle and the z box).
    pub fn norm_squared(&self) -> f64 {
        let wr = trapezoid_weights(&self.grid.rs);
        let cell = self.grid.dphi() * self.grid.dz;
        let mut acc = 0.0;
        for (ir, &r) in self.grid.rs.iter().enumerate() {
            let mut shell = 0.0;
            for iz in 0..self.grid.zs.len() {
                for j in 0..self.grid.n_ang {
                    shell += self.value(ir, iz, j).norm_sqr();
                }
            }
            acc += wr[ir] * r * shell * cell;
        }
        acc
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    fn shell_max(&self, ir: usize) -> f64 {
        let mut m = 0.0f64;
        for iz in 0..self.grid.zs.len() {
            for j in 0..self.grid.n_ang {
                m = m.max(self.value(ir, iz, j).norm());
            }
        }
        m
    }

    fn slab_max(&self, iz: usize) -> f64 {
        let mut m = 0.0f64;
        for ir in 0..self.grid.rs.len() {
            for j in 0..self.grid.n_ang {
                m = m.max(self.value(ir, iz, j).norm());
            }
        }
        m
    }
}

pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = xs[i] - xs[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

/// Channel data over (m, p, r); the amplitudes carry the sqrt(r) factor, so
/// radial integrals take no extra measure weight.
#[derive(Debug, Clone)]
pub struct ChannelAmplitudes {
    pub ms: Vec<i64>,
    pub ps: Vec<f64>,
    pub rs: Vec<f64>,
    dp: f64,
    data: Vec<Complex64>,
}

impl ChannelAmplitudes {
    pub fn at(&self, im: usize, ip: usize, ir: usize) -> Complex64 {
        self.data[(im * self.ps.len() + ip) * self.rs.len() + ir]
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    /// Sum over the dual momenta and the radial grid of |amplitude|^2,
    /// per channel.
    pub fn channel_energies(&self) -> Vec<(i64, f64)> {
        let wr = trapezoid_weights(&self.rs);
        self.ms
            .iter()
            .enumerate()
            .map(|(im, &m)| {
                let mut acc = 0.0;
                for ip in 0..self.ps.len() {
                    for ir in 0..self.rs.len() {
                        acc += wr[ir] * self.at(im, ip, ir).norm_sqr();
                    }
                }
                (m, acc * self.dp)
            })
            .collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.channel_energies().iter().map(|(_, e)| e).sum()
    }
}

/// Discrete version of the diagonalizing transform: Fourier series in the
/// angle, Fourier transform in z on the DFT dual grid, times sqrt(r).
pub fn transform_forward(field: &CylindricalField, ms: &[i64]) -> ChannelAmplitudes {
    let grid = field.grid();
    let n_ang = grid.n_ang();
    let n_z = grid.zs().len();
    let n_r = grid.rs().len();
    let ps = grid.dual_momenta();
    let dp = 2.0 * std::f64::consts::PI / (grid.dz() * n_z as f64);

    // angular twiddles per requested m
    let ang: Vec<Vec<Complex64>> = ms
        .iter()
        .map(|&m| {
            (0..n_ang)
                .map(|j| Complex64::from_polar(1.0, m as f64 * grid.phi(j)))
                .collect()
        })
        .collect();
    // axial twiddles per dual momentum
    let axial: Vec<Vec<Complex64>> = ps
        .iter()
        .map(|&p| grid.zs().iter().map(|&z| Complex64::from_polar(1.0, p * z)).collect())
        .collect();

    let mut data = vec![Complex64::new(0.0, 0.0); ms.len() * ps.len() * n_r];
    let mut coeff = vec![Complex64::new(0.0, 0.0); n_z];
    for ir in 0..n_r {
        let sqrt_r = grid.rs()[ir].sqrt();
        for (im, twiddle) in ang.iter().enumerate() {
            // c_m(z) = (1/N) sum_j F e^{i m phi_j}
            for (iz, c) in coeff.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, w) in twiddle.iter().enumerate() {
                    acc += field.value(ir, iz, j) * w;
                }
                *c = acc / n_ang as f64;
            }
            for (ip, zrow) in axial.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (iz, w) in zrow.iter().enumerate() {
                    acc += coeff[iz] * w;
                }
                data[(im * ps.len() + ip) * n_r + ir] = acc * grid.dz() * sqrt_r;
            }
        }
    }
    ChannelAmplitudes {
        ms: ms.to_vec(),
        ps,
        rs: grid.rs().to_vec(),
        dp,
        data,
    }
}

/// A field with enough closed-form structure to apply the magnetic
/// differential expression exactly.
pub trait AnalyticField {
    fn value(&self, phi: f64, z: f64, r: f64) -> Complex64;
    /// The differential expression of the solenoid Hamiltonian applied to
    /// the field, in cylindrical coordinates.
    fn ab_applied(&self, flux: f64, phi: f64, z: f64, r: f64) -> Complex64;
}

/// Separable mode (1/sqrt(r)) e^{-i n phi} chi(z) psi(r) with compactly
/// supported window profiles.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicMode {
    pub n: i64,
    pub chi: CosWindow,
    pub radial: CosWindow,
}

impl HarmonicMode {
    fn u_parts(&self, r: f64) -> (f64, f64, f64) {
        // u = psi / sqrt(r) and its first two derivatives
        let s = r.sqrt();
        let v = self.radial.value(r);
        let d = self.radial.deriv(r);
        let d2 = self.radial.deriv2(r);
        let u = v / s;
        let du = d / s - 0.5 * v / (s * r);
        let d2u = d2 / s - d / (s * r) + 0.75 * v / (s * r * r);
        (u, du, d2u)
    }
}

impl AnalyticField for HarmonicMode {
    fn value(&self, phi: f64, z: f64, r: f64) -> Complex64 {
        let (u, _, _) = self.u_parts(r);
        Complex64::from_polar(1.0, -(self.n as f64) * phi) * (self.chi.value(z) * u)
    }

    fn ab_applied(&self, flux: f64, phi: f64, z: f64, r: f64) -> Complex64 {
        let (u, du, d2u) = self.u_parts(r);
        let chi = self.chi.value(z);
        let chi2 = self.chi.deriv2(z);
        let kappa_ang = self.n as f64 - flux;
        let radial = -d2u - du / r + kappa_ang * kappa_ang * u / (r * r);
        Complex64::from_polar(1.0, -(self.n as f64) * phi) * (-chi2 * u + chi * radial)
    }
}

/// Superposition of separable modes; smooth, compactly supported, generally
/// non-separable in the angle.
#[derive(Debug, Clone)]
pub struct ModeSum(pub Vec<HarmonicMode>);

impl AnalyticField for ModeSum {
    fn value(&self, phi: f64, z: f64, r: f64) -> Complex64 {
        self.0.iter().map(|m| m.value(phi, z, r)).sum()
    }

    fn ab_applied(&self, flux: f64, phi: f64, z: f64, r: f64) -> Complex64 {
        self.0.iter().map(|m| m.ab_applied(flux, phi, z, r)).sum()
    }
}

/// Second derivative at grid point `i` from the local cubic through four
/// neighboring samples; second order with a small constant on smooth
/// non-uniform grids.
fn cubic_second_derivative(xs: &[f64], us: &[Complex64], i: usize) -> Complex64 {
    let n = xs.len();
    debug_assert!(i >= 1 && i + 1 < n);
    let s = if i >= 2 { i - 2 } else { i - 1 };
    let s = s.min(n - 4);
    // Newton divided differences over xs[s..s+4]
    let x = &xs[s..s + 4];
    let f = &us[s..s + 4];
    let f01 = (f[1] - f[0]) / (x[1] - x[0]);
    let f12 = (f[2] - f[1]) / (x[2] - x[1]);
    let f23 = (f[3] - f[2]) / (x[3] - x[2]);
    let f012 = (f12 - f01) / (x[2] - x[0]);
    let f123 = (f23 - f12) / (x[3] - x[1]);
    let f0123 = (f123 - f012) / (x[3] - x[0]);
    let xi = xs[i];
    f012 * 2.0 + f0123 * (2.0 * ((xi - x[0]) + (xi - x[1]) + (xi - x[2])))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransformDiagnostics {
    /// |norm^2 - sum over window channels| / norm^2.
    pub parseval_defect: f64,
    /// Relative channel-wise discrepancy between the transform of the
    /// applied expression and the finite-difference radial operator plus
    /// p^2 acting on the transform.
    pub intertwining_defect: f64,
    pub norm_squared: f64,
}

/// The window of angular channels |m - phi| <= m_window.
pub fn channel_window(phi: FluxParameter, m_window: i64) -> Vec<i64> {
    let lo = (phi.value() - m_window as f64).ceil() as i64;
    let hi = (phi.value() + m_window as f64).floor() as i64;
    (lo..=hi).collect()
}

const SUPPORT_TOL: f64 = 1e-10;

fn check_support(field: &CylindricalField) -> Result<f64, AbError> {
    let max = field.max_abs();
    if max == 0.0 {
        return Ok(0.0);
    }
    for ir in [0usize, 1] {
        if field.shell_max(ir) > SUPPORT_TOL * max {
            return Err(AbError::Precondition(
                "field support touches the z-axis region of the grid".into(),
            ));
        }
    }
    let n_r = field.grid().rs().len();
    if field.shell_max(n_r - 1) > SUPPORT_TOL * max {
        return Err(AbError::Precondition(
            "field support reaches the outer radial boundary".into(),
        ));
    }
    let n_z = field.grid().zs().len();
    for iz in [0usize, n_z - 1] {
        if field.slab_max(iz) > SUPPORT_TOL * max {
            return Err(AbError::Precondition(
                "field support reaches the z boundary of the box".into(),
            ));
        }
    }
    Ok(max)
}

/// Unitarity and intertwining diagnostics of the transform at the grid's
/// resolution.
pub fn transform_checks(
    field: &dyn AnalyticField,
    flux: FluxParameter,
    grid: &CylindricalGrid,
    m_window: i64,
) -> Result<TransformDiagnostics, AbError> {
    let sampled = CylindricalField::from_fn(grid.clone(), |phi, z, r| field.value(phi, z, r));
    let max = check_support(&sampled)?;
    let norm2 = sampled.norm_squared();
    if max == 0.0 || norm2 == 0.0 {
        return Ok(TransformDiagnostics {
            parseval_defect: 0.0,
            intertwining_defect: 0.0,
            norm_squared: 0.0,
        });
    }

    let ms = channel_window(flux, m_window);
    let amp = transform_forward(&sampled, &ms);
    let parseval_defect = (norm2 - amp.total_energy()).abs() / norm2;

    let applied = CylindricalField::from_fn(grid.clone(), |phi, z, r| {
        field.ab_applied(flux.value(), phi, z, r)
    });
    let lhs = transform_forward(&applied, &ms);

    let wr = trapezoid_weights(grid.rs());
    let rs = grid.rs();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut row = vec![Complex64::new(0.0, 0.0); rs.len()];
    for (im, &m) in ms.iter().enumerate() {
        let kappa = channel_kappa(m, flux);
        let coupling = kappa * kappa - 0.25;
        for (ip, &p) in amp.ps.iter().enumerate() {
            for (ir, v) in row.iter_mut().enumerate() {
                *v = amp.at(im, ip, ir);
            }
            for ir in 1..rs.len() - 1 {
                let d2 = cubic_second_derivative(rs, &row, ir);
                let rhs = -d2 + row[ir] * (coupling / (rs[ir] * rs[ir]) + p * p);
                let w = wr[ir] * amp.dp();
                num += w * (lhs.at(im, ip, ir) - rhs).norm_sqr();
                den += w * lhs.at(im, ip, ir).norm_sqr();
            }
        }
    }
    let intertwining_defect = (num / den.max(f64::MIN_POSITIVE)).sqrt();

    Ok(TransformDiagnostics {
        parseval_defect,
        intertwining_defect,
        norm_squared: norm2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_grid(n_ang: usize, n_z: usize, n_r: usize) -> CylindricalGrid {
        let rs = CylindricalGrid::geometric_radii(0.05, 6.0, n_r).unwrap();
        CylindricalGrid::uniform(n_ang, 8.0, n_z, rs).unwrap()
    }

    fn mode(n: i64) -> HarmonicMode {
        HarmonicMode {
            n,
            chi: CosWindow::new(0.0, 4.0, 6),
            radial: CosWindow::new(2.1, 1.5, 6),
        }
    }

    #[test]
    fn single_harmonic_concentrates_in_one_channel() {
        let grid = test_grid(32, 64, 128);
        let m = mode(2);
        let sampled = CylindricalField::from_fn(grid.clone(), |p, z, r| m.value(p, z, r));
        let ms: Vec<i64> = (-8..=8).collect();
        let amp = transform_forward(&sampled, &ms);
        let energies = amp.channel_energies();
        let total: f64 = energies.iter().map(|(_, e)| e).sum();
        for (ch, e) in energies {
            if ch == 2 {
                assert!(e > 0.99 * total);
            } else {
                assert!(e <= 1e-12 * total, "leakage in channel {ch}: {e}");
            }
        }
    }

    #[test]
    fn zero_field_has_zero_diagnostics() {
        let grid = test_grid(16, 32, 64);
        struct Zero;
        impl AnalyticField for Zero {
            fn value(&self, _: f64, _: f64, _: f64) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
            fn ab_applied(&self, _: f64, _: f64, _: f64, _: f64) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
        }
        let d = transform_checks(&Zero, FluxParameter::new(0.5).unwrap(), &grid, 4).unwrap();
        assert_eq!(d.parseval_defect, 0.0);
        assert_eq!(d.intertwining_defect, 0.0);
    }

    #[test]
    fn angular_independence_leaves_only_channel_zero() {
        let grid = test_grid(32, 64, 96);
        let m = mode(0);
        let sampled = CylindricalField::from_fn(grid.clone(), |p, z, r| m.value(p, z, r));
        let amp = transform_forward(&sampled, &[-2, -1, 0, 1, 2]);
        let energies = amp.channel_energies();
        let total: f64 = energies.iter().map(|(_, e)| e).sum();
        for (ch, e) in energies {
            if ch != 0 {
                assert!(e <= 1e-12 * total);
            }
        }
    }

    #[test]
    fn parseval_and_intertwining_hold_at_desk_scale() {
        let grid = test_grid(32, 128, 512);
        let field = ModeSum(vec![mode(0), mode(2)]);
        let d = transform_checks(&field, FluxParameter::new(0.5).unwrap(), &grid, 6).unwrap();
        assert!(d.parseval_defect <= 1e-3, "parseval {}", d.parseval_defect);
        assert!(
            d.intertwining_defect <= 1e-3,
            "intertwining {}",
            d.intertwining_defect
        );
        assert!(d.norm_squared > 0.0);
    }

    #[test]
    fn support_touching_axis_is_rejected() {
        let grid = test_grid(16, 32, 64);
        let bad = HarmonicMode {
            n: 0,
            chi: CosWindow::new(0.0, 2.0, 8),
            radial: CosWindow::new(0.2, 0.3, 8),
        };
        let r = transform_checks(&bad, FluxParameter::new(0.5).unwrap(), &grid, 4);
        assert!(matches!(r, Err(AbError::Precondition(_))));
    }

    #[test]
    fn conjugation_symmetry_for_real_fields() {
        let grid = test_grid(16, 32, 48);
        // real field: cos(2 phi) profile
        let chi = CosWindow::new(0.0, 2.0, 8);
        let rad = CosWindow::new(2.0, 1.0, 8);
        let sampled = CylindricalField::from_fn(grid.clone(), |phi, z, r| {
            Complex64::new((2.0 * phi).cos() * chi.value(z) * rad.value(r), 0.0)
        });
        let ms = vec![-3, -2, -1, 0, 1, 2, 3];
        let amp = transform_forward(&sampled, &ms);
        let n_p = amp.ps.len();
        // p grid pairs p_l with -p at mirrored index (skip the unpaired edge)
        for (im, &m) in ms.iter().enumerate() {
            let im_neg = ms.iter().position(|&mm| mm == -m).unwrap();
            for ip in 1..n_p {
                let ip_neg = n_p - ip;
                if ip_neg >= n_p {
                    continue;
                }
                for ir in (0..amp.rs.len()).step_by(7) {
                    let a = amp.at(im, ip, ir);
                    let b = amp.at(im_neg, ip_neg, ir).conj();
                    assert_relative_eq!(a.re, b.re, epsilon = 1e-10 * (1.0 + a.norm()));
                    assert_relative_eq!(a.im, b.im, epsilon = 1e-10 * (1.0 + a.norm()));
                }
            }
        }
    }

    #[test]
    fn nonuniform_angular_grid_is_rejected() {
        let rs = CylindricalGrid::geometric_radii(0.1, 5.0, 16).unwrap();
        let phis: Vec<f64> = vec![0.0, 0.5, 1.0, 4.0];
        let zs: Vec<f64> = (0..8).map(|k| k as f64 * 0.5 - 2.0).collect();
        assert!(matches!(
            CylindricalGrid::from_axes(&phis, zs, rs),
            Err(AbError::Validation(_))
        ));
    }
}
