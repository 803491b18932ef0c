//! Small closed-form helpers: the gamma function on the range the boundary
//! matching needs, and compactly supported C^2 window functions used to build
//! test elements of operator domains.

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-14 for x > 0.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real argument (poles at 0, -1, -2, ... return NaN).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = (std::f64::consts::PI * x).sin();
        if s == 0.0 {
            return f64::NAN;
        }
        std::f64::consts::PI / (s * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// C^infinity bump on (-1, 1): exp(1/(t^2-1)) inside, 0 outside.
/// Value and first two derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
}

impl Bump {
    pub fn new(center: f64, half_width: f64) -> Self {
        assert!(half_width > 0.0, "bump half-width must be positive");
        Self { center, half_width }
    }

    fn local(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }

    pub fn value(&self, x: f64) -> f64 {
        let t = self.local(x);
        if t.abs() >= 1.0 {
            0.0
        } else {
            (1.0 / (t * t - 1.0)).exp()
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let t = self.local(x);
        if t.abs() >= 1.0 {
            0.0
        } else {
            let d = t * t - 1.0;
            self.value(x) * (-2.0 * t / (d * d)) / self.half_width
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let t = self.local(x);
        if t.abs() >= 1.0 {
            0.0
        } else {
            let d = t * t - 1.0;
            let first = -2.0 * t / (d * d);
            let second = (6.0 * t * t + 2.0) / (d * d * d);
            self.value(x) * (first * first + second) / (self.half_width * self.half_width)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Compactly supported cos^k window on (center - half_width, center +
/// half_width); C^(k-1) with rapidly decaying spectrum, which keeps
/// discrete-transform derivative identities accurate at moderate grids.
#[derive(Debug, Clone, Copy)]
pub struct CosWindow {
    pub center: f64,
    pub half_width: f64,
    pub power: i32,
}

impl CosWindow {
    pub fn new(center: f64, half_width: f64, power: i32) -> Self {
        assert!(half_width > 0.0 && power >= 4, "window needs width > 0, power >= 4");
        Self {
            center,
            half_width,
            power,
        }
    }

    fn phase(&self, x: f64) -> Option<f64> {
        let t = x - self.center;
        if t.abs() >= self.half_width {
            None
        } else {
            Some(std::f64::consts::FRAC_PI_2 * t / self.half_width)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.phase(x) {
            None => 0.0,
            Some(a) => a.cos().powi(self.power),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self.phase(x) {
            None => 0.0,
            Some(a) => {
                let scale = std::f64::consts::FRAC_PI_2 / self.half_width;
                -(self.power as f64) * scale * a.cos().powi(self.power - 1) * a.sin()
            }
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self.phase(x) {
            None => 0.0,
            Some(a) => {
                let k = self.power as f64;
                let scale = std::f64::consts::FRAC_PI_2 / self.half_width;
                let c = a.cos();
                k * scale * scale * c.powi(self.power - 2) * ((k - 1.0) - k * c * c)
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Quintic smoothstep s on [0,1]: s(0)=0, s(1)=1, s' = s'' = 0 at both ends.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let v = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (v, d, d2)
    }
}

/// C^2 cutoff equal to 1 for x <= r_one and 0 for x >= r_zero.
#[derive(Debug, Clone, Copy)]
pub struct SmoothCutoff {
    pub r_one: f64,
    pub r_zero: f64,
}

impl SmoothCutoff {
    pub fn new(r_one: f64, r_zero: f64) -> Self {
        assert!(
            r_one < r_zero && r_one.is_finite() && r_zero.is_finite(),
            "cutoff needs r_one < r_zero"
        );
        Self { r_one, r_zero }
    }

    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let w = self.r_zero - self.r_one;
        let (s, ds, d2s) = smoothstep((x - self.r_one) / w);
        (1.0 - s, -ds / w, -d2s / (w * w))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_relative_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(1.5), 0.5 * std::f64::consts::PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(2.0), 1.0, max_relative = 1e-13);
        // Gamma(1.25)/Gamma(0.75), a ratio the boundary matching uses.
        assert_relative_eq!(
            gamma(1.25) / gamma(0.75),
            0.906_402_477_055_477_1 / 1.225_416_702_465_177_6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = Bump::new(2.0, 1.2);
        let h = 1e-5;
        for &x in &[1.1, 1.7, 2.0, 2.6, 3.1] {
            let fd1 = (b.value(x + h) - b.value(x - h)) / (2.0 * h);
            let fd2 = (b.value(x + h) - 2.0 * b.value(x) + b.value(x - h)) / (h * h);
            assert_relative_eq!(b.deriv(x), fd1, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(b.deriv2(x), fd2, max_relative = 1e-4, epsilon = 1e-6);
        }
        assert_eq!(b.value(0.79), 0.0);
        assert_eq!(b.deriv(3.3), 0.0);
    }

    #[test]
    fn cos_window_derivatives_match_finite_differences() {
        let w = CosWindow::new(0.0, 3.0, 8);
        let h = 1e-5;
        for &x in &[-2.5, -1.0, 0.0, 0.7, 2.2] {
            let fd1 = (w.value(x + h) - w.value(x - h)) / (2.0 * h);
            let fd2 = (w.value(x + h) - 2.0 * w.value(x) + w.value(x - h)) / (h * h);
            assert_relative_eq!(w.deriv(x), fd1, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(w.deriv2(x), fd2, max_relative = 1e-4, epsilon = 1e-5);
        }
        assert_eq!(w.value(3.0), 0.0);
        assert_eq!(w.deriv(-3.2), 0.0);
        assert_eq!(w.value(0.0), 1.0);
    }

    #[test]
    fn cutoff_is_one_then_zero_and_c2() {
        let tau = SmoothCutoff::new(1.0, 2.0);
        assert_eq!(tau.value(0.3), 1.0);
        assert_eq!(tau.value(2.5), 0.0);
        let (v, d, _) = tau.eval(1.5);
        assert_relative_eq!(v, 0.5, max_relative = 1e-12);
        assert!(d < 0.0);
        // derivative continuity at the joints
        let h = 1e-7;
        for &x in &[1.0, 2.0] {
            let fd = (tau.value(x + h) - tau.value(x - h)) / (2.0 * h);
            assert_relative_eq!(tau.eval(x).1, fd, epsilon = 1e-5);
        }
    }
}
