use serde::{Deserialize, Serialize};

use super::interval::{Endpoint, Interval};
use super::SlError;

/// Effective potential q(x) for -u'' + q u = E u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// (kappa^2 - 1/4) / x^2 on an interval with left end 0.
    InverseSquare { kappa: f64 },
    Constant { c: f64 },
    /// Linear interpolation inside the table, error outside.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
    Sum { parts: Vec<PotentialKind> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    kind: PotentialKind,
    domain: Interval,
}

impl Potential {
    pub fn new(kind: PotentialKind, domain: Interval) -> Result<Self, SlError> {
        validate_kind(&kind, &domain)?;
        Ok(Self { kind, domain })
    }

    /// The radial inverse-square potential q_kappa on (0, inf).
    pub fn inverse_square(kappa: f64) -> Self {
        Self {
            kind: PotentialKind::InverseSquare { kappa },
            domain: Interval::positive_half_line(),
        }
    }

    pub fn constant(c: f64, domain: Interval) -> Self {
        Self {
            kind: PotentialKind::Constant { c },
            domain,
        }
    }

    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>, domain: Interval) -> Result<Self, SlError> {
        Self::new(PotentialKind::Tabulated { xs, values }, domain)
    }

    pub fn sum(parts: Vec<Potential>) -> Result<Self, SlError> {
        let Some(first) = parts.first() else {
            return Err(SlError::InvalidPotential("empty sum".into()));
        };
        let domain = first.domain;
        if parts.iter().any(|p| p.domain != domain) {
            return Err(SlError::InvalidPotential(
                "sum parts must share one domain".into(),
            ));
        }
        Self::new(
            PotentialKind::Sum {
                parts: parts.into_iter().map(|p| p.kind).collect(),
            },
            domain,
        )
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    /// Kappa when this is a pure inverse-square potential.
    pub fn inverse_square_kappa(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::InverseSquare { kappa } => Some(kappa),
            _ => None,
        }
    }

    /// True at ends where q is unbounded and integration must keep a margin.
    /// kappa = +-1/2 is the identically zero potential and counts as regular.
    pub fn singular_ends(&self) -> (bool, bool) {
        fn ends(kind: &PotentialKind) -> (bool, bool) {
            match kind {
                PotentialKind::InverseSquare { kappa } => (kappa * kappa != 0.25, false),
                PotentialKind::Sum { parts } => parts.iter().fold((false, false), |acc, p| {
                    let e = ends(p);
                    (acc.0 || e.0, acc.1 || e.1)
                }),
                _ => (false, false),
            }
        }
        ends(&self.kind)
    }

    /// Largest closed span on which pointwise evaluation is defined: the
    /// domain interior, intersected with table ranges.
    pub fn evaluable_range(&self) -> (f64, f64) {
        fn table_clip(kind: &PotentialKind, lo: &mut f64, hi: &mut f64) {
            match kind {
                PotentialKind::Tabulated { xs, .. } => {
                    *lo = lo.max(xs[0]);
                    *hi = hi.min(*xs.last().unwrap());
                }
                PotentialKind::Sum { parts } => {
                    for p in parts {
                        table_clip(p, lo, hi);
                    }
                }
                _ => {}
            }
        }
        let mut lo = self.domain.lower_bound();
        let mut hi = self.domain.upper_bound();
        table_clip(&self.kind, &mut lo, &mut hi);
        (lo, hi)
    }

    /// q(x); errors outside the open domain or outside a table.
    pub fn evaluate(&self, x: f64) -> Result<f64, SlError> {
        if !self.domain.contains_interior(x) {
            return Err(SlError::DomainError { x });
        }
        eval_kind(&self.kind, x)
    }

    /// Check a closed span is admissible for pointwise evaluation.
    pub fn check_span(&self, lo: f64, hi: f64) -> Result<(), SlError> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SlError::InvalidControls(format!(
                "bad span [{lo}, {hi}]"
            )));
        }
        if !self.domain.contains_interior(lo) || !self.domain.contains_interior(hi) {
            return Err(SlError::DomainError {
                x: if self.domain.contains_interior(lo) { hi } else { lo },
            });
        }
        check_span_kind(&self.kind, lo, hi)
    }

    /// Fast evaluator for use after `check_span`; x must stay inside the span.
    pub fn evaluator(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| eval_kind_unchecked(&self.kind, x)
    }
}

fn validate_kind(kind: &PotentialKind, domain: &Interval) -> Result<(), SlError> {
    match kind {
        PotentialKind::InverseSquare { kappa } => {
            if !kappa.is_finite() {
                return Err(SlError::InvalidPotential("kappa must be finite".into()));
            }
            if domain.left() != Endpoint::Finite(0.0) {
                return Err(SlError::InvalidPotential(
                    "inverse-square potential needs left endpoint 0".into(),
                ));
            }
            Ok(())
        }
        PotentialKind::Constant { c } => {
            if !c.is_finite() {
                return Err(SlError::InvalidPotential("constant must be finite".into()));
            }
            Ok(())
        }
        PotentialKind::Tabulated { xs, values } => {
            if xs.len() != values.len() || xs.len() < 2 {
                return Err(SlError::InvalidPotential(
                    "table needs >= 2 matched samples".into(),
                ));
            }
            if xs.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(SlError::InvalidPotential(
                    "table grid must be strictly increasing".into(),
                ));
            }
            if xs
                .iter()
                .chain(values.iter())
                .any(|v| !v.is_finite())
            {
                return Err(SlError::InvalidPotential("table entries must be finite".into()));
            }
            if !domain.contains_interior(xs[0]) || !domain.contains_interior(*xs.last().unwrap()) {
                return Err(SlError::InvalidPotential(
                    "table grid must lie inside the domain".into(),
                ));
            }
            Ok(())
        }
        PotentialKind::Sum { parts } => {
            if parts.is_empty() {
                return Err(SlError::InvalidPotential("empty sum".into()));
            }
            for p in parts {
                validate_kind(p, domain)?;
            }
            Ok(())
        }
    }
}

fn check_span_kind(kind: &PotentialKind, lo: f64, hi: f64) -> Result<(), SlError> {
    match kind {
        PotentialKind::Tabulated { xs, .. } => {
            if lo < xs[0] || hi > *xs.last().unwrap() {
                Err(SlError::TableRange {
                    x: if lo < xs[0] { lo } else { hi },
                })
            } else {
                Ok(())
            }
        }
        PotentialKind::Sum { parts } => {
            for p in parts {
                check_span_kind(p, lo, hi)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn eval_kind(kind: &PotentialKind, x: f64) -> Result<f64, SlError> {
    match kind {
        PotentialKind::Tabulated { xs, .. } => {
            if x < xs[0] || x > *xs.last().unwrap() {
                return Err(SlError::TableRange { x });
            }
            Ok(eval_kind_unchecked(kind, x))
        }
        PotentialKind::Sum { parts } => {
            let mut acc = 0.0;
            for p in parts {
                acc += eval_kind(p, x)?;
            }
            Ok(acc)
        }
        _ => Ok(eval_kind_unchecked(kind, x)),
    }
}

fn eval_kind_unchecked(kind: &PotentialKind, x: f64) -> f64 {
    match kind {
        PotentialKind::InverseSquare { kappa } => {
            let c = kappa * kappa - 0.25;
            // avoid 0/0 when x*x underflows for the zero potential
            if c == 0.0 {
                0.0
            } else {
                c / (x * x)
            }
        }
        PotentialKind::Constant { c } => *c,
        PotentialKind::Tabulated { xs, values } => {
            let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                Ok(i) => return values[i],
                Err(i) => i.clamp(1, xs.len() - 1),
            };
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            values[i - 1] + t * (values[i] - values[i - 1])
        }
        PotentialKind::Sum { parts } => parts.iter().map(|p| eval_kind_unchecked(p, x)).sum(),
    }
}
