use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::flux::{channel_kappa, singular_channels, FluxParameter};
use super::tau::TauSpec;
use super::AbError;
use crate::ext::{extension_from_theta, ExtensionDescriptor, Frame};
use crate::sl::Potential;
use crate::spectral::{eigenvalues_below, EnergyWindow, SpectralControls};

/// Flux plus boundary-parameter maps covering exactly the singular channels:
/// one map for integer flux, two otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct AbFamilySpec {
    phi: FluxParameter,
    taus: BTreeMap<i64, TauSpec>,
}

impl AbFamilySpec {
    pub fn new(phi: FluxParameter, taus: BTreeMap<i64, TauSpec>) -> Result<Self, AbError> {
        let expected: BTreeSet<i64> = singular_channels(phi).into_iter().collect();
        let got: BTreeSet<i64> = taus.keys().copied().collect();
        if expected != got {
            return Err(AbError::Validation(format!(
                "tau maps must cover exactly the singular channels {expected:?}, got {got:?}"
            )));
        }
        Ok(Self { phi, taus })
    }

    pub fn phi(&self) -> FluxParameter {
        self.phi
    }

    pub fn taus(&self) -> &BTreeMap<i64, TauSpec> {
        &self.taus
    }
}

/// Realizations assigned over an m-window and a p grid: singular channels
/// carry theta extensions in the frobenius frame of kappa = m - phi, all
/// others the closure.
#[derive(Debug, Clone)]
pub struct FamilyAssignment {
    pub p_grid: Vec<f64>,
    pub channels: Vec<FamilyChannel>,
}

#[derive(Debug, Clone)]
pub struct FamilyChannel {
    pub m: i64,
    pub kappa: f64,
    /// One descriptor per p-grid point.
    pub descriptors: Vec<ExtensionDescriptor>,
}

impl FamilyAssignment {
    pub fn descriptor(&self, m: i64, p_index: usize) -> Option<&ExtensionDescriptor> {
        self.channels
            .iter()
            .find(|c| c.m == m)
            .and_then(|c| c.descriptors.get(p_index))
    }
}

fn m_range(phi: FluxParameter, m_window: i64) -> std::ops::RangeInclusive<i64> {
    let lo = (phi.value() - m_window as f64).ceil() as i64;
    let hi = (phi.value() + m_window as f64).floor() as i64;
    lo..=hi
}

pub fn build_family(
    spec: &AbFamilySpec,
    p_grid: &[f64],
    m_window: i64,
) -> Result<FamilyAssignment, AbError> {
    if m_window < 1 {
        return Err(AbError::Validation("m window must be >= 1".into()));
    }
    if p_grid.iter().any(|p| !p.is_finite()) {
        return Err(AbError::Validation("p grid entries must be finite".into()));
    }
    let mut channels = Vec::new();
    for m in m_range(spec.phi, m_window) {
        let kappa = channel_kappa(m, spec.phi);
        let q = Potential::inverse_square(kappa);
        let mut descriptors = Vec::with_capacity(p_grid.len());
        if kappa.abs() < 1.0 {
            let tau = spec.taus.get(&m).expect("validated singular coverage");
            for &p in p_grid {
                let theta = tau.evaluate(p)?;
                descriptors.push(extension_from_theta(
                    &q,
                    theta,
                    Frame::Frobenius { kappa },
                )?);
            }
        } else {
            for _ in p_grid {
                descriptors.push(ExtensionDescriptor::closure(q.clone()));
            }
        }
        channels.push(FamilyChannel {
            m,
            kappa,
            descriptors,
        });
    }
    Ok(FamilyAssignment {
        p_grid: p_grid.to_vec(),
        channels,
    })
}

/// One bound state of a channel at one p: the channel eigenvalue and its
/// p^2-shifted total energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub e_channel: f64,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub theta: f64,
    pub bound_states: Vec<BoundPoint>,
    pub essential_bottom: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelCurve {
    pub m: i64,
    pub kappa: f64,
    pub points: Vec<CurvePoint>,
}

/// Direct-integral spectrum on a finite grid: per singular channel the bound
/// curve E_m(p) = e_m(p) + p^2, plus the essential bottom p^2. Closure
/// channels contribute no discrete points below p^2 and are not scanned.
#[derive(Debug, Clone, Serialize)]
pub struct AbSpectrumReport {
    pub flux: f64,
    pub p_grid: Vec<f64>,
    pub window: (f64, f64),
    pub channels: Vec<ChannelCurve>,
    pub solver_failures: usize,
    pub controls: SpectralControls,
}

pub fn ab_spectrum(
    spec: &AbFamilySpec,
    p_grid: &[f64],
    window: &EnergyWindow,
    controls: &SpectralControls,
) -> Result<AbSpectrumReport, AbError> {
    if window.e_max > 0.0 {
        return Err(AbError::Validation(format!(
            "channel search window must satisfy e_max <= 0, got {}",
            window.e_max
        )));
    }
    if p_grid.iter().any(|p| !p.is_finite()) {
        return Err(AbError::Validation("p grid entries must be finite".into()));
    }

    // distinct channel problems: identical (kappa, theta) inputs are solved
    // once and reused (the solve is a pure function of its inputs)
    let singular = singular_channels(spec.phi);
    let mut point_specs: Vec<(i64, f64, Vec<(f64, f64)>)> = Vec::new();
    let mut tasks: BTreeSet<(u64, u64)> = BTreeSet::new();
    for &m in &singular {
        let kappa = channel_kappa(m, spec.phi);
        let tau = spec.taus.get(&m).expect("validated singular coverage");
        let mut pts = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let theta = tau.evaluate(p)?.angle();
            tasks.insert((kappa.to_bits(), theta.to_bits()));
            pts.push((p, theta));
        }
        point_specs.push((m, kappa, pts));
    }

    type SolveOutcome = Result<Vec<BoundPoint>, String>;
    let solved: BTreeMap<(u64, u64), SolveOutcome> = tasks
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(kb, tb)| {
            let kappa = f64::from_bits(kb);
            let theta = f64::from_bits(tb);
            let outcome = solve_channel(kappa, theta, window, controls);
            ((kb, tb), outcome)
        })
        .collect();

    let mut solver_failures = 0usize;
    let mut channels = Vec::new();
    for (m, kappa, pts) in point_specs {
        let mut points = Vec::with_capacity(pts.len());
        for (p, theta) in pts {
            let key = (kappa.to_bits(), theta.to_bits());
            let point = match solved.get(&key).expect("solved every task") {
                Ok(bounds) => CurvePoint {
                    p,
                    theta,
                    bound_states: bounds
                        .iter()
                        .map(|b| BoundPoint {
                            e_channel: b.e_channel,
                            energy: b.e_channel + p * p,
                            residual: b.residual,
                        })
                        .collect(),
                    essential_bottom: p * p,
                    error: None,
                },
                Err(reason) => {
                    solver_failures += 1;
                    CurvePoint {
                        p,
                        theta,
                        bound_states: Vec::new(),
                        essential_bottom: p * p,
                        error: Some(reason.clone()),
                    }
                }
            };
            points.push(point);
        }
        channels.push(ChannelCurve { m, kappa, points });
    }

    Ok(AbSpectrumReport {
        flux: spec.phi.value(),
        p_grid: p_grid.to_vec(),
        window: (window.e_min, window.e_max),
        channels,
        solver_failures,
        controls: *controls,
    })
}

fn solve_channel(
    kappa: f64,
    theta: f64,
    window: &EnergyWindow,
    controls: &SpectralControls,
) -> Result<Vec<BoundPoint>, String> {
    let q = Potential::inverse_square(kappa);
    let descriptor = extension_from_theta(
        &q,
        crate::ext::BoundaryParameter::new(theta).map_err(|e| e.to_string())?,
        Frame::Frobenius { kappa },
    )
    .map_err(|e| e.to_string())?;
    let scan = eigenvalues_below(&descriptor, window, controls).map_err(|e| e.to_string())?;
    if !scan.failures.is_empty() {
        return Err(scan
            .failures
            .iter()
            .map(|f| f.reason.clone())
            .collect::<Vec<_>>()
            .join("; "));
    }
    Ok(scan
        .results
        .iter()
        .map(|r| BoundPoint {
            e_channel: r.energy,
            energy: r.energy,
            residual: r.residual,
        })
        .collect())
}
