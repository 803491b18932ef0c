//! Shooting solver against the closed-form matching oracle, and the
//! gauge/assembly invariants of the channel family.

use std::collections::BTreeMap;

use abspec::ab::{
    ab_spectrum, build_family, m_of_phi, singular_channels, AbFamilySpec, FluxParameter, TauSpec,
};
use abspec::ext::{extension_from_theta, BoundaryParameter, ExtensionKind, Frame};
use abspec::sl::Potential;
use abspec::spectral::{bound_state_oracle, eigenvalues_below, EnergyWindow, SpectralControls};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn scan(kappa: f64, theta: f64, e_min: f64) -> Vec<f64> {
    let e = extension_from_theta(
        &Potential::inverse_square(kappa),
        BoundaryParameter::new(theta).unwrap(),
        Frame::Frobenius { kappa },
    )
    .unwrap();
    let w = EnergyWindow::new(e_min, -1e-8).unwrap();
    let s = eigenvalues_below(&e, &w, &SpectralControls::default()).unwrap();
    assert!(s.failures.is_empty(), "failures: {:?}", s.failures);
    s.results.iter().map(|r| r.energy).collect()
}

#[test]
fn shooting_matches_the_oracle_on_a_kappa_theta_subgrid() {
    // the deepest state on this subgrid sits near E = -108
    for &kappa in &[0.25, -0.75] {
        for &theta in &[0.6 * PI, 0.9 * PI] {
            let oracle = bound_state_oracle(kappa, BoundaryParameter::new(theta).unwrap())
                .unwrap()
                .expect("bound state exists for tan(theta) < 0");
            let found = scan(kappa, theta, -200.0);
            assert_eq!(found.len(), 1, "kappa={kappa} theta={theta}");
            let rel = ((found[0] - oracle) / oracle).abs();
            assert!(
                rel <= 1e-5,
                "kappa={kappa} theta={theta}: solver {} vs oracle {oracle} (rel {rel:.2e})",
                found[0]
            );
        }
    }
    for &kappa in &[0.25, -0.75] {
        for &theta in &[0.0, 0.25 * PI] {
            assert!(bound_state_oracle(kappa, BoundaryParameter::new(theta).unwrap())
                .unwrap()
                .is_none());
            assert!(scan(kappa, theta, -200.0).is_empty());
        }
    }
}

#[test]
fn zero_kappa_channel_matches_the_log_matching_relation() {
    // kappa = 0: matching the decaying solution against
    // psi1 cos(theta) + psi2 sin(theta) (log pair) gives
    // lambda = 2 exp(cot(theta) - euler_gamma), one bound state for every
    // theta in (0, pi)
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    for &theta in &[0.45 * PI, 0.5 * PI, 0.8 * PI] {
        let expected = -4.0 * (2.0 * (1.0 / theta.tan() - EULER_GAMMA)).exp();
        let found = scan(0.0, theta, -20.0);
        assert_eq!(found.len(), 1, "theta={theta}");
        let rel = ((found[0] - expected) / expected).abs();
        assert!(
            rel <= 1e-5,
            "theta={theta}: solver {} vs closed form {expected} (rel {rel:.2e})",
            found[0]
        );
    }
    assert!(scan(0.0, 0.0, -20.0).is_empty());
}

#[test]
fn assembled_curves_are_p_independent_before_the_shift() {
    let mut taus = BTreeMap::new();
    taus.insert(0, TauSpec::constant(0.75 * PI).unwrap());
    taus.insert(1, TauSpec::constant(0.0).unwrap());
    let spec = AbFamilySpec::new(FluxParameter::new(0.5).unwrap(), taus).unwrap();
    let ps: Vec<f64> = (-5..=5).map(|i| i as f64 / 2.0).collect();
    let w = EnergyWindow::new(-10.0, -1e-8).unwrap();
    let rep = ab_spectrum(&spec, &ps, &w, &SpectralControls::default()).unwrap();
    let ch = rep.channels.iter().find(|c| c.m == 0).unwrap();
    let e0 = ch.points[0].bound_states[0].e_channel;
    for pt in &ch.points {
        assert_eq!(pt.bound_states.len(), 1);
        assert!((pt.bound_states[0].e_channel - e0).abs() <= 1e-10);
        assert!((pt.bound_states[0].energy - (e0 + pt.p * pt.p)).abs() <= 1e-12);
    }
}

#[test]
fn gauge_periodicity_of_descriptors_and_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    for _ in 0..5 {
        // dyadic flux: phi and phi + 1 are exactly representable
        let phi = rng.gen_range(-512i64..512) as f64 / 256.0;
        let f0 = FluxParameter::new(phi).unwrap();
        let f1 = FluxParameter::new(phi + 1.0).unwrap();
        assert_eq!(m_of_phi(f1), m_of_phi(f0) + 1);

        let theta_a = rng.gen_range(0.55 * PI..0.95 * PI);
        let theta_b = rng.gen_range(0.0..0.45 * PI);
        let mut taus0 = BTreeMap::new();
        let mut taus1 = BTreeMap::new();
        for (i, &m) in singular_channels(f0).iter().enumerate() {
            let t = if i == 0 { theta_a } else { theta_b };
            taus0.insert(m, TauSpec::constant(t).unwrap());
            taus1.insert(m + 1, TauSpec::constant(t).unwrap());
        }
        let spec0 = AbFamilySpec::new(f0, taus0).unwrap();
        let spec1 = AbFamilySpec::new(f1, taus1).unwrap();

        // identical kappa and theta per shifted channel
        let ps = [0.0, 1.0];
        let fam0 = build_family(&spec0, &ps, 4).unwrap();
        let fam1 = build_family(&spec1, &ps, 4).unwrap();
        for c0 in &fam0.channels {
            let c1 = fam1
                .channels
                .iter()
                .find(|c| c.m == c0.m + 1)
                .expect("shifted channel present");
            assert_eq!(c0.kappa.to_bits(), c1.kappa.to_bits());
            for (d0, d1) in c0.descriptors.iter().zip(&c1.descriptors) {
                match (d0.kind(), d1.kind()) {
                    (ExtensionKind::Closure, ExtensionKind::Closure) => {}
                    (
                        ExtensionKind::Theta { theta: t0, .. },
                        ExtensionKind::Theta { theta: t1, .. },
                    ) => assert_eq!(t0.angle().to_bits(), t1.angle().to_bits()),
                    _ => panic!("kind mismatch under the gauge shift"),
                }
            }
        }

        // identical computed eigenvalue lists, bit for bit
        let w = EnergyWindow::new(-20.0, -1e-6).unwrap();
        let rep0 = ab_spectrum(&spec0, &ps, &w, &SpectralControls::default()).unwrap();
        let rep1 = ab_spectrum(&spec1, &ps, &w, &SpectralControls::default()).unwrap();
        let list = |rep: &abspec::ab::AbSpectrumReport, shift: i64| -> Vec<(i64, u64)> {
            let mut v = Vec::new();
            for ch in &rep.channels {
                for pt in &ch.points {
                    for b in &pt.bound_states {
                        v.push((ch.m - shift, b.e_channel.to_bits()));
                    }
                }
            }
            v
        };
        assert_eq!(list(&rep0, 0), list(&rep1, 1), "phi = {phi}");
    }
}

#[test]
fn kappa_coverage_of_singular_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    for _ in 0..200 {
        let phi = FluxParameter::new(rng.gen_range(-40.0..40.0)).unwrap();
        let singular = singular_channels(phi);
        let base = m_of_phi(phi);
        for m in base - 5..=base + 5 {
            let kappa = abspec::ab::channel_kappa(m, phi);
            assert_eq!(
                singular.contains(&m),
                kappa.abs() < 1.0,
                "phi={} m={m} kappa={kappa}",
                phi.value()
            );
        }
    }
}
