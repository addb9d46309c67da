//! Cross-module invariants checked on random inputs.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use nonint::actionangle::{
    fourier_coeffs, resonance_lattice, resonant_integral_at, resonant_integral_fourier, resonant_integral_quadrature,
    DEFAULT_DENOM_BOUND,
};
use nonint::criteria::{exponential_coupling, verdict_report, SystemConfig, VerdictOptions, VerdictReport};
use nonint::melnikov::{
    closed_form_curve, simple_zero_scan, solve_resonance, subharmonic_melnikov, subharmonic_melnikov_shifted,
    ResonancePair,
};
use nonint::odecore::{integrate, newton_shoot_periodic, FnField};
use nonint::quad::TrigInterpolant;
use nonint::specfun::{complete_e, complete_k, ellip_e, ellip_k, jacobi_sncndn, EllipticModulus};
use nonint::systems::{
    coupled_oscillators, orbit_family, pendulum_torque, CoupledParams, ForcedPlanarSystem, OrbitKind,
};

fn modulus() -> impl Strategy<Value = EllipticModulus> {
    prop_oneof![
        (0.0f64..0.999).prop_map(|k| EllipticModulus::new(k).unwrap()),
        (-25.0f64..-2.0).prop_map(|y| EllipticModulus::from_log_ratio(y).unwrap()),
    ]
}

proptest! {
    #[test]
    fn jacobi_identities(t in -40.0f64..40.0, m in modulus()) {
        let (sn, cn, dn) = jacobi_sncndn(t, &m).unwrap();
        let k = m.k();
        prop_assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
        prop_assert!((dn * dn + k * k * sn * sn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_derivatives(t in -20.0f64..20.0, k in 0.0f64..0.99) {
        let m = EllipticModulus::new(k).unwrap();
        let h = 1e-5;
        let (sp, cp, dp) = jacobi_sncndn(t + h, &m).unwrap();
        let (sm, cm, dm) = jacobi_sncndn(t - h, &m).unwrap();
        let (sn, cn, dn) = jacobi_sncndn(t, &m).unwrap();
        prop_assert!(((sp - sm) / (2.0 * h) - cn * dn).abs() < 1e-8);
        prop_assert!(((cp - cm) / (2.0 * h) + sn * dn).abs() < 1e-8);
        prop_assert!(((dp - dm) / (2.0 * h) + k * k * sn * cn).abs() < 1e-8);
    }

    /// Legendre's relation `E K' + E' K - K K' = pi / 2` ties the four
    /// complete integrals together independently of how each is computed.
    #[test]
    fn legendre_relation(m in modulus()) {
        let c = m.complement();
        let (k, e, kc, ec) = (ellip_k(&m), ellip_e(&m), ellip_k(&c), ellip_e(&c));
        prop_assert!((e * kc + ec * k - k * kc - PI / 2.0).abs() < 1e-12 * k.max(kc));
    }

    #[test]
    fn periodic_orbits_close(k in 0.05f64..0.999, t in -5.0f64..5.0, which in 0usize..4) {
        let (a, kind) = [
            (1.0, OrbitKind::InteriorPlus),
            (1.0, OrbitKind::InteriorMinus),
            (1.0, OrbitKind::Exterior),
            (-1.0, OrbitKind::Soft),
        ][which];
        let sys = ForcedPlanarSystem::duffing(a, 0.0, 0.0, 1.0).unwrap();
        let fam = orbit_family(&sys, kind).unwrap();
        let m = EllipticModulus::new(k).unwrap();
        prop_assume!(fam.contains(&m));
        let p = fam.period(&m).unwrap();
        let (x, y) = (fam.orbit(&m, t), fam.orbit(&m, t + p));
        let scale = x[0].abs().max(x[1].abs()).max(1.0);
        prop_assert!((x[0] - y[0]).abs() < 1e-10 * scale && (x[1] - y[1]).abs() < 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phase_shift_equivariance(n in 1u32..4, nu in 0.3f64..1.4, beta in 0.1f64..2.0, delta in 0.0f64..1.0, s in -3.0f64..3.0) {
        let sys = ForcedPlanarSystem::duffing(1.0, beta, delta, nu).unwrap();
        let res = ResonancePair::new(1, n).unwrap();
        let m = solve_resonance(OrbitKind::InteriorPlus, nu, res).unwrap();
        let fam = orbit_family(&sys, OrbitKind::InteriorPlus).unwrap();
        let base = subharmonic_melnikov(&sys, &fam, &m, res, 64).unwrap();
        let shifted = subharmonic_melnikov_shifted(&sys, &fam, &m, res, 64, s).unwrap();
        let interp = TrigInterpolant::new(&base.values);
        for (phi, v) in shifted.phi.iter().zip(&shifted.values) {
            prop_assert!((interp.eval(phi + nu * s) - v).abs() < 1e-8);
        }
    }

    /// With `delta = 0` the perturbation is Hamiltonian and every
    /// subharmonic curve has zero mean.
    #[test]
    fn hamiltonian_perturbation_has_zero_mean(l in 1u32..4, n in 1u32..5, nu in 0.3f64..3.0, beta in 0.1f64..3.0, which in 0usize..4) {
        let (a, kind) = [
            (1.0, OrbitKind::InteriorPlus),
            (1.0, OrbitKind::InteriorMinus),
            (1.0, OrbitKind::Exterior),
            (-1.0, OrbitKind::Soft),
        ][which];
        let Ok(res) = ResonancePair::new(l, n) else { return Ok(()) };
        let Ok(m) = solve_resonance(kind, nu, res) else { return Ok(()) };
        let sys = ForcedPlanarSystem::duffing(a, beta, 0.0, nu).unwrap();
        let fam = orbit_family(&sys, kind).unwrap();
        let c = subharmonic_melnikov(&sys, &fam, &m, res, 64).unwrap();
        prop_assert!(c.mean().abs() < 1e-8, "mean {}", c.mean());
    }

    #[test]
    fn closed_form_matches_quadrature(n in 1u32..5, nu in 0.5f64..3.0, beta in 0.0f64..2.0, delta in 0.0f64..2.0, which in 0usize..4) {
        let (a, kind) = [
            (1.0, OrbitKind::InteriorPlus),
            (1.0, OrbitKind::InteriorMinus),
            (1.0, OrbitKind::Exterior),
            (-1.0, OrbitKind::Soft),
        ][which];
        let res = ResonancePair::new(1, n).unwrap();
        let Ok(m) = solve_resonance(kind, nu, res) else { return Ok(()) };
        let sys = ForcedPlanarSystem::duffing(a, beta, delta, nu).unwrap();
        let fam = orbit_family(&sys, kind).unwrap();
        let q = subharmonic_melnikov(&sys, &fam, &m, res, 64).unwrap();
        let c = closed_form_curve(&sys, kind, Some(&m), Some(res), 64).unwrap();
        prop_assert!(q.sup_distance(&c).unwrap() < 1e-6);
    }

    #[test]
    fn torus_flow_invariance(p in 1u32..6, q in 1u32..6, s in -10.0f64..10.0, t1 in 0.0f64..TAU, t2 in 0.0f64..TAU) {
        let sys = coupled_oscillators(&CoupledParams {
            ell: 2,
            delta: 0.3,
            drive: vec![0.2, 0.1],
            coupling: exponential_coupling(1.0, 0.5, 8),
            decay_bound: None,
            truncation: 8,
        })
        .unwrap();
        let action = vec![f64::from(p), f64::from(q)];
        let omega = (sys.omega)(&action);
        let lat = resonance_lattice(&omega, 8, DEFAULT_DENOM_BOUND).unwrap();
        let period = lat.period().unwrap();
        let a = resonant_integral_at(&sys, &action, &omega, period, &[t1, t2]);
        let b = resonant_integral_at(&sys, &action, &omega, period, &[t1 + omega[0] * s, t2 + omega[1] * s]);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn spectrum_reconstructs_field(t1 in 0.0f64..TAU, t2 in 0.0f64..TAU, i1 in 0.5f64..3.0, i2 in 0.5f64..3.0) {
        let sys = coupled_oscillators(&CoupledParams {
            ell: 2,
            delta: 0.3,
            drive: vec![0.2, 0.1],
            coupling: exponential_coupling(1.0, 0.5, 8),
            decay_bound: None,
            truncation: 8,
        })
        .unwrap();
        let action = [i1, i2];
        let spectrum = fourier_coeffs(&sys, &action, 8).unwrap();
        let direct = (sys.h)(&action, &[t1, t2]);
        for (x, y) in spectrum.reconstruct(&[t1, t2]).iter().zip(&direct) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn single_angle_collapse(beta in -3.0f64..3.0, i in 0.2f64..9.0) {
        let sys = pendulum_torque(beta).unwrap();
        let spectrum = fourier_coeffs(&sys, &[i], 12).unwrap();
        let lat = resonance_lattice(&[i], 12, DEFAULT_DENOM_BOUND).unwrap();
        let c = resonant_integral_fourier(&spectrum, &lat, 16).unwrap();
        let expected = TAU * spectrum.coeff(&[0])[0].re / i;
        for v in &c.values {
            prop_assert!((v[0] - expected).abs() < 1e-10);
        }
        let q = resonant_integral_quadrature(&sys, &[i], 16).unwrap();
        prop_assert!(q.sup_distance(&c).unwrap() < 1e-8);
    }
}

#[test]
fn complete_integrals_are_monotone() {
    let mut prev = (complete_k(0.0).unwrap(), complete_e(0.0).unwrap());
    for i in 1..1000 {
        let k = 0.999 * f64::from(i) / 999.0;
        let cur = (complete_k(k).unwrap(), complete_e(k).unwrap());
        assert!(cur.0 > prev.0 && cur.1 < prev.1, "k = {k}");
        prev = cur;
    }
}

#[test]
fn halving_tolerance_reduces_error() {
    let osc = FnField::new(2, true, |_t: f64, x: &[f64], out: &mut [f64]| {
        out[0] = x[1];
        out[1] = -x[0];
    });
    let err = |tol: f64| {
        let tr = integrate(&osc, &[1.0, 0.0], 0.0, 20.0, tol).unwrap();
        let y = tr.terminal();
        (y[0] - 20f64.cos()).hypot(y[1] + 20f64.sin())
    };
    // Error tracks the tolerance roughly linearly, so a fourfold cut in
    // tolerance must buy at least a fourfold cut in error on average.
    let coarse = err(1e-6);
    let fine = err(1e-6 / 16.0);
    assert!(coarse / fine >= 4.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn shooting_from_melnikov_zeros_small_eps() {
    let sys = ForcedPlanarSystem::duffing(1.0, 1.0, 0.1, 1.0).unwrap();
    let res = ResonancePair::new(1, 1).unwrap();
    let m = solve_resonance(OrbitKind::InteriorPlus, 1.0, res).unwrap();
    let fam = orbit_family(&sys, OrbitKind::InteriorPlus).unwrap();
    let c = subharmonic_melnikov(&sys, &fam, &m, res, 128).unwrap();
    let zeros: Vec<f64> = simple_zero_scan(&c)
        .iter()
        .filter(|z| z.is_simple)
        .map(|z| z.phi)
        .collect();
    assert_eq!(zeros.len(), 2);
    for eps in [1e-4, 1e-3] {
        for phi in &zeros {
            let out = newton_shoot_periodic(&sys, eps, fam.orbit(&m, -phi), 0.0, 1, 1e-11).unwrap();
            assert!(out.converged && out.residual < 1e-9, "eps {eps}: {out:?}");
        }
    }
}

#[test]
fn shooting_finds_nothing_above_threshold() {
    // delta / beta far above the threshold: M^{1/1} has no zeros at all.
    let sys = ForcedPlanarSystem::duffing(1.0, 0.1, 1.0, 1.0).unwrap();
    let res = ResonancePair::new(1, 1).unwrap();
    let m = solve_resonance(OrbitKind::InteriorPlus, 1.0, res).unwrap();
    let fam = orbit_family(&sys, OrbitKind::InteriorPlus).unwrap();
    let c = subharmonic_melnikov(&sys, &fam, &m, res, 128).unwrap();
    assert!(simple_zero_scan(&c).is_empty());
}

#[test]
fn verdict_reports_are_deterministic() {
    let cfg = SystemConfig::Duffing {
        a: 1.0,
        beta: 0.4,
        delta: 0.1,
        nu: 1.3,
    };
    let opts = VerdictOptions {
        evidence_points: 4,
        ..VerdictOptions::default()
    };
    let a = verdict_report(&cfg, &opts).unwrap().to_json();
    let b = verdict_report(&cfg, &opts).unwrap().to_json();
    assert_eq!(a, b);
    let back: VerdictReport = serde_json::from_str(&a).unwrap();
    assert_eq!(back.to_json(), a);
}
