use proptest::prelude::*;
use roaming::model::{self, CriticalLabel, ModelParams, PhasePoint};
use roaming::M_H;

fn params(m: f64, a: f64) -> ModelParams {
    ModelParams::new(m, a).unwrap()
}

#[test]
fn well_sits_at_bond_length() {
    for a in 1..=8 {
        let p = params(M_H, a as f64);
        let pts = model::find_critical_points(&p, 5.0).unwrap();
        let q0: Vec<_> = pts.iter().filter(|c| c.label == CriticalLabel::Q0).collect();
        assert_eq!(q0.len(), 1, "a = {a}");
        for c in q0 {
            assert!((c.r - 1.1).abs() < 1e-9);
            assert!((c.energy + 47.0).abs() < 1e-9);
            assert_eq!(c.index, Some(0));
        }
    }
}

#[test]
fn zero_momentum_energy_is_potential() {
    let p = params(2.0, 3.0);
    for &(r, th) in &[(1.3, 0.4), (2.5, -1.0), (7.0, 2.9)] {
        let x = PhasePoint::new(r, th, 0.0, 0.0);
        assert_eq!(model::hamiltonian(&x, &p).unwrap(), model::potential(r, th, &p).unwrap());
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(ModelParams::new(-1.0, 1.0).is_err());
    assert!(ModelParams::new(1.0, 0.0).is_err());
    assert!(ModelParams::new(f64::NAN, 1.0).is_err());
    assert!(model::potential(0.0, 0.0, &ModelParams::default()).is_err());
}

#[test]
fn reduced_mass() {
    let p = params(12.0, 1.0);
    assert!((p.mu() - 6.0).abs() < 1e-15);
}

// U = −c/r⁴ has relative equilibria at r² = 4cμ/p_θ².
#[test]
fn power_law_balance_radius() {
    let (c, mu) = (3.7, 0.93);
    for &pt in &[0.5, 1.0, 2.0, 4.0] {
        let r = model::centrifugal_balance_radius(pt, mu, |r| 4.0 * c / r.powi(5), 0.1, 100.0).unwrap();
        let expect = (4.0 * c * mu).sqrt() / pt;
        assert!((r - expect).abs() < 1e-10 * expect, "p_theta = {pt}: {r} vs {expect}");
    }
}

#[test]
fn reduced_orbit_energy_round_trip() {
    let p = params(M_H, 1.0);
    for &e in &[0.5, 1.0, 2.0] {
        let (r, _) = model::reduced_orbit_for_energy(e, &p, 200.0).unwrap();
        assert!((model::reduced_energy_at(r, &p) - e).abs() < 1e-10);
    }
}

#[test]
fn wrap_angle_range() {
    use std::f64::consts::PI;
    for k in -20..20 {
        let th = 0.37 * k as f64;
        let w = model::wrap_angle(th);
        assert!((-PI..PI).contains(&w));
        let turns = (th - w) / (2.0 * PI);
        assert!((turns - turns.round()).abs() < 1e-12);
    }
}

fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gradient_matches_finite_differences(r in 0.9f64..8.0, th in -3.1f64..3.1, m in 0.5f64..10.0, a in 0.5f64..8.0) {
        let p = params(m, a);
        let (gr, gt) = model::potential_gradient(r, th, &p).unwrap();
        let h = 1e-5;
        let fr = fd(|x| model::potential(x, th, &p).unwrap(), r, h);
        let ft = fd(|x| model::potential(r, x, &p).unwrap(), th, h);
        prop_assert!((gr - fr).abs() <= 1e-6 * gr.abs().max(1.0));
        prop_assert!((gt - ft).abs() <= 1e-6 * gt.abs().max(1.0));
    }

    #[test]
    fn hessian_matches_finite_differences(r in 0.9f64..8.0, th in -3.1f64..3.1, a in 0.5f64..8.0) {
        let p = params(M_H, a);
        let (urr, urt, utt) = model::potential_hessian(r, th, &p).unwrap();
        let h = 1e-5;
        let g = |r: f64, t: f64| model::potential_gradient(r, t, &p).unwrap();
        let frr = fd(|x| g(x, th).0, r, h);
        let frt = fd(|x| g(r, x).0, th, h);
        let ftt = fd(|x| g(r, x).1, th, h);
        for (an, num) in [(urr, frr), (urt, frt), (utt, ftt)] {
            prop_assert!((an - num).abs() <= 1e-5 * an.abs().max(1.0), "{} vs {}", an, num);
        }
    }

    #[test]
    fn jacobian_matches_field(r in 1.0f64..6.0, th in -3.0f64..3.0, pr in -3.0f64..3.0, pt in -5.0f64..5.0) {
        let p = params(M_H, 2.0);
        let y = [r, th, pr, pt];
        let j = model::jacobian_raw(&y, &p);
        let h = 1e-6;
        for k in 0..4 {
            let (mut yp, mut ym) = (y, y);
            yp[k] += h;
            ym[k] -= h;
            let (fp, fm) = (model::field(&yp, &p), model::field(&ym, &p));
            for i in 0..4 {
                let num = (fp[i] - fm[i]) / (2.0 * h);
                prop_assert!((j[i][k] - num).abs() <= 1e-5 * num.abs().max(1.0));
            }
        }
    }

    #[test]
    fn flow_is_divergence_free(r in 0.9f64..8.0, th in -3.0f64..3.0, pr in -5.0f64..5.0, pt in -5.0f64..5.0, a in 0.5f64..8.0) {
        let j = model::jacobian_raw(&[r, th, pr, pt], &params(M_H, a));
        prop_assert!((j[0][0] + j[1][1] + j[2][2] + j[3][3]).abs() < 1e-12);
    }

    #[test]
    fn shell_momentum_lands_on_energy(r in 1.5f64..6.0, th in -3.0f64..3.0, pt in -1.0f64..1.0, sign in prop::bool::ANY) {
        let p = params(M_H, 1.0);
        let e = 1.0;
        let s = if sign { 1.0 } else { -1.0 };
        if let Ok(pr) = model::momentum_on_shell(r, th, pt, e, s, &p) {
            let x = PhasePoint::new(r, th, pr, pt);
            prop_assert!((model::hamiltonian(&x, &p).unwrap() - e).abs() < 1e-10);
            prop_assert!(pr == 0.0 || pr.signum() == s);
        }
    }

    #[test]
    fn twofold_symmetry(r in 1.0f64..6.0, th in -3.0f64..3.0, a in 0.5f64..8.0) {
        let p = params(M_H, a);
        let u = model::potential(r, th, &p).unwrap();
        prop_assert!((u - model::potential(r, th + std::f64::consts::PI, &p).unwrap()).abs() < 1e-10);
        prop_assert!((u - model::potential(r, -th, &p).unwrap()).abs() < 1e-10);
    }
}
