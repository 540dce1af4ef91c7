use roaming::integrate::Tolerance;
use roaming::model::{self, ModelParams, PhasePoint};
use roaming::orbits::{self, continue_family, Family, OrbitSettings, Stability, Sweep, SweepParameter, Termination};
use roaming::{Error, M_H};

fn setup() -> (ModelParams, OrbitSettings) {
    (ModelParams::new(M_H, 1.0).unwrap(), OrbitSettings::default())
}

#[test]
fn all_three_families_close() {
    let (p, s) = setup();
    for fam in [Family::Inner, Family::Middle, Family::Outer] {
        let o = orbits::find(fam, 1.0, &p, None, &s).unwrap();
        assert!(o.closure <= 1e-8, "{} closure {}", fam.name(), o.closure);
        assert!((o.monodromy_det() - 1.0).abs() <= 1e-8);
        assert!((model::hamiltonian(&o.anchor, &p).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(o.stability, Stability::Unstable, "{}", fam.name());
        let l = o.multipliers[0].0;
        assert!((l * o.multipliers[1].0 - 1.0).abs() < 1e-6);
    }
}

#[test]
fn families_are_nested() {
    let (p, s) = setup();
    let ri = orbits::find_inner(1.0, &p, None, &s).unwrap().anchor.r;
    let rm = orbits::find_middle(1.0, &p, None, &s).unwrap().anchor.r;
    let ro = orbits::find_outer(1.0, &p, &s).unwrap().anchor.r;
    assert!(ri < rm && rm < ro, "{ri} {rm} {ro}");
}

#[test]
fn libration_half_period_is_reflected() {
    let (p, s) = setup();
    let o = orbits::find_inner(1.0, &p, None, &s).unwrap();
    let tol = Tolerance::default();
    let d = o.dense(&tol).unwrap();
    for k in 0..8 {
        let t = o.period * k as f64 / 16.0;
        let a = d.eval(t);
        let b = d.eval(t + 0.5 * o.period);
        assert!((a[0] - b[0]).abs() < 1e-7);
        assert!((a[1] + b[1]).abs() < 1e-7);
        assert!((a[2] - b[2]).abs() < 1e-7);
        assert!((a[3] + b[3]).abs() < 1e-7);
    }
}

#[test]
fn rotating_half_period_is_a_half_turn() {
    let (p, s) = setup();
    let o = orbits::find_middle(1.0, &p, None, &s).unwrap();
    let d = o.dense(&Tolerance::default()).unwrap();
    for k in 0..8 {
        let t = o.period * k as f64 / 16.0;
        let a = d.eval(t);
        let b = d.eval(t + 0.5 * o.period);
        assert!((a[0] - b[0]).abs() < 1e-7);
        assert!((b[1] - a[1] - std::f64::consts::PI).abs() < 1e-7);
        assert!((a[3] - b[3]).abs() < 1e-7);
    }
}

#[test]
fn action_does_not_depend_on_start_phase() {
    let (p, s) = setup();
    let o = orbits::find_inner(1.0, &p, None, &s).unwrap();
    let tol = Tolerance::default();
    let a0 = orbits::orbit_action(&o, 0.0, &tol).unwrap();
    let a1 = orbits::orbit_action(&o, 0.3 * o.period, &tol).unwrap();
    assert!((a0 - o.action).abs() < 1e-8);
    assert!((a0 - a1).abs() < 1e-8);
}

#[test]
fn mirrored_orbit_is_also_periodic() {
    let (p, s) = setup();
    let o = orbits::find_outer(1.0, &p, &s).unwrap().mirrored();
    let traj = roaming::integrate::propagate(&o.anchor, &p, (0.0, o.period), &Tolerance::default()).unwrap();
    let end: PhasePoint = *traj.last().unwrap();
    assert!((end.r - o.anchor.r).abs() < 1e-8);
    assert!((end.theta - o.anchor.theta + 2.0 * std::f64::consts::PI).abs() < 1e-8);
    assert!((end.p_theta - o.anchor.p_theta).abs() < 1e-8);
}

#[test]
fn no_rotating_orbits_below_threshold() {
    let (p, s) = setup();
    assert!(matches!(orbits::find_outer(-1.0, &p, &s), Err(Error::InvalidParameter(_))));
}

#[test]
fn energy_continuation_of_outer_family() {
    let (p, s) = setup();
    let seed = orbits::find_outer(1.0, &p, &s).unwrap();
    let mut sweep = Sweep::new(SweepParameter::Energy, 1.3);
    sweep.step = 0.1;
    let fam = continue_family(&seed, &sweep, &s);
    assert_eq!(fam.termination, Termination::Completed);
    assert!((fam.values.last().unwrap() - 1.3).abs() < 1e-12);
    // Outer orbits shrink as energy rises.
    let radii: Vec<f64> = fam.members.iter().map(|o| o.anchor.r).collect();
    assert!(radii.windows(2).all(|w| w[1] < w[0]), "{radii:?}");
    for o in &fam.members {
        assert!(o.closure <= 1e-8);
    }
}
