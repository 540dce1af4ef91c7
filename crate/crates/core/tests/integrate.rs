use approx::assert_abs_diff_eq;
use roaming::integrate::{self, det4, identity_frame, Dop853, EventSpec, Tolerance};
use roaming::model::{self, ModelParams, PhasePoint};
use roaming::M_H;

fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
    [y[1], -y[0]]
}

#[test]
fn oscillator_matches_closed_form() {
    let tol = Tolerance { drift_budget: None, ..Tolerance::default() };
    let mut s = Dop853::new(oscillator, 0.0, [1.0, 0.0], 50.0, tol).unwrap();
    let mut steps = Vec::new();
    while !s.done() {
        steps.push(s.step().unwrap());
    }
    assert_abs_diff_eq!(s.y[0], 50f64.cos(), epsilon = 1e-9);
    assert_abs_diff_eq!(s.y[1], -50f64.sin(), epsilon = 1e-9);
    // Dense output inside every step.
    for st in &steps {
        for k in 1..4 {
            let t = st.t_old + (st.t_new - st.t_old) * k as f64 / 4.0;
            let y = st.eval(t);
            assert_abs_diff_eq!(y[0], t.cos(), epsilon = 1e-8);
            assert_abs_diff_eq!(y[1], -t.sin(), epsilon = 1e-8);
        }
    }
}

#[test]
fn backward_integration() {
    let tol = Tolerance { drift_budget: None, ..Tolerance::default() };
    let mut s = Dop853::new(oscillator, 0.0, [1.0, 0.0], -7.0, tol).unwrap();
    while !s.done() {
        s.step().unwrap();
    }
    assert_abs_diff_eq!(s.t, -7.0, epsilon = 1e-14);
    assert_abs_diff_eq!(s.y[0], 7f64.cos(), epsilon = 1e-9);
    assert_abs_diff_eq!(s.y[1], 7f64.sin(), epsilon = 1e-9);
}

#[test]
fn rejects_bad_tolerance() {
    let tol = Tolerance { rtol: -1.0, ..Tolerance::default() };
    assert!(Dop853::new(oscillator, 0.0, [1.0, 0.0], 1.0, tol).is_err());
}

const E: f64 = -20.0;

fn start() -> (ModelParams, PhasePoint) {
    let p = ModelParams::new(M_H, 1.0).unwrap();
    // Bound vibration inside the θ = 0 well.
    let (r, th, pt) = (1.2, 0.3, 2.0);
    let pr = model::momentum_on_shell(r, th, pt, E, 1.0, &p).unwrap();
    (p, PhasePoint::new(r, th, pr, pt))
}

#[test]
fn energy_is_conserved() {
    let (p, x) = start();
    let traj = integrate::propagate(&x, &p, (0.0, 100.0), &Tolerance::default()).unwrap();
    assert!(traj.energy_drift <= 1e-10, "drift {}", traj.energy_drift);
    for s in &traj.states {
        assert!((model::hamiltonian(s, &p).unwrap() - E).abs() <= 1e-10 * E.abs());
    }
}

#[test]
fn forward_then_backward_returns() {
    let (p, x) = start();
    let tol = Tolerance::default();
    let fwd = integrate::propagate(&x, &p, (0.0, 5.0), &tol).unwrap();
    let mid = *fwd.last().unwrap();
    let back = integrate::propagate(&mid, &p, (5.0, 0.0), &tol).unwrap();
    let end = back.last().unwrap();
    for (a, b) in end.to_array().iter().zip(x.to_array()) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
    }
}

#[test]
fn events_are_located_on_the_surface() {
    let (p, x) = start();
    let events = [EventSpec::new(|y: &PhasePoint| y.theta - 0.1).direction(1), EventSpec::new(|y: &PhasePoint| y.p_r)];
    let (_, hits) = integrate::propagate_with_events(&x, &p, &events, 20.0, &Tolerance::default()).unwrap();
    assert!(hits.iter().any(|c| c.event == 0));
    assert!(hits.iter().any(|c| c.event == 1));
    for c in &hits {
        let g = if c.event == 0 { c.point.theta - 0.1 } else { c.point.p_r };
        assert!(g.abs() < 1e-10, "event {} residual {g}", c.event);
        if c.event == 0 {
            assert!(c.rate > 0.0);
        }
    }
    assert!(hits.windows(2).all(|w| w[0].t <= w[1].t));
}

#[test]
fn event_refinement_is_idempotent() {
    let (p, x) = start();
    let ev = || [EventSpec::new(|y: &PhasePoint| y.theta - 0.1).direction(1).terminal()];
    let tol = Tolerance::default();
    let first = integrate::run_events(&x, &p, &ev(), 50.0, &tol).unwrap();
    // Restart a little before the crossing and locate it again.
    let back = integrate::propagate(&PhasePoint::from_slice(&first.y_final), &p, (0.0, -1e-3), &tol).unwrap();
    let again = integrate::run_events(back.last().unwrap(), &p, &ev(), 1.0, &tol).unwrap();
    assert!((again.t_final - 1e-3).abs() < 1e-12);
    for (a, b) in again.y_final.iter().zip(first.y_final) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn terminal_event_stops_run() {
    let (p, x) = start();
    let events = [EventSpec::new(|y: &PhasePoint| y.theta - 0.1).direction(1).terminal()];
    let run = integrate::run_events(&x, &p, &events, 50.0, &Tolerance::default()).unwrap();
    assert_eq!(run.stopped_by, Some(0));
    assert_abs_diff_eq!(run.y_final[1], 0.1, epsilon = 1e-10);
}

#[test]
fn max_count_limits_recorded_crossings() {
    let (p, x) = start();
    let events = [EventSpec::new(|y: &PhasePoint| y.p_r).max_count(3)];
    let run = integrate::run_events(&x, &p, &events, 50.0, &Tolerance::default()).unwrap();
    assert_eq!(run.crossings.len(), 3);
}

#[test]
fn flow_preserves_volume() {
    let (p, x) = start();
    let (_, m) = integrate::propagate_tangent(&x, &identity_frame(), &p, (0.0, 10.0), &Tolerance::default()).unwrap();
    assert!((det4(&m) - 1.0).abs() <= 1e-8, "det = {}", det4(&m));
}

#[test]
fn tangent_matches_finite_differences() {
    let (p, x) = start();
    let tol = Tolerance::default();
    let (_, m) = integrate::propagate_tangent(&x, &identity_frame(), &p, (0.0, 1.0), &tol).unwrap();
    let h = 1e-6;
    for k in 0..4 {
        let mut yp = x.to_array();
        let mut ym = x.to_array();
        yp[k] += h;
        ym[k] -= h;
        let t = tol.without_drift_check();
        let fp = integrate::propagate(&PhasePoint::from_slice(&yp), &p, (0.0, 1.0), &t).unwrap();
        let fm = integrate::propagate(&PhasePoint::from_slice(&ym), &p, (0.0, 1.0), &t).unwrap();
        let (a, b) = (fp.last().unwrap().to_array(), fm.last().unwrap().to_array());
        for i in 0..4 {
            let num = (a[i] - b[i]) / (2.0 * h);
            assert!((m[i][k] - num).abs() < 1e-5 * num.abs().max(1.0), "M[{i}][{k}] {} vs {num}", m[i][k]);
        }
    }
}
