use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::SeedableRng;
use roaming::integrate::Tolerance;
use roaming::manifolds::RegionAreas;
use roaming::model::{self, ModelParams, PhasePoint};
use roaming::transport::{
    classify_trajectory, monte_carlo_sweep, normalization_measure, report_from_areas, roaming_upper_bound, sample_start,
    BoundSettings, Budgets, CellGeometry, CellOutcome, Fate, InnerFluxSampler, TrajectoryKind,
};
use roaming::M_H;

fn cell() -> &'static CellGeometry {
    static CELL: OnceLock<CellGeometry> = OnceLock::new();
    CELL.get_or_init(|| CellGeometry::locate(1.0, &ModelParams::new(M_H, 1.0).unwrap(), &BoundSettings::default()).unwrap())
}

#[test]
fn normalization_scales_with_root_energy() {
    let p = ModelParams::default();
    let v1 = normalization_measure(1.0, &p).unwrap();
    assert!((v1 - 4.0 * PI * (2.0 * p.inertia).sqrt()).abs() < 1e-12);
    assert!((normalization_measure(4.0, &p).unwrap() / v1 - 2.0).abs() < 1e-14);
    assert!(normalization_measure(0.0, &p).is_err());
    assert!(normalization_measure(-1.0, &p).is_err());
}

#[test]
fn bound_is_smaller_area_over_measure() {
    let p = ModelParams::default();
    let areas = RegionAreas {
        a_esc: 1.5,
        a_diss: 4.0,
        a_int: 2.0,
        area_gamma_i: 0.0,
        area_band: 0.0,
        symmetry_factor: 2.0,
        chart: String::new(),
        flags: vec![],
    };
    let r = report_from_areas(2.0, &p, &areas).unwrap();
    assert!((r.bound - 1.5 / normalization_measure(2.0, &p).unwrap()).abs() < 1e-15);
}

#[test]
fn missing_middle_orbit_is_absent() {
    let p = ModelParams::new(0.7, 8.0).unwrap();
    let out = roaming_upper_bound(1.0, &p, &BoundSettings::default()).unwrap();
    assert!(matches!(out, CellOutcome::Absent { .. }), "{out:?}");
    assert_eq!(out.bound(), None);
}

#[test]
fn radial_escape_is_direct_dissociation() {
    let c = cell();
    let p = &c.params;
    let pr = model::momentum_on_shell(1.5, 0.0, 0.0, 1.0, 1.0, p).unwrap();
    let x = PhasePoint::new(1.5, 0.0, pr, 0.0);
    let cls = classify_trajectory(&x, c, &Budgets::default(), &Tolerance::default()).unwrap();
    assert_eq!(cls.kind, TrajectoryKind::DirectDissociation);
    assert_eq!(cls.final_fate, Fate::Dissociated);
    assert_eq!(cls.ds_a_crossings, 1);
}

#[test]
fn radial_fall_is_captured() {
    let c = cell();
    let p = &c.params;
    let r0 = 0.5 * (c.ds_a.eval(0.0).0 + c.ds_o.eval(0.0).0);
    let pr = model::momentum_on_shell(r0, 0.0, 0.0, 1.0, -1.0, p).unwrap();
    let x = PhasePoint::new(r0, 0.0, pr, 0.0);
    let cls = classify_trajectory(&x, c, &Budgets::default(), &Tolerance::default()).unwrap();
    assert_eq!(cls.final_fate, Fate::EnteredWell0);
    assert_eq!(cls.kind, TrajectoryKind::Capture);
}

#[test]
fn flux_samples_are_outward_on_shell() {
    let c = cell();
    let s = InnerFluxSampler::new(c, &Tolerance::default()).unwrap();
    assert!((s.outward_flux() - c.inner.action.abs()).abs() < 1e-12);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x = s.sample(&mut rng);
        assert!((model::hamiltonian(&x, &c.params).unwrap() - 1.0).abs() < 1e-9);
        let (rho, rhodot) = c.ds_i.rho(&x, 0.0, &c.params);
        assert!(rho.abs() < 1e-6, "rho {rho}");
        assert!(rhodot > 0.0);
    }
    assert!(s.lift(0.0, 1e6).is_none());
}

#[test]
fn sample_stream_is_index_addressed() {
    let c = cell();
    let s = InnerFluxSampler::new(c, &Tolerance::default()).unwrap();
    assert_eq!(sample_start(&s, 9, 17), sample_start(&s, 9, 17));
    assert_ne!(sample_start(&s, 9, 17), sample_start(&s, 9, 18));
    assert_ne!(sample_start(&s, 9, 17), sample_start(&s, 10, 17));
}

#[test]
fn monte_carlo_is_deterministic_and_complete() {
    let c = cell();
    let (b, tol) = (Budgets::default(), Tolerance::default());
    let r1 = monte_carlo_sweep(c, 1000, 5, &b, &tol).unwrap();
    let r2 = monte_carlo_sweep(c, 1000, 5, &b, &tol).unwrap();
    assert_eq!(r1.counts, r2.counts);
    assert_eq!(r1.counts.total(), 1000);
    let sum: f64 = r1.counts.fractions().iter().map(|f| f.1).sum();
    assert!((sum - 1.0).abs() < 1e-12);
    assert!(r1.roaming_fraction > 0.0);
    assert!(monte_carlo_sweep(c, 999, 5, &b, &tol).is_err());
}
