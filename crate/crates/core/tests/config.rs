use roaming::config::{table_masses, RunConfig};
use roaming::io::Stamp;
use roaming::{Error, M_H};

#[test]
fn default_round_trips_through_toml() {
    let c = RunConfig::default();
    let text = c.to_toml_string().unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
}

#[test]
fn disabled_drift_check_round_trips() {
    let mut c = RunConfig::default();
    c.settings.orbit.tol.drift_budget = None;
    c.jobs = Some(3);
    let text = c.to_toml_string().unwrap();
    assert!(text.contains("\"off\""));
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
}

#[test]
fn partial_file_keeps_defaults() {
    let c = RunConfig::from_toml_str("energies = [1.0]\nmasses = [2.0]\n[model]\na = 3.0\n").unwrap();
    assert_eq!(c.energies, vec![1.0]);
    assert_eq!(c.model.a, 3.0);
    assert_eq!(c.model.m, M_H);
    assert_eq!(c.couplings.len(), 8);
}

#[test]
fn invalid_configs_are_rejected() {
    for bad in ["masses = []", "masses = [-1.0]", "mc_samples = 10", "jobs = 0", "[settings.manifold]\nspacing = 0.0"] {
        assert!(matches!(RunConfig::from_toml_str(bad), Err(Error::Config(_)) | Err(Error::InvalidParameter(_))), "{bad}");
    }
    assert!(RunConfig::from_toml_str("no_such_key = [").is_err());
}

#[test]
fn omit_rule() {
    let c = RunConfig::default();
    assert!(c.omitted(0.5, 5.0).is_some());
    assert!(c.omitted(0.5, 4.0).is_none());
    assert!(c.omitted(1.0, 8.0).is_none());
    assert_eq!(table_masses().len(), 11);
}

#[test]
fn stamp_header() {
    let h = Stamp::new("bound_table").energy(1.0).with("seed", 4).header();
    assert!(h.starts_with("# roaming "));
    assert!(h.contains("bound_table"));
    assert!(h.contains("seed"));
    assert!(h.lines().all(|l| l.starts_with('#')));
}
