// Success paths only: building a JsError needs a JS host.
use roaming_web::{orbit_projections, potential_grid, section_curves};

#[test]
fn grid_is_square_and_masks_the_core() {
    let n = 41;
    let g = potential_grid(1.0, n, 6.0).unwrap();
    assert_eq!(g.len(), n * n);
    // The centre pixel sits at r = 0, inside the excluded core.
    assert!(g[(n / 2) * n + n / 2].is_nan());
    assert!(g.iter().any(|u| u.is_finite()));
}

#[test]
fn orbits_as_json() {
    let s = orbit_projections(1.0, roaming::M_H, 1.0).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    let fams: Vec<&str> = v.as_array().unwrap().iter().map(|o| o["family"].as_str().unwrap()).collect();
    assert_eq!(fams, ["inner", "middle", "outer"]);
}

#[test]
fn section_as_json() {
    let s = section_curves(1.0, roaming::M_H, 1.0, 0.05).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert!(v["gamma_i"].as_array().unwrap().len() > 10);
    let b = v["bound"].as_f64().unwrap();
    assert!((b - 0.078).abs() < 0.01, "{b}");
}
