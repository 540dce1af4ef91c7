//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export returns plain numbers or a JSON string so the page needs no
//! bundler or glue beyond what `wasm-pack build --target web` emits.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use roaming::manifolds::{curve_set_operations, ManifoldSettings};
use roaming::model::{self, ModelParams};
use roaming::orbits::{self, Family, OrbitSettings};
use roaming::transport::{report_from_areas, BoundSettings, CellGeometry};

fn params(m: f64, a: f64) -> Result<ModelParams, JsError> {
    let p = ModelParams::default().with_mass(m).with_coupling(a);
    p.validate()?;
    Ok(p)
}

/// Potential on an n×n Cartesian grid over [−extent, extent]², row-major in y.
/// Points closer to the origin than 0.8 are reported as NaN.
#[wasm_bindgen]
pub fn potential_grid(a: f64, n: usize, extent: f64) -> Result<Vec<f64>, JsError> {
    let p = params(model::M_H, a)?;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = extent * (2.0 * j as f64 / (n - 1) as f64 - 1.0);
        for i in 0..n {
            let x = extent * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
            let r = x.hypot(y);
            out.push(if r < 0.8 { f64::NAN } else { model::potential_parts(r, y.atan2(x), &p)[0] });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct OrbitView {
    family: &'static str,
    r: f64,
    period: f64,
    stability: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Configuration-space projections of the three orbit families as JSON.
/// Families that do not exist at the given parameters are skipped.
#[wasm_bindgen]
pub fn orbit_projections(e: f64, m: f64, a: f64) -> Result<String, JsError> {
    let p = params(m, a)?;
    let s = OrbitSettings::default();
    let tol = s.tol.without_drift_check();
    let mut views = Vec::new();
    for fam in [Family::Inner, Family::Middle, Family::Outer] {
        let Ok(o) = orbits::find(fam, e, &p, None, &s) else { continue };
        let pts = o.projection(300, &tol)?;
        views.push(OrbitView {
            family: fam.name(),
            r: o.anchor.r,
            period: o.period,
            stability: format!("{:?}", o.stability),
            x: pts.iter().map(|(r, t)| r * t.cos()).collect(),
            y: pts.iter().map(|(r, t)| r * t.sin()).collect(),
        });
    }
    Ok(serde_json::to_string(&views)?)
}

#[derive(Serialize)]
struct SectionView {
    gamma_i: Vec<(f64, f64)>,
    gamma_o: Vec<(f64, f64)>,
    a_esc: f64,
    a_diss: f64,
    bound: f64,
}

/// γ curves on the outward DSᵃ annulus in the (θ, P) chart and the bound.
/// `spacing` trades resolution for speed; 0.02 is a good interactive value.
#[wasm_bindgen]
pub fn section_curves(e: f64, m: f64, a: f64, spacing: f64) -> Result<String, JsError> {
    let p = params(m, a)?;
    let s = BoundSettings { manifold: ManifoldSettings { spacing, n_seeds: 128, ..ManifoldSettings::default() }, ..BoundSettings::default() };
    let cell = CellGeometry::locate(e, &p, &s)?;
    let (gi, go) = cell.curves(&s.manifold)?;
    let areas = curve_set_operations(&gi, &go, 0.0)?;
    let report = report_from_areas(e, &p, &areas)?;
    let chart = |c: &roaming::manifolds::SectionCurve| c.points.iter().map(|q| (model::wrap_angle(q.point.theta), q.point.p_canon)).collect();
    Ok(serde_json::to_string(&SectionView {
        gamma_i: chart(&gi),
        gamma_o: chart(&go),
        a_esc: report.a_esc,
        a_diss: report.a_diss,
        bound: report.bound,
    })?)
}
