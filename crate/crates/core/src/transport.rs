//! Roaming upper bound, trajectory classification by dividing-surface
//! crossings, and Monte Carlo sampling of the outward DSⁱ flux.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrate::{model_rhs, run_system, DenseSolution, EventSpec, RunOptions, Tolerance};
use crate::manifolds::{curve_set_operations, globalize_to_section, Branch, ManifoldKind, ManifoldSettings, RegionAreas, SectionCurve, Seeder};
use crate::model::{self, ModelParams, PhasePoint};
use crate::orbits::{self, Family, OrbitSettings, PeriodicOrbit};
use crate::surfaces::{rho_and_rhodot, InnerCurve, OrbitProfile};

/// Symplectic area of the asymptotic inward section, 4π·sqrt(2IE).
pub fn normalization_measure(e: f64, params: &ModelParams) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::InvalidParameter(format!("normalization needs E > 0, got {e}")));
    }
    Ok(4.0 * PI * (2.0 * params.inertia * e).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundSettings {
    pub orbit: OrbitSettings,
    pub manifold: ManifoldSettings,
    /// Samples used to fit the DSᵃ and DSᵒ profiles.
    pub profile_samples: usize,
    pub inner_curve_samples: usize,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self { orbit: OrbitSettings::default(), manifold: ManifoldSettings::default(), profile_samples: 256, inner_curve_samples: 200 }
    }
}

/// The three orbits of one (E, m, a) cell and the surfaces built on them.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub energy: f64,
    pub params: ModelParams,
    pub inner: PeriodicOrbit,
    pub middle: PeriodicOrbit,
    pub outer: PeriodicOrbit,
    pub ds_i: InnerCurve,
    pub ds_a: OrbitProfile,
    pub ds_o: OrbitProfile,
}

impl CellGeometry {
    pub fn locate(e: f64, params: &ModelParams, s: &BoundSettings) -> Result<Self> {
        params.validate()?;
        let inner = orbits::find(Family::Inner, e, params, None, &s.orbit)?;
        let middle = orbits::find(Family::Middle, e, params, None, &s.orbit)?;
        let outer = orbits::find(Family::Outer, e, params, None, &s.orbit)?;
        let tol = s.orbit.tol.without_drift_check();
        let ds_i = InnerCurve::from_orbit(&inner, s.inner_curve_samples, &tol)?;
        let ds_a = OrbitProfile::from_orbit(&middle, s.profile_samples, &tol)?;
        let ds_o = OrbitProfile::from_orbit(&outer, s.profile_samples, &tol)?;
        Ok(Self { energy: e, params: *params, inner, middle, outer, ds_i, ds_a, ds_o })
    }

    /// Radius beyond which manifold fibers count as escaped.
    pub fn r_escape(&self) -> f64 {
        1.5 * self.outer.anchor.r + 5.0
    }

    pub fn curves(&self, s: &ManifoldSettings) -> Result<(SectionCurve, SectionCurve)> {
        let tol = s.tol.without_drift_check();
        let si = Seeder::new(&self.inner, ManifoldKind::Unstable, Branch::Plus, s.epsilon_inner, &tol)?;
        let gi = globalize_to_section(&si, &self.ds_a, true, 1, self.r_escape(), s)?;
        let so = Seeder::new(&self.outer, ManifoldKind::Stable, Branch::Minus, s.epsilon_outer, &tol)?;
        let go = globalize_to_section(&so, &self.ds_a, false, 1, self.r_escape(), s)?;
        Ok((gi, go))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n_samples: usize,
    pub seed: u64,
    pub counts: ClassCounts,
    pub roaming_fraction: f64,
    pub roaming_sigma: f64,
    /// Roaming fraction of the outward DSⁱ flux scaled to the V_inf measure.
    pub roaming_ratio: f64,
    pub roaming_ratio_sigma: f64,
    pub outward_flux: f64,
    pub unreliable: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportReport {
    pub energy: f64,
    pub m: f64,
    pub a: f64,
    pub a_esc: f64,
    pub a_diss: f64,
    pub a_int: f64,
    pub v_inf: f64,
    pub bound: f64,
    pub convention: String,
    pub flags: Vec<String>,
    pub monte_carlo: Option<MonteCarloReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Computed(Box<TransportReport>),
    /// A required orbit does not exist or is not unstable at this cell.
    Absent { reason: String },
}

impl CellOutcome {
    pub fn bound(&self) -> Option<f64> {
        match self {
            CellOutcome::Computed(r) => Some(r.bound),
            CellOutcome::Absent { .. } => None,
        }
    }
}

fn absent_cause(e: &Error) -> bool {
    matches!(e, Error::NoRoot(_) | Error::OutOfBox(_) | Error::Orbit(_))
}

pub const V_INF_CONVENTION: &str = "V_inf = 4 pi sqrt(2 I E); areas in the canonical (theta, P) chart, full annulus";

pub fn report_from_areas(e: f64, params: &ModelParams, areas: &RegionAreas) -> Result<TransportReport> {
    let v_inf = normalization_measure(e, params)?;
    Ok(TransportReport {
        energy: e,
        m: params.m,
        a: params.a,
        a_esc: areas.a_esc,
        a_diss: areas.a_diss,
        a_int: areas.a_int,
        v_inf,
        bound: areas.a_esc.min(areas.a_diss).max(0.0) / v_inf,
        convention: V_INF_CONVENTION.into(),
        flags: areas.flags.clone(),
        monte_carlo: None,
    })
}

/// Locates the orbits, globalises both manifolds and forms the bound.
pub fn roaming_upper_bound(e: f64, params: &ModelParams, s: &BoundSettings) -> Result<CellOutcome> {
    normalization_measure(e, params)?;
    let cell = match CellGeometry::locate(e, params, s) {
        Ok(c) => c,
        Err(err) if absent_cause(&err) => return Ok(CellOutcome::Absent { reason: err.to_string() }),
        Err(err) => return Err(err),
    };
    let (gi, go) = match cell.curves(&s.manifold) {
        Ok(c) => c,
        Err(err @ Error::Orbit(_)) => return Ok(CellOutcome::Absent { reason: err.to_string() }),
        Err(err) => return Err(err),
    };
    let areas = curve_set_operations(&gi, &go, 0.0)?;
    Ok(CellOutcome::Computed(Box::new(report_from_areas(e, params, &areas)?)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Roaming,
    Isomerisation,
    DirectDissociation,
    Nonreactive,
    /// Incoming trajectory that reaches a well.
    Capture,
    Trapped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    Dissociated,
    EnteredWell0,
    EnteredWellPi,
    BudgetExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryClass {
    pub kind: TrajectoryKind,
    pub ds_a_crossings: usize,
    pub final_fate: Fate,
    pub t_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    pub t_max: f64,
    pub max_crossings: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { t_max: 1e4, max_crossings: 100 }
    }
}

/// Signed distance to the well region bounded by DSⁱ around `centre`; negative inside.
fn well_function(x: &PhasePoint, curve: &InnerCurve, centre: f64, params: &ModelParams) -> f64 {
    let (rho, _) = curve.rho(x, centre, params);
    let off = model::wrap_angle(x.theta - centre).abs() - curve.theta_max;
    rho.max(off)
}

/// Propagates `start` until it enters a well, dissociates through DSᵒ, or
/// exhausts the budgets, counting DSᵃ crossings in both directions.
pub fn classify_trajectory(start: &PhasePoint, cell: &CellGeometry, budgets: &Budgets, tol: &Tolerance) -> Result<TrajectoryClass> {
    let p = &cell.params;
    let (ds_a, ds_o, ds_i) = (&cell.ds_a, &cell.ds_o, &cell.ds_i);
    let events = [
        EventSpec::new(move |x: &PhasePoint| x.r - ds_a.eval(x.theta).0)
            .with_rate(move |x: &PhasePoint| rho_and_rhodot(x, ds_a, p).1)
            .terminal()
            .max_count(budgets.max_crossings + 1),
        EventSpec::new(move |x: &PhasePoint| well_function(x, ds_i, 0.0, p)).direction(-1).terminal(),
        EventSpec::new(move |x: &PhasePoint| well_function(x, ds_i, PI, p)).direction(-1).terminal(),
        EventSpec::new(move |x: &PhasePoint| x.r - ds_o.eval(x.theta).0)
            .with_rate(move |x: &PhasePoint| rho_and_rhodot(x, ds_o, p).1)
            .direction(1)
            .terminal(),
    ];
    let run = run_system(model_rhs(p), p, 0.0, start.to_array(), budgets.t_max, tol, &events, RunOptions::quiet())?;
    let n = run.crossings.iter().filter(|c| c.event == 0).count();
    let fate = match run.stopped_by {
        Some(1) => Fate::EnteredWell0,
        Some(2) => Fate::EnteredWellPi,
        Some(3) => Fate::Dissociated,
        _ => Fate::BudgetExceeded,
    };
    let kind = match fate {
        Fate::BudgetExceeded => TrajectoryKind::Trapped,
        Fate::Dissociated if n == 1 => TrajectoryKind::DirectDissociation,
        Fate::Dissociated if n % 2 == 1 => TrajectoryKind::Roaming,
        Fate::Dissociated => TrajectoryKind::Nonreactive,
        _ if n % 2 == 0 => TrajectoryKind::Isomerisation,
        _ => TrajectoryKind::Capture,
    };
    Ok(TrajectoryClass { kind, ds_a_crossings: n, final_fate: fate, t_final: run.t_final })
}

/// Uniform sampler of the outward DSⁱ hemisphere of the θ = 0 well.
///
/// Along the orbit's configuration curve the flux form is d(p·v)∧dt with v
/// the orbit velocity, so (t, p·v) with |p·v| ≤ 2K(t) is a symplectic chart.
pub struct InnerFluxSampler<'a> {
    cell: &'a CellGeometry,
    dense: DenseSolution<4>,
    quarter: f64,
    k_max: f64,
}

impl<'a> InnerFluxSampler<'a> {
    pub fn new(cell: &'a CellGeometry, tol: &Tolerance) -> Result<Self> {
        let dense = cell.inner.dense(&tol.without_drift_check())?;
        let quarter = cell.inner.period / 4.0;
        let mut k_max: f64 = 0.0;
        for i in 0..=400 {
            let y = dense.eval(quarter * i as f64 / 400.0);
            k_max = k_max.max(model::kinetic(&PhasePoint::from_slice(&y), &cell.params));
        }
        Ok(Self { cell, dense, quarter, k_max: 1.05 * k_max })
    }

    /// Total outward flux of one well: the inner orbit's action.
    pub fn outward_flux(&self) -> f64 {
        self.cell.inner.action.abs()
    }

    fn orbit_state(&self, t: f64) -> [f64; 4] {
        let tt = if t < 0.0 { t + self.cell.inner.period } else { t };
        self.dense.eval(tt)
    }

    /// Outward DSⁱ point at chart coordinates (t, p_s); `None` outside the chart.
    pub fn lift(&self, t: f64, p_s: f64) -> Option<PhasePoint> {
        let p = &self.cell.params;
        let y = self.orbit_state(t);
        let f = model::field(&y, p);
        let (vr, vt) = (f[0], f[1]);
        let k0 = model::kinetic(&PhasePoint::from_slice(&y), p);
        if k0 <= 0.0 || p_s.abs() >= 2.0 * k0 {
            return None;
        }
        let base = [y[2] * p_s / (2.0 * k0), y[3] * p_s / (2.0 * k0)];
        let eta = [-vt, vr];
        let (im, c) = (1.0 / p.mu(), model::inv_inertia(y[0], p));
        // K(base + λη) = k0: quadratic in λ.
        let qa = 0.5 * (im * eta[0] * eta[0] + c * eta[1] * eta[1]);
        let qb = im * base[0] * eta[0] + c * base[1] * eta[1];
        let qc = 0.5 * (im * base[0] * base[0] + c * base[1] * base[1]) - k0;
        let disc = qb * qb - 4.0 * qa * qc;
        if qa <= 0.0 || disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        for lam in [(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)] {
            let x = PhasePoint::new(y[0], y[1], base[0] + lam * eta[0], base[1] + lam * eta[1]);
            if self.cell.ds_i.rho(&x, 0.0, p).1 > 0.0 {
                return Some(x);
            }
        }
        None
    }

    /// Rejection sample uniform in the flux measure.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> PhasePoint {
        loop {
            let t = rng.gen_range(-self.quarter..self.quarter);
            let ps = rng.gen_range(-2.0 * self.k_max..2.0 * self.k_max);
            if let Some(x) = self.lift(t, ps) {
                return x;
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub roaming: usize,
    pub isomerisation: usize,
    pub direct_dissociation: usize,
    pub nonreactive: usize,
    pub capture: usize,
    pub trapped: usize,
}

impl ClassCounts {
    pub fn add(&mut self, k: TrajectoryKind) {
        match k {
            TrajectoryKind::Roaming => self.roaming += 1,
            TrajectoryKind::Isomerisation => self.isomerisation += 1,
            TrajectoryKind::DirectDissociation => self.direct_dissociation += 1,
            TrajectoryKind::Nonreactive => self.nonreactive += 1,
            TrajectoryKind::Capture => self.capture += 1,
            TrajectoryKind::Trapped => self.trapped += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.roaming + self.isomerisation + self.direct_dissociation + self.nonreactive + self.capture + self.trapped
    }

    pub fn fractions(&self) -> [(TrajectoryKind, f64); 6] {
        let n = self.total().max(1) as f64;
        [
            (TrajectoryKind::Roaming, self.roaming as f64 / n),
            (TrajectoryKind::Isomerisation, self.isomerisation as f64 / n),
            (TrajectoryKind::DirectDissociation, self.direct_dissociation as f64 / n),
            (TrajectoryKind::Nonreactive, self.nonreactive as f64 / n),
            (TrajectoryKind::Capture, self.capture as f64 / n),
            (TrajectoryKind::Trapped, self.trapped as f64 / n),
        ]
    }
}

/// The i-th sample of a sweep; independent of how samples are scheduled.
pub fn sample_start(sampler: &InnerFluxSampler<'_>, seed: u64, i: u64) -> PhasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    sampler.sample(&mut rng)
}

/// Classifies `n_samples` flux-uniform starts on the outward DSⁱ of the θ = 0 well.
pub fn monte_carlo_sweep(cell: &CellGeometry, n_samples: usize, seed: u64, budgets: &Budgets, tol: &Tolerance) -> Result<MonteCarloReport> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter(format!("Monte Carlo needs at least 1000 samples, got {n_samples}")));
    }
    let sampler = InnerFluxSampler::new(cell, tol)?;
    let tol = tol.without_drift_check();
    let kinds: Vec<TrajectoryKind> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_start(&sampler, seed, i);
            match classify_trajectory(&x, cell, budgets, &tol) {
                Ok(c) => Ok(c.kind),
                Err(Error::StepUnderflow { .. }) => Ok(TrajectoryKind::Trapped),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = ClassCounts::default();
    for k in kinds {
        counts.add(k);
    }
    let n = n_samples as f64;
    let f = counts.roaming as f64 / n;
    let sigma = (f * (1.0 - f) / n).sqrt();
    // Both wells emit the same flux; the bound counts the full annulus.
    let scale = 2.0 * sampler.outward_flux() / normalization_measure(cell.energy, &cell.params)?;
    Ok(MonteCarloReport {
        n_samples,
        seed,
        roaming_fraction: f,
        roaming_sigma: sigma,
        roaming_ratio: f * scale,
        roaming_ratio_sigma: sigma * scale,
        outward_flux: sampler.outward_flux(),
        unreliable: counts.trapped as f64 / n > 0.05,
        counts,
    })
}
