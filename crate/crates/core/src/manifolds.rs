//! Globalisation of W^{u+}(Γⁱ) and W^{s−}(Γᵒ) to the outward annulus of DSᵃ
//! and the set-difference areas of the resulting curves.
//!
//! Curves and areas live in the canonical chart (θ, P) of the section, where
//! the flux form is dθ∧dP. Areas are computed on the strip θ ∈ [c − π/2, c + π/2],
//! which holds one copy of each region under the θ → θ + π symmetry, and doubled
//! for the full annulus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{self, Pt};
use crate::integrate::{run_system, unpack_tangent, DenseSolution, EventSpec, RunOptions, Tolerance};
use crate::model::{self, ModelParams, PhasePoint};
use crate::orbits::{Family, PeriodicOrbit};
use crate::surfaces::{rho_and_rhodot, OrbitProfile, SectionPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Stable,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    GammaIUPlus,
    GammaOSMinus,
}

impl CurveSource {
    pub fn name(self) -> &'static str {
        match self {
            CurveSource::GammaIUPlus => "gamma_i_u_plus",
            CurveSource::GammaOSMinus => "gamma_o_s_minus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManifoldSettings {
    /// Seed displacement for the inner orbit's unstable manifold.
    pub epsilon_inner: f64,
    /// Seed displacement for the outer orbit's stable manifold. Its multipliers
    /// sit close to 1, so a tiny displacement needs very long backward runs.
    pub epsilon_outer: f64,
    pub n_seeds: usize,
    /// Largest allowed chart distance between adjacent curve points.
    pub spacing: f64,
    pub max_seeds: usize,
    /// Smallest phase gap refinement may create.
    pub min_phase_gap: f64,
    pub t_max_forward: f64,
    pub t_max_backward: f64,
    pub tol: Tolerance,
}

impl Default for ManifoldSettings {
    fn default() -> Self {
        Self {
            epsilon_inner: 1e-6,
            epsilon_outer: 1e-4,
            n_seeds: 256,
            spacing: 1e-2,
            max_seeds: 40_000,
            min_phase_gap: 1e-9,
            t_max_forward: 400.0,
            t_max_backward: 20_000.0,
            tol: Tolerance { rtol: 1e-11, atol: 1e-11, drift_budget: None, ..Tolerance::default() },
        }
    }
}

/// Generates manifold seeds at arbitrary orbit phases.
pub struct Seeder {
    pub orbit: PeriodicOrbit,
    pub kind: ManifoldKind,
    pub branch: Branch,
    pub epsilon: f64,
    pub multiplier: f64,
    dense: DenseSolution<20>,
    v0: [f64; 4],
    sign: f64,
}

fn eigenvector(m: &[[f64; 4]; 4], lambda: f64) -> [f64; 4] {
    let a = nalgebra::Matrix4::from_fn(|i, j| m[i][j] - if i == j { lambda } else { 0.0 });
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let k = (0..4).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap();
    let v = [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)], vt[(k, 3)]];
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

fn grad_h(y: &[f64; 4], p: &ModelParams) -> [f64; 4] {
    let f = model::field(y, p);
    [-f[2], -f[3], f[0], f[1]]
}

fn energy(y: &[f64; 4], p: &ModelParams) -> f64 {
    model::kinetic(&PhasePoint::from_slice(y), p) + model::potential_parts(y[0], y[1], p)[0]
}

/// Newton projection onto H = E along ∇H.
pub fn project_to_shell(y: [f64; 4], e: f64, p: &ModelParams) -> Result<[f64; 4]> {
    let mut y = y;
    for _ in 0..20 {
        let dh = energy(&y, p) - e;
        if dh.abs() <= 1e-13 * e.abs().max(1.0) {
            return Ok(y);
        }
        let g = grad_h(&y, p);
        let gg: f64 = g.iter().map(|x| x * x).sum();
        if gg == 0.0 {
            break;
        }
        for i in 0..4 {
            y[i] -= dh * g[i] / gg;
        }
    }
    let dh = energy(&y, p) - e;
    if dh.abs() <= 1e-12 * e.abs().max(1.0) {
        Ok(y)
    } else {
        Err(Error::NoConvergence(format!("shell projection left residual {dh:.3e}")))
    }
}

impl Seeder {
    pub fn new(orbit: &PeriodicOrbit, kind: ManifoldKind, branch: Branch, epsilon: f64, tol: &Tolerance) -> Result<Self> {
        let pair = orbit.multipliers;
        if pair[0].1 != 0.0 {
            return Err(Error::Orbit("orbit is stable; it has no stable/unstable manifolds".into()));
        }
        let (big, small) = if pair[0].0.abs() > pair[1].0.abs() { (pair[0].0, pair[1].0) } else { (pair[1].0, pair[0].0) };
        if (big.abs() - 1.0).abs() < 1e-6 {
            return Err(Error::Orbit("orbit is degenerate".into()));
        }
        let lambda = match kind {
            ManifoldKind::Unstable => big,
            ManifoldKind::Stable => small,
        };
        if lambda < 0.0 {
            return Err(Error::Orbit("negative multiplier: the eigen-bundle is non-orientable and cannot be transported".into()));
        }
        let v0 = eigenvector(&orbit.monodromy, lambda);
        let dense = orbit.dense_tangent(&tol.without_drift_check())?;
        let mut s = Self { orbit: orbit.clone(), kind, branch, epsilon, multiplier: lambda, dense, v0, sign: 1.0 };
        let mean_r: f64 = (0..64).map(|i| s.direction(i as f64 / 64.0).1[0]).sum();
        s.sign = if mean_r >= 0.0 { branch.sign() } else { -branch.sign() };
        Ok(s)
    }

    /// Orbit state and unit eigen-direction at phase s ∈ [0, 1).
    pub fn direction(&self, phase: f64) -> ([f64; 4], [f64; 4]) {
        let t = phase.rem_euclid(1.0) * self.orbit.reduced_period;
        let y = self.dense.eval(t);
        let (x, frame) = unpack_tangent(&y);
        let mut v = [0.0; 4];
        for i in 0..4 {
            v[i] = (0..4).map(|k| frame[i][k] * self.v0[k]).sum();
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        (x.to_array(), v.map(|a| self.sign * a / n))
    }

    pub fn seed(&self, phase: f64) -> Result<PhasePoint> {
        let (x, v) = self.direction(phase);
        let y = std::array::from_fn(|i| x[i] + self.epsilon * v[i]);
        Ok(PhasePoint::from_slice(&project_to_shell(y, self.orbit.energy, &self.orbit.params)?))
    }
}

/// `n_seeds` shell-projected seeds at equally spaced phases.
pub fn seed_manifold(
    orbit: &PeriodicOrbit,
    kind: ManifoldKind,
    branch: Branch,
    epsilon: f64,
    n_seeds: usize,
    tol: &Tolerance,
) -> Result<Vec<PhasePoint>> {
    let s = Seeder::new(orbit, kind, branch, epsilon, tol)?;
    (0..n_seeds).map(|i| s.seed(i as f64 / n_seeds as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub phase: f64,
    pub fiber_id: usize,
    /// θ unwrapped continuously along the curve.
    pub theta_unwrapped: f64,
    pub point: SectionPoint,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionCurve {
    pub points: Vec<CurvePoint>,
    pub closed: bool,
    pub source: CurveSource,
    pub crossing_index: usize,
    /// Phases whose fibers never reached the requested crossing.
    pub gaps: Vec<f64>,
    /// Winding in θ over one phase period (0 for γᵢ, ±π for γₒ).
    pub theta_shift: f64,
    pub max_spacing: f64,
    pub n_fibers: usize,
}

impl SectionCurve {
    pub fn chart_points(&self) -> Vec<Pt> {
        self.points.iter().map(|c| (c.theta_unwrapped, c.point.p_canon)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,p_theta,P,fiber_id,crossing_index,phase")?;
        for c in &self.points {
            writeln!(
                w,
                "{:.12},{:.12},{:.12},{},{},{:.12}",
                model::wrap_angle(c.point.theta),
                c.point.p_theta,
                c.point.p_canon,
                c.fiber_id,
                self.crossing_index,
                c.phase
            )?;
        }
        Ok(())
    }
}

/// First `crossing_index` outward DSᵃ crossing of one fiber, `None` if it escaped first.
pub fn fiber_crossing(
    seed: &PhasePoint,
    params: &ModelParams,
    profile: &OrbitProfile,
    forward: bool,
    crossing_index: usize,
    t_max: f64,
    r_escape: f64,
    tol: &Tolerance,
) -> Result<Option<PhasePoint>> {
    let events = [
        EventSpec::new(move |x: &PhasePoint| x.r - profile.eval(x.theta).0)
            .with_rate(move |x: &PhasePoint| rho_and_rhodot(x, profile, params).1)
            .direction(1)
            .terminal()
            .max_count(crossing_index),
        EventSpec::new(move |x: &PhasePoint| x.r - r_escape).direction(if forward { 1 } else { 0 }).terminal(),
        EventSpec::new(|x: &PhasePoint| x.r - 0.6).direction(-1).terminal(),
    ];
    let t_end = if forward { t_max } else { -t_max };
    let run = match run_system(
        crate::integrate::model_rhs(params),
        params,
        0.0,
        seed.to_array(),
        t_end,
        tol,
        &events,
        RunOptions::quiet(),
    ) {
        Ok(r) => r,
        Err(Error::StepUnderflow { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    match run.stopped_by {
        Some(0) => Ok(Some(PhasePoint::from_slice(&run.y_final))),
        _ => Ok(None),
    }
}

fn chart_distance(a: &SectionPoint, b: &SectionPoint, shift: f64) -> f64 {
    let dth = model::wrap_angle(b.theta - a.theta - shift);
    dth.hypot(b.p_canon - a.p_canon)
}

/// Globalises a manifold to its `crossing_index`-th outward DSᵃ crossing with
/// adaptive insertion of fibers between distant neighbours.
pub fn globalize_to_section(
    seeder: &Seeder,
    profile: &OrbitProfile,
    forward: bool,
    crossing_index: usize,
    r_escape: f64,
    settings: &ManifoldSettings,
) -> Result<SectionCurve> {
    let params = seeder.orbit.params;
    let t_max = if forward { settings.t_max_forward } else { settings.t_max_backward };
    let eval = |phase: f64| -> Result<Option<SectionPoint>> {
        let seed = seeder.seed(phase)?;
        Ok(fiber_crossing(&seed, &params, profile, forward, crossing_index, t_max, r_escape, &settings.tol)?
            .map(|x| SectionPoint::from_state(&x, profile)))
    };
    let n0 = settings.n_seeds.max(8);
    let mut phases: Vec<f64> = (0..n0).map(|i| i as f64 / n0 as f64).collect();
    let mut images: Vec<Option<SectionPoint>> = phases.par_iter().map(|&s| eval(s)).collect::<Result<Vec<_>>>()?;
    let shift = if seeder.orbit.family.rotating() { seeder.orbit.orientation as f64 * PI } else { 0.0 };

    loop {
        let n = phases.len();
        let mut inserts = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let (s0, s1) = (phases[i], if j == 0 { phases[0] + 1.0 } else { phases[j] });
            if s1 - s0 < 2.0 * settings.min_phase_gap {
                continue;
            }
            let sh = if j == 0 { shift } else { 0.0 };
            let refine = match (&images[i], &images[j]) {
                (Some(a), Some(b)) => chart_distance(a, b, sh) > settings.spacing,
                (None, None) => false,
                _ => true,
            };
            if refine {
                inserts.push(0.5 * (s0 + s1));
            }
        }
        if inserts.is_empty() || n + inserts.len() > settings.max_seeds {
            break;
        }
        let new: Vec<Option<SectionPoint>> = inserts.par_iter().map(|&s| eval(s.rem_euclid(1.0))).collect::<Result<Vec<_>>>()?;
        let mut merged: Vec<(f64, Option<SectionPoint>)> = phases.into_iter().zip(images).collect();
        merged.extend(inserts.into_iter().map(|s| s.rem_euclid(1.0)).zip(new));
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        phases = merged.iter().map(|m| m.0).collect();
        images = merged.into_iter().map(|m| m.1).collect();
    }

    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut prev: Option<f64> = None;
    for (id, (s, img)) in phases.iter().zip(&images).enumerate() {
        match img {
            Some(sp) => {
                let th = match prev {
                    None => model::wrap_angle(sp.theta),
                    Some(p) => p + model::wrap_angle(sp.theta - p),
                };
                prev = Some(th);
                points.push(CurvePoint { phase: *s, fiber_id: id, theta_unwrapped: th, point: *sp });
            }
            None => gaps.push(*s),
        }
    }
    let mut max_spacing: f64 = 0.0;
    for w in points.windows(2) {
        max_spacing = max_spacing.max(chart_distance(&w[0].point, &w[1].point, 0.0));
    }
    if let (Some(a), Some(b)) = (points.last(), points.first()) {
        if gaps.is_empty() {
            max_spacing = max_spacing.max(chart_distance(&a.point, &b.point, shift));
        }
    }
    let source = match seeder.kind {
        ManifoldKind::Unstable => CurveSource::GammaIUPlus,
        ManifoldKind::Stable => CurveSource::GammaOSMinus,
    };
    Ok(SectionCurve {
        n_fibers: phases.len(),
        points,
        closed: gaps.is_empty(),
        source,
        crossing_index,
        gaps,
        theta_shift: shift,
        max_spacing,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionAreas {
    /// Full-annulus area of γ^{u+}_i \ γ^{s−}_o.
    pub a_esc: f64,
    /// Full-annulus area of γ^{s−}_o \ γ^{u+}_i.
    pub a_diss: f64,
    pub a_int: f64,
    /// Area enclosed by one γ^{u+}_i loop.
    pub area_gamma_i: f64,
    /// Area of the dissociating band over one half turn.
    pub area_band: f64,
    pub symmetry_factor: f64,
    pub chart: String,
    pub flags: Vec<String>,
}

/// Canonical-chart regions of the two curves on the strip centred at `centre`.
#[derive(Clone, Debug)]
pub struct Regions {
    pub gamma_i: geo::MultiPolygon<f64>,
    pub band: geo::MultiPolygon<f64>,
    pub strip: geo::MultiPolygon<f64>,
    pub gamma_i_ring: Vec<Pt>,
    pub band_upper: Vec<Pt>,
    pub centre: f64,
    pub flags: Vec<String>,
}

fn shifted(ring: &[Pt], dx: f64) -> Vec<Pt> {
    ring.iter().map(|&(x, y)| (x + dx, y)).collect()
}

/// Upper band boundary as a θ-sorted polyline covering [lo, hi].
fn band_upper(curve: &SectionCurve, lo: f64, hi: f64) -> Result<(Vec<Pt>, bool)> {
    let mut base = curve.chart_points();
    if base.len() < 3 {
        return Err(Error::Geometry("outer curve has too few points".into()));
    }
    let span = curve.theta_shift;
    if span == 0.0 {
        return Err(Error::Geometry("outer curve does not wind around the annulus".into()));
    }
    if span < 0.0 {
        base.reverse();
    }
    let period = span.abs();
    let monotone = base.windows(2).all(|w| w[1].0 > w[0].0);
    let x0 = base[0].0;
    let k_lo = ((lo - x0) / period).floor() as i64 - 1;
    let k_hi = ((hi - x0) / period).ceil() as i64 + 1;
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        out.extend(shifted(&base, k as f64 * period));
    }
    Ok((out, monotone))
}

pub fn build_regions(gamma_i: &SectionCurve, gamma_o: &SectionCurve, centre: f64) -> Result<Regions> {
    let mut flags = Vec::new();
    if !gamma_i.closed {
        flags.push(format!("gamma_i has {} gap fibers", gamma_i.gaps.len()));
    }
    if !gamma_o.closed {
        flags.push(format!("gamma_o has {} gap fibers", gamma_o.gaps.len()));
    }
    let ring_i = gamma_i.chart_points();
    if ring_i.len() < 3 {
        return Err(Error::Geometry("inner curve has too few points".into()));
    }
    let crossings = geometry::self_intersections(&ring_i);
    if !crossings.is_empty() {
        flags.push(format!("gamma_i self-intersects at {} edge pairs", crossings.len()));
    }
    let (lo, hi) = (centre - FRAC_PI_2, centre + FRAC_PI_2);
    let p_big = 1e3;
    let strip = geometry::multi(geometry::rect(lo, hi, -p_big, p_big));

    // Copies of the γᵢ loop shifted by multiples of π that meet the strip.
    let mut region = geo::MultiPolygon::new(vec![]);
    for k in -3i64..=3 {
        let dx = k as f64 * PI;
        let (mn, mx) = ring_i.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0 + dx), b.max(p.0 + dx)));
        if mx < lo || mn > hi {
            continue;
        }
        let copy = geometry::multi(geometry::polygon(&shifted(&ring_i, dx)));
        region = geometry::union(&region, &copy)?;
    }
    let region = geometry::intersection(&region, &strip)?;

    let (upper, monotone) = band_upper(gamma_o, lo - PI, hi + PI)?;
    if !monotone {
        flags.push("gamma_o is not a graph over theta".into());
    }
    let mut ring: Vec<Pt> = upper.clone();
    let mut lower: Vec<Pt> = upper.iter().map(|&(x, y)| (-x + 2.0 * centre, -y)).collect();
    lower.sort_by(|a, b| b.0.total_cmp(&a.0));
    ring.extend(lower);
    let band = geometry::intersection(&geometry::multi(geometry::polygon(&ring)), &strip)?;
    Ok(Regions { gamma_i: region, band, strip, gamma_i_ring: ring_i, band_upper: upper, centre, flags })
}

/// Set-difference areas of γ^{u+}_i and the γ^{s−}_o band on the strip centred at `centre`.
pub fn curve_set_operations(gamma_i: &SectionCurve, gamma_o: &SectionCurve, centre: f64) -> Result<RegionAreas> {
    let reg = build_regions(gamma_i, gamma_o, centre)?;
    let esc = geometry::difference(&reg.gamma_i, &reg.band)?;
    let diss = geometry::difference(&reg.band, &reg.gamma_i)?;
    let int = geometry::intersection(&reg.gamma_i, &reg.band)?;
    let factor = 2.0;
    Ok(RegionAreas {
        a_esc: factor * geometry::area(&esc),
        a_diss: factor * geometry::area(&diss),
        a_int: factor * geometry::area(&int),
        area_gamma_i: geometry::shoelace(&reg.gamma_i_ring).abs(),
        area_band: geometry::area(&reg.band),
        symmetry_factor: factor,
        chart: "canonical (theta, P = p_theta + r_bar'(theta) p_r)".into(),
        flags: reg.flags,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetReport {
    pub area_gamma_i: f64,
    pub action_inner: f64,
    pub area_band: f64,
    pub action_outer: f64,
    pub rel_err_inner: f64,
    pub rel_err_outer: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Cross-checks curve areas against orbit actions: one γᵢ loop carries the
/// flux of DSⁱ-outward (the inner action) and the band over a half turn the
/// flux of DSᵒ-inward (the outer action).
pub fn manifold_area_budget(areas: &RegionAreas, inner: &PeriodicOrbit, outer: &PeriodicOrbit, tolerance: f64) -> Result<BudgetReport> {
    if inner.family != Family::Inner || outer.family != Family::Outer {
        return Err(Error::Orbit("budget needs an inner and an outer orbit".into()));
    }
    let ri = (areas.area_gamma_i - inner.action.abs()).abs() / inner.action.abs();
    let ro = (areas.area_band - outer.action.abs()).abs() / outer.action.abs();
    Ok(BudgetReport {
        area_gamma_i: areas.area_gamma_i,
        action_inner: inner.action.abs(),
        area_band: areas.area_band,
        action_outer: outer.action.abs(),
        rel_err_inner: ri,
        rel_err_outer: ro,
        tolerance,
        ok: ri <= tolerance && ro <= tolerance,
    })
}

/// Edges of closed rings bucketed by the horizontal rows they span.
struct RowIndex {
    y0: f64,
    dy: f64,
    rows: Vec<Vec<(Pt, Pt)>>,
}

impl RowIndex {
    fn new(rings: &[Vec<Pt>], y0: f64, dy: f64, n: usize) -> Self {
        let mut rows = vec![Vec::new(); n];
        for ring in rings {
            for k in 0..ring.len() {
                let (a, b) = (ring[k], ring[(k + 1) % ring.len()]);
                let lo = (((a.1.min(b.1) - y0) / dy).floor().max(0.0) as usize).min(n);
                let hi = (((a.1.max(b.1) - y0) / dy).floor().max(-1.0) as i64 + 1).clamp(0, n as i64) as usize;
                for row in rows.iter_mut().take(hi).skip(lo) {
                    row.push((a, b));
                }
            }
        }
        Self { y0, dy, rows }
    }

    /// Even-odd membership counted over all indexed rings.
    fn contains(&self, p: Pt) -> bool {
        let j = ((p.1 - self.y0) / self.dy).floor();
        if j < 0.0 || j as usize >= self.rows.len() {
            return false;
        }
        let mut inside = false;
        for &((xi, yi), (xj, yj)) in &self.rows[j as usize] {
            if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
                inside = !inside;
            }
        }
        inside
    }
}

/// Direct Monte Carlo membership areas (A_esc, A_diss, A_int) on the strip:
/// jittered stratified samples on an `n_side`² grid tested with the even-odd
/// rule against the raw curve rings, doubled for the full annulus.
pub fn monte_carlo_areas(reg: &Regions, n_side: usize, seed: u64) -> (f64, f64, f64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (reg.centre - FRAC_PI_2, reg.centre + FRAC_PI_2);
    let copies: Vec<Vec<Pt>> = (-3i64..=3).map(|k| shifted(&reg.gamma_i_ring, k as f64 * PI)).collect();
    let upper = &reg.band_upper;
    let p_of = |x: f64| -> f64 {
        let i = upper.partition_point(|p| p.0 < x).clamp(1, upper.len() - 1);
        let (a, b) = (upper[i - 1], upper[i]);
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    };
    let in_band = |p: Pt| p.1 <= p_of(p.0) && p.1 >= -p_of(2.0 * reg.centre - p.0);
    let ys = reg.gamma_i_ring.iter().map(|p| p.1).chain(upper.iter().map(|p| p.1));
    let ymax = ys.fold(0.0f64, |m, v| m.max(v.abs())) * 1.01;
    let (dx, dy) = ((hi - lo) / n_side as f64, 2.0 * ymax / n_side as f64);
    let index = RowIndex::new(&copies, -ymax, dy, n_side);
    let (mut esc, mut diss, mut int) = (0usize, 0usize, 0usize);
    for j in 0..n_side {
        for i in 0..n_side {
            let p = (lo + (i as f64 + rng.gen::<f64>()) * dx, -ymax + (j as f64 + rng.gen::<f64>()) * dy);
            match (index.contains(p), in_band(p)) {
                (true, true) => int += 1,
                (true, false) => esc += 1,
                (false, true) => diss += 1,
                _ => {}
            }
        }
    }
    let cell = dx * dy * 2.0;
    (esc as f64 * cell, diss as f64 * cell, int as f64 * cell)
}
