//! Inner (libration), middle and outer (rotating) periodic-orbit families.
//!
//! All three families are found by one-dimensional shooting from the
//! reversibility set {θ = 0, p_r = 0}. Librations are matched at their
//! θ turning point (p_θ = 0, where p_r must vanish too); rotating orbits at
//! θ = π/2 (p_r = 0). Rotating orbits are invariant under θ → θ + π, so their
//! monodromy is taken over the half turn.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use crate::error::{Error, Result};
use crate::integrate::{
    self, action_rhs, det4, identity_frame, model_rhs, pack_tangent, run_system, tangent_rhs, unpack_tangent,
    DenseSolution, EventSpec, Frame, RunOptions, Tolerance,
};
use crate::model::{self, brent, ModelParams, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Inner,
    Middle,
    Outer,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Inner => "inner",
            Family::Middle => "middle",
            Family::Outer => "outer",
        }
    }

    pub fn rotating(self) -> bool {
        !matches!(self, Family::Inner)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrbitSettings {
    pub tol: Tolerance,
    /// Orbits reaching beyond this radius are reported as out of the box.
    pub r_box: f64,
    /// Shooting root tolerance in r.
    pub r_tol: f64,
    /// Largest quarter period accepted for the well-delimiting libration.
    pub inner_quarter_max: f64,
    pub inner_scan: (f64, f64),
    pub scan_points: usize,
    /// Nontrivial multipliers this close to the unit circle are degenerate.
    pub degenerate_tol: f64,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            r_box: 60.0,
            r_tol: 1e-13,
            inner_quarter_max: 1.0,
            inner_scan: (1.15, 3.6),
            scan_points: 80,
            degenerate_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub family: Family,
    pub energy: f64,
    pub params: ModelParams,
    /// Point on {θ = 0, p_r = 0} with the orbit's orientation.
    pub anchor: PhasePoint,
    /// Full period.
    pub period: f64,
    /// Period of the symmetry-reduced return map: half turn for rotating orbits.
    pub reduced_period: f64,
    /// Monodromy of the reduced return map.
    pub monodromy: Frame,
    /// Product of the segment determinants making up `monodromy`.
    pub segment_det: f64,
    pub stability: Stability,
    /// Nontrivial multiplier pair of the reduced map (real part, imaginary part).
    pub multipliers: [(f64, f64); 2],
    pub action: f64,
    pub orientation: i8,
    pub closure: f64,
}

/// Multipliers of a symplectic 4×4 monodromy with one trivial unit pair.
pub fn nontrivial_pair(m: &Frame) -> [(f64, f64); 2] {
    let s = (0..4).map(|i| m[i][i]).sum::<f64>() - 2.0;
    if s.abs() >= 2.0 {
        let d = (s * s - 4.0).sqrt();
        let l1 = 0.5 * (s + s.signum() * d);
        [(l1, 0.0), (1.0 / l1, 0.0)]
    } else {
        let re = 0.5 * s;
        let im = (1.0 - re * re).max(0.0).sqrt();
        [(re, im), (re, -im)]
    }
}

pub fn classify_pair(pair: &[(f64, f64); 2], tol: f64) -> Stability {
    let mod0 = pair[0].0.hypot(pair[0].1);
    if (mod0 - 1.0).abs() < tol && pair[0].1 == 0.0 {
        Stability::Degenerate
    } else if pair[0].1 != 0.0 {
        if (pair[0].0.abs() - 1.0).abs() < tol {
            Stability::Degenerate
        } else {
            Stability::Stable
        }
    } else {
        Stability::Unstable
    }
}

impl PeriodicOrbit {
    pub fn leading_multiplier(&self) -> f64 {
        self.multipliers.iter().map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// λ + 1/λ of the nontrivial pair.
    pub fn pair_sum(&self) -> f64 {
        (0..4).map(|i| self.monodromy[i][i]).sum::<f64>() - 2.0
    }

    pub fn full_monodromy(&self) -> Frame {
        if self.family.rotating() {
            matmul(&self.monodromy, &self.monodromy)
        } else {
            self.monodromy
        }
    }

    /// Determinant of the monodromy, taken as the product over the integration
    /// segments. For strongly unstable orbits the entries are large enough that
    /// `det4(&self.monodromy)` is only good to about ε·‖M‖².
    pub fn monodromy_det(&self) -> f64 {
        self.segment_det
    }

    /// Partner under the reflection (θ, p_θ) → (−θ, −p_θ).
    pub fn mirrored(&self) -> Self {
        let mut o = self.clone();
        o.anchor.p_theta = -o.anchor.p_theta;
        o.orientation = -o.orientation;
        let s = [1.0, -1.0, 1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                o.monodromy[i][j] *= s[i] * s[j];
            }
        }
        o
    }

    /// Dense solution over one full period starting at the anchor.
    pub fn dense(&self, tol: &Tolerance) -> Result<DenseSolution<4>> {
        let run = run_system(
            model_rhs(&self.params),
            &self.params,
            0.0,
            self.anchor.to_array(),
            self.period,
            tol,
            &[],
            RunOptions::dense(),
        )?;
        Ok(run.dense.expect("dense output requested"))
    }

    /// Dense state + tangent-frame solution over the reduced period.
    pub fn dense_tangent(&self, tol: &Tolerance) -> Result<DenseSolution<20>> {
        let y0 = pack_tangent(&self.anchor, &identity_frame());
        let run = run_system(
            tangent_rhs(&self.params),
            &self.params,
            0.0,
            y0,
            self.reduced_period,
            tol,
            &[],
            RunOptions::dense(),
        )?;
        Ok(run.dense.expect("dense output requested"))
    }

    /// Configuration-space samples (r, θ) over one full period.
    pub fn projection(&self, n: usize, tol: &Tolerance) -> Result<Vec<(f64, f64)>> {
        let d = self.dense(tol)?;
        Ok((0..=n)
            .map(|i| {
                let y = d.eval(self.period * i as f64 / n as f64);
                (y[0], y[1])
            })
            .collect())
    }

    /// Largest radius reached along the orbit.
    pub fn max_radius(&self, tol: &Tolerance) -> Result<f64> {
        Ok(self.projection(256, tol)?.iter().map(|p| p.0).fold(0.0, f64::max))
    }
}

fn matmul(a: &Frame, b: &Frame) -> Frame {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn start_point(r: f64, e: f64, p: &ModelParams) -> Result<PhasePoint> {
    let pt = model::angular_momentum_on_shell(r, 0.0, 0.0, e, p)?;
    Ok(PhasePoint::new(r, 0.0, 0.0, pt))
}

fn box_events<'a>(r_box: f64) -> [EventSpec<'a>; 2] {
    [
        EventSpec::new(move |x: &PhasePoint| x.r - r_box).direction(1).terminal(),
        EventSpec::new(|x: &PhasePoint| x.r - 0.5).direction(-1).terminal(),
    ]
}

/// Residual p_r at the first θ turning point and the quarter period.
pub fn shoot_inner(e: f64, p: &ModelParams, r: f64, s: &OrbitSettings) -> Result<(f64, f64)> {
    let x0 = start_point(r, e, p)?;
    let [b0, b1] = box_events(s.r_box);
    let events = [EventSpec::new(|x: &PhasePoint| x.p_theta).direction(-1).terminal(), b0, b1];
    let run = integrate::run_events(&x0, p, &events, 200.0, &s.tol.without_drift_check())?;
    match run.stopped_by {
        Some(0) => Ok((run.y_final[2], run.t_final)),
        Some(1) => Err(Error::OutOfBox(format!("libration shot from r = {r} left r < {}", s.r_box))),
        Some(_) => Err(Error::Domain(format!("libration shot from r = {r} collided"))),
        None => Err(Error::NoConvergence(format!("no θ turning point from r = {r}"))),
    }
}

/// Residual p_r at θ = π/2 and the quarter period.
pub fn shoot_rotating(e: f64, p: &ModelParams, r: f64, s: &OrbitSettings) -> Result<(f64, f64)> {
    let x0 = start_point(r, e, p)?;
    let [b0, b1] = box_events(s.r_box * 1.5);
    let events = [
        EventSpec::new(|x: &PhasePoint| x.theta - FRAC_PI_2).direction(1).terminal(),
        EventSpec::new(|x: &PhasePoint| x.p_theta).direction(-1).terminal(),
        b0,
        b1,
    ];
    let run = integrate::run_events(&x0, p, &events, 5000.0, &s.tol.without_drift_check())?;
    match run.stopped_by {
        Some(0) => Ok((run.y_final[2], run.t_final)),
        Some(1) => Err(Error::NoConvergence(format!("rotation shot from r = {r} turned back"))),
        Some(2) => Err(Error::OutOfBox(format!("rotation shot from r = {r} left the box"))),
        Some(_) => Err(Error::Domain(format!("rotation shot from r = {r} collided"))),
        None => Err(Error::NoConvergence(format!("rotation shot from r = {r} never reached π/2"))),
    }
}

type Shooter = fn(f64, &ModelParams, f64, &OrbitSettings) -> Result<(f64, f64)>;

fn shooter(f: Family) -> Shooter {
    match f {
        Family::Inner => shoot_inner,
        _ => shoot_rotating,
    }
}

/// Root of the shooting residual: (r, quarter period).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingRoot {
    pub r: f64,
    pub quarter: f64,
}

/// All verified shooting roots on [lo, hi] found from `n` samples.
pub fn scan_roots(family: Family, e: f64, p: &ModelParams, lo: f64, hi: f64, n: usize, s: &OrbitSettings) -> Vec<ShootingRoot> {
    let shoot = shooter(family);
    let n = n.max(2);
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<Option<f64>> = xs.iter().map(|&r| shoot(e, p, r, s).ok().map(|v| v.0)).collect();
    let mut roots = Vec::new();
    for i in 0..n - 1 {
        let (Some(va), Some(vb)) = (vals[i], vals[i + 1]) else { continue };
        if va.signum() == vb.signum() {
            continue;
        }
        let f = |r: f64| shoot(e, p, r, s).map(|v| v.0).unwrap_or(f64::NAN);
        let Ok(r) = brent(f, xs[i], xs[i + 1], s.r_tol, 200) else { continue };
        if let Ok((res, q)) = shoot(e, p, r, s) {
            // Discontinuities of the residual also change sign; keep true zeros only.
            if res.abs() < 1e-7 {
                roots.push(ShootingRoot { r, quarter: q });
            }
        }
    }
    roots
}

/// Root nearest to `r_guess` within ±`window`.
pub fn nearest_root(
    family: Family,
    e: f64,
    p: &ModelParams,
    r_guess: f64,
    window: f64,
    s: &OrbitSettings,
) -> Result<ShootingRoot> {
    let lo = (r_guess - window).max(0.6);
    let roots = scan_roots(family, e, p, lo, r_guess + window, 9, s);
    roots
        .into_iter()
        .min_by(|a, b| (a.r - r_guess).abs().total_cmp(&(b.r - r_guess).abs()))
        .ok_or_else(|| {
            Error::NoConvergence(format!(
                "no {} orbit within [{lo:.6}, {:.6}] at E = {e}, m = {}, a = {}",
                family.name(),
                r_guess + window,
                p.m,
                p.a
            ))
        })
}

/// Builds the full orbit record from a shooting root.
const MONODROMY_SEGMENTS: usize = 8;

fn frame_product(a: &Frame, b: &Frame) -> Frame {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn assemble(family: Family, e: f64, p: &ModelParams, root: ShootingRoot, s: &OrbitSettings) -> Result<PeriodicOrbit> {
    let anchor = start_point(root.r, e, p)?;
    let (period, reduced) = if family.rotating() {
        (4.0 * root.quarter, 2.0 * root.quarter)
    } else {
        (4.0 * root.quarter, 4.0 * root.quarter)
    };
    let tol = s.tol.without_drift_check();
    // Product of segment maps, each started from the identity, keeps the
    // tangent error relative to the local growth rather than the full multiplier.
    let mut end = anchor;
    let mut monodromy = identity_frame();
    let mut segment_det = 1.0;
    for k in 0..MONODROMY_SEGMENTS {
        let (t0, t1) = (reduced * k as f64 / MONODROMY_SEGMENTS as f64, reduced * (k + 1) as f64 / MONODROMY_SEGMENTS as f64);
        let run = run_system(tangent_rhs(p), p, t0, pack_tangent(&end, &identity_frame()), t1, &tol, &[], RunOptions::quiet())?;
        let (next, seg) = unpack_tangent(&run.y_final);
        monodromy = frame_product(&seg, &monodromy);
        segment_det *= det4(&seg);
        end = next;
    }
    let shift = if family.rotating() { PI } else { 0.0 };
    let closure = [end.r - anchor.r, end.theta - shift - anchor.theta, end.p_r - anchor.p_r, end.p_theta - anchor.p_theta]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let act = run_system(action_rhs(p), p, 0.0, [anchor.r, anchor.theta, anchor.p_r, anchor.p_theta, 0.0], reduced, &tol, &[], RunOptions::quiet())?;
    let action = act.y_final[4] * if family.rotating() { 2.0 } else { 1.0 };

    let multipliers = nontrivial_pair(&monodromy);
    let stability = classify_pair(&multipliers, s.degenerate_tol);
    Ok(PeriodicOrbit {
        family,
        energy: e,
        params: *p,
        anchor,
        period,
        reduced_period: reduced,
        monodromy,
        segment_det,
        stability,
        multipliers,
        action,
        orientation: 1,
        closure,
    })
}

/// Inner libration delimiting the θ = 0 well.
///
/// Without a guess the whole scan window is searched and the outermost root
/// with a quarter period below `inner_quarter_max` is taken.
pub fn find_inner(e: f64, p: &ModelParams, r_guess: Option<f64>, s: &OrbitSettings) -> Result<PeriodicOrbit> {
    let root = match r_guess {
        Some(g) => nearest_root(Family::Inner, e, p, g, 0.05, s)?,
        None => {
            let roots = scan_roots(Family::Inner, e, p, s.inner_scan.0, s.inner_scan.1, s.scan_points, s);
            roots
                .into_iter()
                .filter(|r| r.quarter <= s.inner_quarter_max)
                .max_by(|a, b| a.r.total_cmp(&b.r))
                .ok_or_else(|| Error::NoRoot(format!("no well-delimiting libration at E = {e}, m = {}, a = {}", p.m, p.a)))?
        }
    };
    assemble(Family::Inner, e, p, root, s)
}

/// Middle rotating orbit: innermost rotating orbit outside the inner one.
pub fn find_middle(e: f64, p: &ModelParams, r_guess: Option<f64>, s: &OrbitSettings) -> Result<PeriodicOrbit> {
    if e <= 0.0 {
        return Err(Error::InvalidParameter(format!("middle orbits need E > 0, got {e}")));
    }
    let root = match r_guess {
        Some(g) => nearest_root(Family::Middle, e, p, g, 0.05, s)?,
        None => {
            let (r_po, _) = model::reduced_orbit_for_energy(e, p, s.r_box)?;
            let lo = p.r_e + 0.3;
            let hi = (0.8 * r_po).max(lo + 1.0);
            let n = (((hi - lo) / 0.05) as usize).clamp(40, 400);
            scan_roots(Family::Middle, e, p, lo, hi, n, s)
                .into_iter()
                .min_by(|a, b| a.r.total_cmp(&b.r))
                .ok_or_else(|| Error::NoRoot(format!("no middle orbit at E = {e}, m = {}, a = {}", p.m, p.a)))?
        }
    };
    assemble(Family::Middle, e, p, root, s)
}

/// Outer rotating orbit seeded from the reduced relative equilibrium.
pub fn find_outer(e: f64, p: &ModelParams, s: &OrbitSettings) -> Result<PeriodicOrbit> {
    if e <= 0.0 {
        return Err(Error::InvalidParameter(format!("outer orbits need E > 0, got {e}")));
    }
    let (r_po, _) = model::reduced_orbit_for_energy(e, p, s.r_box)?;
    let root = nearest_root(Family::Outer, e, p, r_po, 0.03 * r_po, s)?;
    assemble(Family::Outer, e, p, root, s)
}

/// Direct solve for a family, using `guess` for librations and middle orbits when given.
pub fn find(family: Family, e: f64, p: &ModelParams, guess: Option<f64>, s: &OrbitSettings) -> Result<PeriodicOrbit> {
    match family {
        Family::Inner => find_inner(e, p, guess, s),
        Family::Middle => find_middle(e, p, guess, s),
        Family::Outer => match guess {
            Some(g) => assemble(Family::Outer, e, p, nearest_root(Family::Outer, e, p, g, 0.01 * g, s)?, s),
            None => find_outer(e, p, s),
        },
    }
}

pub fn monodromy_and_stability(orbit: &PeriodicOrbit, s: &OrbitSettings) -> (Frame, Stability, [(f64, f64); 2]) {
    let pair = nontrivial_pair(&orbit.monodromy);
    (orbit.monodromy, classify_pair(&pair, s.degenerate_tol), pair)
}

/// Loop integral ∮ p·dq along the orbit starting from the phase `t0`.
pub fn orbit_action(orbit: &PeriodicOrbit, t0: f64, tol: &Tolerance) -> Result<f64> {
    let p = &orbit.params;
    let start = if t0 == 0.0 { orbit.anchor } else { PhasePoint::from_slice(&orbit.dense(tol)?.eval(t0)) };
    let run = run_system(
        action_rhs(p),
        p,
        0.0,
        [start.r, start.theta, start.p_r, start.p_theta, 0.0],
        orbit.period,
        &tol.without_drift_check(),
        &[],
        RunOptions::quiet(),
    )?;
    Ok(run.y_final[4])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Energy,
    Mass,
    Coupling,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Energy => "E",
            SweepParameter::Mass => "m",
            SweepParameter::Coupling => "a",
        }
    }

    pub fn default_step(self) -> f64 {
        match self {
            SweepParameter::Energy => 0.05,
            SweepParameter::Mass => 0.1,
            SweepParameter::Coupling => 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub end: f64,
    pub step: f64,
    pub min_step: f64,
}

impl Sweep {
    pub fn new(parameter: SweepParameter, end: f64) -> Self {
        Self { parameter, end, step: parameter.default_step(), min_step: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    /// Solutions lost below the minimum step: a fold or the family ceasing to exist.
    Lost { last: f64, failed_at: f64, reason: String },
    OutOfBox { last: f64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bifurcation {
    /// Parameter bracket of a sign change of λ + 1/λ ∓ 2.
    pub lo: f64,
    pub hi: f64,
    /// −1 for a multiplier passing through −1, +1 for +1.
    pub kind: i8,
}

#[derive(Clone, Debug)]
pub struct OrbitFamily {
    pub family: Family,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub members: Vec<PeriodicOrbit>,
    pub bifurcations: Vec<Bifurcation>,
    pub termination: Termination,
}

fn param_value(o: &PeriodicOrbit, sp: SweepParameter) -> f64 {
    match sp {
        SweepParameter::Energy => o.energy,
        SweepParameter::Mass => o.params.m,
        SweepParameter::Coupling => o.params.a,
    }
}

fn at_value(o: &PeriodicOrbit, sp: SweepParameter, v: f64) -> (f64, ModelParams) {
    match sp {
        SweepParameter::Energy => (v, o.params),
        SweepParameter::Mass => (o.energy, o.params.with_mass(v)),
        SweepParameter::Coupling => (o.energy, o.params.with_coupling(v)),
    }
}

/// Natural-parameter continuation with step halving on failure.
pub fn continue_family(seed: &PeriodicOrbit, sweep: &Sweep, s: &OrbitSettings) -> OrbitFamily {
    let sp = sweep.parameter;
    let start = param_value(seed, sp);
    let dir = if sweep.end >= start { 1.0 } else { -1.0 };
    let mut members = vec![seed.clone()];
    let mut step = sweep.step.abs();
    let mut termination = Termination::Completed;
    loop {
        let last = members.last().unwrap();
        let v0 = param_value(last, sp);
        if dir * (sweep.end - v0) <= 1e-12 {
            break;
        }
        let v = if dir * (v0 + dir * step - sweep.end) > 0.0 { sweep.end } else { v0 + dir * step };
        let (e, p) = at_value(last, sp, v);
        let prev_jump = match members.len() {
            n if n >= 2 => (last.anchor.r - members[n - 2].anchor.r).abs(),
            _ => 0.0,
        };
        let window = (0.02 + 0.5 * prev_jump).min(0.2 * last.anchor.r);
        let result = nearest_root(seed.family, e, &p, last.anchor.r, window, s)
            .and_then(|root| {
                let jump = (root.r - last.anchor.r).abs();
                if jump > window {
                    Err(Error::NoConvergence(format!("root jumped by {jump}")))
                } else {
                    Ok(root)
                }
            })
            .and_then(|root| assemble(seed.family, e, &p, root, s));
        match result {
            Ok(o) => {
                members.push(o);
                step = (step * 1.5).min(sweep.step.abs());
            }
            Err(Error::OutOfBox(reason)) => {
                termination = Termination::OutOfBox { last: v0, reason };
                break;
            }
            Err(err) => {
                step *= 0.5;
                if step < sweep.min_step {
                    termination = Termination::Lost { last: v0, failed_at: v, reason: err.to_string() };
                    break;
                }
            }
        }
    }
    let mut bifurcations = Vec::new();
    for w in members.windows(2) {
        for kind in [-1i8, 1] {
            let f0 = w[0].pair_sum() - 2.0 * kind as f64;
            let f1 = w[1].pair_sum() - 2.0 * kind as f64;
            if f0.signum() != f1.signum() {
                bifurcations.push(Bifurcation { lo: param_value(&w[0], sp), hi: param_value(&w[1], sp), kind });
            }
        }
    }
    let values = members.iter().map(|o| param_value(o, sp)).collect();
    OrbitFamily { family: seed.family, parameter: sp, values, members, bifurcations, termination }
}

/// Refines a multiplier crossing of λ + 1/λ = 2·kind inside [lo, hi] to width `dx`.
pub fn refine_bifurcation(seed: &PeriodicOrbit, sp: SweepParameter, b: &Bifurcation, dx: f64, s: &OrbitSettings) -> Result<f64> {
    let target = 2.0 * b.kind as f64;
    let mut guess = seed.anchor.r;
    let mut eval = |v: f64| -> Result<f64> {
        let (e, p) = at_value(seed, sp, v);
        let root = nearest_root(seed.family, e, &p, guess, 0.05, s)?;
        guess = root.r;
        Ok(assemble(seed.family, e, &p, root, s)?.pair_sum() - target)
    };
    let (mut lo, mut hi) = (b.lo, b.hi);
    let mut flo = eval(lo)?;
    while (hi - lo).abs() > dx {
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl OrbitFamily {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "family,E,m,a,r_anchor,p_theta_anchor,period,action,lambda_max,stability")?;
        for o in &self.members {
            write_orbit_row(&mut w, o)?;
        }
        Ok(())
    }
}

pub fn write_orbit_row<W: Write>(w: &mut W, o: &PeriodicOrbit) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{},{:.12},{:.12},{:.10},{:.10},{:.8e},{}",
        o.family.name(),
        o.energy,
        o.params.m,
        o.params.a,
        o.anchor.r,
        o.anchor.p_theta,
        o.period,
        o.action,
        o.leading_multiplier(),
        match o.stability {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Degenerate => "degenerate",
        }
    )?;
    Ok(())
}
