//! Adaptive Dormand–Prince 8(5,3) integration with dense output, event
//! localisation and tangent-flow propagation.

mod tableau;

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams, PhasePoint};

use tableau::{A, B, C, D, E3, E5, STAGES, STAGES_EXT};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
/// Crossings whose rate of change is below this are treated as tangencies.
pub const GRAZING_RATE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Relative energy drift allowed on accepted output; `None` disables the check.
    #[serde(with = "budget_serde")]
    pub drift_budget: Option<f64>,
}

// TOML has no null, so a disabled check is written as "off".
mod budget_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Value(f64),
        Off(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => Repr::Value(*x).serialize(s),
            None => Repr::Off("off".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Value(x) => Ok(Some(x)),
            Repr::Off(s) if s == "off" => Ok(None),
            Repr::Off(s) => Err(serde::de::Error::custom(format!("expected a number or \"off\", got {s:?}"))),
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-13, max_step: f64::INFINITY, max_steps: 5_000_000, drift_budget: Some(1e-10) }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn without_drift_check(mut self) -> Self {
        self.drift_budget = None;
        self
    }
}

/// One accepted step with its 7th-order interpolant.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t_old: f64,
    pub t_new: f64,
    y_old: [f64; N],
    coeffs: [[f64; N]; 7],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t_new - self.t_old;
        let x = (t - self.t_old) / h;
        let mut y = [0.0; N];
        for (i, f) in self.coeffs.iter().rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for k in 0..N {
                y[k] = (y[k] + f[k]) * w;
            }
        }
        for k in 0..N {
            y[k] += self.y_old[k];
        }
        y
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t_new >= self.t_old { (self.t_old, self.t_new) } else { (self.t_new, self.t_old) };
        t >= lo && t <= hi
    }
}

/// Piecewise dense solution over a whole run.
#[derive(Clone, Debug, Default)]
pub struct DenseSolution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.t_old)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t_new)
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let forward = self.t_end() >= self.t_start();
        let idx = self.steps.partition_point(|s| if forward { s.t_new < t } else { s.t_new > t });
        let idx = idx.min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }
}

/// Dormand–Prince 8(5,3) stepper following the Hairer–Wanner error norm.
pub struct Dop853<const N: usize, F> {
    f: F,
    pub t: f64,
    pub y: [f64; N],
    fy: [f64; N],
    h_abs: f64,
    dir: f64,
    t_bound: f64,
    tol: Tolerance,
    pub nfev: usize,
    pub nsteps: usize,
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]> Dop853<N, F> {
    pub fn new(mut f: F, t0: f64, y0: [f64; N], t_bound: f64, tol: Tolerance) -> Result<Self> {
        tol.validate()?;
        if !all_finite(&y0) {
            return Err(Error::NonFinite("initial state".into()));
        }
        let fy = f(t0, &y0);
        if !all_finite(&fy) {
            return Err(Error::NonFinite("vector field at initial state".into()));
        }
        let dir = if t_bound >= t0 { 1.0 } else { -1.0 };
        let mut s = Self { f, t: t0, y: y0, fy, h_abs: 0.0, dir, t_bound, tol, nfev: 1, nsteps: 0 };
        s.h_abs = s.initial_step().min(tol.max_step);
        Ok(s)
    }

    fn initial_step(&mut self) -> f64 {
        if self.t_bound == self.t {
            return 0.0;
        }
        let mut scale = [0.0; N];
        for k in 0..N {
            scale[k] = self.tol.atol + self.y[k].abs() * self.tol.rtol;
        }
        let d0 = rms(&std::array::from_fn::<f64, N, _>(|k| self.y[k] / scale[k]));
        let d1 = rms(&std::array::from_fn::<f64, N, _>(|k| self.fy[k] / scale[k]));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min((self.t_bound - self.t).abs());
        let y1: [f64; N] = std::array::from_fn(|k| self.y[k] + h0 * self.dir * self.fy[k]);
        let f1 = (self.f)(self.t + h0 * self.dir, &y1);
        self.nfev += 1;
        if !all_finite(&f1) {
            return h0 * 1e-3;
        }
        let d2 = rms(&std::array::from_fn::<f64, N, _>(|k| (f1[k] - self.fy[k]) / scale[k])) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1)
    }

    pub fn done(&self) -> bool {
        self.dir * (self.t - self.t_bound) >= 0.0
    }

    /// Advances one accepted step and returns its dense interpolant.
    pub fn step(&mut self) -> Result<DenseStep<N>> {
        self.step_guarded(None)
    }

    /// One step that is also rejected when it changes `invariant` by more than
    /// `max_change`. The embedded error estimate occasionally passes a step that
    /// is far too long at sharp turning points; conserved quantities catch those.
    /// The guard gives up after a few halvings so round-off cannot stall it.
    pub fn step_guarded(&mut self, guard: Option<(&dyn Fn(&[f64; N]) -> f64, f64)>) -> Result<DenseStep<N>> {
        if self.nsteps >= self.tol.max_steps {
            return Err(Error::Budget(format!("{} steps at t = {}", self.nsteps, self.t)));
        }
        let min_step = 10.0 * f64::EPSILON * self.t.abs().max(1e-300);
        let mut h_abs = self.h_abs.min(self.tol.max_step).max(min_step);
        let mut rejected = false;
        let mut guard_rejects = 0;
        let mut k = [[0.0; N]; STAGES_EXT];
        loop {
            if h_abs < min_step || !h_abs.is_finite() {
                let mut state = [0.0; 4];
                state.copy_from_slice(&self.y[..4.min(N)]);
                return Err(Error::StepUnderflow { t: self.t, state });
            }
            let mut h = h_abs * self.dir;
            let mut t_new = self.t + h;
            if self.dir * (t_new - self.t_bound) > 0.0 {
                t_new = self.t_bound;
            }
            h = t_new - self.t;
            h_abs = h.abs();

            k[0] = self.fy;
            let mut ok = true;
            for s in 1..STAGES {
                let mut ys = self.y;
                for j in 0..s {
                    let a = A[s][j];
                    if a != 0.0 {
                        for q in 0..N {
                            ys[q] += h * a * k[j][q];
                        }
                    }
                }
                k[s] = (self.f)(self.t + C[s] * h, &ys);
                if !all_finite(&k[s]) {
                    ok = false;
                    break;
                }
            }
            self.nfev += STAGES - 1;
            if !ok {
                h_abs *= 0.25;
                rejected = true;
                continue;
            }
            let mut y_new = self.y;
            for j in 0..STAGES {
                if B[j] != 0.0 {
                    for q in 0..N {
                        y_new[q] += h * B[j] * k[j][q];
                    }
                }
            }
            let f_new = (self.f)(t_new, &y_new);
            self.nfev += 1;
            if !all_finite(&y_new) || !all_finite(&f_new) {
                h_abs *= 0.25;
                rejected = true;
                continue;
            }
            k[STAGES] = f_new;

            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for q in 0..N {
                let sc = self.tol.atol + self.y[q].abs().max(y_new[q].abs()) * self.tol.rtol;
                let mut a5 = 0.0;
                let mut a3 = 0.0;
                for j in 0..=STAGES {
                    a5 += k[j][q] * E5[j];
                    a3 += k[j][q] * E3[j];
                }
                e5 += (a5 / sc) * (a5 / sc);
                e3 += (a3 / sc) * (a3 / sc);
            }
            let err = if e5 == 0.0 && e3 == 0.0 {
                0.0
            } else {
                h_abs * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
            };

            if err < 1.0 {
                if let Some((inv, max_change)) = guard {
                    if guard_rejects < 6 && (inv(&y_new) - inv(&self.y)).abs() > max_change {
                        guard_rejects += 1;
                        h_abs *= 0.5;
                        rejected = true;
                        continue;
                    }
                }
                let mut factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-1.0 / 8.0)).min(MAX_FACTOR) };
                if rejected {
                    factor = factor.min(1.0);
                }
                let dense = self.dense(&mut k, h, t_new, &y_new);
                self.h_abs = h_abs * factor;
                self.t = t_new;
                self.y = y_new;
                self.fy = f_new;
                self.nsteps += 1;
                return Ok(dense);
            }
            h_abs *= (SAFETY * err.powf(-1.0 / 8.0)).max(MIN_FACTOR);
            rejected = true;
        }
    }

    fn dense(&mut self, k: &mut [[f64; N]; STAGES_EXT], h: f64, t_new: f64, y_new: &[f64; N]) -> DenseStep<N> {
        for s in STAGES + 1..STAGES_EXT {
            let mut ys = self.y;
            for j in 0..s {
                let a = A[s][j];
                if a != 0.0 {
                    for q in 0..N {
                        ys[q] += h * a * k[j][q];
                    }
                }
            }
            k[s] = (self.f)(self.t + C[s] * h, &ys);
        }
        self.nfev += STAGES_EXT - STAGES - 1;
        let mut coeffs = [[0.0; N]; 7];
        for q in 0..N {
            let dy = y_new[q] - self.y[q];
            coeffs[0][q] = dy;
            coeffs[1][q] = h * self.fy[q] - dy;
            coeffs[2][q] = 2.0 * dy - h * (k[STAGES][q] + self.fy[q]);
            for (r, drow) in D.iter().enumerate() {
                let mut acc = 0.0;
                for j in 0..STAGES_EXT {
                    acc += drow[j] * k[j][q];
                }
                coeffs[3 + r][q] = h * acc;
            }
        }
        DenseStep { t_old: self.t, t_new, y_old: self.y, coeffs }
    }
}

type StateFn<'a> = Box<dyn Fn(&PhasePoint) -> f64 + Send + Sync + 'a>;

/// Scalar event on phase space with a crossing-direction filter.
pub struct EventSpec<'a> {
    pub function: StateFn<'a>,
    /// Analytic time derivative of `function` along the flow; estimated from the
    /// dense output when absent.
    pub rate: Option<StateFn<'a>>,
    /// Required sign of the time derivative at the crossing (0 accepts both).
    pub direction: i8,
    pub terminal: bool,
    /// Number of qualifying crossings to record; `None` records all.
    pub max_count: Option<usize>,
}

impl<'a> EventSpec<'a> {
    pub fn new(function: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'a) -> Self {
        Self { function: Box::new(function), rate: None, direction: 0, terminal: false, max_count: None }
    }

    pub fn with_rate(mut self, rate: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'a) -> Self {
        self.rate = Some(Box::new(rate));
        self
    }

    pub fn direction(mut self, d: i8) -> Self {
        self.direction = d;
        self
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn max_count(mut self, n: usize) -> Self {
        self.max_count = Some(n);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub event: usize,
    pub t: f64,
    pub point: PhasePoint,
    /// d(event)/dt at the crossing in forward time.
    pub rate: f64,
    pub grazing: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&PhasePoint> {
        self.states.last()
    }

    pub fn write_csv<W: Write>(&self, params: &ModelParams, mut w: W) -> Result<()> {
        writeln!(w, "t,r,theta,p_r,p_theta,H")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let h = model::kinetic(s, params) + model::potential_parts(s.r, s.theta, params)[0];
            writeln!(w, "{t:.12e},{:.15e},{:.15e},{:.15e},{:.15e},{h:.15e}", s.r, s.theta, s.p_r, s.p_theta)?;
        }
        Ok(())
    }
}

/// Full output of an event-monitored run.
#[derive(Clone, Debug)]
pub struct Run<const N: usize> {
    pub trajectory: Trajectory,
    pub crossings: Vec<Crossing>,
    /// Index of the terminal event that stopped the run.
    pub stopped_by: Option<usize>,
    pub t_final: f64,
    pub y_final: [f64; N],
    pub dense: Option<DenseSolution<N>>,
    pub nfev: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub record_states: bool,
    pub keep_dense: bool,
    /// Interior samples per step used to detect sign changes.
    pub event_samples: usize,
}

impl RunOptions {
    pub fn quiet() -> Self {
        Self { record_states: false, keep_dense: false, event_samples: 4 }
    }

    pub fn recording() -> Self {
        Self { record_states: true, keep_dense: false, event_samples: 4 }
    }

    pub fn dense() -> Self {
        Self { record_states: false, keep_dense: true, event_samples: 4 }
    }
}

fn point_of<const N: usize>(y: &[f64; N]) -> PhasePoint {
    PhasePoint::from_slice(&y[..4])
}

fn energy_of(y: &[f64], p: &ModelParams) -> f64 {
    let x = PhasePoint::from_slice(&y[..4]);
    model::kinetic(&x, p) + model::potential_parts(x.r, x.theta, p)[0]
}

/// Integrates any system whose first four components are a phase point,
/// monitoring events and the energy of those four components.
pub fn run_system<const N: usize, F>(
    f: F,
    params: &ModelParams,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerance,
    events: &[EventSpec<'_>],
    opts: RunOptions,
) -> Result<Run<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let e0 = energy_of(&y0, params);
    let e_scale = e0.abs().max(1.0);
    let mut solver = Dop853::new(f, t0, y0, t_end, *tol)?;
    let mut traj = Trajectory::default();
    if opts.record_states {
        traj.times.push(t0);
        traj.states.push(point_of(&y0));
    }
    let mut dense = opts.keep_dense.then(DenseSolution::default);
    let mut crossings = Vec::new();
    let mut counts = vec![0usize; events.len()];
    let mut stopped_by = None;
    let samples = opts.event_samples.max(1);
    let mut drift: f64 = 0.0;

    let energy = |y: &[f64; N]| energy_of(y, params);
    let max_jump = 1e-11_f64.max(10.0 * tol.rtol) * e_scale;
    while !solver.done() {
        let step = solver.step_guarded(Some((&energy, max_jump)))?;
        let d = (energy_of(&solver.y, params) - e0).abs() / e_scale;
        drift = drift.max(d);
        let mut stop_at: Option<(f64, usize)> = None;

        if !events.is_empty() {
            let h = step.t_new - step.t_old;
            let ts: Vec<f64> = (0..=samples).map(|i| step.t_old + h * i as f64 / samples as f64).collect();
            let ys: Vec<[f64; N]> = ts.iter().map(|&t| if t == step.t_new { solver.y } else { step.eval(t) }).collect();
            for (ei, ev) in events.iter().enumerate() {
                if let Some(mx) = ev.max_count {
                    if counts[ei] >= mx && !ev.terminal {
                        continue;
                    }
                }
                let gs: Vec<f64> = ys.iter().map(|y| (ev.function)(&point_of(y))).collect();
                for i in 0..samples {
                    let (ga, gb) = (gs[i], gs[i + 1]);
                    let changes = (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0);
                    if !changes {
                        continue;
                    }
                    let g = |t: f64| (ev.function)(&point_of(&step.eval(t)));
                    let (lo, hi) = (ts[i], ts[i + 1]);
                    let tc = if gb == 0.0 {
                        hi
                    } else {
                        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
                        model::brent(g, a, b, 1e-15 * (1.0 + a.abs()), 200)?
                    };
                    if (tc - t0).abs() <= 1e-12 * (1.0 + t0.abs()) {
                        continue;
                    }
                    if let Some((ts_, _)) = stop_at {
                        if solver_dir(t0, t_end) * (tc - ts_) >= 0.0 {
                            continue;
                        }
                    }
                    let yc = step.eval(tc);
                    let pc = point_of(&yc);
                    let rate = match &ev.rate {
                        Some(r) => r(&pc),
                        None => {
                            let dt = 1e-7 * h.abs().max(1e-12);
                            let gp = (ev.function)(&point_of(&step.eval(tc + dt)));
                            let gm = (ev.function)(&point_of(&step.eval(tc - dt)));
                            (gp - gm) / (2.0 * dt)
                        }
                    };
                    let grazing = rate.abs() < GRAZING_RATE;
                    let qualifies = !grazing
                        && match ev.direction {
                            0 => true,
                            d => (d as f64) * rate > 0.0,
                        };
                    if grazing {
                        crossings.push(Crossing { event: ei, t: tc, point: pc, rate, grazing: true });
                        continue;
                    }
                    if !qualifies {
                        continue;
                    }
                    let room = ev.max_count.map_or(true, |mx| counts[ei] < mx);
                    if room {
                        counts[ei] += 1;
                        crossings.push(Crossing { event: ei, t: tc, point: pc, rate, grazing: false });
                    }
                    if ev.terminal && ev.max_count.map_or(true, |mx| counts[ei] >= mx) {
                        stop_at = Some((tc, ei));
                        break;
                    }
                }
            }
        }

        if let Some((tc, ei)) = stop_at {
            // Drop crossings recorded past the terminal time inside this step.
            let dir = solver_dir(t0, t_end);
            crossings.retain(|c| dir * (c.t - tc) <= 0.0);
            let yc = step.eval(tc);
            if opts.record_states {
                traj.times.push(tc);
                traj.states.push(point_of(&yc));
            }
            if let Some(d) = dense.as_mut() {
                d.steps.push(step.clone());
            }
            stopped_by = Some(ei);
            traj.energy_drift = drift;
            check_drift(tol, drift)?;
            return Ok(Run {
                trajectory: traj,
                crossings,
                stopped_by,
                t_final: tc,
                y_final: yc,
                dense,
                nfev: solver.nfev,
            });
        }
        if opts.record_states {
            traj.times.push(solver.t);
            traj.states.push(point_of(&solver.y));
        }
        if let Some(d) = dense.as_mut() {
            d.steps.push(step);
        }
    }
    traj.energy_drift = drift;
    check_drift(tol, drift)?;
    Ok(Run { trajectory: traj, crossings, stopped_by, t_final: solver.t, y_final: solver.y, dense, nfev: solver.nfev })
}

fn solver_dir(t0: f64, t1: f64) -> f64 {
    if t1 >= t0 {
        1.0
    } else {
        -1.0
    }
}

fn check_drift(tol: &Tolerance, drift: f64) -> Result<()> {
    match tol.drift_budget {
        Some(b) if drift > b => Err(Error::EnergyDrift { drift, budget: b }),
        _ => Ok(()),
    }
}

/// Hamiltonian flow of the model.
pub fn model_rhs(params: &ModelParams) -> impl FnMut(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |_, y| model::field(y, params)
}

/// State plus a 4×4 tangent frame stored column-major after the state.
pub fn tangent_rhs(params: &ModelParams) -> impl FnMut(f64, &[f64; 20]) -> [f64; 20] + '_ {
    move |_, y| {
        let s = [y[0], y[1], y[2], y[3]];
        let f = model::field(&s, params);
        let j = model::jacobian_raw(&s, params);
        let mut out = [0.0; 20];
        out[..4].copy_from_slice(&f);
        for c in 0..4 {
            let v = &y[4 + 4 * c..8 + 4 * c];
            for i in 0..4 {
                out[4 + 4 * c + i] = j[i][0] * v[0] + j[i][1] * v[1] + j[i][2] * v[2] + j[i][3] * v[3];
            }
        }
        out
    }
}

/// State plus the running action ∫ p·q̇ dt.
pub fn action_rhs(params: &ModelParams) -> impl FnMut(f64, &[f64; 5]) -> [f64; 5] + '_ {
    move |_, y| {
        let s = [y[0], y[1], y[2], y[3]];
        let f = model::field(&s, params);
        [f[0], f[1], f[2], f[3], y[2] * f[0] + y[3] * f[1]]
    }
}

fn check_start(x: &PhasePoint) -> Result<()> {
    if !(x.r > 0.0) {
        return Err(Error::Domain(format!("start radius must be positive, got {}", x.r)));
    }
    Ok(())
}

/// Propagates from `start` over `t_span = (t0, t1)` recording every accepted step.
pub fn propagate(start: &PhasePoint, params: &ModelParams, t_span: (f64, f64), tol: &Tolerance) -> Result<Trajectory> {
    check_start(start)?;
    let run = run_system(model_rhs(params), params, t_span.0, start.to_array(), t_span.1, tol, &[], RunOptions::recording())?;
    Ok(run.trajectory)
}

/// Propagates from t = 0 to `t_max` (negative for backward runs) with event monitoring.
pub fn propagate_with_events(
    start: &PhasePoint,
    params: &ModelParams,
    events: &[EventSpec<'_>],
    t_max: f64,
    tol: &Tolerance,
) -> Result<(Trajectory, Vec<Crossing>)> {
    check_start(start)?;
    let run = run_system(model_rhs(params), params, 0.0, start.to_array(), t_max, tol, events, RunOptions::recording())?;
    Ok((run.trajectory, run.crossings))
}

/// Event-monitored run without storing intermediate states.
pub fn run_events(
    start: &PhasePoint,
    params: &ModelParams,
    events: &[EventSpec<'_>],
    t_max: f64,
    tol: &Tolerance,
) -> Result<Run<4>> {
    check_start(start)?;
    run_system(model_rhs(params), params, 0.0, start.to_array(), t_max, tol, events, RunOptions::quiet())
}

/// 4×4 matrix with `frame[i][j]` the i-th component of the j-th tangent vector.
pub type Frame = [[f64; 4]; 4];

pub fn pack_tangent(x: &PhasePoint, frame: &Frame) -> [f64; 20] {
    let mut y = [0.0; 20];
    y[..4].copy_from_slice(&x.to_array());
    for c in 0..4 {
        for i in 0..4 {
            y[4 + 4 * c + i] = frame[i][c];
        }
    }
    y
}

pub fn unpack_tangent(y: &[f64; 20]) -> (PhasePoint, Frame) {
    let mut frame = [[0.0; 4]; 4];
    for c in 0..4 {
        for i in 0..4 {
            frame[i][c] = y[4 + 4 * c + i];
        }
    }
    (PhasePoint::from_slice(&y[..4]), frame)
}

pub fn identity_frame() -> Frame {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Evolves the state and a tangent frame together; returns the final state and frame.
pub fn propagate_tangent(
    start: &PhasePoint,
    frame: &Frame,
    params: &ModelParams,
    t_span: (f64, f64),
    tol: &Tolerance,
) -> Result<(PhasePoint, Frame)> {
    check_start(start)?;
    let y0 = pack_tangent(start, frame);
    let run = run_system(tangent_rhs(params), params, t_span.0, y0, t_span.1, tol, &[], RunOptions::quiet())?;
    Ok(unpack_tangent(&run.y_final))
}

pub fn det4(m: &Frame) -> f64 {
    nalgebra::Matrix4::from_fn(|i, j| m[i][j]).determinant()
}
