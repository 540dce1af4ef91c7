//! Chesnavich CH4+ model: potential, Hamiltonian, equations of motion,
//! critical points and the far-field reduced system.
//!
//! Units are kcal/mol for energy, Å for length and u for mass. The induced
//! time unit is [`TIME_UNIT_FS`] femtoseconds.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Hydrogen mass in u.
pub const M_H: f64 = 1.007825;

/// One model time unit in femtoseconds: sqrt(u·Å² / (kcal/mol)).
pub const TIME_UNIT_FS: f64 = 48.888_821;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Free-atom mass (u).
    pub m: f64,
    /// Coupling range (Å⁻²).
    pub a: f64,
    pub m_ch3: f64,
    /// Moment of inertia of the CH3 rotor (u·Å²).
    pub inertia: f64,
    pub d_e: f64,
    pub r_e: f64,
    pub c1: f64,
    pub c2: f64,
    pub u_e: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            m: 1.007825,
            a: 1.0,
            m_ch3: 12.0,
            inertia: 2.373409,
            d_e: 47.0,
            r_e: 1.1,
            c1: 7.37,
            c2: 1.61,
            u_e: 55.0,
        }
    }
}

impl ModelParams {
    pub fn new(m: f64, a: f64) -> Result<Self> {
        let p = Self { m, a, ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("m", self.m),
            ("a", self.a),
            ("m_ch3", self.m_ch3),
            ("inertia", self.inertia),
            ("r_e", self.r_e),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if (self.c1 - 6.0).abs() < 1e-12 {
            return Err(Error::InvalidParameter("c1 must differ from 6".into()));
        }
        Ok(())
    }

    /// Reduced mass μ_m = m_CH3·m/(m_CH3 + m).
    #[inline]
    pub fn mu(&self) -> f64 {
        self.m_ch3 * self.m / (self.m_ch3 + self.m)
    }

    pub fn with_mass(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_coupling(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    fn k6(&self) -> f64 {
        4.0 * self.c2 - self.c1 * self.c2 + self.c1
    }

    fn k4(&self) -> f64 {
        (self.c1 - 6.0) * self.c2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    pub theta: f64,
    pub p_r: f64,
    pub p_theta: f64,
}

impl PhasePoint {
    pub fn new(r: f64, theta: f64, p_r: f64, p_theta: f64) -> Self {
        Self { r, theta, p_r, p_theta }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.r, self.theta, self.p_r, self.p_theta]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self { r: y[0], theta: y[1], p_r: y[2], p_theta: y[3] }
    }

    /// Same point with θ mapped into [−π, π).
    pub fn normalized(self) -> Self {
        Self { theta: wrap_angle(self.theta), ..self }
    }
}

/// Maps an angle into [−π, π).
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("r must be positive and finite, got {r}")))
    }
}

fn finite(v: f64, what: &str, r: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} at r = {r}")))
    }
}

/// Radial C–H potential and its first two r-derivatives.
#[inline]
pub fn radial_terms(r: f64, p: &ModelParams) -> (f64, f64, f64) {
    let x = r / p.r_e;
    let pre = p.d_e / (p.c1 - 6.0);
    let ex = 2.0 * (3.0 - p.c2) * (p.c1 * (1.0 - x)).exp();
    let (k6, k4) = (p.k6(), p.k4());
    let ix = 1.0 / x;
    let ix2 = ix * ix;
    let ix4 = ix2 * ix2;
    let ix6 = ix4 * ix2;
    let u = pre * (ex - k6 * ix6 - k4 * ix4);
    let du = pre / p.r_e * (-p.c1 * ex + 6.0 * k6 * ix6 * ix + 4.0 * k4 * ix4 * ix);
    let d2u = pre / (p.r_e * p.r_e) * (p.c1 * p.c1 * ex - 42.0 * k6 * ix6 * ix2 - 20.0 * k4 * ix6);
    (u, du, d2u)
}

/// Potential, gradient and Hessian without domain checks.
/// Returns (U, U_r, U_θ, U_rr, U_rθ, U_θθ).
#[inline]
pub fn potential_parts(r: f64, theta: f64, p: &ModelParams) -> [f64; 6] {
    let (u, du, d2u) = radial_terms(r, p);
    let d = r - p.r_e;
    let g = (-p.a * d * d).exp();
    let gp = -2.0 * p.a * d * g;
    let gpp = (4.0 * p.a * p.a * d * d - 2.0 * p.a) * g;
    let (s2, c2) = (2.0 * theta).sin_cos();
    let h = 0.5 * p.u_e * (1.0 - c2);
    [
        u + g * h,
        du + gp * h,
        p.u_e * g * s2,
        d2u + gpp * h,
        p.u_e * gp * s2,
        2.0 * p.u_e * g * c2,
    ]
}

pub fn potential(r: f64, theta: f64, p: &ModelParams) -> Result<f64> {
    check_r(r)?;
    finite(potential_parts(r, theta, p)[0], "potential", r)
}

pub fn potential_gradient(r: f64, theta: f64, p: &ModelParams) -> Result<(f64, f64)> {
    check_r(r)?;
    let q = potential_parts(r, theta, p);
    Ok((finite(q[1], "dU/dr", r)?, finite(q[2], "dU/dtheta", r)?))
}

/// Hessian entries (U_rr, U_rθ, U_θθ).
pub fn potential_hessian(r: f64, theta: f64, p: &ModelParams) -> Result<(f64, f64, f64)> {
    check_r(r)?;
    let q = potential_parts(r, theta, p);
    Ok((finite(q[3], "U_rr", r)?, finite(q[4], "U_rtheta", r)?, finite(q[5], "U_thetatheta", r)?))
}

/// Effective inverse inertia multiplying p_θ²/2.
#[inline]
pub fn inv_inertia(r: f64, p: &ModelParams) -> f64 {
    1.0 / p.inertia + 1.0 / (p.mu() * r * r)
}

#[inline]
pub fn kinetic(x: &PhasePoint, p: &ModelParams) -> f64 {
    0.5 * x.p_r * x.p_r / p.mu() + 0.5 * x.p_theta * x.p_theta * inv_inertia(x.r, p)
}

pub fn hamiltonian(x: &PhasePoint, p: &ModelParams) -> Result<f64> {
    Ok(kinetic(x, p) + potential(x.r, x.theta, p)?)
}

/// Unchecked vector field on a raw state, used by the integrators.
#[inline]
pub fn field(y: &[f64; 4], p: &ModelParams) -> [f64; 4] {
    let (r, th, pr, pt) = (y[0], y[1], y[2], y[3]);
    let mu = p.mu();
    let q = potential_parts(r, th, p);
    let mr2 = mu * r * r;
    [pr / mu, pt * (1.0 / p.inertia + 1.0 / mr2), pt * pt / (mr2 * r) - q[1], -q[2]]
}

pub fn vector_field(x: &PhasePoint, p: &ModelParams) -> Result<[f64; 4]> {
    check_r(x.r)?;
    let f = field(&x.to_array(), p);
    if f.iter().all(|v| v.is_finite()) {
        Ok(f)
    } else {
        Err(Error::NonFinite(format!("vector field at r = {}", x.r)))
    }
}

/// Jacobian of the vector field, row-major.
#[inline]
pub fn jacobian_raw(y: &[f64; 4], p: &ModelParams) -> [[f64; 4]; 4] {
    let (r, th, pt) = (y[0], y[1], y[3]);
    let mu = p.mu();
    let q = potential_parts(r, th, p);
    let mr3 = mu * r * r * r;
    [
        [0.0, 0.0, 1.0 / mu, 0.0],
        [-2.0 * pt / mr3, 0.0, 0.0, 1.0 / p.inertia + 1.0 / (mu * r * r)],
        [-3.0 * pt * pt / (mr3 * r) - q[3], -q[4], 0.0, 2.0 * pt / mr3],
        [-q[4], -q[5], 0.0, 0.0],
    ]
}

pub fn jacobian(x: &PhasePoint, p: &ModelParams) -> Result<[[f64; 4]; 4]> {
    check_r(x.r)?;
    Ok(jacobian_raw(&x.to_array(), p))
}

pub fn variational_field(x: &PhasePoint, v: &[f64; 4], p: &ModelParams) -> Result<[f64; 4]> {
    let j = jacobian(x, p)?;
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (0..4).map(|k| j[i][k] * v[k]).sum();
    }
    Ok(out)
}

/// p_r on the energy shell with the requested sign.
pub fn momentum_on_shell(r: f64, theta: f64, p_theta: f64, e: f64, sign: f64, p: &ModelParams) -> Result<f64> {
    let u = potential(r, theta, p)?;
    let k = e - u - 0.5 * p_theta * p_theta * inv_inertia(r, p);
    if k < 0.0 {
        return Err(Error::Forbidden(format!(
            "no kinetic energy left at r = {r}, theta = {theta}, p_theta = {p_theta} (deficit {})",
            -k
        )));
    }
    Ok(sign.signum() * (2.0 * p.mu() * k).sqrt())
}

/// p_θ ≥ 0 on the energy shell at given (r, θ, p_r).
pub fn angular_momentum_on_shell(r: f64, theta: f64, p_r: f64, e: f64, p: &ModelParams) -> Result<f64> {
    let u = potential(r, theta, p)?;
    let k = e - u - 0.5 * p_r * p_r / p.mu();
    if k < 0.0 {
        return Err(Error::Forbidden(format!("no kinetic energy left at r = {r}, theta = {theta}")));
    }
    Ok((2.0 * k / inv_inertia(r, p)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalLabel {
    Q0,
    Q1,
    Q2,
    Q1Tilde,
    Degenerate,
}

impl CriticalLabel {
    pub fn name(self) -> &'static str {
        match self {
            CriticalLabel::Q0 => "q0",
            CriticalLabel::Q1 => "q1",
            CriticalLabel::Q2 => "q2",
            CriticalLabel::Q1Tilde => "q1~",
            CriticalLabel::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub r: f64,
    pub theta: f64,
    pub energy: f64,
    /// Morse index; `None` when an eigenvalue is below the degeneracy tolerance.
    pub index: Option<u8>,
    pub label: CriticalLabel,
    /// +1 for the upper half plane representative (0 ≤ θ < π), −1 for its θ−π partner.
    pub half_plane: i8,
}

impl CriticalPoint {
    pub fn tag(&self) -> String {
        format!("{}{}", self.label.name(), if self.half_plane > 0 { "+" } else { "-" })
    }

    /// Partner under θ → θ − π.
    pub fn partner(&self) -> Self {
        Self { theta: self.theta - PI, half_plane: -self.half_plane, ..*self }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CriticalSearch {
    pub r_min: f64,
    pub r_max: f64,
    pub grid: usize,
    pub grad_tol: f64,
    pub degenerate_tol: f64,
    pub dedupe: f64,
}

impl Default for CriticalSearch {
    fn default() -> Self {
        Self { r_min: 0.9, r_max: 5.0, grid: 40, grad_tol: 1e-11, degenerate_tol: 1e-8, dedupe: 1e-6 }
    }
}

fn hessian_eigs(urr: f64, urt: f64, utt: f64) -> (f64, f64) {
    let tr = urr + utt;
    let det = urr * utt - urt * urt;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

/// Newton on ∇U = 0 starting from (r, θ).
pub fn newton_critical(r0: f64, th0: f64, p: &ModelParams, tol: f64) -> Option<(f64, f64)> {
    let (mut r, mut th) = (r0, th0);
    for _ in 0..60 {
        if !(r > 0.05) || !r.is_finite() {
            return None;
        }
        let q = potential_parts(r, th, p);
        let (gr, gt) = (q[1], q[2]);
        if (gr * gr + gt * gt).sqrt() < tol {
            return Some((r, th));
        }
        let det = q[3] * q[5] - q[4] * q[4];
        if det.abs() < 1e-300 {
            return None;
        }
        let dr = (q[5] * gr - q[4] * gt) / det;
        let dt = (-q[4] * gr + q[3] * gt) / det;
        let scale = (dr.abs() / 0.2).max(dt.abs() / 0.3).max(1.0);
        r -= dr / scale;
        th -= dt / scale;
    }
    let q = potential_parts(r, th, p);
    ((q[1] * q[1] + q[2] * q[2]).sqrt() < tol).then_some((r, th))
}

fn classify(r: f64, th: f64, p: &ModelParams, degenerate_tol: f64) -> CriticalPoint {
    let q = potential_parts(r, th, p);
    let (l1, l2) = hessian_eigs(q[3], q[4], q[5]);
    let index = if l1.abs() < degenerate_tol || l2.abs() < degenerate_tol {
        None
    } else {
        Some((l1 < 0.0) as u8 + (l2 < 0.0) as u8)
    };
    let label = match index {
        None => CriticalLabel::Degenerate,
        Some(0) => CriticalLabel::Q0,
        Some(1) if q[0] > 0.0 => CriticalLabel::Q1,
        Some(1) => CriticalLabel::Q1Tilde,
        _ => CriticalLabel::Q2,
    };
    CriticalPoint { r, theta: th, energy: q[0], index, label, half_plane: 1 }
}

/// Critical points with 0 ≤ θ < π in `search.r_min ≤ r ≤ search.r_max`, sorted by (θ, r).
pub fn find_critical_points_with(p: &ModelParams, search: &CriticalSearch) -> Result<Vec<CriticalPoint>> {
    let n = search.grid.max(4);
    let dr = (search.r_max - search.r_min) / (n - 1) as f64;
    let dt = PI / n as f64;
    let gnorm = |r: f64, t: f64| {
        let q = potential_parts(r, t, p);
        (q[1] * q[1] + q[2] * q[2]).sqrt()
    };
    let grid: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| gnorm(search.r_min + i as f64 * dr, j as f64 * dt)).collect()).collect();
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = grid[i][j];
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= n as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                    if grid[ii as usize][jj] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push((search.r_min + i as f64 * dr, j as f64 * dt));
            }
        }
    }
    let mut found: Vec<CriticalPoint> = Vec::new();
    let mut failures = 0;
    for &(r0, t0) in &seeds {
        let Some((r, th)) = newton_critical(r0, t0, p, search.grad_tol) else {
            failures += 1;
            continue;
        };
        let th = th.rem_euclid(PI);
        let th = if PI - th < 1e-9 { 0.0 } else { th };
        let th = if th.abs() < 1e-12 { 0.0 } else { th };
        if r < search.r_min - 1e-9 || r > search.r_max + 1e-9 {
            continue;
        }
        if found.iter().any(|c| (c.r - r).hypot(c.theta - th) < search.dedupe) {
            continue;
        }
        found.push(classify(r, th, p, search.degenerate_tol));
    }
    if found.is_empty() {
        return Err(Error::NoConvergence(format!("Newton failed from all {} seeds", failures)));
    }
    found.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.r.total_cmp(&b.r)));
    Ok(found)
}

pub fn find_critical_points(p: &ModelParams, r_max: f64) -> Result<Vec<CriticalPoint>> {
    find_critical_points_with(p, &CriticalSearch { r_max, ..CriticalSearch::default() })
}

/// Radial potential with the angular coupling dropped where it is below 1e-14.
pub fn far_field_radial(r: f64, p: &ModelParams) -> (f64, f64) {
    let (u, du, _) = radial_terms(r, p);
    let d = r - p.r_e;
    let g = (-p.a * d * d).exp();
    if g < 1e-14 {
        (u, du)
    } else {
        // θ-averaged coupling keeps the reduced system rotationally symmetric.
        (u + 0.5 * p.u_e * g, du - p.a * d * p.u_e * g)
    }
}

/// Residual of the centrifugal balance p_θ² = μ r³ U′(r).
pub fn relative_equilibrium_residual(r: f64, p_theta: f64, du: &impl Fn(f64) -> f64, mu: f64) -> f64 {
    p_theta * p_theta / (mu * r * r) - r * du(r)
}

/// Brent root of f on [a, b]; requires a sign change.
pub fn brent(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoRoot(format!("no sign change on [{a}, {b}]: f = ({fa}, {fb})")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut pp, mut q);
            if a == c {
                pp = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                pp = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if pp > 0.0 {
                q = -q;
            } else {
                pp = -pp;
            }
            if 2.0 * pp < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = pp / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFinite("function value inside root bracket".into()));
        }
    }
    Ok(b)
}

/// Outermost root of p_θ² = μ r³ U′(r) in [r_min, r_max] for an arbitrary radial force law.
pub fn centrifugal_balance_radius(
    p_theta: f64,
    mu: f64,
    du: impl Fn(f64) -> f64,
    r_min: f64,
    r_max: f64,
) -> Result<f64> {
    let f = |r: f64| relative_equilibrium_residual(r, p_theta, &du, mu);
    let mut hi = r_max;
    let mut fhi = f(hi);
    while hi > r_min {
        let lo = (hi / 1.02).max(r_min);
        let flo = f(lo);
        if flo.signum() != fhi.signum() {
            return brent(&f, lo, hi, 1e-14, 200);
        }
        hi = lo;
        fhi = flo;
    }
    Err(Error::NoRoot(format!("no relative equilibrium for p_theta = {p_theta} in [{r_min}, {r_max}]")))
}

/// Circular orbit radius of the rotationally reduced far-field system for a given p_θ.
///
/// The outermost balance point is the centrifugal-barrier top.
pub fn reduced_relative_equilibrium(p_theta: f64, p: &ModelParams) -> Result<f64> {
    if p_theta == 0.0 {
        return Err(Error::InvalidParameter("p_theta must be nonzero".into()));
    }
    centrifugal_balance_radius(p_theta, p.mu(), |x| far_field_radial(x, p).1, p.r_e * 1.2, 1.0e3)
}

/// Energy of the reduced relative equilibrium at radius r (p_θ eliminated).
pub fn reduced_energy_at(r: f64, p: &ModelParams) -> f64 {
    let (u, du) = far_field_radial(r, p);
    let pt2 = p.mu() * r * r * r * du;
    pt2 / (2.0 * p.inertia) + pt2 / (2.0 * p.mu() * r * r) + u
}

/// Relative equilibrium at energy E: returns (r_po, p_θ).
pub fn reduced_orbit_for_energy(e: f64, p: &ModelParams, r_box: f64) -> Result<(f64, f64)> {
    if e <= 0.0 {
        return Err(Error::InvalidParameter(format!("energy must be positive, got {e}")));
    }
    // Energy along the branch of barrier tops decreases to 0⁺ as r → ∞.
    let g = |r: f64| reduced_energy_at(r, p) - e;
    let mut lo = 2.0_f64;
    while g(lo) < 0.0 || far_field_radial(lo, p).1 <= 0.0 {
        lo *= 1.1;
        if lo > r_box {
            return Err(Error::OutOfBox(format!("relative equilibrium for E = {e} lies beyond r = {r_box}")));
        }
    }
    let mut hi = lo;
    while g(hi) > 0.0 {
        hi *= 1.2;
        if hi > r_box {
            return Err(Error::OutOfBox(format!("relative equilibrium for E = {e} lies beyond r = {r_box}")));
        }
    }
    let r = brent(g, lo.max(hi / 1.2), hi, 1e-13, 200)?;
    let pt = (p.mu() * r.powi(3) * far_field_radial(r, p).1).sqrt();
    Ok((r, pt))
}
