//! Dividing surfaces built over periodic-orbit projections.
//!
//! A rotating orbit's projection is stored as r̄(θ) by trigonometric
//! interpolation. On DSᵃ = {r = r̄(θ)} the pair (θ, P) with
//! P = p_θ + r̄′(θ)·p_r is canonical: the flux form restricted to the surface
//! is dθ∧dP, so chart areas in (θ, P) are symplectic areas. The plain
//! (θ, p_θ) chart folds where |r̄′| is large and is kept for display only.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use crate::error::{Error, Result};
use crate::integrate::Tolerance;
use crate::model::{self, brent, ModelParams, PhasePoint};
use crate::orbits::PeriodicOrbit;

/// π-periodic trigonometric interpolant of a rotating orbit's projection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitProfile {
    pub thetas: Vec<f64>,
    pub radii: Vec<f64>,
    /// r̄(θ) = a₀ + Σ a_j cos 2jθ + b_j sin 2jθ.
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl OrbitProfile {
    /// Interpolant through equally spaced samples θ_k = kπ/n.
    pub fn from_samples(radii: Vec<f64>) -> Result<Self> {
        let n = radii.len();
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("profile needs an even sample count ≥ 8, got {n}")));
        }
        let thetas: Vec<f64> = (0..n).map(|k| PI * k as f64 / n as f64).collect();
        let half = n / 2;
        let mut cos = vec![0.0; half + 1];
        let mut sin = vec![0.0; half + 1];
        for j in 0..=half {
            let (mut c, mut s) = (0.0, 0.0);
            for (k, r) in radii.iter().enumerate() {
                let arg = 2.0 * PI * (j * k % n) as f64 / n as f64;
                c += r * arg.cos();
                s += r * arg.sin();
            }
            let w = if j == 0 || j == half { 1.0 } else { 2.0 };
            cos[j] = w * c / n as f64;
            sin[j] = if j == half { 0.0 } else { w * s / n as f64 };
        }
        // Trailing coefficients at rounding level only cost evaluation time.
        let scale = cos[0].abs().max(1.0);
        let mut keep = half + 1;
        while keep > 1 && cos[keep - 1].abs() < 1e-16 * scale && sin[keep - 1].abs() < 1e-16 * scale {
            keep -= 1;
        }
        cos.truncate(keep);
        sin.truncate(keep);
        Ok(Self { thetas, radii, cos, sin })
    }

    /// Samples a rotating orbit at `n` equally spaced angles over half a turn.
    pub fn from_orbit(orbit: &PeriodicOrbit, n: usize, tol: &Tolerance) -> Result<Self> {
        if !orbit.family.rotating() {
            return Err(Error::Orbit("profiles need a rotating orbit; librations are not graphs over θ".into()));
        }
        let dense = orbit.dense(tol)?;
        let t_half = orbit.reduced_period;
        let m = 4 * n;
        let mut prev = dense.eval(0.0)[1];
        for i in 1..=m {
            let th = dense.eval(t_half * i as f64 / m as f64)[1];
            if (th - prev) * orbit.orientation as f64 <= 0.0 {
                return Err(Error::Orbit("θ is not monotone along the orbit".into()));
            }
            prev = th;
        }
        let sign = orbit.orientation as f64;
        let mut radii = Vec::with_capacity(n);
        let mut t_lo = 0.0;
        for k in 0..n {
            let target = sign * PI * k as f64 / n as f64;
            let t = if k == 0 {
                0.0
            } else {
                let f = |t: f64| dense.eval(t)[1] - target;
                let mut t_hi = t_lo;
                while f(t_hi) * sign < 0.0 {
                    t_hi += t_half / n as f64;
                }
                brent(f, t_lo, t_hi, 1e-15, 200)?
            };
            radii.push(dense.eval(t)[0]);
            t_lo = t;
        }
        if sign < 0.0 {
            // Samples were taken at −θ_k; reorder to +θ_k using π-periodicity.
            let mut r2 = vec![radii[0]];
            r2.extend(radii[1..].iter().rev());
            radii = r2;
        }
        Self::from_samples(radii)
    }

    pub fn n_coefficients(&self) -> usize {
        self.cos.len()
    }

    /// (r̄, r̄′, r̄″) at θ.
    #[inline]
    pub fn eval3(&self, theta: f64) -> (f64, f64, f64) {
        let (s1, c1) = (2.0 * theta).sin_cos();
        let (mut cj, mut sj) = (1.0, 0.0);
        let (mut r, mut d, mut dd) = (0.0, 0.0, 0.0);
        for j in 0..self.cos.len() {
            let w = 2.0 * j as f64;
            let (a, b) = (self.cos[j], self.sin[j]);
            r += a * cj + b * sj;
            d += w * (b * cj - a * sj);
            dd -= w * w * (a * cj + b * sj);
            let c_next = cj * c1 - sj * s1;
            sj = sj * c1 + cj * s1;
            cj = c_next;
        }
        (r, d, dd)
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let (r, d, _) = self.eval3(theta);
        (r, d)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, n: usize) -> Result<()> {
        writeln!(w, "theta,r_bar")?;
        for i in 0..=n {
            let th = -PI + 2.0 * PI * i as f64 / n as f64;
            writeln!(w, "{th:.12},{:.12}", self.eval(th).0)?;
        }
        Ok(())
    }
}

/// ρ = r − r̄(θ) and its time derivative ρ̇ = ṙ − r̄′(θ)θ̇.
#[inline]
pub fn rho_and_rhodot(x: &PhasePoint, profile: &OrbitProfile, params: &ModelParams) -> (f64, f64) {
    let (rb, drb) = profile.eval(x.theta);
    let rdot = x.p_r / params.mu();
    let thdot = x.p_theta * model::inv_inertia(x.r, params);
    (x.r - rb, rdot - drb * thdot)
}

/// Momentum conjugate to θ in the (ρ, θ) coordinates: P = p_θ + r̄′(θ)·p_r.
#[inline]
pub fn canonical_momentum(x: &PhasePoint, profile: &OrbitProfile) -> f64 {
    x.p_theta + profile.eval(x.theta).1 * x.p_r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub theta: f64,
    pub p_theta: f64,
    /// Canonical chart momentum P = p_θ + r̄′p_r.
    pub p_canon: f64,
    /// Sign of p_r used in the reconstruction.
    pub branch: i8,
    pub full_state: PhasePoint,
}

impl SectionPoint {
    pub fn from_state(x: &PhasePoint, profile: &OrbitProfile) -> Self {
        Self {
            theta: x.theta,
            p_theta: x.p_theta,
            p_canon: canonical_momentum(x, profile),
            branch: if x.p_r >= 0.0 { 1 } else { -1 },
            full_state: *x,
        }
    }
}

fn shell_kinetic(theta: f64, e: f64, profile: &OrbitProfile, params: &ModelParams) -> Result<(f64, f64, f64, f64)> {
    let (r, dr) = profile.eval(theta);
    let k = e - model::potential(r, theta, params)?;
    if k < 0.0 {
        return Err(Error::Forbidden(format!("DS point at θ = {theta} lies above the energy")));
    }
    Ok((r, dr, k, model::inv_inertia(r, params)))
}

/// Lifts a (θ, p_θ) chart point to the outward annulus of DSᵃ.
pub fn section_lift(theta: f64, p_theta: f64, e: f64, profile: &OrbitProfile, params: &ModelParams) -> Result<SectionPoint> {
    let (r, dr, k, c) = shell_kinetic(theta, e, profile, params)?;
    let kr = k - 0.5 * p_theta * p_theta * c;
    if kr < 0.0 {
        return Err(Error::Forbidden(format!("(θ, p_θ) = ({theta}, {p_theta}) is outside the momentum disc")));
    }
    let mu = params.mu();
    let q = (2.0 * mu * kr).sqrt();
    let thdot = p_theta * c;
    let admissible: Vec<f64> = [q, -q].into_iter().filter(|pr| pr / mu - dr * thdot > 0.0).collect();
    match admissible.as_slice() {
        [pr] => {
            let x = PhasePoint::new(r, theta, *pr, p_theta);
            Ok(SectionPoint::from_state(&x, profile))
        }
        [] => Err(Error::Geometry(format!("no outward root at (θ, p_θ) = ({theta}, {p_theta})"))),
        _ if q == 0.0 => Err(Error::Geometry("boundary point".into())),
        _ => Err(Error::Geometry(format!("two outward roots at (θ, p_θ) = ({theta}, {p_theta}): the chart folds here"))),
    }
}

/// Outward-arc state at angle ψ ∈ [−π/2, π/2] around the momentum ellipse.
fn arc_state(theta: f64, psi: f64, r: f64, dr: f64, k: f64, c: f64, mu: f64) -> PhasePoint {
    let alpha = (2.0 * k / mu).sqrt();
    let pt_amp = (2.0 * k / c).sqrt();
    let beta = dr * c * pt_amp;
    let phi0 = beta.atan2(alpha);
    let phi = psi - phi0;
    PhasePoint::new(r, theta, (2.0 * mu * k).sqrt() * phi.cos(), pt_amp * phi.sin())
}

/// Range of P over the outward arc at θ; the ends are Γᵃ's momentum circle.
pub fn canonical_range(theta: f64, e: f64, profile: &OrbitProfile, params: &ModelParams) -> Result<(f64, f64)> {
    let (r, dr, k, c) = shell_kinetic(theta, e, profile, params)?;
    let mu = params.mu();
    let a = canonical_momentum(&arc_state(theta, -FRAC_PI_2, r, dr, k, c, mu), profile);
    let b = canonical_momentum(&arc_state(theta, FRAC_PI_2, r, dr, k, c, mu), profile);
    Ok((a.min(b), a.max(b)))
}

/// Lifts a canonical chart point (θ, P); unique on the outward annulus.
pub fn section_lift_canonical(theta: f64, p_canon: f64, e: f64, profile: &OrbitProfile, params: &ModelParams) -> Result<SectionPoint> {
    let (r, dr, k, c) = shell_kinetic(theta, e, profile, params)?;
    let mu = params.mu();
    let f = |psi: f64| canonical_momentum(&arc_state(theta, psi, r, dr, k, c, mu), profile) - p_canon;
    let psi = brent(f, -FRAC_PI_2, FRAC_PI_2, 1e-15, 200)
        .map_err(|_| Error::Forbidden(format!("P = {p_canon} outside the annulus at θ = {theta}")))?;
    let x = arc_state(theta, psi, r, dr, k, c, mu);
    Ok(SectionPoint::from_state(&x, profile))
}

/// ∂P/∂p_θ along the outward annulus: the flux density in the (θ, p_θ) chart.
pub fn flux_density(sp: &SectionPoint, params: &ModelParams, profile: &OrbitProfile) -> f64 {
    let x = &sp.full_state;
    let (_, dr) = profile.eval(x.theta);
    // p_r(p_θ) on the shell at fixed θ: ∂p_r/∂p_θ = −μ p_θ c / p_r.
    let c = model::inv_inertia(x.r, params);
    1.0 - dr * params.mu() * x.p_theta * c / x.p_r
}

/// Configuration projection of an inner libration as r_i(θ) on [−θ_max, θ_max].
#[derive(Clone, Debug)]
pub struct InnerCurve {
    thetas: Vec<f64>,
    radii: Vec<f64>,
    slopes: Vec<f64>,
    pub theta_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    Outward,
    Inward,
    Equator,
}

impl InnerCurve {
    pub fn from_orbit(orbit: &PeriodicOrbit, n: usize, tol: &Tolerance) -> Result<Self> {
        if orbit.family.rotating() {
            return Err(Error::Orbit("inner curve needs a libration".into()));
        }
        let dense = orbit.dense(tol)?;
        let tq = orbit.period / 4.0;
        let p = &orbit.params;
        let mut pos = Vec::with_capacity(n + 1);
        for i in 0..=n {
            // Cosine spacing clusters samples at the turning point.
            let s = 0.5 * (1.0 - (PI * i as f64 / n as f64).cos());
            let y = dense.eval(tq * s);
            let f = model::field(&y, p);
            let slope = if f[1].abs() > 1e-14 { f[0] / f[1] } else { f64::NAN };
            pos.push((y[1], y[0], slope));
        }
        // The turning point has zero velocity; use the limiting slope.
        let last = pos.len() - 1;
        if !pos[last].2.is_finite() {
            let y = dense.eval(tq);
            let f = model::field(&y, p);
            let j = model::jacobian_raw(&y, p);
            let acc_r = j[0][2] * f[2];
            let acc_t = j[1][3] * f[3];
            pos[last].2 = acc_r / acc_t;
        }
        for w in pos.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Orbit("inner orbit projection is not a graph over θ".into()));
            }
        }
        let theta_max = pos[last].0;
        let mut thetas = Vec::with_capacity(2 * n + 1);
        let mut radii = Vec::with_capacity(2 * n + 1);
        let mut slopes = Vec::with_capacity(2 * n + 1);
        for &(t, r, s) in pos.iter().rev() {
            if t > 0.0 {
                thetas.push(-t);
                radii.push(r);
                slopes.push(-s);
            }
        }
        for &(t, r, s) in &pos {
            thetas.push(t);
            radii.push(r);
            slopes.push(s);
        }
        Ok(Self { thetas, radii, slopes, theta_max })
    }

    /// r_i(θ) and its slope; θ is clamped to the turning points.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let th = theta.clamp(-self.theta_max, self.theta_max);
        let n = self.thetas.len();
        let i = self.thetas.partition_point(|&t| t < th).clamp(1, n - 1);
        let (t0, t1) = (self.thetas[i - 1], self.thetas[i]);
        let h = t1 - t0;
        let s = (th - t0) / h;
        let (r0, r1, m0, m1) = (self.radii[i - 1], self.radii[i], self.slopes[i - 1] * h, self.slopes[i] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let r = (2.0 * s3 - 3.0 * s2 + 1.0) * r0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * r1 + (s3 - s2) * m1;
        let dr = ((6.0 * s2 - 6.0 * s) * r0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * r1 + (3.0 * s2 - 2.0 * s) * m1) / h;
        let dr = if theta.abs() > self.theta_max { 0.0 } else { dr };
        (r, dr)
    }

    /// Signed offset from the curve and its rate for the well centred at `centre` (0 or π).
    pub fn rho(&self, x: &PhasePoint, centre: f64, params: &ModelParams) -> (f64, f64) {
        let th = model::wrap_angle(x.theta - centre);
        let (ri, dri) = self.eval(th);
        let rdot = x.p_r / params.mu();
        let thdot = x.p_theta * model::inv_inertia(x.r, params);
        (x.r - ri, rdot - dri * thdot)
    }

    /// Offset from the nearest of the two wells' curves.
    pub fn rho_nearest(&self, x: &PhasePoint, params: &ModelParams) -> (f64, f64) {
        let th = model::wrap_angle(x.theta);
        let centre = if th.abs() <= FRAC_PI_2 { 0.0 } else { PI };
        self.rho(x, centre, params)
    }
}

/// Classifies a DSⁱ point by the sign of its normal velocity.
pub fn ds_i_hemisphere(x: &PhasePoint, curve: &InnerCurve, params: &ModelParams, equator_tol: f64) -> Result<Hemisphere> {
    let (rho, rhodot) = curve.rho_nearest(x, params);
    let th = model::wrap_angle(x.theta);
    let th = if th.abs() > FRAC_PI_2 { model::wrap_angle(th - PI) } else { th };
    if rho.abs() > 1e-8 || th.abs() > curve.theta_max + 1e-12 {
        return Err(Error::Geometry(format!("point is off DSi (offset {rho:.3e})")));
    }
    Ok(if rhodot.abs() <= equator_tol {
        Hemisphere::Equator
    } else if rhodot > 0.0 {
        Hemisphere::Outward
    } else {
        Hemisphere::Inward
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Annulus {
    Outward,
    Inward,
    OnOrbit,
}

/// Classifies a DSᵒ point by the sign of p_r.
pub fn ds_o_annulus(x: &PhasePoint, profile: &OrbitProfile, params: &ModelParams) -> Result<Annulus> {
    let (rho, _) = rho_and_rhodot(x, profile, params);
    if rho.abs() > 1e-8 {
        return Err(Error::Geometry(format!("point is off DSo (offset {rho:.3e})")));
    }
    Ok(if x.p_r.abs() <= 1e-12 {
        Annulus::OnOrbit
    } else if x.p_r > 0.0 {
        Annulus::Outward
    } else {
        Annulus::Inward
    })
}
