//! Two-body Keplerian dynamics.
//!
//! Orbital states come in two representations, [`KeplerianElements`] and
//! [`StateVector`]. Propagation is analytic: the mean anomaly is advanced
//! linearly and Kepler's equation is solved for the new eccentric anomaly.
//!
//! Units are km, s and radians throughout. Epochs are seconds of mission
//! elapsed time from the scenario reference instant.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Earth gravitational parameter (WGS-84), km³/s².
pub const MU_EARTH: f64 = 398_600.441_8;

/// Below this eccentricity the argument of perigee is folded into the true anomaly.
pub const CIRCULAR_TOL: f64 = 1e-8;
/// Below this `sin(i)` the ascending node is folded into the argument of perigee.
pub const EQUATORIAL_TOL: f64 = 1e-8;

const KEPLER_MAX_ITER: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AstroError {
    #[error("eccentricity {0} outside the elliptic range [0, 1)")]
    Eccentricity(f64),
    #[error("gravitational parameter must be positive, got {0}")]
    GravParam(f64),
    #[error("invalid orbital elements: {0}")]
    Elements(String),
    #[error("state is not elliptic (specific energy {energy} km²/s² ≥ 0)")]
    NotElliptic { energy: f64 },
    #[error("degenerate orbit: angular momentum {h} km²/s is too small")]
    Degenerate { h: f64 },
    #[error("position vector has zero length")]
    ZeroRadius,
}

/// Gravitational parameter of the central body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravParams {
    pub mu: f64,
}

impl GravParams {
    pub fn new(mu: f64) -> Result<Self, AstroError> {
        if mu > 0.0 && mu.is_finite() {
            Ok(Self { mu })
        } else {
            Err(AstroError::GravParam(mu))
        }
    }

    pub fn earth() -> Self {
        Self { mu: MU_EARTH }
    }

    /// Mean motion of an orbit with semi-major axis `a`, rad/s.
    pub fn mean_motion(&self, a: f64) -> f64 {
        (self.mu / (a * a * a)).sqrt()
    }

    pub fn period(&self, a: f64) -> f64 {
        TAU / self.mean_motion(a)
    }
}

impl Default for GravParams {
    fn default() -> Self {
        Self::earth()
    }
}

/// Classical orbital elements of an elliptic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements {
    /// Semi-major axis, km.
    pub a: f64,
    pub e: f64,
    /// Inclination in [0, π].
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    /// True anomaly.
    pub nu: f64,
    /// Mission-elapsed time the elements refer to, s.
    pub epoch: f64,
}

impl KeplerianElements {
    /// Builds elements, normalizing the three angles into [0, 2π).
    pub fn new(
        a: f64,
        e: f64,
        i: f64,
        raan: f64,
        argp: f64,
        nu: f64,
        epoch: f64,
    ) -> Result<Self, AstroError> {
        let elems = Self {
            a,
            e,
            i,
            raan: wrap_two_pi(raan),
            argp: wrap_two_pi(argp),
            nu: wrap_two_pi(nu),
            epoch,
        };
        elems.validate()?;
        Ok(elems)
    }

    pub fn validate(&self) -> Result<(), AstroError> {
        if !(0.0..1.0).contains(&self.e) {
            return Err(AstroError::Eccentricity(self.e));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(AstroError::Elements(format!(
                "semi-major axis must be positive, got {}",
                self.a
            )));
        }
        if !(0.0..=PI).contains(&self.i) {
            return Err(AstroError::Elements(format!(
                "inclination {} outside [0, π]",
                self.i
            )));
        }
        if ![self.raan, self.argp, self.nu, self.epoch]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(AstroError::Elements("non-finite angle or epoch".into()));
        }
        Ok(())
    }

    pub fn perigee_radius(&self) -> f64 {
        self.a * (1.0 - self.e)
    }

    pub fn mean_anomaly(&self) -> f64 {
        eccentric_to_mean(true_to_eccentric(self.nu, self.e), self.e)
    }

    /// Elements advanced by `dt` seconds along the same conic.
    pub fn advanced(&self, dt: f64, mu: GravParams) -> Self {
        let m = self.mean_anomaly() + mu.mean_motion(self.a) * dt;
        // e < 1 is a type invariant, so the solver cannot fail here.
        let ecc = solve_kepler_unchecked(m, self.e);
        Self {
            nu: wrap_two_pi(eccentric_to_true(ecc, self.e)),
            epoch: self.epoch + dt,
            ..*self
        }
    }

    /// Position and velocity at `epoch` (absolute mission time).
    pub fn state_at(&self, epoch: f64, mu: GravParams) -> StateVector {
        elements_to_state(&self.advanced(epoch - self.epoch, mu), mu)
    }
}

/// Cartesian position and velocity in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// km
    pub r: Vector3<f64>,
    /// km/s
    pub v: Vector3<f64>,
    pub epoch: f64,
}

impl StateVector {
    pub fn new(r: Vector3<f64>, v: Vector3<f64>, epoch: f64) -> Self {
        Self { r, v, epoch }
    }

    pub fn specific_energy(&self, mu: GravParams) -> f64 {
        0.5 * self.v.norm_squared() - mu.mu / self.r.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.r.cross(&self.v)
    }
}

pub fn wrap_two_pi(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Smallest signed difference `a - b` folded into (-π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_two_pi(a - b);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

pub fn true_to_eccentric(nu: f64, e: f64) -> f64 {
    let (s, c) = nu.sin_cos();
    ((1.0 - e * e).sqrt() * s).atan2(e + c)
}

pub fn eccentric_to_true(ecc: f64, e: f64) -> f64 {
    let (s, c) = ecc.sin_cos();
    ((1.0 - e * e).sqrt() * s).atan2(c - e)
}

pub fn eccentric_to_mean(ecc: f64, e: f64) -> f64 {
    ecc - e * ecc.sin()
}

/// Solves Kepler's equation `E - e·sin E = M` for the eccentric anomaly.
///
/// `M` is reduced into [0, 2π) first, so the returned anomaly lies in
/// [0, 2π]. Newton iteration starts from `M + e·sin M`; if it has not
/// converged after 50 steps the root is bracketed and bisected instead.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64, AstroError> {
    if !(0.0..1.0).contains(&e) {
        return Err(AstroError::Eccentricity(e));
    }
    if !mean_anomaly.is_finite() {
        return Err(AstroError::Elements("non-finite mean anomaly".into()));
    }
    Ok(solve_kepler_unchecked(mean_anomaly, e))
}

fn solve_kepler_unchecked(mean_anomaly: f64, e: f64) -> f64 {
    let m = wrap_two_pi(mean_anomaly);
    if e == 0.0 {
        return m;
    }
    let mut ecc = m + e * m.sin();
    for _ in 0..KEPLER_MAX_ITER {
        let f = ecc - e * ecc.sin() - m;
        let fp = 1.0 - e * ecc.cos();
        let step = f / fp;
        ecc -= step;
        if step.abs() <= 4.0 * f64::EPSILON * ecc.abs().max(1.0) {
            // One more step to polish the last bit.
            let f = ecc - e * ecc.sin() - m;
            ecc -= f / (1.0 - e * ecc.cos());
            if (0.0..=TAU).contains(&ecc) {
                return ecc;
            }
            break;
        }
    }
    kepler_bisection(m, e)
}

/// f(E) = E - e sin E - M is strictly increasing, with f(0) ≤ 0 ≤ f(2π).
fn kepler_bisection(m: f64, e: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, TAU);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid - e * mid.sin() - m < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Perifocal-to-inertial conversion.
pub fn elements_to_state(elems: &KeplerianElements, mu: GravParams) -> StateVector {
    let KeplerianElements {
        a,
        e,
        i,
        raan,
        argp,
        nu,
        epoch,
    } = *elems;
    let p = a * (1.0 - e * e);
    let (sin_nu, cos_nu) = nu.sin_cos();
    let radius = p / (1.0 + e * cos_nu);
    let vel_scale = (mu.mu / p).sqrt();

    let r_pf = Vector3::new(radius * cos_nu, radius * sin_nu, 0.0);
    let v_pf = Vector3::new(-vel_scale * sin_nu, vel_scale * (e + cos_nu), 0.0);

    let (so, co) = raan.sin_cos();
    let (sw, cw) = argp.sin_cos();
    let (si, ci) = i.sin_cos();
    // Columns of R3(-Ω)·R1(-i)·R3(-ω) applied to the perifocal x and y axes.
    let p_hat = Vector3::new(co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si);
    let q_hat = Vector3::new(-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si);

    StateVector {
        r: p_hat * r_pf.x + q_hat * r_pf.y,
        v: p_hat * v_pf.x + q_hat * v_pf.y,
        epoch,
    }
}

/// Inverse of [`elements_to_state`] for non-degenerate elliptic states.
///
/// Degenerate angles follow a fixed convention: a circular orbit has
/// `argp = 0` with the argument of latitude carried in `nu`, and an
/// equatorial orbit has `raan = 0` with the node measured from the x axis.
pub fn state_to_elements(
    state: &StateVector,
    mu: GravParams,
) -> Result<KeplerianElements, AstroError> {
    let r = state.r;
    let v = state.v;
    let rn = r.norm();
    if rn == 0.0 || !rn.is_finite() {
        return Err(AstroError::ZeroRadius);
    }
    let energy = state.specific_energy(mu);
    if energy >= 0.0 || !energy.is_finite() {
        return Err(AstroError::NotElliptic { energy });
    }

    let h = r.cross(&v);
    let hn = h.norm();
    if hn <= 1e-10 * rn * v.norm().max(f64::MIN_POSITIVE) || hn == 0.0 {
        return Err(AstroError::Degenerate { h: hn });
    }
    let h_hat = h / hn;

    let e_vec = ((v.norm_squared() - mu.mu / rn) * r - r.dot(&v) * v) / mu.mu;
    let e = e_vec.norm();
    if e >= 1.0 - 1e-12 {
        return Err(AstroError::NotElliptic { energy });
    }
    let a = 1.0 / (2.0 / rn - v.norm_squared() / mu.mu);
    let i = (h_hat.z).clamp(-1.0, 1.0).acos();

    let node = Vector3::new(-h.y, h.x, 0.0);
    let node_n = node.norm();
    let (raan, node_hat) = if node_n / hn < EQUATORIAL_TOL {
        (0.0, Vector3::x())
    } else {
        (wrap_two_pi(node.y.atan2(node.x)), node / node_n)
    };

    // Angles measured in the orbit plane, positive along the motion.
    let plane_angle =
        |from: &Vector3<f64>, to: &Vector3<f64>| from.cross(to).dot(&h_hat).atan2(from.dot(to));

    let (argp, nu) = if e < CIRCULAR_TOL {
        (0.0, wrap_two_pi(plane_angle(&node_hat, &r)))
    } else {
        let e_hat = e_vec / e;
        (
            wrap_two_pi(plane_angle(&node_hat, &e_hat)),
            wrap_two_pi(plane_angle(&e_hat, &r)),
        )
    };

    Ok(KeplerianElements {
        a,
        e,
        i,
        raan,
        argp,
        nu,
        epoch: state.epoch,
    })
}

/// Analytic two-body propagation by `dt` seconds.
pub fn propagate(state: &StateVector, dt: f64, mu: GravParams) -> Result<StateVector, AstroError> {
    if !dt.is_finite() {
        return Err(AstroError::Elements("non-finite propagation interval".into()));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let a = state_to_elements(state, mu)?.a;
    let (r0, v0) = (state.r, state.v);
    let rn0 = r0.norm();
    let n = mu.mean_motion(a);
    let sqrt_mu_a = (mu.mu * a).sqrt();

    // Eccentric anomaly from the state directly, avoiding the angle chain.
    let e_cos = 1.0 - rn0 / a;
    let e_sin = r0.dot(&v0) / sqrt_mu_a;
    let e = e_cos.hypot(e_sin);
    let ecc0 = e_sin.atan2(e_cos);
    let mean0 = ecc0 - e_sin;

    // Whole revolutions leave the state unchanged.
    let period = TAU / n;
    let dt_red = dt - period * (dt / period).round();
    let dm = n * dt_red;
    let ecc1 = solve_kepler(mean0 + dm, e)?;
    let mut de = ecc1 - ecc0;
    de += TAU * ((dm - de) / TAU).round();

    let (sin_de, cos_de) = de.sin_cos();
    let f = 1.0 - a / rn0 * (1.0 - cos_de);
    let g = dt_red - (de - sin_de) / n;
    let r1 = f * r0 + g * v0;
    let rn1 = r1.norm();
    let f_dot = -sqrt_mu_a / (rn1 * rn0) * sin_de;
    let g_dot = 1.0 - a / rn1 * (1.0 - cos_de);
    Ok(StateVector::new(r1, f_dot * r0 + g_dot * v0, state.epoch + dt))
}
