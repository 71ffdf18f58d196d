//! Zero-revolution Lambert solver in Izzo's formulation.
//!
//! Positions are first scaled by `|r1|` and times by `sqrt(|r1|³/μ)`, so the
//! iteration itself always runs with unit gravitational parameter. The
//! universal variable `x` is found with third-order Householder steps
//! on the nondimensional time-of-flight equation.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astro::GravParams;

/// Transfers with `|sin θ|` below this are rejected as geometrically singular.
pub const COLLINEAR_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 50;
/// Convergence threshold on the nondimensional time of flight.
const TOF_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LambertError {
    #[error("time of flight must be positive, got {0} s")]
    TimeOfFlight(f64),
    #[error("position vector has zero length")]
    ZeroRadius,
    #[error("transfer geometry is singular (|sin θ| = {sin_theta:e})")]
    Geometry { sin_theta: f64 },
    #[error("root finder did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("transfer conic is not elliptic (x = {x})")]
    NonElliptic { x: f64 },
    #[error("multi-revolution transfers are not supported")]
    MultiRevolution,
}

/// Sense of motion along the transfer arc relative to the inertial z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Prograde,
    Retrograde,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertSolution {
    pub v1: Vector3<f64>,
    pub v2: Vector3<f64>,
    pub tof: f64,
    pub iterations: usize,
}

/// Solves Lambert's problem on the single-arc (zero revolution) branch.
pub fn solve_lambert(
    r1: &Vector3<f64>,
    r2: &Vector3<f64>,
    tof: f64,
    mu: GravParams,
    direction: Direction,
) -> Result<LambertSolution, LambertError> {
    solve_lambert_revs(r1, r2, tof, mu, direction, 0)
}

/// Entry point reserved for multi-revolution families; only `revs == 0` is implemented.
pub fn solve_lambert_revs(
    r1: &Vector3<f64>,
    r2: &Vector3<f64>,
    tof: f64,
    mu: GravParams,
    direction: Direction,
    revs: u32,
) -> Result<LambertSolution, LambertError> {
    if revs != 0 {
        return Err(LambertError::MultiRevolution);
    }
    if !(tof > 0.0) || !tof.is_finite() {
        return Err(LambertError::TimeOfFlight(tof));
    }
    let r1_norm = r1.norm();
    let r2_norm = r2.norm();
    if r1_norm == 0.0 || r2_norm == 0.0 {
        return Err(LambertError::ZeroRadius);
    }

    // Nondimensionalize: unit length |r1|, unit velocity sqrt(μ/|r1|).
    let length = r1_norm;
    let speed = (mu.mu / r1_norm).sqrt();
    let time = length / speed;
    let p1 = r1 / length;
    let p2 = r2 / length;
    let t = tof / time;

    let p1n = 1.0;
    let p2n = r2_norm / length;
    let cross = p1.cross(&p2);
    let sin_theta = cross.norm() / (p1n * p2n);
    if sin_theta < COLLINEAR_TOL {
        return Err(LambertError::Geometry { sin_theta });
    }

    let chord = (p2 - p1).norm();
    let s = 0.5 * (p1n + p2n + chord);
    let ir1 = p1 / p1n;
    let ir2 = p2 / p2n;
    let ih = cross / cross.norm();

    let mut lambda = (1.0 - chord / s).max(0.0).sqrt();
    let (mut it1, mut it2);
    if ih.z < 0.0 {
        lambda = -lambda;
        it1 = ir1.cross(&ih);
        it2 = ir2.cross(&ih);
    } else {
        it1 = ih.cross(&ir1);
        it2 = ih.cross(&ir2);
    }
    if direction == Direction::Retrograde {
        lambda = -lambda;
        it1 = -it1;
        it2 = -it2;
    }

    // Izzo's time normalization with μ = 1.
    let t_izzo = (2.0 / (s * s * s)).sqrt() * t;
    let (x, iterations) = find_x(t_izzo, lambda)?;
    if x >= 1.0 {
        return Err(LambertError::NonElliptic { x });
    }

    let gamma = (s / 2.0).sqrt();
    let rho = (p1n - p2n) / chord;
    let sigma = (1.0 - rho * rho).max(0.0).sqrt();
    let y = (1.0 - lambda * lambda + lambda * lambda * x * x).sqrt();
    let vr1 = gamma * ((lambda * y - x) - rho * (lambda * y + x)) / p1n;
    let vr2 = -gamma * ((lambda * y - x) + rho * (lambda * y + x)) / p2n;
    let vt = gamma * sigma * (y + lambda * x);
    let vt1 = vt / p1n;
    let vt2 = vt / p2n;

    Ok(LambertSolution {
        v1: (ir1 * vr1 + it1 * vt1) * speed,
        v2: (ir2 * vr2 + it2 * vt2) * speed,
        tof,
        iterations,
    })
}

fn find_x(t: f64, lambda: f64) -> Result<(f64, usize), LambertError> {
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let t00 = lambda.acos() + lambda * (1.0 - l2).sqrt();
    let t1 = 2.0 / 3.0 * (1.0 - l3);

    let mut x = if t >= t00 {
        -(t - t00) / (t - t00 + 4.0)
    } else if t <= t1 {
        t1 * (t1 - t) / (0.4 * (1.0 - l2 * l3) * t) + 1.0
    } else {
        (t / t00).powf(std::f64::consts::LN_2 / (t1 / t00).ln()) - 1.0
    };

    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let tof = x_to_tof(x, lambda);
        let delta = tof - t;
        residual = delta.abs();
        if residual < TOF_TOL * t.max(1.0) {
            return Ok((x, iteration - 1));
        }
        let (d1, d2, d3) = tof_derivatives(x, tof, lambda);
        let d1sq = d1 * d1;
        let step = delta * (d1sq - delta * d2 / 2.0)
            / (d1 * (d1sq - delta * d2) + d3 * delta * delta / 6.0);
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        // Stay inside the domain x > -1.
        x = if next <= -1.0 { 0.5 * (x - 1.0) } else { next };
        if step.abs() < 1e-15 {
            let tof = x_to_tof(x, lambda);
            residual = (tof - t).abs();
            if residual < 1e-11 * t.max(1.0) {
                return Ok((x, iteration));
            }
        }
    }
    Err(LambertError::Convergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// First three derivatives of the nondimensional time of flight w.r.t. x.
fn tof_derivatives(x: f64, t: f64, lambda: f64) -> (f64, f64, f64) {
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let umx2 = 1.0 - x * x;
    let y = (1.0 - l2 * umx2).sqrt();
    let y2 = y * y;
    let y3 = y2 * y;
    let d1 = (3.0 * t * x - 2.0 + 2.0 * l3 * x / y) / umx2;
    let d2 = (3.0 * t + 5.0 * x * d1 + 2.0 * (1.0 - l2) * l3 / y3) / umx2;
    let d3 = (7.0 * x * d2 + 8.0 * d1 - 6.0 * (1.0 - l2) * l2 * l3 * x / y3 / y2) / umx2;
    (d1, d2, d3)
}

/// Nondimensional time of flight as a function of x (zero revolutions).
fn x_to_tof(x: f64, lambda: f64) -> f64 {
    const BATTIN: f64 = 0.01;
    const LAGRANGE: f64 = 0.2;
    let dist = (x - 1.0).abs();
    if dist < LAGRANGE && dist > BATTIN {
        return x_to_tof_lagrange(x, lambda);
    }
    let k = lambda * lambda;
    let e = x * x - 1.0;
    let rho = e.abs();
    let z = (1.0 + k * e).sqrt();
    if dist < BATTIN {
        let eta = z - lambda * x;
        let s1 = 0.5 * (1.0 - lambda - x * eta);
        let q = 4.0 / 3.0 * hypergeometric_f(s1, 1e-16);
        return (eta * eta * eta * q + 4.0 * lambda * eta) / 2.0;
    }
    let y = rho.sqrt();
    let g = x * z - lambda * e;
    let d = if e < 0.0 {
        g.clamp(-1.0, 1.0).acos()
    } else {
        let f = y * (z - lambda * x);
        (f + g).ln()
    };
    (x - lambda * z - d / y) / e
}

fn x_to_tof_lagrange(x: f64, lambda: f64) -> f64 {
    let a = 1.0 / (1.0 - x * x);
    if a > 0.0 {
        let alpha = 2.0 * x.acos();
        let mut beta = 2.0 * (lambda * lambda / a).sqrt().asin();
        if lambda < 0.0 {
            beta = -beta;
        }
        a * a.sqrt() * ((alpha - alpha.sin()) - (beta - beta.sin())) / 2.0
    } else {
        let alpha = 2.0 * x.acosh();
        let mut beta = 2.0 * (-lambda * lambda / a).sqrt().asinh();
        if lambda < 0.0 {
            beta = -beta;
        }
        -a * (-a).sqrt() * ((beta - beta.sinh()) - (alpha - alpha.sinh())) / 2.0
    }
}

/// Gauss hypergeometric series 2F1(3, 1, 5/2; z) used near the parabola.
fn hypergeometric_f(z: f64, tol: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut j = 0.0;
    loop {
        term *= (3.0 + j) * (1.0 + j) / (2.5 + j) * z / (j + 1.0);
        sum += term;
        j += 1.0;
        if term.abs() <= tol || j > 1000.0 {
            return sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::{elements_to_state, propagate, KeplerianElements, StateVector, MU_EARTH};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const MU: GravParams = GravParams { mu: MU_EARTH };

    #[test]
    fn quarter_circle_transfer() {
        let r1 = Vector3::new(7000.0, 0.0, 0.0);
        let vc = (MU.mu / 7000.0).sqrt();
        let quarter = 0.25 * MU.period(7000.0);
        assert!((quarter - 1457.1).abs() < 0.1);

        // Oracle: the circular state really reaches (0, 7000, 0) after a quarter period.
        let start = StateVector::new(r1, Vector3::new(0.0, vc, 0.0), 0.0);
        let end = propagate(&start, quarter, MU).unwrap();
        let r2 = Vector3::new(0.0, 7000.0, 0.0);
        assert!((end.r - r2).norm() < 1e-8);

        let sol = solve_lambert(&r1, &r2, quarter, MU, Direction::Prograde).unwrap();
        assert_relative_eq!(sol.v1, Vector3::new(0.0, vc, 0.0), epsilon = 1e-10);
        assert_relative_eq!(sol.v2, Vector3::new(-vc, 0.0, 0.0), epsilon = 1e-10);
        assert!((vc - 7.5461).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let r1 = Vector3::new(7000.0, 0.0, 0.0);
        let r2 = Vector3::new(0.0, 7000.0, 0.0);
        assert!(matches!(
            solve_lambert(&r1, &r2, -1.0, MU, Direction::Prograde),
            Err(LambertError::TimeOfFlight(_))
        ));
        assert!(matches!(
            solve_lambert(&r1, &(-r1 * 1.1), 3000.0, MU, Direction::Prograde),
            Err(LambertError::Geometry { .. })
        ));
        assert!(matches!(
            solve_lambert(&r1, &(r1 * 1.1), 3000.0, MU, Direction::Prograde),
            Err(LambertError::Geometry { .. })
        ));
        assert!(matches!(
            solve_lambert_revs(&r1, &r2, 3000.0, MU, Direction::Prograde, 1),
            Err(LambertError::MultiRevolution)
        ));
    }

    #[test]
    fn short_tof_is_non_elliptic() {
        let r1 = Vector3::new(7000.0, 0.0, 0.0);
        let r2 = Vector3::new(0.0, 7000.0, 0.0);
        assert!(matches!(
            solve_lambert(&r1, &r2, 200.0, MU, Direction::Prograde),
            Err(LambertError::NonElliptic { .. })
        ));
    }

    #[test]
    fn long_way_and_retrograde() {
        let elems = KeplerianElements::new(7500.0, 0.05, 0.6, 0.3, 0.2, 0.1, 0.0).unwrap();
        let s0 = elements_to_state(&elems, MU);
        let dt = 0.7 * MU.period(7500.0);
        let s1 = propagate(&s0, dt, MU).unwrap();
        let sol = solve_lambert(&s0.r, &s1.r, dt, MU, Direction::Prograde).unwrap();
        assert!((sol.v1 - s0.v).norm() < 1e-9);
        assert!((sol.v2 - s1.v).norm() < 1e-9);

        // Same geometry flown clockwise.
        let retro = KeplerianElements { i: PI - 0.6, ..elems };
        let s0 = elements_to_state(&retro, MU);
        let s1 = propagate(&s0, 0.3 * MU.period(7500.0), MU).unwrap();
        let sol = solve_lambert(&s0.r, &s1.r, s1.epoch, MU, Direction::Retrograde).unwrap();
        assert!((sol.v1 - s0.v).norm() < 1e-9);
        assert!(s0.r.cross(&sol.v1).z < 0.0);
    }

    #[test]
    fn scaling_invariance() {
        let r1 = Vector3::new(7000.0, 500.0, 100.0);
        let r2 = Vector3::new(-2000.0, 6900.0, 900.0);
        let tof = 2100.0;
        let base = solve_lambert(&r1, &r2, tof, MU, Direction::Prograde).unwrap();
        for k in [0.5, 2.0, 6.0] {
            let scaled =
                solve_lambert(&(r1 * k), &(r2 * k), tof * k.powf(1.5), MU, Direction::Prograde).unwrap();
            assert_relative_eq!(scaled.v1, base.v1 / k.sqrt(), max_relative = 1e-11);
            assert_relative_eq!(scaled.v2, base.v2 / k.sqrt(), max_relative = 1e-11);
        }
    }

    #[test]
    fn series_and_lagrange_branches_agree_with_direct_formula() {
        // Close to x = 1 the three formulations of T(x) must coincide.
        for &lambda in &[-0.7, 0.0, 0.4, 0.9] {
            for &x in &[0.75, 0.85, 0.95, 0.985, 1.005, 1.02, 1.1] {
                let direct = {
                    let k = lambda * lambda;
                    let e = x * x - 1.0;
                    let z = (1.0_f64 + k * e).sqrt();
                    let y = e.abs().sqrt();
                    let g = x * z - lambda * e;
                    let d: f64 = if e < 0.0 { g.acos() } else { (y * (z - lambda * x) + g).ln() };
                    (x - lambda * z - d / y) / e
                };
                assert_relative_eq!(x_to_tof(x, lambda), direct, max_relative = 1e-7);
            }
        }
    }
}
