//! Parameter rays: the parameters `k = G(s, t)` for which the singular value
//! is the point `g^k(s, t)` of its own dynamic ray.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::address::ExternalAddress;
use crate::model::{self, f_inv_iter, f_iter, ModelError, ModelPoint, DEFAULT_TOL};
use crate::ray::{self, RayContext, RayError};
use crate::TWO_PI;

pub const MAX_ITERATIONS: usize = 100;
/// Longest secant step taken unchanged.
const MAX_STEP: f64 = 1.0;
/// Halvings of a step toward the last good parameter before giving up.
const MAX_BACKTRACK: usize = 40;
/// Consecutive parameters further apart than this multiple of the potential
/// step are flagged as a jump.
const JUMP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("potential {t} does not exceed the minimal potential {t_s}")]
    PotentialTooLow { t: f64, t_s: f64 },
    #[error("lost the domain of g near kappa = {kappa}: {reason}")]
    DomainLost { kappa: Complex64, reason: String },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterRaySolution {
    pub kappa: Complex64,
    /// `|g^k(s, t) - k|`.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterRayPoint {
    /// Offset above `t_s`.
    pub offset: f64,
    pub result: Result<ParameterRaySolution, ParamError>,
    /// Set when this parameter lies far from the previous one.
    pub jump: bool,
}

/// `g^k(s, t) - k`, with `g` extended below `Y_Q` by continuation.
fn defect(s: &ExternalAddress, t: f64, kappa: Complex64, tol: f64) -> Result<Complex64, RayError> {
    let ctx = RayContext::new(kappa).with_tol(tol.min(1e-12));
    Ok(ray::g_extended(&ctx, &ModelPoint::new(s.clone(), t))?.point - kappa)
}

pub fn parameter_ray_point(s: &ExternalAddress, t: f64, tol: f64) -> Result<ParameterRaySolution, ParamError> {
    let ts = model::t_s(s, DEFAULT_TOL.min(tol))?;
    if t <= ts {
        return Err(ParamError::PotentialTooLow { t, t_s: ts });
    }
    let start = Complex64::new(t, TWO_PI * s.value(1).map_err(ModelError::from)?);
    solve_from(s, t, tol, start)
}

fn solve_from(s: &ExternalAddress, t: f64, tol: f64, start: Complex64) -> Result<ParameterRaySolution, ParamError> {
    let lost = |kappa: Complex64, e: RayError| ParamError::DomainLost {
        kappa,
        reason: e.to_string(),
    };
    let mut k0 = start;
    let mut h0 = defect(s, t, k0, tol).map_err(|e| lost(k0, e))?;
    if h0.norm() < tol {
        return Ok(ParameterRaySolution {
            kappa: k0,
            residual: h0.norm(),
            iterations: 0,
        });
    }
    // A first fixed-point step: g^k(s, t) is the natural next guess.
    let (mut k1, mut h1) = advance(s, t, tol, k0, h0).map_err(|e| lost(k0, e))?;
    for iteration in 1..=MAX_ITERATIONS {
        if h1.norm() < tol {
            return Ok(ParameterRaySolution {
                kappa: k1,
                residual: h1.norm(),
                iterations: iteration,
            });
        }
        let slope = h1 - h0;
        let mut step = if slope.norm() > 0.0 {
            -h1 * (k1 - k0) / slope
        } else {
            -h1
        };
        if step.norm() > MAX_STEP {
            step *= MAX_STEP / step.norm();
        }
        let (k2, h2) = advance(s, t, tol, k1, step).map_err(|e| lost(k1, e))?;
        k0 = k1;
        h0 = h1;
        k1 = k2;
        h1 = h2;
    }
    Err(ParamError::NoConvergence(MAX_ITERATIONS))
}

/// Evaluate at `k + step`, halving the step while evaluation fails.
fn advance(
    s: &ExternalAddress,
    t: f64,
    tol: f64,
    kappa: Complex64,
    mut step: Complex64,
) -> Result<(Complex64, Complex64), RayError> {
    let mut last = None;
    for _ in 0..MAX_BACKTRACK {
        let candidate = kappa + step;
        match defect(s, t, candidate, tol) {
            Ok(h) => return Ok((candidate, h)),
            Err(e) => last = Some(e),
        }
        step *= 0.5;
    }
    Err(last.unwrap_or(RayError::Overflow))
}

/// `G_s` at `n` equally spaced offsets in `[t_lo, t_hi]` above `t_s`.
///
/// With `warm_start` each solve starts at the previous parameter; otherwise
/// the points are solved independently and in parallel.
pub fn parameter_ray_sample(
    s: &ExternalAddress,
    t_lo: f64,
    t_hi: f64,
    n: usize,
    tol: f64,
    warm_start: bool,
) -> Result<Vec<ParameterRayPoint>, ParamError> {
    if !(t_lo > 0.0 && t_lo < t_hi) || n < 2 {
        return Err(ParamError::HypothesisViolated(format!(
            "need 0 < t_lo < t_hi and n >= 2, got [{t_lo}, {t_hi}], n = {n}"
        )));
    }
    let ts = model::t_s(s, DEFAULT_TOL.min(tol))?;
    let step = (t_hi - t_lo) / (n - 1) as f64;
    let offsets: Vec<f64> = (0..n).map(|i| if i + 1 == n { t_hi } else { t_lo + step * i as f64 }).collect();
    let cold = |u: f64| {
        let t = ts + u;
        let start = Complex64::new(t, TWO_PI * s.value(1).map_err(ModelError::from)?);
        solve_from(s, t, tol, start)
    };
    let results: Vec<Result<ParameterRaySolution, ParamError>> = if warm_start {
        let mut out: Vec<Result<ParameterRaySolution, ParamError>> = Vec::with_capacity(n);
        for (i, &u) in offsets.iter().enumerate() {
            let previous = if i > 0 { out[i - 1].as_ref().ok().map(|p| p.kappa) } else { None };
            let result = match previous {
                // Shift the previous parameter by the change in potential.
                Some(k) => solve_from(s, ts + u, tol, k + step).or_else(|_| cold(u)),
                None => cold(u),
            };
            out.push(result);
        }
        out
    } else {
        offsets.par_iter().map(|&u| cold(u)).collect()
    };
    let mut points = Vec::with_capacity(n);
    for (i, result) in results.into_iter().enumerate() {
        let jump = match (i, &result) {
            (0, _) => false,
            (_, Ok(now)) => match &points.last() {
                Some(ParameterRayPoint { result: Ok(prev), .. }) => {
                    let prev: &ParameterRaySolution = prev;
                    (now.kappa - prev.kappa).norm() > JUMP_FACTOR * step
                }
                _ => false,
            },
            _ => false,
        };
        points.push(ParameterRayPoint {
            offset: offsets[i],
            result,
            jump,
        });
    }
    Ok(points)
}

/// `F^{n-1}(pi + 2) / 2pi`, the smallest `M` accepted by [`kappa_lower_bound`].
pub fn kappa_bound_threshold(n: usize) -> Result<f64, ParamError> {
    if n == 0 {
        return Err(ParamError::HypothesisViolated("n must be positive".into()));
    }
    Ok(f_iter(std::f64::consts::PI + 2.0, n - 1)? / TWO_PI)
}

/// `(1/5) F^{-(n-1)}(2pi M)`, a lower bound for `|k|` when the singular value
/// has a far-right orbit point of imaginary size `M` at step `n`.
pub fn kappa_lower_bound(n: usize, m: f64) -> Result<f64, ParamError> {
    let threshold = kappa_bound_threshold(n)?;
    if !(m >= threshold) {
        return Err(ParamError::HypothesisViolated(format!("M = {m} is below {threshold}")));
    }
    Ok(f_inv_iter(TWO_PI * m, n - 1) / 5.0)
}
