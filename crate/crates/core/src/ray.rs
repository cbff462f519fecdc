//! The conjugacy `g` between the model and the dynamical plane of `E_k`,
//! and dynamic rays sampled from it.
//!
//! Inside `Y_Q` the value `g(s, t)` is the limit of pulling back an
//! asymptotic seed along the orbit of `(s, t)`; each pullback `L_j(w) =
//! Log(w - k) + 2 pi i j` contracts by at least one half. Below `Y_Q` the
//! values are obtained by continuation in `t` from a point of `Y_Q`, so that
//! the branch of the logarithm at every level is the one reached continuously.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::address::{AddressError, ExternalAddress};
use crate::model::{self, AddressClass, ModelError, ModelPoint, DEFAULT_HORIZON, T_MAX};
use crate::TWO_PI;

pub const DEPTH_CAP: usize = 64;
/// Distance to `kappa` below which a pullback argument flags a broken ray.
pub const BROKEN_BAND: f64 = 1e-8;
/// Closest approach to `kappa` of a stalled continuation that still counts as
/// a broken ray rather than a numerical failure.
const STALL_BAND: f64 = 1e-6;
/// Largest potential for which `e^t` is formed directly.
const DIRECT_EXP_LIMIT: f64 = 700.0;
/// Largest change of imaginary part per level accepted in one continuation step.
const MAX_IM_JUMP: f64 = PI / 4.0;
const MIN_STEP: f64 = 1e-12;
/// Offset above the endpoint potential used to pick branches for endpoints.
const ENDPOINT_DELTA: f64 = 1e-9;
/// Drift of the nearby orbit from the endpoint orbit that ends its usefulness.
const ENDPOINT_DRIFT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RayError {
    #[error("model point is not in Y_Q")]
    NotInY,
    #[error("pullback argument on the branch cut at level {level}")]
    BranchCutHit { level: usize },
    #[error("floating-point overflow")]
    Overflow,
    #[error("ray broken at level {level}, potential {potential}")]
    BrokenRay { level: usize, potential: f64 },
    #[error("endpoint of a slow address is not an escaping point")]
    SlowEndpoint,
    #[error("potential {potential} is below the minimal potential {t_s}")]
    NotInX { potential: f64, t_s: f64 },
    #[error("continuation stalled at potential {potential}")]
    ContinuationFailed { potential: f64 },
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<AddressError> for RayError {
    fn from(e: AddressError) -> Self {
        RayError::Model(ModelError::Address(e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayContext {
    pub kappa: Complex64,
    /// `K > 2pi + 6` with `|kappa| <= K`.
    pub k_bound: f64,
    pub q: f64,
    pub t_max: f64,
    pub tol: f64,
    pub horizon: usize,
}

impl RayContext {
    /// Context with `K = max(|kappa|, 2pi + 6) + 1`.
    pub fn new(kappa: Complex64) -> Self {
        let k = kappa.norm().max(TWO_PI + 6.0) + 1.0;
        RayContext {
            kappa,
            k_bound: k,
            q: model::q_threshold(k),
            t_max: T_MAX,
            tol: 1e-12,
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn with_bound(kappa: Complex64, k: f64) -> Result<Self, RayError> {
        if !(k > TWO_PI + 6.0 && k >= kappa.norm()) {
            return Err(RayError::InvalidContext(format!("K = {k} must exceed 2pi + 6 and |kappa|")));
        }
        Ok(RayContext {
            k_bound: k,
            q: model::q_threshold(k),
            ..RayContext::new(kappa)
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    /// `2K + 2pi + 4`, the constant of the seeding remainder `e^{-t}(2K + 2pi + 4)`.
    pub fn seed_constant(&self) -> f64 {
        2.0 * self.k_bound + TWO_PI + 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPointResult {
    pub point: Complex64,
    pub error_bound: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySamplePoint {
    /// Parameter of the ray, `t - t_s`.
    pub offset: f64,
    pub potential: f64,
    pub point: Complex64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaySample {
    pub address: ExternalAddress,
    pub t_s: f64,
    pub samples: Vec<RaySamplePoint>,
    pub broken: bool,
    /// Largest offset at which the ray was found broken.
    pub broken_at: Option<f64>,
    pub endpoint_included: bool,
}

fn i_times(y: f64) -> Complex64 {
    Complex64::new(0.0, y)
}

/// Potentials `t, T(F(s,t)), ...` until one exceeds `t_max` or the depth cap.
fn forward_potentials(s: &ExternalAddress, t: f64, t_max: f64) -> Result<Vec<f64>, RayError> {
    let mut out = vec![t];
    while out.len() <= DEPTH_CAP && out[out.len() - 1] <= t_max {
        let j = out.len() - 1;
        out.push(model::f(out[j])? - s.weight(j + 2)?);
    }
    Ok(out)
}

/// `Log(Z(F(s', tau))) + 2 pi i s'_1` for `s' = sigma^level(s)`.
fn seed(s: &ExternalAddress, level: usize, tau: f64) -> Result<Complex64, RayError> {
    Ok(log_image(s, level, tau, Complex64::new(0.0, 0.0))? + i_times(TWO_PI * s.value(level + 1)?))
}

/// `Log(Z(F(s', tau)) - c)` for `s' = sigma^level(s)`, in log-space once
/// `e^tau` leaves the float range.
fn log_image(s: &ExternalAddress, level: usize, tau: f64, c: Complex64) -> Result<Complex64, RayError> {
    let direct = match s.value(level + 2) {
        Ok(v) if tau <= DIRECT_EXP_LIMIT => Some(v),
        _ => None,
    };
    let log_z = match direct {
        Some(v) => (Complex64::new(model::f(tau)? - TWO_PI * v.abs(), TWO_PI * v) - c).ln(),
        None => {
            // Z - c = e^tau (1 - e^{-tau} - a + i sign a - c e^{-tau}) with a = 2pi|s_2| e^{-tau}.
            let sign = s.signum(level + 2)? as f64;
            let a = if sign == 0.0 { 0.0 } else { (s.log_weight(level + 2)? - tau).exp() };
            let inner = Complex64::new(1.0 - (-tau).exp() - a, sign * a) - c * (-tau).exp();
            if !(inner.norm() > 0.0) || !a.is_finite() {
                return Err(RayError::Overflow);
            }
            Complex64::new(tau, 0.0) + inner.ln()
        }
    };
    Ok(log_z)
}

/// `err / (|w - kappa| - err)`: how an error `err` in `w` survives one pullback.
fn propagate(err: f64, w: Complex64, kappa: Complex64) -> f64 {
    let room = (w - kappa).norm() - err;
    if room > 0.0 {
        err / room
    } else {
        f64::INFINITY
    }
}

/// Floor on error bounds from rounding in one pullback.
fn rounding(w: Complex64) -> f64 {
    4.0 * f64::EPSILON * w.norm().max(1.0)
}

fn principal_pullback(ctx: &RayContext, s: &ExternalAddress, level: usize, w: Complex64) -> Result<Complex64, RayError> {
    let arg = w - ctx.kappa;
    if arg.re <= 0.0 && arg.im.abs() <= ctx.tol * arg.norm().max(1.0) {
        return Err(RayError::BranchCutHit { level });
    }
    Ok(arg.ln() + i_times(TWO_PI * s.value(level + 1)?))
}

/// Seed at the deepest given level and pull back through the principal
/// branches `L_{s_{j+1}}`.
///
/// `potentials[j]` is the potential of `F^j(s, t)`; every one of them must
/// be at least `Q`.
pub fn pullback_chain(ctx: &RayContext, s: &ExternalAddress, potentials: &[f64]) -> Result<RayPointResult, RayError> {
    let depth = potentials.len().checked_sub(1).ok_or(RayError::NotInY)?;
    let mut w = seed(s, depth, potentials[depth])?;
    let seed_err = (-potentials[depth]).exp() * ctx.seed_constant();
    let mut err = seed_err;
    for level in (0..depth).rev() {
        err = propagate(err, w, ctx.kappa);
        w = principal_pullback(ctx, s, level, w)?;
        err = err.max(rounding(w));
    }
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(RayError::Overflow);
    }
    // Each pullback contracts by one half on Y_Q.
    let contracted = seed_err * 0.5f64.powi(depth as i32) + rounding(w) * depth as f64;
    Ok(RayPointResult {
        point: w,
        error_bound: err.min(contracted),
        depth,
    })
}

/// `g(s, t)` for `(s, t)` in `Y_Q`.
pub fn g_point(ctx: &RayContext, p: &ModelPoint) -> Result<RayPointResult, RayError> {
    if !model::in_y(p, ctx.q, ctx.horizon)? {
        return Err(RayError::NotInY);
    }
    let potentials = forward_potentials(&p.address, p.potential, ctx.t_max)?;
    pullback_chain(ctx, &p.address, &potentials)
}

/// The finite approximation `g_k`: `Z(F^k(s, t))` pulled back `k` times.
pub fn g_approx(ctx: &RayContext, p: &ModelPoint, k: usize) -> Result<Complex64, RayError> {
    let s = &p.address;
    let mut tau = p.potential;
    if k == 0 {
        return Ok(Complex64::new(tau, TWO_PI * s.value(1)?));
    }
    for j in 0..k - 1 {
        tau = model::f(tau)? - s.weight(j + 2)?;
    }
    let mut w = log_image(s, k - 1, tau, ctx.kappa)? + i_times(TWO_PI * s.value(k)?);
    for level in (0..k - 1).rev() {
        w = principal_pullback(ctx, s, level, w)?;
    }
    Ok(w)
}

/// `g` on all of `X` away from broken rays, and at escaping endpoints.
pub fn g_extended(ctx: &RayContext, p: &ModelPoint) -> Result<RayPointResult, RayError> {
    if model::in_y(p, ctx.q, ctx.horizon).unwrap_or(false) {
        return g_point(ctx, p);
    }
    let ts = model::t_s(&p.address, ctx.tol)?;
    extended_with(ctx, &p.address, p.potential, ts)
}

fn extended_with(ctx: &RayContext, s: &ExternalAddress, t: f64, ts: f64) -> Result<RayPointResult, RayError> {
    if t < ts {
        return Err(RayError::NotInX { potential: t, t_s: ts });
    }
    if t <= ts + ctx.tol {
        return match model::classify(s) {
            AddressClass::Fast => g_endpoint(ctx, s),
            _ => Err(RayError::SlowEndpoint),
        };
    }
    if model::in_y(&ModelPoint::new(s.clone(), t), ctx.q, ctx.horizon).unwrap_or(false) {
        return g_point(ctx, &ModelPoint::new(s.clone(), t));
    }
    let chain = continuation(ctx, s, t, ts)?;
    Ok(RayPointResult {
        point: chain.values[0],
        error_bound: chain.errors[0],
        depth: chain.potentials.len() - 1,
    })
}

/// Values `g(F^j(s, t))` for `j = 0..=d`, where level `d` lies in `Y_Q`.
struct Chain {
    potentials: Vec<f64>,
    values: Vec<Complex64>,
    errors: Vec<f64>,
}

enum GuidedFailure {
    Broken { level: usize, potential: f64 },
    Jump { distance: f64 },
    Fatal(RayError),
}

impl From<RayError> for GuidedFailure {
    fn from(e: RayError) -> Self {
        GuidedFailure::Fatal(e)
    }
}

/// Pull back from `top` at level `potentials.len() - 1`, choosing at each
/// level the branch closest to `guide`.
fn guided_pullback(
    ctx: &RayContext,
    potentials: Vec<f64>,
    top: RayPointResult,
    guide: &[Complex64],
) -> Result<Chain, GuidedFailure> {
    let d = potentials.len() - 1;
    let mut values = vec![Complex64::new(0.0, 0.0); d + 1];
    let mut errors = vec![0.0; d + 1];
    values[d] = top.point;
    errors[d] = top.error_bound;
    let mut closest = f64::INFINITY;
    for level in (0..d).rev() {
        let arg = values[level + 1] - ctx.kappa;
        let distance = arg.norm();
        closest = closest.min(distance);
        if distance < BROKEN_BAND {
            return Err(GuidedFailure::Broken {
                level: level + 1,
                potential: potentials[level + 1],
            });
        }
        let base = arg.ln();
        let m = ((guide[level].im - base.im) / TWO_PI).round();
        let v = base + i_times(TWO_PI * m);
        if (v.im - guide[level].im).abs() > MAX_IM_JUMP {
            return Err(GuidedFailure::Jump { distance: closest });
        }
        values[level] = v;
        errors[level] = propagate(errors[level + 1], values[level + 1], ctx.kappa).max(rounding(v));
    }
    Ok(Chain {
        potentials,
        values,
        errors,
    })
}

/// Orbit potentials of `(s, t)` up to the first level certified in `Y_Q`.
fn direct_level(ctx: &RayContext, s: &ExternalAddress, t: f64) -> Result<Vec<f64>, RayError> {
    let mut taus = vec![t];
    loop {
        let j = taus.len() - 1;
        let tau = taus[j];
        if tau < 0.0 || j >= ctx.horizon {
            return Err(RayError::ContinuationFailed { potential: t });
        }
        if model::in_y(&ModelPoint::new(s.shift_by(j), tau), ctx.q, ctx.horizon).unwrap_or(false) {
            return Ok(taus);
        }
        taus.push(model::f(tau)? - s.weight(j + 2)?);
    }
}

fn extend_guide(ctx: &RayContext, s: &ExternalAddress, prev: &mut Chain, d: usize) -> Result<(), RayError> {
    while prev.values.len() <= d {
        let j = prev.values.len();
        let tau = model::f(prev.potentials[j - 1])? - s.weight(j + 1)?;
        let v = g_point(ctx, &ModelPoint::new(s.shift_by(j), tau))?;
        prev.potentials.push(tau);
        prev.values.push(v.point);
        prev.errors.push(v.error_bound);
    }
    Ok(())
}

/// Follow `g(s, .)` from a potential in `Y_Q` down to `target`.
fn continuation(ctx: &RayContext, s: &ExternalAddress, target: f64, ts: f64) -> Result<Chain, RayError> {
    let mut t_prev = (ts + ctx.q + 0.5).max(target);
    let mut attempts = 0;
    while !model::in_y(&ModelPoint::new(s.clone(), t_prev), ctx.q, ctx.horizon).unwrap_or(false) {
        t_prev += 1.0;
        attempts += 1;
        if attempts > 64 {
            return Err(RayError::ContinuationFailed { potential: target });
        }
    }
    let start = g_point(ctx, &ModelPoint::new(s.clone(), t_prev))?;
    let mut prev = Chain {
        potentials: vec![t_prev],
        values: vec![start.point],
        errors: vec![start.error_bound],
    };
    if t_prev == target {
        return Ok(prev);
    }
    let mut h = (t_prev - target) / 8.0;
    let mut closest = f64::INFINITY;
    loop {
        let t_new = (t_prev - h).max(target);
        let taus = direct_level(ctx, s, t_new)?;
        let d = taus.len() - 1;
        // The guide must reach level d; a step that needs it beyond the
        // float range of the previous orbit is too long.
        let attempt = extend_guide(ctx, s, &mut prev, d).and_then(|()| {
            let top = g_point(ctx, &ModelPoint::new(s.shift_by(d), taus[d]))?;
            Ok(guided_pullback(ctx, taus, top, &prev.values))
        });
        let outcome = match attempt {
            Ok(outcome) => outcome,
            Err(RayError::Model(ModelError::Overflow(_))) => Err(GuidedFailure::Jump { distance: f64::INFINITY }),
            Err(e) => return Err(e),
        };
        match outcome {
            Ok(chain) => {
                prev = chain;
                t_prev = t_new;
                if t_new == target {
                    return Ok(prev);
                }
                h *= 1.5;
            }
            Err(GuidedFailure::Broken { level, potential }) => {
                return Err(RayError::BrokenRay { level, potential });
            }
            Err(GuidedFailure::Jump { distance }) => {
                closest = closest.min(distance);
                h *= 0.5;
                if h < MIN_STEP {
                    if closest < STALL_BAND {
                        let level = (0..prev.values.len().saturating_sub(1))
                            .map(|j| j + 1)
                            .min_by(|&a, &b| {
                                let da = (prev.values[a] - ctx.kappa).norm();
                                let db = (prev.values[b] - ctx.kappa).norm();
                                da.total_cmp(&db)
                            })
                            .unwrap_or(1);
                        let potential = prev.potentials.get(level).copied().unwrap_or(t_prev);
                        return Err(RayError::BrokenRay { level, potential });
                    }
                    return Err(RayError::ContinuationFailed { potential: t_prev });
                }
            }
            Err(GuidedFailure::Fatal(e)) => return Err(e),
        }
    }
}

/// The escaping endpoint `g(s, t_s)` of the ray at a fast address.
pub fn g_endpoint(ctx: &RayContext, s: &ExternalAddress) -> Result<RayPointResult, RayError> {
    if model::classify(s) != AddressClass::Fast {
        return Err(RayError::SlowEndpoint);
    }
    endpoint_at(ctx, s, 0)
}

/// Endpoint potentials down to the first level whose lower bound `t*`
/// exceeds `t_max`, or the depth cap.
fn endpoint_orbit(ctx: &RayContext, s: &ExternalAddress) -> Result<Vec<f64>, RayError> {
    let mut len = DEPTH_CAP + 1;
    for j in 0..=DEPTH_CAP {
        if model::t_star(&s.shift_by(j), ctx.horizon).is_ok_and(|v| v > ctx.t_max) {
            len = j + 1;
            break;
        }
    }
    Ok(model::endpoint_orbit(s, len, ctx.tol)?)
}

fn endpoint_at(ctx: &RayContext, s: &ExternalAddress, consumed: usize) -> Result<RayPointResult, RayError> {
    if consumed > ctx.horizon {
        return Err(RayError::ContinuationFailed { potential: f64::NAN });
    }
    let orbit = endpoint_orbit(ctx, s)?;
    let first_good = orbit.iter().rposition(|&t| t < ctx.q).map_or(0, |j| j + 1);
    if first_good == 0 {
        return pullback_chain(ctx, s, &orbit);
    }
    if first_good >= orbit.len() {
        return Err(RayError::ContinuationFailed { potential: orbit[0] });
    }
    let near = continuation(ctx, s, orbit[0] + ENDPOINT_DELTA, orbit[0])?;
    let d_near = near.values.len() - 1;
    if d_near == 0 {
        return Ok(RayPointResult {
            point: near.values[0],
            error_bound: near.errors[0],
            depth: 0,
        });
    }
    let drift = (1..=d_near)
        .find(|&j| j >= orbit.len() || (near.potentials[j] - orbit[j]).abs() > ENDPOINT_DRIFT)
        .unwrap_or(d_near);
    let level = drift.min(d_near).max(1);
    let deeper = endpoint_at(ctx, &s.shift_by(level), consumed + level)?;
    let mut potentials = orbit;
    potentials.truncate(level + 1);
    while potentials.len() <= level {
        potentials.push(f64::NAN);
    }
    match guided_pullback(ctx, potentials, deeper, &near.values) {
        Ok(chain) => Ok(RayPointResult {
            point: chain.values[0],
            error_bound: chain.errors[0],
            depth: consumed + level + deeper.depth,
        }),
        Err(GuidedFailure::Broken { level, potential }) => Err(RayError::BrokenRay { level, potential }),
        Err(GuidedFailure::Jump { .. }) => Err(RayError::ContinuationFailed { potential: near.potentials[0] }),
        Err(GuidedFailure::Fatal(e)) => Err(e),
    }
}

/// Samples of the dynamic ray `g_s(u) = g(s, u + t_s)` at `n` equally spaced
/// offsets `u` in `[t_lo, t_hi]`.
pub fn ray_sample(ctx: &RayContext, s: &ExternalAddress, t_lo: f64, t_hi: f64, n: usize) -> Result<RaySample, RayError> {
    if !(t_lo >= 0.0 && t_lo < t_hi && t_hi.is_finite()) || n < 2 {
        return Err(RayError::InvalidContext(format!(
            "need 0 <= t_lo < t_hi and n >= 2, got [{t_lo}, {t_hi}], n = {n}"
        )));
    }
    let ts = model::t_s(s, ctx.tol)?;
    let class = model::classify(s);
    let step = (t_hi - t_lo) / (n - 1) as f64;
    let mut offsets: Vec<f64> = (0..n).map(|i| t_lo + step * i as f64).collect();
    offsets[n - 1] = t_hi;
    if offsets[0] == 0.0 && class != AddressClass::Fast {
        offsets[0] = 0.5 * step;
    }
    let endpoint_included = offsets[0] == 0.0;
    let results: Vec<Result<RayPointResult, RayError>> = offsets
        .par_iter()
        .map(|&u| {
            if u == 0.0 {
                g_endpoint(ctx, s)
            } else {
                extended_with(ctx, s, ts + u, ts)
            }
        })
        .collect();
    let last_broken = results.iter().rposition(|r| matches!(r, Err(RayError::BrokenRay { .. })));
    let keep_from = last_broken.map_or(0, |i| i + 1);
    let mut samples = Vec::with_capacity(n - keep_from);
    for (i, result) in results.into_iter().enumerate().skip(keep_from) {
        let r = result?;
        samples.push(RaySamplePoint {
            offset: offsets[i],
            potential: ts + offsets[i],
            point: r.point,
            error_bound: r.error_bound,
        });
    }
    Ok(RaySample {
        address: s.clone(),
        t_s: ts,
        samples,
        broken: last_broken.is_some(),
        broken_at: last_broken.map(|i| offsets[i]),
        endpoint_included: endpoint_included && last_broken.is_none(),
    })
}

/// `|E_k(g(p)) - g(F(p))|`.
pub fn functional_equation_residual(ctx: &RayContext, p: &ModelPoint) -> Result<f64, RayError> {
    let here = g_extended(ctx, p)?.point;
    let image = g_extended(ctx, &model::model_step(p)?)?.point;
    Ok((here.exp() + ctx.kappa - image).norm())
}
