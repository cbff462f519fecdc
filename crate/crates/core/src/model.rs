//! The model dynamics on pairs `(s, t)`: minimal potentials, survival,
//! classification of addresses and the validity region `Y_Q`.

use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::address::{AddressError, ExternalAddress, TailRule};
use crate::TWO_PI;

/// Potential beyond which the influence of deeper entries is below `e^{-50}`.
pub const T_MAX: f64 = 50.0;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_HORIZON: usize = 64;

/// Orbit length available to the survival predicate inside bisection.
const BISECTION_HORIZON: usize = 256;
/// Periods iterated before a shrinking periodic orbit is given up on.
const PERIOD_CAP: usize = 100_000;
/// Slack `c` in the growth condition `r_{n+1} <= exp(r_n) + c`.
const GROWTH_SLACK: f64 = TWO_PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("F overflows at t = {0}")]
    Overflow(f64),
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error("undecided within horizon {0}")]
    Indeterminate(usize),
    #[error("address is not exponentially bounded")]
    NotExponentiallyBounded,
    #[error("invalid escape-speed specification: {0}")]
    SpeedSpecInvalid(String),
    #[error("precondition violated: the address is slow")]
    PreconditionSlowAddress,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub address: ExternalAddress,
    pub potential: f64,
}

impl ModelPoint {
    pub fn new(address: ExternalAddress, potential: f64) -> Self {
        ModelPoint { address, potential }
    }

    /// `Z(s, t) = t + 2 pi i s_1`.
    pub fn z(&self) -> Result<Complex64, ModelError> {
        Ok(Complex64::new(self.potential, TWO_PI * self.address.value(1)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalVerdict {
    /// The potential is negative after `step` applications of the model map.
    Dead(usize),
    EscapesInX,
    SurvivesSlow,
    Indeterminate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddressClass {
    NotExponentiallyBounded,
    Fast,
    Slow,
}

impl AddressClass {
    pub fn name(self) -> &'static str {
        match self {
            AddressClass::NotExponentiallyBounded => "NotExponentiallyBounded",
            AddressClass::Fast => "Fast",
            AddressClass::Slow => "Slow",
        }
    }
}

/// `F(t) = e^t - 1`.
pub fn f(t: f64) -> Result<f64, ModelError> {
    let v = t.exp_m1();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::Overflow(t))
    }
}

/// `F^{-1}(y) = ln(1 + y)`, accurate for small `y`.
pub fn f_inv(y: f64) -> f64 {
    y.ln_1p()
}

pub fn f_iter(t: f64, n: usize) -> Result<f64, ModelError> {
    (0..n).try_fold(t, |v, _| f(v))
}

pub fn f_inv_iter(y: f64, n: usize) -> f64 {
    (0..n).fold(y, |v, _| f_inv(v))
}

/// `ln F^n(t)`, valid one level beyond the range of [`f_iter`].
pub fn ln_f_iter(t: f64, n: usize) -> Result<f64, ModelError> {
    if n == 0 {
        return Ok(t.ln());
    }
    let below = f_iter(t, n - 1)?;
    match f(below) {
        Ok(v) => Ok(v.ln()),
        // ln(e^y - 1) = y once y exceeds the float range of e^y.
        Err(_) => Ok(below),
    }
}

/// `F^e(x)` for a signed exponent `e`.
fn f_power(x: f64, e: i64) -> Result<f64, ModelError> {
    if e >= 0 {
        f_iter(x, e as usize)
    } else {
        Ok(f_inv_iter(x, e.unsigned_abs() as usize))
    }
}

/// One application of the model map; the new potential may be negative.
pub fn model_step(p: &ModelPoint) -> Result<ModelPoint, ModelError> {
    let t = f(p.potential)? - p.address.weight(2)?;
    Ok(ModelPoint::new(p.address.shift(), t))
}

/// `t*_s = sup_{k >= 1} F^{-k}(2 pi |s_{k+1}|)`.
pub fn t_star(s: &ExternalAddress, horizon: usize) -> Result<f64, ModelError> {
    let m = s.prefix().len();
    let term = |k: usize| -> Result<f64, ModelError> { Ok(f_inv_iter(s.weight(k + 1)?, k)) };
    match s.tail() {
        TailRule::Periodic(block) => {
            // Beyond one full period every term is dominated by an earlier one.
            let last = (m + block.len()).max(1);
            (1..=last).try_fold(0.0f64, |acc, k| Ok(acc.max(term(k)?)))
        }
        TailRule::PolyGrowth { c, p, offset, skip, .. } => {
            let a = 2f64.powf(*p);
            let b = TWO_PI * ((a + 1.0) * offset.unsigned_abs() as f64 + 1.0);
            let mut y0 = a.ln().max(0.0) + 1.0;
            while y0.exp_m1() < a * y0 + b {
                y0 += 0.5;
            }
            let mut best = 0.0f64;
            for k in 1..=horizon.max(m + 1) {
                best = best.max(term(k)?);
                if k + 1 > m {
                    let n = (k + 1 - m) as u64 + skip;
                    let magnitude = (c * (n as f64).powf(*p)).ceil();
                    // From here on w_{j+1} <= a w_j + b <= F(w_j), so the terms decrease.
                    if s.weight(k + 1)? >= y0 && magnitude >= offset.unsigned_abs() as f64 {
                        return Ok(best);
                    }
                }
            }
            Err(ModelError::Indeterminate(horizon))
        }
        TailRule::Tower { x, skip, .. } => {
            // Terms converge to F^{1 - m + skip}(x); the floors only perturb
            // them by amounts that the inverse iterates shrink away.
            let limit = f_power(*x, 1 + *skip as i64 - m as i64)?;
            let mut best = limit;
            for k in 1..=horizon.max(m + 1) {
                match term(k) {
                    Ok(v) => best = best.max(v),
                    Err(ModelError::Address(AddressError::HorizonExceeded { .. })) => break,
                    Err(e) => return Err(e),
                }
            }
            Ok(best)
        }
    }
}

enum Fate {
    Dead(usize),
    Escapes,
    Slow,
    Unknown,
}

/// Forward survival analysis of `(s, t)`.
///
/// With `resolve`, an orbit that leaves the float range or the horizon is
/// decided by the midpoint of `[t*, t* + 1]` at the deepest level where `t*`
/// is known; the uncertainty this leaves at level 0 is below float resolution
/// once that level is a few steps deep.
fn fate(s: &ExternalAddress, t: f64, horizon: usize, resolve: bool) -> Result<Fate, ModelError> {
    if t < 0.0 {
        return Ok(Fate::Dead(0));
    }
    if let TailRule::Periodic(block) = s.tail() {
        let m = s.prefix().len();
        let mut tau = t;
        for level in 0..m {
            tau = match f(tau) {
                Ok(v) => v - s.weight(level + 2)?,
                Err(_) => return Ok(Fate::Escapes),
            };
            if tau < 0.0 {
                return Ok(Fate::Dead(level + 1));
            }
        }
        let mut level = m;
        // The period map is convex with value <= 0 at 0, so it exceeds the
        // identity exactly to the right of its largest fixed point.
        for _ in 0..PERIOD_CAP {
            let start = tau;
            for _ in 0..block.len() {
                tau = match f(tau) {
                    Ok(v) => v - s.weight(level + 2)?,
                    Err(_) => return Ok(Fate::Escapes),
                };
                level += 1;
                if tau < 0.0 {
                    return Ok(Fate::Dead(level));
                }
            }
            if tau > start {
                return Ok(Fate::Escapes);
            }
            if tau == start {
                return Ok(Fate::Slow);
            }
        }
        return Ok(Fate::Unknown);
    }

    let mut tau = t;
    // Level of the last available bound t* and whether tau cleared its midpoint.
    let mut last_cut: Option<(usize, bool)> = None;
    for n in 0..=horizon {
        if let Ok(bound) = t_star(&s.shift_by(n), horizon) {
            if tau > bound + 1.0 {
                return Ok(Fate::Escapes);
            }
            last_cut = Some((n, tau >= bound + 0.5));
        }
        if n == horizon {
            break;
        }
        let next = s.weight(n + 2).ok().and_then(|w| f(tau).ok().map(|v| v - w));
        match next {
            Some(v) => tau = v,
            None => break,
        }
        if tau < 0.0 {
            return Ok(Fate::Dead(n + 1));
        }
    }
    Ok(match (resolve, last_cut) {
        (true, Some((_, true))) => Fate::Escapes,
        (true, Some((n, false))) => Fate::Dead(n),
        _ => Fate::Unknown,
    })
}

pub fn survives(p: &ModelPoint, horizon: usize) -> Result<SurvivalVerdict, ModelError> {
    Ok(match fate(&p.address, p.potential, horizon, false)? {
        Fate::Dead(n) => SurvivalVerdict::Dead(n),
        Fate::Escapes => SurvivalVerdict::EscapesInX,
        Fate::Slow => SurvivalVerdict::SurvivesSlow,
        Fate::Unknown => SurvivalVerdict::Indeterminate(horizon),
    })
}

fn alive(s: &ExternalAddress, t: f64) -> Result<bool, ModelError> {
    match fate(s, t, BISECTION_HORIZON, true)? {
        Fate::Dead(_) => Ok(false),
        Fate::Escapes | Fate::Slow => Ok(true),
        Fate::Unknown => Err(ModelError::Indeterminate(BISECTION_HORIZON)),
    }
}

/// Bracket `(lo, hi)` around `t_s` with `hi - lo <= tol`; `hi` survives.
pub fn t_s_bracket(s: &ExternalAddress, tol: f64) -> Result<(f64, f64), ModelError> {
    if !(tol > 0.0) {
        return Err(ModelError::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let lower = match t_star(s, BISECTION_HORIZON) {
        Ok(v) => v,
        Err(ModelError::Overflow(_)) => return Err(ModelError::NotExponentiallyBounded),
        Err(e) => return Err(e),
    };
    if alive(s, lower)? {
        return Ok((lower, lower));
    }
    let (mut lo, mut hi) = (lower, lower + 1.0);
    if !alive(s, hi)? {
        return Err(ModelError::Indeterminate(BISECTION_HORIZON));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if alive(s, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Minimal potential `t_s`, located by bisection on `[t*_s, t*_s + 1]`.
pub fn t_s(s: &ExternalAddress, tol: f64) -> Result<f64, ModelError> {
    Ok(t_s_bracket(s, tol)?.1)
}

/// Potentials `T(F^j(s, t_s))` for `j < len`.
///
/// Only the deepest one is found by bisection; the others follow from the
/// contracting recursion `T_j = F^{-1}(T_{j+1} + 2pi|s_{j+2}|)`.
pub fn endpoint_orbit(s: &ExternalAddress, len: usize, tol: f64) -> Result<Vec<f64>, ModelError> {
    if len == 0 {
        return Ok(Vec::new());
    }
    let mut orbit = vec![0.0; len];
    orbit[len - 1] = t_s(&s.shift_by(len - 1), tol)?;
    for j in (0..len - 1).rev() {
        orbit[j] = f_inv(orbit[j + 1] + s.weight(j + 2)?);
    }
    Ok(orbit)
}

/// Every address of the three tail taxa is exponentially bounded; bounded
/// tails are slow and unbounded growing tails are fast.
pub fn classify(s: &ExternalAddress) -> AddressClass {
    match s.tail() {
        TailRule::Periodic(_) => AddressClass::Slow,
        TailRule::PolyGrowth { .. } | TailRule::Tower { .. } => AddressClass::Fast,
    }
}

/// `Q(K) = max(ln(4(K + pi + 3)), pi + 2)`.
pub fn q_threshold(k: f64) -> f64 {
    use std::f64::consts::PI;
    (4.0 * (k + PI + 3.0)).ln().max(PI + 2.0)
}

/// Whether all forward potentials of `p` stay `>= q`.
///
/// Iteration stops once a potential exceeds [`T_MAX`], which counts as
/// membership.
pub fn in_y(p: &ModelPoint, q: f64, horizon: usize) -> Result<bool, ModelError> {
    let s = &p.address;
    let mut tau = p.potential;
    if tau < q {
        return Ok(false);
    }
    if let TailRule::Periodic(block) = s.tail() {
        let m = s.prefix().len();
        let mut level = 0;
        let mut start = tau;
        while level < m + block.len() {
            if level == m {
                start = tau;
            }
            if tau > T_MAX {
                return Ok(true);
            }
            tau = match f(tau) {
                Ok(v) => v - s.weight(level + 2)?,
                Err(_) => return Ok(true),
            };
            level += 1;
            if tau < q {
                return Ok(false);
            }
        }
        return Ok(tau >= start);
    }
    for n in 0..=horizon {
        if tau < q {
            return Ok(false);
        }
        if tau > T_MAX {
            return Ok(true);
        }
        if let Ok(bound) = t_star(&s.shift_by(n), horizon) {
            if tau >= bound + 1.0 + q {
                return Ok(true);
            }
        }
        tau = match f(tau) {
            Ok(v) => v - s.weight(n + 2)?,
            Err(_) => return Ok(true),
        };
    }
    Err(ModelError::Indeterminate(horizon))
}

/// Escape speed sequences `r_n` for [`escape_speed_address`].
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSpec {
    Sqrt,
    /// `r_n = ln(n + 2)`.
    Log,
    Linear(f64),
    /// `r_1, r_2, ...` given explicitly.
    Table(Vec<f64>),
}

impl SpeedSpec {
    pub fn r(&self, n: usize) -> Option<f64> {
        match self {
            SpeedSpec::Sqrt => Some((n as f64).sqrt()),
            SpeedSpec::Log => Some(((n + 2) as f64).ln()),
            SpeedSpec::Linear(alpha) => Some(alpha * n as f64),
            SpeedSpec::Table(values) => values.get(n.checked_sub(1)?).copied(),
        }
    }
}

impl FromStr for SpeedSpec {
    type Err = ModelError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let invalid = |msg: &str| ModelError::SpeedSpecInvalid(format!("{msg}: '{src}'"));
        let parse_real = |text: &str| text.trim().parse::<f64>().map_err(|_| invalid("bad number"));
        match src.trim() {
            "sqrt" => Ok(SpeedSpec::Sqrt),
            "log" => Ok(SpeedSpec::Log),
            other => {
                if let Some(rest) = other.strip_prefix("linear:") {
                    Ok(SpeedSpec::Linear(parse_real(rest)?))
                } else if let Some(rest) = other.strip_prefix("table:") {
                    let values = rest.split(',').map(parse_real).collect::<Result<Vec<_>, _>>()?;
                    Ok(SpeedSpec::Table(values))
                } else {
                    Err(invalid("expected sqrt, log, linear:<a> or table:<values>"))
                }
            }
        }
    }
}

/// Address `s` with `s_{n+1} = floor(F(r_n) / 2pi)` for `n <= n_terms`,
/// continued by a locally fitted polynomial tail.
pub fn escape_speed_address(spec: &SpeedSpec, n_terms: usize) -> Result<ExternalAddress, ModelError> {
    if n_terms < 2 {
        return Err(ModelError::SpeedSpecInvalid("need at least two terms".into()));
    }
    let r: Vec<f64> = (1..=n_terms + 1)
        .map(|n| spec.r(n).ok_or_else(|| ModelError::SpeedSpecInvalid(format!("r_{n} is not available"))))
        .collect::<Result<_, _>>()?;
    for (i, pair) in r.windows(2).enumerate() {
        let (now, next) = (pair[0], pair[1]);
        if !(now.is_finite() && now >= 0.0) {
            return Err(ModelError::SpeedSpecInvalid(format!("r_{} = {now} is not a nonnegative number", i + 1)));
        }
        if next > now.exp() + GROWTH_SLACK {
            return Err(ModelError::SpeedSpecInvalid(format!("r_{} grows faster than exp(r_{})", i + 2, i + 1)));
        }
    }
    if !(r[n_terms] > r[0]) {
        return Err(ModelError::SpeedSpecInvalid("r_n does not tend to infinity on the window".into()));
    }
    let mut prefix = vec![0i64];
    for (n, &rn) in r.iter().take(n_terms).enumerate() {
        let v = (f(rn)? / TWO_PI).floor();
        if v >= 9.2e18 {
            return Err(ModelError::SpeedSpecInvalid(format!("s_{} exceeds the integer range", n + 2)));
        }
        prefix.push(v as i64);
    }
    // Fit through the last entry and the latest smaller positive one.
    let vb = prefix[n_terms] as f64;
    let b = (n_terms + 1) as f64;
    let earlier = (1..n_terms).rev().find(|&i| prefix[i] < prefix[n_terms]);
    let (va, a) = earlier.map_or((0.0, 1.0), |i| (prefix[i] as f64, (i + 1) as f64));
    let tail = if va >= 1.0 && vb > va {
        let p = (vb / va).ln() / (b / a).ln();
        TailRule::PolyGrowth {
            c: vb / b.powf(p),
            p,
            sign: 1,
            skip: (n_terms + 1) as u64,
            offset: 0,
        }
    } else {
        TailRule::Periodic(vec![vb as i64])
    };
    Ok(ExternalAddress::new(prefix, tail)?)
}

/// `b = limsup F^{-(n-1)}(2pi |s_n|)`, exact for the tail taxa.
pub fn minimal_potential(s: &ExternalAddress) -> Result<f64, ModelError> {
    match s.tail() {
        TailRule::Periodic(_) | TailRule::PolyGrowth { .. } => Ok(0.0),
        TailRule::Tower { x, skip, .. } => f_power(*x, 1 + *skip as i64 - s.prefix().len() as i64),
    }
}

/// The decreasing upper bounds `F^{-(n-1)}(t*_n)` of the minimal potential,
/// with `t*_n = t*(sigma^{n-1}(s))`, for `n = 1, ..., len` while computable.
pub fn minimal_potential_upper_bounds(s: &ExternalAddress, len: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for n in 1..=len {
        match t_star(&s.shift_by(n - 1), DEFAULT_HORIZON) {
            Ok(v) if v.is_finite() => out.push(f_inv_iter(v, n - 1)),
            _ => break,
        }
    }
    out
}

/// Windowed test of `2pi|s_n| < C (F^{n-1}(b))^k` for some constant `C`.
///
/// The log-ratio is tracked over the nonzero entries of the window; the
/// condition holds when its late maximum does not exceed its early maximum
/// by more than one.
pub fn parabola_condition(s: &ExternalAddress, k: f64, horizon: usize) -> Result<bool, ModelError> {
    if classify(s) == AddressClass::Slow {
        return Err(ModelError::PreconditionSlowAddress);
    }
    if !(k > 0.0) {
        return Err(ModelError::InvalidArgument(format!("exponent {k} must be positive")));
    }
    let b = minimal_potential(s)?;
    if b == 0.0 {
        // (F^{n-1}(0))^k = 0 while unbounded entries are nonzero.
        return Ok(false);
    }
    let mut ratios = Vec::new();
    for n in 1..=horizon {
        if s.value(n).map(|v| v == 0.0).unwrap_or(false) {
            continue;
        }
        let (Ok(lw), Ok(lf)) = (s.log_weight(n), ln_f_iter(b, n - 1)) else {
            break;
        };
        ratios.push(lw - k * lf);
    }
    if ratios.len() < 3 {
        return Err(ModelError::Indeterminate(horizon));
    }
    let half = ratios.len() / 2;
    let early = ratios[..half].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let late = ratios[half..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(late <= early + 1.0)
}
