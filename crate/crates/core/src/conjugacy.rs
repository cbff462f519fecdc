//! Recovering model coordinates from points of the dynamical plane, and the
//! conjugacy `phi = g^{k2} o (g^{k1})^{-1}` between two exponential maps.

use num_complex::Complex64;
use thiserror::Error;

use crate::address::ExternalAddress;
use crate::model::{self, f_inv};
use crate::ray::{RayContext, RayError};
use crate::TWO_PI;

/// Propagated error beyond which an orbit point no longer determines its strip.
const STRIP_RELIABILITY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConjugacyError {
    #[error("orbit point {0} lies left of Re = Q + 1")]
    LeftHalfplaneViolation(usize),
    #[error("orbit point {0} lies on a strip boundary")]
    StripBoundary(usize),
    #[error("potential not converged (discrepancy {discrepancy})")]
    NotConverged { discrepancy: f64 },
    #[error("orbit point {step} has modulus {modulus} below R = {radius}")]
    NotInA { step: usize, modulus: f64, radius: f64 },
    #[error("point is not finite")]
    InvalidPoint,
    #[error(transparent)]
    Ray(#[from] RayError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    /// `E^n(z)` while `Re <= T_max`, then the first point beyond it.
    pub points: Vec<Complex64>,
    /// Strip indices of the points whose strip is determined.
    pub strips: Vec<i64>,
    /// Propagated floating-point error of each point.
    pub errors: Vec<f64>,
}

impl OrbitRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The recovered entries `s_1 s_2 ...`.
    pub fn prefix(&self) -> &[i64] {
        &self.strips
    }
}

/// Index `k` with `Im w` in `((2k - 1) pi, (2k + 1) pi)`, and the distance
/// of `Im w` to the nearer boundary line.
pub fn strip_of(w: Complex64) -> (i64, f64) {
    let k = (w.im / TWO_PI).round();
    let distance = std::f64::consts::PI - (w.im - TWO_PI * k).abs();
    (k as i64, distance)
}

pub fn external_address_of(ctx: &RayContext, z: Complex64, horizon: usize) -> Result<OrbitRecord, ConjugacyError> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(ConjugacyError::InvalidPoint);
    }
    let mut record = OrbitRecord {
        points: vec![z],
        strips: Vec::new(),
        errors: vec![f64::EPSILON * z.norm()],
    };
    let mut reliable = true;
    loop {
        let j = record.points.len() - 1;
        let w = record.points[j];
        if w.re < ctx.q + 1.0 {
            return Err(ConjugacyError::LeftHalfplaneViolation(j));
        }
        if reliable {
            let (k, distance) = strip_of(w);
            if distance > record.errors[j].max(ctx.tol) {
                record.strips.push(k);
            } else if record.errors[j] < STRIP_RELIABILITY {
                return Err(ConjugacyError::StripBoundary(j));
            } else {
                reliable = false;
            }
        }
        if w.re > ctx.t_max || j >= horizon {
            return Ok(record);
        }
        let next = w.exp() + ctx.kappa;
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Ok(record);
        }
        let err = record.errors[j] * w.re.exp() + f64::EPSILON * next.norm();
        record.points.push(next);
        record.errors.push(err);
    }
}

/// Potential at level 0 recovered from the orbit seeded at `level`.
///
/// Returns the potential and an a-posteriori bound on its error.
fn potential_from(ctx: &RayContext, record: &OrbitRecord, level: usize) -> (f64, f64) {
    let w = record.points[level];
    let mut tau = w.re;
    // |Re g(s, t) - t| <= e^{-t}(2K + 2pi + 4) far right, and < 2 on Y_Q.
    let mut err = ((-tau).exp() * ctx.seed_constant()).min(2.0) + record.errors[level];
    for j in (0..level).rev() {
        let y = tau + TWO_PI * (record.strips[j + 1] as f64).abs();
        tau = f_inv(y);
        err /= 1.0 + y - err.min(y);
    }
    (tau, err)
}

/// The potential `t` with `z = g(s, t)`, recovered by the backward recursion
/// `tau_{j-1} = F^{-1}(tau_j + 2pi|s_{j+1}|)`.
pub fn potential_of(ctx: &RayContext, record: &OrbitRecord) -> Result<f64, ConjugacyError> {
    let usable = record.points.len().min(record.strips.len());
    if usable == 0 {
        return Err(ConjugacyError::NotConverged {
            discrepancy: f64::INFINITY,
        });
    }
    if usable == 1 {
        let (tau, bound) = potential_from(ctx, record, 0);
        return if bound <= ctx.tol * tau.abs().max(1.0) {
            Ok(tau)
        } else {
            Err(ConjugacyError::NotConverged { discrepancy: bound })
        };
    }
    let (deep, bound) = potential_from(ctx, record, usable - 1);
    let (shallow, _) = potential_from(ctx, record, usable - 2);
    let discrepancy = (deep - shallow).abs();
    let allowed = ctx.tol * deep.abs().max(1.0);
    if bound <= allowed || discrepancy <= allowed {
        Ok(deep)
    } else {
        Err(ConjugacyError::NotConverged { discrepancy })
    }
}

/// Model coordinates `(s, t)` of `z`; the address is the recovered prefix
/// followed by zeros.
pub fn model_coordinates(ctx: &RayContext, z: Complex64, horizon: usize) -> Result<(ExternalAddress, f64), ConjugacyError> {
    let record = external_address_of(ctx, z, horizon)?;
    let t = potential_of(ctx, &record)?;
    Ok((ExternalAddress::preperiodic(record.prefix(), &[0]), t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiResult {
    pub point: Complex64,
    pub error_bound: f64,
    pub potential: f64,
    pub prefix: Vec<i64>,
    /// `E_{k1}^n(z)` over the recorded window.
    pub orbit: Vec<Complex64>,
    /// `E_{k2}^n(phi(z))`, obtained by pullback.
    pub chain: Vec<Complex64>,
}

impl PhiResult {
    /// `(n, |E_{k1}^n(z) - E_{k2}^n(phi(z))|)` below the seeding level.
    pub fn speed_table(&self) -> Vec<(usize, f64)> {
        let seeded = self.chain.len() - 1;
        (0..seeded).map(|n| (n, (self.orbit[n] - self.chain[n]).norm())).collect()
    }
}

/// Shared contexts with `K = max(|k1|, |k2|, 2pi + 6) + 1` and the radius
/// `R = Q(K) + 1` of the domain `A`.
pub fn joint_contexts(kappa1: Complex64, kappa2: Complex64) -> (RayContext, RayContext, f64) {
    let k = kappa1.norm().max(kappa2.norm()).max(TWO_PI + 6.0) + 1.0;
    let c1 = RayContext::with_bound(kappa1, k).expect("K exceeds 2pi + 6 and both moduli");
    let c2 = RayContext::with_bound(kappa2, k).expect("K exceeds 2pi + 6 and both moduli");
    let radius = c1.q + 1.0;
    (c1, c2, radius)
}

pub fn phi(ctx1: &RayContext, ctx2: &RayContext, z: Complex64) -> Result<PhiResult, ConjugacyError> {
    let radius = model::q_threshold(ctx1.k_bound.max(ctx2.k_bound)) + 1.0;
    let record = external_address_of(ctx1, z, ctx1.horizon)?;
    for (step, w) in record.points.iter().enumerate().skip(1) {
        if w.norm() < radius {
            return Err(ConjugacyError::NotInA {
                step,
                modulus: w.norm(),
                radius,
            });
        }
    }
    let potential = potential_of(ctx1, &record)?;
    let depth = record.points.len().min(record.strips.len()) - 1;
    let k = ctx1.k_bound.max(ctx2.k_bound);
    // Both g^{k1} and g^{k2} are within e^{-tau}(2K + 2pi + 4) of the same
    // asymptotic value at the seeding level.
    let top = record.points[depth];
    let mut err = 2.0 * (-top.re).exp() * (2.0 * k + TWO_PI + 4.0) + record.errors[depth];
    let mut chain = vec![Complex64::new(0.0, 0.0); depth + 1];
    chain[depth] = top;
    for j in (0..depth).rev() {
        let arg = chain[j + 1] - ctx2.kappa;
        if arg.re <= 0.0 && arg.im.abs() <= ctx2.tol * arg.norm().max(1.0) {
            return Err(RayError::BranchCutHit { level: j }.into());
        }
        chain[j] = arg.ln() + Complex64::new(0.0, TWO_PI * record.strips[j] as f64);
        let room = arg.norm() - err;
        err = if room > 0.0 { err / room } else { f64::INFINITY };
        err = err.max(4.0 * f64::EPSILON * chain[j].norm().max(1.0));
    }
    Ok(PhiResult {
        point: chain[0],
        error_bound: err,
        potential,
        prefix: record.strips.clone(),
        orbit: record.points[..=depth].to_vec(),
        chain,
    })
}

/// `|phi(E_{k1}(z)) - E_{k2}(phi(z))|` with both sides evaluated separately.
pub fn conjugacy_residual(ctx1: &RayContext, ctx2: &RayContext, z: Complex64) -> Result<f64, ConjugacyError> {
    let here = phi(ctx1, ctx2, z)?.point;
    let image = phi(ctx1, ctx2, z.exp() + ctx1.kappa)?.point;
    Ok((image - (here.exp() + ctx2.kappa)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelPoint;
    use crate::ray::g_point;

    #[test]
    fn strip_readout() {
        assert_eq!(strip_of(Complex64::new(9.0, 7.0)).0, 1);
        assert_eq!(strip_of(Complex64::new(9.0, -7.0)).0, -1);
        assert_eq!(strip_of(Complex64::new(9.0, 0.5)).0, 0);
    }

    #[test]
    fn roundtrip_on_a_periodic_ray() {
        let ctx = RayContext::new(Complex64::new(-2.0, 0.0));
        let s = ExternalAddress::periodic(&[0, 1]);
        let z = g_point(&ctx, &ModelPoint::new(s.clone(), 9.0)).unwrap().point;
        let record = external_address_of(&ctx, z, 64).unwrap();
        for (k, &entry) in record.prefix().iter().enumerate() {
            assert_eq!(entry, s.entry(k + 1).unwrap());
        }
        let t = potential_of(&ctx, &record).unwrap();
        assert!((t - 9.0).abs() < 1e-10, "{t}");
    }

    #[test]
    fn orbit_left_of_the_halfplane() {
        let ctx = RayContext::new(Complex64::new(-2.0, 0.0));
        let err = external_address_of(&ctx, Complex64::new(1.0, 0.0), 64).unwrap_err();
        assert_eq!(err, ConjugacyError::LeftHalfplaneViolation(0));
    }

    #[test]
    fn single_point_records() {
        let ctx = RayContext::new(Complex64::new(-2.0, 0.0));
        let far = external_address_of(&ctx, Complex64::new(60.0, 0.5), 64).unwrap();
        assert_eq!(far.len(), 1);
        assert_eq!(potential_of(&ctx, &far), Ok(60.0));
        let near = external_address_of(&ctx, Complex64::new(8.0, 0.5), 0).unwrap();
        assert_eq!(near.len(), 1);
        assert!(matches!(potential_of(&ctx, &near), Err(ConjugacyError::NotConverged { .. })));
    }

    #[test]
    fn equal_parameters_give_the_identity() {
        let kappa = Complex64::new(0.3, -1.0);
        let (c1, c2, _) = joint_contexts(kappa, kappa);
        let z = g_point(&c1, &ModelPoint::new(ExternalAddress::periodic(&[1, -1]), 9.0)).unwrap().point;
        let r = phi(&c1, &c2, z).unwrap();
        assert!((r.point - z).norm() < 1e-12);
    }

    #[test]
    fn far_right_points_barely_move() {
        let (c1, c2, _) = joint_contexts(Complex64::new(-2.0, 0.0), Complex64::new(0.0, 1.0));
        let z = g_point(&c1, &ModelPoint::new(ExternalAddress::periodic(&[0]), 15.0)).unwrap().point;
        let r = phi(&c1, &c2, z).unwrap();
        assert!((r.point - z).norm() <= 2.0 * (-15f64).exp() * c1.seed_constant());
    }
}
