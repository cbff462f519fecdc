//! Combinatorial predicates on pairs of addresses: the entrywise bound for
//! rays landing together, and itineraries relative to a reference address.
//!
//! Bracketing convention: `u_k` is the integer `m` with
//! `r^(m) < sigma^{k-1}(s) < r^(m+1)`, where `r^(m)` is `r` with its first
//! entry increased by `m` and the later entries untouched.

use std::cmp::Ordering;

use thiserror::Error;

use crate::address::{AddressError, ExternalAddress, TailRule};
use crate::model::{self, AddressClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombinatoricsError {
    #[error("undecided within horizon {0}")]
    Indeterminate(usize),
    #[error("shifted address {0} lies on a translate of the reference address")]
    OnBoundary(usize),
    #[error("addresses must both be slow or both be fast")]
    MixedClasses,
    #[error(transparent)]
    Address(#[from] AddressError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Itinerary {
    pub entries: Vec<i64>,
    pub reference: ExternalAddress,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// First index by which two periodic addresses have completed a common
/// period past both prefixes; `None` unless both are periodic.
fn joint_window(a: &ExternalAddress, b: &ExternalAddress) -> Option<usize> {
    let (ma, pa) = a.periodic_structure()?;
    let (mb, pb) = b.periodic_structure()?;
    Some(ma.max(mb) + lcm(pa, pb))
}

/// Rule of a growing tail with its position pinned to absolute indices.
#[derive(PartialEq)]
enum Growth {
    Poly { c: u64, p: u64, sign: i64, origin: i64 },
    Tower { x: u64, sign: i64, origin: i64 },
}

fn growth(s: &ExternalAddress) -> Option<(Growth, i64)> {
    let origin = |skip: u64| skip as i64 - s.prefix().len() as i64;
    match s.tail() {
        TailRule::Periodic(_) => None,
        TailRule::PolyGrowth { c, p, sign, skip, offset } => Some((
            Growth::Poly {
                c: c.to_bits(),
                p: p.to_bits(),
                sign: *sign,
                origin: origin(*skip),
            },
            *offset,
        )),
        TailRule::Tower { x, sign, skip, offset } => Some((
            Growth::Tower {
                x: x.to_bits(),
                sign: *sign,
                origin: origin(*skip),
            },
            *offset,
        )),
    }
}

/// Whether `|a_k - b_k| <= 1` for every `k`, a necessary condition for the
/// rays at `a` and `b` to land together.
pub fn landing_compatible(a: &ExternalAddress, b: &ExternalAddress, horizon: usize) -> Result<bool, CombinatoricsError> {
    let window = joint_window(a, b).unwrap_or(0).max(a.prefix().len().max(b.prefix().len()) + 1);
    for k in 1..=horizon.max(window) {
        match (a.value(k), b.value(k)) {
            (Ok(x), Ok(y)) => {
                if (x - y).abs() > 1.0 {
                    return Ok(false);
                }
            }
            _ => break,
        }
    }
    if joint_window(a, b).is_some() {
        return Ok(true);
    }
    let bounded = |s: &ExternalAddress| s.is_periodic();
    if bounded(a) != bounded(b) {
        // A growing tail leaves every bounded one behind.
        return Ok(false);
    }
    match (growth(a), growth(b)) {
        (Some((ga, oa)), Some((gb, ob))) if ga == gb => Ok((oa - ob).abs() <= 1),
        _ => Err(CombinatoricsError::Indeterminate(horizon)),
    }
}

/// Horizon that decides lexicographic comparisons between `x` and `r`.
fn comparison_horizon(x: &ExternalAddress, r: &ExternalAddress, horizon: usize) -> usize {
    match (x.periodic_structure(), r.periodic_structure()) {
        (Some((mx, px)), Some((mr, pr))) => horizon.max(mx + mr + px * pr + 2),
        _ => horizon,
    }
}

pub fn itinerary(s: &ExternalAddress, r: &ExternalAddress, n: usize) -> Result<Itinerary, CombinatoricsError> {
    let r_tail = r.shift();
    let r_first = r.entry(1)?;
    let mut entries = Vec::with_capacity(n);
    for k in 1..=n {
        let rest = s.shift_by(k);
        let horizon = comparison_horizon(&rest, &r_tail, n);
        let below = match rest.lex_compare(&r_tail, horizon) {
            Ok(Ordering::Less) => 1,
            Ok(Ordering::Greater) => 0,
            Ok(Ordering::Equal) | Err(AddressError::Indeterminate { .. }) => {
                return Err(CombinatoricsError::OnBoundary(k));
            }
            Err(e) => return Err(e.into()),
        };
        entries.push(s.entry(k)? - r_first - below);
    }
    Ok(Itinerary {
        entries,
        reference: r.clone(),
    })
}

/// Whether the rays at `a` and `b` land together for a parameter whose
/// combinatorics is encoded by `r`: their itineraries coincide.
pub fn same_landing_point(
    a: &ExternalAddress,
    b: &ExternalAddress,
    r: &ExternalAddress,
    horizon: usize,
) -> Result<bool, CombinatoricsError> {
    if a == b {
        return Ok(true);
    }
    let (ca, cb) = (model::classify(a), model::classify(b));
    if ca != cb || ca == AddressClass::NotExponentiallyBounded {
        return Err(CombinatoricsError::MixedClasses);
    }
    let window = joint_window(a, b);
    let n = horizon.max(window.unwrap_or(0));
    let ia = itinerary(a, r, n)?;
    let ib = itinerary(b, r, n)?;
    if ia.entries != ib.entries {
        return Ok(false);
    }
    // Itineraries of periodic addresses repeat with the addresses themselves.
    match window {
        Some(w) if n >= w => Ok(true),
        _ => Err(CombinatoricsError::Indeterminate(horizon)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per(block: &[i64]) -> ExternalAddress {
        ExternalAddress::periodic(block)
    }

    #[test]
    fn compatibility_examples() {
        assert_eq!(landing_compatible(&per(&[0, 1]), &per(&[1, 2]), 16), Ok(true));
        assert_eq!(landing_compatible(&per(&[0]), &per(&[2]), 16), Ok(false));
        let tower = ExternalAddress::tower(&[], 1.0).unwrap();
        assert_eq!(landing_compatible(&tower, &per(&[0]), 16), Ok(false));
        let poly = ExternalAddress::poly(&[], 1.0, 1.0, 1).unwrap();
        assert_eq!(landing_compatible(&poly, &poly.translate(1), 16), Ok(true));
        assert_eq!(landing_compatible(&poly, &poly.translate(2), 16), Ok(false));
    }

    #[test]
    fn itinerary_bracketing() {
        let it = itinerary(&per(&[0]), &per(&[1]), 3).unwrap();
        assert_eq!(it.entries, vec![-2, -2, -2]);
        let r = per(&[1]);
        assert_eq!(itinerary(&r.with_first_shifted(3), &r, 2), Err(CombinatoricsError::OnBoundary(1)));
    }

    #[test]
    fn itinerary_is_shift_equivariant() {
        let s = ExternalAddress::preperiodic(&[3, -1], &[0, 2, 1]);
        let r = per(&[-1, 1]);
        let full = itinerary(&s, &r, 8).unwrap();
        let shifted = itinerary(&s.shift(), &r, 7).unwrap();
        assert_eq!(&full.entries[1..], &shifted.entries[..]);
    }

    #[test]
    fn golden_pair_lands_together() {
        let (a, b, r) = (per(&[0, 1]), per(&[1, 0]), per(&[-1, 1]));
        assert_eq!(itinerary(&a, &r, 6).unwrap().entries, vec![1; 6]);
        assert_eq!(same_landing_point(&a, &b, &r, 8), Ok(true));
        assert_eq!(landing_compatible(&a, &b, 8), Ok(true));
    }

    #[test]
    fn far_apart_addresses_do_not_land_together() {
        let r = per(&[-1, 1]);
        assert_eq!(same_landing_point(&per(&[0]), &per(&[2]), &r, 8), Ok(false));
        assert_eq!(same_landing_point(&per(&[0, 1]), &per(&[0, 1]), &r, 8), Ok(true));
    }
}
