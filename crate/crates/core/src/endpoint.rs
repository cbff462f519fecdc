//! The series test for differentiability of a ray at its escaping endpoint.
//!
//! For a fast address the ray is differentiable at `g(s, t_s)` exactly when
//! `sum_j 2pi s_{j+1} / T(F^j(s, t_s))` converges. No parameter enters.

use crate::address::{AddressError, ExternalAddress};
use crate::model::{self, AddressClass, ModelError, DEFAULT_HORIZON, DEFAULT_TOL};
use crate::TWO_PI;

/// Lower bound `t*` beyond which it replaces `t_s` as denominator; the two
/// differ by at most one.
const T_STAR_SUBSTITUTE: f64 = 1e15;
const DIVERGENT_TERM: f64 = 1e-3;
const DIVERGENT_SUM: f64 = 1e3;
const CONVERGENT_OSCILLATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl SeriesVerdict {
    pub fn name(self) -> &'static str {
        match self {
            SeriesVerdict::Convergent => "Convergent",
            SeriesVerdict::Divergent => "Divergent",
            SeriesVerdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `T(F^j(s, t_s))` for each term.
    pub denominators: Vec<f64>,
    pub verdict: SeriesVerdict,
    pub n_terms: usize,
    /// Set when entries or denominators left the float range before `n_terms`.
    pub truncated: bool,
}

pub fn differentiability_series(s: &ExternalAddress, n_terms: usize) -> Result<SeriesReport, ModelError> {
    differentiability_series_with_tol(s, n_terms, DEFAULT_TOL)
}

pub fn differentiability_series_with_tol(s: &ExternalAddress, n_terms: usize, tol: f64) -> Result<SeriesReport, ModelError> {
    if model::classify(s) != AddressClass::Fast {
        return Err(ModelError::PreconditionSlowAddress);
    }
    let mut terms = Vec::with_capacity(n_terms);
    let mut denominators = Vec::with_capacity(n_terms);
    let mut truncated = false;
    for j in 0..n_terms {
        let shifted = s.shift_by(j);
        let bound = match model::t_star(&shifted, DEFAULT_HORIZON) {
            Ok(v) => v,
            Err(ModelError::Overflow(_)) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let denominator = if bound > T_STAR_SUBSTITUTE {
            bound
        } else {
            model::t_s(&shifted, tol)?
        };
        let term = match s.value(j + 1) {
            Ok(v) => TWO_PI * v / denominator,
            Err(AddressError::HorizonExceeded { .. }) => match s.log_weight(j + 1) {
                Ok(lw) => s.signum(j + 1)? as f64 * (lw - denominator.ln()).exp(),
                Err(_) => {
                    truncated = true;
                    break;
                }
            },
            Err(e) => return Err(e.into()),
        };
        terms.push(term);
        denominators.push(denominator);
    }
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, &t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let verdict = verdict(&terms, &partial_sums);
    Ok(SeriesReport {
        n_terms: terms.len(),
        terms,
        partial_sums,
        denominators,
        verdict,
        truncated,
    })
}

fn verdict(terms: &[f64], partial_sums: &[f64]) -> SeriesVerdict {
    let n = terms.len();
    if n == 0 {
        return SeriesVerdict::Inconclusive;
    }
    let quarter = (n / 4).max(1);
    let tail_terms = &terms[n - quarter..];
    if tail_terms.iter().all(|t| t.abs() >= DIVERGENT_TERM) || partial_sums.iter().any(|p| p.abs() > DIVERGENT_SUM) {
        return SeriesVerdict::Divergent;
    }
    let tail_sums = &partial_sums[n - quarter..];
    let hi = tail_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail_sums.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo < CONVERGENT_OSCILLATION {
        SeriesVerdict::Convergent
    } else {
        SeriesVerdict::Inconclusive
    }
}
