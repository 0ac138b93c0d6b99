//! Order structure of the ladder values `sqrt(2 + 2/n)^k * (2/n)^l` and a
//! search for exponents approximating a target.
//!
//! The values are dense in `(0, inf)` because `log(2/n) / log(sqrt(2 + 2/n))`
//! is irrational and negative. That fact is assumed, never used: every
//! candidate the search returns is verified by exact rational comparison,
//! and logarithms only choose which candidates to try.

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

use crate::exact::rational::serde_string;
use crate::exact::{format_rational, Rational};
use crate::geometry::Ball;
use crate::witness::RadicalScaled;

/// Right-hand side of [`radical_cmp`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LadderValue {
    Radical(RadicalScaled),
    Rational(Rational),
}

/// Exact order, decided on squares.
pub fn radical_cmp(a: &RadicalScaled, b: &LadderValue) -> Ordering {
    match b {
        LadderValue::Radical(r) => {
            assert_eq!(a.n, r.n, "ladder values from different dimensions");
            a.value_sq().cmp(&r.value_sq())
        }
        LadderValue::Rational(q) => {
            if !q.is_positive() {
                Ordering::Greater
            } else {
                a.value_sq().cmp(&(q * q))
            }
        }
    }
}

/// Documents the assumption behind density for dimension `n`.
pub fn irrationality_note(n: usize) -> String {
    format!(
        "assumed: log(2/{n}) / log(sqrt(2+2/{n})) is irrational and negative, so the ladder is dense in (0, inf); \
         approximate() verifies each answer exactly and does not depend on this"
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderQuery {
    pub n: usize,
    pub target: Rational,
    pub eps: Rational,
    pub max_k: u64,
    pub max_l: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LadderError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("target must be positive, got {0}")]
    Target(String),
    #[error("eps must be positive, got {0}")]
    Eps(String),
    #[error("no exponents with k <= {max_k}, l <= {max_l} within eps; best candidate (k={best_k}, l={best_l}) has error ~{best_error:.3e}")]
    NotFound { max_k: u64, max_l: u64, best_k: u64, best_l: u64, best_error: f64 },
}

impl LadderQuery {
    pub fn validate(&self) -> Result<(), LadderError> {
        if self.n < 2 {
            return Err(LadderError::Dimension(self.n));
        }
        if !self.target.is_positive() {
            return Err(LadderError::Target(format_rational(&self.target)));
        }
        if !self.eps.is_positive() {
            return Err(LadderError::Eps(format_rational(&self.eps)));
        }
        Ok(())
    }

    /// Exact test of `|value - target| <= eps` on squares; the lower end of
    /// the interval is truncated at 0.
    pub fn within(&self, r: &RadicalScaled) -> bool {
        let v = r.value_sq();
        let hi = &self.target + &self.eps;
        let lo = &self.target - &self.eps;
        v <= &hi * &hi && (!lo.is_positive() || v >= &lo * &lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    pub n: usize,
    pub k: u64,
    pub l: u64,
    #[serde(with = "serde_string")]
    pub value_sq: Rational,
    /// `|value - target|`, from a 128-bit enclosure.
    pub error: f64,
    pub error_sci: String,
}

fn error_ball(r: &RadicalScaled, target: &Rational) -> Ball {
    let v = Ball::exact(r.value_sq(), 128).sqrt().expect("ladder values are positive");
    v.sub(&Ball::exact(target.clone(), 128))
}

/// Finds `(k, l)` with `|sqrt(2+2/n)^k (2/n)^l - target| <= eps`, minimal in
/// `l` within the bounds. For each `l` the log-nearest `k` and its neighbours
/// are screened in floating point; survivors are verified exactly.
pub fn approximate(q: &LadderQuery) -> Result<Approximation, LadderError> {
    q.validate()?;
    let n = q.n as f64;
    let lift = 0.5 * (2.0 + 2.0 / n).ln();
    let shrink = (2.0 / n).ln();
    let target_f = q.target.to_f64().unwrap_or(f64::NAN);
    let eps_f = q.eps.to_f64().unwrap_or(f64::INFINITY);
    let log_target = target_f.ln();
    let mut best: Option<(f64, u64, u64)> = None;
    for l in 0..=q.max_l {
        let k_real = (log_target - l as f64 * shrink) / lift;
        let centre = k_real.round().clamp(0.0, q.max_k as f64) as u64;
        let mut candidates: Vec<u64> =
            [centre.saturating_sub(1), centre, centre + 1].into_iter().filter(|&k| k <= q.max_k).collect();
        candidates.dedup();
        candidates.sort_by(|a, b| {
            let ea = (*a as f64 - k_real).abs();
            let eb = (*b as f64 - k_real).abs();
            ea.total_cmp(&eb).then(a.cmp(b))
        });
        for k in candidates {
            let log_value = k as f64 * lift + l as f64 * shrink;
            let err = (log_value.exp() - target_f).abs();
            if best.is_none_or(|(b, _, _)| err < b) {
                best = Some((err, k, l));
            }
            // Floats only decide which candidates get the exact test; the
            // margin covers their rounding error with room to spare.
            if err > eps_f + 1e-9 * log_value.exp().max(target_f) {
                continue;
            }
            let r = RadicalScaled::new(q.n, k, l);
            if q.within(&r) {
                let e = error_ball(&r, &q.target);
                let abs_mid = e.mid().abs();
                return Ok(Approximation {
                    n: q.n,
                    k,
                    l,
                    value_sq: r.value_sq(),
                    error: abs_mid.to_f64().unwrap_or(f64::NAN),
                    error_sci: crate::geometry::rational_to_sci(&abs_mid, 10),
                });
            }
        }
    }
    let (best_error, best_k, best_l) = best.unwrap_or((f64::INFINITY, 0, 0));
    Err(LadderError::NotFound { max_k: q.max_k, max_l: q.max_l, best_k, best_l, best_error })
}

/// Whether `r` is exactly equal to the target (error zero).
pub fn is_exact(r: &RadicalScaled, target: &Rational) -> bool {
    !target.is_zero() && radical_cmp(r, &LadderValue::Rational(target.clone())) == Ordering::Equal
}
