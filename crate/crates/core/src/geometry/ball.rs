//! Midpoint–radius arithmetic over dyadic rationals.
//!
//! A [`Ball`] encloses a real number in `[mid - rad, mid + rad]`. Midpoints
//! are rounded to `prec` significant bits after every operation and the
//! rounding error is folded into the radius, so enclosures stay valid while
//! sizes stay bounded.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::exact::Rational;

use super::GeometryError;

/// Significant bits kept in radii (radii only need to be upper bounds).
const RADIUS_BITS: i64 = 30;

#[derive(Clone, PartialEq, Eq)]
pub struct Ball {
    mid: Rational,
    rad: Rational,
    prec: u32,
}

fn mul_pow2(q: &Rational, shift: i64) -> Rational {
    if shift >= 0 {
        Rational::new(q.numer() << (shift as usize), q.denom().clone())
    } else {
        Rational::new(q.numer().clone(), q.denom() << ((-shift) as usize))
    }
}

/// Rough `log2 |q|`, accurate to within one.
fn log2_approx(q: &Rational) -> i64 {
    q.numer().bits() as i64 - q.denom().bits() as i64
}

/// Smallest dyadic with at most `RADIUS_BITS` bits that is `>= r` (`r >= 0`).
fn round_up(r: &Rational) -> Rational {
    if r.is_zero() {
        return Rational::zero();
    }
    let shift = RADIUS_BITS - log2_approx(r);
    let scaled = mul_pow2(r, shift);
    mul_pow2(&Rational::from_integer(scaled.ceil().to_integer()), -shift)
}

/// Rounds `q` to `prec` significant bits; returns the rounded value and the
/// exact rounding error.
fn round_mid(q: &Rational, prec: u32) -> (Rational, Rational) {
    if q.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    let shift = prec as i64 - log2_approx(q);
    let scaled = mul_pow2(q, shift);
    if scaled.is_integer() {
        return (q.clone(), Rational::zero());
    }
    let rounded = mul_pow2(&scaled.round(), -shift);
    let err = (&rounded - q).abs();
    (rounded, err)
}

/// `floor(sqrt(q) * 2^k) / 2^k` with `k` chosen for about `bits` significant
/// bits, together with the truncation bound `2^-k`.
fn sqrt_floor(q: &Rational, bits: u32) -> (Rational, Rational) {
    debug_assert!(!q.is_negative());
    if q.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    let k = bits as i64 - log2_approx(q) / 2 + 1;
    let radicand: BigInt = mul_pow2(q, 2 * k).floor().to_integer();
    let root = radicand.sqrt();
    (mul_pow2(&Rational::from_integer(root), -k), mul_pow2(&Rational::one(), -k))
}

impl Ball {
    pub fn exact(q: Rational, prec: u32) -> Self {
        let (mid, err) = round_mid(&q, prec);
        Self { mid, rad: round_up(&err), prec }
    }

    pub fn zero(prec: u32) -> Self {
        Self { mid: Rational::zero(), rad: Rational::zero(), prec }
    }

    pub fn with_radius(mid: Rational, rad: Rational, prec: u32) -> Self {
        let (mid, err) = round_mid(&mid, prec);
        Self { mid, rad: round_up(&(rad.abs() + err)), prec }
    }

    pub fn mid(&self) -> &Rational {
        &self.mid
    }

    pub fn rad(&self) -> &Rational {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn lower(&self) -> Rational {
        &self.mid - &self.rad
    }

    pub fn upper(&self) -> Rational {
        &self.mid + &self.rad
    }

    fn finish(mid: Rational, rad: Rational, prec: u32) -> Self {
        let (mid, err) = round_mid(&mid, prec);
        Self { mid, rad: round_up(&(rad + err)), prec }
    }

    pub fn add(&self, o: &Ball) -> Ball {
        Self::finish(&self.mid + &o.mid, &self.rad + &o.rad, self.prec.max(o.prec))
    }

    pub fn sub(&self, o: &Ball) -> Ball {
        Self::finish(&self.mid - &o.mid, &self.rad + &o.rad, self.prec.max(o.prec))
    }

    pub fn neg(&self) -> Ball {
        Self { mid: -&self.mid, rad: self.rad.clone(), prec: self.prec }
    }

    pub fn mul(&self, o: &Ball) -> Ball {
        let rad = self.mid.abs() * &o.rad + o.mid.abs() * &self.rad + &self.rad * &o.rad;
        Self::finish(&self.mid * &o.mid, rad, self.prec.max(o.prec))
    }

    pub fn mul_rat(&self, q: &Rational) -> Ball {
        Self::finish(&self.mid * q, &self.rad * q.abs(), self.prec)
    }

    pub fn contains_zero(&self) -> bool {
        self.mid.abs() <= self.rad
    }

    pub fn div(&self, o: &Ball) -> Result<Ball, GeometryError> {
        if o.contains_zero() {
            return Err(GeometryError::DivisionByZero);
        }
        let bm = o.mid.abs();
        let rad = (&self.rad * &bm + self.mid.abs() * &o.rad) / (&bm * (&bm - &o.rad));
        Ok(Self::finish(&self.mid / &o.mid, rad, self.prec.max(o.prec)))
    }

    /// Enclosure of `sqrt` over the nonnegative part of the ball.
    pub fn sqrt(&self) -> Result<Ball, GeometryError> {
        let lo = self.lower();
        let hi = self.upper();
        if hi.is_negative() {
            return Err(GeometryError::NegativeSqrt);
        }
        if !lo.is_positive() {
            // [0, sqrt(hi)]
            let (s, trunc) = sqrt_floor(&hi, 40);
            let ub = s + trunc;
            let half = &ub / Rational::from_integer(2.into());
            return Ok(Self { mid: half.clone(), rad: round_up(&half), prec: self.prec });
        }
        let (s, trunc) = sqrt_floor(&self.mid, self.prec);
        // |sqrt(x) - sqrt(mid)| <= rad / sqrt(lo) for x in the ball.
        let (lo_root, _) = sqrt_floor(&lo, 32);
        let propagated = if self.rad.is_zero() {
            Rational::zero()
        } else {
            &self.rad / lo_root
        };
        Ok(Self::finish(s, propagated + trunc, self.prec))
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64().unwrap_or(f64::NAN)
    }

    pub fn rad_f64(&self) -> f64 {
        // Nudged upward so the decimal export remains an upper bound.
        self.rad.to_f64().map_or(f64::INFINITY, |r| r * (1.0 + 1e-12))
    }

    /// Deterministic scientific notation of the midpoint with `digits`
    /// significant digits, e.g. `8.660254037844386467637231707529361834714e-1`.
    pub fn to_sci(&self, digits: usize) -> String {
        rational_to_sci(&self.mid, digits)
    }
}

pub fn rational_to_sci(q: &Rational, digits: usize) -> String {
    if q.is_zero() {
        return "0".into();
    }
    let digits = digits.max(1);
    let neg = q.is_negative();
    let a = q.abs();
    let ten = BigInt::from(10);
    // Exponent estimate from bit lengths, then correct.
    let mut e = ((log2_approx(&a) as f64) * std::f64::consts::LOG10_2).floor() as i64;
    let pow10 = |p: i64| -> Rational {
        if p >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), p as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(ten.clone(), (-p) as usize))
        }
    };
    while a >= pow10(e + 1) {
        e += 1;
    }
    while a < pow10(e) {
        e -= 1;
    }
    let mut m = (&a * pow10(digits as i64 - 1 - e)).round().to_integer();
    if m >= num_traits::pow(ten.clone(), digits) {
        m /= &ten;
        e += 1;
    }
    let s = m.to_string();
    let (head, tail) = s.split_at(1);
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.3e}", self.to_sci(20), self.rad_f64())
    }
}
