use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use std::fmt;

use super::rational::{rational_sqrt, Rational};
use super::ExactError;

/// Univariate polynomial with exact rational coefficients, ascending degree.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RatPoly {
    coeffs: Vec<Rational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `t^i` (zero past the degree).
    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

impl fmt::Debug for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            first = false;
            let show_coeff = i == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                1 => f.write_str("t")?,
                _ => write!(f, "t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Interpolates the unique polynomial of degree `<= degree_bound` through the
/// samples. The first `degree_bound + 1` samples determine it (Newton divided
/// differences); any further samples must agree exactly or the bound was
/// violated.
pub fn poly_from_samples(samples: &[(Rational, Rational)], degree_bound: usize) -> Result<RatPoly, ExactError> {
    let needed = degree_bound + 1;
    if samples.len() < needed {
        return Err(ExactError::TooFewSamples { needed, found: samples.len() });
    }
    let mut seen = BTreeSet::new();
    for (x, _) in samples {
        if !seen.insert(x.clone()) {
            return Err(ExactError::DuplicateSample(x.clone()));
        }
    }

    let xs: Vec<&Rational> = samples[..needed].iter().map(|(x, _)| x).collect();
    let mut dd: Vec<Rational> = samples[..needed].iter().map(|(_, y)| y.clone()).collect();
    for level in 1..needed {
        for i in (level..needed).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }

    // Expand the Newton form c0 + c1(t-x0) + c2(t-x0)(t-x1) + ...
    let mut poly = RatPoly::zero();
    for i in (0..needed).rev() {
        let linear = RatPoly::new(vec![-xs[i].clone(), Rational::one()]);
        poly = poly.mul(&linear);
        poly = RatPoly::new({
            let mut c = poly.coeffs.clone();
            if c.is_empty() {
                c.push(Rational::zero());
            }
            c[0] += &dd[i];
            c
        });
    }

    for (x, y) in &samples[needed..] {
        let got = poly.eval(x);
        if &got != y {
            return Err(ExactError::InconsistentSamples { at: x.clone(), expected: y.clone(), found: got });
        }
    }
    Ok(poly)
}

/// Why a quadratic contributed no rational roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonRationalRoots {
    /// Real but irrational conjugate pair.
    Irrational,
    /// Negative discriminant.
    NonReal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roots {
    /// Rational roots with multiplicity, ascending.
    pub roots: Vec<Rational>,
    pub non_rational: Option<NonRationalRoots>,
}

impl Roots {
    /// Distinct rational roots.
    pub fn distinct(&self) -> BTreeSet<Rational> {
        self.roots.iter().cloned().collect()
    }
}

/// Rational roots of a polynomial of degree at most two.
pub fn rational_roots(p: &RatPoly) -> Result<Roots, ExactError> {
    match p.degree() {
        None => Err(ExactError::IdenticallyZero),
        Some(0) => Ok(Roots { roots: Vec::new(), non_rational: None }),
        Some(1) => Ok(Roots { roots: vec![-p.coeff(0) / p.coeff(1)], non_rational: None }),
        Some(2) => {
            let (c, b, a) = (p.coeff(0), p.coeff(1), p.coeff(2));
            let disc = &b * &b - Rational::from_integer(4.into()) * &a * &c;
            if disc.is_negative() {
                return Ok(Roots { roots: Vec::new(), non_rational: Some(NonRationalRoots::NonReal) });
            }
            let Some(root) = rational_sqrt(&disc) else {
                return Ok(Roots { roots: Vec::new(), non_rational: Some(NonRationalRoots::Irrational) });
            };
            let two_a = &a + &a;
            let mut roots = vec![(-&b - &root) / &two_a, (-&b + &root) / &two_a];
            roots.sort();
            Ok(Roots { roots, non_rational: None })
        }
        Some(d) => Err(ExactError::DegreeTooHigh(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{rat, ratio};
    use proptest::prelude::*;

    #[test]
    fn exact_fit_of_squares() {
        let s = vec![(rat(0), rat(0)), (rat(1), rat(1)), (rat(2), rat(4))];
        assert_eq!(poly_from_samples(&s, 2).unwrap(), RatPoly::from_i64(&[0, 0, 1]));
    }

    #[test]
    fn lemma_one_samples_give_three_t_squared_minus_eight_t() {
        let s = vec![(rat(0), rat(0)), (rat(1), rat(-5)), (rat(2), rat(-4))];
        assert_eq!(poly_from_samples(&s, 2).unwrap(), RatPoly::from_i64(&[0, -8, 3]));
    }

    #[test]
    fn constant_fit() {
        let c = ratio(7, 3);
        let s = vec![(rat(0), c.clone()), (rat(1), c.clone())];
        assert_eq!(poly_from_samples(&s, 0).unwrap(), RatPoly::constant(c));
    }

    #[test]
    fn duplicate_points_rejected() {
        let s = vec![(rat(1), rat(0)), (rat(1), rat(2))];
        assert!(matches!(poly_from_samples(&s, 1), Err(ExactError::DuplicateSample(_))));
    }

    #[test]
    fn overdetermined_inconsistency_detected() {
        let s = vec![(rat(0), rat(0)), (rat(1), rat(1)), (rat(2), rat(4))];
        assert!(matches!(poly_from_samples(&s, 1), Err(ExactError::InconsistentSamples { .. })));
    }

    #[test]
    fn too_few_samples() {
        let s = vec![(rat(0), rat(0))];
        assert!(matches!(poly_from_samples(&s, 2), Err(ExactError::TooFewSamples { .. })));
    }

    #[test]
    fn lemma_roots() {
        let r = rational_roots(&RatPoly::from_i64(&[0, -8, 3])).unwrap();
        assert_eq!(r.roots, vec![rat(0), ratio(8, 3)]);
        let r = rational_roots(&RatPoly::from_i64(&[0, -4, 9])).unwrap();
        assert_eq!(r.roots, vec![rat(0), ratio(4, 9)]);
    }

    #[test]
    fn non_real_and_irrational_flags() {
        let r = rational_roots(&RatPoly::from_i64(&[1, 0, 1])).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.non_rational, Some(NonRationalRoots::NonReal));
        let r = rational_roots(&RatPoly::from_i64(&[-2, 0, 1])).unwrap();
        assert_eq!(r.non_rational, Some(NonRationalRoots::Irrational));
    }

    #[test]
    fn zero_polynomial_is_distinct_from_no_roots() {
        assert!(matches!(rational_roots(&RatPoly::zero()), Err(ExactError::IdenticallyZero)));
        assert!(rational_roots(&RatPoly::from_i64(&[5])).unwrap().roots.is_empty());
    }

    #[test]
    fn double_root_has_multiplicity_two() {
        let r = rational_roots(&RatPoly::from_i64(&[1, -2, 1])).unwrap();
        assert_eq!(r.roots, vec![rat(1), rat(1)]);
    }

    #[test]
    fn display() {
        assert_eq!(RatPoly::from_i64(&[0, -8, 3]).to_string(), "3t^2 - 8t");
        assert_eq!(RatPoly::from_i64(&[-1, 0, 1]).to_string(), "t^2 - 1");
    }

    proptest! {
        #[test]
        fn interpolation_reproduces_samples(
            ys in prop::collection::vec((-50i64..=50, 1i64..=7), 1..6)
        ) {
            let samples: Vec<(Rational, Rational)> = ys
                .iter()
                .enumerate()
                .map(|(i, &(n, d))| (rat(i as i64), ratio(n, d)))
                .collect();
            let p = poly_from_samples(&samples, samples.len() - 1).unwrap();
            prop_assert!(p.degree().map_or(true, |d| d < samples.len()));
            for (x, y) in &samples {
                prop_assert_eq!(&p.eval(x), y);
            }
        }
    }
}
