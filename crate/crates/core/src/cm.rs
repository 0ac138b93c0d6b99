//! Cayley–Menger determinants over squared-distance tables.
//!
//! All inputs are squared distances `phi(c_i, c_j)`; point coordinates only
//! enter through [`coordinate_identity_check`]. Entries may be any rational,
//! including negative ones, since the images live in `C^n` where the squared
//! distance form is not positive definite.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::exact::{
    format_rational, parse_rational, poly_from_samples, rat, ratio, rational::pow_u, ExactError, RatMatrix, RatPoly,
    Rational,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CmError {
    #[error("clique needs at least 2 points, got {0}")]
    TooSmall(usize),
    #[error("squared-distance table is not {m}x{m}")]
    Shape { m: usize },
    #[error("squared-distance table is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("diagonal entry {0} is not zero")]
    NonZeroDiagonal(usize),
    #[error("clique of size {size} does not match ambient dimension {ambient} (need {expected} points)")]
    SizeMismatch { size: usize, ambient: usize, expected: usize },
    #[error("point {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("expected exactly one unknown pair, found {0}")]
    UnknownCount(usize),
    #[error("entry {0:?} is neither a rational nor \"?\"")]
    BadEntry(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Symmetric table of squared distances with zero diagonal.
#[derive(Clone, PartialEq, Eq)]
pub struct CliqueSq {
    m: usize,
    sq: Vec<Rational>,
}

impl CliqueSq {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self, CmError> {
        let m = rows.len();
        if m < 2 {
            return Err(CmError::TooSmall(m));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(CmError::Shape { m });
        }
        for i in 0..m {
            if !rows[i][i].is_zero() {
                return Err(CmError::NonZeroDiagonal(i));
            }
            for j in i + 1..m {
                if rows[i][j] != rows[j][i] {
                    return Err(CmError::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { m, sq: rows.into_iter().flatten().collect() })
    }

    /// Builds the table from a function consulted for `i < j` only.
    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Result<Self, CmError> {
        if m < 2 {
            return Err(CmError::TooSmall(m));
        }
        let mut sq = vec![Rational::zero(); m * m];
        for i in 0..m {
            for j in i + 1..m {
                let v = f(i, j);
                sq[j * m + i] = v.clone();
                sq[i * m + j] = v;
            }
        }
        Ok(Self { m, sq })
    }

    /// Squared distances of concrete rational points.
    pub fn from_points<P: AsRef<[Rational]>>(points: &[P]) -> Result<Self, CmError> {
        Self::from_fn(points.len(), |i, j| sq_dist(points[i].as_ref(), points[j].as_ref()))
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.sq[i * self.m + j]
    }

    fn set_pair(&mut self, i: usize, j: usize, v: Rational) {
        self.sq[i * self.m + j] = v.clone();
        self.sq[j * self.m + i] = v;
    }

    pub fn to_json(&self) -> CliqueJson {
        CliqueJson {
            m: self.m,
            sq: (0..self.m).map(|i| (0..self.m).map(|j| format_rational(self.get(i, j))).collect()).collect(),
        }
    }

    pub fn from_json(json: &CliqueJson) -> Result<Self, CmError> {
        let rows = parse_table(json)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|e| e.ok_or(CmError::UnknownCount(1))).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        Self::new(rows)
    }
}

impl fmt::Debug for CliqueSq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CliqueSq").field("m", &self.m).field("sq", &self.to_json().sq).finish()
    }
}

/// Wire form: `{"m": int, "sq": [["p/q", ...], ...]}`; `"?"` marks the
/// unknown pair for [`CliqueWithUnknown`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueJson {
    pub m: usize,
    pub sq: Vec<Vec<String>>,
}

fn parse_table(json: &CliqueJson) -> Result<Vec<Vec<Option<Rational>>>, CmError> {
    if json.sq.len() != json.m || json.sq.iter().any(|r| r.len() != json.m) {
        return Err(CmError::Shape { m: json.m });
    }
    json.sq
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| {
                    if s.trim() == "?" {
                        Ok(None)
                    } else {
                        parse_rational(s).map(Some).map_err(|_| CmError::BadEntry(s.clone()))
                    }
                })
                .collect()
        })
        .collect()
}

/// A clique whose squared distances are all known except one symmetric pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueWithUnknown {
    known: CliqueSq,
    unknown: (usize, usize),
}

impl CliqueWithUnknown {
    /// The entry stored at the unknown pair of `known` is ignored.
    pub fn new(known: CliqueSq, i: usize, j: usize) -> Result<Self, CmError> {
        if i == j || i >= known.m || j >= known.m {
            return Err(CmError::UnknownCount(0));
        }
        Ok(Self { known, unknown: (i.min(j), i.max(j)) })
    }

    pub fn unknown_pair(&self) -> (usize, usize) {
        self.unknown
    }

    pub fn size(&self) -> usize {
        self.known.m
    }

    /// The clique with the unknown pair set to `t`.
    pub fn substitute(&self, t: &Rational) -> CliqueSq {
        let mut c = self.known.clone();
        c.set_pair(self.unknown.0, self.unknown.1, t.clone());
        c
    }

    pub fn from_json(json: &CliqueJson) -> Result<Self, CmError> {
        let mut rows = parse_table(json)?;
        let mut unknowns = Vec::new();
        for i in 0..json.m {
            for j in 0..json.m {
                if rows[i][j].is_none() {
                    if i == j {
                        return Err(CmError::NonZeroDiagonal(i));
                    }
                    if i < j {
                        unknowns.push((i, j));
                    }
                    if rows[j][i].is_some() {
                        return Err(CmError::NotSymmetric { i: i.min(j), j: i.max(j) });
                    }
                }
            }
        }
        if unknowns.len() != 1 {
            return Err(CmError::UnknownCount(unknowns.len()));
        }
        let (i, j) = unknowns[0];
        rows[i][j] = Some(Rational::zero());
        rows[j][i] = Some(Rational::zero());
        let known = CliqueSq::new(rows.into_iter().map(|r| r.into_iter().map(Option::unwrap).collect()).collect())?;
        Self::new(known, i, j)
    }

    pub fn to_json(&self) -> CliqueJson {
        let mut json = self.known.to_json();
        let (i, j) = self.unknown;
        json.sq[i][j] = "?".into();
        json.sq[j][i] = "?".into();
        json
    }
}

pub fn sq_dist(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| {
        let d = x - y;
        &d * &d
    }).fold(Rational::zero(), |acc, v| acc + v)
}

/// The bordered matrix: corner 0, border of ones, inner block the table.
pub fn cm_matrix(c: &CliqueSq) -> RatMatrix {
    RatMatrix::from_fn(c.m + 1, c.m + 1, |i, j| match (i, j) {
        (0, 0) => Rational::zero(),
        (0, _) | (_, 0) => Rational::one(),
        _ => c.get(i - 1, j - 1).clone(),
    })
}

pub fn cm_det(c: &CliqueSq) -> Rational {
    cm_matrix(c).det().expect("Cayley-Menger matrix is square and nonempty")
}

/// Checks `det([coords | 1])^2 == (-1)^(n+1) / 2^n * CM` exactly for `n + 1`
/// points in `Q^n`. This is an identity; `false` means a bug.
pub fn coordinate_identity_check<P: AsRef<[Rational]>>(points: &[P]) -> Result<bool, CmError> {
    let count = points.len();
    if count < 2 {
        return Err(CmError::TooSmall(count));
    }
    let n = count - 1;
    for (index, p) in points.iter().enumerate() {
        if p.as_ref().len() != n {
            return Err(CmError::DimensionMismatch { index, expected: n, found: p.as_ref().len() });
        }
    }
    let coords = RatMatrix::from_fn(count, count, |i, j| {
        if j < n {
            points[i].as_ref()[j].clone()
        } else {
            Rational::one()
        }
    });
    let lhs = {
        let d = coords.det()?;
        &d * &d
    };
    let cm = cm_det(&CliqueSq::from_points(points)?);
    let sign = if (n + 1) % 2 == 0 { rat(1) } else { rat(-1) };
    let rhs = sign / pow_u(&rat(2), n as u64) * cm;
    Ok(lhs == rhs)
}

/// `n + 1` points in `C^n` are affinely independent iff their CM determinant
/// is nonzero.
pub fn affinely_independent(c: &CliqueSq, ambient: usize) -> Result<bool, CmError> {
    if c.size() != ambient + 1 {
        return Err(CmError::SizeMismatch { size: c.size(), ambient, expected: ambient + 1 });
    }
    Ok(!cm_det(c).is_zero())
}

/// The CM determinant as a polynomial in the unknown squared distance `t`.
///
/// The unknown occupies two symmetric entries, so the degree is at most two;
/// three evaluations at `t = 0, 1, 2` pin it down.
pub fn cm_poly_in_unknown(c: &CliqueWithUnknown) -> Result<RatPoly, CmError> {
    let samples: Vec<(Rational, Rational)> = (0..3)
        .map(|t| {
            let t = rat(t);
            let v = cm_det(&c.substitute(&t));
            (t, v)
        })
        .collect();
    Ok(poly_from_samples(&samples, 2)?)
}

/// Which bipyramid pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaVariant {
    /// Regular simplex of edge `d`, apexes at `d`; target `(2 + 2/n) d^2`.
    Lemma1,
    /// Simplex of edge `sqrt(2 + 2/n) d`, apexes at `d`; target `(4/n^2) d^2`.
    Lemma2,
}

impl fmt::Display for LemmaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaVariant::Lemma1 => "lemma1",
            LemmaVariant::Lemma2 => "lemma2",
        })
    }
}

/// `2 + 2/n`.
pub fn lift_factor_sq(n: usize) -> Rational {
    rat(2) + ratio(2, n as i64)
}

/// `4 / n^2`.
pub fn shrink_factor_sq(n: usize) -> Rational {
    ratio(4, (n * n) as i64)
}

impl LemmaVariant {
    /// Squared edge of the simplex `p_1..p_n`.
    pub fn simplex_edge_sq(self, n: usize, d_sq: &Rational) -> Rational {
        match self {
            LemmaVariant::Lemma1 => d_sq.clone(),
            LemmaVariant::Lemma2 => lift_factor_sq(n) * d_sq,
        }
    }

    /// Squared distance the configuration forces between its apexes.
    pub fn target_sq(self, n: usize, d_sq: &Rational) -> Rational {
        match self {
            LemmaVariant::Lemma1 => lift_factor_sq(n) * d_sq,
            LemmaVariant::Lemma2 => shrink_factor_sq(n) * d_sq,
        }
    }

    pub fn min_dimension(self) -> usize {
        match self {
            LemmaVariant::Lemma1 => 2,
            LemmaVariant::Lemma2 => 3,
        }
    }
}

/// The `(n + 2)`-clique `x, p_1..p_n, y` with `phi(x, y)` unknown.
pub fn lemma_clique(n: usize, variant: LemmaVariant, d_sq: &Rational) -> CliqueWithUnknown {
    let edge = variant.simplex_edge_sq(n, d_sq);
    let m = n + 2;
    let known = CliqueSq::from_fn(m, |i, j| {
        if i == 0 && j == m - 1 {
            Rational::zero()
        } else if i == 0 || j == m - 1 {
            d_sq.clone()
        } else {
            edge.clone()
        }
    })
    .expect("m >= 2");
    CliqueWithUnknown::new(known, 0, m - 1).expect("distinct in-range pair")
}

/// The apex pattern `c_1..c_n` (pairwise `(2+2/n) d^2`) plus `c` at `d^2`.
pub fn apex_pattern_clique(n: usize, d_sq: &Rational) -> CliqueSq {
    let edge = lift_factor_sq(n) * d_sq;
    CliqueSq::from_fn(n + 1, |_, j| if j == n { d_sq.clone() } else { edge.clone() }).expect("n >= 1")
}

/// `n + 1` points pairwise at `d^2`.
pub fn regular_pattern_clique(n: usize, d_sq: &Rational) -> CliqueSq {
    CliqueSq::from_fn(n + 1, |_, _| d_sq.clone()).expect("n >= 1")
}

/// Closed forms of the determinant of [`lemma_clique`] as polynomials in `t`:
/// Lemma1: `(-1)^(n-1) d^(2n-2) t (n t - (2n+2) d^2)`;
/// Lemma2: `((-2n-2)^(n-1) / n^n) d^(2n-2) t (n^2 t - 4 d^2)`.
pub fn closed_form(n: usize, variant: LemmaVariant, d_sq: &Rational) -> RatPoly {
    let ni = n as i64;
    let d_pow = pow_u(d_sq, (n - 1) as u64);
    let (constant, factor) = match variant {
        LemmaVariant::Lemma1 => {
            let sign = if (n - 1) % 2 == 0 { rat(1) } else { rat(-1) };
            (sign, RatPoly::new(vec![-(rat(2 * ni + 2) * d_sq), rat(ni)]))
        }
        LemmaVariant::Lemma2 => {
            let c = pow_u(&rat(-2 * ni - 2), (n - 1) as u64) / pow_u(&rat(ni), n as u64);
            (c, RatPoly::new(vec![-(rat(4) * d_sq), rat(ni * ni)]))
        }
    };
    RatPoly::new(vec![Rational::zero(), Rational::one()]).mul(&factor).scale(&(constant * d_pow))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{variant} factorization fails at n={n}, d^2={d_sq}: coefficient of t^{coefficient} is {found}, closed form gives {expected}")]
pub struct FactorizationMismatch {
    pub n: usize,
    pub variant: LemmaVariant,
    pub d_sq: Rational,
    pub coefficient: usize,
    pub expected: Rational,
    pub found: Rational,
}

/// Squared-distance sample grid used to certify the closed forms: `n + 3`
/// distinct positive rationals.
pub fn certification_grid(n: usize) -> Vec<Rational> {
    (0..n as i64 + 3).map(|j| ratio(j + 1, 2) + ratio(1, j + 3)).collect()
}

/// Certifies [`closed_form`] against the computed determinant polynomial.
///
/// Each coefficient of `t` is a polynomial in `d^2` of degree at most
/// `n + 1`, so agreement on `n + 3` distinct values of `d^2` proves the
/// identity in both variables.
pub fn lemma_factorization_check(n: usize, variant: LemmaVariant) -> Result<(), FactorizationMismatch> {
    lemma_factorization_check_with(n, variant, |n, d_sq| closed_form(n, variant, d_sq))
}

/// As [`lemma_factorization_check`] with a caller-supplied closed form.
pub fn lemma_factorization_check_with(
    n: usize,
    variant: LemmaVariant,
    expected: impl Fn(usize, &Rational) -> RatPoly,
) -> Result<(), FactorizationMismatch> {
    assert!(n >= variant.min_dimension(), "{variant} needs n >= {}", variant.min_dimension());
    for d_sq in certification_grid(n) {
        let found = cm_poly_in_unknown(&lemma_clique(n, variant, &d_sq)).expect("three distinct samples");
        let want = expected(n, &d_sq);
        for coefficient in 0..3 {
            let (e, f) = (want.coeff(coefficient), found.coeff(coefficient));
            if e != f {
                return Err(FactorizationMismatch { n, variant, d_sq, coefficient, expected: e, found: f });
            }
        }
        if want.degree().unwrap_or(0) > 2 {
            return Err(FactorizationMismatch {
                n,
                variant,
                d_sq,
                coefficient: 3,
                expected: want.coeff(3),
                found: Rational::zero(),
            });
        }
    }
    Ok(())
}
