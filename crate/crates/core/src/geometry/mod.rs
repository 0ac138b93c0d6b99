//! Numeric realization of configurations in `R^n`.
//!
//! Coordinates are [`Ball`]s (dyadic midpoint plus certified radius); exact
//! rational points are used where inputs are rational.

pub mod ball;

pub use ball::{rational_to_sci, Ball};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cm::{affinely_independent, sq_dist, CliqueSq, CmError};
use crate::exact::{parse_rational, rat, ratio, ExactError, RatMatrix, Rational};
use crate::graph::{DistGraph, VertexId};

pub const DEFAULT_PRECISION: u32 = 128;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("a regular simplex with {m} vertices does not fit in R^{n}")]
    SimplexTooLarge { m: usize, n: usize },
    #[error("squared edge must be positive")]
    NonPositiveEdge,
    #[error("apex squared distance {apex_sq} does not exceed the circumradius squared (~{circumradius_sq:.6e}); no real apex")]
    NoRealApex { apex_sq: Rational, circumradius_sq: f64 },
    #[error("expected {expected} simplex vertices in R^{expected}, got {found}")]
    SimplexShape { expected: usize, found: usize },
    #[error("points coincide; no direction defined")]
    CoincidentPoints,
    #[error("radii violate the triangle condition")]
    TriangleViolated,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("anchors are affinely dependent")]
    DependentAnchors,
    #[error("vertex {0} has no coordinates")]
    MissingCoordinates(VertexId),
    #[error("square root of a negative enclosure")]
    NegativeSqrt,
    #[error("division by an enclosure containing zero")]
    DivisionByZero,
    #[error("vectors are linearly dependent")]
    Degenerate,
    #[error("bad coordinate literal {0:?}")]
    BadLiteral(String),
    #[error(transparent)]
    Cm(#[from] CmError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Point of `R^n` with enclosed coordinates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PointN {
    coords: Vec<Ball>,
}

impl PointN {
    pub fn origin(n: usize, prec: u32) -> Self {
        Self { coords: vec![Ball::zero(prec); n] }
    }

    pub fn new(coords: Vec<Ball>) -> Self {
        Self { coords }
    }

    pub fn from_rationals(coords: &[Rational], prec: u32) -> Self {
        Self { coords: coords.iter().map(|q| Ball::exact(q.clone(), prec)).collect() }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(n: usize, i: usize, prec: u32) -> Self {
        let mut p = Self::origin(n, prec);
        p.coords[i] = Ball::exact(Rational::one(), prec);
        p
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Ball] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(Ball::to_f64).collect()
    }

    pub fn add(&self, o: &PointN) -> PointN {
        Self { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &PointN) -> PointN {
        Self { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, k: &Ball) -> PointN {
        Self { coords: self.coords.iter().map(|a| a.mul(k)).collect() }
    }

    pub fn scale_rat(&self, k: &Rational) -> PointN {
        Self { coords: self.coords.iter().map(|a| a.mul_rat(k)).collect() }
    }

    pub fn dot(&self, o: &PointN) -> Ball {
        let prec = self.coords.first().map_or(DEFAULT_PRECISION, Ball::prec);
        self.coords.iter().zip(&o.coords).fold(Ball::zero(prec), |acc, (a, b)| acc.add(&a.mul(b)))
    }

    pub fn norm_sq(&self) -> Ball {
        self.dot(self)
    }

    pub fn sq_dist(&self, o: &PointN) -> Ball {
        self.sub(o).norm_sq()
    }

    fn prec(&self) -> u32 {
        self.coords.first().map_or(DEFAULT_PRECISION, Ball::prec)
    }
}

/// Exact point of `Q^n`.
#[derive(Clone, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub struct RatPointN(pub Vec<Rational>);

impl AsRef<[Rational]> for RatPointN {
    fn as_ref(&self) -> &[Rational] {
        &self.0
    }
}

impl PointN {
    fn div_ball(&self, k: &Ball) -> Result<PointN, GeometryError> {
        Ok(PointN { coords: self.coords.iter().map(|c| c.div(k)).collect::<Result<_, _>>()? })
    }
}

fn centroid(points: &[PointN]) -> PointN {
    let sum = points[1..].iter().fold(points[0].clone(), |acc, p| acc.add(p));
    sum.scale_rat(&ratio(1, points.len() as i64))
}

fn normalize(v: &PointN) -> Result<PointN, GeometryError> {
    let len = v.norm_sq().sqrt()?;
    if len.contains_zero() {
        return Err(GeometryError::Degenerate);
    }
    v.div_ball(&len)
}

/// Gram–Schmidt on `vectors` in order.
fn orthonormalize(vectors: &[PointN]) -> Result<Vec<PointN>, GeometryError> {
    let mut out: Vec<PointN> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = v.clone();
        for u in &out {
            r = r.sub(&u.scale(&r.dot(u)));
        }
        out.push(normalize(&r)?);
    }
    Ok(out)
}

/// Completes an orthonormal family to a basis of `R^n` using standard basis
/// vectors in index order. A candidate is taken when its residual squared
/// norm is at least `1/(2n)`; some remaining `e_i` always has residual at
/// least `1/n`, so the choice is deterministic and well conditioned.
fn complete_frame(family: &[PointN], n: usize, prec: u32) -> Result<Vec<PointN>, GeometryError> {
    let mut frame: Vec<PointN> = family.to_vec();
    let threshold = ratio(1, 2 * n as i64);
    for i in 0..n {
        if frame.len() == n {
            break;
        }
        let mut r = PointN::basis(n, i, prec);
        for u in &frame {
            r = r.sub(&u.scale(&r.dot(u)));
        }
        if r.norm_sq().mid() >= &threshold {
            frame.push(normalize(&r)?);
        }
    }
    if frame.len() != n {
        return Err(GeometryError::Degenerate);
    }
    Ok(frame.split_off(family.len()))
}

/// Squared circumradius of a regular simplex with `m` vertices.
pub fn circumradius_sq(m: usize, edge_sq: &Rational) -> Rational {
    edge_sq * ratio(m as i64 - 1, 2 * m as i64)
}

/// `m` vertices of a regular simplex with squared edge `edge_sq` in `R^n`.
///
/// Canonical placement: vertex 0 at the origin; vertex `k` sits above the
/// centroid of vertices `0..k` along `e_k`, at height
/// `sqrt(edge_sq (k + 1) / (2k))`.
pub fn regular_simplex(m: usize, edge_sq: &Rational, n: usize, prec: u32) -> Result<Vec<PointN>, GeometryError> {
    if m > n + 1 {
        return Err(GeometryError::SimplexTooLarge { m, n });
    }
    if !edge_sq.is_positive() {
        return Err(GeometryError::NonPositiveEdge);
    }
    let mut pts: Vec<PointN> = Vec::with_capacity(m);
    if m == 0 {
        return Ok(pts);
    }
    pts.push(PointN::origin(n, prec));
    for k in 1..m {
        let c = centroid(&pts);
        let h = Ball::exact(edge_sq * ratio(k as i64 + 1, 2 * k as i64), prec).sqrt()?;
        let mut v = c;
        v.coords[k - 1] = v.coords[k - 1].add(&h);
        pts.push(v);
    }
    Ok(pts)
}

/// The two points on the axis through the centroid of a regular
/// `(n-1)`-simplex (given as `n` points of `R^n`) at squared distance
/// `apex_sq` from every vertex. Returned as `(centroid - h u, centroid + h u)`
/// with `u` the canonical unit normal; their squared separation is
/// `4 (apex_sq - R^2)`.
pub fn apex_pair(simplex: &[PointN], apex_sq: &Rational) -> Result<(PointN, PointN), GeometryError> {
    let n = simplex.first().map_or(0, PointN::dim);
    if simplex.len() != n || n < 2 {
        return Err(GeometryError::SimplexShape { expected: n, found: simplex.len() });
    }
    let prec = simplex[0].prec();
    let c = centroid(simplex);
    let r_sq = c.sq_dist(&simplex[0]);
    let h_sq = Ball::exact(apex_sq.clone(), prec).sub(&r_sq);
    if !h_sq.lower().is_positive() {
        return Err(GeometryError::NoRealApex { apex_sq: apex_sq.clone(), circumradius_sq: r_sq.to_f64() });
    }
    let h = h_sq.sqrt()?;
    let edges: Vec<PointN> = simplex[1..].iter().map(|p| p.sub(&simplex[0])).collect();
    let span = orthonormalize(&edges)?;
    let normal = complete_frame(&span, n, prec)?.remove(0);
    let offset = normal.scale(&h);
    Ok((c.sub(&offset), c.add(&offset)))
}

/// The deterministic point `t` with `|a - t|^2 = ra_sq`, `|b - t|^2 = rb_sq`:
/// it lies in the plane of `a`, `b` and the first canonical direction
/// perpendicular to `b - a`, on its nonnegative side.
pub fn place_third(a: &PointN, b: &PointN, ra_sq: &Rational, rb_sq: &Rational) -> Result<PointN, GeometryError> {
    let n = a.dim();
    if b.dim() != n {
        return Err(GeometryError::DimensionMismatch { expected: n, found: b.dim() });
    }
    if n < 2 {
        return Err(GeometryError::DimensionMismatch { expected: 2, found: n });
    }
    let prec = a.prec();
    let ab = b.sub(a);
    let dist_sq = ab.norm_sq();
    if dist_sq.contains_zero() {
        return Err(GeometryError::CoincidentPoints);
    }
    let dist = dist_sq.sqrt()?;
    let e1 = ab.div_ball(&dist)?;
    let e2 = complete_frame(std::slice::from_ref(&e1), n, prec)?.remove(0);
    let ra = Ball::exact(ra_sq.clone(), prec);
    let rb = Ball::exact(rb_sq.clone(), prec);
    let along = ra.add(&dist_sq).sub(&rb).div(&dist.mul_rat(&rat(2)))?;
    let across_sq = ra.sub(&along.mul(&along));
    if across_sq.upper().is_negative() {
        return Err(GeometryError::TriangleViolated);
    }
    let across = across_sq.sqrt()?;
    Ok(a.add(&e1.scale(&along)).add(&e2.scale(&across)))
}

/// Maps points rigidly so that `from.0 -> to.0` and the direction
/// `from.0 -> from.1` goes to `to.0 -> to.1`, using canonical completions of
/// both frames. The separations of the two pairs must agree.
pub fn align(points: &[PointN], from: (&PointN, &PointN), to: (&PointN, &PointN)) -> Result<Vec<PointN>, GeometryError> {
    let n = from.0.dim();
    let prec = from.0.prec();
    let f1 = normalize(&from.1.sub(from.0))?;
    let g1 = normalize(&to.1.sub(to.0))?;
    let mut f = vec![f1.clone()];
    f.extend(complete_frame(&[f1], n, prec)?);
    let mut g = vec![g1.clone()];
    g.extend(complete_frame(&[g1], n, prec)?);
    Ok(points
        .iter()
        .map(|p| {
            let rel = p.sub(from.0);
            f.iter().zip(&g).fold(to.0.clone(), |acc, (fi, gi)| acc.add(&gi.scale(&rel.dot(fi))))
        })
        .collect())
}

/// Places the simplex `p_1..p_n` of a bipyramid whose apexes are `x` and
/// `y`: pairwise squared distance `edge_sq`, squared distance `apex_sq` to
/// both apexes.
pub fn bipyramid_simplex(x: &PointN, y: &PointN, edge_sq: &Rational, apex_sq: &Rational) -> Result<Vec<PointN>, GeometryError> {
    let n = x.dim();
    let prec = x.prec();
    let simplex = regular_simplex(n, edge_sq, n, prec)?;
    let (a, b) = apex_pair(&simplex, apex_sq)?;
    align(&simplex, (&a, &b), (x, y))
}

/// The unique point of `Q^n` with the given squared distances to `n + 1`
/// affinely independent anchors, or `None` if no rational point has them.
///
/// Subtracting the first equation from the others leaves the linear system
/// `2 (a_i - a_0) . p = |a_i|^2 - |a_0|^2 - d_i + d_0`; the solution is then
/// checked against the first equation.
pub fn point_from_sqdists(anchors: &[RatPointN], dists: &[Rational]) -> Result<Option<RatPointN>, GeometryError> {
    let count = anchors.len();
    if count < 2 {
        return Err(GeometryError::DimensionMismatch { expected: 2, found: count });
    }
    let n = count - 1;
    if dists.len() != count {
        return Err(GeometryError::DimensionMismatch { expected: count, found: dists.len() });
    }
    if let Some(a) = anchors.iter().find(|a| a.0.len() != n) {
        return Err(GeometryError::DimensionMismatch { expected: n, found: a.0.len() });
    }
    if !affinely_independent(&CliqueSq::from_points(anchors)?, n)? {
        return Err(GeometryError::DependentAnchors);
    }
    let norm_sq = |p: &RatPointN| p.0.iter().map(|c| c * c).fold(Rational::zero(), |a, b| a + b);
    let a0 = &anchors[0];
    let a0_sq = norm_sq(a0);
    let m = RatMatrix::from_fn(n, n, |i, j| rat(2) * (&anchors[i + 1].0[j] - &a0.0[j]));
    let rhs: Vec<Rational> = (0..n)
        .map(|i| norm_sq(&anchors[i + 1]) - &a0_sq - &dists[i + 1] + &dists[0])
        .collect();
    let Some(sol) = m.solve(&rhs)? else {
        return Err(GeometryError::DependentAnchors);
    };
    if sq_dist(&sol, &a0.0) == dists[0] {
        Ok(Some(RatPointN(sol)))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub u: VertexId,
    pub v: VertexId,
    pub label: String,
    pub measured: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub edges_checked: usize,
    pub tol: f64,
    pub max_relative_error: f64,
    pub violations: Vec<Violation>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every edge: `|measured - label| <= tol * max(1, label)`, where the
/// deviation includes the enclosure radius.
pub fn verify_embedding(g: &DistGraph, coords: &[PointN], tol: f64) -> Result<EmbeddingReport, GeometryError> {
    if coords.len() < g.vertex_count() {
        return Err(GeometryError::MissingCoordinates(coords.len()));
    }
    let mut report = EmbeddingReport { edges_checked: 0, tol, max_relative_error: 0.0, violations: Vec::new() };
    for (u, v, label) in g.edges() {
        let measured = coords[u].sq_dist(&coords[v]);
        let deviation = (measured.mid() - label).abs() + measured.rad();
        let scale = if label > &Rational::one() { label.clone() } else { Rational::one() };
        let rel = (deviation / scale).to_f64().unwrap_or(f64::INFINITY);
        report.edges_checked += 1;
        report.max_relative_error = report.max_relative_error.max(rel);
        if rel > tol {
            report.violations.push(Violation {
                u,
                v,
                label: label.to_string(),
                measured: measured.to_f64(),
                relative_error: rel,
            });
        }
    }
    Ok(report)
}

/// Decimal digits that carry `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    (prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// `{"id", "coords": [decimal], "radius": [decimal]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointJson {
    pub id: VertexId,
    pub coords: Vec<String>,
    pub radius: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateDump {
    pub precision: u32,
    pub digits: usize,
    pub points: Vec<PointJson>,
}

impl CoordinateDump {
    pub fn new(points: &[PointN], prec: u32) -> Self {
        let digits = decimal_digits(prec);
        Self {
            precision: prec,
            digits,
            points: points
                .iter()
                .enumerate()
                .map(|(id, p)| PointJson {
                    id,
                    coords: p.coords.iter().map(|c| c.to_sci(digits)).collect(),
                    radius: p.coords.iter().map(|c| format!("{:.3e}", c.rad_f64())).collect(),
                })
                .collect(),
        }
    }

    /// Reads the dump back; each radius is widened by the decimal rounding
    /// of its midpoint.
    pub fn to_points(&self) -> Result<Vec<PointN>, GeometryError> {
        let ulp = Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(10), self.digits.saturating_sub(1)));
        self.points
            .iter()
            .map(|p| {
                let coords = p
                    .coords
                    .iter()
                    .zip(&p.radius)
                    .map(|(c, r)| {
                        let mid = parse_rational(c).map_err(|_| GeometryError::BadLiteral(c.clone()))?;
                        let rad = parse_rational(r).map_err(|_| GeometryError::BadLiteral(r.clone()))?;
                        let rounding = mid.abs() * &ulp;
                        Ok(Ball::with_radius(mid, rad + rounding, self.precision))
                    })
                    .collect::<Result<Vec<_>, GeometryError>>()?;
                Ok(PointN::new(coords))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    const P: u32 = DEFAULT_PRECISION;

    fn close(b: &Ball, want: f64) -> bool {
        (b.to_f64() - want).abs() < 1e-14
    }

    #[test]
    fn simplex_two_and_three_vertices() {
        let s = regular_simplex(2, &rat(1), 3, P).unwrap();
        assert_eq!(s[0].to_f64(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s[1].to_f64(), vec![1.0, 0.0, 0.0]);
        let s = regular_simplex(3, &rat(1), 3, P).unwrap();
        assert!(close(&s[2].coords()[0], 0.5));
        assert!(close(&s[2].coords()[1], 3f64.sqrt() / 2.0));
        assert!(close(&s[2].coords()[2], 0.0));
    }

    #[test]
    fn tetrahedron_circumradius() {
        let s = regular_simplex(4, &rat(1), 3, P).unwrap();
        let r_sq = centroid(&s).sq_dist(&s[0]);
        assert!(close(&r_sq, 3.0 / 8.0));
        assert_eq!(circumradius_sq(4, &rat(1)), ratio(3, 8));
        assert!(matches!(regular_simplex(5, &rat(1), 3, P), Err(GeometryError::SimplexTooLarge { .. })));
    }

    #[test]
    fn apex_separation_lemma_patterns() {
        let s = regular_simplex(3, &rat(1), 3, P).unwrap();
        let (x, y) = apex_pair(&s, &rat(1)).unwrap();
        assert!(close(&x.sq_dist(&y), 8.0 / 3.0));
        let s = regular_simplex(3, &ratio(8, 3), 3, P).unwrap();
        let (x, y) = apex_pair(&s, &rat(1)).unwrap();
        assert!(close(&x.sq_dist(&y), 4.0 / 9.0));
        for p in &s {
            assert!(close(&x.sq_dist(p), 1.0));
            assert!(close(&y.sq_dist(p), 1.0));
        }
    }

    #[test]
    fn apex_at_circumradius_is_rejected() {
        let s = regular_simplex(3, &rat(1), 3, P).unwrap();
        assert!(matches!(apex_pair(&s, &ratio(1, 3)), Err(GeometryError::NoRealApex { .. })));
    }

    #[test]
    fn place_third_cases() {
        let a = PointN::origin(3, P);
        let b = PointN::basis(3, 0, P);
        let t = place_third(&a, &b, &rat(1), &rat(1)).unwrap();
        assert!(close(&t.coords()[0], 0.5));
        assert!(close(&t.coords()[1], 3f64.sqrt() / 2.0));
        assert!(close(&t.coords()[2], 0.0));

        let t = place_third(&a, &b, &rat(4), &rat(1)).unwrap();
        assert!(close(&t.coords()[0], 2.0));
        assert!(t.coords()[1].to_f64().abs() < 1e-15);

        assert!(matches!(place_third(&a, &b, &rat(9), &rat(1)), Err(GeometryError::TriangleViolated)));
        assert!(matches!(place_third(&a, &a, &rat(1), &rat(1)), Err(GeometryError::CoincidentPoints)));
    }

    #[test]
    fn place_third_lemma2_bridge() {
        // |x - y|^2 = 4/9, |x - yt|^2 = 4/9, |y - yt|^2 = (4/9)^2.
        let x = PointN::origin(3, P);
        let y = PointN::basis(3, 0, P).scale_rat(&ratio(2, 3));
        let t = place_third(&x, &y, &ratio(4, 9), &ratio(16, 81)).unwrap();
        assert!(close(&x.sq_dist(&t), 4.0 / 9.0));
        assert!(close(&y.sq_dist(&t), 16.0 / 81.0));
    }

    #[test]
    fn point_recovery_small_cases() {
        let anchors: Vec<RatPointN> =
            [[0, 0], [1, 0], [0, 1]].iter().map(|p| RatPointN(p.iter().map(|&v| rat(v)).collect())).collect();
        let got = point_from_sqdists(&anchors, &[rat(1), rat(0), rat(2)]).unwrap();
        assert_eq!(got, Some(RatPointN(vec![rat(1), rat(0)])));
        let got = point_from_sqdists(&anchors, &[rat(0), rat(1), rat(1)]).unwrap();
        assert_eq!(got, Some(RatPointN(vec![rat(0), rat(0)])));
        // Inconsistent distances: no point at all.
        assert_eq!(point_from_sqdists(&anchors, &[rat(0), rat(0), rat(0)]).unwrap(), None);
        let collinear: Vec<RatPointN> =
            [[0, 0], [1, 0], [2, 0]].iter().map(|p| RatPointN(p.iter().map(|&v| rat(v)).collect())).collect();
        assert!(matches!(point_from_sqdists(&collinear, &[rat(1), rat(1), rat(1)]), Err(GeometryError::DependentAnchors)));
    }

    #[test]
    fn verify_embedding_flags_perturbation() {
        let mut g = DistGraph::new(2);
        let a = g.add_vertex(None);
        let b = g.add_vertex(None);
        g.add_edge(a, b, rat(1)).unwrap();
        let pts = vec![PointN::origin(2, P), PointN::basis(2, 0, P)];
        assert!(verify_embedding(&g, &pts, 1e-9).unwrap().passed());
        let moved = vec![PointN::origin(2, P), PointN::from_rationals(&[ratio(1001, 1000), rat(0)], P)];
        let report = verify_embedding(&g, &moved, 1e-9).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(verify_embedding(&g, &pts[..1], 1e-9), Err(GeometryError::MissingCoordinates(1))));
    }

    #[test]
    fn coordinate_dump_round_trip() {
        let s = regular_simplex(3, &rat(1), 3, P).unwrap();
        let dump = CoordinateDump::new(&s, P);
        let back = dump.to_points().unwrap();
        for (p, q) in s.iter().zip(&back) {
            assert!(p.sq_dist(q).to_f64() < 1e-70);
            for c in q.coords() {
                assert!(c.rad_f64() < 1e-35);
            }
        }
    }
}
