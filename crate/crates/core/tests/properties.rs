use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use forcedist::cm::{
    affinely_independent, apex_pattern_clique, cm_det, cm_poly_in_unknown, coordinate_identity_check, lemma_clique,
    regular_pattern_clique, sq_dist, CliqueSq, LemmaVariant,
};
use forcedist::exact::{rat, ratio, rational_roots, Rational};
use forcedist::geometry::{apex_pair, point_from_sqdists, regular_simplex, verify_embedding, RatPointN};
use forcedist::graph::DistGraph;
use forcedist::ladder::{radical_cmp, LadderValue};
use forcedist::witness::{count_points, RadicalScaled, Sharing};

fn rational() -> impl Strategy<Value = Rational> {
    (-30i64..=30, 1i64..=12).prop_map(|(p, q)| ratio(p, q))
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=40, 1i64..=12).prop_map(|(p, q)| ratio(p, q))
}

fn points(n: usize, count: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    prop::collection::vec(prop::collection::vec(rational(), n), count)
}

fn sized_points(extra: usize) -> impl Strategy<Value = (usize, Vec<Vec<Rational>>)> {
    (2usize..=5).prop_flat_map(move |n| (Just(n), points(n, n + extra)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn coordinate_identity_holds((_n, pts) in sized_points(1)) {
        prop_assert_eq!(coordinate_identity_check(&pts), Ok(true));
    }

    #[test]
    fn n_plus_two_points_are_dependent(n in 2usize..=6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<Rational>> = (0..n + 2)
            .map(|_| (0..n).map(|_| ratio(rng.gen_range(-20..=20), rng.gen_range(1..=9))).collect())
            .collect();
        prop_assert!(cm_det(&CliqueSq::from_points(&pts).unwrap()).is_zero());
    }

    #[test]
    fn point_recovery_round_trip((n, pts) in sized_points(2)) {
        let anchors: Vec<RatPointN> = pts[..=n].iter().cloned().map(RatPointN).collect();
        let independent = !cm_det(&CliqueSq::from_points(&anchors).unwrap()).is_zero();
        prop_assume!(independent);
        let target = &pts[n + 1];
        let d: Vec<Rational> = anchors.iter().map(|a| sq_dist(&a.0, target)).collect();
        let got = point_from_sqdists(&anchors, &d).unwrap();
        prop_assert_eq!(got.map(|p| p.0), Some(target.clone()));
    }

    #[test]
    fn apex_separation(n in 3usize..=8, edge in positive_rational(), slack in positive_rational()) {
        let circ = edge.clone() * ratio(n as i64 - 1, 2 * n as i64);
        let apex_sq = &circ + &slack;
        let simplex = regular_simplex(n, &edge, n, 128).unwrap();
        let (a, b) = apex_pair(&simplex, &apex_sq).unwrap();
        let sep = a.sq_dist(&b);
        let want = rat(4) * (apex_sq.clone() - circ);
        let dev = ((sep.mid() - &want).abs() + sep.rad()).to_f64().unwrap();
        prop_assert!(dev <= 1e-9 * want.to_f64().unwrap().max(1.0));
        for p in &simplex {
            let d = p.sq_dist(&a);
            prop_assert!(((d.mid() - &apex_sq).abs() + d.rad()).to_f64().unwrap() < 1e-20);
        }
    }

    #[test]
    fn regular_simplex_embeds(n in 1usize..=8, extra in 0usize..=1, edge in positive_rational()) {
        let m = (n + extra).min(n + 1);
        let pts = regular_simplex(m, &edge, n, 128).unwrap();
        let mut g = DistGraph::new(n);
        for _ in 0..m {
            g.add_vertex(None);
        }
        for i in 0..m {
            for j in i + 1..m {
                g.add_edge(i, j, edge.clone()).unwrap();
            }
        }
        prop_assert!(verify_embedding(&g, &pts, 1e-12).unwrap().passed());
    }

    #[test]
    fn ladder_order_is_exact_and_total(n in 3usize..=10, a in (0u64..30, 0u64..30), b in (0u64..30, 0u64..30)) {
        let x = RadicalScaled::new(n, a.0, a.1);
        let y = RadicalScaled::new(n, b.0, b.1);
        let xy = radical_cmp(&x, &LadderValue::Radical(y));
        let yx = radical_cmp(&y, &LadderValue::Radical(x));
        prop_assert_eq!(xy, yx.reverse());
        prop_assert_eq!(xy == std::cmp::Ordering::Equal, x.value_sq() == y.value_sq());
    }
}

#[test]
fn lemma_roots_are_zero_and_target() {
    for n in 3..=8 {
        for j in 1..=5 {
            let d = ratio(j, 3);
            for variant in [LemmaVariant::Lemma1, LemmaVariant::Lemma2] {
                let poly = cm_poly_in_unknown(&lemma_clique(n, variant, &d)).unwrap();
                let roots = rational_roots(&poly).unwrap();
                assert_eq!(roots.non_rational, None);
                let want = [rat(0), variant.target_sq(n, &d)].into_iter().collect();
                assert_eq!(roots.distinct(), want, "n={n} {variant} d^2={d}");
            }
        }
    }
}

#[test]
fn simplex_patterns_on_grid() {
    for n in 3..=10 {
        for j in 1..=10 {
            let d = ratio(j, 7) + ratio(1, 2);
            assert_eq!(affinely_independent(&apex_pattern_clique(n, &d), n), Ok(true));
            assert_eq!(affinely_independent(&regular_pattern_clique(n, &d), n), Ok(true));
        }
    }
}

#[test]
fn counts_grow_with_exponents() {
    for n in 3..=6 {
        for k in 0..4 {
            for l in 0..3 {
                let c = count_points(n, k, l, Sharing::Endpoints).unwrap();
                assert!(count_points(n, k + 1, l, Sharing::Endpoints).unwrap() >= c);
                assert!(count_points(n, k, l + 1, Sharing::Endpoints).unwrap() >= c);
            }
        }
    }
}
