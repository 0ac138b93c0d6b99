//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p forcedist --test acceptance`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use forcedist::cli::{random_independent_points, random_point};
use forcedist::cm::{
    affinely_independent, cm_det, coordinate_identity_check, lemma_factorization_check_with, sq_dist, CliqueSq,
    LemmaVariant,
};
use forcedist::exact::{parse_rational, rat, ratio, RatPoly, Rational};
use forcedist::geometry::{point_from_sqdists, RatPointN};
use forcedist::ladder::{approximate, LadderQuery};
use forcedist::witness::{k_of_n, RadicalScaled};

const SEED: u64 = 0x5eed_acce;

type Outcome = Result<String, String>;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_forcedist")
}

fn pow(q: &Rational, e: usize) -> Rational {
    num_traits::pow(q.clone(), e)
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if let (Ok(detail), Some(limit)) = (&out, limit) {
        if took > limit {
            out = Err(format!("{detail}; took {took:.2?}, limit {limit:?}"));
        }
    }
    (out, took)
}

fn coordinate_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for n in 2..=5 {
        for i in 0..100 {
            let pts: Vec<_> = (0..=n).map(|_| random_point(&mut rng, n)).collect();
            if coordinate_identity_check(&pts) != Ok(true) {
                return Err(format!("n={n}, tuple {i} fails"));
            }
        }
    }
    Ok("400 tuples, n in 2..5".into())
}

fn dependent_cliques() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for n in 2..=6 {
        for i in 0..100 {
            let pts: Vec<_> = (0..n + 2).map(|_| random_point(&mut rng, n)).collect();
            let c = CliqueSq::from_points(&pts).map_err(|e| e.to_string())?;
            if !cm_det(&c).is_zero() {
                return Err(format!("n={n}, tuple {i}: determinant nonzero"));
            }
        }
    }
    Ok("500 tuples of n+2 points, n in 2..6".into())
}

/// Closed forms written out independently of the library's own.
fn expected_factor(n: usize, variant: LemmaVariant, d_sq: &Rational) -> RatPoly {
    let ni = n as i64;
    let d_pow = pow(d_sq, n - 1);
    let (c, a0, a1) = match variant {
        LemmaVariant::Lemma1 => {
            let sign = if n % 2 == 1 { rat(1) } else { rat(-1) };
            (sign, -(rat(2 * ni + 2) * d_sq), rat(ni))
        }
        LemmaVariant::Lemma2 => (pow(&rat(-2 * ni - 2), n - 1) / pow(&rat(ni), n), -(rat(4) * d_sq), rat(ni * ni)),
    };
    let k = c * d_pow;
    RatPoly::new(vec![Rational::zero(), &k * a0, k * a1])
}

fn factorizations() -> Outcome {
    for n in 3..=8 {
        for variant in [LemmaVariant::Lemma1, LemmaVariant::Lemma2] {
            lemma_factorization_check_with(n, variant, |n, d| expected_factor(n, variant, d))
                .map_err(|e| e.to_string())?;
        }
    }
    Ok("both closed forms certified for n in 3..8 on n+3 values of d^2".into())
}

fn simplex_patterns() -> Outcome {
    for n in 3..=10usize {
        let lift = rat(2) + ratio(2, n as i64);
        for j in 1..=10 {
            let d = ratio(j, 4) + ratio(1, j + 1);
            // Apexes c_1..c_n pairwise at (2+2/n) d^2, all at d^2 from c.
            let apex = CliqueSq::from_fn(n + 1, |_, b| if b == n { d.clone() } else { &lift * &d }).unwrap();
            let regular = CliqueSq::from_fn(n + 1, |_, _| d.clone()).unwrap();
            if affinely_independent(&apex, n) != Ok(true) || affinely_independent(&regular, n) != Ok(true) {
                return Err(format!("n={n}, d^2={d}: dependent"));
            }
        }
    }
    Ok("both patterns independent for n in 3..10 over 10 values".into())
}

fn point_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for n in 2..=5 {
        for i in 0..100 {
            let anchors: Vec<RatPointN> = random_independent_points(&mut rng, n).into_iter().map(RatPointN).collect();
            let p = random_point(&mut rng, n);
            let d: Vec<_> = anchors.iter().map(|a| sq_dist(&a.0, &p)).collect();
            match point_from_sqdists(&anchors, &d) {
                Ok(Some(q)) if q.0 == p => {}
                other => return Err(format!("n={n}, case {i}: {other:?}")),
            }
        }
    }
    Ok("400/400 points recovered exactly".into())
}

fn ladder_exponent() -> Outcome {
    for n in 3..=50usize {
        let window = |k: u64| {
            let v = ratio(4, (n * n) as i64) * pow(&(rat(2) + ratio(2, n as i64)), k as usize);
            v >= ratio(1, 4) && v < rat(1)
        };
        let mut k = 0;
        while !window(k) {
            k += 1;
        }
        if k_of_n(n) != k {
            return Err(format!("k({n}) = {} but scan gives {k}", k_of_n(n)));
        }
    }
    let spots = [(3, 0), (4, 0), (5, 1)];
    if spots.iter().any(|&(n, k)| k_of_n(n) != k) {
        return Err("spot values differ".into());
    }
    Ok("k(n) matches scan for n in 3..50; k(3)=0, k(4)=0, k(5)=1".into())
}

fn density_search() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let eps = parse_rational("1e-3").unwrap();
    let mut slowest = Duration::ZERO;
    for n in 3..=5 {
        for i in 0..100 {
            let target = ratio(rng.gen_range(1_000..=100_000), 10_000);
            let q = LadderQuery { n, target: target.clone(), eps: eps.clone(), max_k: 10_000, max_l: 10_000 };
            let start = Instant::now();
            let a = approximate(&q).map_err(|e| format!("n={n}, target {target}: {e}"))?;
            let took = start.elapsed();
            slowest = slowest.max(took);
            if took > Duration::from_secs(1) {
                return Err(format!("n={n}, target {target}: {took:?}"));
            }
            // Independent re-verification on squares.
            let v = pow(&(rat(2) + ratio(2, n as i64)), a.k as usize) * pow(&ratio(4, (n * n) as i64), a.l as usize);
            let hi = &target + &eps;
            let lo = &target - &eps;
            if v > &hi * &hi || (lo.is_positive() && v < &lo * &lo) {
                return Err(format!("n={n}, case {i}: ({}, {}) not within eps", a.k, a.l));
            }
        }
    }
    Ok(format!("300 targets in [1/10, 10] within 1e-3, slowest {slowest:.2?}"))
}

fn run(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(bin()).args(args).output().map_err(|e| e.to_string())
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let out = run(args)?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

const PIPELINE_CASES: [(usize, u64, u64); 8] =
    [(3, 0, 0), (3, 1, 0), (3, 0, 1), (3, 1, 1), (4, 0, 0), (4, 1, 0), (4, 0, 1), (4, 1, 1)];

/// gen, embed-check, prove, check for every case; files land in `dir`.
fn pipeline(dir: &Path) -> Outcome {
    for &(n, k, l) in &PIPELINE_CASES {
        let stem = dir.join(format!("n{n}_k{k}_l{l}"));
        let w = stem.with_extension("witness.json");
        let d = stem.with_extension("derivation.json");
        let e = stem.with_extension("embed.json");
        let (ws, ds, es) = (w.to_str().unwrap(), d.to_str().unwrap(), e.to_str().unwrap());
        let (ns, ks, ls) = (n.to_string(), k.to_string(), l.to_string());
        run_ok(&["gen", "--n", &ns, "--k", &ks, "--l", &ls, "--embed", "--out", ws])?;

        let wj: Value = serde_json::from_str(&fs::read_to_string(&w).unwrap()).unwrap();
        if wj["edges"].as_array().unwrap().iter().any(|e| e["sq"] != "1") {
            return Err(format!("n={n} ({k},{l}): non-unit primitive edge"));
        }
        run_ok(&["embed-check", ws, "--tol", "1e-9", "--out", es])?;
        run_ok(&["prove", ws, "--out", ds])?;
        run_ok(&["check", ds, ws])?;

        let target = RadicalScaled::new(n, k, l).value_sq();
        let dj: Value = serde_json::from_str(&fs::read_to_string(&d).unwrap()).unwrap();
        let last = &dj["steps"].as_array().unwrap().last().unwrap()["fact"];
        let sq = parse_rational(last["sq"].as_str().unwrap_or("")).ok();
        let pair = (last["u"].as_u64(), last["v"].as_u64());
        if sq != Some(target.clone()) || pair != (wj["x"].as_u64(), wj["y"].as_u64()) {
            return Err(format!("n={n} ({k},{l}): final fact {last} is not phi(x,y) = {target}"));
        }
        if (n, k, l) == (3, 1, 0) && target != ratio(8, 3) || (n, k, l) == (3, 0, 1) && target != ratio(4, 9) {
            return Err("unexpected target".into());
        }
    }
    Ok("8 witnesses generated, embedded at 1e-9, proved and checked".into())
}

fn negative_control(dir: &Path) -> Outcome {
    let w = dir.join("mutilated.json");
    run_ok(&["gen", "--n", "3", "--k", "1", "--drop-bridge", "--out", w.to_str().unwrap()])?;
    let out = run(&["prove", w.to_str().unwrap()])?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    if out.status.code() != Some(2) {
        return Err(format!("prove exited {:?}, expected 2", out.status.code()));
    }
    let inner = stderr.split_once('{').and_then(|(_, r)| r.split_once('}')).map(|(s, _)| s).unwrap_or("");
    let got: BTreeSet<Rational> = inner.split(',').filter_map(|s| parse_rational(s).ok()).collect();
    if got != BTreeSet::from([rat(0), ratio(8, 3)]) {
        return Err(format!("surviving set {got:?} from {stderr:?}"));
    }
    Ok("stuck with {0, 8/3} surviving".into())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn determinism(first: &Path) -> Outcome {
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(second.path())?;
    let (a, b) = (files(first), files(second.path()));
    let names = |v: &[PathBuf]| v.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    if names(&a) != names(&b) {
        return Err("different file sets".into());
    }
    for (x, y) in a.iter().zip(&b) {
        if fs::read(x).unwrap() != fs::read(y).unwrap() {
            return Err(format!("{} differs between runs", x.file_name().unwrap().to_string_lossy()));
        }
    }
    Ok(format!("{} files byte-identical across two runs", a.len()))
}

fn main() -> ExitCode {
    let pipeline_dir = tempfile::tempdir().expect("temporary directory");
    let secs = Duration::from_secs;
    let mut failures = 0;
    let mut report = |id: usize, name: &str, (outcome, took): (Outcome, Duration)| {
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failures += 1;
                println!("criterion {id:>2} FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    };
    report(1, "coordinate identity", timed(Some(secs(10)), coordinate_identity));
    report(2, "n+2 points are dependent", timed(None, dependent_cliques));
    report(3, "lemma factorizations", timed(Some(secs(60)), factorizations));
    report(4, "simplex patterns independent", timed(None, simplex_patterns));
    report(5, "point recovery", timed(None, point_recovery));
    report(6, "ladder exponent k(n)", timed(None, ladder_exponent));
    report(7, "density search", timed(None, density_search));
    report(8, "witness pipeline", timed(Some(secs(300)), || pipeline(pipeline_dir.path())));
    report(9, "negative control", timed(None, || negative_control(pipeline_dir.path())));
    let dir = pipeline_dir.path().to_owned();
    // The negative-control file is not part of the pipeline comparison.
    let _ = fs::remove_file(dir.join("mutilated.json"));
    report(10, "determinism", timed(None, || determinism(&dir)));
    if failures == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
