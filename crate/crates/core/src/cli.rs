//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 prover stuck, 64 usage or malformed input.

use clap::{Args, Parser, Subcommand};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cm::{
    apex_pattern_clique, closed_form, coordinate_identity_check, cm_det, affinely_independent,
    lemma_factorization_check_with, regular_pattern_clique, CliqueSq, LemmaVariant,
};
use crate::deduction::{check, prove, Derivation};
use crate::exact::{format_rational, parse_rational, ratio, RatPoly, Rational};
use crate::geometry::{point_from_sqdists, RatPointN};
use crate::ladder::{approximate, LadderQuery};
use crate::witness::{
    count_points, embed, generate, reverify_embedding, EmbedOptions, GenerateOptions, Sharing, WitnessSet, without_bridge,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_STUCK: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "forcedist", version, about = "Forced-distance witness sets for unit-preserving maps R^n -> C^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the determinant identities exactly over a range of dimensions.
    VerifyIdentities(VerifyArgs),
    /// Write the witness set for sqrt(2+2/n)^k (2/n)^l.
    Gen(GenArgs),
    /// Derive the forced distance for a witness file.
    Prove(ProveArgs),
    /// Replay a derivation against its witness.
    Check(CheckArgs),
    /// Find ladder exponents approximating a target distance.
    Approx(ApproxArgs),
    /// Count witness vertices without building the witness.
    Count(CountArgs),
    /// Verify (or compute and verify) the coordinates of a witness.
    EmbedCheck(EmbedCheckArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Dimension range `a..b` (inclusive) or a single dimension.
    #[arg(long, default_value = "2..6")]
    pub n: String,
    /// Random tuples per dimension.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Harness self-test: perturb the closed forms so certification fails.
    #[arg(long, hide = true)]
    pub corrupt_closed_form: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub k: u64,
    #[arg(long, default_value_t = 0)]
    pub l: u64,
    #[arg(long, default_value = "endpoints")]
    pub sharing: Sharing,
    /// Include coordinates and their verification.
    #[arg(long)]
    pub embed: bool,
    #[arg(long, default_value_t = crate::geometry::DEFAULT_PRECISION)]
    pub precision: u32,
    #[arg(long, default_value_t = crate::geometry::DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Allow n = 2 for Lemma 1 chains (l = 0).
    #[arg(long)]
    pub allow_plane: bool,
    /// Negative control: omit the root's y-y~ edge.
    #[arg(long, conflicts_with = "embed")]
    pub drop_bridge: bool,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    pub witness: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub derivation: PathBuf,
    pub witness: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[arg(long)]
    pub n: usize,
    /// Positive rational or decimal.
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub eps: String,
    #[arg(long, default_value_t = 10_000)]
    pub max_k: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_l: u64,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub k: u64,
    #[arg(long, default_value_t = 0)]
    pub l: u64,
    #[arg(long, default_value = "endpoints")]
    pub sharing: Sharing,
}

#[derive(Debug, Args)]
pub struct EmbedCheckArgs {
    pub witness: PathBuf,
    #[arg(long, default_value_t = crate::geometry::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Precision used when the witness carries no coordinates.
    #[arg(long, default_value_t = crate::geometry::DEFAULT_PRECISION)]
    pub precision: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn failed(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_FAIL, message: message.into() }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "forcedist: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::VerifyIdentities(a) => cmd_verify_identities(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Prove(a) => cmd_prove(&a, out),
        Command::Check(a) => cmd_check(&a, out),
        Command::Approx(a) => cmd_approx(&a, out),
        Command::Count(a) => cmd_count(&a, out),
        Command::EmbedCheck(a) => cmd_embed_check(&a, out),
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| failed(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| failed(format!("cannot write output: {e}"))),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_witness(path: &Path) -> Result<WitnessSet, Failure> {
    WitnessSet::from_json_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn check_precision(prec: u32, tol: f64) -> CmdResult {
    if !(32..=4096).contains(&prec) {
        return Err(usage(format!("precision must be between 32 and 4096 bits, got {prec}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Parses `a..b` (inclusive) or `a`.
pub fn parse_n_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid dimension {t:?}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let a = parse(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(format!("empty dimension range {s:?}"));
    }
    if a < 2 {
        return Err(format!("dimensions start at 2, got {a}"));
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub check: String,
    pub n: usize,
    pub cases: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub schema: &'static str,
    pub n_min: usize,
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

/// Small random rational `p/q` with `|p| <= 20`, `1 <= q <= 9`.
pub fn random_rational(rng: &mut impl Rng) -> Rational {
    ratio(rng.gen_range(-20..=20), rng.gen_range(1..=9))
}

pub fn random_point(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| random_rational(rng)).collect()
}

/// `n + 1` random points in `Q^n` with nonzero CM determinant.
pub fn random_independent_points(rng: &mut impl Rng, n: usize) -> Vec<Vec<Rational>> {
    loop {
        let pts: Vec<_> = (0..=n).map(|_| random_point(rng, n)).collect();
        if let Ok(c) = CliqueSq::from_points(&pts) {
            if !cm_det(&c).is_zero() {
                return pts;
            }
        }
    }
}

fn perturbed_closed_form(n: usize, variant: LemmaVariant, d_sq: &Rational) -> RatPoly {
    let p = closed_form(n, variant, d_sq);
    let mut c = p.coeffs().to_vec();
    c.resize(3, Rational::zero());
    c[1] += Rational::one();
    RatPoly::new(c)
}

/// Runs every determinant identity for `n` in `lo..=hi`.
pub fn identity_suite(lo: usize, hi: usize, samples: usize, seed: u64, corrupt: bool) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for n in lo..=hi {
        let mut push = |check: &str, cases: usize, res: Result<(), String>| {
            checks.push(IdentityCheck {
                check: check.into(),
                n,
                cases,
                passed: res.is_ok(),
                detail: res.err(),
            });
        };

        let mut res = Ok(());
        for i in 0..samples {
            let pts: Vec<_> = (0..=n).map(|_| random_point(&mut rng, n)).collect();
            if coordinate_identity_check(&pts) != Ok(true) {
                res = Err(format!("tuple {i} violates det^2 = c_n * CM"));
                break;
            }
        }
        push("coordinate-identity", samples, res);

        let mut res = Ok(());
        for i in 0..samples {
            let pts: Vec<_> = (0..n + 2).map(|_| random_point(&mut rng, n)).collect();
            let det = CliqueSq::from_points(&pts).map(|c| cm_det(&c));
            if det != Ok(Rational::zero()) {
                res = Err(format!("tuple {i} of n+2 points has nonzero CM determinant"));
                break;
            }
        }
        push("dependent-clique", samples, res);

        for variant in [LemmaVariant::Lemma1, LemmaVariant::Lemma2] {
            if n < variant.min_dimension() {
                continue;
            }
            let res = if corrupt {
                lemma_factorization_check_with(n, variant, |n, d| perturbed_closed_form(n, variant, d))
            } else {
                lemma_factorization_check_with(n, variant, |n, d| closed_form(n, variant, d))
            };
            push(&format!("{variant}-factorization"), n + 3, res.map_err(|e| e.to_string()));
        }

        let grid: Vec<Rational> = (1..=10).map(|j| ratio(j, 3)).collect();
        let res = grid
            .iter()
            .try_for_each(|d| {
                let apex = affinely_independent(&apex_pattern_clique(n, d), n);
                let regular = affinely_independent(&regular_pattern_clique(n, d), n);
                if apex == Ok(true) && regular == Ok(true) {
                    Ok(())
                } else {
                    Err(format!("simplex pattern degenerate at d^2 = {}", format_rational(d)))
                }
            });
        push("simplex-independence", grid.len(), res);

        let mut res = Ok(());
        for i in 0..samples {
            let anchors: Vec<RatPointN> =
                random_independent_points(&mut rng, n).into_iter().map(RatPointN).collect();
            let p = random_point(&mut rng, n);
            let dists: Vec<Rational> = anchors.iter().map(|a| crate::cm::sq_dist(&a.0, &p)).collect();
            match point_from_sqdists(&anchors, &dists) {
                Ok(Some(q)) if q.0 == p => {}
                other => {
                    res = Err(format!("case {i}: recovery returned {other:?}"));
                    break;
                }
            }
        }
        push("point-recovery", samples, res);
    }
    let passed = checks.iter().all(|c| c.passed);
    IdentityReport { schema: "forcedist-identities/1", n_min: lo, n_max: hi, samples, seed, checks, passed }
}

fn cmd_verify_identities(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let (lo, hi) = parse_n_range(&a.n).map_err(usage)?;
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let report = identity_suite(lo, hi, a.samples, a.seed, a.corrupt_closed_form);
    emit(&to_json(&report), a.out.as_deref(), out)?;
    match report.checks.iter().find(|c| !c.passed) {
        None => Ok(()),
        Some(c) => Err(failed(format!(
            "{} failed at n = {}: {}",
            c.check,
            c.n,
            c.detail.as_deref().unwrap_or("no detail")
        ))),
    }
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> CmdResult {
    if a.n < 3 && !(a.allow_plane && a.n == 2 && a.l == 0) {
        return Err(usage(format!(
            "n = {} is not supported: the construction needs n >= 3 (use --allow-plane for Lemma 1 chains at n = 2)",
            a.n
        )));
    }
    check_precision(a.precision, a.tol)?;
    let opts = GenerateOptions {
        sharing: a.sharing,
        embed: a.embed.then_some(EmbedOptions { precision: a.precision, tol: a.tol }),
        allow_plane: a.allow_plane,
    };
    let mut w = generate(a.n, a.k, a.l, opts).map_err(|e| usage(e.to_string()))?;
    if a.drop_bridge {
        w = without_bridge(&w).map_err(|e| usage(e.to_string()))?;
    }
    emit(&w.to_json_string(), a.out.as_deref(), out)?;
    match &w.embedding {
        Some(e) if !e.passed() => Err(failed(format!(
            "embedding fails verification at tol {}: {} violating edges",
            a.tol,
            e.report.violations.len()
        ))),
        _ => Ok(()),
    }
}

fn cmd_prove(a: &ProveArgs, out: &mut dyn Write) -> CmdResult {
    let w = load_witness(&a.witness)?;
    match prove(&w) {
        Ok(d) => emit(&d.to_json_string(), a.out.as_deref(), out),
        Err(stuck) => Err(Failure {
            code: EXIT_STUCK,
            message: format!("{stuck} after {} steps", stuck.partial.steps.len()),
        }),
    }
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let w = load_witness(&a.witness)?;
    let d = Derivation::from_json_str(&read(&a.derivation)?)
        .map_err(|e| usage(format!("{}: {e}", a.derivation.display())))?;
    match check(&d, &w) {
        Ok(()) => emit(
            &format!("valid: phi(x, y) = {} in {} steps\n", format_rational(&w.target_sq), d.steps.len()),
            None,
            out,
        ),
        Err(e) => Err(failed(e.to_string())),
    }
}

#[derive(Serialize)]
struct ApproxReport {
    n: usize,
    k: u64,
    l: u64,
    value_sq: String,
    error: String,
}

fn cmd_approx(a: &ApproxArgs, out: &mut dyn Write) -> CmdResult {
    let target = parse_rational(&a.target).map_err(|e| usage(e.to_string()))?;
    let eps = parse_rational(&a.eps).map_err(|e| usage(e.to_string()))?;
    let q = LadderQuery { n: a.n, target, eps, max_k: a.max_k, max_l: a.max_l };
    q.validate().map_err(|e| usage(e.to_string()))?;
    let r = approximate(&q).map_err(|e| failed(e.to_string()))?;
    let report =
        ApproxReport { n: r.n, k: r.k, l: r.l, value_sq: format_rational(&r.value_sq), error: r.error_sci };
    emit(&to_json(&report), None, out)
}

fn cmd_count(a: &CountArgs, out: &mut dyn Write) -> CmdResult {
    let c = count_points(a.n, a.k, a.l, a.sharing).map_err(|e| usage(e.to_string()))?;
    emit(&format!("{c}\n"), None, out)
}

#[derive(Serialize)]
struct EmbedCheckReport {
    schema: &'static str,
    source: &'static str,
    vertices: usize,
    edges_checked: usize,
    violations: usize,
    max_relative_error: f64,
    root_sq: f64,
    tol: f64,
    passed: bool,
}

fn cmd_embed_check(a: &EmbedCheckArgs, out: &mut dyn Write) -> CmdResult {
    check_precision(a.precision, a.tol)?;
    let w = load_witness(&a.witness)?;
    let (source, e) = if w.embedding.is_some() {
        ("stored", reverify_embedding(&w, a.tol))
    } else {
        ("computed", embed(&w, EmbedOptions { precision: a.precision, tol: a.tol }))
    };
    let e = e.map_err(|e| failed(e.to_string()))?;
    let report = EmbedCheckReport {
        schema: "forcedist-embed-check/1",
        source,
        vertices: w.graph.vertex_count(),
        edges_checked: e.report.edges_checked,
        violations: e.report.violations.len(),
        max_relative_error: e.report.max_relative_error,
        root_sq: e.root_sq,
        tol: a.tol,
        passed: e.passed(),
    };
    emit(&to_json(&report), a.out.as_deref(), out)?;
    if e.passed() {
        Ok(())
    } else {
        Err(failed(format!("{} edges violate tol {}", report.violations, a.tol)))
    }
}
