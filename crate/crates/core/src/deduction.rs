//! Plan-guided derivations that unit preservation forces the target value.
//!
//! The state tracks, for pairs of vertices, what is known about
//! `phi(f(u), f(v))`: a single value or a finite set of candidates. Rules:
//!
//! - `UNIT`: a primitive edge of length 1 has `phi = 1`.
//! - `CM-SOLVE`: an `(n+2)`-clique with one unknown pair has vanishing
//!   Cayley–Menger determinant, so the unknown is a root of a quadratic.
//! - `INDEP-CERT`: an `(n+1)`-set with known pairs and nonzero determinant is
//!   affinely independent.
//! - `ZERO-ELIM`: if `phi(u, v) = 0` and `u`, `v` agree on a certified
//!   independent set containing `u`, their images coincide; a scoped
//!   `MERGE-PROP` sub-derivation then exhibits a vertex `z` that the two see
//!   at incompatible values, so `0` is dropped.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use thiserror::Error;

use crate::cm::{cm_det, cm_poly_in_unknown, CliqueSq, CliqueWithUnknown};
use crate::exact::rational::{serde_string, serde_string_vec};
use crate::exact::{format_rational, rational_roots, Rational};
use crate::graph::VertexId;
use crate::witness::{PlanKind, PlanRecord, WitnessSet};

pub const DERIVATION_SCHEMA: &str = "forcedist-derivation/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "UNIT")]
    Unit,
    #[serde(rename = "CM-SOLVE")]
    CmSolve,
    #[serde(rename = "INDEP-CERT")]
    IndepCert,
    #[serde(rename = "ZERO-ELIM")]
    ZeroElim,
    #[serde(rename = "MERGE-PROP")]
    MergeProp,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Unit => "UNIT",
            Rule::CmSolve => "CM-SOLVE",
            Rule::IndepCert => "INDEP-CERT",
            Rule::ZeroElim => "ZERO-ELIM",
            Rule::MergeProp => "MERGE-PROP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fact {
    Value {
        u: VertexId,
        v: VertexId,
        #[serde(with = "serde_string")]
        sq: Rational,
    },
    OneOf {
        u: VertexId,
        v: VertexId,
        #[serde(with = "serde_string_vec")]
        values: Vec<Rational>,
    },
    Independent,
    /// Under the scoped hypothesis `phi(u, v) = 0`, `f(u) = f(v)`.
    Merged { u: VertexId, v: VertexId },
    /// Under the same hypothesis, `z` is seen at incompatible values.
    Contradiction { u: VertexId, v: VertexId, z: VertexId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub verts: Vec<VertexId>,
    pub fact: Fact,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub schema: String,
    pub n: usize,
    pub x: VertexId,
    pub y: VertexId,
    #[serde(with = "serde_string")]
    pub target_sq: Rational,
    pub steps: Vec<Step>,
}

impl Derivation {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("derivation serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn final_fact(&self) -> Option<&Fact> {
        self.steps.last().map(|s| &s.fact)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Known(Rational),
    OneOf(BTreeSet<Rational>),
}

impl Status {
    fn from_set(mut set: BTreeSet<Rational>) -> Status {
        if set.len() == 1 {
            Status::Known(set.pop_first().expect("one element"))
        } else {
            Status::OneOf(set)
        }
    }

    pub fn values(&self) -> BTreeSet<Rational> {
        match self {
            Status::Known(q) => BTreeSet::from([q.clone()]),
            Status::OneOf(s) => s.clone(),
        }
    }

    fn to_fact(&self, u: VertexId, v: VertexId) -> Fact {
        match self {
            Status::Known(q) => Fact::Value { u, v, sq: q.clone() },
            Status::OneOf(s) => Fact::OneOf { u, v, values: s.iter().cloned().collect() },
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values().iter().map(format_rational).collect();
        write!(f, "{{{}}}", vals.join(", "))
    }
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    (u.min(v), u.max(v))
}

/// What is known about `phi` on pairs, plus certified independent sets.
/// Coincidences only ever hold inside a `ZERO-ELIM` hypothesis, where the
/// single merged pair is passed explicitly.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeState {
    pairs: HashMap<(VertexId, VertexId), Status>,
    adj: HashMap<VertexId, BTreeSet<VertexId>>,
    independent: HashSet<Vec<VertexId>>,
}

impl KnowledgeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn status(&self, u: VertexId, v: VertexId) -> Option<&Status> {
        self.pairs.get(&key(u, v))
    }

    pub fn known(&self, u: VertexId, v: VertexId) -> Option<&Rational> {
        if u == v {
            return None;
        }
        match self.status(u, v)? {
            Status::Known(q) => Some(q),
            Status::OneOf(_) => None,
        }
    }

    /// Intersects the candidate set for `(u, v)` with `values`. Known values
    /// never change and sets only shrink; an empty result is an error.
    pub fn refine(&mut self, u: VertexId, v: VertexId, values: BTreeSet<Rational>) -> Result<Status, String> {
        let status = self.refined(u, v, values)?;
        self.pairs.insert(key(u, v), status.clone());
        self.adj.entry(u).or_default().insert(v);
        self.adj.entry(v).or_default().insert(u);
        Ok(status)
    }

    /// The status `refine` would produce, without changing the state.
    pub fn refined(&self, u: VertexId, v: VertexId, values: BTreeSet<Rational>) -> Result<Status, String> {
        let next: BTreeSet<Rational> = match self.status(u, v) {
            None => values,
            Some(cur) => cur.values().intersection(&values).cloned().collect(),
        };
        if next.is_empty() {
            return Err(format!("no value of phi({u}, {v}) is consistent"));
        }
        Ok(Status::from_set(next))
    }

    pub fn certify(&mut self, mut set: Vec<VertexId>) {
        set.sort_unstable();
        self.independent.insert(set);
    }

    pub fn is_certified(&self, set: &[VertexId]) -> bool {
        let mut s = set.to_vec();
        s.sort_unstable();
        self.independent.contains(&s)
    }

    /// Under the scoped hypothesis `f(u) = f(v)`, `z` refutes it when the
    /// candidate sets for `(u, z)` and `(v, z)` are disjoint.
    fn refutes_merged(&self, u: VertexId, v: VertexId, z: VertexId) -> bool {
        if z == u || z == v {
            return false;
        }
        match (self.status(u, z), self.status(v, z)) {
            (Some(a), Some(b)) => a.values().is_disjoint(&b.values()),
            _ => false,
        }
    }

    fn common_neighbours(&self, u: VertexId, v: VertexId) -> Vec<VertexId> {
        match (self.adj.get(&u), self.adj.get(&v)) {
            (Some(a), Some(b)) => a.intersection(b).copied().collect(),
            _ => Vec::new(),
        }
    }

    /// Table of known values on `verts` with `(0, last)` left unknown.
    fn clique_with_unknown(&self, verts: &[VertexId]) -> Option<CliqueWithUnknown> {
        let m = verts.len();
        let mut missing = false;
        let table = CliqueSq::from_fn(m, |i, j| {
            if (i, j) == (0, m - 1) {
                return Rational::zero();
            }
            match self.known(verts[i], verts[j]) {
                Some(q) => q.clone(),
                None => {
                    missing = true;
                    Rational::zero()
                }
            }
        })
        .ok()?;
        if missing {
            return None;
        }
        CliqueWithUnknown::new(table, 0, m - 1).ok()
    }

    fn clique(&self, verts: &[VertexId]) -> Option<CliqueSq> {
        let mut missing = false;
        let table = CliqueSq::from_fn(verts.len(), |i, j| match self.known(verts[i], verts[j]) {
            Some(q) => q.clone(),
            None => {
                missing = true;
                Rational::zero()
            }
        })
        .ok()?;
        (!missing).then_some(table)
    }
}

/// Candidate values forced on the unknown pair by a vanishing determinant:
/// the roots of a nonzero polynomial, provided all of them are rational.
fn cm_solutions(c: &CliqueWithUnknown) -> Result<BTreeSet<Rational>, String> {
    let poly = cm_poly_in_unknown(c).map_err(|e| e.to_string())?;
    if poly.is_zero() {
        return Err("Cayley-Menger polynomial vanishes identically".into());
    }
    let roots = rational_roots(&poly).map_err(|e| e.to_string())?;
    if let Some(nr) = roots.non_rational {
        return Err(format!("Cayley-Menger polynomial {poly} has non-rational roots ({nr:?})"));
    }
    let set = roots.distinct();
    if set.is_empty() {
        return Err(format!("Cayley-Menger polynomial {poly} has no roots"));
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("prover stuck: phi(x, y) {}", describe(.surviving))]
pub struct Stuck {
    /// Surviving candidates for the root pair (`None` if nothing is known).
    pub surviving: Option<Status>,
    /// Steps derived before getting stuck.
    pub partial: Derivation,
}

fn describe(s: &Option<Status>) -> String {
    match s {
        None => "is unconstrained".into(),
        Some(s) => format!("in {s}"),
    }
}

struct Prover<'a> {
    w: &'a WitnessSet,
    n: usize,
    state: KnowledgeState,
    steps: Vec<Step>,
}

impl Prover<'_> {
    fn node(&mut self, rec: &PlanRecord) {
        for c in &rec.children {
            self.node(c);
        }
        match rec.kind {
            PlanKind::Base => self.unit(rec.x, rec.y),
            PlanKind::Lemma1 | PlanKind::Lemma2 => self.lemma(rec),
        }
    }

    fn unit(&mut self, u: VertexId, v: VertexId) {
        if self.state.known(u, v).is_some() {
            return;
        }
        if self.w.graph.edge(u, v).is_some_and(|s| s.is_one()) {
            let status = self.state.refine(u, v, BTreeSet::from([Rational::one()])).expect("fresh unit fact");
            self.steps.push(Step { rule: Rule::Unit, verts: vec![u, v], fact: status.to_fact(u, v), sub: vec![] });
        }
    }

    fn cm_solve(&mut self, verts: Vec<VertexId>) {
        let (u, v) = (verts[0], *verts.last().expect("nonempty clique"));
        if self.state.known(u, v).is_some() {
            return;
        }
        let Some(c) = self.state.clique_with_unknown(&verts) else { return };
        let Ok(values) = cm_solutions(&c) else { return };
        if let Ok(status) = self.state.refine(u, v, values) {
            self.steps.push(Step { rule: Rule::CmSolve, fact: status.to_fact(u, v), verts, sub: vec![] });
        }
    }

    fn indep_cert(&mut self, verts: Vec<VertexId>) -> bool {
        if self.state.is_certified(&verts) {
            return true;
        }
        match self.state.clique(&verts) {
            Some(c) if !cm_det(&c).is_zero() => {
                self.state.certify(verts.clone());
                self.steps.push(Step { rule: Rule::IndepCert, verts, fact: Fact::Independent, sub: vec![] });
                true
            }
            _ => false,
        }
    }

    fn zero_elim(&mut self, u: VertexId, v: VertexId, others: &[VertexId], prefer: Option<VertexId>) {
        let zero = Rational::zero();
        let Some(Status::OneOf(vals)) = self.state.status(u, v).cloned() else { return };
        if !vals.contains(&zero) {
            return;
        }
        let mut basis = vec![u];
        basis.extend_from_slice(others);
        if !self.indep_cert(basis) {
            return;
        }
        if !others.iter().all(|&s| {
            let (a, b) = (self.state.known(u, s), self.state.known(v, s));
            a.is_some() && a == b
        }) {
            return;
        }
        let state = &self.state;
        let candidates = prefer.into_iter().chain(state.common_neighbours(u, v));
        let Some(z) = candidates.into_iter().find(|&z| state.refutes_merged(u, v, z)) else { return };
        let rest: BTreeSet<Rational> = vals.into_iter().filter(|q| !q.is_zero()).collect();
        let status = self.state.refine(u, v, rest).expect("nonzero candidates remain");
        let mut verts = vec![u, v];
        verts.extend_from_slice(others);
        self.steps.push(Step {
            rule: Rule::ZeroElim,
            verts,
            fact: status.to_fact(u, v),
            sub: vec![
                Step { rule: Rule::MergeProp, verts: vec![u, v], fact: Fact::Merged { u, v }, sub: vec![] },
                Step {
                    rule: Rule::MergeProp,
                    verts: vec![u, v, z],
                    fact: Fact::Contradiction { u, v, z },
                    sub: vec![],
                },
            ],
        });
    }

    fn lemma(&mut self, rec: &PlanRecord) {
        let Some(roles) = rec.roles() else { return };
        let main: Vec<VertexId> = std::iter::once(roles.x).chain(roles.p.iter().copied()).chain([roles.y]).collect();
        let mirror: Vec<VertexId> =
            std::iter::once(roles.x).chain(roles.pt.iter().copied()).chain([roles.yt]).collect();
        self.cm_solve(main);
        self.cm_solve(mirror);
        self.zero_elim(roles.x, roles.y, &roles.p, Some(roles.yt));
        debug_assert_eq!(roles.p.len(), self.n);
    }
}

/// Derives `phi(x, y) = target_sq` for a generated witness by walking its
/// plan bottom-up.
pub fn prove(w: &WitnessSet) -> Result<Derivation, Box<Stuck>> {
    let mut p = Prover { w, n: w.n, state: KnowledgeState::new(), steps: Vec::new() };
    p.node(&w.plan);
    let derivation = Derivation {
        schema: DERIVATION_SCHEMA.into(),
        n: w.n,
        x: w.x,
        y: w.y,
        target_sq: w.target_sq.clone(),
        steps: p.steps,
    };
    let done = matches!(p.state.status(w.x, w.y), Some(Status::Known(q)) if *q == w.target_sq);
    let last_is_root = matches!(derivation.final_fact(),
        Some(Fact::Value { u, v, sq }) if key(*u, *v) == key(w.x, w.y) && *sq == w.target_sq);
    if done && last_is_root {
        Ok(derivation)
    } else {
        Err(Box::new(Stuck { surviving: p.state.status(w.x, w.y).cloned(), partial: derivation }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("derivation invalid at step {step}: {reason}")]
pub struct CheckFailure {
    /// Index of the first invalid step (equal to the step count when the
    /// steps are fine but the conclusion is missing).
    pub step: usize,
    pub reason: String,
}

fn fact_pair_values(f: &Fact) -> Option<(VertexId, VertexId, BTreeSet<Rational>)> {
    match f {
        Fact::Value { u, v, sq } => Some((*u, *v, BTreeSet::from([sq.clone()]))),
        Fact::OneOf { u, v, values } => Some((*u, *v, values.iter().cloned().collect())),
        _ => None,
    }
}

fn replay(state: &mut KnowledgeState, w: &WitnessSet, step: &Step) -> Result<(), String> {
    let n = w.n;
    let in_range = |v: &VertexId| *v < w.graph.vertex_count();
    if !step.verts.iter().all(in_range) {
        return Err("vertex id out of range".into());
    }
    let distinct: BTreeSet<_> = step.verts.iter().collect();
    if distinct.len() != step.verts.len() {
        return Err("repeated vertex".into());
    }
    match step.rule {
        Rule::Unit => {
            let [u, v] = step.verts[..] else { return Err("UNIT takes two vertices".into()) };
            if !w.graph.edge(u, v).is_some_and(|s| s.is_one()) {
                return Err(format!("({u}, {v}) is not a unit edge of the witness"));
            }
            let want = Fact::Value { u, v, sq: Rational::one() };
            if step.fact != want {
                return Err("UNIT must conclude phi = 1 on its edge".into());
            }
            state.refine(u, v, BTreeSet::from([Rational::one()]))?;
        }
        Rule::CmSolve => {
            if step.verts.len() != n + 2 {
                return Err(format!("CM-SOLVE needs {} vertices, got {}", n + 2, step.verts.len()));
            }
            let c = state.clique_with_unknown(&step.verts).ok_or("clique has an unestablished pair")?;
            let solutions = cm_solutions(&c)?;
            let (u, v) = (step.verts[0], step.verts[n + 1]);
            let expect = state.refined(u, v, solutions.clone())?.to_fact(u, v);
            if !same_pair_fact(&step.fact, &expect) {
                return Err(format!("claimed {:?}, determinant gives {:?}", step.fact, expect));
            }
            state.refine(u, v, solutions)?;
        }
        Rule::IndepCert => {
            if step.verts.len() != n + 1 {
                return Err(format!("INDEP-CERT needs {} vertices, got {}", n + 1, step.verts.len()));
            }
            if step.fact != Fact::Independent {
                return Err("INDEP-CERT must conclude independence".into());
            }
            let c = state.clique(&step.verts).ok_or("set has an unestablished pair")?;
            if cm_det(&c).is_zero() {
                return Err("Cayley-Menger determinant is zero".into());
            }
            state.certify(step.verts.clone());
        }
        Rule::ZeroElim => {
            if step.verts.len() != n + 2 {
                return Err(format!("ZERO-ELIM needs {} vertices, got {}", n + 2, step.verts.len()));
            }
            let (u, v) = (step.verts[0], step.verts[1]);
            let others = &step.verts[2..];
            let cur = state.status(u, v).ok_or("pair has no candidates")?.values();
            if !cur.contains(&Rational::zero()) {
                return Err("0 is not a candidate".into());
            }
            let mut basis = vec![u];
            basis.extend_from_slice(others);
            if !state.is_certified(&basis) {
                return Err("independent set not certified earlier".into());
            }
            for &s in others {
                match (state.known(u, s), state.known(v, s)) {
                    (Some(a), Some(b)) if a == b => {}
                    _ => return Err(format!("phi({u}, {s}) and phi({v}, {s}) are not known equal")),
                }
            }
            let [merge, contra] = &step.sub[..] else {
                return Err("ZERO-ELIM needs a merge and a contradiction".into());
            };
            if merge.rule != Rule::MergeProp || merge.fact != (Fact::Merged { u, v }) {
                return Err("first scoped step must merge the pair".into());
            }
            let Fact::Contradiction { u: cu, v: cv, z } = contra.fact else {
                return Err("second scoped step must be a contradiction".into());
            };
            if contra.rule != Rule::MergeProp || (cu, cv) != (u, v) || contra.verts != [u, v, z] {
                return Err("contradiction does not match the merged pair".into());
            }
            if z >= w.graph.vertex_count() || !state.refutes_merged(u, v, z) {
                return Err(format!("vertex {z} does not separate the merged pair"));
            }
            let rest: BTreeSet<Rational> = cur.into_iter().filter(|q| !q.is_zero()).collect();
            if !same_pair_fact(&step.fact, &state.refined(u, v, rest.clone())?.to_fact(u, v)) {
                return Err("claimed result differs from the elimination".into());
            }
            state.refine(u, v, rest)?;
        }
        Rule::MergeProp => return Err("MERGE-PROP only appears inside ZERO-ELIM".into()),
    }
    Ok(())
}

fn same_pair_fact(a: &Fact, b: &Fact) -> bool {
    match (fact_pair_values(a), fact_pair_values(b)) {
        (Some((au, av, aset)), Some((bu, bv, bset))) => {
            key(au, av) == key(bu, bv) && aset == bset && matches!(a, Fact::Value { .. }) == (aset.len() == 1)
        }
        _ => false,
    }
}

/// Replays every step with exact arithmetic, recomputing each determinant.
pub fn check(d: &Derivation, w: &WitnessSet) -> Result<(), CheckFailure> {
    let header = if d.schema != DERIVATION_SCHEMA {
        Some(format!("unknown schema {:?}", d.schema))
    } else if d.n != w.n || key(d.x, d.y) != key(w.x, w.y) || d.target_sq != w.target_sq {
        Some("header does not match the witness".into())
    } else {
        None
    };
    if let Some(reason) = header {
        return Err(CheckFailure { step: 0, reason });
    }
    let mut state = KnowledgeState::new();
    for (i, step) in d.steps.iter().enumerate() {
        replay(&mut state, w, step).map_err(|reason| CheckFailure { step: i, reason })?;
    }
    let concluded = matches!(d.final_fact(),
        Some(Fact::Value { u, v, sq }) if key(*u, *v) == key(w.x, w.y) && *sq == w.target_sq);
    let established = state.known(w.x, w.y) == Some(&w.target_sq);
    if concluded && established {
        Ok(())
    } else {
        Err(CheckFailure {
            step: d.steps.len(),
            reason: format!("final fact is not phi({}, {}) = {}", w.x, w.y, format_rational(&w.target_sq)),
        })
    }
}

/// Counts of steps by rule.
pub fn rule_histogram(d: &Derivation) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for s in &d.steps {
        *h.entry(s.rule.to_string()).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, ratio};
    use crate::witness::{generate, without_bridge, GenerateOptions};

    fn witness(n: usize, k: u64, l: u64) -> WitnessSet {
        generate(n, k, l, GenerateOptions::default()).unwrap()
    }

    #[test]
    fn base_witness_is_one_unit_step() {
        let w = witness(3, 0, 0);
        let d = prove(&w).unwrap();
        assert_eq!(d.steps.len(), 1);
        assert_eq!(d.steps[0].rule, Rule::Unit);
        assert_eq!(d.final_fact(), Some(&Fact::Value { u: 0, v: 1, sq: rat(1) }));
        check(&d, &w).unwrap();
    }

    #[test]
    fn lemma1_derivation_ends_at_target() {
        let w = witness(3, 1, 0);
        let d = prove(&w).unwrap();
        assert!(d.steps.len() <= 40, "{} steps", d.steps.len());
        assert_eq!(d.final_fact(), Some(&Fact::Value { u: w.x, v: w.y, sq: ratio(8, 3) }));
        let cm: Vec<_> = d.steps.iter().filter(|s| s.rule == Rule::CmSolve).collect();
        assert_eq!(cm.len(), 2);
        for s in cm {
            let Fact::OneOf { values, .. } = &s.fact else { panic!("expected a disjunction") };
            assert_eq!(values, &vec![rat(0), ratio(8, 3)]);
        }
        check(&d, &w).unwrap();
    }

    #[test]
    fn lemma2_disjunction_matches_closed_form() {
        let w = witness(3, 0, 1);
        let d = prove(&w).unwrap();
        let root_cm = d
            .steps
            .iter()
            .find(|s| s.rule == Rule::CmSolve && s.verts[0] == w.x && *s.verts.last().unwrap() == w.y)
            .unwrap();
        let Fact::OneOf { values, .. } = &root_cm.fact else { panic!("expected a disjunction") };
        assert_eq!(values, &vec![rat(0), ratio(4, 9)]);
        check(&d, &w).unwrap();
    }

    #[test]
    fn proves_small_grid() {
        for n in [3, 4] {
            for (k, l) in [(1, 1), (2, 0), (0, 2)] {
                let w = witness(n, k, l);
                let d = prove(&w).unwrap_or_else(|e| panic!("n={n} ({k},{l}): {e}"));
                check(&d, &w).unwrap();
            }
        }
    }

    #[test]
    fn missing_bridge_leaves_zero_alive() {
        let w = without_bridge(&witness(3, 1, 0)).unwrap();
        let err = prove(&w).unwrap_err();
        assert_eq!(err.surviving, Some(Status::OneOf(BTreeSet::from([rat(0), ratio(8, 3)]))));
        assert!(err.to_string().contains("{0, 8/3}"));
    }

    #[test]
    fn tampered_root_fails_at_that_step() {
        let w = witness(3, 1, 0);
        let mut d = prove(&w).unwrap();
        let i = d.steps.iter().position(|s| s.rule == Rule::CmSolve).unwrap();
        let Fact::OneOf { values, .. } = &mut d.steps[i].fact else { panic!() };
        values[1] = rat(3);
        assert_eq!(check(&d, &w).unwrap_err().step, i);
    }

    #[test]
    fn empty_derivation_rejected() {
        let w = witness(3, 0, 0);
        let mut d = prove(&w).unwrap();
        d.steps.clear();
        assert_eq!(check(&d, &w).unwrap_err().step, 0);
    }

    #[test]
    fn forged_unit_and_contradiction_rejected() {
        let w = witness(3, 1, 0);
        let mut d = prove(&w).unwrap();
        d.steps.insert(0, Step {
            rule: Rule::Unit,
            verts: vec![w.x, w.y],
            fact: Fact::Value { u: w.x, v: w.y, sq: rat(1) },
            sub: vec![],
        });
        assert_eq!(check(&d, &w).unwrap_err().step, 0);

        let mut d = prove(&w).unwrap();
        let last = d.steps.last_mut().unwrap();
        assert_eq!(last.rule, Rule::ZeroElim);
        last.sub[1] = Step {
            rule: Rule::MergeProp,
            verts: vec![w.x, w.y, last.verts[2]],
            fact: Fact::Contradiction { u: w.x, v: w.y, z: last.verts[2] },
            sub: vec![],
        };
        let n = d.steps.len() - 1;
        assert_eq!(check(&d, &w).unwrap_err().step, n);
    }

    #[test]
    fn json_round_trip() {
        let w = witness(3, 1, 0);
        let d = prove(&w).unwrap();
        let text = d.to_json_string();
        assert!(text.contains("\"rule\": \"ZERO-ELIM\""));
        let back = Derivation::from_json_str(&text).unwrap();
        assert_eq!(back, d);
        check(&back, &w).unwrap();
    }
}
