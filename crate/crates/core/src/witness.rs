//! Recursive witness sets for distances `sqrt(2 + 2/n)^k * (2/n)^l`.
//!
//! A plan is a DAG of lemma applications bottoming out at the unit distance.
//! Generation expands it into a tree: every edge of a configuration is
//! replaced by a fresh copy of the witness for that edge's length, glued at
//! the two endpoints.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

use crate::cm::{lift_factor_sq, shrink_factor_sq, LemmaVariant};
use crate::exact::{rat, rational::{pow_u, serde_string, serde_string_opt}, Rational};
use crate::geometry::{
    bipyramid_simplex, place_third, verify_embedding, Ball, CoordinateDump, EmbeddingReport, GeometryError, PointN,
};
use crate::graph::{
    build_config, config_edges, graph_union, ConfigRoles, ConfigSpec, DistGraph, EdgeKind, GraphError, GraphJson,
    VertexId,
};

pub const WITNESS_SCHEMA: &str = "forcedist-witness/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("witness generation needs n >= 3 (got n = {0}); Lemma 1 chains at n = 2 require the experimental flag")]
    DimensionTooSmall(usize),
    #[error("no rung of the ladder satisfies the bridge precondition for d^2 = {0}")]
    NoBridge(Rational),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("malformed witness: {0}")]
    Malformed(String),
}

/// The number `sqrt(2 + 2/n)^k * (2/n)^l`, kept as its exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadicalScaled {
    pub n: usize,
    pub k: u64,
    pub l: u64,
}

impl RadicalScaled {
    pub fn new(n: usize, k: u64, l: u64) -> Self {
        Self { n, k, l }
    }

    pub fn one(n: usize) -> Self {
        Self { n, k: 0, l: 0 }
    }

    /// Exact square `(2 + 2/n)^k * (4/n^2)^l`.
    pub fn value_sq(&self) -> Rational {
        pow_u(&lift_factor_sq(self.n), self.k) * pow_u(&shrink_factor_sq(self.n), self.l)
    }

    /// Product of two values with the same `n`.
    pub fn times(&self, o: &RadicalScaled) -> RadicalScaled {
        debug_assert_eq!(self.n, o.n);
        RadicalScaled { n: self.n, k: self.k + o.k, l: self.l + o.l }
    }

    /// Float approximation (for display and search guidance only).
    pub fn approx(&self) -> f64 {
        let n = self.n as f64;
        let log = self.k as f64 * 0.5 * (2.0 + 2.0 / n).ln() + self.l as f64 * (2.0 / n).ln();
        log.exp()
    }
}

impl fmt::Display for RadicalScaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sqrt(2+2/{n})^{k} * (2/{n})^{l}", n = self.n, k = self.k, l = self.l)
    }
}

/// `(4/n^2) (2 + 2/n)^k`, the square of `(2/n) sqrt(2 + 2/n)^k`.
fn contraction_sq(n: usize, k: u64) -> Rational {
    shrink_factor_sq(n) * pow_u(&lift_factor_sq(n), k)
}

fn in_contraction_window(v: &Rational) -> bool {
    *v >= Rational::new(1.into(), 4.into()) && *v < Rational::one()
}

/// Smallest `k >= 0` with `1/2 <= (2/n) sqrt(2 + 2/n)^k < 1`.
///
/// A logarithmic estimate picks the starting point; exact comparisons of the
/// squares decide.
pub fn k_of_n(n: usize) -> u64 {
    assert!(n >= 3, "k(n) is defined for n >= 3");
    let nf = n as f64;
    let estimate = ((nf * nf / 16.0).ln() / (2.0 + 2.0 / nf).ln()).ceil().max(0.0) as u64;
    let mut k = estimate;
    while k > 0 && contraction_sq(n, k - 1) >= Rational::new(1.into(), 4.into()) {
        k -= 1;
    }
    while contraction_sq(n, k) < Rational::new(1.into(), 4.into()) {
        k += 1;
    }
    debug_assert!(in_contraction_window(&contraction_sq(n, k)));
    k
}

/// Ladder contraction factor `(2/n) sqrt(2 + 2/n)^k(n)`, in `[1/2, 1)`.
pub fn rho(n: usize) -> RadicalScaled {
    RadicalScaled { n, k: k_of_n(n), l: 1 }
}

/// How child witnesses share vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    /// Each sub-edge gets fresh auxiliary vertices; only endpoints are shared.
    #[default]
    Endpoints,
    /// Child witnesses attached to the same endpoint pair with the same plan
    /// are instantiated once.
    Memo,
}

impl fmt::Display for Sharing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sharing::Endpoints => "endpoints",
            Sharing::Memo => "memo",
        })
    }
}

impl std::str::FromStr for Sharing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "endpoints" => Ok(Sharing::Endpoints),
            "memo" => Ok(Sharing::Memo),
            other => Err(format!("unknown sharing policy {other:?} (expected endpoints or memo)")),
        }
    }
}

/// One plan step; children are indices into [`Schedule::nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Base,
    Lemma1 { d: usize },
    Lemma2 { d: usize, eps: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    pub step: Step,
    pub value: RadicalScaled,
}

/// Hash-consed plan DAG. Every node's sub-distances are planned by earlier
/// nodes, so the DAG is acyclic by construction.
#[derive(Debug, Clone)]
pub struct Schedule {
    n: usize,
    nodes: Vec<PlanNode>,
    root: usize,
}

struct ScheduleBuilder {
    n: usize,
    rho_sq: Rational,
    k_rho: u64,
    nodes: Vec<PlanNode>,
    index: HashMap<Step, usize>,
    rungs: Vec<usize>,
}

impl ScheduleBuilder {
    fn new(n: usize) -> Self {
        let mut b = Self {
            n,
            rho_sq: Rational::one(),
            k_rho: 0,
            nodes: Vec::new(),
            index: HashMap::new(),
            rungs: Vec::new(),
        };
        if n >= 3 {
            let r = rho(n);
            b.rho_sq = r.value_sq();
            b.k_rho = r.k;
        }
        let base = b.intern(Step::Base);
        b.rungs.push(base);
        b
    }

    fn intern(&mut self, step: Step) -> usize {
        if let Some(&i) = self.index.get(&step) {
            return i;
        }
        if let Step::Lemma2 { d, .. } = step {
            // Simplex edges of a Lemma 2 configuration have length sqrt(2+2/n) d.
            self.intern(Step::Lemma1 { d });
        }
        let value = match step {
            Step::Base => RadicalScaled::one(self.n),
            Step::Lemma1 { d } => self.nodes[d].value.times(&RadicalScaled::new(self.n, 1, 0)),
            Step::Lemma2 { d, .. } => self.nodes[d].value.times(&RadicalScaled::new(self.n, 0, 1)),
        };
        self.nodes.push(PlanNode { step, value });
        self.index.insert(step, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn lift(&mut self, mut node: usize, times: u64) -> usize {
        for _ in 0..times {
            node = self.intern(Step::Lemma1 { d: node });
        }
        node
    }

    /// `rho^m`, built by the ladder: `rho^(m+1)` is Lemma 2 applied with
    /// `eps = rho^m` and `d = sqrt(2+2/n)^k(n) rho^m`.
    fn rung(&mut self, m: usize) -> usize {
        while self.rungs.len() <= m {
            let prev = *self.rungs.last().expect("rung 0 exists");
            let d = self.lift(prev, self.k_rho);
            let next = self.intern(Step::Lemma2 { d, eps: prev });
            self.rungs.push(next);
        }
        self.rungs[m]
    }

    /// Largest rung `eps = rho^m` meeting the Lemma 2 precondition
    /// `eps/2 <= (2/n) d != eps`, decided on squares.
    fn bridge_for(&mut self, d_sq: &Rational) -> Result<usize, WitnessError> {
        let target_sq = shrink_factor_sq(self.n) * d_sq;
        let limit = rat(4) * &target_sq;
        let mut eps_sq = Rational::one();
        // rho < 1, so the rungs eventually drop below any positive limit.
        for m in 0..10_000 {
            if eps_sq <= limit && eps_sq != target_sq {
                return Ok(self.rung(m));
            }
            eps_sq *= &self.rho_sq;
        }
        Err(WitnessError::NoBridge(d_sq.clone()))
    }

    /// `(2/n)^l` with Lemma 2 steps; `d` of each step is the previous level.
    fn shrink_chain(&mut self, l: u64) -> Result<usize, WitnessError> {
        let mut node = self.rungs[0];
        for _ in 0..l {
            let d_sq = self.nodes[node].value.value_sq();
            let eps = self.bridge_for(&d_sq)?;
            node = self.intern(Step::Lemma2 { d: node, eps });
        }
        Ok(node)
    }
}

/// Plans the witness for `sqrt(2 + 2/n)^k * (2/n)^l`: `k` Lemma 1 steps
/// outermost over a chain of `l` Lemma 2 steps.
pub fn schedule(n: usize, k: u64, l: u64) -> Result<Schedule, WitnessError> {
    if n < 3 && l > 0 {
        return Err(WitnessError::DimensionTooSmall(n));
    }
    if n < 2 {
        return Err(WitnessError::DimensionTooSmall(n));
    }
    let mut b = ScheduleBuilder::new(n);
    let inner = b.shrink_chain(l)?;
    let root = b.lift(inner, k);
    Ok(Schedule { n, nodes: b.nodes, root })
}

impl Schedule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &PlanNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Configuration parameters of a lemma node (`None` for `Base`).
    pub fn config(&self, i: usize) -> Option<ConfigSpec> {
        match self.nodes[i].step {
            Step::Base => None,
            Step::Lemma1 { d } => Some(ConfigSpec::lemma1(self.n, self.nodes[d].value.value_sq())),
            Step::Lemma2 { d, eps } => Some(ConfigSpec::lemma2(
                self.n,
                self.nodes[d].value.value_sq(),
                self.nodes[eps].value.value_sq(),
            )),
        }
    }

    /// Plan index of the child witness for an edge of the given kind, in a
    /// lemma node.
    pub fn child_for(&self, i: usize, kind: EdgeKind) -> usize {
        match (self.nodes[i].step, kind) {
            (Step::Lemma1 { d }, _) => d,
            (Step::Lemma2 { d, .. }, EdgeKind::Arm) => d,
            (Step::Lemma2 { d, .. }, EdgeKind::Simplex) => self
                .nodes
                .iter()
                .position(|node| node.step == Step::Lemma1 { d })
                .expect("lemma2 simplex edges are planned"),
            (Step::Lemma2 { eps, .. }, EdgeKind::Bridge) => eps,
            (Step::Base, _) => panic!("base nodes have no children"),
        }
    }
}

/// Vertex count of the witness `generate` would build, without building it.
pub fn count_points(n: usize, k: u64, l: u64, policy: Sharing) -> Result<BigUint, WitnessError> {
    let plan = schedule(n, k, l)?;
    // Under the tree expansion no two sub-edges share an endpoint pair, so
    // memoized sharing never merges anything and both policies agree.
    let _ = policy;
    let mut memo: Vec<Option<BigUint>> = vec![None; plan.len()];
    Ok(count_node(&plan, plan.root, &mut memo))
}

fn count_node(plan: &Schedule, i: usize, memo: &mut Vec<Option<BigUint>>) -> BigUint {
    if let Some(c) = &memo[i] {
        return c.clone();
    }
    let n = plan.n;
    let total = match plan.nodes[i].step {
        Step::Base => BigUint::from(2u32),
        _ => {
            let roles = ConfigRoles::canonical(n);
            let mut total = BigUint::from(2 * n as u64 + 3);
            for (_, _, kind) in config_edges(&roles) {
                let child = plan.child_for(i, kind);
                total += count_node(plan, child, memo) - BigUint::from(2u32);
            }
            total
        }
    };
    memo[i] = Some(total.clone());
    total
}

/// Plan tree with concrete vertex ids, as exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub kind: PlanKind,
    pub k: u64,
    pub l: u64,
    #[serde(with = "serde_string")]
    pub target_sq: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "serde_string_opt")]
    pub d_sq: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "serde_string_opt")]
    pub eps_sq: Option<Rational>,
    pub x: VertexId,
    pub y: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yt: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<VertexId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pt: Vec<VertexId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<PlanRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Base,
    Lemma1,
    Lemma2,
}

impl PlanRecord {
    pub fn variant(&self) -> Option<LemmaVariant> {
        match self.kind {
            PlanKind::Base => None,
            PlanKind::Lemma1 => Some(LemmaVariant::Lemma1),
            PlanKind::Lemma2 => Some(LemmaVariant::Lemma2),
        }
    }

    pub fn roles(&self) -> Option<ConfigRoles> {
        Some(ConfigRoles { x: self.x, y: self.y, yt: self.yt?, p: self.p.clone(), pt: self.pt.clone() })
    }

    pub fn config(&self, n: usize) -> Option<ConfigSpec> {
        Some(ConfigSpec { variant: self.variant()?, n, d_sq: self.d_sq.clone()?, eps_sq: self.eps_sq.clone() })
    }

    fn remap(&mut self, map: &[VertexId]) {
        self.x = map[self.x];
        self.y = map[self.y];
        self.yt = self.yt.map(|v| map[v]);
        for v in self.p.iter_mut().chain(self.pt.iter_mut()) {
            *v = map[*v];
        }
        for c in &mut self.children {
            c.remap(map);
        }
    }

    /// Visits nodes parent-first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PlanRecord)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(PlanRecord::node_count).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub precision: u32,
    pub tol: f64,
    pub points: Vec<PointN>,
    pub report: EmbeddingReport,
    /// Measured `|x - y|^2` at the root.
    pub root_sq: f64,
    pub root_ok: bool,
}

impl Embedding {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.root_ok
    }
}

/// A finite point set with designated `x`, `y` on which unit preservation
/// forces `phi(f(x), f(y)) = target_sq`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSet {
    pub n: usize,
    pub k: u64,
    pub l: u64,
    pub sharing: Sharing,
    pub graph: DistGraph,
    pub x: VertexId,
    pub y: VertexId,
    pub target_sq: Rational,
    pub plan: PlanRecord,
    pub embedding: Option<Embedding>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    pub precision: u32,
    pub tol: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self { precision: crate::geometry::DEFAULT_PRECISION, tol: crate::geometry::DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GenerateOptions {
    pub sharing: Sharing,
    pub embed: Option<EmbedOptions>,
    /// Permit `n = 2` (Lemma 1 chains only).
    pub allow_plane: bool,
}

/// Builds the witness set for `sqrt(2 + 2/n)^k * (2/n)^l`.
pub fn generate(n: usize, k: u64, l: u64, opts: GenerateOptions) -> Result<WitnessSet, WitnessError> {
    if n < 3 && !(opts.allow_plane && n == 2 && l == 0) {
        return Err(WitnessError::DimensionTooSmall(n));
    }
    let plan = schedule(n, k, l)?;
    let mut cache: HashMap<usize, (DistGraph, PlanRecord)> = HashMap::new();
    let (mut graph, record) = instantiate(&plan, plan.root, &mut cache)?;
    let target_sq = plan.node(plan.root).value.value_sq();
    graph.clear_targets();
    graph.add_target(record.x, record.y, target_sq.clone())?;
    if let Some(eo) = opts.embed {
        let _ = eo;
    }
    let mut w = WitnessSet {
        n,
        k,
        l,
        sharing: opts.sharing,
        x: record.x,
        y: record.y,
        target_sq,
        graph,
        plan: record,
        embedding: None,
    };
    if let Some(eo) = opts.embed {
        w.embedding = Some(embed(&w, eo)?);
    }
    Ok(w)
}

fn instantiate(
    plan: &Schedule,
    i: usize,
    cache: &mut HashMap<usize, (DistGraph, PlanRecord)>,
) -> Result<(DistGraph, PlanRecord), WitnessError> {
    if let Some(hit) = cache.get(&i) {
        return Ok(hit.clone());
    }
    let n = plan.n;
    let node = &plan.nodes[i];
    let target_sq = node.value.value_sq();
    let out = match plan.config(i) {
        None => {
            let mut g = DistGraph::new(n);
            let x = g.add_vertex(None);
            let y = g.add_vertex(None);
            g.add_edge(x, y, Rational::one())?;
            g.add_target(x, y, Rational::one())?;
            let rec = PlanRecord {
                kind: PlanKind::Base,
                k: node.value.k,
                l: node.value.l,
                target_sq,
                d_sq: None,
                eps_sq: None,
                x,
                y,
                yt: None,
                p: Vec::new(),
                pt: Vec::new(),
                children: Vec::new(),
            };
            (g, rec)
        }
        Some(spec) => {
            let mut skeleton = build_config(&spec)?;
            let roles = ConfigRoles::canonical(n);
            let edge_list = config_edges(&roles);
            let mut children = Vec::with_capacity(edge_list.len());
            for &(u, v, kind) in &edge_list {
                let child_idx = plan.child_for(i, kind);
                let (cg, crec) = instantiate(plan, child_idx, cache)?;
                let label = skeleton.edge(u, v).cloned().expect("configuration edge");
                if crec.target_sq != label {
                    return Err(WitnessError::Malformed(format!(
                        "child plan for edge ({u}, {v}) forces {} but the edge is {}",
                        crec.target_sq, label
                    )));
                }
                children.push((u, v, cg, crec));
            }
            skeleton.clear_edges();
            let mut parts: Vec<&DistGraph> = vec![&skeleton];
            parts.extend(children.iter().map(|(_, _, g, _)| g));
            let gluing: Vec<_> = children
                .iter()
                .enumerate()
                .flat_map(|(ci, (u, v, _, rec))| [((ci + 1, rec.x), (0, *u)), ((ci + 1, rec.y), (0, *v))])
                .collect();
            let union = graph_union(&parts, &gluing)?;
            let mut g = union.graph;
            let roles = roles.map(|v| union.maps[0][v]);
            let child_records: Vec<PlanRecord> = children
                .into_iter()
                .enumerate()
                .map(|(ci, (_, _, _, mut rec))| {
                    rec.remap(&union.maps[ci + 1]);
                    rec
                })
                .collect();
            g.clear_targets();
            g.add_target(roles.x, roles.y, target_sq.clone())?;
            let rec = PlanRecord {
                kind: match spec.variant {
                    LemmaVariant::Lemma1 => PlanKind::Lemma1,
                    LemmaVariant::Lemma2 => PlanKind::Lemma2,
                },
                k: node.value.k,
                l: node.value.l,
                target_sq,
                d_sq: Some(spec.d_sq.clone()),
                eps_sq: spec.eps_sq.clone(),
                x: roles.x,
                y: roles.y,
                yt: Some(roles.yt),
                p: roles.p,
                pt: roles.pt,
                children: child_records,
            };
            (g, rec)
        }
    };
    cache.insert(i, out.clone());
    Ok(out)
}

/// Coordinates for every vertex: the root pair on the first axis, then each
/// lemma node's auxiliary points from its endpoint pair.
pub fn embed(w: &WitnessSet, opts: EmbedOptions) -> Result<Embedding, WitnessError> {
    let n = w.n;
    let prec = opts.precision;
    let mut coords: Vec<Option<PointN>> = vec![None; w.graph.vertex_count()];
    coords[w.x] = Some(PointN::origin(n, prec));
    let root_len = Ball::exact(w.target_sq.clone(), prec).sqrt()?;
    coords[w.y] = Some(PointN::basis(n, 0, prec).scale(&root_len));
    embed_node(&w.plan, n, &mut coords)?;
    let points: Vec<PointN> = coords
        .into_iter()
        .enumerate()
        .map(|(v, p)| p.ok_or(GeometryError::MissingCoordinates(v)))
        .collect::<Result<_, _>>()?;
    let report = verify_embedding(&w.graph, &points, opts.tol)?;
    let measured = points[w.x].sq_dist(&points[w.y]);
    let root_dev = ((measured.mid() - &w.target_sq).abs() + measured.rad()).to_f64().unwrap_or(f64::INFINITY);
    let scale = w.target_sq.to_f64().unwrap_or(1.0).max(1.0);
    Ok(Embedding {
        precision: prec,
        tol: opts.tol,
        root_sq: measured.to_f64(),
        root_ok: root_dev <= opts.tol * scale,
        points,
        report,
    })
}

fn embed_node(rec: &PlanRecord, n: usize, coords: &mut [Option<PointN>]) -> Result<(), WitnessError> {
    let Some(spec) = rec.config(n) else {
        return Ok(());
    };
    let roles = rec.roles().ok_or_else(|| WitnessError::Malformed("lemma node without roles".into()))?;
    let get = |coords: &[Option<PointN>], v: VertexId| {
        coords[v].clone().ok_or(WitnessError::Geometry(GeometryError::MissingCoordinates(v)))
    };
    let x = get(coords, roles.x)?;
    let y = get(coords, roles.y)?;
    let edge_sq = spec.simplex_edge_sq();
    let p = bipyramid_simplex(&x, &y, &edge_sq, &spec.d_sq)?;
    let yt = place_third(&x, &y, &rec.target_sq, &spec.bridge_sq())?;
    let pt = bipyramid_simplex(&x, &yt, &edge_sq, &spec.d_sq)?;
    coords[roles.yt] = Some(yt);
    for (v, pos) in roles.p.iter().zip(p).chain(roles.pt.iter().zip(pt)) {
        coords[*v] = Some(pos);
    }
    for c in &rec.children {
        embed_node(c, n, coords)?;
    }
    Ok(())
}

/// Summary stored next to exported coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub tol: f64,
    pub edges_checked: usize,
    pub violations: usize,
    pub max_relative_error: f64,
    pub root_sq: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingJson {
    #[serde(flatten)]
    pub coordinates: CoordinateDump,
    pub verification: EmbeddingSummary,
}

/// Witness file layout: the graph JSON plus designated pair, plan and
/// optional embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub schema: String,
    pub k: u64,
    pub l: u64,
    pub sharing: Sharing,
    pub x: VertexId,
    pub y: VertexId,
    #[serde(with = "serde_string")]
    pub target_sq: Rational,
    #[serde(flatten)]
    pub graph: GraphJson,
    pub plan: PlanRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingJson>,
}

impl WitnessSet {
    pub fn to_json(&self) -> WitnessJson {
        WitnessJson {
            schema: WITNESS_SCHEMA.into(),
            k: self.k,
            l: self.l,
            sharing: self.sharing,
            x: self.x,
            y: self.y,
            target_sq: self.target_sq.clone(),
            graph: self.graph.to_json(),
            plan: self.plan.clone(),
            embedding: self.embedding.as_ref().map(|e| EmbeddingJson {
                coordinates: CoordinateDump::new(&e.points, e.precision),
                verification: EmbeddingSummary {
                    tol: e.tol,
                    edges_checked: e.report.edges_checked,
                    violations: e.report.violations.len(),
                    max_relative_error: e.report.max_relative_error,
                    root_sq: e.root_sq,
                    passed: e.passed(),
                },
            }),
        }
    }

    /// Deterministic pretty-printed JSON.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("witness serializes");
        s.push('\n');
        s
    }

    /// Reads a witness file. Embedded coordinates are loaded but not
    /// re-verified; see [`reverify_embedding`].
    pub fn from_json(json: &WitnessJson) -> Result<Self, WitnessError> {
        if json.schema != WITNESS_SCHEMA {
            return Err(WitnessError::Malformed(format!("unknown schema {:?}", json.schema)));
        }
        let graph = DistGraph::from_json(&json.graph)?;
        let count = graph.vertex_count();
        let mut bad = None;
        json.plan.walk(&mut |r| {
            let ids = [r.x, r.y].into_iter().chain(r.yt).chain(r.p.iter().copied()).chain(r.pt.iter().copied());
            if let Some(v) = ids.into_iter().find(|&v| v >= count) {
                bad.get_or_insert(v);
            }
        });
        if let Some(v) = bad {
            return Err(WitnessError::Malformed(format!("plan refers to vertex {v}, graph has {count}")));
        }
        if json.x >= count || json.y >= count || json.x == json.y {
            return Err(WitnessError::Malformed("designated pair out of range".into()));
        }
        let embedding = match &json.embedding {
            None => None,
            Some(e) => {
                let points = e.coordinates.to_points()?;
                let report = verify_embedding(&graph, &points, e.verification.tol)?;
                Some(Embedding {
                    precision: e.coordinates.precision,
                    tol: e.verification.tol,
                    root_sq: e.verification.root_sq,
                    root_ok: e.verification.passed,
                    points,
                    report,
                })
            }
        };
        Ok(Self {
            n: graph.ambient(),
            k: json.k,
            l: json.l,
            sharing: json.sharing,
            x: json.x,
            y: json.y,
            target_sq: json.target_sq.clone(),
            graph,
            plan: json.plan.clone(),
            embedding,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self, WitnessError> {
        let json: WitnessJson = serde_json::from_str(s).map_err(|e| WitnessError::Malformed(e.to_string()))?;
        Self::from_json(&json)
    }

    /// Number of edges per distinct label (all `1` for generated witnesses).
    pub fn label_histogram(&self) -> BTreeMap<Rational, usize> {
        let mut h = BTreeMap::new();
        for (_, _, sq) in self.graph.edges() {
            *h.entry(sq.clone()).or_insert(0) += 1;
        }
        h
    }
}

/// Re-runs the edge check on stored coordinates at a new tolerance and
/// re-measures the designated pair.
pub fn reverify_embedding(w: &WitnessSet, tol: f64) -> Result<Embedding, WitnessError> {
    let e = w
        .embedding
        .as_ref()
        .ok_or_else(|| WitnessError::Malformed("witness has no embedding".into()))?;
    let report = verify_embedding(&w.graph, &e.points, tol)?;
    let measured = e.points[w.x].sq_dist(&e.points[w.y]);
    let root_dev = ((measured.mid() - &w.target_sq).abs() + measured.rad()).to_f64().unwrap_or(f64::INFINITY);
    let scale = w.target_sq.to_f64().unwrap_or(1.0).max(1.0);
    Ok(Embedding {
        precision: e.precision,
        tol,
        points: e.points.clone(),
        report,
        root_sq: measured.to_f64(),
        root_ok: root_dev <= tol * scale && measured.mid().is_positive(),
    })
}

/// Copy of `w` with the root's primitive `y`-`y~` edge removed; the
/// remaining construction no longer rules out `phi(x, y) = 0`.
pub fn without_bridge(w: &WitnessSet) -> Result<WitnessSet, WitnessError> {
    let yt = w.plan.yt.ok_or_else(|| WitnessError::Malformed("root plan has no bridge".into()))?;
    let mut out = w.clone();
    if out.graph.remove_edge(w.plan.y, yt).is_none() {
        return Err(WitnessError::Malformed("the root bridge is not a primitive edge".into()));
    }
    out.embedding = None;
    Ok(out)
}

/// Orders two ladder values exactly.
pub fn cmp_sq(a: &RadicalScaled, b: &RadicalScaled) -> Ordering {
    a.value_sq().cmp(&b.value_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    /// Independent oracle: increment k until the squared window holds.
    fn k_scan(n: usize) -> u64 {
        let mut k = 0;
        loop {
            let v = ratio(4, (n * n) as i64) * pow_u(&lift_factor_sq(n), k);
            if v >= ratio(1, 4) && v < rat(1) {
                return k;
            }
            k += 1;
        }
    }

    #[test]
    fn k_of_n_spot_values() {
        assert_eq!(k_of_n(3), 0);
        assert_eq!(k_of_n(4), 0);
        assert_eq!(k_of_n(5), 1);
        assert_eq!(rho(5).value_sq(), ratio(48, 125));
        assert_eq!(rho(3).value_sq(), ratio(4, 9));
        assert_eq!(rho(4).value_sq(), ratio(1, 4));
    }

    #[test]
    fn k_of_n_matches_scan_and_rho_in_window() {
        for n in 3..=50 {
            assert_eq!(k_of_n(n), k_scan(n), "n = {n}");
            let r = rho(n).value_sq();
            assert!(r >= ratio(1, 4) && r < rat(1), "n = {n}");
        }
    }

    #[test]
    fn schedule_shapes() {
        let s = schedule(3, 0, 0).unwrap();
        assert_eq!(s.node(s.root()).step, Step::Base);
        let s = schedule(3, 1, 0).unwrap();
        assert!(matches!(s.node(s.root()).step, Step::Lemma1 { d } if s.node(d).step == Step::Base));
        let s = schedule(3, 0, 1).unwrap();
        let Step::Lemma2 { d, eps } = s.node(s.root()).step else { panic!("expected lemma2") };
        assert_eq!(s.node(d).step, Step::Base);
        // eps = 1 satisfies 1/2 <= 2/3 != 1.
        assert_eq!(s.node(eps).step, Step::Base);
        let simplex_child = s.child_for(s.root(), EdgeKind::Simplex);
        assert!(matches!(s.node(simplex_child).step, Step::Lemma1 { .. }));
    }

    #[test]
    fn schedule_terminates_where_rho_needs_lifts() {
        // n = 5 has k(5) = 1, so the ladder interleaves Lemma 1 steps.
        for (k, l) in [(0, 1), (0, 3), (2, 2)] {
            let s = schedule(5, k, l).unwrap();
            assert_eq!(s.node(s.root()).value, RadicalScaled::new(5, k, l));
            for i in 0..s.len() {
                if let Some(spec) = s.config(i) {
                    spec.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn generated_counts() {
        let w = generate(3, 0, 0, GenerateOptions::default()).unwrap();
        assert_eq!((w.graph.vertex_count(), w.graph.edge_count()), (2, 1));
        assert_eq!(w.target_sq, rat(1));
        let w = generate(3, 1, 0, GenerateOptions::default()).unwrap();
        assert_eq!((w.graph.vertex_count(), w.graph.edge_count()), (9, 19));
        assert_eq!(w.target_sq, ratio(8, 3));
        let w = generate(3, 0, 1, GenerateOptions::default()).unwrap();
        assert_eq!(w.graph.vertex_count(), 51);
        assert_eq!(w.target_sq, ratio(4, 9));
        for (k, l, want) in [(0, 0, 2u32), (1, 0, 9), (0, 1, 51)] {
            assert_eq!(count_points(3, k, l, Sharing::Endpoints).unwrap(), BigUint::from(want));
        }
    }

    #[test]
    fn count_matches_generated_and_is_monotone() {
        for n in [3, 4] {
            for k in 0..=2 {
                for l in 0..=2 {
                    if k + l > 3 {
                        continue;
                    }
                    let c = count_points(n, k, l, Sharing::Endpoints).unwrap();
                    if k + l <= 2 {
                        let w = generate(n, k, l, GenerateOptions::default()).unwrap();
                        assert_eq!(c, BigUint::from(w.graph.vertex_count()));
                    }
                    assert!(count_points(n, k + 1, l, Sharing::Endpoints).unwrap() >= c);
                    assert!(count_points(n, k, l + 1, Sharing::Endpoints).unwrap() >= c);
                    assert_eq!(count_points(n, k, l, Sharing::Memo).unwrap(), c);
                }
            }
        }
    }

    #[test]
    fn primitive_edges_are_unit() {
        for (n, k, l) in [(3, 1, 1), (4, 0, 2), (5, 0, 1)] {
            let w = generate(n, k, l, GenerateOptions::default()).unwrap();
            assert_eq!(w.label_histogram().keys().collect::<Vec<_>>(), vec![&rat(1)]);
            assert_eq!(w.target_sq, RadicalScaled::new(n, k, l).value_sq());
            assert_eq!(w.plan.target_sq, w.target_sq);
            assert_eq!(w.graph.target(w.x, w.y), Some(&w.target_sq));
        }
    }

    #[test]
    fn plan_leaves_are_unit_bases() {
        let w = generate(4, 1, 1, GenerateOptions::default()).unwrap();
        w.plan.walk(&mut |r| {
            if r.kind == PlanKind::Base {
                assert_eq!(r.target_sq, rat(1));
                assert_eq!(w.graph.edge(r.x, r.y), Some(&rat(1)));
            }
        });
    }

    #[test]
    fn n2_requires_flag() {
        assert!(matches!(generate(2, 1, 0, GenerateOptions::default()), Err(WitnessError::DimensionTooSmall(2))));
        let opts = GenerateOptions { allow_plane: true, ..Default::default() };
        let w = generate(2, 1, 0, opts).unwrap();
        assert_eq!(w.target_sq, rat(3));
        assert!(generate(2, 0, 1, opts).is_err());
    }

    #[test]
    fn embedding_passes_small_cases() {
        let opts = GenerateOptions { embed: Some(EmbedOptions::default()), ..Default::default() };
        for (k, l) in [(0, 0), (1, 0), (0, 1)] {
            let w = generate(3, k, l, opts).unwrap();
            let e = w.embedding.as_ref().unwrap();
            assert!(e.passed(), "({k},{l}): {:?}", e.report.violations.first());
        }
    }

    #[test]
    fn json_round_trip() {
        let opts = GenerateOptions { embed: Some(EmbedOptions::default()), ..Default::default() };
        let w = generate(3, 1, 0, opts).unwrap();
        let text = w.to_json_string();
        let back = WitnessSet::from_json_str(&text).unwrap();
        assert_eq!(back.graph, w.graph);
        assert_eq!(back.plan, w.plan);
        assert!(reverify_embedding(&back, 1e-9).unwrap().passed());
        let strip = |mut j: WitnessJson| {
            j.embedding = None;
            j
        };
        assert_eq!(strip(back.to_json()), strip(w.to_json()));
        assert_eq!(generate(3, 1, 0, opts).unwrap().to_json_string(), text);
    }

    #[test]
    fn ordering_of_values() {
        assert_eq!(cmp_sq(&RadicalScaled::new(4, 1, 1), &RadicalScaled::one(4)), Ordering::Less);
    }
}
