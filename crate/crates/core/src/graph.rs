//! Squared-distance graphs, the bipyramid configurations and their unions.

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::cm::{shrink_factor_sq, LemmaVariant};
use crate::exact::{rational::serde_string, Rational};

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {0} does not exist")]
    MissingVertex(VertexId),
    #[error("edge ({u}, {v}) has non-positive squared distance {sq}")]
    NonPositive { u: VertexId, v: VertexId, sq: Rational },
    #[error("pair ({u}, {v}) labelled both {a} and {b}")]
    Conflict { u: VertexId, v: VertexId, a: Rational, b: Rational },
    #[error("parts live in different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("gluing refers to part {part}, vertex {vertex}, which does not exist")]
    BadGluing { part: usize, vertex: VertexId },
    #[error("invalid configuration: {0}")]
    InvalidSpec(String),
    #[error("malformed graph JSON: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    (u.min(v), u.max(v))
}

/// Vertices with dense ids `0..len`, positive squared-distance edges, and
/// target markers (pairs whose squared distance must be forced, not assumed).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DistGraph {
    n: usize,
    vertices: Vec<Vertex>,
    edges: BTreeMap<(VertexId, VertexId), Rational>,
    targets: BTreeMap<(VertexId, VertexId), Rational>,
}

impl DistGraph {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn add_vertex(&mut self, label: Option<String>) -> VertexId {
        let id = self.vertices.len();
        self.vertices.push(Vertex { id, label });
        id
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.vertices.get(v).and_then(|v| v.label.as_deref())
    }

    pub fn find_label(&self, label: &str) -> Option<VertexId> {
        self.vertices.iter().find(|v| v.label.as_deref() == Some(label)).map(|v| v.id)
    }

    fn check_pair(&self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for w in [u, v] {
            if w >= self.vertices.len() {
                return Err(GraphError::MissingVertex(w));
            }
        }
        Ok(())
    }

    /// Adds an edge; re-adding the same label is a no-op, a different label
    /// is a conflict.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, sq: Rational) -> Result<(), GraphError> {
        self.check_pair(u, v)?;
        if !sq.is_positive() {
            return Err(GraphError::NonPositive { u, v, sq });
        }
        insert_label(&mut self.edges, u, v, sq)
    }

    pub fn add_target(&mut self, u: VertexId, v: VertexId, sq: Rational) -> Result<(), GraphError> {
        self.check_pair(u, v)?;
        if !sq.is_positive() {
            return Err(GraphError::NonPositive { u, v, sq });
        }
        insert_label(&mut self.targets, u, v, sq)
    }

    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> Option<Rational> {
        self.edges.remove(&key(u, v))
    }

    pub fn clear_edges(&mut self) {
        self.edges.clear();
    }

    pub fn clear_targets(&mut self) {
        self.targets.clear();
    }

    pub fn edge(&self, u: VertexId, v: VertexId) -> Option<&Rational> {
        self.edges.get(&key(u, v))
    }

    pub fn target(&self, u: VertexId, v: VertexId) -> Option<&Rational> {
        self.targets.get(&key(u, v))
    }

    /// Edges as `(u, v, sq)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, &Rational)> {
        self.edges.iter().map(|(&(u, v), sq)| (u, v, sq))
    }

    pub fn targets(&self) -> impl Iterator<Item = (VertexId, VertexId, &Rational)> {
        self.targets.iter().map(|(&(u, v), sq)| (u, v, sq))
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            vertices: self.vertices.clone(),
            edges: self.edges().map(|(u, v, sq)| PairJson { u, v, sq: sq.clone() }).collect(),
            targets: self.targets().map(|(u, v, sq)| PairJson { u, v, sq: sq.clone() }).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        let mut g = DistGraph::new(json.n);
        for (i, v) in json.vertices.iter().enumerate() {
            if v.id != i {
                return Err(GraphError::Malformed(format!("vertex ids must be dense; found {} at position {i}", v.id)));
            }
            g.add_vertex(v.label.clone());
        }
        for e in &json.edges {
            g.add_edge(e.u, e.v, e.sq.clone())?;
        }
        for t in &json.targets {
            g.add_target(t.u, t.v, t.sq.clone())?;
        }
        Ok(g)
    }
}

fn insert_label(
    map: &mut BTreeMap<(VertexId, VertexId), Rational>,
    u: VertexId,
    v: VertexId,
    sq: Rational,
) -> Result<(), GraphError> {
    let k = key(u, v);
    match map.get(&k) {
        Some(existing) if *existing != sq => {
            Err(GraphError::Conflict { u: k.0, v: k.1, a: existing.clone(), b: sq })
        }
        Some(_) => Ok(()),
        None => {
            map.insert(k, sq);
            Ok(())
        }
    }
}

/// `{"u": int, "v": int, "sq": "p/q"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairJson {
    pub u: VertexId,
    pub v: VertexId,
    #[serde(with = "serde_string")]
    pub sq: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<PairJson>,
    pub targets: Vec<PairJson>,
}

/// Parameters of one bipyramid configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigSpec {
    pub variant: LemmaVariant,
    pub n: usize,
    pub d_sq: Rational,
    /// Squared length of the `y`–`ỹ` bridge; Lemma2 only.
    pub eps_sq: Option<Rational>,
}

impl ConfigSpec {
    pub fn lemma1(n: usize, d_sq: Rational) -> Self {
        Self { variant: LemmaVariant::Lemma1, n, d_sq, eps_sq: None }
    }

    pub fn lemma2(n: usize, d_sq: Rational, eps_sq: Rational) -> Self {
        Self { variant: LemmaVariant::Lemma2, n, d_sq, eps_sq: Some(eps_sq) }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidSpec(msg));
        if self.n < self.variant.min_dimension() {
            return bad(format!("{} needs n >= {}, got {}", self.variant, self.variant.min_dimension(), self.n));
        }
        if !self.d_sq.is_positive() {
            return bad(format!("d^2 must be positive, got {}", self.d_sq));
        }
        match (self.variant, &self.eps_sq) {
            (LemmaVariant::Lemma1, None) => Ok(()),
            (LemmaVariant::Lemma1, Some(_)) => bad("lemma1 takes no eps".into()),
            (LemmaVariant::Lemma2, None) => bad("lemma2 needs eps".into()),
            (LemmaVariant::Lemma2, Some(eps_sq)) => {
                let shrunk = shrink_factor_sq(self.n) * &self.d_sq;
                if !eps_sq.is_positive() {
                    bad(format!("eps^2 must be positive, got {eps_sq}"))
                } else if eps_sq / Rational::from_integer(4.into()) > shrunk {
                    bad(format!("eps^2/4 = {} exceeds (4/n^2) d^2 = {shrunk}", eps_sq / Rational::from_integer(4.into())))
                } else if *eps_sq == shrunk {
                    bad(format!("eps^2 must differ from (4/n^2) d^2 = {shrunk}"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn simplex_edge_sq(&self) -> Rational {
        self.variant.simplex_edge_sq(self.n, &self.d_sq)
    }

    pub fn target_sq(&self) -> Rational {
        self.variant.target_sq(self.n, &self.d_sq)
    }

    /// Squared length of the `y`–`ỹ` edge.
    pub fn bridge_sq(&self) -> Rational {
        match self.variant {
            LemmaVariant::Lemma1 => self.d_sq.clone(),
            LemmaVariant::Lemma2 => self.eps_sq.clone().expect("validated lemma2 spec"),
        }
    }
}

/// Vertex ids of the roles in a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigRoles {
    pub x: VertexId,
    pub y: VertexId,
    pub yt: VertexId,
    pub p: Vec<VertexId>,
    pub pt: Vec<VertexId>,
}

impl ConfigRoles {
    /// The ids used by [`build_config`]: `x, y, ỹ, p_1..p_n, p̃_1..p̃_n`.
    pub fn canonical(n: usize) -> Self {
        Self { x: 0, y: 1, yt: 2, p: (3..3 + n).collect(), pt: (3 + n..3 + 2 * n).collect() }
    }

    pub fn map(&self, f: impl Fn(VertexId) -> VertexId) -> Self {
        Self {
            x: f(self.x),
            y: f(self.y),
            yt: f(self.yt),
            p: self.p.iter().map(|&v| f(v)).collect(),
            pt: self.pt.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Which length class an edge of a configuration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Apex to simplex vertex, length `d`.
    Arm,
    /// Between simplex vertices.
    Simplex,
    /// The `y`–`ỹ` edge.
    Bridge,
}

/// Edges of a configuration in canonical order: `x–p_i`, `y–p_i`,
/// `p_i–p_j`, `x–p̃_i`, `ỹ–p̃_i`, `p̃_i–p̃_j`, `y–ỹ`.
pub fn config_edges(roles: &ConfigRoles) -> Vec<(VertexId, VertexId, EdgeKind)> {
    let n = roles.p.len();
    let mut out = Vec::with_capacity(4 * n + n * (n - 1) + 1);
    for (apex_a, apex_b, simplex) in [(roles.x, roles.y, &roles.p), (roles.x, roles.yt, &roles.pt)] {
        out.extend(simplex.iter().map(|&p| (apex_a, p, EdgeKind::Arm)));
        out.extend(simplex.iter().map(|&p| (apex_b, p, EdgeKind::Arm)));
        for i in 0..n {
            for j in i + 1..n {
                out.push((simplex[i], simplex[j], EdgeKind::Simplex));
            }
        }
    }
    out.push((roles.y, roles.yt, EdgeKind::Bridge));
    out
}

/// The labelled configuration graph of one lemma application. The pairs
/// `x–y` and `x–ỹ` are target markers, not edges.
pub fn build_config(spec: &ConfigSpec) -> Result<DistGraph, GraphError> {
    spec.validate()?;
    let n = spec.n;
    let mut g = DistGraph::new(n);
    for label in ["x", "y", "y~"] {
        g.add_vertex(Some(label.into()));
    }
    for i in 1..=n {
        g.add_vertex(Some(format!("p{i}")));
    }
    for i in 1..=n {
        g.add_vertex(Some(format!("p~{i}")));
    }
    let roles = ConfigRoles::canonical(n);
    let simplex = spec.simplex_edge_sq();
    let bridge = spec.bridge_sq();
    for (u, v, kind) in config_edges(&roles) {
        let sq = match kind {
            EdgeKind::Arm => spec.d_sq.clone(),
            EdgeKind::Simplex => simplex.clone(),
            EdgeKind::Bridge => bridge.clone(),
        };
        g.add_edge(u, v, sq)?;
    }
    let target = spec.target_sq();
    g.add_target(roles.x, roles.y, target.clone())?;
    g.add_target(roles.x, roles.yt, target)?;
    Ok(g)
}

/// Result of [`graph_union`]: the merged graph and, per part, the new id of
/// each old vertex.
#[derive(Debug, Clone)]
pub struct Union {
    pub graph: DistGraph,
    pub maps: Vec<Vec<VertexId>>,
}

/// Identifies `(part, vertex)` pairs per `gluing` and merges all parts.
/// New ids follow first appearance in part order. Conflicting labels on a
/// glued pair are an error.
pub fn graph_union(parts: &[&DistGraph], gluing: &[((usize, VertexId), (usize, VertexId))]) -> Result<Union, GraphError> {
    let Some(first) = parts.first() else {
        return Ok(Union { graph: DistGraph::new(0), maps: Vec::new() });
    };
    let n = first.ambient();
    if let Some(p) = parts.iter().find(|p| p.ambient() != n) {
        return Err(GraphError::DimensionMismatch(n, p.ambient()));
    }
    let offsets: Vec<usize> = parts
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.vertex_count();
            Some(o)
        })
        .collect();
    let total: usize = parts.iter().map(|p| p.vertex_count()).sum();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for &(a, b) in gluing {
        let flat = |(part, vertex): (usize, VertexId)| -> Result<usize, GraphError> {
            match parts.get(part) {
                Some(p) if vertex < p.vertex_count() => Ok(offsets[part] + vertex),
                _ => Err(GraphError::BadGluing { part, vertex }),
            }
        };
        let (ra, rb) = (flat(a)?, flat(b)?);
        let (ra, rb) = (find(&mut parent, ra), find(&mut parent, rb));
        // Keep the earlier vertex as representative so ids follow first appearance.
        if ra < rb {
            parent[rb] = ra;
        } else {
            parent[ra] = rb;
        }
    }

    let mut graph = DistGraph::new(n);
    let mut new_id = vec![usize::MAX; total];
    let mut maps = Vec::with_capacity(parts.len());
    for (pi, part) in parts.iter().enumerate() {
        let mut map = Vec::with_capacity(part.vertex_count());
        for v in part.vertices() {
            let root = find(&mut parent, offsets[pi] + v.id);
            if new_id[root] == usize::MAX {
                new_id[root] = graph.add_vertex(v.label.clone());
            } else if graph.vertices[new_id[root]].label.is_none() {
                graph.vertices[new_id[root]].label = v.label.clone();
            }
            map.push(new_id[root]);
        }
        maps.push(map);
    }
    for (part, map) in parts.iter().zip(&maps) {
        for (u, v, sq) in part.edges() {
            let (a, b) = (map[u], map[v]);
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            insert_label(&mut graph.edges, a, b, sq.clone())?;
        }
        for (u, v, sq) in part.targets() {
            let (a, b) = (map[u], map[v]);
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            insert_label(&mut graph.targets, a, b, sq.clone())?;
        }
    }
    Ok(Union { graph, maps })
}
