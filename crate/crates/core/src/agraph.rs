//! Graphs whose oriented edges are labeled by letters of `X^{±1}`.
//!
//! Every topological edge is stored as two oriented edges that point at each
//! other through `inv`. Labels are involution-compatible: the reverse of an
//! edge labeled `x` is labeled `x^-1`. A graph may carry a base vertex; for
//! based graphs [`AGraph::core`] keeps the base even when it has degree one.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{FreeWord, Letter, Rank};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph is contractible and has no base vertex")]
    Contractible,
    #[error("graph has no vertex of degree >= 3")]
    NoNaturalVertex,
    #[error("graph is not connected")]
    Disconnected,
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(VertexId),
    #[error("edge {0} is not in the graph")]
    UnknownEdge(EdgeId),
    #[error("first Betti number is {found}, expected {expected}")]
    BettiMismatch { found: usize, expected: usize },
    #[error("vertex {0} has degree at most one; graph is not a core")]
    NotCore(VertexId),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("malformed graph json: {0}")]
    Json(String),
}

/// One oriented edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub inv: EdgeId,
    pub from: VertexId,
    pub to: VertexId,
    pub label: Letter,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "GraphData", into = "GraphData")]
pub struct AGraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, Edge>,
    base: Option<VertexId>,
}

#[derive(Serialize, Deserialize)]
struct GraphData {
    vertices: Vec<VertexId>,
    edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<VertexId>,
}

impl From<GraphData> for AGraph {
    fn from(d: GraphData) -> Self {
        AGraph {
            vertices: d.vertices.into_iter().collect(),
            edges: d.edges.into_iter().map(|e| (e.id, e)).collect(),
            base: d.base,
        }
    }
}

impl From<AGraph> for GraphData {
    fn from(g: AGraph) -> Self {
        GraphData {
            vertices: g.vertices.into_iter().collect(),
            edges: g.edges.into_values().collect(),
            base: g.base,
        }
    }
}

/// A failed structural check reported by [`AGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    MissingInverse { edge: EdgeId },
    InverseMismatch { edge: EdgeId },
    SelfInverse { edge: EdgeId },
    EndpointMismatch { edge: EdgeId },
    LabelMismatch { edge: EdgeId },
    UnknownEndpoint { edge: EdgeId, vertex: VertexId },
    LabelOutOfRange { edge: EdgeId },
    UnknownBase { vertex: VertexId },
    Empty,
    Disconnected,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingInverse { edge } => write!(f, "edge {edge}: inverse edge missing"),
            Violation::InverseMismatch { edge } => write!(f, "edge {edge}: inv(inv(e)) != e"),
            Violation::SelfInverse { edge } => write!(f, "edge {edge}: edge is its own inverse"),
            Violation::EndpointMismatch { edge } => {
                write!(f, "edge {edge}: o(e^-1) != t(e) or t(e^-1) != o(e)")
            }
            Violation::LabelMismatch { edge } => {
                write!(f, "edge {edge}: label(e^-1) != label(e)^-1")
            }
            Violation::UnknownEndpoint { edge, vertex } => {
                write!(f, "edge {edge}: endpoint {vertex} is not a vertex")
            }
            Violation::LabelOutOfRange { edge } => {
                write!(f, "edge {edge}: label outside the rank bound")
            }
            Violation::UnknownBase { vertex } => write!(f, "base {vertex} is not a vertex"),
            Violation::Empty => write!(f, "graph has no vertices"),
            Violation::Disconnected => write!(f, "graph is not connected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Why a graph is not foldable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FoldabilityViolation {
    /// A degree-two vertex whose two outgoing edges carry the same label.
    DegreeTwoRepeat { vertex: VertexId },
    /// A natural vertex with fewer than three distinct outgoing labels.
    TooFewLabels { vertex: VertexId, distinct: usize },
    /// Degree at most one: the graph is not its own core.
    NotCore { vertex: VertexId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldabilityReport {
    pub violations: Vec<FoldabilityViolation>,
}

impl FoldabilityReport {
    pub fn is_foldable(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A natural edge: a maximal edge path whose interior vertices have degree two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NaturalEdge {
    pub edges: Vec<EdgeId>,
    pub from: VertexId,
    pub to: VertexId,
}

/// A maximal tree, stored as the set of its oriented edges (closed under inversion).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanningTree {
    pub root: VertexId,
    pub edges: BTreeSet<EdgeId>,
    /// For each non-root vertex, the tree edge pointing from its parent to it.
    pub parent: BTreeMap<VertexId, EdgeId>,
}

impl SpanningTree {
    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }
}

/// Tree-path labels from the root: `root_label[v]` reads the tree path root -> v.
fn tree_labels(g: &AGraph, t: &SpanningTree) -> BTreeMap<VertexId, FreeWord> {
    let mut out = BTreeMap::new();
    out.insert(t.root, FreeWord::identity());
    let mut queue = VecDeque::from([t.root]);
    let children = {
        let mut c: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
        for &e in t.parent.values() {
            c.entry(g.edges[&e].from).or_default().push(e);
        }
        c
    };
    while let Some(v) = queue.pop_front() {
        for &e in children.get(&v).into_iter().flatten() {
            let edge = &g.edges[&e];
            let w = out[&v].concat(&FreeWord::from_letter(edge.label));
            out.insert(edge.to, w);
            queue.push_back(edge.to);
        }
    }
    out
}

/// Builder that allocates edge ids in inverse pairs `2k, 2k + 1`.
#[derive(Debug, Default, Clone)]
pub struct AGraphBuilder {
    graph: AGraph,
    next_edge: EdgeId,
}

impl AGraphBuilder {
    pub fn vertex(&mut self, v: VertexId) -> &mut Self {
        self.graph.vertices.insert(v);
        self
    }

    /// Adds the pair `from -label-> to` and its reverse; returns the forward id.
    pub fn edge(&mut self, from: VertexId, to: VertexId, label: Letter) -> EdgeId {
        self.graph.vertices.insert(from);
        self.graph.vertices.insert(to);
        let id = self.next_edge;
        self.next_edge += 2;
        self.graph.edges.insert(
            id,
            Edge {
                id,
                inv: id + 1,
                from,
                to,
                label,
            },
        );
        self.graph.edges.insert(
            id + 1,
            Edge {
                id: id + 1,
                inv: id,
                from: to,
                to: from,
                label: label.inv(),
            },
        );
        id
    }

    pub fn base(&mut self, v: VertexId) -> &mut Self {
        self.graph.vertices.insert(v);
        self.graph.base = Some(v);
        self
    }

    pub fn build(&self) -> AGraph {
        self.graph.clone()
    }
}

impl AGraph {
    pub fn builder() -> AGraphBuilder {
        AGraphBuilder::default()
    }

    /// The rose `R_X`: one vertex `0` (the base) with one loop per generator.
    pub fn rose(rank: Rank) -> AGraph {
        let mut b = AGraph::builder();
        b.base(0);
        for i in 1..=rank.get() {
            b.edge(0, 0, Letter::generator(i));
        }
        b.build()
    }

    /// Raw constructor; call [`AGraph::validate`] before trusting the result.
    pub fn from_parts(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = Edge>,
        base: Option<VertexId>,
    ) -> AGraph {
        AGraph {
            vertices: vertices.into_iter().collect(),
            edges: edges.into_iter().map(|e| (e.id, e)).collect(),
            base,
        }
    }

    /// Parses the JSON form and rejects graphs that fail validation.
    pub fn from_json(text: &str, rank: Rank) -> Result<AGraph, GraphError> {
        let g: AGraph = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        let v = g.validate(Some(rank));
        if !v.is_valid() {
            let msg = v
                .violations
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(GraphError::Invalid(msg));
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn base(&self) -> Option<VertexId> {
        self.base
    }

    pub fn with_base(&self, base: Option<VertexId>) -> AGraph {
        AGraph {
            base,
            ..self.clone()
        }
    }

    pub fn topological_edge_count(&self) -> usize {
        self.edges.len() / 2
    }

    /// Oriented edges starting at `v`, in edge-id order.
    pub fn outgoing(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(move |e| e.from == v)
    }

    /// Number of oriented edges starting at `v`; a loop contributes two.
    pub fn degree(&self, v: VertexId) -> usize {
        self.outgoing(v).count()
    }

    pub(crate) fn outgoing_map(&self) -> BTreeMap<VertexId, Vec<EdgeId>> {
        let mut m: BTreeMap<VertexId, Vec<EdgeId>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for e in self.edges.values() {
            m.entry(e.from).or_default().push(e.id);
        }
        m
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.iter().next() else {
            return false;
        };
        let out = self.outgoing_map();
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for e in &out[&v] {
                let t = self.edges[e].to;
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// First Betti number of a connected graph.
    pub fn betti_number(&self) -> usize {
        (self.topological_edge_count() + 1).saturating_sub(self.vertices.len())
    }

    /// Checks every structural invariant; `rank` additionally bounds the labels.
    pub fn validate(&self, rank: Option<Rank>) -> Validation {
        let mut violations = Vec::new();
        if self.vertices.is_empty() {
            violations.push(Violation::Empty);
        }
        for e in self.edges.values() {
            for v in [e.from, e.to] {
                if !self.vertices.contains(&v) {
                    violations.push(Violation::UnknownEndpoint {
                        edge: e.id,
                        vertex: v,
                    });
                }
            }
            if let Some(r) = rank {
                if e.label.index() > r.get() {
                    violations.push(Violation::LabelOutOfRange { edge: e.id });
                }
            }
            if e.inv == e.id {
                violations.push(Violation::SelfInverse { edge: e.id });
                continue;
            }
            let Some(inv) = self.edges.get(&e.inv) else {
                violations.push(Violation::MissingInverse { edge: e.id });
                continue;
            };
            if inv.inv != e.id {
                violations.push(Violation::InverseMismatch { edge: e.id });
            }
            if inv.from != e.to || inv.to != e.from {
                violations.push(Violation::EndpointMismatch { edge: e.id });
            }
            if inv.label != e.label.inv() {
                violations.push(Violation::LabelMismatch { edge: e.id });
            }
        }
        if let Some(b) = self.base {
            if !self.vertices.contains(&b) {
                violations.push(Violation::UnknownBase { vertex: b });
            }
        }
        if violations.is_empty() && !self.vertices.is_empty() && !self.is_connected() {
            violations.push(Violation::Disconnected);
        }
        Validation { violations }
    }

    /// Deletes degree-one vertices until none remain (the base is never deleted).
    pub fn core(&self) -> Result<AGraph, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        if self.base.is_none() && self.betti_number() == 0 {
            return Err(GraphError::Contractible);
        }
        let mut g = self.clone();
        loop {
            let out = g.outgoing_map();
            let leaf = out
                .iter()
                .find(|(&v, es)| Some(v) != g.base && es.len() <= 1 && g.vertices.len() > 1)
                .map(|(&v, es)| (v, es.first().copied()));
            let Some((v, edge)) = leaf else { break };
            if let Some(e) = edge {
                let inv = g.edges[&e].inv;
                g.edges.remove(&e);
                g.edges.remove(&inv);
            }
            g.vertices.remove(&v);
        }
        Ok(g)
    }

    pub fn natural_vertices(&self) -> BTreeSet<VertexId> {
        self.outgoing_map()
            .into_iter()
            .filter(|(_, es)| es.len() >= 3)
            .map(|(v, _)| v)
            .collect()
    }

    /// Follows `start` through degree-two vertices until a vertex of other degree.
    pub(crate) fn trace_natural_edge(
        &self,
        start: EdgeId,
        out: &BTreeMap<VertexId, Vec<EdgeId>>,
    ) -> Vec<EdgeId> {
        let mut path = vec![start];
        let mut cur = start;
        loop {
            let e = &self.edges[&cur];
            let here = &out[&e.to];
            if here.len() != 2 {
                break;
            }
            let Some(&next) = here.iter().find(|&&x| x != e.inv) else {
                break;
            };
            if next == start {
                break;
            }
            path.push(next);
            cur = next;
        }
        path
    }

    /// Partition of the topological edges into natural edges, one orientation each.
    pub fn natural_edges(&self) -> Result<Vec<NaturalEdge>, GraphError> {
        let natural = self.natural_vertices();
        if natural.is_empty() {
            return Err(GraphError::NoNaturalVertex);
        }
        let out = self.outgoing_map();
        let mut used: BTreeSet<EdgeId> = BTreeSet::new();
        let mut result = Vec::new();
        let mut starts: Vec<EdgeId> = natural
            .iter()
            .flat_map(|v| out[v].iter().copied())
            .collect();
        // Dangling chains of a non-core graph start at their leaf.
        starts.extend(
            out.iter()
                .filter(|(_, es)| es.len() == 1)
                .flat_map(|(_, es)| es.iter().copied()),
        );
        for e in starts {
            if used.contains(&e) {
                continue;
            }
            let path = self.trace_natural_edge(e, &out);
            for &x in &path {
                used.insert(x);
                used.insert(self.edges[&x].inv);
            }
            result.push(NaturalEdge {
                from: self.edges[&path[0]].from,
                to: self.edges[path.last().unwrap()].to,
                edges: path,
            });
        }
        Ok(result)
    }

    pub fn label_of_path(&self, path: &[EdgeId]) -> FreeWord {
        FreeWord::from_letters(path.iter().map(|e| self.edges[e].label))
    }

    /// No vertex has two distinct outgoing edges with equal labels.
    pub fn is_folded(&self) -> bool {
        self.fold_site().is_none()
    }

    /// Lowest `(vertex, label)` with a repeated outgoing label, preferring natural
    /// vertices, with the two lowest edge ids carrying it.
    pub(crate) fn fold_site(&self) -> Option<(VertexId, EdgeId, EdgeId)> {
        let out = self.outgoing_map();
        let mut fallback = None;
        for (&v, es) in &out {
            let mut by_label: BTreeMap<Letter, Vec<EdgeId>> = BTreeMap::new();
            for &e in es {
                by_label.entry(self.edges[&e].label).or_default().push(e);
            }
            if let Some(pair) = by_label.values().find(|ids| ids.len() >= 2) {
                let site = (v, pair[0], pair[1]);
                if es.len() >= 3 {
                    return Some(site);
                }
                fallback.get_or_insert(site);
            }
        }
        fallback
    }

    pub fn foldability(&self) -> FoldabilityReport {
        let mut violations = Vec::new();
        for (v, es) in self.outgoing_map() {
            let labels: BTreeSet<Letter> = es.iter().map(|e| self.edges[e].label).collect();
            match es.len() {
                0 | 1 => {
                    if self.vertices.len() > 1 {
                        violations.push(FoldabilityViolation::NotCore { vertex: v })
                    }
                }
                2 => {
                    if labels.len() < 2 {
                        violations.push(FoldabilityViolation::DegreeTwoRepeat { vertex: v })
                    }
                }
                _ => {
                    if labels.len() < 3 {
                        violations.push(FoldabilityViolation::TooFewLabels {
                            vertex: v,
                            distinct: labels.len(),
                        })
                    }
                }
            }
        }
        FoldabilityReport { violations }
    }

    pub fn is_foldable(&self) -> bool {
        self.foldability().is_foldable()
    }

    /// Breadth-first maximal tree from `root`; outgoing edges are explored in
    /// `(label, terminus id, edge id)` order.
    pub fn spanning_tree(&self, root: VertexId) -> Result<SpanningTree, GraphError> {
        if !self.vertices.contains(&root) {
            return Err(GraphError::UnknownVertex(root));
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let out = self.outgoing_map();
        let mut seen = BTreeSet::from([root]);
        let mut tree = SpanningTree {
            root,
            edges: BTreeSet::new(),
            parent: BTreeMap::new(),
        };
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let mut es: Vec<&Edge> = out[&v].iter().map(|e| &self.edges[e]).collect();
            es.sort_by_key(|e| (e.label, e.to, e.id));
            for e in es {
                if seen.insert(e.to) {
                    tree.edges.insert(e.id);
                    tree.edges.insert(e.inv);
                    tree.parent.insert(e.to, e.id);
                    queue.push_back(e.to);
                }
            }
        }
        Ok(tree)
    }

    /// The free basis read off the non-tree edges: for each such edge `e`
    /// (oriented with positive label, ordered by edge id) the label of
    /// `[base, o(e)]_T · e · [t(e), base]_T`.
    pub fn basis_from_tree(
        &self,
        tree: &SpanningTree,
        base: VertexId,
        rank: Rank,
    ) -> Result<Vec<FreeWord>, GraphError> {
        if !self.vertices.contains(&base) {
            return Err(GraphError::UnknownVertex(base));
        }
        let betti = self.betti_number();
        if betti != rank.get() {
            return Err(GraphError::BettiMismatch {
                found: betti,
                expected: rank.get(),
            });
        }
        if tree.parent.len() + 1 != self.vertices.len() {
            return Err(GraphError::Invalid("tree does not span the graph".into()));
        }
        let labels = tree_labels(self, tree);
        let to_base = |v: VertexId| labels[&v].inverse().concat(&labels[&base]);
        let from_base = |v: VertexId| labels[&base].inverse().concat(&labels[&v]);
        Ok(self
            .edges
            .values()
            .filter(|e| !tree.contains(e.id) && e.label.is_positive())
            .map(|e| {
                from_base(e.from)
                    .concat(&FreeWord::from_letter(e.label))
                    .concat(&to_base(e.to))
            })
            .collect())
    }

    /// Erases degree-two vertices, labeling each natural edge by its word.
    pub fn smooth(&self) -> Result<MarkingGraph, GraphError> {
        if let Some((&v, _)) = self
            .outgoing_map()
            .iter()
            .find(|(_, es)| es.len() <= 1 && self.vertices.len() > 1)
        {
            return Err(GraphError::NotCore(v));
        }
        let nat = self.natural_edges()?;
        let vertices: Vec<VertexId> = self.natural_vertices().into_iter().collect();
        let edges = nat
            .iter()
            .enumerate()
            .map(|(id, ne)| MarkingEdge {
                id,
                from: ne.from,
                to: ne.to,
                label: self.label_of_path(&ne.edges),
            })
            .collect();
        Ok(MarkingGraph {
            vertices,
            edges,
            base: self.base.filter(|b| self.degree(*b) >= 3),
        })
    }

    /// Identifies `e1` and `e2` (same origin, same label) in place.
    pub(crate) fn fold_in_place(
        &mut self,
        e1: EdgeId,
        e2: EdgeId,
    ) -> Result<SingleFold, GraphError> {
        let a = self
            .edges
            .get(&e1)
            .ok_or(GraphError::UnknownEdge(e1))?
            .clone();
        let b = self
            .edges
            .get(&e2)
            .ok_or(GraphError::UnknownEdge(e2))?
            .clone();
        if e1 == e2 || a.from != b.from || a.label != b.label {
            return Err(GraphError::Invalid(format!(
                "edges {e1} and {e2} do not form a fold pair"
            )));
        }
        let (kept, removed) = if a.id < b.id { (a, b) } else { (b, a) };
        self.edges.remove(&removed.id);
        self.edges.remove(&removed.inv);
        let merged = if kept.to != removed.to {
            let survivor = kept.to.min(removed.to);
            let gone = kept.to.max(removed.to);
            for e in self.edges.values_mut() {
                if e.from == gone {
                    e.from = survivor;
                }
                if e.to == gone {
                    e.to = survivor;
                }
            }
            self.vertices.remove(&gone);
            if self.base == Some(gone) {
                self.base = Some(survivor);
            }
            Some((gone, survivor))
        } else {
            None
        };
        Ok(SingleFold {
            origin: kept.from,
            kept: kept.id,
            removed: removed.id,
            merged,
        })
    }

    /// Canonical code of a folded graph from a fixed base; `None` if not folded.
    fn canonical_code_from(&self, root: VertexId) -> Option<CanonicalCode> {
        let out = self.outgoing_map();
        let mut index: BTreeMap<VertexId, usize> = BTreeMap::from([(root, 0)]);
        let mut order = vec![root];
        let mut code = Vec::with_capacity(self.edges.len());
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            let mut es: Vec<&Edge> = out[&v].iter().map(|e| &self.edges[e]).collect();
            es.sort_by_key(|e| e.label);
            if es.windows(2).any(|p| p[0].label == p[1].label) {
                return None;
            }
            for e in es {
                let next = index.len();
                let t = *index.entry(e.to).or_insert_with(|| {
                    order.push(e.to);
                    next
                });
                code.push((i, e.label, t));
            }
            i += 1;
        }
        (order.len() == self.vertices.len()).then_some(CanonicalCode {
            vertices: order.len(),
            edges: code,
        })
    }

    /// Isomorphism invariant for folded graphs: based graphs read from the
    /// base, unbased graphs minimize over every choice of base.
    pub fn canonical_form(&self) -> Option<CanonicalCode> {
        match self.base {
            Some(b) => self.canonical_code_from(b),
            None => {
                let mut best: Option<CanonicalCode> = None;
                for &v in &self.vertices {
                    let c = self.canonical_code_from(v)?;
                    if best.as_ref().is_none_or(|b| c < *b) {
                        best = Some(c);
                    }
                }
                best
            }
        }
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {} {{", dot_id(name));
        for &v in &self.vertices {
            if Some(v) == self.base {
                let _ = writeln!(s, "  v{v} [shape=doublecircle];");
            } else {
                let _ = writeln!(s, "  v{v} [shape=point];");
            }
        }
        for e in self.edges.values().filter(|e| e.label.is_positive()) {
            let _ = writeln!(s, "  v{} -- v{} [label=\"{}\"];", e.from, e.to, e.label);
        }
        s.push_str("}\n");
        s
    }
}

fn dot_id(name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if clean.is_empty() {
        "G".into()
    } else {
        clean
    }
}

/// Record of one identification performed by a fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleFold {
    pub origin: VertexId,
    pub kept: EdgeId,
    pub removed: EdgeId,
    /// `(removed vertex, surviving vertex)` when the termini differed.
    pub merged: Option<(VertexId, VertexId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode {
    vertices: usize,
    edges: Vec<(usize, Letter, usize)>,
}

/// Label- and base-preserving isomorphism test.
pub fn labeled_isomorphic(g1: &AGraph, g2: &AGraph) -> bool {
    if g1.base.is_some() != g2.base.is_some()
        || g1.vertices.len() != g2.vertices.len()
        || g1.edges.len() != g2.edges.len()
    {
        return false;
    }
    if let (Some(c1), Some(c2)) = (g1.canonical_form(), g2.canonical_form()) {
        return c1 == c2;
    }
    backtracking_isomorphic(g1, g2)
}

/// Multi-edge counts `(from, to, label) -> count`.
type EdgeCounts = BTreeMap<(VertexId, VertexId, Letter), usize>;

fn edge_counts(g: &AGraph) -> EdgeCounts {
    let mut m = BTreeMap::new();
    for e in g.edges.values() {
        *m.entry((e.from, e.to, e.label)).or_insert(0) += 1;
    }
    m
}

/// Exhaustive vertex-bijection search; used for graphs that are not folded.
pub fn backtracking_isomorphic(g1: &AGraph, g2: &AGraph) -> bool {
    if g1.vertices.len() != g2.vertices.len() || g1.edges.len() != g2.edges.len() {
        return false;
    }
    if g1.vertices.is_empty() {
        return true;
    }
    let mut sig1: Vec<Vec<Letter>> = Vec::new();
    let mut sig2: Vec<Vec<Letter>> = Vec::new();
    for (g, sig) in [(g1, &mut sig1), (g2, &mut sig2)] {
        for v in &g.vertices {
            let mut ls: Vec<Letter> = g.outgoing(*v).map(|e| e.label).collect();
            ls.sort();
            sig.push(ls);
        }
        sig.sort();
    }
    if sig1 != sig2 {
        return false;
    }
    let c1 = edge_counts(g1);
    let c2 = edge_counts(g2);
    let out1 = g1.outgoing_map();
    // BFS order of g1 from its start vertex, with the edge that discovers each vertex.
    let start1 = g1.base.unwrap_or(*g1.vertices.iter().next().unwrap());
    let mut order: Vec<(VertexId, Option<(VertexId, Letter)>)> = vec![(start1, None)];
    let mut seen = BTreeSet::from([start1]);
    let mut i = 0;
    while i < order.len() {
        let v = order[i].0;
        for e in &out1[&v] {
            let e = &g1.edges[e];
            if seen.insert(e.to) {
                order.push((e.to, Some((v, e.label))));
            }
        }
        i += 1;
    }
    if order.len() != g1.vertices.len() {
        return false;
    }
    let starts2: Vec<VertexId> = match g2.base {
        Some(b) => vec![b],
        None => g2.vertices.iter().copied().collect(),
    };
    let count = |c: &EdgeCounts, a, b, l| c.get(&(a, b, l)).copied().unwrap_or(0);
    let labels: BTreeSet<Letter> = g1.edges.values().map(|e| e.label).collect();
    type Consistent<'a> = dyn Fn(&BTreeMap<VertexId, VertexId>, VertexId, VertexId) -> bool + 'a;
    fn extend(
        k: usize,
        order: &[(VertexId, Option<(VertexId, Letter)>)],
        map: &mut BTreeMap<VertexId, VertexId>,
        used: &mut BTreeSet<VertexId>,
        g2: &AGraph,
        consistent: &Consistent<'_>,
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let (x, via) = order[k];
        let (p, l) = via.expect("non-root vertices are discovered by an edge");
        let px = map[&p];
        let cands: BTreeSet<VertexId> = g2
            .outgoing(px)
            .filter(|e| e.label == l && !used.contains(&e.to))
            .map(|e| e.to)
            .collect();
        for y in cands {
            if consistent(map, x, y) {
                map.insert(x, y);
                used.insert(y);
                if extend(k + 1, order, map, used, g2, consistent) {
                    return true;
                }
                map.remove(&x);
                used.remove(&y);
            }
        }
        false
    }
    let consistent = |map: &BTreeMap<VertexId, VertexId>, x: VertexId, y: VertexId| {
        labels.iter().all(|&l| {
            count(&c1, x, x, l) == count(&c2, y, y, l)
                && map.iter().all(|(&a, &b)| {
                    count(&c1, x, a, l) == count(&c2, y, b, l)
                        && count(&c1, a, x, l) == count(&c2, b, y, l)
                })
        })
    };
    for s in starts2 {
        let mut map = BTreeMap::new();
        let mut used = BTreeSet::new();
        if !consistent(&map, start1, s) {
            continue;
        }
        map.insert(start1, s);
        used.insert(s);
        if extend(1, &order, &mut map, &mut used, g2, &consistent) {
            return true;
        }
    }
    false
}

/// One edge of a marking graph, labeled by a nonempty reduced word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingEdge {
    pub id: usize,
    pub from: VertexId,
    pub to: VertexId,
    pub label: FreeWord,
}

/// A graph with word-labeled edges and no vertices of degree one or two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingGraph {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<MarkingEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<VertexId>,
}

impl MarkingGraph {
    /// Rose whose petals carry the given words.
    pub fn rose(labels: &[FreeWord]) -> MarkingGraph {
        MarkingGraph {
            vertices: vec![0],
            edges: labels
                .iter()
                .enumerate()
                .map(|(id, w)| MarkingEdge {
                    id,
                    from: 0,
                    to: 0,
                    label: w.clone(),
                })
                .collect(),
            base: Some(0),
        }
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.from == v) + usize::from(e.to == v))
            .sum()
    }

    pub fn edge(&self, id: usize) -> Option<&MarkingEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn betti_number(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertices.len())
    }

    /// Violations of the marking-graph invariants, as messages.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let vs: BTreeSet<VertexId> = self.vertices.iter().copied().collect();
        for e in &self.edges {
            if !vs.contains(&e.from) || !vs.contains(&e.to) {
                out.push(format!("edge {}: unknown endpoint", e.id));
            }
            if e.label.is_empty() {
                out.push(format!("edge {}: empty label", e.id));
            }
        }
        for &v in &self.vertices {
            let d = self.degree(v);
            if d < 3 {
                out.push(format!("vertex {v}: degree {d} < 3"));
            }
        }
        if out.is_empty() && !self.realize().is_connected() {
            out.push("graph is not connected".into());
        }
        out
    }

    /// Subdivides every word-labeled edge into single-letter edges.
    pub fn realize(&self) -> AGraph {
        self.realize_tracked().0
    }

    /// [`realize`](Self::realize), also returning for each marking edge the
    /// forward ids of its letter chain, in order from `from` to `to`.
    pub fn realize_tracked(&self) -> (AGraph, BTreeMap<usize, Vec<EdgeId>>) {
        let mut chains = BTreeMap::new();
        let mut b = AGraph::builder();
        for &v in &self.vertices {
            b.vertex(v);
        }
        let mut fresh = self.vertices.iter().copied().max().map_or(0, |m| m + 1);
        for e in &self.edges {
            let letters = e.label.letters();
            let mut cur = e.from;
            let mut chain = Vec::with_capacity(letters.len());
            for (k, &l) in letters.iter().enumerate() {
                let next = if k + 1 == letters.len() {
                    e.to
                } else {
                    fresh += 1;
                    fresh - 1
                };
                chain.push(b.edge(cur, next, l));
                cur = next;
            }
            chains.insert(e.id, chain);
        }
        if let Some(base) = self.base {
            b.base(base);
        }
        (b.build(), chains)
    }

    /// Splits edge `id` after `at` letters by a new degree-two vertex.
    pub fn subdivide(&self, id: usize, at: usize) -> Option<MarkingGraph> {
        let e = self.edge(id)?;
        if at == 0 || at >= e.label.len() {
            return None;
        }
        let mid = self.vertices.iter().copied().max().map_or(0, |m| m + 1);
        let next_id = self.edges.iter().map(|e| e.id).max().unwrap_or(0) + 1;
        let (l, r) = e.label.letters().split_at(at);
        let mut g = self.clone();
        g.vertices.push(mid);
        g.edges.retain(|x| x.id != id);
        g.edges.push(MarkingEdge {
            id,
            from: e.from,
            to: mid,
            label: FreeWord::from_letters(l.iter().copied()),
        });
        g.edges.push(MarkingEdge {
            id: next_id,
            from: mid,
            to: e.to,
            label: FreeWord::from_letters(r.iter().copied()),
        });
        Some(g)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {} {{", dot_id(name));
        for &v in &self.vertices {
            let _ = writeln!(s, "  v{v};");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  v{} -- v{} [label=\"{}\"];", e.from, e.to, e.label);
        }
        s.push_str("}\n");
        s
    }
}

/// Marking graphs are compared through their single-letter realizations.
pub fn marking_isomorphic(m1: &MarkingGraph, m2: &MarkingGraph) -> bool {
    let strip = |m: &MarkingGraph| MarkingGraph {
        base: None,
        ..m.clone()
    };
    labeled_isomorphic(&strip(m1).realize(), &strip(m2).realize())
}
