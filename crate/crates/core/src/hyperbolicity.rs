//! Unit-length metric graphs: exact δ estimators, quasiconvexity, coning
//! off, and a checker for Bowditch's thin triangles structures.
//!
//! Vertices carry arbitrary integer ids externally and dense indices
//! `0..n` internally, assigned in increasing id order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexes::{fb_equivalent, folding_path_bases, FBVertex};
use crate::folding::random_basis;
use crate::words::{FreeWord, Rank};

pub type VertexId = i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HyperbolicityError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(VertexId),
    #[error("self-loop at {0}")]
    SelfLoop(VertexId),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("empty vertex subset")]
    EmptySubset,
    #[error("no path for the pair ({0}, {1})")]
    UndefinedPath(VertexId, VertexId),
    #[error("no center for the triple ({0}, {1}, {2})")]
    UndefinedCenter(VertexId, VertexId, VertexId),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("center map is not cyclically symmetric at ({0}, {1}, {2})")]
    Asymmetric(VertexId, VertexId, VertexId),
    #[error("json: {0}")]
    Json(String),
}

type Result<T> = std::result::Result<T, HyperbolicityError>;

#[derive(Serialize, Deserialize)]
struct GraphData {
    vertices: Vec<VertexId>,
    edges: Vec<[VertexId; 2]>,
}

/// A simple undirected graph with unit-length edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    ids: Vec<VertexId>,
    index: BTreeMap<VertexId, usize>,
    adj: Vec<Vec<usize>>,
}

impl FiniteGraph {
    /// Repeated edges collapse; self-loops are rejected.
    pub fn new(vertices: &[VertexId], edges: &[(VertexId, VertexId)]) -> Result<FiniteGraph> {
        let mut ids = vertices.to_vec();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(HyperbolicityError::DuplicateVertex(w[0]));
        }
        let index: BTreeMap<VertexId, usize> =
            ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut sets = vec![BTreeSet::new(); ids.len()];
        for &(a, b) in edges {
            let i = *index.get(&a).ok_or(HyperbolicityError::UnknownVertex(a))?;
            let j = *index.get(&b).ok_or(HyperbolicityError::UnknownVertex(b))?;
            if i == j {
                return Err(HyperbolicityError::SelfLoop(a));
            }
            sets[i].insert(j);
            sets[j].insert(i);
        }
        Ok(FiniteGraph {
            ids,
            index,
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    fn from_dense(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> FiniteGraph {
        let mut sets = vec![BTreeSet::new(); n];
        for (i, j) in edges {
            if i != j {
                sets[i].insert(j);
                sets[j].insert(i);
            }
        }
        FiniteGraph {
            ids: (0..n as VertexId).collect(),
            index: (0..n).map(|i| (i as VertexId, i)).collect(),
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn path(n: usize) -> FiniteGraph {
        FiniteGraph::from_dense(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> FiniteGraph {
        FiniteGraph::from_dense(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn complete(n: usize) -> FiniteGraph {
        FiniteGraph::from_dense(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// `rows × cols` grid; vertex `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> FiniteGraph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        FiniteGraph::from_dense(rows * cols, edges)
    }

    /// Random recursive tree: vertex `i` hangs off a uniform earlier vertex.
    pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> FiniteGraph {
        FiniteGraph::from_dense(
            n,
            (1..n).map(|i| (rng.gen_range(0..i), i)).collect::<Vec<_>>(),
        )
    }

    pub fn from_json(text: &str) -> Result<FiniteGraph> {
        let d: GraphData =
            serde_json::from_str(text).map_err(|e| HyperbolicityError::Json(e.to_string()))?;
        let edges: Vec<_> = d.edges.iter().map(|e| (e[0], e[1])).collect();
        FiniteGraph::new(&d.vertices, &edges)
    }

    pub fn to_json(&self) -> String {
        let d = GraphData {
            vertices: self.ids.clone(),
            edges: self.edges().map(|(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&d).expect("graph serializes")
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {name} {{");
        for v in &self.ids {
            let _ = writeln!(s, "  {v};");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(s, "  {a} -- {b};");
        }
        s.push_str("}\n");
        s
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.ids
    }

    /// Each edge once, as `(smaller id, larger id)`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj.iter().enumerate().flat_map(move |(i, ns)| {
            ns.iter()
                .filter(move |&&j| i < j)
                .map(move |&j| (self.ids[i], self.ids[j]))
        })
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&i), Some(&j)) => self.adj[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>> {
        let i = self.idx(v)?;
        Ok(self.adj[i].iter().map(|&j| self.ids[j]).collect())
    }

    fn idx(&self, v: VertexId) -> Result<usize> {
        self.index
            .get(&v)
            .copied()
            .ok_or(HyperbolicityError::UnknownVertex(v))
    }

    fn indices(&self, vs: &[VertexId]) -> Result<Vec<usize>> {
        vs.iter().map(|&v| self.idx(v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.ids.is_empty() || bfs(&self.adj, &[0]).iter().all(|&d| d != UNREACHED)
    }
}

const UNREACHED: u32 = u32::MAX;

fn bfs(adj: &[Vec<usize>], sources: &[usize]) -> Vec<u32> {
    let mut d = vec![UNREACHED; adj.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if d[s] == UNREACHED {
            d[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if d[w] == UNREACHED {
                d[w] = d[v] + 1;
                queue.push_back(w);
            }
        }
    }
    d
}

/// All-pairs distances in dense vertex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    fn at(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.n + j]
    }

    /// Distance between two vertex ids of the graph the matrix came from.
    pub fn get(&self, g: &FiniteGraph, a: VertexId, b: VertexId) -> Result<u32> {
        Ok(self.at(g.idx(a)?, g.idx(b)?))
    }

    pub fn diameter(&self) -> u32 {
        self.d.iter().copied().max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Breadth-first search from every vertex.
pub fn apsp(g: &FiniteGraph) -> Result<DistanceMatrix> {
    let n = g.vertex_count();
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| bfs(&g.adj, &[s])).collect();
    if rows.iter().flatten().any(|&d| d == UNREACHED) {
        return Err(HyperbolicityError::Disconnected);
    }
    Ok(DistanceMatrix {
        n,
        d: rows.concat(),
    })
}

/// A multiple of one half, stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_twice(twice: i64) -> HalfInt {
        HalfInt(twice)
    }

    pub fn from_int(v: i64) -> HalfInt {
        HalfInt(2 * v)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0.div_euclid(2))
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

/// Gromov four-point defect: half the gap between the two largest of the
/// three pair sums, maximized over 4-subsets.
pub fn delta_four_point(g: &FiniteGraph) -> Result<HalfInt> {
    let d = apsp(g)?;
    let n = d.len();
    let best = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = 0i64;
            for y in x + 1..n {
                for z in y + 1..n {
                    for w in z + 1..n {
                        let mut s = [
                            d.at(x, y) + d.at(z, w),
                            d.at(x, z) + d.at(y, w),
                            d.at(x, w) + d.at(y, z),
                        ];
                        s.sort_unstable();
                        best = best.max(s[2] as i64 - s[1] as i64);
                    }
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    Ok(HalfInt::from_twice(best))
}

/// Least `δ` such that, for every triangle built from arbitrary geodesic
/// sides, each side lies in the `δ`-neighborhood of the other two.
///
/// Writing `G(p; u, v)` for the largest distance from `p` to a geodesic
/// `[u, v]`, the answer is the maximum of `min(G(p; y, z), G(p; z, x))` over
/// triples and over `p` on some geodesic `[x, y]`. For fixed `p` and `u` the
/// values `G(p; u, ·)` come from one bottleneck pass over the geodesic DAG
/// rooted at `u`.
pub fn delta_slim(g: &FiniteGraph) -> Result<u32> {
    let d = apsp(g)?;
    let n = d.len();
    // Vertices in increasing distance from each root.
    let orders: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by_key(|&v| (d.at(u, v), v));
            o
        })
        .collect();
    let best = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut far = vec![0u32; n * n];
            for u in 0..n {
                let row = &mut far[u * n..(u + 1) * n];
                for &q in &orders[u] {
                    let du = d.at(u, q);
                    let through = if du == 0 {
                        u32::MAX
                    } else {
                        g.adj[q]
                            .iter()
                            .filter(|&&r| d.at(u, r) + 1 == du)
                            .map(|&r| row[r])
                            .max()
                            .expect("a predecessor exists on a geodesic")
                    };
                    row[q] = through.min(d.at(p, q));
                }
            }
            let mut best = 0;
            for x in 0..n {
                for y in 0..n {
                    if d.at(x, p) + d.at(p, y) != d.at(x, y) {
                        continue;
                    }
                    for z in 0..n {
                        best = best.max(far[y * n + z].min(far[z * n + x]));
                    }
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

fn check_subset(g: &FiniteGraph, s: &[VertexId]) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Err(HyperbolicityError::EmptySubset);
    }
    g.indices(s)
}

/// Largest distance from `s` of a vertex on a geodesic between members of `s`.
pub fn quasiconvexity_constant(g: &FiniteGraph, s: &[VertexId]) -> Result<u32> {
    let idx = check_subset(g, s)?;
    let d = apsp(g)?;
    let to_s = bfs(&g.adj, &idx);
    let mut worst = 0;
    for &a in &idx {
        for &b in &idx {
            for (v, &reach) in to_s.iter().enumerate().take(d.len()) {
                if d.at(a, v) + d.at(v, b) == d.at(a, b) {
                    worst = worst.max(reach);
                }
            }
        }
    }
    Ok(worst)
}

pub fn is_quasiconvex(g: &FiniteGraph, s: &[VertexId], c: u32) -> Result<bool> {
    Ok(quasiconvexity_constant(g, s)? <= c)
}

/// Joins every pair of vertices inside each subset by an edge.
pub fn cone_off(g: &FiniteGraph, subsets: &[Vec<VertexId>]) -> Result<FiniteGraph> {
    let mut adj: Vec<BTreeSet<usize>> = g.adj.iter().map(|a| a.iter().copied().collect()).collect();
    for s in subsets {
        let idx = check_subset(g, s)?;
        for &i in &idx {
            for &j in &idx {
                if i != j {
                    adj[i].insert(j);
                }
            }
        }
    }
    Ok(FiniteGraph {
        ids: g.ids.clone(),
        index: g.index.clone(),
        adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

fn hausdorff_idx(d: &DistanceMatrix, p: &[usize], q: &[usize]) -> u32 {
    let directed = |p: &[usize], q: &[usize]| {
        p.iter()
            .map(|&a| q.iter().map(|&b| d.at(a, b)).min().unwrap_or(UNREACHED))
            .max()
            .unwrap_or(0)
    };
    directed(p, q).max(directed(q, p))
}

/// Hausdorff distance between the vertex sets of two paths.
pub fn hausdorff_distance(p: &[VertexId], q: &[VertexId], g: &FiniteGraph) -> Result<u32> {
    let d = apsp(g)?;
    hausdorff_distance_with(&d, g, p, q)
}

pub fn hausdorff_distance_with(
    d: &DistanceMatrix,
    g: &FiniteGraph,
    p: &[VertexId],
    q: &[VertexId],
) -> Result<u32> {
    Ok(hausdorff_idx(d, &g.indices(p)?, &g.indices(q)?))
}

/// `g_{x,y}` for ordered pairs, keyed by the path's endpoints. A missing
/// `g_{x,x}` is the constant path.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathFamily {
    paths: BTreeMap<(VertexId, VertexId), Vec<VertexId>>,
}

impl PathFamily {
    pub fn new() -> PathFamily {
        PathFamily::default()
    }

    pub fn insert(&mut self, path: Vec<VertexId>) -> Result<()> {
        let (Some(&x), Some(&y)) = (path.first(), path.last()) else {
            return Err(HyperbolicityError::InvalidPath("empty path".into()));
        };
        if self.paths.insert((x, y), path).is_some() {
            return Err(HyperbolicityError::InvalidPath(format!(
                "two paths for ({x}, {y})"
            )));
        }
        Ok(())
    }

    pub fn get(&self, x: VertexId, y: VertexId) -> Option<&[VertexId]> {
        self.paths.get(&(x, y)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Every path is an edge path in `g`.
    pub fn check(&self, g: &FiniteGraph) -> Result<()> {
        for p in self.paths.values() {
            g.indices(p)?;
            if let Some(w) = p.windows(2).find(|w| !g.has_edge(w[0], w[1])) {
                return Err(HyperbolicityError::InvalidPath(format!(
                    "{} -- {} is not an edge",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<PathFamily> {
        let raw: Vec<Vec<VertexId>> =
            serde_json::from_str(text).map_err(|e| HyperbolicityError::Json(e.to_string()))?;
        let mut f = PathFamily::new();
        for p in raw {
            f.insert(p)?;
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        let raw: Vec<&Vec<VertexId>> = self.paths.values().collect();
        serde_json::to_string(&raw).expect("paths serialize")
    }
}

/// Shortest paths that always step to the smallest-id neighbor closer to
/// the target.
pub fn geodesic_family(g: &FiniteGraph) -> Result<PathFamily> {
    let d = apsp(g)?;
    let n = d.len();
    let mut f = PathFamily::new();
    for x in 0..n {
        for y in 0..n {
            let mut path = vec![g.ids[x]];
            let mut cur = x;
            while cur != y {
                cur = *g.adj[cur]
                    .iter()
                    .find(|&&w| d.at(w, y) + 1 == d.at(cur, y))
                    .expect("connected");
                path.push(g.ids[cur]);
            }
            f.insert(path)?;
        }
    }
    Ok(f)
}

fn rotate_min(a: VertexId, b: VertexId, c: VertexId) -> (VertexId, VertexId, VertexId) {
    let m = a.min(b).min(c);
    if m == a {
        (a, b, c)
    } else if m == b {
        (b, c, a)
    } else {
        (c, a, b)
    }
}

/// `Φ` on vertex triples, stored once per cyclic rotation class.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CenterMap {
    centers: BTreeMap<(VertexId, VertexId, VertexId), VertexId>,
}

impl CenterMap {
    pub fn new() -> CenterMap {
        CenterMap::default()
    }

    /// Rejects a value that disagrees with a rotation already present.
    pub fn insert(&mut self, a: VertexId, b: VertexId, c: VertexId, phi: VertexId) -> Result<()> {
        match self.centers.insert(rotate_min(a, b, c), phi) {
            Some(old) if old != phi => Err(HyperbolicityError::Asymmetric(a, b, c)),
            _ => Ok(()),
        }
    }

    pub fn get(&self, a: VertexId, b: VertexId, c: VertexId) -> Option<VertexId> {
        self.centers.get(&rotate_min(a, b, c)).copied()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// JSON: a list of `[a, b, c, Φ(a, b, c)]`.
    pub fn from_json(text: &str) -> Result<CenterMap> {
        let raw: Vec<[VertexId; 4]> =
            serde_json::from_str(text).map_err(|e| HyperbolicityError::Json(e.to_string()))?;
        let mut m = CenterMap::new();
        for [a, b, c, phi] in raw {
            m.insert(a, b, c, phi)?;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let raw: Vec<[VertexId; 4]> = self
            .centers
            .iter()
            .map(|(&(a, b, c), &phi)| [a, b, c, phi])
            .collect();
        serde_json::to_string(&raw).expect("centers serialize")
    }
}

/// The vertex minimizing `d(v,a) + d(v,b) + d(v,c)`, lowest id on ties; in a
/// tree this is the median.
pub fn median_centers(g: &FiniteGraph) -> Result<CenterMap> {
    let d = apsp(g)?;
    let n = d.len();
    let mut m = CenterMap::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if rotate_min(a as VertexId, b as VertexId, c as VertexId)
                    != (a as VertexId, b as VertexId, c as VertexId)
                {
                    continue;
                }
                let v = (0..n)
                    .min_by_key(|&v| (d.at(v, a) + d.at(v, b) + d.at(v, c), v))
                    .expect("nonempty");
                m.insert(g.ids[a], g.ids[b], g.ids[c], g.ids[v])?;
            }
        }
    }
    Ok(m)
}

/// Tuples of condition (2) enumerated before switching to sampling.
pub const DEFAULT_TUPLE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinConfig {
    pub b1: u32,
    pub tuple_limit: u64,
    pub seed: u64,
}

impl ThinConfig {
    pub fn new(b1: u32) -> ThinConfig {
        ThinConfig {
            b1,
            tuple_limit: DEFAULT_TUPLE_LIMIT,
            seed: 0,
        }
    }
}

/// Where a condition attains its measured `B₂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum ThinWitness {
    /// Hausdorff distance between `g_{x,y}` and `g_{y,x}`.
    Symmetry { x: VertexId, y: VertexId },
    /// Hausdorff distance between `g_{a,b}` and `g_{x,y}` restricted to
    /// positions `s..t`.
    Subsegment {
        x: VertexId,
        y: VertexId,
        s: usize,
        t: usize,
        a: VertexId,
        b: VertexId,
    },
    /// Distance from `Φ(a,b,c)` to `g_{a,b}`.
    Center {
        a: VertexId,
        b: VertexId,
        c: VertexId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub b2: u32,
    pub witness: Option<ThinWitness>,
    pub checked: u64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinReport {
    pub b1: u32,
    pub symmetry: ConditionReport,
    pub subsegment: ConditionReport,
    pub center: ConditionReport,
}

impl ThinReport {
    pub fn b2(&self) -> u32 {
        self.symmetry.b2.max(self.subsegment.b2).max(self.center.b2)
    }

    /// Each stored witness attains its condition's `B₂` exactly, so no smaller
    /// constant passes on the sample.
    pub fn verify(&self, g: &FiniteGraph, paths: &PathFamily, phi: &CenterMap) -> Result<bool> {
        let ctx = Context::new(g, paths, phi)?;
        for r in [&self.symmetry, &self.subsegment, &self.center] {
            let ok = match &r.witness {
                None => r.b2 == 0,
                Some(w) => {
                    if let ThinWitness::Subsegment { s, t, x, y, a, b } = w {
                        let p = ctx.path(g.idx(*x)?, g.idx(*y)?)?;
                        let (Some(&gs), Some(&gt)) = (p.get(*s), p.get(*t)) else {
                            return Ok(false);
                        };
                        let (ia, ib) = (g.idx(*a)?, g.idx(*b)?);
                        if ctx.d.at(ia, gs) > self.b1 || ctx.d.at(ib, gt) > self.b1 {
                            return Ok(false);
                        }
                    }
                    ctx.evaluate(w)? == r.b2
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

struct Context<'a> {
    g: &'a FiniteGraph,
    d: DistanceMatrix,
    paths: Vec<Vec<usize>>,
    centers: &'a CenterMap,
}

impl<'a> Context<'a> {
    fn new(g: &'a FiniteGraph, family: &PathFamily, phi: &'a CenterMap) -> Result<Context<'a>> {
        let d = apsp(g)?;
        family.check(g)?;
        let n = g.vertex_count();
        let mut paths = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                let (a, b) = (g.ids[x], g.ids[y]);
                let p = match family.get(a, b) {
                    Some(p) => g.indices(p)?,
                    None if x == y => vec![x],
                    None => return Err(HyperbolicityError::UndefinedPath(a, b)),
                };
                paths.push(p);
            }
        }
        Ok(Context {
            g,
            d,
            paths,
            centers: phi,
        })
    }

    fn n(&self) -> usize {
        self.g.vertex_count()
    }

    fn path(&self, x: usize, y: usize) -> Result<&[usize]> {
        Ok(&self.paths[x * self.n() + y])
    }

    fn center(&self, a: usize, b: usize, c: usize) -> Result<usize> {
        let ids = &self.g.ids;
        let v = self
            .centers
            .get(ids[a], ids[b], ids[c])
            .ok_or(HyperbolicityError::UndefinedCenter(ids[a], ids[b], ids[c]))?;
        self.g.idx(v)
    }

    fn segment(p: &[usize], s: usize, t: usize) -> &[usize] {
        &p[s.min(t)..=s.max(t)]
    }

    fn evaluate(&self, w: &ThinWitness) -> Result<u32> {
        let g = self.g;
        Ok(match *w {
            ThinWitness::Symmetry { x, y } => {
                let (x, y) = (g.idx(x)?, g.idx(y)?);
                hausdorff_idx(&self.d, self.path(x, y)?, self.path(y, x)?)
            }
            ThinWitness::Subsegment { x, y, s, t, a, b } => {
                let p = self.path(g.idx(x)?, g.idx(y)?)?;
                if s >= p.len() || t >= p.len() {
                    return Err(HyperbolicityError::InvalidPath(
                        "position out of range".into(),
                    ));
                }
                hausdorff_idx(
                    &self.d,
                    self.path(g.idx(a)?, g.idx(b)?)?,
                    Self::segment(p, s, t),
                )
            }
            ThinWitness::Center { a, b, c } => {
                let v = self.center(g.idx(a)?, g.idx(b)?, g.idx(c)?)?;
                let p = self.path(g.idx(a)?, g.idx(b)?)?;
                p.iter().map(|&q| self.d.at(v, q)).min().unwrap_or(0)
            }
        })
    }
}

fn keep_worst(best: &mut (u32, Option<ThinWitness>), value: u32, w: impl FnOnce() -> ThinWitness) {
    if value > best.0 {
        *best = (value, Some(w()));
    }
}

fn merge_worst(
    a: (u32, Option<ThinWitness>),
    b: (u32, Option<ThinWitness>),
) -> (u32, Option<ThinWitness>) {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

/// Measures the least `B₂` for each of the three conditions of a
/// `(B₁, B₂)`-thin triangles structure, over all pairs and triples and over
/// the tuples of condition (2) (sampled when there are more than
/// `config.tuple_limit`).
pub fn check_thin_triangles(
    g: &FiniteGraph,
    paths: &PathFamily,
    phi: &CenterMap,
    config: &ThinConfig,
) -> Result<ThinReport> {
    let ctx = Context::new(g, paths, phi)?;
    let n = ctx.n();
    let ids = &g.ids;

    let mut symmetry = (0, None);
    for x in 0..n {
        for y in 0..n {
            let v = hausdorff_idx(&ctx.d, ctx.path(x, y)?, ctx.path(y, x)?);
            keep_worst(&mut symmetry, v, || ThinWitness::Symmetry {
                x: ids[x],
                y: ids[y],
            });
        }
    }

    let mut center = (0, None);
    for a in 0..n {
        for b in 0..n {
            let p = ctx.path(a, b)?;
            for c in 0..n {
                let v = ctx.center(a, b, c)?;
                let dist = p.iter().map(|&q| ctx.d.at(v, q)).min().unwrap_or(0);
                keep_worst(&mut center, dist, || ThinWitness::Center {
                    a: ids[a],
                    b: ids[b],
                    c: ids[c],
                });
            }
        }
    }

    let subsegment = subsegment_condition(&ctx, config)?;
    let report = |(b2, witness): (u32, Option<ThinWitness>), checked: u64, exhaustive: bool| {
        ConditionReport {
            b2,
            witness,
            checked,
            exhaustive,
        }
    };
    Ok(ThinReport {
        b1: config.b1,
        symmetry: report(symmetry, (n * n) as u64, true),
        center: report(center, (n * n * n) as u64, true),
        subsegment: report(subsegment.0, subsegment.1, subsegment.2),
    })
}

fn subsegment_condition(
    ctx: &Context<'_>,
    config: &ThinConfig,
) -> Result<((u32, Option<ThinWitness>), u64, bool)> {
    let n = ctx.n();
    let ids = &ctx.g.ids;
    let balls: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..n).filter(|&w| ctx.d.at(v, w) <= config.b1).collect())
        .collect();
    // far[(a * n + b) * n + v]: distance from v to the path g_{a,b}.
    let far: Vec<u32> = (0..n * n)
        .into_par_iter()
        .flat_map_iter(|ab| {
            let sources = &ctx.paths[ab];
            bfs(&ctx.g.adj, sources)
        })
        .collect();
    let tuples: u64 = (0..n * n)
        .map(|xy| {
            let p = &ctx.paths[xy];
            let sizes: u64 = p.iter().map(|&v| balls[v].len() as u64).sum();
            sizes * sizes
        })
        .sum();

    let measure = |xy: usize, s: usize, t: usize, a: usize, b: usize| {
        let seg = Context::segment(&ctx.paths[xy], s, t);
        let gab = &ctx.paths[a * n + b];
        let row = &far[(a * n + b) * n..(a * n + b + 1) * n];
        let one = seg.iter().map(|&v| row[v]).max().unwrap_or(0);
        let other = gab
            .iter()
            .map(|&q| seg.iter().map(|&v| ctx.d.at(q, v)).min().unwrap_or(0))
            .max()
            .unwrap_or(0);
        one.max(other)
    };
    let witness = |xy: usize, s: usize, t: usize, a: usize, b: usize| ThinWitness::Subsegment {
        x: ids[xy / n],
        y: ids[xy % n],
        s,
        t,
        a: ids[a],
        b: ids[b],
    };

    if tuples <= config.tuple_limit {
        let best = (0..n * n)
            .into_par_iter()
            .map(|xy| {
                let p = &ctx.paths[xy];
                let mut best = (0, None);
                for s in 0..p.len() {
                    for t in 0..p.len() {
                        for &a in &balls[p[s]] {
                            for &b in &balls[p[t]] {
                                let v = measure(xy, s, t, a, b);
                                keep_worst(&mut best, v, || witness(xy, s, t, a, b));
                            }
                        }
                    }
                }
                best
            })
            .reduce(|| (0, None), merge_worst);
        return Ok((best, tuples, true));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best = (0, None);
    for _ in 0..config.tuple_limit {
        let xy = rng.gen_range(0..n * n);
        let p = &ctx.paths[xy];
        let s = rng.gen_range(0..p.len());
        let t = rng.gen_range(0..p.len());
        let a = balls[p[s]][rng.gen_range(0..balls[p[s]].len())];
        let b = balls[p[t]][rng.gen_range(0..balls[p[t]].len())];
        let v = measure(xy, s, t, a, b);
        keep_worst(&mut best, v, || witness(xy, s, t, a, b));
    }
    Ok((best, config.tuple_limit, false))
}

/// Where a vertex of a sampled `FB_N` ball came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallVertex {
    pub basis: FBVertex,
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FbBall {
    pub graph: FiniteGraph,
    /// Indexed by vertex id.
    pub vertices: Vec<BallVertex>,
}

fn class_key(w: &FreeWord) -> Vec<crate::words::Letter> {
    let a = w.cyclic_normal_form().letters().to_vec();
    let b = w.inverse().cyclic_normal_form().letters().to_vec();
    a.min(b)
}

/// Induced subgraph of `FB_N` on the given bases after merging equivalent
/// ones, restricted to the largest component (the first on ties).
pub fn fb_ball_graph(candidates: Vec<(FBVertex, String)>) -> FbBall {
    let mut reps: Vec<BallVertex> = Vec::new();
    let mut by_signature: HashMap<Vec<Vec<crate::words::Letter>>, Vec<usize>> = HashMap::new();
    for (v, origin) in candidates {
        let mut sig: Vec<_> = v.basis.iter().map(class_key).collect();
        sig.sort();
        let bucket = by_signature.entry(sig).or_default();
        match bucket.iter().find(|&&k| fb_equivalent(&reps[k].basis, &v)) {
            Some(&k) => reps[k].provenance.push(origin),
            None => {
                bucket.push(reps.len());
                reps.push(BallVertex {
                    basis: v,
                    provenance: vec![origin],
                });
            }
        }
    }
    let mut by_class: BTreeMap<Vec<crate::words::Letter>, BTreeSet<usize>> = BTreeMap::new();
    for (k, r) in reps.iter().enumerate() {
        for w in &r.basis.basis {
            by_class.entry(class_key(w)).or_default().insert(k);
        }
    }
    let mut edges = BTreeSet::new();
    for members in by_class.values() {
        for &i in members {
            for &j in members {
                if i < j {
                    edges.insert((i, j));
                }
            }
        }
    }
    let full = FiniteGraph::from_dense(reps.len(), edges.iter().copied());
    let mut comp = vec![usize::MAX; reps.len()];
    let mut sizes = Vec::new();
    for v in 0..reps.len() {
        if comp[v] != usize::MAX {
            continue;
        }
        let d = bfs(&full.adj, &[v]);
        let members: Vec<usize> = (0..reps.len()).filter(|&w| d[w] != UNREACHED).collect();
        for &w in &members {
            comp[w] = sizes.len();
        }
        sizes.push(members.len());
    }
    let Some(keep) = (0..sizes.len()).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))) else {
        return FbBall {
            graph: FiniteGraph::from_dense(0, []),
            vertices: Vec::new(),
        };
    };
    let kept: Vec<usize> = (0..reps.len()).filter(|&v| comp[v] == keep).collect();
    let renumber: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let graph = FiniteGraph::from_dense(
        kept.len(),
        edges
            .iter()
            .filter(|(i, j)| renumber.contains_key(i) && renumber.contains_key(j))
            .map(|(i, j)| (renumber[i], renumber[j])),
    );
    let vertices = kept.into_iter().map(|v| reps[v].clone()).collect();
    FbBall { graph, vertices }
}

/// Folding-path bases of `random_basis(seed, moves)`, read in `center`'s
/// coordinates, plus the center itself.
pub fn sample_fb_ball(center: &FBVertex, seeds: &[u64], moves: usize) -> FbBall {
    let mut candidates = vec![(center.clone(), "center".to_string())];
    if let Ok(rank) = Rank::new(center.rank()) {
        for &seed in seeds {
            let b = FBVertex {
                basis: random_basis(seed, moves, rank),
            };
            let Ok(chain) = folding_path_bases(&b) else {
                continue;
            };
            for (k, v) in chain.iter().enumerate() {
                let basis = v
                    .basis
                    .iter()
                    .map(|w| w.substitute(&center.basis))
                    .collect();
                candidates.push((FBVertex { basis }, format!("seed {seed} step {k}")));
            }
        }
    }
    fb_ball_graph(candidates)
}
