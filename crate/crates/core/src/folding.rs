//! Stallings folds and folding paths from a wedge of loops down to the rose.
//!
//! A basis `b` of `F_N` is realized as the wedge of `N` loops at a base
//! vertex, the `i`-th loop spelling `b_i`. Repeated maximal folds (each a
//! chain of single Stallings folds along the longest common label prefix of
//! two natural edges) take a foldable wedge to `R_X`, and every intermediate
//! graph stays foldable. The base vertex is carried through every quotient.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agraph::{
    labeled_isomorphic, AGraph, EdgeId, FoldabilityReport, GraphError, SingleFold, VertexId,
};
use crate::words::{FreeWord, Letter, Rank, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("word {index} is empty")]
    EmptyWord { index: usize },
    #[error("expected {expected} words, got {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("graph is not foldable: {0:?}")]
    NotFoldable(FoldabilityReport),
    #[error("no tried conjugation makes the wedge foldable")]
    Unrepairable,
    #[error("graph is already folded")]
    AlreadyFolded,
    #[error("graph is not folded")]
    NotFolded,
    #[error("graph has no base vertex")]
    NoBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldKind {
    /// Termini differed; homotopy equivalence.
    TypeI,
    /// Termini coincided; first Betti number drops by one.
    TypeII,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldStep {
    pub kind: FoldKind,
    pub origin: VertexId,
    /// Surviving edge of the identified pair.
    pub kept: EdgeId,
    pub removed: EdgeId,
    /// `(removed vertex, surviving vertex)` for type-I folds.
    pub merged: Option<(VertexId, VertexId)>,
}

impl From<SingleFold> for FoldStep {
    fn from(f: SingleFold) -> Self {
        FoldStep {
            kind: if f.merged.is_some() {
                FoldKind::TypeI
            } else {
                FoldKind::TypeII
            },
            origin: f.origin,
            kept: f.kept,
            removed: f.removed,
            merged: f.merged,
        }
    }
}

/// Wedge of one loop per word at base vertex `0`.
pub fn wedge_graph(basis: &[FreeWord]) -> Result<AGraph, FoldError> {
    let mut b = AGraph::builder();
    b.base(0);
    let mut next_vertex = 1;
    for (index, w) in basis.iter().enumerate() {
        if w.is_empty() {
            return Err(FoldError::EmptyWord { index });
        }
        let letters = w.letters();
        let mut cur = 0;
        for (k, &l) in letters.iter().enumerate() {
            let to = if k + 1 == letters.len() {
                0
            } else {
                next_vertex += 1;
                next_vertex - 1
            };
            b.edge(cur, to, l);
            cur = to;
        }
    }
    Ok(b.build())
}

/// Result of [`ensure_foldable`]: `basis = x^m · input · x^-m` elementwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldableWedge {
    pub exponent: i64,
    /// Generator `x_c` conjugated by; `None` when no change was needed.
    pub letter: Option<Letter>,
    pub basis: Vec<FreeWord>,
    pub graph: AGraph,
}

fn conjugate_all(basis: &[FreeWord], letter: Letter, m: i64) -> Vec<FreeWord> {
    // x^m w x^-m = (x^-m)^-1 w (x^-m)
    let g = FreeWord::from_letter(letter).pow(-m);
    basis.iter().map(|w| w.conjugate_by(&g)).collect()
}

/// Replaces `b` by `x_c^m b x_c^-m` with `|m|` minimal so that its wedge is
/// foldable. When `b_1` is a single letter only that generator is used, so
/// `b_1` is left unchanged.
pub fn ensure_foldable(basis: &[FreeWord]) -> Result<FoldableWedge, FoldError> {
    let graph = wedge_graph(basis)?;
    if graph.is_foldable() {
        return Ok(FoldableWedge {
            exponent: 0,
            letter: None,
            basis: basis.to_vec(),
            graph,
        });
    }
    let candidates: Vec<Letter> = match basis.first().and_then(FreeWord::as_letter) {
        Some(l) => vec![l.positive()],
        None => {
            let top = basis
                .iter()
                .filter_map(FreeWord::max_index)
                .max()
                .unwrap_or(0);
            (1..=top).map(Letter::generator).collect()
        }
    };
    let bound = basis.iter().map(FreeWord::len).max().unwrap_or(0) as i64 + 1;
    for magnitude in 1..=bound {
        for &x in &candidates {
            for m in [-magnitude, magnitude] {
                let adjusted = conjugate_all(basis, x, m);
                if !base_labels_ok(&adjusted) {
                    continue;
                }
                let graph = wedge_graph(&adjusted)?;
                if graph.is_foldable() {
                    return Ok(FoldableWedge {
                        exponent: m,
                        letter: Some(x),
                        basis: adjusted,
                        graph,
                    });
                }
            }
        }
    }
    Err(FoldError::Unrepairable)
}

/// Conjugators up to this length are all tried by [`make_foldable`].
pub const SHORT_CONJUGATOR_LEN: usize = 3;

/// `basis = conjugator^-1 · input · conjugator` elementwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjugatedWedge {
    pub conjugator: FreeWord,
    pub basis: Vec<FreeWord>,
    pub graph: AGraph,
}

// Interior wedge vertices always see two distinct labels, so only the base
// can obstruct foldability.
fn base_labels_ok(basis: &[FreeWord]) -> bool {
    let mut seen = BTreeSet::new();
    for w in basis {
        match (w.first(), w.last()) {
            (Some(f), Some(l)) => {
                seen.insert(f);
                seen.insert(l.inv());
            }
            _ => return false,
        }
    }
    seen.len() >= 3
}

/// Shortlex-first `g` making the wedge of `g^-1 b_i g` foldable, among all
/// reduced words of length at most `short` and all prefixes of the `b_i`
/// and their inverses (conjugating by a prefix of `b_i` moves the base point
/// along the `i`-th loop).
pub fn conjugate_to_foldable(
    basis: &[FreeWord],
    short: usize,
) -> Result<ConjugatedWedge, FoldError> {
    if let Some(index) = basis.iter().position(FreeWord::is_empty) {
        return Err(FoldError::EmptyWord { index });
    }
    let top = basis
        .iter()
        .filter_map(FreeWord::max_index)
        .max()
        .unwrap_or(0);
    let mut candidates: BTreeSet<(usize, FreeWord)> = BTreeSet::new();
    let mut layer = vec![FreeWord::identity()];
    for _ in 0..short {
        let mut next = Vec::new();
        for g in &layer {
            for i in 1..=top {
                for l in [Letter::generator(i), Letter::generator(i).inv()] {
                    if g.last() != Some(l.inv()) {
                        next.push(g.concat(&FreeWord::from_letter(l)));
                    }
                }
            }
        }
        candidates.extend(layer.drain(..).map(|g| (g.len(), g)));
        layer = next;
    }
    candidates.extend(layer.into_iter().map(|g| (g.len(), g)));
    for w in basis {
        for v in [w.clone(), w.inverse()] {
            for k in 1..=v.len() {
                let p = FreeWord::from_letters(v.letters()[..k].iter().copied());
                candidates.insert((k, p));
            }
        }
    }
    for (_, g) in candidates {
        let adjusted: Vec<FreeWord> = basis.iter().map(|w| w.conjugate_by(&g)).collect();
        if base_labels_ok(&adjusted) {
            let graph = wedge_graph(&adjusted)?;
            debug_assert!(graph.is_foldable());
            return Ok(ConjugatedWedge {
                conjugator: g,
                basis: adjusted,
                graph,
            });
        }
    }
    Err(FoldError::Unrepairable)
}

/// [`ensure_foldable`], falling back to [`conjugate_to_foldable`] when no
/// letter power works.
pub fn make_foldable(basis: &[FreeWord]) -> Result<ConjugatedWedge, FoldError> {
    match ensure_foldable(basis) {
        Ok(f) => {
            let conjugator = match f.letter {
                Some(x) => FreeWord::from_letter(x).pow(-f.exponent),
                None => FreeWord::identity(),
            };
            Ok(ConjugatedWedge {
                conjugator,
                basis: f.basis,
                graph: f.graph,
            })
        }
        Err(FoldError::Unrepairable) => conjugate_to_foldable(basis, SHORT_CONJUGATOR_LEN),
        Err(e) => Err(e),
    }
}

/// Identifies two edges with common origin and label.
pub fn single_fold(g: &AGraph, e1: EdgeId, e2: EdgeId) -> Result<(AGraph, FoldStep), FoldError> {
    let mut h = g.clone();
    let f = h.fold_in_place(e1, e2)?;
    Ok((h, f.into()))
}

/// Folds the longest equally-labeled initial segments of the two natural
/// edges at the lowest fold site.
pub fn maximal_fold(g: &AGraph) -> Result<(AGraph, Vec<FoldStep>), FoldError> {
    let (_, e1, e2) = g.fold_site().ok_or(FoldError::AlreadyFolded)?;
    let out = g.outgoing_map();
    let z1 = g.trace_natural_edge(e1, &out);
    let z2 = g.trace_natural_edge(e2, &out);
    let common = z1
        .iter()
        .zip(&z2)
        .take_while(|(a, b)| g.edge(**a).unwrap().label == g.edge(**b).unwrap().label)
        .count();
    let mut h = g.clone();
    let mut steps = Vec::with_capacity(common);
    for (&a, &b) in z1.iter().zip(&z2).take(common) {
        let (Some(ea), Some(eb)) = (h.edge(a), h.edge(b)) else {
            break;
        };
        if ea.from != eb.from || a == b {
            break;
        }
        steps.push(h.fold_in_place(a, b)?.into());
    }
    Ok((h, steps))
}

/// Single folds at the lowest fold site until the graph is folded.
pub fn fold_completely(g: &AGraph) -> (AGraph, Vec<FoldStep>) {
    let mut h = g.clone();
    let mut steps = Vec::new();
    while let Some((_, e1, e2)) = h.fold_site() {
        steps.push(
            h.fold_in_place(e1, e2)
                .expect("fold site is a valid pair")
                .into(),
        );
    }
    (h, steps)
}

/// `Γ_0, ..., Γ_n` with the single folds making up each maximal fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldingPath {
    pub graphs: Vec<AGraph>,
    /// `steps[i]` takes `graphs[i]` to `graphs[i + 1]`.
    pub steps: Vec<Vec<FoldStep>>,
}

impl FoldingPath {
    /// Number of maximal folds.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn initial(&self) -> &AGraph {
        &self.graphs[0]
    }

    pub fn terminal(&self) -> &AGraph {
        self.graphs.last().expect("a folding path has a graph")
    }

    pub fn single_fold_count(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn type_ii_count(&self) -> usize {
        self.steps
            .iter()
            .flatten()
            .filter(|s| s.kind == FoldKind::TypeII)
            .count()
    }

    pub fn base_vertices(&self) -> Vec<VertexId> {
        self.graphs
            .iter()
            .map(|g| g.base().expect("folding graphs are based"))
            .collect()
    }

    pub fn ends_at_rose(&self, rank: Rank) -> bool {
        labeled_isomorphic(self.terminal(), &AGraph::rose(rank))
    }
}

/// Folds a foldable wedge by maximal folds until it is folded.
pub fn fold_to_rose(basis: &[FreeWord]) -> Result<FoldingPath, FoldError> {
    let wedge = wedge_graph(basis)?;
    let report = wedge.foldability();
    if !report.is_foldable() {
        return Err(FoldError::NotFoldable(report));
    }
    fold_graph(wedge)
}

/// Maximal folds from an arbitrary based graph.
pub fn fold_graph(start: AGraph) -> Result<FoldingPath, FoldError> {
    let mut graphs = vec![start];
    let mut steps = Vec::new();
    loop {
        let cur = graphs.last().unwrap();
        if cur.is_folded() {
            break;
        }
        let (next, s) = maximal_fold(cur)?;
        debug_assert!(!s.is_empty());
        graphs.push(next);
        steps.push(s);
    }
    Ok(FoldingPath { graphs, steps })
}

/// Whether `basis` is a free basis of `F_N`.
///
/// `N` elements generating `F_N` form a basis (free groups are Hopfian), so
/// this checks that the folded wedge is the rose.
pub fn is_basis(basis: &[FreeWord], rank: Rank) -> Result<bool, FoldError> {
    if basis.len() != rank.get() {
        return Err(FoldError::WrongCount {
            expected: rank.get(),
            found: basis.len(),
        });
    }
    for w in basis {
        w.check_rank(rank)?;
    }
    if basis.iter().any(FreeWord::is_empty) {
        return Ok(false);
    }
    let folded = match make_foldable(basis) {
        Ok(f) => fold_graph(f.graph)?.terminal().clone(),
        Err(FoldError::Unrepairable) => fold_completely(&wedge_graph(basis)?).0,
        Err(e) => return Err(e),
    };
    Ok(labeled_isomorphic(&folded.core()?, &AGraph::rose(rank)))
}

/// Whether `w` reads a closed path at the base of the folded graph `g`.
pub fn subgroup_membership(w: &FreeWord, g: &AGraph) -> Result<bool, FoldError> {
    let base = g.base().ok_or(FoldError::NoBase)?;
    if !g.is_folded() {
        return Err(FoldError::NotFolded);
    }
    let mut cur = base;
    for &l in w.letters() {
        match g.outgoing(cur).find(|e| e.label == l) {
            Some(e) => cur = e.to,
            None => return Ok(false),
        }
    }
    Ok(cur == base)
}

/// Whether `g` has a loop edge at its base labeled `x` or `x^-1`.
pub fn has_base_loop(g: &AGraph, x: Letter) -> bool {
    let Some(b) = g.base() else { return false };
    g.outgoing(b)
        .any(|e| e.to == b && (e.label == x || e.label == x.inv()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NielsenMove {
    Swap(usize, usize),
    Invert(usize),
    /// `b_i <- b_j · b_i`
    LeftMultiply(usize, usize),
    /// `b_i <- b_i · b_j`
    RightMultiply(usize, usize),
}

impl NielsenMove {
    pub fn apply(self, basis: &mut [FreeWord]) {
        match self {
            NielsenMove::Swap(i, j) => basis.swap(i, j),
            NielsenMove::Invert(i) => basis[i] = basis[i].inverse(),
            NielsenMove::LeftMultiply(i, j) => basis[i] = basis[j].concat(&basis[i]),
            NielsenMove::RightMultiply(i, j) => basis[i] = basis[i].concat(&basis[j]),
        }
    }

    fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        match rng.gen_range(0..4) {
            0 => NielsenMove::Swap(i, j),
            1 => NielsenMove::Invert(i),
            2 => NielsenMove::LeftMultiply(i, j),
            _ => NielsenMove::RightMultiply(i, j),
        }
    }
}

/// `steps` uniformly random Nielsen moves applied to `X`.
pub fn random_basis_with<R: Rng>(rng: &mut R, steps: usize, rank: Rank) -> Vec<FreeWord> {
    let mut basis = rank.reference_basis();
    for _ in 0..steps {
        NielsenMove::random(rng, rank.get()).apply(&mut basis);
    }
    basis
}

pub fn random_basis(seed: u64, steps: usize, rank: Rank) -> Vec<FreeWord> {
    random_basis_with(&mut ChaCha8Rng::seed_from_u64(seed), steps, rank)
}

/// Random basis whose first element is a single letter: a random basis of
/// the factor on the remaining generators, with `x_c` mixed in by moves that
/// keep the first slot fixed.
pub fn random_basis_with_letter<R: Rng>(rng: &mut R, steps: usize, rank: Rank) -> Vec<FreeWord> {
    let n = rank.get();
    let mut basis = rank.reference_basis();
    for _ in 0..steps {
        let mv = loop {
            let mv = NielsenMove::random(rng, n);
            let touches_first = match mv {
                NielsenMove::Swap(i, j) => i == 0 || j == 0,
                NielsenMove::Invert(i)
                | NielsenMove::LeftMultiply(i, _)
                | NielsenMove::RightMultiply(i, _) => i == 0,
            };
            if !touches_first {
                break mv;
            }
        };
        mv.apply(&mut basis);
    }
    // Sometimes hide the shared letter behind a power of itself, so the
    // conjugation repair is exercised.
    let x = basis[0].as_letter().expect("first slot untouched");
    if rng.gen_bool(0.25) {
        let m = rng.gen_range(1..=2i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        basis = conjugate_all(&basis, x, m);
    }
    let mut rest = basis.split_off(1);
    rest.shuffle(rng);
    basis.extend(rest);
    basis
}
