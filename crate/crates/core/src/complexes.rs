//! Vertices of the free bases graph `FB_N` and the free factor complex
//! `FF_N`, the maps `h`, `q` and `τ` between them, and witness paths that
//! certify distance upper bounds edge by edge.
//!
//! `FF_N` adjacency is only ever certified, never decided: two factors are
//! adjacent through a [`FfCertificate::Nested`] step when they are spanned by
//! nested subsets of one common ambient basis. A [`FfCertificate::SameFactor`]
//! step changes the ambient basis without moving in `FF_N` and costs nothing.
//!
//! Basis positions are 0-based in every data structure and serialization;
//! `Display` impls print the 1-based positions `a_1, …, a_N`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agraph::{EdgeId, GraphError, MarkingGraph, SpanningTree, VertexId};
use crate::folding::{
    fold_graph, is_basis, make_foldable, random_basis_with, random_basis_with_letter, FoldError,
};
use crate::words::{conjugate_related, find_conjugator, FreeWord, Letter, Rank, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexError {
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("not a basis: {0}")]
    NotABasis(String),
    #[error("invalid subset {subset:?} of a rank {rank} basis")]
    InvalidSubset { subset: Vec<usize>, rank: usize },
    #[error("rank {0} is too small; proper factors of rank two need N >= 3")]
    RankTooSmall(usize),
    #[error("vertices are fb-equivalent")]
    Equivalent,
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("invalid marking: {0}")]
    InvalidMarking(String),
    #[error("marking has no edge {0}")]
    UnknownEdge(usize),
    #[error("vertex group is trivial")]
    TrivialVertexGroup,
    #[error("vertex group is all of F_N")]
    ImproperVertexGroup,
}

fn rank_of(basis: &[FreeWord]) -> Result<Rank, ComplexError> {
    Ok(Rank::new(basis.len())?)
}

/// A free basis standing for its class in `FB_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FBVertex {
    pub basis: Vec<FreeWord>,
}

impl FBVertex {
    pub fn new(basis: Vec<FreeWord>) -> Result<FBVertex, ComplexError> {
        let v = FBVertex { basis };
        v.check()?;
        Ok(v)
    }

    pub fn reference(rank: Rank) -> FBVertex {
        FBVertex {
            basis: rank.reference_basis(),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn check(&self) -> Result<(), ComplexError> {
        if !is_basis(&self.basis, rank_of(&self.basis)?)? {
            return Err(ComplexError::NotABasis(crate::words::format_word_list(
                &self.basis,
            )));
        }
        Ok(())
    }
}

impl fmt::Display for FBVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", crate::words::format_word_list(&self.basis))
    }
}

/// The proper free factor spanned by `ambient[i]`, `i ∈ subset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FFVertex {
    pub ambient: Vec<FreeWord>,
    /// Sorted, 0-based.
    pub subset: Vec<usize>,
}

impl FFVertex {
    pub fn new(ambient: Vec<FreeWord>, subset: Vec<usize>) -> Result<FFVertex, ComplexError> {
        let mut subset = subset;
        subset.sort_unstable();
        subset.dedup();
        let v = FFVertex { ambient, subset };
        v.check()?;
        Ok(v)
    }

    pub fn rank(&self) -> usize {
        self.ambient.len()
    }

    pub fn generators(&self) -> Vec<FreeWord> {
        self.subset
            .iter()
            .map(|&i| self.ambient[i].clone())
            .collect()
    }

    pub fn check(&self) -> Result<(), ComplexError> {
        let n = self.ambient.len();
        let sorted = self.subset.windows(2).all(|w| w[0] < w[1]);
        if !sorted
            || self.subset.is_empty()
            || self.subset.len() >= n
            || self.subset[self.subset.len() - 1] >= n
        {
            return Err(ComplexError::InvalidSubset {
                subset: self.subset.clone(),
                rank: n,
            });
        }
        FBVertex {
            basis: self.ambient.clone(),
        }
        .check()
    }

    fn contains(&self, other: &FFVertex) -> bool {
        other
            .subset
            .iter()
            .all(|i| self.subset.binary_search(i).is_ok())
    }
}

impl fmt::Display for FFVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens = self.generators();
        write!(f, "<{}>", crate::words::format_word_list(&gens))
    }
}

/// `b_i = g^-1 · a_{σ(i)}^{ε_i} · g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FbEquivalence {
    pub sigma: Vec<usize>,
    pub signs: Vec<i8>,
    pub conjugator: FreeWord,
}

impl FbEquivalence {
    pub fn validate(&self, a: &FBVertex, b: &FBVertex) -> bool {
        let n = a.rank();
        if b.rank() != n || self.sigma.len() != n || self.signs.len() != n {
            return false;
        }
        if !self.sigma.iter().copied().sorted().eq(0..n) {
            return false;
        }
        (0..n).all(|i| {
            a.basis[self.sigma[i]]
                .signed(self.signs[i] > 0)
                .conjugate_by(&self.conjugator)
                == b.basis[i]
        })
    }
}

/// Searches permutations, signs and the conjugator coset `{root(u)^k g₀}`.
///
/// If `g^-1 u g = w` and `g₀` is one solution, every solution is `r^k g₀`
/// where `r` generates the centralizer of `u`. Once `|k|` exceeds
/// `(|u| + |w| + 2|g₀|) / ‖r‖ + 1` the conjugates of the remaining basis
/// elements are longer than their targets, so the range is finite.
pub fn fb_equivalence(a: &FBVertex, b: &FBVertex) -> Option<FbEquivalence> {
    let n = a.rank();
    if b.rank() != n || n == 0 {
        return None;
    }
    for sigma in (0..n).permutations(n) {
        if (0..n).any(|i| a.basis[sigma[i]].cyclic_len() != b.basis[i].cyclic_len()) {
            continue;
        }
        for mask in 0u32..(1 << n) {
            let signs: Vec<i8> = (0..n)
                .map(|i| if mask >> i & 1 == 0 { 1 } else { -1 })
                .collect();
            let sources: Vec<FreeWord> = (0..n)
                .map(|i| a.basis[sigma[i]].signed(signs[i] > 0))
                .collect();
            if !(0..n).all(|i| conjugate_related(&sources[i], &b.basis[i])) {
                continue;
            }
            let (u, w) = (&sources[0], &b.basis[0]);
            let Some(g0) = find_conjugator(u, w) else {
                continue;
            };
            let r = u.root();
            let bound = ((u.len() + w.len() + 2 * g0.len()) / r.cyclic_len().max(1) + 1) as i64;
            for k in std::iter::once(0).chain((1..=bound).flat_map(|k| [k, -k])) {
                let g = r.pow(k).concat(&g0);
                if (0..n).all(|i| sources[i].conjugate_by(&g) == b.basis[i]) {
                    return Some(FbEquivalence {
                        sigma,
                        signs,
                        conjugator: g,
                    });
                }
            }
        }
    }
    None
}

pub fn fb_equivalent(a: &FBVertex, b: &FBVertex) -> bool {
    fb_equivalence(a, b).is_some()
}

/// `g^-1 · a_i · g = b_j^sign`; positions are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FbAdjacency {
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    pub conjugator: FreeWord,
}

impl FbAdjacency {
    pub fn validate(&self, a: &FBVertex, b: &FBVertex) -> bool {
        match (a.basis.get(self.i), b.basis.get(self.j)) {
            (Some(x), Some(y)) => {
                self.sign.abs() == 1 && x.conjugate_by(&self.conjugator) == y.signed(self.sign > 0)
            }
            _ => false,
        }
    }

    /// The same shared element seen from `b`.
    pub fn transpose(&self) -> FbAdjacency {
        FbAdjacency {
            i: self.j,
            j: self.i,
            sign: self.sign,
            conjugator: self.conjugator.inverse(),
        }
    }
}

impl fmt::Display for FbAdjacency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {:+})", self.i + 1, self.j + 1, self.sign)
    }
}

/// First `(i, j, sign)` with `a_i` conjugate to `b_j^sign`, scanning `j`
/// then `i`, `+1` before `-1`.
pub fn fb_adjacent(a: &FBVertex, b: &FBVertex) -> Result<Option<FbAdjacency>, ComplexError> {
    if fb_equivalent(a, b) {
        return Err(ComplexError::Equivalent);
    }
    Ok(shared_element(a, b))
}

fn shared_element(a: &FBVertex, b: &FBVertex) -> Option<FbAdjacency> {
    for (j, y) in b.basis.iter().enumerate() {
        for (i, x) in a.basis.iter().enumerate() {
            for sign in [1i8, -1] {
                if let Some(g) = find_conjugator(x, &y.signed(sign > 0)) {
                    return Some(FbAdjacency {
                        i,
                        j,
                        sign,
                        conjugator: g,
                    });
                }
            }
        }
    }
    None
}

/// `h(v) = ⟨a_v⟩` with `a_v` the first basis element.
pub fn h_map(v: &FBVertex) -> FFVertex {
    FFVertex {
        ambient: v.basis.clone(),
        subset: vec![0],
    }
}

/// The ambient basis, which contains a basis of the factor.
pub fn q_map(u: &FFVertex) -> FBVertex {
    FBVertex {
        basis: u.ambient.clone(),
    }
}

/// One edge (or zero-length change of representative) of a [`WitnessPath`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FfCertificate {
    /// Same ambient basis, one subset strictly inside the other.
    Nested,
    /// `g^-1 (generators of u) g` equals the generators of `w` up to order
    /// and inversion, so the factors coincide up to conjugacy.
    SameFactor { conjugator: FreeWord },
}

impl FfCertificate {
    pub fn validate(&self, u: &FFVertex, w: &FFVertex) -> bool {
        match self {
            FfCertificate::Nested => {
                u.ambient == w.ambient && u.subset != w.subset && (u.contains(w) || w.contains(u))
            }
            FfCertificate::SameFactor { conjugator } => {
                let src = u.generators();
                let dst = w.generators();
                if src.len() != dst.len() {
                    return false;
                }
                let mut used = vec![false; dst.len()];
                src.iter().all(|x| {
                    let y = x.conjugate_by(conjugator);
                    let inv = y.inverse();
                    match (0..dst.len()).find(|&k| !used[k] && (dst[k] == y || dst[k] == inv)) {
                        Some(k) => {
                            used[k] = true;
                            true
                        }
                        None => false,
                    }
                })
            }
        }
    }

    pub fn cost(&self) -> usize {
        match self {
            FfCertificate::Nested => 1,
            FfCertificate::SameFactor { .. } => 0,
        }
    }
}

/// Nested-subset certificate, when `u` and `w` are adjacent in that form.
pub fn ff_step_witness(u: &FFVertex, w: &FFVertex) -> Option<FfCertificate> {
    FfCertificate::Nested
        .validate(u, w)
        .then_some(FfCertificate::Nested)
}

/// An edge path in `FF_N` with a certificate per step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPath {
    pub vertices: Vec<FFVertex>,
    pub certificates: Vec<FfCertificate>,
}

impl WitnessPath {
    fn start(v: FFVertex) -> WitnessPath {
        WitnessPath {
            vertices: vec![v],
            certificates: Vec::new(),
        }
    }

    fn push(&mut self, v: FFVertex, c: FfCertificate) {
        self.vertices.push(v);
        self.certificates.push(c);
    }

    /// Number of genuine `FF_N` edges.
    pub fn length(&self) -> usize {
        self.certificates.iter().map(FfCertificate::cost).sum()
    }

    pub fn first(&self) -> Option<&FFVertex> {
        self.vertices.first()
    }

    pub fn last(&self) -> Option<&FFVertex> {
        self.vertices.last()
    }

    pub fn validate(&self) -> Result<(), ComplexError> {
        if self.vertices.is_empty() || self.certificates.len() + 1 != self.vertices.len() {
            return Err(ComplexError::InvalidCertificate(
                "certificate count does not match path".into(),
            ));
        }
        for v in &self.vertices {
            v.check()?;
        }
        for (k, c) in self.certificates.iter().enumerate() {
            if !c.validate(&self.vertices[k], &self.vertices[k + 1]) {
                return Err(ComplexError::InvalidCertificate(format!(
                    "step {k}: {} -> {}",
                    self.vertices[k],
                    self.vertices[k + 1]
                )));
            }
        }
        Ok(())
    }
}

fn factor(ambient: &[FreeWord], subset: &[usize]) -> FFVertex {
    FFVertex {
        ambient: ambient.to_vec(),
        subset: subset.iter().copied().sorted().dedup().collect(),
    }
}

/// `⟨a_1⟩ – ⟨a_1, a_i⟩ – ⟨a_i⟩ ≡ ⟨b_j⟩ – ⟨b_j, b_1⟩ – ⟨b_1⟩`, skipping the
/// detour on a side whose shared element already sits first.
pub fn h_lipschitz_path(
    a: &FBVertex,
    b: &FBVertex,
    cert: &FbAdjacency,
) -> Result<WitnessPath, ComplexError> {
    if a.rank() < 3 {
        return Err(ComplexError::RankTooSmall(a.rank()));
    }
    if !cert.validate(a, b) {
        return Err(ComplexError::InvalidCertificate(format!(
            "{cert} does not relate {a} and {b}"
        )));
    }
    let (i, j) = (cert.i, cert.j);
    let mut path = WitnessPath::start(h_map(a));
    if i != 0 {
        path.push(factor(&a.basis, &[0, i]), FfCertificate::Nested);
        path.push(factor(&a.basis, &[i]), FfCertificate::Nested);
    }
    path.push(
        factor(&b.basis, &[j]),
        FfCertificate::SameFactor {
            conjugator: cert.conjugator.clone(),
        },
    );
    if j != 0 {
        path.push(factor(&b.basis, &[0, j]), FfCertificate::Nested);
        path.push(factor(&b.basis, &[0]), FfCertificate::Nested);
    }
    Ok(path)
}

/// `K – ⟨a_s⟩ – ⟨a_s, a_1⟩ – ⟨a_1⟩` with `s = min K`, dropping steps that
/// would repeat a vertex.
fn descend_to_first(u: &FFVertex) -> Result<WitnessPath, ComplexError> {
    u.check()?;
    let s = u.subset[0];
    let mut path = WitnessPath::start(u.clone());
    if u.subset.len() > 1 {
        path.push(factor(&u.ambient, &[s]), FfCertificate::Nested);
    }
    if s != 0 {
        if u.rank() < 3 {
            return Err(ComplexError::RankTooSmall(u.rank()));
        }
        path.push(factor(&u.ambient, &[0, s]), FfCertificate::Nested);
        path.push(factor(&u.ambient, &[0]), FfCertificate::Nested);
    }
    Ok(path)
}

/// Witness for `d(u, h(q(u))) ≤ 3`.
pub fn hq_path(u: &FFVertex) -> Result<WitnessPath, ComplexError> {
    descend_to_first(u)
}

/// Witness that `u` is within 3 of `h(q(u))`, an `h`-image.
pub fn density_path(u: &FFVertex) -> Result<(FBVertex, WitnessPath), ComplexError> {
    Ok((q_map(u), descend_to_first(u)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    HLipschitz,
    Hq,
    Density,
}

impl WitnessKind {
    pub fn bound(self) -> usize {
        match self {
            WitnessKind::HLipschitz => 4,
            WitnessKind::Hq | WitnessKind::Density => 3,
        }
    }
}

/// A self-contained, re-checkable distance witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<FBVertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<FBVertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<FbAdjacency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<FFVertex>,
    pub path: WitnessPath,
    pub length: usize,
    pub bound: usize,
}

impl Witness {
    pub fn h_lipschitz(
        a: &FBVertex,
        b: &FBVertex,
        cert: &FbAdjacency,
    ) -> Result<Witness, ComplexError> {
        let path = h_lipschitz_path(a, b, cert)?;
        Ok(Witness {
            kind: WitnessKind::HLipschitz,
            a: Some(a.clone()),
            b: Some(b.clone()),
            certificate: Some(cert.clone()),
            factor: None,
            length: path.length(),
            bound: WitnessKind::HLipschitz.bound(),
            path,
        })
    }

    pub fn factor_path(kind: WitnessKind, u: &FFVertex) -> Result<Witness, ComplexError> {
        let path = match kind {
            WitnessKind::Hq => hq_path(u)?,
            WitnessKind::Density => density_path(u)?.1,
            WitnessKind::HLipschitz => {
                return Err(ComplexError::InvalidCertificate(
                    "h-lipschitz witnesses need two bases".into(),
                ))
            }
        };
        Ok(Witness {
            kind,
            a: None,
            b: None,
            certificate: None,
            factor: Some(u.clone()),
            length: path.length(),
            bound: kind.bound(),
            path,
        })
    }

    /// Recomputes endpoints, certificates and the length from scratch.
    pub fn verify(&self) -> Result<(), ComplexError> {
        self.path.validate()?;
        let bad = |m: &str| Err(ComplexError::InvalidCertificate(m.into()));
        let (source, target) = match self.kind {
            WitnessKind::HLipschitz => {
                let (Some(a), Some(b), Some(c)) = (&self.a, &self.b, &self.certificate) else {
                    return bad("missing endpoints");
                };
                a.check()?;
                b.check()?;
                if !c.validate(a, b) {
                    return bad("adjacency certificate does not validate");
                }
                (h_map(a), h_map(b))
            }
            WitnessKind::Hq | WitnessKind::Density => {
                let Some(u) = &self.factor else {
                    return bad("missing factor");
                };
                (u.clone(), h_map(&q_map(u)))
            }
        };
        if self.path.first() != Some(&source) || self.path.last() != Some(&target) {
            return bad("path endpoints differ from the claimed ones");
        }
        let length = self.path.length();
        if length != self.length {
            return bad("stored length is wrong");
        }
        if length > self.bound || self.bound != self.kind.bound() {
            return bad("length exceeds the bound");
        }
        Ok(())
    }
}

/// `A_0 = b`, then `𝓑(Γ_i, T_i)` along the folding path with `T_i` the
/// breadth-first tree at the base `v_i`; the terminal rose reads off `X`.
pub fn folding_path_bases(b: &FBVertex) -> Result<Vec<FBVertex>, ComplexError> {
    let rank = rank_of(&b.basis)?;
    let start = make_foldable(&b.basis)?;
    let path = fold_graph(start.graph)?;
    let mut out = vec![b.clone()];
    let last = path.graphs.len() - 1;
    for (k, g) in path.graphs.iter().enumerate().skip(1) {
        let basis = if k == last && path.ends_at_rose(rank) {
            rank.reference_basis()
        } else {
            let v = g.base().ok_or(FoldError::NoBase)?;
            let t = g.spanning_tree(v)?;
            g.basis_from_tree(&t, v, rank)?
        };
        out.push(FBVertex { basis });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum HopStatus {
    Equivalent,
    Adjacent { certificate: FbAdjacency },
    Uncertified,
}

impl HopStatus {
    fn between(x: &FBVertex, y: &FBVertex) -> HopStatus {
        if fb_equivalent(x, y) {
            return HopStatus::Equivalent;
        }
        match shared_element(x, y) {
            Some(certificate) => HopStatus::Adjacent { certificate },
            None => HopStatus::Uncertified,
        }
    }

    pub fn is_certified(&self) -> bool {
        !matches!(self, HopStatus::Uncertified)
    }

    fn cost(&self) -> usize {
        usize::from(matches!(self, HopStatus::Adjacent { .. }))
    }

    /// Whether the claimed relation between `x` and `y` holds.
    pub fn holds(&self, x: &FBVertex, y: &FBVertex) -> bool {
        match self {
            HopStatus::Equivalent => fb_equivalent(x, y),
            HopStatus::Adjacent { certificate } => certificate.validate(x, y),
            HopStatus::Uncertified => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub source: FBVertex,
    pub target: FBVertex,
    pub chain: Vec<FBVertex>,
    /// `hops[k]` relates `chain[k]` and `chain[k + 1]`.
    pub hops: Vec<HopStatus>,
    /// `to_target[k]` relates `chain[k]` and the target.
    pub to_target: Vec<HopStatus>,
    /// Upper bound on `d_FB(source, target)` when every hop certifies.
    pub bound: Option<usize>,
}

impl ChainReport {
    pub fn all_hops_certified(&self) -> bool {
        self.hops.iter().all(HopStatus::is_certified)
    }

    pub fn within_one_of_target(&self) -> bool {
        self.to_target.iter().all(HopStatus::is_certified)
    }

    /// Re-checks every stored certificate and the reported bound.
    pub fn validate(&self) -> bool {
        let n = self.chain.len();
        let bound = self
            .all_hops_certified()
            .then(|| self.hops.iter().map(HopStatus::cost).sum());
        n > 0
            && self.hops.len() + 1 == n
            && self.to_target.len() == n
            && bound == self.bound
            && fb_equivalent(self.chain.last().expect("nonempty"), &self.target)
            && self
                .hops
                .iter()
                .zip(self.chain.windows(2))
                .all(|(h, w)| h.holds(&w[0], &w[1]))
            && self
                .to_target
                .iter()
                .zip(&self.chain)
                .all(|(h, v)| h.holds(v, &self.target))
    }
}

/// Walks the folding path of `b`, read in `a`'s coordinates: the actual
/// basis is `b` under `x_i ↦ a_i`, and the chain ends at `a`.
pub fn fb_chain_report(a: &FBVertex, b: &FBVertex) -> Result<ChainReport, ComplexError> {
    if a.rank() != b.rank() {
        return Err(FoldError::WrongCount {
            expected: a.rank(),
            found: b.rank(),
        }
        .into());
    }
    let to_a = |v: &FBVertex| FBVertex {
        basis: v.basis.iter().map(|w| w.substitute(&a.basis)).collect(),
    };
    let source = to_a(b);
    if fb_equivalent(&source, a) {
        return Ok(ChainReport {
            source: source.clone(),
            target: a.clone(),
            chain: vec![source],
            hops: Vec::new(),
            to_target: vec![HopStatus::Equivalent],
            bound: Some(0),
        });
    }
    let chain: Vec<FBVertex> = folding_path_bases(b)?.iter().map(to_a).collect();
    let hops: Vec<HopStatus> = chain
        .windows(2)
        .map(|w| HopStatus::between(&w[0], &w[1]))
        .collect();
    let to_target = chain.iter().map(|v| HopStatus::between(v, a)).collect();
    let bound = hops
        .iter()
        .all(HopStatus::is_certified)
        .then(|| hops.iter().map(HopStatus::cost).sum());
    Ok(ChainReport {
        source,
        target: a.clone(),
        chain,
        hops,
        to_target,
        bound,
    })
}

/// A marking with one chosen edge; collapsing the others gives a one-edge
/// splitting of `F_N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingVertex {
    pub marking: MarkingGraph,
    pub edge: usize,
}

/// `τ(v) = [A_u]`, the vertex group at the origin of the chosen edge, as a
/// subset of a basis of `F_N` read from a tree that spans each side of the
/// edge separately.
pub fn tau(s: &SplittingVertex) -> Result<FFVertex, ComplexError> {
    // Every edge complement of a rank-one graph is a tree.
    if s.marking.betti_number() < 2 {
        return Err(ComplexError::TrivialVertexGroup);
    }
    let problems = s.marking.validate();
    if !problems.is_empty() {
        return Err(ComplexError::InvalidMarking(problems.join("; ")));
    }
    let chosen = s
        .marking
        .edge(s.edge)
        .ok_or(ComplexError::UnknownEdge(s.edge))?;
    let root = chosen.from;
    let (g, chains) = s.marking.realize_tracked();
    let cut = chains[&s.edge][0];
    let cut_inv = g.edge(cut).ok_or(GraphError::UnknownEdge(cut))?.inv;

    let mut tree = SpanningTree {
        root,
        edges: BTreeSet::new(),
        parent: BTreeMap::new(),
    };
    let mut seen = BTreeSet::from([root]);
    let grow = |from: VertexId, tree: &mut SpanningTree, seen: &mut BTreeSet<VertexId>| {
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let mut es: Vec<_> = g
                .outgoing(v)
                .filter(|e| e.id != cut && e.id != cut_inv)
                .collect();
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
    };
    grow(root, &mut tree, &mut seen);
    let side: BTreeSet<VertexId> = seen.clone();
    let separating = seen.len() < g.vertex_count();
    if separating {
        let far = g
            .edge(cut)
            .map(|e| e.to)
            .ok_or(GraphError::UnknownEdge(cut))?;
        tree.edges.insert(cut);
        tree.edges.insert(cut_inv);
        tree.parent.insert(far, cut);
        seen.insert(far);
        grow(far, &mut tree, &mut seen);
    }

    let non_tree: Vec<EdgeId> = g
        .edges()
        .filter(|e| !tree.contains(e.id) && e.label.is_positive())
        .map(|e| e.id)
        .collect();
    let subset: Vec<usize> = non_tree
        .iter()
        .enumerate()
        .filter(|&(_, &id)| {
            let e = g.edge(id).expect("edge listed above");
            id != cut && id != cut_inv && side.contains(&e.from) && side.contains(&e.to)
        })
        .map(|(k, _)| k)
        .collect();
    let n = non_tree.len();
    if subset.is_empty() {
        return Err(ComplexError::TrivialVertexGroup);
    }
    if subset.len() == n {
        return Err(ComplexError::ImproperVertexGroup);
    }
    let rank = Rank::new(n)?;
    let ambient = g.basis_from_tree(&tree, root, rank)?;
    if !is_basis(&ambient, rank)? {
        return Err(ComplexError::InvalidMarking(
            "edge labels do not identify the graph with F_N".into(),
        ));
    }
    Ok(FFVertex { ambient, subset })
}

/// An equivalent representative: shuffled, with random signs, conjugated by
/// a random word of length at most `conj_len`.
pub fn scramble<R: Rng>(rng: &mut R, v: &FBVertex, conj_len: usize) -> FBVertex {
    let n = v.rank();
    let max_index = v
        .basis
        .iter()
        .filter_map(FreeWord::max_index)
        .max()
        .unwrap_or(1);
    let g = FreeWord::from_letters(
        (0..rng.gen_range(0..=conj_len))
            .map(|_| Letter::new(rng.gen_range(1..=max_index), rng.gen_bool(0.5))),
    );
    let mut basis: Vec<FreeWord> = v
        .basis
        .iter()
        .map(|w| w.signed(rng.gen_bool(0.5)).conjugate_by(&g))
        .collect();
    basis.shuffle(rng);
    debug_assert_eq!(basis.len(), n);
    FBVertex { basis }
}

/// A random basis `a` and a basis `b` sharing the element `a_1` (possibly
/// moved, inverted and conjugated), not equivalent to `a`.
pub fn random_adjacent_pair<R: Rng>(rng: &mut R, moves: usize, rank: Rank) -> (FBVertex, FBVertex) {
    loop {
        let a = FBVertex {
            basis: random_basis_with(rng, moves, rank),
        };
        let s = random_basis_with_letter(rng, moves, rank);
        let b = FBVertex {
            basis: s.iter().map(|w| w.substitute(&a.basis)).collect(),
        };
        let b = scramble(rng, &b, 2);
        if !fb_equivalent(&a, &b) {
            return (a, b);
        }
    }
}
