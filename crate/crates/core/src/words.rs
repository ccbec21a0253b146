//! Elements of the free group `F_N` over the reference basis `X = {x_1, ..., x_N}`.
//!
//! Words are always stored freely reduced. The text encoding used across the
//! CLI and JSON files writes `x_i` as the `i`-th lowercase letter and its
//! inverse as the matching uppercase letter, so `abA` is `x_1 x_2 x_1^-1`.
//! The empty word is written `1`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest rank the text encoding can express.
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("letter x{index} is outside the rank bound N = {rank}")]
    LetterOutOfRange { index: usize, rank: usize },
    #[error("invalid character {0:?} in word")]
    InvalidCharacter(char),
    #[error("rank must lie in 2..={MAX_RANK}, got {0}")]
    InvalidRank(usize),
}

/// Rank `N` of the ambient free group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Rank(usize);

impl Rank {
    pub fn new(n: usize) -> Result<Self, WordError> {
        if (2..=MAX_RANK).contains(&n) {
            Ok(Rank(n))
        } else {
            Err(WordError::InvalidRank(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// The reference basis `x_1, ..., x_N`.
    pub fn reference_basis(self) -> Vec<FreeWord> {
        (1..=self.0).map(FreeWord::generator).collect()
    }
}

impl Default for Rank {
    fn default() -> Self {
        Rank(3)
    }
}

impl TryFrom<usize> for Rank {
    type Error = WordError;
    fn try_from(n: usize) -> Result<Self, WordError> {
        Rank::new(n)
    }
}

impl From<Rank> for usize {
    fn from(r: Rank) -> usize {
        r.0
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A letter `x_i^{\pm 1}`.
///
/// The derived order is `x_1 < x_1^-1 < x_2 < x_2^-1 < ...`, which is the
/// order used for cyclic normal forms and for every deterministic tie-break
/// in the graph code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    index: u8,
    inverse: bool,
}

impl Letter {
    /// `x_index^sign`; `index` is 1-based.
    ///
    /// # Panics
    /// If `index` is zero or exceeds [`MAX_RANK`].
    pub fn new(index: usize, positive: bool) -> Self {
        assert!(
            (1..=MAX_RANK).contains(&index),
            "letter index {index} out of range"
        );
        Letter {
            index: index as u8,
            inverse: !positive,
        }
    }

    pub fn generator(index: usize) -> Self {
        Letter::new(index, true)
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn is_positive(self) -> bool {
        !self.inverse
    }

    pub fn sign(self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inv(self) -> Self {
        Letter {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    /// The same generator with positive sign.
    pub fn positive(self) -> Self {
        Letter {
            index: self.index,
            inverse: false,
        }
    }

    pub fn to_char(self) -> char {
        let base = if self.inverse { b'A' } else { b'a' };
        (base + self.index - 1) as char
    }

    pub fn from_char(c: char) -> Result<Self, WordError> {
        match c {
            'a'..='z' => Ok(Letter::new(c as usize - 'a' as usize + 1, true)),
            'A'..='Z' => Ok(Letter::new(c as usize - 'A' as usize + 1, false)),
            _ => Err(WordError::InvalidCharacter(c)),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl Serialize for Letter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.to_char())
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Letter::from_char(c).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom(format!(
                "expected a single letter, got {s:?}"
            ))),
        }
    }
}

/// A freely reduced word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FreeWord(Vec<Letter>);

/// Freely reduces a raw letter sequence, checking every letter against `rank`.
pub fn reduce<I>(seq: I, rank: Rank) -> Result<FreeWord, WordError>
where
    I: IntoIterator<Item = Letter>,
{
    let mut out: Vec<Letter> = Vec::new();
    for l in seq {
        if l.index() > rank.get() {
            return Err(WordError::LetterOutOfRange {
                index: l.index(),
                rank: rank.get(),
            });
        }
        push_reduced(&mut out, l);
    }
    Ok(FreeWord(out))
}

fn push_reduced(buf: &mut Vec<Letter>, l: Letter) {
    if buf.last() == Some(&l.inv()) {
        buf.pop();
    } else {
        buf.push(l);
    }
}

impl FreeWord {
    pub fn identity() -> Self {
        FreeWord(Vec::new())
    }

    pub fn generator(index: usize) -> Self {
        FreeWord(vec![Letter::generator(index)])
    }

    pub fn from_letter(l: Letter) -> Self {
        FreeWord(vec![l])
    }

    /// Freely reduces an arbitrary sequence without a rank check.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(seq: I) -> Self {
        let mut out = Vec::new();
        for l in seq {
            push_reduced(&mut out, l);
        }
        FreeWord(out)
    }

    /// Parses the text encoding and checks letters against `rank`.
    pub fn parse(text: &str, rank: Rank) -> Result<Self, WordError> {
        let w: FreeWord = text.parse()?;
        w.check_rank(rank)?;
        Ok(w)
    }

    pub fn check_rank(&self, rank: Rank) -> Result<(), WordError> {
        match self.max_index() {
            Some(i) if i > rank.get() => Err(WordError::LetterOutOfRange {
                index: i,
                rank: rank.get(),
            }),
            _ => Ok(()),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.iter().map(|l| l.index()).max()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    /// Single-letter words.
    pub fn as_letter(&self) -> Option<Letter> {
        match self.0.as_slice() {
            [l] => Some(*l),
            _ => None,
        }
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &FreeWord) -> FreeWord {
        let mut out = self.0.clone();
        for &l in &other.0 {
            push_reduced(&mut out, l);
        }
        FreeWord(out)
    }

    /// `self` or its inverse.
    pub fn signed(&self, positive: bool) -> FreeWord {
        if positive {
            self.clone()
        } else {
            self.inverse()
        }
    }

    /// `g^-1 · self · g`.
    pub fn conjugate_by(&self, g: &FreeWord) -> FreeWord {
        g.inverse().concat(self).concat(g)
    }

    pub fn pow(&self, k: i64) -> FreeWord {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = FreeWord::identity();
        for _ in 0..k.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// Applies the substitution `x_i -> images[i-1]`.
    pub fn substitute(&self, images: &[FreeWord]) -> FreeWord {
        let mut out = FreeWord::identity();
        for l in &self.0 {
            let img = &images[l.index() - 1];
            out = out.concat(&img.signed(l.is_positive()));
        }
        out
    }

    /// Splits `self = p · core · p^-1` with `core` cyclically reduced.
    pub fn cyclic_decomposition(&self) -> (FreeWord, FreeWord) {
        let w = &self.0;
        let mut k = 0;
        while 2 * k + 1 < w.len() && w[k] == w[w.len() - 1 - k].inv() {
            k += 1;
        }
        (
            FreeWord(w[..k].to_vec()),
            FreeWord(w[k..w.len() - k].to_vec()),
        )
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => self.len() == 1 || f != l.inv(),
            _ => true,
        }
    }

    pub fn cyclic_normal_form(&self) -> CyclicWord {
        let (_, core) = self.cyclic_decomposition();
        let k = minimal_rotation(&core.0);
        let mut letters = core.0;
        letters.rotate_left(k);
        CyclicWord(letters)
    }

    /// Length of the cyclically reduced core.
    pub fn cyclic_len(&self) -> usize {
        self.cyclic_decomposition().1.len()
    }

    /// Generator of the centralizer: `p · r · p^-1` where the cyclic core is
    /// `r^k` with `r` not a proper power. Identity for the empty word.
    pub fn root(&self) -> FreeWord {
        let (p, core) = self.cyclic_decomposition();
        let n = core.len();
        let period = (1..=n)
            .find(|&d| n % d == 0 && (0..n).all(|i| core.0[i] == core.0[(i + d) % n]))
            .unwrap_or(0);
        let r = FreeWord(core.0[..period].to_vec());
        p.concat(&r).concat(&p.inverse())
    }
}

/// Least rotation index under the letter order (quadratic; words are short).
fn minimal_rotation(w: &[Letter]) -> usize {
    let n = w.len();
    (0..n)
        .min_by(|&i, &j| {
            for k in 0..n {
                match w[(i + k) % n].cmp(&w[(j + k) % n]) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            i.cmp(&j)
        })
        .unwrap_or(0)
}

/// Concatenation `u · w`.
pub fn concat(u: &FreeWord, w: &FreeWord) -> FreeWord {
    u.concat(w)
}

pub fn invert(w: &FreeWord) -> FreeWord {
    w.inverse()
}

pub fn cyclic_normal_form(w: &FreeWord) -> CyclicWord {
    w.cyclic_normal_form()
}

/// True iff `u` and `w` are conjugate in `F_N`.
pub fn conjugate_related(u: &FreeWord, w: &FreeWord) -> bool {
    u.cyclic_normal_form() == w.cyclic_normal_form()
}

/// Some `g` with `g^-1 · u · g = w`, or `None` when `u` and `w` are not conjugate.
pub fn find_conjugator(u: &FreeWord, w: &FreeWord) -> Option<FreeWord> {
    let (p, u_core) = u.cyclic_decomposition();
    let (q, w_core) = w.cyclic_decomposition();
    if u_core.len() != w_core.len() {
        return None;
    }
    let n = u_core.len();
    // w_core = r^-1 · u_core · r where r is the length-k prefix of u_core.
    let offset = (0..n.max(1)).find(|&k| (0..n).all(|i| u_core.0[(i + k) % n] == w_core.0[i]))?;
    let r = FreeWord(u_core.0[..offset.min(n)].to_vec());
    let g = p.concat(&r).concat(&q.inverse());
    (u.conjugate_by(&g) == *w).then_some(g)
}

impl Mul for &FreeWord {
    type Output = FreeWord;
    fn mul(self, rhs: &FreeWord) -> FreeWord {
        self.concat(rhs)
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for FreeWord {
    type Err = WordError;
    fn from_str(text: &str) -> Result<Self, WordError> {
        let text = text.trim();
        if text == "1" || text.is_empty() {
            return Ok(FreeWord::identity());
        }
        let letters = text
            .chars()
            .map(Letter::from_char)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FreeWord::from_letters(letters))
    }
}

impl Serialize for FreeWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FreeWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Cyclically reduced, rotation-minimal representative of a conjugacy class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CyclicWord(Vec<Letter>);

impl CyclicWord {
    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_word(&self) -> FreeWord {
        FreeWord(self.0.clone())
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_word())
    }
}

/// Parses a comma-separated list of words, e.g. `"ab,b,c"`.
pub fn parse_word_list(text: &str, rank: Rank) -> Result<Vec<FreeWord>, WordError> {
    text.split(',').map(|t| FreeWord::parse(t, rank)).collect()
}

pub fn format_word_list(words: &[FreeWord]) -> String {
    words
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> FreeWord {
        s.parse().unwrap()
    }

    fn x(i: usize) -> Letter {
        Letter::generator(i)
    }

    #[test]
    fn reduce_cancels_and_is_idempotent() {
        let r3 = Rank::default();
        assert_eq!(
            reduce([x(1), x(1).inv()], r3).unwrap(),
            FreeWord::identity()
        );
        assert_eq!(reduce([x(1), x(2), x(2).inv(), x(1)], r3).unwrap(), w("aa"));
        let once = w("abCa");
        assert_eq!(reduce(once.letters().iter().copied(), r3).unwrap(), once);
    }

    #[test]
    fn reduce_rejects_out_of_range() {
        let err = reduce([x(4)], Rank::default()).unwrap_err();
        assert_eq!(err, WordError::LetterOutOfRange { index: 4, rank: 3 });
        assert!(FreeWord::parse("abd", Rank::default()).is_err());
        assert!("a?b".parse::<FreeWord>().is_err());
    }

    #[test]
    fn invert_examples() {
        assert_eq!(w("ab").inverse(), w("BA"));
        assert_eq!(FreeWord::identity().inverse(), FreeWord::identity());
    }

    #[test]
    fn concat_examples() {
        assert_eq!(concat(&w("a"), &w("A")), FreeWord::identity());
        assert_eq!(concat(&w("ab"), &w("Bc")), w("ac"));
        assert_eq!(concat(&FreeWord::identity(), &w("abc")), w("abc"));
    }

    #[test]
    fn cyclic_normal_form_examples() {
        assert_eq!(w("baB").cyclic_normal_form().to_word(), w("a"));
        assert_eq!(w("ba").cyclic_normal_form().to_word(), w("ab"));
        assert!(FreeWord::identity().cyclic_normal_form().is_empty());
        // x1 < x1^-1 < x2
        assert_eq!(w("bA").cyclic_normal_form().to_word(), w("Ab"));
    }

    #[test]
    fn conjugate_related_examples() {
        assert!(conjugate_related(&w("baB"), &w("a")));
        assert!(conjugate_related(&w("ab"), &w("ba")));
        assert!(!conjugate_related(&w("a"), &w("A")));
    }

    #[test]
    fn find_conjugator_examples() {
        assert_eq!(find_conjugator(&w("a"), &w("Bab")), Some(w("b")));
        assert_eq!(find_conjugator(&w("ab"), &w("ba")), Some(w("a")));
        assert_eq!(find_conjugator(&w("a"), &w("b")), None);
        assert_eq!(
            find_conjugator(&FreeWord::identity(), &FreeWord::identity()),
            Some(FreeWord::identity())
        );
    }

    #[test]
    fn root_of_powers() {
        assert_eq!(w("abab").root(), w("ab"));
        assert_eq!(w("cababC").root(), w("cabC"));
        assert_eq!(w("abc").root(), w("abc"));
    }

    #[test]
    fn text_encoding() {
        assert_eq!(w("abA").to_string(), "abA");
        assert_eq!(FreeWord::identity().to_string(), "1");
        assert_eq!(w("1"), FreeWord::identity());
        let list = parse_word_list("ab,b,c", Rank::default()).unwrap();
        assert_eq!(format_word_list(&list), "ab,b,c");
        let json = serde_json::to_string(&list).unwrap();
        assert_eq!(json, r#"["ab","b","c"]"#);
    }

    fn raw_letters(max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((1usize..=3, any::<bool>()), 0..max_len)
            .prop_map(|v| v.into_iter().map(|(i, s)| Letter::new(i, s)).collect())
    }

    fn word(max_len: usize) -> impl Strategy<Value = FreeWord> {
        raw_letters(max_len).prop_map(FreeWord::from_letters)
    }

    proptest! {
        #[test]
        fn reduce_idempotent_and_shortening(raw in raw_letters(24)) {
            let r = reduce(raw.iter().copied(), Rank::default()).unwrap();
            prop_assert!(r.len() <= raw.len());
            prop_assert!(r.letters().windows(2).all(|p| p[0] != p[1].inv()));
            prop_assert_eq!(reduce(r.letters().iter().copied(), Rank::default()).unwrap(), r);
        }

        #[test]
        fn invert_is_involution(u in word(16)) {
            prop_assert_eq!(u.inverse().inverse(), u.clone());
            prop_assert_eq!(u.concat(&u.inverse()), FreeWord::identity());
        }

        #[test]
        fn concat_associative(u in word(10), v in word(10), t in word(10)) {
            prop_assert_eq!(u.concat(&v).concat(&t), u.concat(&v.concat(&t)));
            prop_assert_eq!(FreeWord::identity().concat(&u), u.clone());
            prop_assert_eq!(u.concat(&FreeWord::identity()), u);
        }

        #[test]
        fn conjugacy_is_an_equivalence(u in word(8), g in word(6), h in word(6)) {
            let v = u.conjugate_by(&g);
            let t = v.conjugate_by(&h);
            prop_assert!(conjugate_related(&u, &u));
            prop_assert!(conjugate_related(&u, &v));
            prop_assert!(conjugate_related(&v, &u));
            prop_assert!(conjugate_related(&u, &t));
        }

        #[test]
        fn conjugator_is_verified(u in word(8), g in word(8), other in word(8)) {
            let v = u.conjugate_by(&g);
            let c = find_conjugator(&u, &v).expect("conjugates must be found");
            prop_assert_eq!(u.conjugate_by(&c), v);
            match find_conjugator(&u, &other) {
                Some(c) => prop_assert_eq!(u.conjugate_by(&c), other),
                None => prop_assert!(!conjugate_related(&u, &other)),
            }
        }
    }
}
