//! Reduced words and conjugacy classes in a free group of finite rank.
//!
//! A letter is a nonzero `i32`: generator `g` (0-based) is `g + 1`, its
//! inverse is `-(g + 1)`. Textually generators are `a, b, c, ...` and their
//! inverses are the upper-case letters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Letter = i32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown generator symbol '{0}'")]
    UnknownSymbol(char),
    #[error("generator '{symbol}' is outside a basis of rank {rank}")]
    OutOfRank { symbol: char, rank: usize },
    #[error("basis rank must be at least 1")]
    EmptyBasis,
    #[error("duplicate generator name '{0}'")]
    DuplicateName(char),
}

#[inline]
pub fn letter(generator: usize, positive: bool) -> Letter {
    let l = generator as Letter + 1;
    if positive {
        l
    } else {
        -l
    }
}

#[inline]
pub fn generator_of(l: Letter) -> usize {
    (l.unsigned_abs() - 1) as usize
}

pub fn letter_char(l: Letter) -> char {
    let g = generator_of(l) as u8;
    if l > 0 {
        (b'a' + g) as char
    } else {
        (b'A' + g) as char
    }
}

pub fn parse_letter(c: char) -> Result<Letter, WordError> {
    match c {
        'a'..='z' => Ok(letter((c as u8 - b'a') as usize, true)),
        'A'..='Z' => Ok(letter((c as u8 - b'A') as usize, false)),
        _ => Err(WordError::UnknownSymbol(c)),
    }
}

/// An ordered list of generator names for a free group of rank `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    names: Vec<char>,
}

impl Basis {
    pub fn standard(rank: usize) -> Result<Self, WordError> {
        if rank == 0 {
            return Err(WordError::EmptyBasis);
        }
        if rank > 26 {
            return Err(WordError::OutOfRank { symbol: '?', rank });
        }
        Ok(Basis {
            names: (0..rank).map(|g| (b'a' + g as u8) as char).collect(),
        })
    }

    pub fn with_names(names: Vec<char>) -> Result<Self, WordError> {
        if names.is_empty() {
            return Err(WordError::EmptyBasis);
        }
        for (i, c) in names.iter().enumerate() {
            if names[..i].contains(c) {
                return Err(WordError::DuplicateName(*c));
            }
        }
        Ok(Basis { names })
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[char] {
        &self.names
    }

    /// Parses a word using the names of this basis; an upper-case name is the
    /// inverse of the corresponding lower-case one.
    pub fn parse(&self, s: &str) -> Result<Word, WordError> {
        let mut raw = Vec::with_capacity(s.len());
        for c in s.chars() {
            let lower = c.to_ascii_lowercase();
            let g = self
                .names
                .iter()
                .position(|&n| n == lower)
                .ok_or(WordError::UnknownSymbol(c))?;
            raw.push(letter(g, c.is_ascii_lowercase()));
        }
        Ok(Word::reduce(raw))
    }
}

/// A freely reduced word.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn generator(g: usize) -> Self {
        Word {
            letters: vec![letter(g, true)],
        }
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(raw: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in raw {
            debug_assert!(l != 0);
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    /// Parses with the standard alphabet, checking that every generator is
    /// below `rank`.
    pub fn parse_in_rank(s: &str, rank: usize) -> Result<Self, WordError> {
        let w: Word = s.parse()?;
        if let Some(&l) = w.letters.iter().find(|&&l| generator_of(l) >= rank) {
            return Err(WordError::OutOfRank {
                symbol: letter_char(l),
                rank,
            });
        }
        Ok(w)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|&l| generator_of(l)).max()
    }

    pub fn inverse(&self) -> Self {
        Word {
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    pub fn mul(&self, other: &Word) -> Word {
        // cancellation only happens at the seam
        let mut k = 0;
        let a = &self.letters;
        let b = &other.letters;
        while k < a.len() && k < b.len() && a[a.len() - 1 - k] == -b[k] {
            k += 1;
        }
        let mut letters = Vec::with_capacity(a.len() + b.len() - 2 * k);
        letters.extend_from_slice(&a[..a.len() - k]);
        letters.extend_from_slice(&b[k..]);
        Word { letters }
    }

    pub fn product<'a, I: IntoIterator<Item = &'a Word>>(words: I) -> Word {
        words
            .into_iter()
            .fold(Word::identity(), |acc, w| acc.mul(w))
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `g · self · g⁻¹`
    pub fn conjugate_by(&self, g: &Word) -> Word {
        g.mul(self).mul(&g.inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != -l,
            _ => true,
        }
    }

    /// Splits `self = conj · core · conj⁻¹` with `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == -self.letters[n - 1 - k] {
            k += 1;
        }
        (
            Word {
                letters: self.letters[k..n - k].to_vec(),
            },
            Word {
                letters: self.letters[..k].to_vec(),
            },
        )
    }

    pub fn cyclic_len(&self) -> usize {
        self.cyclic_reduce().0.len()
    }

    /// Returns `(root, exponent)` with `self = root^exponent` and `root` not
    /// a proper power. The identity returns `(ε, 0)`.
    pub fn root(&self) -> (Word, usize) {
        if self.is_empty() {
            return (Word::identity(), 0);
        }
        let (core, conj) = self.cyclic_reduce();
        let n = core.len();
        for p in 1..=n {
            if n % p == 0 && (p..n).all(|i| core.letters[i] == core.letters[i - p]) {
                let r = Word {
                    letters: core.letters[..p].to_vec(),
                };
                return (r.conjugate_by(&conj), n / p);
            }
        }
        unreachable!()
    }

    pub fn exponent_sums(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0i64; rank];
        for &l in &self.letters {
            v[generator_of(l)] += l.signum() as i64;
        }
        v
    }

    /// Substitutes `images[g]` for each generator `g`.
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for &l in &self.letters {
            let img = &images[generator_of(l)];
            if l > 0 {
                for &x in &img.letters {
                    push_reduced(&mut out, x);
                }
            } else {
                for &x in img.letters.iter().rev() {
                    push_reduced(&mut out, -x);
                }
            }
        }
        Word { letters: out }
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.letters.starts_with(&prefix.letters)
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&-l) {
        out.pop();
    } else {
        out.push(l);
    }
}

impl FromStr for Word {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(parse_letter)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word::reduce(raw))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A conjugacy class, stored as its lexicographically least cyclic rotation.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    letters: Vec<Letter>,
}

impl CyclicWord {
    pub fn new(w: &Word) -> Self {
        let (core, _) = w.cyclic_reduce();
        let n = core.letters.len();
        if n == 0 {
            return CyclicWord::default();
        }
        let best = (0..n)
            .map(|r| {
                let mut v = core.letters[r..].to_vec();
                v.extend_from_slice(&core.letters[..r]);
                v
            })
            .min()
            .unwrap();
        CyclicWord { letters: best }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn to_word(&self) -> Word {
        Word {
            letters: self.letters.clone(),
        }
    }

    pub fn inverse(&self) -> Self {
        CyclicWord::new(&self.to_word().inverse())
    }

    /// If `other` is a rotation of `self`, returns `s` with
    /// `other = s⁻¹ · self · s` as words.
    pub fn rotation_to(a: &Word, b: &Word) -> Option<Word> {
        if a.len() != b.len() {
            return None;
        }
        let n = a.len();
        if n == 0 {
            return Some(Word::identity());
        }
        (0..n)
            .find(|&r| (0..n).all(|i| a.letters[(r + i) % n] == b.letters[i]))
            .map(|r| Word {
                letters: a.letters[..r].to_vec(),
            })
    }
}

impl From<&Word> for CyclicWord {
    fn from(w: &Word) -> Self {
        CyclicWord::new(w)
    }
}

impl FromStr for CyclicWord {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(CyclicWord::new(&s.parse()?))
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self)
    }
}

impl Serialize for CyclicWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CyclicWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All reduced words of length at most `max_len` over `rank` generators, in
/// shortlex order.
pub fn reduced_words(rank: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in 0..rank {
                for pos in [true, false] {
                    let l = letter(g, pos);
                    if w.letters.last() == Some(&-l) {
                        continue;
                    }
                    let mut v = w.letters.clone();
                    v.push(l);
                    next.push(Word { letters: v });
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Conjugacy classes (nontrivial) of cyclic length at most `max_len`.
pub fn cyclic_words(rank: usize, max_len: usize) -> Vec<CyclicWord> {
    let mut set: Vec<CyclicWord> = reduced_words(rank, max_len)
        .iter()
        .filter(|w| !w.is_empty() && w.is_cyclically_reduced())
        .map(CyclicWord::new)
        .collect();
    set.sort();
    set.dedup();
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w("abB").to_string(), "a");
        assert!(w("aA").is_empty());
        assert_eq!(w("bAab").to_string(), "bb");
    }

    #[test]
    fn unknown_symbol_rejected() {
        assert_eq!("a1".parse::<Word>(), Err(WordError::UnknownSymbol('1')));
        assert!(Word::parse_in_rank("abc", 2).is_err());
        let basis = Basis::with_names(vec!['x', 'y']).unwrap();
        assert_eq!(basis.parse("xYyX").unwrap(), Word::identity());
        assert!(basis.parse("z").is_err());
        assert!(Basis::with_names(vec!['x', 'x']).is_err());
    }

    #[test]
    fn cyclic_reduce_examples() {
        let (c, conj) = w("Aba").cyclic_reduce();
        assert_eq!((c.to_string(), conj.to_string()), ("b".into(), "A".into()));
        let (c, conj) = w("ab").cyclic_reduce();
        assert_eq!((c.to_string(), conj.to_string()), ("ab".into(), "".into()));
    }

    #[test]
    fn commutator_cycle_is_already_minimal() {
        // brute force: minimal length over all conjugates by short words
        let x = w("BAba");
        let best = reduced_words(2, 4)
            .iter()
            .map(|g| x.conjugate_by(g).len())
            .min()
            .unwrap();
        let (c, conj) = x.cyclic_reduce();
        assert_eq!(c.len(), best);
        assert_eq!(c.to_string(), "BAba");
        assert!(conj.is_empty());
        assert_eq!(c.conjugate_by(&conj), x);
    }

    #[test]
    fn root_and_power() {
        let (r, e) = w("abab").root();
        assert_eq!((r.to_string(), e), ("ab".into(), 2));
        let (r, e) = w("cababC").root();
        assert_eq!((r.to_string(), e), ("cabC".into(), 2));
        assert_eq!(w("ab").pow(-2).to_string(), "BABA");
    }

    #[test]
    fn cyclic_word_canonical() {
        let a: CyclicWord = "bab".parse().unwrap();
        let b: CyclicWord = "abb".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "abb");
        let s = CyclicWord::rotation_to(&w("ab"), &w("ba")).unwrap();
        assert_eq!(s.inverse().mul(&w("ab")).mul(&s), w("ba"));
    }

    #[test]
    fn substitution_is_a_homomorphism() {
        let imgs = vec![w("a"), w("ba")];
        assert_eq!(w("Ba").substitute(&imgs).to_string(), "ABa");
    }

    #[test]
    fn conjugation_invariance_exhaustive() {
        let words = reduced_words(3, 3);
        let conj = reduced_words(3, 3);
        for x in &words {
            let c = CyclicWord::new(x);
            for g in &conj {
                assert_eq!(CyclicWord::new(&x.conjugate_by(g)), c);
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let x = w("abAB");
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, "\"abAB\"");
        assert_eq!(serde_json::from_str::<Word>(&s).unwrap(), x);
        assert_eq!(serde_json::to_string(&Word::identity()).unwrap(), "\"\"");
    }
}
