//! Automorphisms of `F_n` given by generator images, with the inverse images
//! carried along as a certificate of bijectivity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::IntMatrix;
use crate::word::{CyclicWord, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomorphismError {
    #[error("expected {expected} images, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("images and inverse images are not mutually inverse (generator {generator})")]
    CompositionNotIdentity { generator: usize },
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AutomorphismJson", into = "AutomorphismJson")]
pub struct Automorphism {
    images: Vec<Word>,
    inverse_images: Vec<Word>,
}

#[derive(Serialize, Deserialize)]
struct AutomorphismJson {
    rank: usize,
    images: Vec<String>,
    inverse_images: Vec<String>,
}

impl TryFrom<AutomorphismJson> for Automorphism {
    type Error = AutomorphismError;
    fn try_from(j: AutomorphismJson) -> Result<Self, Self::Error> {
        let parse = |v: &[String]| -> Result<Vec<Word>, AutomorphismError> {
            v.iter()
                .map(|s| Word::parse_in_rank(s, j.rank).map_err(Into::into))
                .collect()
        };
        let images = parse(&j.images)?;
        let inverse = parse(&j.inverse_images)?;
        if images.len() != j.rank {
            return Err(AutomorphismError::RankMismatch {
                expected: j.rank,
                got: images.len(),
            });
        }
        Automorphism::validate(images, inverse)
    }
}

impl From<Automorphism> for AutomorphismJson {
    fn from(a: Automorphism) -> Self {
        AutomorphismJson {
            rank: a.rank(),
            images: a.images.iter().map(|w| w.to_string()).collect(),
            inverse_images: a.inverse_images.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl std::fmt::Debug for Automorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let imgs: Vec<String> = self.images.iter().map(|w| w.to_string()).collect();
        write!(f, "Automorphism[{}]", imgs.join(","))
    }
}

impl Automorphism {
    /// Accepts the pair only if substituting one list into the other
    /// returns every generator, in both orders.
    pub fn validate(images: Vec<Word>, inverse_images: Vec<Word>) -> Result<Self, AutomorphismError> {
        let n = images.len();
        if inverse_images.len() != n {
            return Err(AutomorphismError::RankMismatch {
                expected: n,
                got: inverse_images.len(),
            });
        }
        for w in images.iter().chain(&inverse_images) {
            if let Some(g) = w.max_generator() {
                if g >= n {
                    return Err(WordError::OutOfRank {
                        symbol: crate::word::letter_char(crate::word::letter(g, true)),
                        rank: n,
                    }
                    .into());
                }
            }
        }
        for g in 0..n {
            let x = Word::generator(g);
            if inverse_images[g].substitute(&images) != x || images[g].substitute(&inverse_images) != x {
                return Err(AutomorphismError::CompositionNotIdentity { generator: g });
            }
        }
        Ok(Automorphism {
            images,
            inverse_images,
        })
    }

    /// Parses comma separated image lists such as `"a,ba"`.
    pub fn parse(rank: usize, images: &str, inverse: &str) -> Result<Self, AutomorphismError> {
        let split = |s: &str| -> Result<Vec<Word>, AutomorphismError> {
            s.split(',')
                .map(|t| Word::parse_in_rank(t.trim(), rank).map_err(Into::into))
                .collect()
        };
        let imgs = split(images)?;
        if imgs.len() != rank {
            return Err(AutomorphismError::RankMismatch {
                expected: rank,
                got: imgs.len(),
            });
        }
        Automorphism::validate(imgs, split(inverse)?)
    }

    pub fn identity(rank: usize) -> Self {
        let ids: Vec<Word> = (0..rank).map(Word::generator).collect();
        Automorphism {
            images: ids.clone(),
            inverse_images: ids,
        }
    }

    /// `x ↦ γ x γ⁻¹`.
    pub fn inner(rank: usize, gamma: &Word) -> Self {
        let gi = gamma.inverse();
        Automorphism {
            images: (0..rank).map(|g| Word::generator(g).conjugate_by(gamma)).collect(),
            inverse_images: (0..rank).map(|g| Word::generator(g).conjugate_by(&gi)).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn inverse_images(&self) -> &[Word] {
        &self.inverse_images
    }

    pub fn apply(&self, w: &Word) -> Word {
        w.substitute(&self.images)
    }

    pub fn apply_inverse(&self, w: &Word) -> Word {
        w.substitute(&self.inverse_images)
    }

    pub fn apply_to_class(&self, w: &CyclicWord) -> CyclicWord {
        CyclicWord::new(&self.apply(&w.to_word()))
    }

    pub fn inverse(&self) -> Self {
        Automorphism {
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Automorphism) -> Self {
        Automorphism {
            images: other.images.iter().map(|w| self.apply(w)).collect(),
            inverse_images: self
                .inverse_images
                .iter()
                .map(|w| other.apply_inverse(w))
                .collect(),
        }
    }

    pub fn power(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Automorphism::identity(self.rank());
        for _ in 0..k.unsigned_abs() {
            out = base.compose(&out);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(g, w)| *w == Word::generator(g))
    }

    /// Column `j` holds the exponent sums of the image of generator `j`.
    pub fn abelianization(&self) -> IntMatrix {
        let n = self.rank();
        let mut m = IntMatrix::zero(n);
        for (j, w) in self.images.iter().enumerate() {
            for (i, e) in w.exponent_sums(n).into_iter().enumerate() {
                m.set(i, j, e.into());
            }
        }
        m
    }

    /// Some `γ` with `self = ι_γ ∘ other`, i.e. both represent the same
    /// outer class.
    pub fn outer_conjugator(&self, other: &Automorphism) -> Option<Word> {
        simultaneous_conjugator(&other.images, &self.images)
    }

    pub fn same_outer_class(&self, other: &Automorphism) -> bool {
        self.outer_conjugator(other).is_some()
    }

    /// Some `γ` with `self = ι_γ`.
    pub fn inner_witness(&self) -> Option<Word> {
        self.outer_conjugator(&Automorphism::identity(self.rank()))
    }
}

/// Finds `γ` with `γ · us[i] · γ⁻¹ = vs[i]` for every `i`.
pub fn simultaneous_conjugator(us: &[Word], vs: &[Word]) -> Option<Word> {
    if us.len() != vs.len() {
        return None;
    }
    let Some(first) = us.iter().position(|u| !u.is_empty()) else {
        return vs.iter().all(Word::is_empty).then(Word::identity);
    };
    let (u, v) = (&us[first], &vs[first]);
    let (c, p) = u.cyclic_reduce();
    let (d, q) = v.cyclic_reduce();
    let s = CyclicWord::rotation_to(&c, &d)?;
    // γ₀ u γ₀⁻¹ = v; all solutions are γ₀ r^k with r the root of u
    let g0 = q.mul(&s.inverse()).mul(&p.inverse());
    let (r, _) = u.root();
    let check = |g: &Word| us.iter().zip(vs).all(|(x, y)| x.conjugate_by(g) == *y);
    if check(&g0) {
        return Some(g0);
    }
    // the first pair not commuting with u pins down k; bound |k| by lengths
    let g0i = g0.inverse();
    for (x, y) in us.iter().zip(vs) {
        let target = y.conjugate_by(&g0i);
        if x.mul(&r) == r.mul(x) {
            if *x != target {
                return None;
            }
            continue;
        }
        let bound = (target.len() + x.len() + 2 * r.len() + 2) as i64;
        for k in 1..=bound {
            for kk in [k, -k] {
                let g = g0.mul(&r.pow(kk));
                if check(&g) {
                    return Some(g);
                }
            }
        }
        return None;
    }
    None
}
