//! Eventually polynomial growth of translation lengths under iteration,
//! limit length functions and the grower / non-grower dichotomy.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::automorphism::Automorphism;
use crate::graph::EdgePath;
use crate::tree::{SimplicialTree, TreeError};
use crate::triangular::{TriangularError, TriangularMap};
use crate::word::{CyclicWord, Word};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrowthError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("no polynomial of degree <= {d_max} fits the window{}", query.as_ref().map(|q| format!(" for {q}")).unwrap_or_default())]
    NoPolynomialWithinWindow { d_max: usize, query: Option<Word> },
    #[error("suffix of edge {edge} is outside the supported pattern: {reason}")]
    HypothesisUnverified { edge: usize, reason: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Triangular(#[from] TriangularError),
}

/// Sampling parameters shared by every fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthConfig {
    /// Samples are taken for `k = 0..=window`.
    pub window: usize,
    pub margin: usize,
    pub d_max: usize,
}

impl GrowthConfig {
    pub fn new(d_max: usize) -> Self {
        GrowthConfig {
            window: 40,
            margin: 5,
            d_max,
        }
    }
}

/// A polynomial agreeing with the samples from `onset` on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrowthFit {
    pub onset: usize,
    pub degree: usize,
    /// Monomial coefficients in `k`, constant term first.
    #[serde(serialize_with = "ser_rationals")]
    pub coefficients: Vec<Rational>,
    /// Number of vanishing higher differences observed past the onset.
    pub confirmations: usize,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

impl GrowthFit {
    pub fn leading(&self) -> Rational {
        self.coefficients
            .last()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, k: i64) -> Rational {
        let k = Rational::from_integer(k.into());
        self.coefficients
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * &k + c)
    }
}

fn differences(s: &[Rational]) -> Vec<Rational> {
    s.windows(2).map(|w| &w[1] - &w[0]).collect()
}

/// Least degree `d ≤ d_max`, then least onset, such that the order `d+1`
/// differences vanish from the onset on with at least `margin` of them
/// observed.
pub fn fit_eventual_polynomial(
    samples: &[Rational],
    d_max: usize,
    margin: usize,
) -> Result<GrowthFit, GrowthError> {
    let needed = d_max + margin + 2;
    if samples.len() < needed {
        return Err(GrowthError::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    let mut diffs = vec![samples.to_vec()];
    for _ in 0..=d_max {
        let next = differences(diffs.last().unwrap());
        diffs.push(next);
    }
    for d in 0..=d_max {
        let high = &diffs[d + 1];
        let onset = high
            .iter()
            .rposition(|x| !x.is_zero())
            .map_or(0, |i| i + 1);
        let confirmations = high.len() - onset;
        if confirmations < margin {
            continue;
        }
        let newton: Vec<Rational> = (0..=d).map(|i| diffs[i][onset].clone()).collect();
        let shifted = newton_to_monomial(&newton);
        let coefficients = trim(shift_polynomial(&shifted, onset as i64));
        let degree = coefficients.len().saturating_sub(1);
        return Ok(GrowthFit {
            onset,
            degree,
            coefficients,
            confirmations,
        });
    }
    Err(GrowthError::NoPolynomialWithinWindow { d_max, query: None })
}

fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    if p.is_empty() {
        p.push(Rational::zero());
    }
    p
}

/// `Σ c_i · binom(x, i)` as monomial coefficients in `x`.
fn newton_to_monomial(newton: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); newton.len().max(1)];
    // binom(x, i) = x(x-1)...(x-i+1) / i!
    let mut falling = vec![Rational::one()];
    let mut fact = Rational::one();
    for (i, c) in newton.iter().enumerate() {
        if i > 0 {
            let mut next = vec![Rational::zero(); falling.len() + 1];
            let shift = Rational::from_integer(((i - 1) as i64).into());
            for (j, a) in falling.iter().enumerate() {
                next[j + 1] += a;
                next[j] -= a * &shift;
            }
            falling = next;
            fact *= Rational::from_integer((i as i64).into());
        }
        for (j, a) in falling.iter().enumerate() {
            out[j] += c * a / &fact;
        }
    }
    out
}

/// Coefficients of `p(x - s)` from those of `p(x)`.
fn shift_polynomial(p: &[Rational], s: i64) -> Vec<Rational> {
    let s = Rational::from_integer(s.into());
    let mut out = vec![Rational::zero(); p.len()];
    // Horner in (x - s)
    for c in p.iter().rev() {
        let mut next = vec![Rational::zero(); p.len()];
        for j in 0..p.len() {
            if j + 1 < p.len() {
                next[j + 1] += &out[j];
            }
            next[j] -= &out[j] * &s;
        }
        next[0] += c;
        out = next;
    }
    out
}

/// `ℓ_T(φ^k(w))` for `k = 0..=window`.
pub fn sample_lengths(
    tree: &SimplicialTree,
    phi: &Automorphism,
    w: &Word,
    window: usize,
) -> Result<Vec<Rational>, GrowthError> {
    let mut cur = w.cyclic_reduce().0;
    let mut out = Vec::with_capacity(window + 1);
    for k in 0..=window {
        out.push(tree.translation_length(&cur)?);
        if k < window {
            cur = phi.apply(&cur).cyclic_reduce().0;
        }
    }
    Ok(out)
}

pub fn fit_query(
    tree: &SimplicialTree,
    phi: &Automorphism,
    w: &Word,
    cfg: GrowthConfig,
) -> Result<GrowthFit, GrowthError> {
    let samples = sample_lengths(tree, phi, w, cfg.window)?;
    fit_eventual_polynomial(&samples, cfg.d_max, cfg.margin).map_err(|e| match e {
        GrowthError::NoPolynomialWithinWindow { d_max, .. } => GrowthError::NoPolynomialWithinWindow {
            d_max,
            query: Some(w.clone()),
        },
        other => other,
    })
}

/// Limit of `ℓ_T(φ^k ·) / k^d` on a finite set of classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthFunction {
    pub degree: usize,
    /// Normalized limit values keyed by cyclic word.
    #[serde(serialize_with = "ser_values")]
    pub values: BTreeMap<CyclicWord, Rational>,
    /// Fits of the queries.
    pub fits: BTreeMap<CyclicWord, GrowthFit>,
}

fn ser_values<S: serde::Serializer>(v: &BTreeMap<CyclicWord, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(v.iter().map(|(k, q)| (k.to_word().to_string(), q.to_string())))
}

impl LengthFunction {
    pub fn get(&self, w: &Word) -> Option<&Rational> {
        self.values.get(&CyclicWord::new(w))
    }

    pub fn elliptics(&self) -> Vec<CyclicWord> {
        self.values
            .iter()
            .filter(|(_, v)| v.is_zero())
            .map(|(k, _)| k.clone())
            .collect()
    }
}

/// Limit length function along `φ`, with degree taken over the queries and
/// the extra probe words together with their pairwise products.
pub fn limit_lengths(
    tree: &SimplicialTree,
    phi: &Automorphism,
    probes: &[Word],
    queries: &[Word],
    cfg: GrowthConfig,
) -> Result<LengthFunction, GrowthError> {
    let mut base: Vec<Word> = probes
        .iter()
        .chain(queries)
        .map(|w| w.cyclic_reduce().0)
        .filter(|w| !w.is_empty())
        .collect();
    base.sort();
    base.dedup();
    let mut all = base.clone();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            all.push(base[i].mul(&base[j]).cyclic_reduce().0);
        }
    }
    let mut fits: BTreeMap<CyclicWord, GrowthFit> = BTreeMap::new();
    let mut degree = 0;
    for w in all.iter().chain(queries) {
        let key = CyclicWord::new(w);
        if fits.contains_key(&key) {
            continue;
        }
        let fit = fit_query(tree, phi, w, cfg)?;
        degree = degree.max(fit.degree);
        fits.insert(key, fit);
    }
    let mut values = BTreeMap::new();
    let mut query_fits = BTreeMap::new();
    for q in queries {
        let key = CyclicWord::new(q);
        let fit = fits[&key].clone();
        let v = if fit.degree == degree {
            fit.leading()
        } else {
            Rational::zero()
        };
        values.insert(key.clone(), v);
        query_fits.insert(key, fit);
    }
    Ok(LengthFunction {
        degree,
        values,
        fits: query_fits,
    })
}

/// Words of the suffix loops of `f`, nontrivial ones only, with edge index.
pub fn suffix_words(f: &TriangularMap) -> Vec<(usize, Word)> {
    (0..f.edge_count())
        .filter(|&e| !f.suffix(e).is_empty())
        .map(|e| (e, f.host().path_word(f.suffix(e))))
        .collect()
}

fn probe_words(tree: &SimplicialTree, f: &TriangularMap) -> Vec<Word> {
    let mut probes: Vec<Word> = tree
        .quotient_edges()
        .iter()
        .map(|q| q.marking.clone())
        .collect();
    let h = f.host();
    probes.extend((0..f.edge_count()).map(|e| h.path_word(&h.edge_loop(e))));
    probes.extend(suffix_words(f).into_iter().map(|(_, w)| w));
    probes
}

/// Limit length function of `T` along the automorphism induced by `f`.
pub fn limit_length_function(
    tree: &SimplicialTree,
    f: &TriangularMap,
    queries: &[Word],
    cfg: GrowthConfig,
) -> Result<LengthFunction, GrowthError> {
    let phi = f.induced_automorphism()?;
    limit_lengths(tree, &phi, &probe_words(tree, f), queries, cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum TreeGrowth {
    NonGrower,
    Grower { edge: usize, suffix: Word, length: String },
}

fn is_fixed_path(f: &TriangularMap, p: &EdgePath) -> bool {
    f.apply(p) == *p
}

/// Grower test: some suffix hyperbolic in `T`, every suffix that moves
/// having all sampled iterates elliptic.
pub fn classify_tree_growth(
    tree: &SimplicialTree,
    f: &TriangularMap,
    cfg: GrowthConfig,
) -> Result<TreeGrowth, GrowthError> {
    if !f.is_ur() {
        let e = (0..f.edge_count()).find(|&e| !f.prefix(e).is_empty()).unwrap_or(0);
        return Err(GrowthError::HypothesisUnverified {
            edge: e,
            reason: "nontrivial prefix".into(),
        });
    }
    let phi = f.induced_automorphism()?;
    let mut witness = None;
    for (e, u) in suffix_words(f) {
        let fixed = is_fixed_path(f, f.suffix(e));
        if fixed {
            let len = tree.translation_length(&u)?;
            if !len.is_zero() && witness.is_none() {
                witness = Some(TreeGrowth::Grower {
                    edge: e,
                    suffix: u,
                    length: len.to_string(),
                });
            }
        } else {
            let samples = sample_lengths(tree, &phi, &u, cfg.window)?;
            if samples.iter().any(|x| !x.is_zero()) {
                return Err(GrowthError::HypothesisUnverified {
                    edge: e,
                    reason: "suffix moves and has a hyperbolic iterate".into(),
                });
            }
        }
    }
    Ok(witness.unwrap_or(TreeGrowth::NonGrower))
}

/// Fixed suffixes hyperbolic in `T`, deduplicated.
pub fn limit_edge_stabilizer_candidates(
    tree: &SimplicialTree,
    f: &TriangularMap,
) -> Result<Vec<Word>, GrowthError> {
    let mut out: Vec<Word> = Vec::new();
    for (e, u) in suffix_words(f) {
        if is_fixed_path(f, f.suffix(e))
            && !tree.translation_length(&u)?.is_zero()
            && !out.contains(&u)
        {
            out.push(u);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MarkedGraph;
    use crate::rational;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rational(x, 1)).collect()
    }

    #[test]
    fn fit_examples() {
        let lin: Vec<i64> = (1..=20).collect();
        let f = fit_eventual_polynomial(&ints(&lin), 2, 5).unwrap();
        assert_eq!((f.degree, f.onset, f.leading()), (1, 0, rational(1, 1)));
        let f = fit_eventual_polynomial(&ints(&[5; 12]), 2, 5).unwrap();
        assert_eq!(f.degree, 0);
        let quad: Vec<i64> = (0..20).map(|k| 1 + k + k * (k - 1) / 2).collect();
        let f = fit_eventual_polynomial(&ints(&quad), 3, 5).unwrap();
        assert_eq!((f.degree, f.leading()), (2, rational(1, 2)));
        for k in 0..20 {
            assert_eq!(f.eval(k), rational(quad[k as usize], 1));
        }
    }

    #[test]
    fn fit_with_late_onset() {
        let s: Vec<i64> = [9, 0].iter().copied().chain((2..20).map(|k| 2 * k)).collect();
        let f = fit_eventual_polynomial(&ints(&s), 2, 5).unwrap();
        assert_eq!(f.degree, 1);
        assert_eq!(f.onset, 2);
        assert_eq!(f.coefficients, vec![rational(0, 1), rational(2, 1)]);
    }

    #[test]
    fn fit_rejects_exponential() {
        let s: Vec<i64> = (0..20).map(|k| 1 << k).collect();
        assert!(matches!(
            fit_eventual_polynomial(&ints(&s), 3, 5),
            Err(GrowthError::NoPolynomialWithinWindow { .. })
        ));
        assert!(matches!(
            fit_eventual_polynomial(&ints(&[1, 2]), 3, 5),
            Err(GrowthError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn sampled_lengths_on_rose() {
        let t = SimplicialTree::free(MarkedGraph::standard_rose(2)).unwrap();
        let h = Automorphism::parse(2, "a,ba", "a,bA").unwrap();
        let s = sample_lengths(&t, &h, &w("b"), 10).unwrap();
        assert_eq!(s, ints(&(1..=11).collect::<Vec<_>>()));
        let t3 = SimplicialTree::free(MarkedGraph::standard_rose(3)).unwrap();
        let f = TriangularMap::rose_with_suffixes(3, &["", "a", "b"]).unwrap();
        let phi = f.induced_automorphism().unwrap();
        let fit = fit_query(&t3, &phi, &w("c"), GrowthConfig::new(3)).unwrap();
        assert_eq!((fit.degree, fit.leading()), (2, rational(1, 2)));
    }

    #[test]
    fn limit_examples() {
        let t = SimplicialTree::free(MarkedGraph::standard_rose(2)).unwrap();
        let f = TriangularMap::rose_with_suffixes(2, &["", "a"]).unwrap();
        let lf = limit_length_function(&t, &f, &[w("a"), w("b"), w("ab")], GrowthConfig::new(2)).unwrap();
        assert_eq!(lf.degree, 1);
        assert_eq!(lf.get(&w("a")), Some(&rational(0, 1)));
        assert_eq!(lf.get(&w("b")), Some(&rational(1, 1)));
        assert_eq!(lf.get(&w("ab")), Some(&rational(1, 1)));

        let id = TriangularMap::rose_with_suffixes(2, &["", ""]).unwrap();
        let lf = limit_length_function(&t, &id, &[w("ab"), w("b")], GrowthConfig::new(2)).unwrap();
        assert_eq!(lf.degree, 0);
        assert_eq!(lf.get(&w("ab")), Some(&rational(2, 1)));
    }

    fn t0() -> SimplicialTree {
        let host = MarkedGraph::rose(3, vec![w("a"), w("b"), w("bc")]).unwrap();
        SimplicialTree::new(host, vec![true, false, false]).unwrap()
    }

    #[test]
    fn nongrower_on_t0() {
        let h1 = TriangularMap::rose_with_suffixes(3, &["", "a", ""]).unwrap();
        let lf = limit_length_function(&t0(), &h1, &[w("b"), w("c")], GrowthConfig::new(3)).unwrap();
        assert_eq!(lf.degree, 0);
        assert_eq!(lf.get(&w("b")), Some(&rational(1, 1)));
        assert_eq!(lf.get(&w("c")), Some(&rational(2, 1)));
        assert_eq!(
            classify_tree_growth(&t0(), &h1, GrowthConfig::new(3)).unwrap(),
            TreeGrowth::NonGrower
        );
    }

    #[test]
    fn grower_and_candidates() {
        let t = SimplicialTree::free(MarkedGraph::standard_rose(2)).unwrap();
        let f = TriangularMap::rose_with_suffixes(2, &["", "a"]).unwrap();
        match classify_tree_growth(&t, &f, GrowthConfig::new(2)).unwrap() {
            TreeGrowth::Grower { suffix, .. } => assert_eq!(suffix, w("a")),
            other => panic!("{other:?}"),
        }
        assert_eq!(limit_edge_stabilizer_candidates(&t, &f).unwrap(), vec![w("a")]);
        let t3 = SimplicialTree::free(MarkedGraph::standard_rose(3)).unwrap();
        let g = TriangularMap::rose_with_suffixes(3, &["", "a", "a"]).unwrap();
        assert_eq!(limit_edge_stabilizer_candidates(&t3, &g).unwrap(), vec![w("a")]);
        let h1 = TriangularMap::rose_with_suffixes(3, &["", "a", ""]).unwrap();
        assert!(limit_edge_stabilizer_candidates(&t0(), &h1).unwrap().is_empty());
    }

    #[test]
    fn rescaling_scales_limit() {
        let t = SimplicialTree::free(MarkedGraph::standard_rose(2)).unwrap();
        let t2 = t.rescaled(&rational(3, 2)).unwrap();
        let f = TriangularMap::rose_with_suffixes(2, &["", "a"]).unwrap();
        let q = [w("b"), w("abb")];
        let a = limit_length_function(&t, &f, &q, GrowthConfig::new(2)).unwrap();
        let b = limit_length_function(&t2, &f, &q, GrowthConfig::new(2)).unwrap();
        for x in &q {
            assert_eq!(b.get(x).unwrap(), &(a.get(x).unwrap() * rational(3, 2)));
        }
    }
}
