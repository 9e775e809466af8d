//! Upper triangular graph maps `E ↦ v·E·u` on a filtered marked graph.
//!
//! Composition convention: `compose(f, g)` is `f ∘ g`, that is `g` is
//! applied first.

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::automorphism::{Automorphism, AutomorphismError};
use crate::graph::{EdgePath, Filtration, GraphError, MarkedGraph, OEdge};
use crate::word::Word;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TriangularError {
    #[error("prefix or suffix of edge {edge} leaves the lower filtration level")]
    PrefixSuffixNotLower { edge: usize },
    #[error("prefix or suffix of edge {edge} is not a closed path")]
    NotClosed { edge: usize },
    #[error("prefix or suffix of edge {edge} is based at the wrong vertex")]
    VertexMoved { edge: usize },
    #[error("prefix or suffix of edge {edge} is not tight")]
    NotTight { edge: usize },
    #[error("expected {expected} prefixes and suffixes")]
    WrongArity { expected: usize },
    #[error("maps live on different filtered graphs")]
    HostMismatch,
    #[error("edge {edge} has a nontrivial prefix")]
    NotUR { edge: usize },
    #[error("no splitting found for m ≤ {m_max}")]
    NoSplitWithinBound { m_max: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Automorphism(#[from] AutomorphismError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMap {
    host: MarkedGraph,
    filtration: Filtration,
    prefixes: Vec<EdgePath>,
    suffixes: Vec<EdgePath>,
    ur: bool,
}

/// `E_i · u_i · [f(u_i)] ⋯ [f^{k−1}(u_i)]` with its block decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenrayPrefix {
    pub edge: usize,
    pub path: EdgePath,
    pub blocks: Vec<EdgePath>,
    /// Set when the suffix is trivial and the ray is the edge itself.
    pub degenerate: bool,
}

/// `E_first · τ^power · E_last⁻¹` with `τ` a Nielsen path.
#[derive(Debug, Clone, PartialEq)]
pub struct Exceptional {
    pub first: usize,
    pub last: usize,
    pub power: i64,
    pub tau: EdgePath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub m: usize,
    pub pieces: Vec<EdgePath>,
}

/// Shortest closed path `ρ` with `p = ρ^k`.
pub fn path_root(p: &EdgePath) -> (EdgePath, usize) {
    let e = p.edges();
    let n = e.len();
    if n == 0 {
        return (p.clone(), 0);
    }
    let d = (1..=n)
        .find(|&d| n.is_multiple_of(d) && (d..n).all(|i| e[i] == e[i - d]))
        .unwrap();
    (EdgePath::unchecked(p.start(), p.start(), e[..d].to_vec()), n / d)
}

impl TriangularMap {
    pub fn validate(
        host: MarkedGraph,
        filtration: Filtration,
        prefixes: Vec<EdgePath>,
        suffixes: Vec<EdgePath>,
    ) -> Result<Self, TriangularError> {
        let g = host.graph();
        let m = g.edge_count();
        if prefixes.len() != m || suffixes.len() != m || filtration.len() != m {
            return Err(TriangularError::WrongArity { expected: m });
        }
        for e in 0..m {
            let oe = OEdge::fwd(e);
            for (p, at) in [(&prefixes[e], g.tail(oe)), (&suffixes[e], g.head(oe))] {
                if !p.is_closed() {
                    return Err(TriangularError::NotClosed { edge: e });
                }
                if p.start() != at {
                    return Err(TriangularError::VertexMoved { edge: e });
                }
                if !p.is_tight() {
                    return Err(TriangularError::NotTight { edge: e });
                }
                if !filtration.path_below(p, e) {
                    return Err(TriangularError::PrefixSuffixNotLower { edge: e });
                }
            }
        }
        let ur = prefixes.iter().all(EdgePath::is_empty);
        Ok(TriangularMap {
            host,
            filtration,
            prefixes,
            suffixes,
            ur,
        })
    }

    /// Builds prefixes and suffixes from words read through the marking at
    /// the relevant endpoints.
    pub fn from_words(
        host: MarkedGraph,
        filtration: Filtration,
        prefixes: &[Word],
        suffixes: &[Word],
    ) -> Result<Self, TriangularError> {
        let g = host.graph();
        let m = g.edge_count();
        if prefixes.len() != m || suffixes.len() != m {
            return Err(TriangularError::WrongArity { expected: m });
        }
        let mut ps = Vec::with_capacity(m);
        let mut us = Vec::with_capacity(m);
        for e in 0..m {
            let oe = OEdge::fwd(e);
            ps.push(host.word_to_loop_at(g.tail(oe), &prefixes[e])?);
            us.push(host.word_to_loop_at(g.head(oe), &suffixes[e])?);
        }
        TriangularMap::validate(host, filtration, ps, us)
    }

    /// Map on the rose with standard marking and filtration order
    /// `a < b < …`, given by `x_i ↦ x_i · suffix_i`.
    pub fn rose_with_suffixes(rank: usize, suffixes: &[&str]) -> Result<Self, TriangularError> {
        let host = MarkedGraph::standard_rose(rank);
        let sufs: Vec<Word> = suffixes
            .iter()
            .map(|s| Word::parse_in_rank(s, rank).map_err(AutomorphismError::from))
            .collect::<Result<_, _>>()?;
        TriangularMap::from_words(
            host,
            Filtration::identity(rank),
            &vec![Word::identity(); rank],
            &sufs,
        )
    }

    pub fn identity(host: MarkedGraph, filtration: Filtration) -> Self {
        let g = host.graph();
        let m = g.edge_count();
        let prefixes = (0..m).map(|e| EdgePath::trivial(g.tail(OEdge::fwd(e)))).collect();
        let suffixes = (0..m).map(|e| EdgePath::trivial(g.head(OEdge::fwd(e)))).collect();
        TriangularMap {
            host,
            filtration,
            prefixes,
            suffixes,
            ur: true,
        }
    }

    pub fn host(&self) -> &MarkedGraph {
        &self.host
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn prefix(&self, e: usize) -> &EdgePath {
        &self.prefixes[e]
    }

    pub fn suffix(&self, e: usize) -> &EdgePath {
        &self.suffixes[e]
    }

    pub fn prefixes(&self) -> &[EdgePath] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[EdgePath] {
        &self.suffixes
    }

    /// All prefixes trivial.
    pub fn is_ur(&self) -> bool {
        self.ur
    }

    pub fn edge_count(&self) -> usize {
        self.prefixes.len()
    }

    /// `f(E) = v · E · u`, tight by construction.
    pub fn edge_image(&self, e: usize) -> EdgePath {
        let g = self.host.graph();
        self.prefixes[e]
            .concat(&EdgePath::edge(g, OEdge::fwd(e)))
            .concat(&self.suffixes[e])
    }

    fn oriented_image(&self, oe: OEdge) -> EdgePath {
        let img = self.edge_image(oe.edge);
        if oe.forward {
            img
        } else {
            img.reverse()
        }
    }

    /// `[f(p)]`.
    pub fn apply(&self, p: &EdgePath) -> EdgePath {
        let mut out = EdgePath::trivial(p.start());
        for &oe in p.edges() {
            out.extend_tight(&self.oriented_image(oe));
        }
        out
    }

    /// `[f^k(p)]`.
    pub fn iterate(&self, p: &EdgePath, k: usize) -> EdgePath {
        let mut cur = p.tighten();
        for _ in 0..k {
            cur = self.apply(&cur);
        }
        cur
    }

    fn same_host(&self, other: &TriangularMap) -> bool {
        self.host == other.host && self.filtration == other.filtration
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &TriangularMap) -> Result<TriangularMap, TriangularError> {
        if !self.same_host(other) {
            return Err(TriangularError::HostMismatch);
        }
        let m = self.edge_count();
        let mut ps = Vec::with_capacity(m);
        let mut us = Vec::with_capacity(m);
        for e in 0..m {
            ps.push(self.apply(&other.prefixes[e]).concat_tight(&self.prefixes[e]));
            us.push(self.suffixes[e].concat_tight(&self.apply(&other.suffixes[e])));
        }
        TriangularMap::validate(self.host.clone(), self.filtration.clone(), ps, us)
    }

    /// The inverse in the group of triangular maps up to homotopy rel
    /// vertices, built edge by edge up the filtration.
    pub fn invert(&self) -> TriangularMap {
        let mut inv = TriangularMap::identity(self.host.clone(), self.filtration.clone());
        for &e in self.filtration.order() {
            // edges below e are already inverted, so inv acts correctly on v, u
            let v = inv.apply(&self.prefixes[e]).reverse();
            let u = inv.apply(&self.suffixes[e]).reverse();
            inv.prefixes[e] = v;
            inv.suffixes[e] = u;
        }
        inv.ur = inv.prefixes.iter().all(EdgePath::is_empty);
        inv
    }

    pub fn is_identity(&self) -> bool {
        self.prefixes.iter().chain(&self.suffixes).all(EdgePath::is_empty)
    }

    /// Induced automorphism of `F_n` at the base vertex, certified by the
    /// induced automorphism of the inverse map.
    pub fn induced_automorphism(&self) -> Result<Automorphism, TriangularError> {
        let inv = self.invert();
        let n = self.host.rank();
        let act = |f: &TriangularMap| -> Result<Vec<Word>, TriangularError> {
            (0..n)
                .map(|g| {
                    let l = self.host.word_to_loop(&Word::generator(g))?;
                    Ok(self.host.path_word(&f.apply(&l)))
                })
                .collect()
        };
        Ok(Automorphism::validate(act(self)?, act(&inv)?)?)
    }

    /// Longest stratum-respecting prefix of the eigenray of edge `e` with
    /// at least `min_len` edges.
    pub fn eigenray_prefix(&self, e: usize, min_len: usize) -> Result<EigenrayPrefix, TriangularError> {
        if !self.prefixes[e].is_empty() {
            return Err(TriangularError::NotUR { edge: e });
        }
        let g = self.host.graph();
        let mut path = EdgePath::edge(g, OEdge::fwd(e));
        let mut blocks = Vec::new();
        if self.suffixes[e].is_empty() {
            return Ok(EigenrayPrefix {
                edge: e,
                path,
                blocks,
                degenerate: true,
            });
        }
        let mut block = self.suffixes[e].clone();
        while path.len() < min_len {
            path = path.concat(&block);
            let next = self.apply(&block);
            blocks.push(block);
            block = next;
        }
        Ok(EigenrayPrefix {
            edge: e,
            path,
            blocks,
            degenerate: false,
        })
    }

    pub fn is_nielsen(&self, p: &EdgePath) -> bool {
        let t = p.tighten();
        self.apply(&t) == t
    }

    /// Root of the suffix of `e` when the prefix is trivial and the suffix
    /// is a nontrivial power of a Nielsen path.
    fn nielsen_suffix_root(&self, e: usize) -> Option<EdgePath> {
        if !self.prefixes[e].is_empty() || self.suffixes[e].is_empty() {
            return None;
        }
        let (root, _) = path_root(&self.suffixes[e]);
        self.is_nielsen(&root).then_some(root)
    }

    pub fn classify_exceptional(&self, p: &EdgePath) -> Option<Exceptional> {
        let es = p.edges();
        if es.len() < 2 {
            return None;
        }
        let (first, last) = (es[0], es[es.len() - 1]);
        if !first.forward || last.forward {
            return None;
        }
        let tau = self.nielsen_suffix_root(first.edge)?;
        let other = self.nielsen_suffix_root(last.edge)?;
        if other != tau && other != tau.reverse() {
            return None;
        }
        let middle = &es[1..es.len() - 1];
        let t = tau.edges();
        if !middle.len().is_multiple_of(t.len()) {
            return None;
        }
        let k = (middle.len() / t.len()) as i64;
        let power = if middle.iter().enumerate().all(|(i, oe)| *oe == t[i % t.len()]) {
            k
        } else {
            let r = tau.reverse();
            let rt = r.edges();
            if middle.iter().enumerate().all(|(i, oe)| *oe == rt[i % rt.len()]) {
                -k
            } else {
                return None;
            }
        };
        if first.edge == last.edge && power == 0 {
            return None;
        }
        Some(Exceptional {
            first: first.edge,
            last: last.edge,
            power,
            tau,
        })
    }

    fn greedy_pieces(&self, q: &EdgePath) -> Vec<EdgePath> {
        let g = self.host.graph();
        let es = q.edges();
        let mut pieces = Vec::new();
        let mut pos = 0;
        while pos < es.len() {
            let mut taken = 1;
            if es[pos].forward && self.nielsen_suffix_root(es[pos].edge).is_some() {
                for end in (pos + 2..=es.len()).rev() {
                    if es[end - 1].forward {
                        continue;
                    }
                    if self.classify_exceptional(&q.sub_path(g, pos, end)).is_some() {
                        taken = end - pos;
                        break;
                    }
                }
            }
            pieces.push(q.sub_path(g, pos, pos + taken));
            pos += taken;
        }
        pieces
    }

    /// Checks that iterating the pieces separately for `k = 1..=5` gives the
    /// iterate of the whole path with no cancellation at the seams.
    pub fn certify_splitting(&self, q: &EdgePath, pieces: &[EdgePath]) -> bool {
        let mut whole = q.clone();
        let mut parts: Vec<EdgePath> = pieces.to_vec();
        for _ in 1..=5 {
            whole = self.apply(&whole);
            parts = parts.iter().map(|p| self.apply(p)).collect();
            let mut cat: Vec<OEdge> = Vec::new();
            for p in &parts {
                if let (Some(&l), Some(&f)) = (cat.last(), p.edges().first()) {
                    if f == l.rev() {
                        return false;
                    }
                }
                cat.extend_from_slice(p.edges());
            }
            if cat != whole.edges() {
                return false;
            }
        }
        true
    }

    /// Smallest `m ≤ m_max` such that `[f^m(p)]` splits greedily into single
    /// edges and exceptional paths, with the splitting certificate.
    pub fn split(&self, p: &EdgePath, m_max: usize) -> Result<Splitting, TriangularError> {
        if let Some(e) = (0..self.edge_count()).find(|&e| !self.prefixes[e].is_empty()) {
            return Err(TriangularError::NotUR { edge: e });
        }
        let mut q = p.tighten();
        for m in 0..=m_max {
            if m > 0 {
                q = self.apply(&q);
            }
            let pieces = self.greedy_pieces(&q);
            if self.certify_splitting(&q, &pieces) {
                return Ok(Splitting { m, pieces });
            }
        }
        Err(TriangularError::NoSplitWithinBound { m_max })
    }

    /// `max len(f(E)) / len(E)`.
    pub fn lipschitz(&self) -> Rational {
        let g = self.host.graph();
        (0..self.edge_count())
            .map(|e| self.edge_image(e).metric_length(g) / g.length(e))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// `L(f) · cov − cov` for the lift to the universal cover.
    pub fn bcc_bound(&self) -> Rational {
        let cov = self.host.graph().total_length();
        self.lipschitz() * &cov - cov
    }

    /// Largest distance from `f(b)` to `[f(a), f(c)]` over vertices
    /// `a, b, c` of the universal cover with `b ∈ [a, c]` and `a, c` within
    /// `radius` of `b`.
    pub fn bcc_bruteforce(&self, radius: &Rational) -> Rational {
        let g = self.host.graph();
        let mut best = Rational::zero();
        for v in 0..g.vertex_count() {
            let mut images: Vec<(Vec<OEdge>, usize)> = Vec::new();
            for (i, oe) in g.edges_from(v).into_iter().enumerate() {
                let mut stack_img: Vec<OEdge> = Vec::new();
                self.enumerate_images(oe, i, radius.clone(), &mut stack_img, &mut images);
            }
            images.sort();
            for w in images.windows(2) {
                if w[0].1 == w[1].1 {
                    continue;
                }
                let mut common = Rational::zero();
                for (x, y) in w[0].0.iter().zip(&w[1].0) {
                    if x != y {
                        break;
                    }
                    common += g.length(x.edge);
                }
                if common > best {
                    best = common;
                }
            }
        }
        best
    }

    /// Depth-first enumeration of tight paths starting with `first`, pushing
    /// the tightened image of each.
    fn enumerate_images(
        &self,
        first: OEdge,
        tag: usize,
        budget: Rational,
        img: &mut Vec<OEdge>,
        out: &mut Vec<(Vec<OEdge>, usize)>,
    ) {
        let g = self.host.graph();
        let len = g.length(first.edge).clone();
        if len > budget {
            return;
        }
        let add = self.oriented_image(first);
        let mut removed: Vec<OEdge> = Vec::new();
        let mut pushed = 0usize;
        for &x in add.edges() {
            if pushed == 0 && img.last() == Some(&x.rev()) {
                removed.push(img.pop().unwrap());
            } else if pushed > 0 && img.last() == Some(&x.rev()) {
                img.pop();
                pushed -= 1;
            } else {
                img.push(x);
                pushed += 1;
            }
        }
        out.push((img.clone(), tag));
        let rest = budget - len;
        for next in g.edges_from(g.head(first)) {
            if next != first.rev() {
                self.enumerate_images(next, tag, rest.clone(), img, out);
            }
        }
        for _ in 0..pushed {
            img.pop();
        }
        while let Some(x) = removed.pop() {
            img.push(x);
        }
    }

    /// Bounded cancellation ratio for reporting.
    pub fn bcc_gap(&self, radius: &Rational) -> (Rational, Rational) {
        (self.bcc_bruteforce(radius), self.bcc_bound())
    }
}

#[derive(Serialize)]
struct TriangularJson {
    graph: MarkedGraph,
    filtration: Vec<usize>,
    prefixes: Vec<Vec<String>>,
    suffixes: Vec<Vec<String>>,
}

fn path_strings(p: &EdgePath) -> Vec<String> {
    p.edges().iter().map(|oe| format!("{oe:?}")).collect()
}

impl Serialize for TriangularMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TriangularJson {
            graph: self.host.clone(),
            filtration: self.filtration.order().to_vec(),
            prefixes: self.prefixes.iter().map(path_strings).collect(),
            suffixes: self.suffixes.iter().map(path_strings).collect(),
        }
        .serialize(s)
    }
}
