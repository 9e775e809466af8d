//! Free factor systems: complexity, meets, invariance, and minimal
//! supporting systems found by Whitehead descent.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::automorphism::Automorphism;
use crate::subgroup::SubgroupGraph;
use crate::word::{generator_of, letter, CyclicWord, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeFactorError {
    #[error("no proper free factor system carries the input")]
    SupportIsWholeGroup,
    #[error("empty input")]
    EmptyInput,
}

/// Ranks in nonincreasing order, compared lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Complexity(pub Vec<usize>);

impl Complexity {
    pub fn new(mut ranks: Vec<usize>) -> Self {
        ranks.retain(|&r| r > 0);
        ranks.sort_unstable_by(|a, b| b.cmp(a));
        Complexity(ranks)
    }

    /// Proper means strictly below `(n)`.
    pub fn is_proper(&self, n: usize) -> bool {
        *self < Complexity(vec![n])
    }
}

/// Number of complexity values a chain of proper systems in rank `n` can
/// pass through: all nonincreasing sequences with sum at most `n`, except
/// `(n)` itself.
pub fn chain_bound(n: usize) -> usize {
    // partitions of k for k = 0..=n
    let mut p = vec![0usize; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for k in part..=n {
            p[k] += p[k - part];
        }
    }
    p.iter().sum::<usize>() - 1
}

/// Conjugacy classes of nontrivial free factors `[F_1], …, [F_k]`.
#[derive(Debug, Clone)]
pub struct FreeFactorSystem {
    rank: usize,
    factors: Vec<SubgroupGraph>,
    /// A basis of `F_n` in which every factor is spanned by a block of
    /// basis elements (up to conjugacy).
    realization: Option<(Vec<Word>, Vec<Vec<usize>>)>,
}

/// `φ(F_i) = conjugators[i] · F_{permutation[i]} · conjugators[i]⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariance {
    pub permutation: Vec<usize>,
    pub conjugators: Vec<Word>,
}

impl FreeFactorSystem {
    pub fn trivial(rank: usize) -> Self {
        FreeFactorSystem {
            rank,
            factors: Vec::new(),
            realization: Some(((0..rank).map(Word::generator).collect(), Vec::new())),
        }
    }

    /// Drops trivial subgroups and conjugacy duplicates.
    pub fn new(rank: usize, factors: Vec<SubgroupGraph>) -> Self {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for f in factors {
            if f.is_trivial() {
                continue;
            }
            let (core, _) = f.shaved();
            if seen.insert(core.conjugacy_key()) {
                out.push(core);
            }
        }
        FreeFactorSystem {
            rank,
            factors: out,
            realization: None,
        }
    }

    pub fn from_generators(rank: usize, gens: &[Vec<Word>]) -> Self {
        FreeFactorSystem::new(
            rank,
            gens.iter().map(|g| SubgroupGraph::fold(rank, g)).collect(),
        )
    }

    /// The system spanned by blocks of a basis.
    pub fn from_basis_blocks(basis: Vec<Word>, blocks: Vec<Vec<usize>>) -> Self {
        let rank = basis.len();
        let mut sys = FreeFactorSystem::from_generators(
            rank,
            &blocks
                .iter()
                .map(|b| b.iter().map(|&i| basis[i].clone()).collect())
                .collect::<Vec<_>>(),
        );
        sys.realization = Some((basis, blocks));
        sys
    }

    pub fn ambient_rank(&self) -> usize {
        self.rank
    }

    pub fn factors(&self) -> &[SubgroupGraph] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn realization(&self) -> Option<&(Vec<Word>, Vec<Vec<usize>>)> {
        self.realization.as_ref()
    }

    pub fn complexity(&self) -> Complexity {
        Complexity::new(self.factors.iter().map(SubgroupGraph::rank).collect())
    }

    pub fn is_proper(&self) -> bool {
        self.complexity().is_proper(self.rank)
    }

    /// Pairwise intersections of factors, up to conjugacy.
    pub fn meet(&self, other: &FreeFactorSystem) -> FreeFactorSystem {
        let mut parts = Vec::new();
        for a in &self.factors {
            for b in &other.factors {
                parts.extend(a.intersect(b).into_iter().map(|c| c.graph));
            }
        }
        FreeFactorSystem::new(self.rank, parts)
    }

    /// Whether some factor contains a conjugate of `w`.
    pub fn carries(&self, w: &Word) -> bool {
        w.is_empty() || self.factors.iter().any(|f| f.conjugate_into(w).is_some())
    }

    /// Whether some factor contains a conjugate of `h`.
    pub fn carries_subgroup(&self, h: &SubgroupGraph) -> bool {
        h.is_trivial() || self.factors.iter().any(|f| h.conjugate_subgroup_into(f).is_some())
    }

    /// `self ⊑ other`: every factor of `self` is conjugate into a factor of
    /// `other`.
    pub fn is_carried_by(&self, other: &FreeFactorSystem) -> bool {
        self.factors.iter().all(|f| other.carries_subgroup(f))
    }

    /// Same set of conjugacy classes.
    pub fn same_as(&self, other: &FreeFactorSystem) -> bool {
        let key = |s: &FreeFactorSystem| -> BTreeSet<_> {
            s.factors.iter().map(SubgroupGraph::conjugacy_key).collect()
        };
        key(self) == key(other)
    }

    /// Each factor is sent to a conjugate of a factor, bijectively.
    pub fn is_invariant(&self, phi: &Automorphism) -> Option<Invariance> {
        let mut permutation = Vec::new();
        let mut conjugators = Vec::new();
        for f in &self.factors {
            let img = SubgroupGraph::fold(
                self.rank,
                &f.generators().iter().map(|g| phi.apply(g)).collect::<Vec<_>>(),
            );
            let hit = self
                .factors
                .iter()
                .enumerate()
                .find_map(|(j, t)| img.conjugator(t).map(|g| (j, g)))?;
            // img = g · F_j · g⁻¹
            permutation.push(hit.0);
            conjugators.push(hit.1);
        }
        let distinct: HashSet<_> = permutation.iter().collect();
        (distinct.len() == permutation.len()).then_some(Invariance {
            permutation,
            conjugators,
        })
    }
}

impl Serialize for FreeFactorSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let gens: Vec<Vec<Word>> = self.factors.iter().map(SubgroupGraph::generators).collect();
        gens.serialize(s)
    }
}

/// Whitehead automorphism with multiplier `a`: a generator `x ≠ a^{±1}`
/// becomes `x a` if `x ∈ set`, `a⁻¹ x` if `x⁻¹ ∈ set`, both if both.
pub fn whitehead_automorphism(rank: usize, a: Letter, set: &[Letter]) -> Automorphism {
    let build = |m: Letter| -> Vec<Word> {
        (0..rank)
            .map(|g| {
                let x = letter(g, true);
                if generator_of(m) == g {
                    return Word::generator(g);
                }
                let mut raw = Vec::new();
                if set.contains(&-x) {
                    raw.push(-m);
                }
                raw.push(x);
                if set.contains(&x) {
                    raw.push(m);
                }
                Word::reduce(raw)
            })
            .collect()
    };
    Automorphism::validate(build(a), build(-a)).expect("Whitehead moves are invertible")
}

/// All Whitehead automorphisms of the second kind in a fixed order.
pub fn whitehead_moves(rank: usize) -> Vec<Automorphism> {
    let mut out = Vec::new();
    for g in 0..rank {
        for a in [letter(g, true), letter(g, false)] {
            let others: Vec<Letter> = (0..rank)
                .filter(|&h| h != g)
                .flat_map(|h| [letter(h, true), letter(h, false)])
                .collect();
            for mask in 1u32..(1 << others.len()) {
                let set: Vec<Letter> = others
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &l)| l)
                    .collect();
                out.push(whitehead_automorphism(rank, a, &set));
            }
        }
    }
    out
}

fn total_cyclic_len(ws: &[CyclicWord]) -> usize {
    ws.iter().map(CyclicWord::len).sum()
}

/// Greedy descent on total cyclic length. Returns the reduced classes and
/// `φ` with `φ(ws[i]) = reduced[i]` up to conjugacy.
pub fn whitehead_reduce(rank: usize, ws: &[CyclicWord]) -> (Vec<CyclicWord>, Automorphism) {
    let moves = whitehead_moves(rank);
    let mut cur = ws.to_vec();
    let mut phi = Automorphism::identity(rank);
    'descend: loop {
        let len = total_cyclic_len(&cur);
        for m in &moves {
            let next: Vec<CyclicWord> = cur.iter().map(|w| m.apply_to_class(w)).collect();
            if total_cyclic_len(&next) < len {
                cur = next;
                phi = m.compose(&phi);
                continue 'descend;
            }
        }
        return (cur, phi);
    }
}

/// Search budget for [`free_factor_support`].
#[derive(Debug, Clone, Copy)]
pub struct SupportSearch {
    pub depth: usize,
    pub max_states: usize,
}

impl Default for SupportSearch {
    fn default() -> Self {
        SupportSearch {
            depth: 6,
            max_states: 4000,
        }
    }
}

#[derive(Clone)]
struct State {
    items: Vec<SubgroupGraph>,
    phi: Automorphism,
}

fn shaved_items(items: &[SubgroupGraph]) -> Vec<SubgroupGraph> {
    items.iter().map(|h| h.shaved().0).collect()
}

fn size(items: &[SubgroupGraph]) -> usize {
    items.iter().map(SubgroupGraph::edge_count).sum()
}

fn state_key(items: &[SubgroupGraph]) -> Vec<Vec<(usize, Letter, usize)>> {
    let mut k: Vec<_> = items.iter().map(SubgroupGraph::conjugacy_key).collect();
    k.sort();
    k
}

fn apply_items(rank: usize, m: &Automorphism, items: &[SubgroupGraph]) -> Vec<SubgroupGraph> {
    items
        .iter()
        .map(|h| {
            let g: Vec<Word> = h.generators().iter().map(|w| m.apply(w)).collect();
            SubgroupGraph::fold(rank, &g).shaved().0
        })
        .collect()
}

/// Generator blocks from co-occurrence in the items' core labels.
fn support_blocks(rank: usize, items: &[SubgroupGraph]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..rank).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut used = vec![false; rank];
    for h in items {
        let labels: BTreeSet<usize> = h.edges().iter().map(|&(_, g, _)| g).collect();
        let mut it = labels.iter();
        if let Some(&first) = it.next() {
            used[first] = true;
            for &g in it {
                used[g] = true;
                let (a, b) = (find(&mut parent, first), find(&mut parent, g));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block: Vec<Option<usize>> = vec![None; rank];
    for g in 0..rank {
        if !used[g] {
            continue;
        }
        let r = find(&mut parent, g);
        match root_block[r] {
            Some(i) => blocks[i].push(g),
            None => {
                root_block[r] = Some(blocks.len());
                blocks.push(vec![g]);
            }
        }
    }
    blocks
}

fn blocks_complexity(blocks: &[Vec<usize>]) -> Complexity {
    Complexity::new(blocks.iter().map(Vec::len).collect())
}

/// The smallest free factor system found carrying every item up to
/// conjugacy. Sound always; minimal within the search budget.
pub fn free_factor_support(
    rank: usize,
    items: &[SubgroupGraph],
    search: SupportSearch,
) -> Result<FreeFactorSystem, FreeFactorError> {
    let items: Vec<SubgroupGraph> = shaved_items(items)
        .into_iter()
        .filter(|h| !h.is_trivial())
        .collect();
    if items.is_empty() {
        return Ok(FreeFactorSystem::trivial(rank));
    }
    let moves = whitehead_moves(rank);
    let descend = |mut st: State| -> State {
        'd: loop {
            let s = size(&st.items);
            for m in &moves {
                let next = apply_items(rank, m, &st.items);
                if size(&next) < s {
                    st = State {
                        items: next,
                        phi: m.compose(&st.phi),
                    };
                    continue 'd;
                }
            }
            return st;
        }
    };
    let mut best = descend(State {
        items,
        phi: Automorphism::identity(rank),
    });
    let mut best_blocks = support_blocks(rank, &best.items);
    // neutral moves: breadth-first over states of the same size
    let mut seen = HashSet::new();
    seen.insert(state_key(&best.items));
    let mut queue = VecDeque::from([(best.clone(), 0usize)]);
    while let Some((st, depth)) = queue.pop_front() {
        if depth >= search.depth || seen.len() >= search.max_states {
            continue;
        }
        let s = size(&st.items);
        for m in &moves {
            let next = apply_items(rank, m, &st.items);
            let ns = size(&next);
            if ns > s {
                continue;
            }
            let cand = State {
                items: next,
                phi: m.compose(&st.phi),
            };
            let cand = if ns < s { descend(cand) } else { cand };
            if !seen.insert(state_key(&cand.items)) {
                continue;
            }
            let blocks = support_blocks(rank, &cand.items);
            if size(&cand.items) < size(&best.items)
                || blocks_complexity(&blocks) < blocks_complexity(&best_blocks)
            {
                best = cand.clone();
                best_blocks = blocks;
                // restart the neutral search from the improved state
                queue.clear();
                queue.push_back((best.clone(), 0));
                break;
            }
            queue.push_back((cand, depth + 1));
        }
    }
    if !blocks_complexity(&best_blocks).is_proper(rank) {
        return Err(FreeFactorError::SupportIsWholeGroup);
    }
    // blocks live in the coordinates after φ; pull the basis back
    let inv = best.phi.inverse();
    let basis: Vec<Word> = (0..rank).map(|g| inv.apply(&Word::generator(g))).collect();
    Ok(FreeFactorSystem::from_basis_blocks(basis, best_blocks))
}

/// Support of a list of conjugacy classes.
pub fn free_factor_support_of_words(
    rank: usize,
    ws: &[CyclicWord],
    search: SupportSearch,
) -> Result<FreeFactorSystem, FreeFactorError> {
    if ws.is_empty() {
        return Err(FreeFactorError::EmptyInput);
    }
    let items: Vec<SubgroupGraph> = ws
        .iter()
        .map(|w| SubgroupGraph::fold(rank, &[w.to_word()]))
        .collect();
    free_factor_support(rank, &items, search)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn sys(rank: usize, gens: &[&[&str]]) -> FreeFactorSystem {
        FreeFactorSystem::from_generators(
            rank,
            &gens
                .iter()
                .map(|g| g.iter().map(|s| w(s)).collect())
                .collect::<Vec<_>>(),
        )
    }

    fn cw(s: &str) -> CyclicWord {
        s.parse().unwrap()
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(sys(3, &[&["a", "b"], &["c"]]).complexity(), Complexity(vec![2, 1]));
        assert!(Complexity::new(vec![5, 3, 3, 1]) > Complexity::new(vec![4; 6]));
        assert!(Complexity::new(vec![4]) > Complexity::new(vec![]));
        assert_eq!(FreeFactorSystem::trivial(3).complexity(), Complexity(vec![]));
    }

    #[test]
    fn chain_bound_counts_partitions() {
        // 1 + 1 + 2 + 3 partitions of 0..=3, minus the whole group
        assert_eq!(chain_bound(3), 6);
    }

    #[test]
    fn meet_examples() {
        let m = sys(3, &[&["a", "b"]]).meet(&sys(3, &[&["b", "c"]]));
        assert!(m.same_as(&sys(3, &[&["b"]])));
        let f = sys(3, &[&["a", "b"], &["c"]]);
        assert!(f.meet(&f).same_as(&f));
        assert!(sys(2, &[&["a"]]).meet(&sys(2, &[&["b"]])).is_empty());
    }

    #[test]
    fn invariance_examples() {
        let h = Automorphism::parse(2, "a,ba", "a,bA").unwrap();
        let inv = sys(2, &[&["a"]]).is_invariant(&h).unwrap();
        assert_eq!(inv.permutation, vec![0]);
        assert!(sys(2, &[&["b"]]).is_invariant(&h).is_none());
        let h2 = Automorphism::parse(3, "a,b,Babc", "a,b,BAbc").unwrap();
        assert!(sys(3, &[&["a", "b"]]).is_invariant(&h2).is_some());
    }

    #[test]
    fn whitehead_examples() {
        let (r, phi) = whitehead_reduce(2, &[cw("ab")]);
        assert_eq!(r[0].len(), 1);
        assert_eq!(phi.apply_to_class(&cw("ab")), r[0]);
        let (r, _) = whitehead_reduce(2, &[cw("a")]);
        assert_eq!(r, vec![cw("a")]);
        let (r, _) = whitehead_reduce(2, &[cw("abAB")]);
        assert_eq!(r[0].len(), 4);
    }

    #[test]
    fn support_examples() {
        let s = SupportSearch::default();
        let f = free_factor_support_of_words(2, &[cw("a")], s).unwrap();
        assert!(f.same_as(&sys(2, &[&["a"]])));
        let f = free_factor_support_of_words(2, &[cw("ab")], s).unwrap();
        assert!(f.same_as(&sys(2, &[&["ab"]])));
        assert_eq!(f.complexity(), Complexity(vec![1]));
        assert_eq!(
            free_factor_support_of_words(2, &[cw("abAB")], s).err(),
            Some(FreeFactorError::SupportIsWholeGroup)
        );
        // ⟨a⟩ together with b lies in ⟨a, b⟩ inside F_3
        let items = vec![
            SubgroupGraph::fold(3, &[w("a")]),
            SubgroupGraph::fold(3, &[w("b")]),
            SubgroupGraph::fold(3, &[w("ab")]),
        ];
        let f = free_factor_support(3, &items, s).unwrap();
        assert!(f.same_as(&sys(3, &[&["a", "b"]])));
    }
}
