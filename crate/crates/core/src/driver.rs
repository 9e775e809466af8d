//! The bouncing sequence: repeatedly replace the current tree by a limit
//! along one generator, enlarging the invariant free factor system when
//! the sequence degenerates, until a common fixed tree is certified.

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::automorphism::Automorphism;
use crate::free_factor::{free_factor_support, FreeFactorSystem, SupportSearch};
use crate::graph::{Edge, Filtration, Graph, MarkedGraph};
use crate::growth::{fit_query, GrowthConfig};
use crate::subgroup::SubgroupGraph;
use crate::tree::{FixedSearch, Fixedness, SimplicialTree};
use crate::triangular::TriangularMap;
use crate::word::{cyclic_words, Word};
use crate::{rational, Rational};

mod assemble;

pub use assemble::{assemble_filtered_graph, lift_to_aut, solvability_report, SolvabilityReport, StageReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KolchinError {
    #[error("no generators given")]
    EmptyInput,
    #[error("generator {generator} has rank {found}, expected {expected}")]
    RankMismatch { generator: usize, expected: usize, found: usize },
    #[error("generator {generator} is not unipotent on homology")]
    NotUnipotentOnHomology { generator: usize },
    #[error("free factor support search exhausted: {0}")]
    SupportSearchExhausted(String),
    #[error("sampling window exhausted: {0}")]
    WindowExhausted(String),
    #[error("realization failed: {0}")]
    RealizationFailed(String),
    #[error("restriction to a vertex group not certified: {0}")]
    RestrictionNotCertified(String),
}

/// Driver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KolchinConfig {
    pub window: usize,
    pub margin: usize,
    /// Degree bound for fits; `None` means the rank.
    pub d_max: Option<usize>,
    pub whitehead_depth: usize,
    pub marking_length_bound: usize,
    /// Full generator cycles before giving up.
    pub max_cycles: usize,
}

impl Default for KolchinConfig {
    fn default() -> Self {
        KolchinConfig {
            window: 40,
            margin: 5,
            d_max: None,
            whitehead_depth: 6,
            marking_length_bound: 8,
            max_cycles: 12,
        }
    }
}

impl KolchinConfig {
    fn growth(&self, rank: usize) -> GrowthConfig {
        GrowthConfig {
            window: self.window,
            margin: self.margin,
            d_max: self.d_max.unwrap_or(rank).max(1),
        }
    }

    fn support(&self) -> SupportSearch {
        SupportSearch {
            depth: self.whitehead_depth,
            ..SupportSearch::default()
        }
    }

    fn fixed_search(&self) -> FixedSearch {
        FixedSearch {
            word_bound: 3,
            witness_bound: self.marking_length_bound.min(6),
        }
    }
}

/// A generator together with an optional triangular representative.
#[derive(Debug, Clone)]
pub struct Generator {
    pub automorphism: Automorphism,
    pub triangular: Option<TriangularMap>,
}

impl Generator {
    /// Uses a triangular form on the standard rose when one exists.
    pub fn new(automorphism: Automorphism) -> Self {
        let triangular = rose_triangular(&automorphism);
        Generator {
            automorphism,
            triangular,
        }
    }
}

/// A representative `x_i ↦ v_i x_i u_i` on the standard rose for some
/// ordering of the generators, if the images have that shape.
pub fn rose_triangular(phi: &Automorphism) -> Option<TriangularMap> {
    let n = phi.rank();
    if n > 6 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        if let Some(f) = triangular_in_order(phi, &order) {
            return Some(f);
        }
        if !next_permutation(&mut order) {
            return None;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn triangular_in_order(phi: &Automorphism, order: &[usize]) -> Option<TriangularMap> {
    let n = phi.rank();
    let mut prefixes = vec![Word::identity(); n];
    let mut suffixes = vec![Word::identity(); n];
    for (pos, &g) in order.iter().enumerate() {
        let lower = &order[..pos];
        let img = &phi.images()[g];
        let letters = img.letters();
        let mut at = None;
        for (k, &l) in letters.iter().enumerate() {
            let h = crate::word::generator_of(l);
            if h == g {
                if l < 0 || at.is_some() {
                    return None;
                }
                at = Some(k);
            } else if !lower.contains(&h) {
                return None;
            }
        }
        let k = at?;
        prefixes[g] = Word::reduce(letters[..k].iter().copied());
        suffixes[g] = Word::reduce(letters[k + 1..].iter().copied());
    }
    let filtration = Filtration::new(order.to_vec()).ok()?;
    TriangularMap::from_words(MarkedGraph::standard_rose(n), filtration, &prefixes, &suffixes).ok()
}

/// Why an enlargement happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnlargeMode {
    /// A fixed hyperbolic suffix would stabilize an edge of the limit.
    EdgeStabilizer,
    /// A loop shrinks relative to the rest of the tree along the sequence.
    ShrinkingLoop,
}

#[derive(Debug, Clone)]
pub enum BounceOutcome {
    FixedAlready,
    Advanced { tree: SimplicialTree, power: usize },
    EnlargeFFS {
        witness: Vec<Word>,
        mode: EnlargeMode,
        system: FreeFactorSystem,
    },
    Blocked(KolchinError),
}

/// One line of the bounce log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryEntry {
    pub cycle: usize,
    pub generator: usize,
    pub outcome: String,
    pub complexity: Vec<usize>,
    pub elliptic_system: Vec<Vec<Word>>,
    pub min_vertex_distance: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct BounceState {
    pub rank: usize,
    pub generators: Vec<Generator>,
    pub system: FreeFactorSystem,
    pub tree: SimplicialTree,
    /// Words whose lengths are compared across cycles.
    pub tracked: Vec<Word>,
    /// Tracked lengths at the start of each cycle since the last
    /// enlargement, skipping the freshly realized tree.
    pub snapshots: Vec<Vec<Rational>>,
    /// Set once the tree has been advanced since the last enlargement.
    pub bounced: bool,
    pub history: Vec<HistoryEntry>,
    pub config: KolchinConfig,
}

impl BounceState {
    pub fn new(
        generators: Vec<Generator>,
        system: FreeFactorSystem,
        config: KolchinConfig,
    ) -> Result<Self, KolchinError> {
        let rank = system.ambient_rank();
        let tree = realization_tree(&system)?;
        let mut st = BounceState {
            rank,
            generators,
            system,
            tracked: Vec::new(),
            snapshots: Vec::new(),
            bounced: false,
            tree,
            history: Vec::new(),
            config,
        };
        st.reset_tracking();
        Ok(st)
    }

    fn reset_tracking(&mut self) {
        // one representative per inverse pair
        let mut t: Vec<Word> = cyclic_words(self.rank, 2)
            .iter()
            .filter(|c| c.inverse() <= **c)
            .map(|c| c.to_word())
            .collect();
        for q in self.tree.quotient_edges() {
            let m = q.marking.cyclic_reduce().0;
            if !m.is_empty() && !t.contains(&m) {
                t.push(m);
            }
        }
        self.tracked = t;
        self.snapshots.clear();
        self.bounced = false;
    }

    /// Records tracked lengths; returns `false` without recording while the
    /// tree is still the realization of the current system.
    pub fn snapshot(&mut self) -> Result<bool, KolchinError> {
        if !self.bounced {
            return Ok(false);
        }
        let s = self
            .tracked
            .iter()
            .map(|w| self.tree.translation_length(w))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| KolchinError::RealizationFailed(e.to_string()))?;
        self.snapshots.push(s);
        Ok(true)
    }

    pub fn fixed_by_all(&self) -> bool {
        let s = self.config.fixed_search();
        self.generators
            .iter()
            .all(|g| self.tree.fixed_certificate(&g.automorphism, s).is_some())
    }

    fn log(&mut self, cycle: usize, generator: usize, outcome: &str, detail: String) {
        let md = self.tree.min_vertex_distance().ok().map(|(d, _)| d.to_string());
        self.history.push(HistoryEntry {
            cycle,
            generator,
            outcome: outcome.into(),
            complexity: self.system.complexity().0,
            elliptic_system: self
                .tree
                .vertex_groups()
                .iter()
                .filter(|g| !g.is_trivial())
                .map(|g| g.generators())
                .collect(),
            min_vertex_distance: md,
            detail,
        });
    }

    /// Applies an outcome; returns `true` if the free factor system changed.
    pub fn apply(&mut self, outcome: BounceOutcome) -> Result<bool, KolchinError> {
        match outcome {
            BounceOutcome::FixedAlready => Ok(false),
            BounceOutcome::Advanced { tree, .. } => {
                self.tree = tree;
                self.bounced = true;
                Ok(false)
            }
            BounceOutcome::EnlargeFFS { system, .. } => {
                self.tree = realization_tree(&system)?;
                self.system = system;
                self.reset_tracking();
                Ok(true)
            }
            BounceOutcome::Blocked(e) => Err(e),
        }
    }
}

/// Tree whose elliptic subgroups are exactly the factors of `system`:
/// block petals collapsed at one vertex per block, the remaining basis
/// elements as loops at the first block's vertex.
pub fn realization_tree(system: &FreeFactorSystem) -> Result<SimplicialTree, KolchinError> {
    let n = system.ambient_rank();
    let fail = |e: String| KolchinError::RealizationFailed(e);
    let (basis, blocks) = system
        .realization()
        .cloned()
        .ok_or_else(|| fail("free factor system has no basis realization".into()))?;
    let nb = blocks.len().max(1);
    let mut block_of = vec![None; n];
    for (b, bl) in blocks.iter().enumerate() {
        for &i in bl {
            block_of[i] = Some(b);
        }
    }
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    let mut collapsed = Vec::new();
    let one = rational(1, 1);
    // block petals first, in block order
    for (b, bl) in blocks.iter().enumerate() {
        for &i in bl {
            edges.push(Edge { tail: b, head: b, length: one.clone() });
            labels.push(basis[i].clone());
            collapsed.push(true);
        }
    }
    for i in 0..n {
        if block_of[i].is_none() {
            edges.push(Edge { tail: 0, head: 0, length: one.clone() });
            labels.push(basis[i].clone());
            collapsed.push(false);
        }
    }
    let mut tree = Vec::new();
    for b in 1..nb {
        tree.push(edges.len());
        edges.push(Edge { tail: 0, head: b, length: one.clone() });
        labels.push(Word::identity());
        collapsed.push(false);
    }
    let graph = Graph::with_lengths(nb, edges).map_err(|e| fail(e.to_string()))?;
    let host = MarkedGraph::new(graph, n, 0, &tree, labels).map_err(|e| fail(e.to_string()))?;
    SimplicialTree::new(host, collapsed).map_err(|e| fail(e.to_string()))
}

fn probe_words(state: &BounceState) -> Vec<Word> {
    state.tracked.clone()
}

/// One step of the bouncing sequence along generator `i`.
pub fn bounce_step(state: &BounceState, i: usize) -> BounceOutcome {
    let g = &state.generators[i];
    let phi = &g.automorphism;
    let tree = &state.tree;
    if tree.fixed_certificate(phi, state.config.fixed_search()).is_some() {
        return BounceOutcome::FixedAlready;
    }
    let cfg = state.config.growth(state.rank);
    let mut degree = 0;
    let mut onset = 1;
    for w in probe_words(state) {
        match fit_query(tree, phi, &w, cfg) {
            Ok(f) => {
                degree = degree.max(f.degree);
                onset = onset.max(f.onset);
            }
            Err(e) => return BounceOutcome::Blocked(KolchinError::WindowExhausted(e.to_string())),
        }
    }
    if degree >= 1 {
        return enlarge_by_edge_stabilizer(state, i);
    }
    if let Some(out) = shrinking_loop(state) {
        return out;
    }
    let power = phi.power(onset as i64);
    match tree.precompose(&power) {
        Ok(t) => BounceOutcome::Advanced { tree: t, power: onset },
        Err(e) => BounceOutcome::Blocked(KolchinError::RealizationFailed(e.to_string())),
    }
}

/// Enlarged system if `items` are carried by a proper invariant system of
/// strictly larger complexity.
fn try_enlarge(state: &BounceState, items: Vec<SubgroupGraph>) -> Option<FreeFactorSystem> {
    let sys = free_factor_support(state.rank, &items, state.config.support()).ok()?;
    if !sys.is_proper() || sys.complexity() <= state.system.complexity() {
        return None;
    }
    if !state.system.is_carried_by(&sys) {
        return None;
    }
    state
        .generators
        .iter()
        .all(|g| sys.is_invariant(&g.automorphism).is_some())
        .then_some(sys)
}

fn nontrivial_groups(tree: &SimplicialTree) -> Vec<SubgroupGraph> {
    tree.vertex_groups()
        .iter()
        .filter(|g| !g.is_trivial())
        .cloned()
        .collect()
}

fn enlarge_by_edge_stabilizer(state: &BounceState, i: usize) -> BounceOutcome {
    let g = &state.generators[i];
    let phi = &g.automorphism;
    let tree = &state.tree;
    let n = state.rank;
    let mut candidates: Vec<Word> = Vec::new();
    if let Some(f) = &g.triangular {
        let h = f.host();
        for e in 0..f.edge_count() {
            for p in [f.suffix(e), f.prefix(e)] {
                if p.is_empty() || f.apply(p) != *p {
                    continue;
                }
                let w = h.path_word(p);
                if !candidates.contains(&w) {
                    candidates.push(w);
                }
            }
        }
    }
    // fixed conjugacy classes in order of length
    for c in cyclic_words(n, 3) {
        let w = c.to_word();
        if phi.apply_to_class(&c) == c && !candidates.contains(&w) {
            candidates.push(w);
        }
    }
    let base = nontrivial_groups(tree);
    for w in candidates {
        if !matches!(tree.translation_length(&w), Ok(l) if !l.is_zero()) {
            continue;
        }
        let mut items = base.clone();
        items.push(SubgroupGraph::fold(n, std::slice::from_ref(&w)));
        if let Some(system) = try_enlarge(state, items) {
            return BounceOutcome::EnlargeFFS {
                witness: vec![w],
                mode: EnlargeMode::EdgeStabilizer,
                system,
            };
        }
    }
    BounceOutcome::Blocked(KolchinError::SupportSearchExhausted(format!(
        "no invariant enlargement from fixed hyperbolic classes of generator {i}"
    )))
}

/// Tracked loops whose share of the total tracked length strictly
/// decreased over the last two cycles, smallest share first.
fn shrinking_words(state: &BounceState) -> Vec<Word> {
    let k = state.snapshots.len();
    if k < 3 {
        return Vec::new();
    }
    let ratios: Vec<Vec<Rational>> = state.snapshots[k - 3..]
        .iter()
        .map(|s| {
            let total: Rational = s.iter().cloned().sum();
            s.iter()
                .map(|x| if total.is_zero() { Rational::zero() } else { x / &total })
                .collect()
        })
        .collect();
    let mut out: Vec<(Rational, usize, Word)> = Vec::new();
    for (j, w) in state.tracked.iter().enumerate() {
        let (r0, r1, r2) = (&ratios[0][j], &ratios[1][j], &ratios[2][j]);
        if !r2.is_zero() && r0 > r1 && r1 > r2 {
            out.push((r2.clone(), w.len(), w.clone()));
        }
    }
    out.sort();
    out.into_iter().map(|(_, _, w)| w).collect()
}

fn shrinking_loop(state: &BounceState) -> Option<BounceOutcome> {
    let n = state.rank;
    let groups = nontrivial_groups(&state.tree);
    for w in shrinking_words(state) {
        let letters = w.letters();
        for (vi, v) in groups.iter().enumerate() {
            for r in 0..letters.len() {
                let rot = Word::reduce(letters[r..].iter().chain(&letters[..r]).copied());
                let mut gens = v.generators();
                gens.push(rot);
                let mut items: Vec<SubgroupGraph> = groups
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != vi)
                    .map(|(_, g)| g.clone())
                    .collect();
                items.push(SubgroupGraph::fold(n, &gens));
                if let Some(system) = try_enlarge(state, items) {
                    return Some(BounceOutcome::EnlargeFFS {
                        witness: vec![w],
                        mode: EnlargeMode::ShrinkingLoop,
                        system,
                    });
                }
            }
        }
        let mut items = groups.clone();
        items.push(SubgroupGraph::fold(n, std::slice::from_ref(&w)));
        if let Some(system) = try_enlarge(state, items) {
            return Some(BounceOutcome::EnlargeFFS {
                witness: vec![w],
                mode: EnlargeMode::ShrinkingLoop,
                system,
            });
        }
    }
    None
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct KolchinResult {
    pub rank: usize,
    pub system: FreeFactorSystem,
    /// Common fixed tree with trivial edge stabilizers.
    pub fixed_tree: SimplicialTree,
    pub graph: MarkedGraph,
    pub filtration: Filtration,
    /// One triangular representative per generator on `graph`.
    pub lifts: Vec<TriangularMap>,
    /// Lifts to `Aut(F_n)` fixing an edge of the one-edge-orbit collapse.
    pub aut_lifts: Vec<Automorphism>,
    pub solvability: SolvabilityReport,
    pub history: Vec<HistoryEntry>,
}

/// `⌊3n/2⌋ − 1` for `n > 1`, and 1 for `n = 1`.
pub fn edge_bound(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        3 * n / 2 - 1
    }
}

fn check_generators(rank: usize, gens: &[Automorphism]) -> Result<(), KolchinError> {
    for (i, g) in gens.iter().enumerate() {
        if g.rank() != rank {
            return Err(KolchinError::RankMismatch {
                generator: i,
                expected: rank,
                found: g.rank(),
            });
        }
        if !g.abelianization().is_unipotent() {
            return Err(KolchinError::NotUnipotentOnHomology { generator: i });
        }
    }
    Ok(())
}

/// Bounces until every generator fixes the current tree.
pub fn find_fixed_tree(state: &mut BounceState) -> Result<(), KolchinError> {
    let mut cycle = 0;
    let bound = crate::free_factor::chain_bound(state.rank);
    let mut enlargements = 0;
    loop {
        if state.fixed_by_all() {
            state.log(cycle, 0, "Fixed", "tree fixed by every generator".into());
            return Ok(());
        }
        if cycle >= state.config.max_cycles {
            return Err(KolchinError::WindowExhausted(format!(
                "no fixed tree after {cycle} cycles"
            )));
        }
        state.snapshot()?;
        for i in 0..state.generators.len() {
            let out = bounce_step(state, i);
            let (name, detail) = match &out {
                BounceOutcome::FixedAlready => ("FixedAlready", String::new()),
                BounceOutcome::Advanced { power, .. } => ("Advanced", format!("power {power}")),
                BounceOutcome::EnlargeFFS { witness, mode, system } => (
                    "EnlargeFFS",
                    format!(
                        "{mode:?} witness {} complexity {:?}",
                        witness.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
                        system.complexity().0
                    ),
                ),
                BounceOutcome::Blocked(e) => ("Blocked", e.to_string()),
            };
            let changed = state.apply(out)?;
            state.log(cycle, i, name, detail);
            if changed {
                enlargements += 1;
                assert!(enlargements <= bound, "complexity chain exceeded its bound");
                break;
            }
        }
        cycle += 1;
    }
}

/// Full pipeline: fixed tree, recursive assembly of a filtered graph and
/// triangular lifts for every generator.
pub fn run(rank: usize, generators: Vec<Generator>, config: KolchinConfig) -> Result<KolchinResult, KolchinError> {
    run_from(rank, generators, FreeFactorSystem::trivial(rank), config)
}

pub fn run_from(
    rank: usize,
    generators: Vec<Generator>,
    start: FreeFactorSystem,
    config: KolchinConfig,
) -> Result<KolchinResult, KolchinError> {
    let autos: Vec<Automorphism> = generators.iter().map(|g| g.automorphism.clone()).collect();
    check_generators(rank, &autos)?;
    if rank == 1 {
        return assemble::rank_one(autos.len(), config);
    }
    let mut state = BounceState::new(generators, start, config)?;
    find_fixed_tree(&mut state)?;
    let assembled = assemble_filtered_graph(&state.tree, &autos, config)?;
    let solvability = solvability_report(rank, &assembled.lifts);
    Ok(KolchinResult {
        rank,
        system: state.system.clone(),
        fixed_tree: state.tree.clone(),
        graph: assembled.graph,
        filtration: assembled.filtration,
        lifts: assembled.lifts,
        aut_lifts: assembled.aut_lifts,
        solvability,
        history: state.history,
    })
}

/// Final certificate: every generator fixes the tree.
pub fn certify_fixed(tree: &SimplicialTree, gens: &[Automorphism], search: FixedSearch) -> bool {
    gens.iter().all(|g| matches!(tree.is_fixed_by(g, search), Fixedness::Fixed { .. }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn gen(rank: usize, im: &str, inv: &str) -> Generator {
        Generator::new(Automorphism::parse(rank, im, inv).unwrap())
    }

    fn groups(t: &SimplicialTree) -> Vec<SubgroupGraph> {
        nontrivial_groups(t)
    }

    #[test]
    fn rose_triangular_detects_shape() {
        let h = Automorphism::parse(3, "a,b,Babc", "a,b,BAbc").unwrap();
        let f = rose_triangular(&h).unwrap();
        assert!(f.induced_automorphism().unwrap().same_outer_class(&h));
        let swap = Automorphism::parse(2, "b,a", "b,a").unwrap();
        assert!(rose_triangular(&swap).is_none());
    }

    #[test]
    fn single_dehn_twist() {
        let r = run(2, vec![gen(2, "a,ba", "a,bA")], KolchinConfig::default()).unwrap();
        let g = groups(&r.fixed_tree);
        assert_eq!(g.len(), 1);
        assert!(g[0].is_conjugate(&SubgroupGraph::fold(2, &[w("a")])));
        assert_eq!(r.fixed_tree.quotient_edges().len(), 1);
        assert_eq!(r.graph.graph().edge_count(), 2);
        assert!(r.history.iter().any(|h| h.outcome == "EnlargeFFS" && h.detail.contains("EdgeStabilizer")));
        assert_eq!(r.solvability.derived_length_bound, 1);
    }

    #[test]
    fn pair_needs_shrinking_loop() {
        let gens = vec![gen(3, "a,ba,c", "a,bA,c"), gen(3, "a,b,Babc", "a,b,BAbc")];
        let r = run(3, gens, KolchinConfig::default()).unwrap();
        for h in &r.history {
            eprintln!("{h:?}");
        }
        let g = groups(&r.fixed_tree);
        assert_eq!(g.len(), 1);
        assert!(g[0].is_conjugate(&SubgroupGraph::fold(3, &[w("a"), w("b")])));
        assert!(r.history.iter().any(|h| h.detail.contains("ShrinkingLoop")));
        assert!(r.graph.graph().edge_count() <= 3);
    }

    #[test]
    fn identity_is_fixed_immediately() {
        let r = run(3, vec![gen(3, "a,b,c", "a,b,c")], KolchinConfig::default()).unwrap();
        assert!(r.fixed_tree.vertex_groups().iter().all(|g| g.is_trivial()));
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.solvability.derived_length_bound, 0);
        assert!(r.lifts[0].is_identity());
    }

    #[test]
    fn rejects_non_unipotent() {
        let e = run(2, vec![gen(2, "b,a", "b,a")], KolchinConfig::default()).unwrap_err();
        assert_eq!(e, KolchinError::NotUnipotentOnHomology { generator: 0 });
    }

    #[test]
    fn lift_normalization() {
        let host = MarkedGraph::standard_rose(2);
        let t = SimplicialTree::new(host, vec![true, false]).unwrap();
        let h = Automorphism::parse(2, "a,ba", "a,bA").unwrap();
        let s = FixedSearch::default();
        assert_eq!(lift_to_aut(&t, &h, s).unwrap(), h);
        let twisted = Automorphism::inner(2, &w("b")).compose(&h);
        assert_eq!(lift_to_aut(&t, &twisted, s).unwrap(), h);
        assert!(lift_to_aut(&t, &Automorphism::identity(2), s).unwrap().is_identity());
    }
}
