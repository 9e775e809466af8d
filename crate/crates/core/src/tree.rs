//! Simplicial `F_n`-trees with trivial edge stabilizers, presented as the
//! universal cover of a marked graph with a subgraph collapsed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::automorphism::Automorphism;
use crate::free_factor::FreeFactorSystem;
use crate::graph::{EdgePath, GraphError, MarkedGraph, OEdge};
use crate::subgroup::SubgroupGraph;
use crate::word::{cyclic_words, reduced_words, CyclicWord, Word};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("every edge is collapsed")]
    Degenerate,
    #[error("quotient has a valence-one vertex with trivial group")]
    NotMinimal,
    #[error("collapse mask has the wrong length")]
    WrongArity,
    #[error("the tree has no vertex with nontrivial stabilizer")]
    FewerThanTwoVertexGroups,
    #[error("subgroup is not carried to a conjugate of itself")]
    ConjugatorMissing,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One edge of the quotient graph of groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuotientEdge {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
    /// Word `t` such that the edge joins the vertex fixed by `V_from` to
    /// the vertex fixed by `t V_to t⁻¹`.
    pub marking: Word,
    #[serde(serialize_with = "ser_rational")]
    pub length: Rational,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

#[derive(Debug, Clone)]
pub struct SimplicialTree {
    host: MarkedGraph,
    collapsed: Vec<bool>,
    /// Component index of every host vertex.
    component: Vec<usize>,
    /// Representative host vertex of every component.
    reps: Vec<usize>,
    groups: Vec<SubgroupGraph>,
    edges: Vec<QuotientEdge>,
}

/// Outcome of [`SimplicialTree::is_fixed_by`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fixedness {
    /// `φ(V_c) = g_c⁻¹ V_c g_c` and `g_from · φ(t) · g_to⁻¹ = a · t · b`
    /// with `a ∈ V_from`, `b ∈ V_to` for every quotient edge.
    Fixed {
        conjugators: Vec<Word>,
        edge_witnesses: Vec<(Word, Word)>,
    },
    Refuted {
        witness: Word,
        before: Rational,
        after: Rational,
    },
    Inconclusive,
}

impl Fixedness {
    pub fn is_fixed(&self) -> bool {
        matches!(self, Fixedness::Fixed { .. })
    }
}

/// Bounds for the searches behind [`SimplicialTree::is_fixed_by`].
#[derive(Debug, Clone, Copy)]
pub struct FixedSearch {
    /// Length bound for conjugators at vertices with trivial group and for
    /// vertex group elements tried while propagating.
    pub word_bound: usize,
    /// Cyclic length bound for refutation witnesses.
    pub witness_bound: usize,
}

impl Default for FixedSearch {
    fn default() -> Self {
        FixedSearch {
            word_bound: 3,
            witness_bound: 6,
        }
    }
}

impl SimplicialTree {
    pub fn new(host: MarkedGraph, collapsed: Vec<bool>) -> Result<Self, TreeError> {
        let g = host.graph();
        if collapsed.len() != g.edge_count() {
            return Err(TreeError::WrongArity);
        }
        if collapsed.iter().all(|&c| c) {
            return Err(TreeError::Degenerate);
        }
        let comps = host.subgraph_components(&collapsed);
        let mut component = vec![0; g.vertex_count()];
        for (i, c) in comps.iter().enumerate() {
            for &v in c {
                component[v] = i;
            }
        }
        let reps: Vec<usize> = comps.iter().map(|c| c[0]).collect();
        let groups: Vec<SubgroupGraph> = reps
            .iter()
            .map(|&r| host.subgraph_group(&collapsed, r))
            .collect();
        // paths inside each component from the representative
        let inner = component_paths(&host, &collapsed, &component, &reps);
        let mut edges = Vec::new();
        for e in 0..g.edge_count() {
            if collapsed[e] {
                continue;
            }
            let oe = OEdge::fwd(e);
            let (t, h) = (g.tail(oe), g.head(oe));
            let path = inner[t]
                .concat(&EdgePath::edge(g, oe))
                .concat(&inner[h].reverse());
            edges.push(QuotientEdge {
                edge: e,
                from: component[t],
                to: component[h],
                marking: host.path_word(&path),
                length: g.length(e).clone(),
            });
        }
        let tree = SimplicialTree {
            host,
            collapsed,
            component,
            reps,
            groups,
            edges,
        };
        for c in 0..tree.reps.len() {
            let valence: usize = tree
                .edges
                .iter()
                .map(|q| (q.from == c) as usize + (q.to == c) as usize)
                .sum();
            if tree.groups[c].is_trivial() && valence <= 1 {
                return Err(TreeError::NotMinimal);
            }
        }
        Ok(tree)
    }

    /// The free tree: nothing collapsed.
    pub fn free(host: MarkedGraph) -> Result<Self, TreeError> {
        let m = host.graph().edge_count();
        SimplicialTree::new(host, vec![false; m])
    }

    pub fn host(&self) -> &MarkedGraph {
        &self.host
    }

    pub fn collapsed(&self) -> &[bool] {
        &self.collapsed
    }

    pub fn vertex_groups(&self) -> &[SubgroupGraph] {
        &self.groups
    }

    pub fn quotient_edges(&self) -> &[QuotientEdge] {
        &self.edges
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component[v]
    }

    /// Sum of the surviving edge lengths.
    pub fn covolume(&self) -> Rational {
        self.edges.iter().map(|q| q.length.clone()).sum()
    }

    /// Same tree with surviving lengths multiplied by `factor`.
    pub fn rescaled(&self, factor: &Rational) -> Result<Self, TreeError> {
        let lengths = self
            .host
            .graph()
            .edges()
            .iter()
            .map(|e| &e.length * factor)
            .collect();
        SimplicialTree::new(self.host.with_lengths(lengths)?, self.collapsed.clone())
    }

    /// Translation length of `w`: surviving length of the cyclically tight
    /// loop representing its conjugacy class.
    pub fn translation_length(&self, w: &Word) -> Result<Rational, TreeError> {
        let l = self.host.class_loop(w)?;
        let g = self.host.graph();
        Ok(l.edges()
            .iter()
            .filter(|oe| !self.collapsed[oe.edge])
            .map(|oe| g.length(oe.edge).clone())
            .sum())
    }

    /// The tree `T·φ`, with `ℓ_{T·φ}(w) = ℓ_T(φ(w))`.
    pub fn precompose(&self, phi: &Automorphism) -> Result<Self, TreeError> {
        let h = &self.host;
        let labels = h.labels().iter().map(|l| phi.apply_inverse(l)).collect();
        let host = MarkedGraph::new(h.graph().clone(), h.rank(), h.base(), &h.tree_edges(), labels)?;
        SimplicialTree::new(host, self.collapsed.clone())
    }

    /// Collapses every surviving edge except host edge `keep`.
    pub fn collapse_all_but(&self, keep: usize) -> Result<Self, TreeError> {
        let collapsed = (0..self.collapsed.len()).map(|e| e != keep).collect();
        SimplicialTree::new(self.host.clone(), collapsed)
    }

    pub fn class_length(&self, w: &CyclicWord) -> Result<Rational, TreeError> {
        self.translation_length(&w.to_word())
    }

    pub fn is_elliptic(&self, w: &Word) -> Result<bool, TreeError> {
        Ok(self.translation_length(w)?.is_zero())
    }

    pub fn elliptic_system(&self) -> FreeFactorSystem {
        FreeFactorSystem::new(self.host.rank(), self.groups.clone())
    }

    /// Nontrivial vertex groups.
    pub fn nontrivial_components(&self) -> Vec<usize> {
        (0..self.groups.len())
            .filter(|&c| !self.groups[c].is_trivial())
            .collect()
    }

    /// Decides whether `φ` acts on the tree by an equivariant isometry
    /// preserving every vertex and edge orbit.
    pub fn is_fixed_by(&self, phi: &Automorphism, search: FixedSearch) -> Fixedness {
        if let Some(f) = self.fixed_certificate(phi, search) {
            return f;
        }
        let n = self.host.rank();
        for c in cyclic_words(n, search.witness_bound) {
            let w = c.to_word();
            let (Ok(before), Ok(after)) =
                (self.translation_length(&w), self.translation_length(&phi.apply(&w)))
            else {
                continue;
            };
            if before != after {
                return Fixedness::Refuted {
                    witness: w,
                    before,
                    after,
                };
            }
        }
        Fixedness::Inconclusive
    }

    /// The certificate half of [`SimplicialTree::is_fixed_by`]: `Some` only
    /// with a [`Fixedness::Fixed`] certificate.
    pub fn fixed_certificate(&self, phi: &Automorphism, search: FixedSearch) -> Option<Fixedness> {
        let k = self.groups.len();
        let n = self.host.rank();
        let mut fixed_g: Vec<Option<Word>> = vec![None; k];
        for c in 0..k {
            let v = &self.groups[c];
            if v.is_trivial() {
                continue;
            }
            let img = SubgroupGraph::fold(
                n,
                &v.generators().iter().map(|g| phi.apply(g)).collect::<Vec<_>>(),
            );
            // img = g⁻¹ V g
            {
                let g = v.conjugator(&img)?;
                fixed_g[c] = Some(g)
            }
        }
        // candidate conjugators for trivial vertices come from propagation
        // along edges, with a bounded choice of vertex-group elements
        let mut order: Vec<usize> = Vec::new();
        let mut seen = vec![false; k];
        let root = (0..k).find(|&c| fixed_g[c].is_some()).unwrap_or(0);
        let mut roots = vec![root];
        roots.extend((0..k).filter(|&c| fixed_g[c].is_some() && c != root));
        for r in roots {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            order.push(r);
            let mut i = order.len() - 1;
            while i < order.len() {
                let c = order[i];
                i += 1;
                for q in &self.edges {
                    for (a, b) in [(q.from, q.to), (q.to, q.from)] {
                        if a == c && !seen[b] {
                            seen[b] = true;
                            order.push(b);
                        }
                    }
                }
            }
        }
        let mut assignment: Vec<Option<Word>> = fixed_g.clone();
        let root_choices: Vec<Word> = if fixed_g[order[0]].is_some() {
            vec![fixed_g[order[0]].clone().unwrap()]
        } else {
            reduced_words(n, search.word_bound)
        };
        for g0 in root_choices {
            assignment[order[0]] = Some(g0);
            if let Some(cert) = self.propagate(phi, &order, 1, &mut assignment, search) {
                return Some(cert);
            }
        }
        None
    }

    fn propagate(
        &self,
        phi: &Automorphism,
        order: &[usize],
        idx: usize,
        assignment: &mut Vec<Option<Word>>,
        search: FixedSearch,
    ) -> Option<Fixedness> {
        if idx == order.len() {
            return self.check_edges(phi, assignment);
        }
        let c = order[idx];
        if !self.groups[c].is_trivial() {
            return self.propagate(phi, order, idx + 1, assignment, search);
        }
        // an edge joining c to an already assigned vertex
        let known: HashSet<usize> = order[..idx].iter().copied().collect();
        let q = self
            .edges
            .iter()
            .find(|q| (q.to == c && known.contains(&q.from)) || (q.from == c && known.contains(&q.to)))?;
        let t = &q.marking;
        let ft = phi.apply(t);
        let other = if q.to == c { q.from } else { q.to };
        let g_other = assignment[other].clone()?;
        let elems: Vec<Word> = if self.groups[other].is_trivial() {
            vec![Word::identity()]
        } else {
            let gens = self.groups[other].generators();
            reduced_words(gens.len(), search.word_bound)
                .iter()
                .map(|x| x.substitute(&gens))
                .collect()
        };
        let mut tried = HashSet::new();
        for a in elems {
            let g = if q.to == c && q.from != c {
                // g_from φ(t) g_c⁻¹ = a t
                t.inverse().mul(&a.inverse()).mul(&g_other).mul(&ft)
            } else {
                // g_c φ(t) g_to⁻¹ = t a
                t.mul(&a).mul(&g_other).mul(&ft.inverse())
            };
            if !tried.insert(g.clone()) {
                continue;
            }
            assignment[c] = Some(g);
            if let Some(cert) = self.propagate(phi, order, idx + 1, assignment, search) {
                return Some(cert);
            }
        }
        assignment[c] = None;
        None
    }

    fn check_edges(&self, phi: &Automorphism, assignment: &[Option<Word>]) -> Option<Fixedness> {
        let mut witnesses = Vec::new();
        for q in &self.edges {
            let gf = assignment[q.from].as_ref()?;
            let gt = assignment[q.to].as_ref()?;
            let x = gf.mul(&phi.apply(&q.marking)).mul(&gt.inverse());
            let (a, b) = self.groups[q.from].in_double_coset(&q.marking, &self.groups[q.to], &x)?;
            witnesses.push((a, b));
        }
        Some(Fixedness::Fixed {
            conjugators: assignment.iter().map(|g| g.clone().unwrap_or_default()).collect(),
            edge_witnesses: witnesses,
        })
    }

    /// Least distance between distinct vertices with nontrivial stabilizer,
    /// with the pairs of vertex orbits realizing it.
    pub fn min_vertex_distance(&self) -> Result<(Rational, Vec<(usize, usize)>), TreeError> {
        let nontrivial = self.nontrivial_components();
        if nontrivial.is_empty() {
            return Err(TreeError::FewerThanTwoVertexGroups);
        }
        // oriented quotient edges: (edge index, forward)
        let out_of = |c: usize| -> Vec<(usize, bool)> {
            let mut v = Vec::new();
            for (i, q) in self.edges.iter().enumerate() {
                if q.from == c {
                    v.push((i, true));
                }
                if q.to == c {
                    v.push((i, false));
                }
            }
            v
        };
        let mut best: Option<Rational> = None;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &s in &nontrivial {
            let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; 2]; self.edges.len()];
            let mut heap = BinaryHeap::new();
            for (i, f) in out_of(s) {
                let d = self.edges[i].length.clone();
                dist[i][f as usize] = Some(d.clone());
                heap.push(Reverse((d, i, f)));
            }
            while let Some(Reverse((d, i, f))) = heap.pop() {
                if dist[i][f as usize].as_ref() != Some(&d) {
                    continue;
                }
                let q = &self.edges[i];
                let at = if f { q.to } else { q.from };
                if !self.groups[at].is_trivial() {
                    match &best {
                        Some(b) if d > *b => {}
                        Some(b) if d == *b => {
                            if !pairs.contains(&(s, at)) {
                                pairs.push((s, at));
                            }
                        }
                        _ => {
                            best = Some(d.clone());
                            pairs = vec![(s, at)];
                        }
                    }
                    continue;
                }
                for (j, g) in out_of(at) {
                    if j == i && g != f {
                        continue; // no backtracking through a trivial vertex
                    }
                    let nd = &d + &self.edges[j].length;
                    let slot = &mut dist[j][g as usize];
                    if slot.as_ref().is_none_or(|x| nd < *x) {
                        *slot = Some(nd.clone());
                        heap.push(Reverse((nd, j, g)));
                    }
                }
            }
        }
        best.map(|b| (b, pairs)).ok_or(TreeError::FewerThanTwoVertexGroups)
    }
}

fn component_paths(
    host: &MarkedGraph,
    collapsed: &[bool],
    component: &[usize],
    reps: &[usize],
) -> Vec<EdgePath> {
    let g = host.graph();
    let mut paths: Vec<Option<EdgePath>> = vec![None; g.vertex_count()];
    for &r in reps {
        paths[r] = Some(EdgePath::trivial(r));
        let mut stack = vec![r];
        while let Some(v) = stack.pop() {
            for oe in g.edges_from(v) {
                let w = g.head(oe);
                if collapsed[oe.edge] && paths[w].is_none() && component[w] == component[r] {
                    paths[w] = Some(paths[v].as_ref().unwrap().concat(&EdgePath::edge(g, oe)));
                    stack.push(w);
                }
            }
        }
    }
    paths.into_iter().map(Option::unwrap).collect()
}

/// Whether `V` and `W` admit a common conjugator for every generator:
/// `φ(V) = γ⁻¹ V γ` and `φ(W) = γ⁻¹ W γ`.
pub fn is_nielsen_pair(
    v: &SubgroupGraph,
    w: &SubgroupGraph,
    gens: &[Automorphism],
) -> Result<bool, TreeError> {
    let n = v.ambient_rank();
    for phi in gens {
        let image = |h: &SubgroupGraph| {
            SubgroupGraph::fold(n, &h.generators().iter().map(|g| phi.apply(g)).collect::<Vec<_>>())
        };
        let gv = v.conjugator(&image(v)).ok_or(TreeError::ConjugatorMissing)?;
        let gw = w.conjugator(&image(w)).ok_or(TreeError::ConjugatorMissing)?;
        // V·gv ∩ W·gw ≠ ∅  ⇔  gv·gw⁻¹ ∈ V·W
        if v
            .in_double_coset(&Word::identity(), w, &gv.mul(&gw.inverse()))
            .is_none()
        {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct VertexJson {
    component: usize,
    generators: Vec<Word>,
}

#[derive(Serialize)]
struct TreeJson<'a> {
    host: &'a MarkedGraph,
    collapsed: Vec<usize>,
    vertices: Vec<VertexJson>,
    edges: &'a [QuotientEdge],
}

impl Serialize for SimplicialTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TreeJson {
            host: &self.host,
            collapsed: (0..self.collapsed.len()).filter(|&e| self.collapsed[e]).collect(),
            vertices: self
                .groups
                .iter()
                .enumerate()
                .map(|(c, g)| VertexJson {
                    component: c,
                    generators: g.generators(),
                })
                .collect(),
            edges: &self.edges,
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::rational;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    /// Rose with petals a, b, bc and the a-petal collapsed.
    fn t0() -> SimplicialTree {
        let host = MarkedGraph::rose(3, vec![w("a"), w("b"), w("bc")]).unwrap();
        SimplicialTree::new(host, vec![true, false, false]).unwrap()
    }

    /// Rose a, b with the a-petal collapsed.
    fn loop_b() -> SimplicialTree {
        let host = MarkedGraph::standard_rose(2);
        SimplicialTree::new(host, vec![true, false]).unwrap()
    }

    #[test]
    fn translation_length_examples() {
        let t = t0();
        assert_eq!(t.translation_length(&w("a")).unwrap(), rational(0, 1));
        assert_eq!(t.translation_length(&w("b")).unwrap(), rational(1, 1));
        assert_eq!(t.translation_length(&w("c")).unwrap(), rational(2, 1));
    }

    #[test]
    fn elliptic_system_examples() {
        let e = t0().elliptic_system();
        assert!(e.same_as(&FreeFactorSystem::from_generators(3, &[vec![w("a")]])));
        let free = SimplicialTree::free(MarkedGraph::standard_rose(2)).unwrap();
        assert!(free.elliptic_system().is_empty());
        let arc = arc_tree(1, 1);
        assert_eq!(arc.elliptic_system().len(), 2);
    }

    /// Arc from ⟨a⟩ to ⟨b⟩, optionally subdivided with a trivial middle vertex.
    fn arc_tree(num: i64, den: i64) -> SimplicialTree {
        let g = Graph::with_lengths(
            2,
            vec![
                crate::graph::Edge { tail: 0, head: 0, length: rational(1, 1) },
                crate::graph::Edge { tail: 1, head: 1, length: rational(1, 1) },
                crate::graph::Edge { tail: 0, head: 1, length: rational(num, den) },
            ],
        )
        .unwrap();
        let host = MarkedGraph::new(g, 2, 0, &[2], vec![w("a"), w("b"), w("")]).unwrap();
        SimplicialTree::new(host, vec![true, true, false]).unwrap()
    }

    #[test]
    fn fixedness_examples() {
        let h = Automorphism::parse(2, "a,ba", "a,bA").unwrap();
        let s = FixedSearch::default();
        assert!(loop_b().is_fixed_by(&h, s).is_fixed());
        let free = SimplicialTree::free(MarkedGraph::standard_rose(2)).unwrap();
        match free.is_fixed_by(&h, s) {
            Fixedness::Refuted { witness, before, after } => {
                assert_eq!(witness.len(), 1);
                assert_eq!((before, after), (rational(1, 1), rational(2, 1)));
            }
            other => panic!("{other:?}"),
        }
        assert!(t0().is_fixed_by(&Automorphism::identity(3), s).is_fixed());
        assert!(free.is_fixed_by(&Automorphism::identity(2), s).is_fixed());
    }

    #[test]
    fn min_distance_examples() {
        let (d, pairs) = arc_tree(1, 1).min_vertex_distance().unwrap();
        assert_eq!(d, rational(1, 1));
        assert_eq!(pairs.len(), 2);
        // subdivided arc: trivial middle vertex is ignored
        let g = Graph::new(3, &[(0, 0), (1, 1), (0, 2), (2, 1)]).unwrap();
        let g = g
            .with_edge_lengths(vec![rational(1, 1), rational(1, 1), rational(1, 2), rational(1, 2)])
            .unwrap();
        let host = MarkedGraph::new(g, 2, 0, &[2, 3], vec![w("a"), w("b"), w(""), w("")]).unwrap();
        let t = SimplicialTree::new(host, vec![true, true, false, false]).unwrap();
        assert_eq!(t.min_vertex_distance().unwrap().0, rational(1, 1));
        // tripod quotient: ⟨a⟩ joined to ⟨b⟩ by length 1 and to ⟨c⟩ by length 2
        let g = Graph::new(3, &[(0, 0), (1, 1), (2, 2), (0, 1), (0, 2)]).unwrap();
        let g = g
            .with_edge_lengths(vec![
                rational(1, 1),
                rational(1, 1),
                rational(1, 1),
                rational(1, 1),
                rational(2, 1),
            ])
            .unwrap();
        let host =
            MarkedGraph::new(g, 3, 0, &[3, 4], vec![w("a"), w("b"), w("c"), w(""), w("")]).unwrap();
        let t = SimplicialTree::new(host, vec![true, true, true, false, false]).unwrap();
        assert_eq!(t.min_vertex_distance().unwrap().0, rational(1, 1));
    }

    #[test]
    fn nielsen_pair_examples() {
        let v = SubgroupGraph::fold(2, &[w("a")]);
        let wg = SubgroupGraph::fold(2, &[w("b")]);
        assert!(is_nielsen_pair(&v, &wg, &[Automorphism::identity(2)]).unwrap());
        let phi = Automorphism::parse(2, "a,abA", "a,Aba").unwrap();
        assert!(is_nielsen_pair(&v, &wg, &[phi]).unwrap());
        let psi = Automorphism::parse(2, "a,ba", "a,bA").unwrap();
        assert_eq!(is_nielsen_pair(&v, &wg, &[psi]), Err(TreeError::ConjugatorMissing));
    }
}
