//! Filtered graph and triangular lifts from a fixed tree with one edge
//! orbit, by recursion into the vertex groups.

use serde::Serialize;

use super::{edge_bound, run, Generator, KolchinConfig, KolchinError, KolchinResult};
use crate::automorphism::Automorphism;
use crate::free_factor::FreeFactorSystem;
use crate::graph::{Edge, Filtration, Graph, MarkedGraph};
use crate::subgroup::{Expander, SubgroupGraph};
use crate::tree::{FixedSearch, Fixedness, SimplicialTree};
use crate::triangular::TriangularMap;
use crate::word::Word;
use crate::rational;

/// Common filtered graph with one triangular lift per generator.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub graph: MarkedGraph,
    pub filtration: Filtration,
    pub lifts: Vec<TriangularMap>,
    pub aut_lifts: Vec<Automorphism>,
}

fn realization_error(e: impl ToString) -> KolchinError {
    KolchinError::RealizationFailed(e.to_string())
}

/// Lift of `φ` fixing the first quotient edge of `tree`:
/// `ι_{a⁻¹ g} ∘ φ` where `g` carries the edge's initial vertex group and
/// `a` is the left factor of the edge's double-coset witness.
pub fn lift_to_aut(tree: &SimplicialTree, phi: &Automorphism, search: FixedSearch) -> Option<Automorphism> {
    let Some(Fixedness::Fixed {
        conjugators,
        edge_witnesses,
    }) = tree.fixed_certificate(phi, search)
    else {
        return None;
    };
    let q = tree.quotient_edges().first()?;
    let (a, _) = &edge_witnesses[0];
    let gamma = a.inverse().mul(&conjugators[q.from]);
    Some(Automorphism::inner(phi.rank(), &gamma).compose(phi))
}

/// `w ↦ c⁻¹ Φ(c w c⁻¹) c` written in `basis`, for `Φ` preserving
/// `c ⟨basis⟩ c⁻¹`.
fn restrict(phi: &Automorphism, basis: &[Word], conj: &Word) -> Result<Automorphism, KolchinError> {
    let ex = Expander::new(basis);
    let ci = conj.inverse();
    let through = |f: &dyn Fn(&Word) -> Word| -> Result<Vec<Word>, KolchinError> {
        basis
            .iter()
            .map(|b| {
                let img = ci.mul(&f(&b.conjugate_by(conj))).mul(conj);
                ex.express_word(&img).ok_or_else(|| {
                    KolchinError::RestrictionNotCertified(format!("{img} is outside the vertex group"))
                })
            })
            .collect()
    };
    let images = through(&|w| phi.apply(w))?;
    let inverse = through(&|w| phi.apply_inverse(w))?;
    let r = Automorphism::validate(images, inverse)
        .map_err(|e| KolchinError::RestrictionNotCertified(e.to_string()))?;
    if !r.abelianization().is_unipotent() {
        return Err(KolchinError::RestrictionNotCertified(
            "restriction is not unipotent on homology".into(),
        ));
    }
    Ok(r)
}

/// A vertex group's recursive result placed in the ambient coordinates:
/// a label `x` of the sub-result becomes `conj · x(basis) · conj⁻¹`.
struct Part {
    sub: KolchinResult,
    basis: Vec<Word>,
    conj: Word,
    /// Outer conjugator per generator, in ambient letters of the group
    /// (before conjugation by `conj`).
    correction: Vec<Word>,
}

impl Part {
    fn build(
        group: &SubgroupGraph,
        conj: &Word,
        lifts: &[Automorphism],
        config: KolchinConfig,
    ) -> Result<Self, KolchinError> {
        let basis = group.generators();
        let restricted = lifts
            .iter()
            .map(|l| restrict(l, &basis, conj))
            .collect::<Result<Vec<_>, _>>()?;
        let sub = run(
            basis.len(),
            restricted.iter().cloned().map(Generator::new).collect(),
            config,
        )?;
        let mut correction = Vec::new();
        for (f, phi) in sub.lifts.iter().zip(&restricted) {
            let psi = f.induced_automorphism().map_err(realization_error)?;
            let c = psi
                .outer_conjugator(phi)
                .ok_or_else(|| realization_error("sub-lift is not in the restricted outer class"))?;
            correction.push(c.substitute(&basis));
        }
        Ok(Part {
            sub,
            basis,
            conj: conj.clone(),
            correction,
        })
    }

    fn transform(&self, w: &Word) -> Word {
        w.substitute(&self.basis).conjugate_by(&self.conj)
    }
}

enum Extra {
    /// Loop at the base of the first part.
    Loop(Word),
    /// Tree edge from the base of the first part to the base of the second.
    Bridge,
}

struct Combined {
    graph: MarkedGraph,
    filtration: Filtration,
    offsets: Vec<usize>,
    extra: usize,
}

fn combine(n: usize, parts: &[&Part], extra: &Extra) -> Result<Combined, KolchinError> {
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    let mut tree = Vec::new();
    let mut order = Vec::new();
    let mut offsets = Vec::new();
    let mut bases = Vec::new();
    let mut nv = 0;
    for p in parts {
        let g = &p.sub.graph;
        let off = edges.len();
        offsets.push(off);
        bases.push(nv + g.base());
        for (e, ed) in g.graph().edges().iter().enumerate() {
            edges.push(Edge {
                tail: ed.tail + nv,
                head: ed.head + nv,
                length: rational(1, 1),
            });
            labels.push(if g.is_tree_edge(e) {
                Word::identity()
            } else {
                p.transform(g.label(e))
            });
        }
        tree.extend(g.tree_edges().iter().map(|&e| e + off));
        order.extend(p.sub.filtration.order().iter().map(|&e| e + off));
        nv += g.graph().vertex_count();
    }
    let extra_edge = edges.len();
    match extra {
        Extra::Loop(label) => {
            edges.push(Edge { tail: bases[0], head: bases[0], length: rational(1, 1) });
            labels.push(label.clone());
        }
        Extra::Bridge => {
            edges.push(Edge { tail: bases[0], head: bases[1], length: rational(1, 1) });
            labels.push(Word::identity());
            tree.push(extra_edge);
        }
    }
    order.push(extra_edge);
    let graph = Graph::with_lengths(nv, edges).map_err(realization_error)?;
    let graph = MarkedGraph::new(graph, n, bases[0], &tree, labels).map_err(realization_error)?;
    let filtration = Filtration::new(order).map_err(realization_error)?;
    Ok(Combined {
        graph,
        filtration,
        offsets,
        extra: extra_edge,
    })
}

fn build_lifts(
    c: &Combined,
    parts: &[&Part],
    extra_words: &[(Word, Word)],
) -> Result<Vec<TriangularMap>, KolchinError> {
    let m = c.graph.graph().edge_count();
    let mut out = Vec::new();
    for (j, (pre, suf)) in extra_words.iter().enumerate() {
        let mut prefixes = vec![Word::identity(); m];
        let mut suffixes = vec![Word::identity(); m];
        for (p, &off) in parts.iter().zip(&c.offsets) {
            let f = &p.sub.lifts[j];
            let h = f.host();
            for e in 0..f.edge_count() {
                prefixes[e + off] = p.transform(&h.path_word(f.prefix(e)));
                suffixes[e + off] = p.transform(&h.path_word(f.suffix(e)));
            }
        }
        prefixes[c.extra] = pre.clone();
        suffixes[c.extra] = suf.clone();
        out.push(
            TriangularMap::from_words(c.graph.clone(), c.filtration.clone(), &prefixes, &suffixes)
                .map_err(realization_error)?,
        );
    }
    Ok(out)
}

/// Collapses `tree` to its last edge orbit, recurses into the vertex
/// groups and glues the results along the remaining edge.
pub fn assemble_filtered_graph(
    tree: &SimplicialTree,
    gens: &[Automorphism],
    config: KolchinConfig,
) -> Result<Assembled, KolchinError> {
    let n = tree.host().rank();
    let search = config.fixed_search();
    let keep = tree
        .quotient_edges()
        .last()
        .map(|q| q.edge)
        .ok_or_else(|| realization_error("tree has no edges"))?;
    let one = tree.collapse_all_but(keep).map_err(realization_error)?;
    let q = one.quotient_edges()[0].clone();
    let t = q.marking.clone();
    let mut lifts = Vec::new();
    let mut witnesses = Vec::new();
    for phi in gens {
        let Some(Fixedness::Fixed { edge_witnesses, .. }) = one.fixed_certificate(phi, search) else {
            return Err(realization_error("collapsed tree is not certified fixed"));
        };
        witnesses.push(edge_witnesses[0].clone());
        lifts.push(lift_to_aut(&one, phi, search).expect("certificate exists"));
    }
    let v = &one.vertex_groups()[q.from];
    let w = &one.vertex_groups()[q.to];
    let (graph, filtration, maps) = if q.from == q.to {
        // one vertex orbit: the loop E with `Φ(t) = t·b·a`
        let part = Part::build(v, &Word::identity(), &lifts, config)?;
        let c = combine(n, &[&part], &Extra::Loop(t.clone()))?;
        let words: Vec<(Word, Word)> = witnesses
            .iter()
            .zip(&part.correction)
            .map(|((a, b), cv)| (cv.clone(), b.mul(a).mul(&cv.inverse())))
            .collect();
        let maps = build_lifts(&c, &[&part], &words)?;
        (c.graph, c.filtration, maps)
    } else {
        match (v.rank(), w.rank()) {
            (1, 1) => {
                let x = v.generators()[0].clone();
                let y = w.generators()[0].conjugate_by(&t);
                let host = MarkedGraph::rose(n, vec![x, y]).map_err(realization_error)?;
                let filtration = Filtration::identity(2);
                let maps = gens
                    .iter()
                    .map(|_| TriangularMap::identity(host.clone(), filtration.clone()))
                    .collect();
                (host, filtration, maps)
            }
            (1, _) => {
                // balloon at the rank-one side, based at the other vertex
                let part = Part::build(w, &t, &lifts, config)?;
                let part = Part {
                    conj: Word::identity(),
                    ..part
                };
                let label = v.generators()[0].conjugate_by(&t.inverse());
                let c = combine(n, &[&part], &Extra::Loop(label))?;
                let words: Vec<(Word, Word)> =
                    part.correction.iter().map(|cw| (cw.clone(), cw.inverse())).collect();
                let maps = build_lifts(&c, &[&part], &words)?;
                (c.graph, c.filtration, maps)
            }
            (_, 1) => {
                let part = Part::build(v, &Word::identity(), &lifts, config)?;
                let label = w.generators()[0].conjugate_by(&t);
                let c = combine(n, &[&part], &Extra::Loop(label))?;
                let words: Vec<(Word, Word)> =
                    part.correction.iter().map(|cv| (cv.clone(), cv.inverse())).collect();
                let maps = build_lifts(&c, &[&part], &words)?;
                (c.graph, c.filtration, maps)
            }
            _ => {
                let pv = Part::build(v, &Word::identity(), &lifts, config)?;
                let pw = Part::build(w, &t, &lifts, config)?;
                let c = combine(n, &[&pv, &pw], &Extra::Bridge)?;
                let words: Vec<(Word, Word)> = pv
                    .correction
                    .iter()
                    .zip(&pw.correction)
                    .map(|(cv, cw)| (cv.clone(), cw.inverse().conjugate_by(&t)))
                    .collect();
                let maps = build_lifts(&c, &[&pv, &pw], &words)?;
                (c.graph, c.filtration, maps)
            }
        }
    };
    for (i, (f, phi)) in maps.iter().zip(gens).enumerate() {
        let induced = f.induced_automorphism().map_err(realization_error)?;
        if !induced.same_outer_class(phi) {
            return Err(realization_error(format!(
                "lift {i} does not realize its generator's outer class"
            )));
        }
    }
    if graph.graph().edge_count() > edge_bound(n) {
        return Err(realization_error(format!(
            "{} edges exceed the bound {}",
            graph.graph().edge_count(),
            edge_bound(n)
        )));
    }
    Ok(Assembled {
        graph,
        filtration,
        lifts: maps,
        aut_lifts: lifts,
    })
}

pub(super) fn rank_one(k: usize, _config: KolchinConfig) -> Result<KolchinResult, KolchinError> {
    let host = MarkedGraph::standard_rose(1);
    let filtration = Filtration::identity(1);
    let lifts: Vec<TriangularMap> = (0..k)
        .map(|_| TriangularMap::identity(host.clone(), filtration.clone()))
        .collect();
    Ok(KolchinResult {
        rank: 1,
        system: FreeFactorSystem::trivial(1),
        fixed_tree: SimplicialTree::free(host.clone()).map_err(realization_error)?,
        graph: host,
        filtration,
        solvability: solvability_report(1, &lifts),
        lifts,
        aut_lifts: vec![Automorphism::identity(1); k],
        history: Vec::new(),
    })
}

/// Images of the prefix and suffix maps at one filtration position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub position: usize,
    pub edge: usize,
    pub prefix_rank: usize,
    pub suffix_rank: usize,
    pub prefix_generators: Vec<Word>,
    pub suffix_generators: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolvabilityReport {
    pub stages: Vec<StageReport>,
    /// Stages with nontrivial image; bounds the derived length when no
    /// stage contains a free subgroup of rank two.
    pub derived_length_bound: usize,
    pub contains_free_subgroup: bool,
    pub edge_bound: usize,
}

pub fn solvability_report(n: usize, lifts: &[TriangularMap]) -> SolvabilityReport {
    let mut stages = Vec::new();
    if let Some(f0) = lifts.first() {
        let h = f0.host();
        for (pos, &e) in f0.filtration().order().iter().enumerate() {
            let collect = |pick: &dyn Fn(&TriangularMap) -> Word| -> Vec<Word> {
                let mut ws: Vec<Word> = lifts.iter().map(pick).filter(|w| !w.is_empty()).collect();
                ws.sort();
                ws.dedup();
                ws
            };
            let pre = collect(&|f| h.path_word(f.prefix(e)));
            let suf = collect(&|f| h.path_word(f.suffix(e)));
            let rank_of = |ws: &[Word]| if ws.is_empty() { 0 } else { SubgroupGraph::fold(n, ws).rank() };
            stages.push(StageReport {
                position: pos,
                edge: e,
                prefix_rank: rank_of(&pre),
                suffix_rank: rank_of(&suf),
                prefix_generators: pre,
                suffix_generators: suf,
            });
        }
    }
    let derived_length_bound = stages
        .iter()
        .filter(|s| s.prefix_rank.max(s.suffix_rank) > 0)
        .count();
    let contains_free_subgroup = stages.iter().any(|s| s.prefix_rank.max(s.suffix_rank) >= 2);
    let bound = edge_bound(n);
    assert!(derived_length_bound <= bound.max(stages.len()));
    SolvabilityReport {
        stages,
        derived_length_bound,
        contains_free_subgroup,
        edge_bound: bound,
    }
}
