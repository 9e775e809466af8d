//! Random generators shared by the integration suites.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use upg_core::graph::{EdgePath, Filtration, Graph, MarkedGraph, OEdge};
use upg_core::triangular::TriangularMap;
use upg_core::word::{letter, Word};

pub fn word(s: &str) -> Word {
    s.parse().unwrap()
}

pub fn random_word<R: Rng>(rng: &mut R, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    Word::reduce((0..len).map(|_| letter(rng.gen_range(0..rank), rng.gen_bool(0.5))))
}

/// Connected graph with at most `max_edges` edges and rank at least 1,
/// marked through a random spanning tree, with a random filtration.
pub fn random_host<R: Rng>(rng: &mut R, max_edges: usize) -> (MarkedGraph, Filtration) {
    let nv = rng.gen_range(1..=max_edges.div_ceil(2).max(1));
    let extra = rng.gen_range(1..=(max_edges + 1 - nv).max(1));
    let mut edges: Vec<((usize, usize), bool)> = Vec::new();
    for v in 1..nv {
        let u = rng.gen_range(0..v);
        let e = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
        edges.push((e, true));
    }
    for _ in 0..extra {
        edges.push(((rng.gen_range(0..nv), rng.gen_range(0..nv)), false));
    }
    edges.shuffle(rng);
    let pairs: Vec<(usize, usize)> = edges.iter().map(|(p, _)| *p).collect();
    let tree: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].1).collect();
    let mut next = 0;
    let labels: Vec<Word> = edges
        .iter()
        .map(|(_, t)| {
            if *t {
                Word::identity()
            } else {
                next += 1;
                Word::generator(next - 1)
            }
        })
        .collect();
    let graph = Graph::new(nv, &pairs).unwrap();
    let host = MarkedGraph::new(graph, extra, 0, &tree, labels).unwrap();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.shuffle(rng);
    (host, Filtration::new(order).unwrap())
}

/// Tight closed path at `v` using only edges flagged in `allowed`, built
/// from a short random walk followed by a shortest way home.
pub fn random_loop<R: Rng>(rng: &mut R, g: &Graph, allowed: &[bool], v: usize, steps: usize) -> EdgePath {
    let mut path: Vec<OEdge> = Vec::new();
    let mut cur = v;
    for _ in 0..rng.gen_range(0..=steps) {
        let opts: Vec<OEdge> = g.edges_from(cur).into_iter().filter(|oe| allowed[oe.edge]).collect();
        let Some(&oe) = opts.choose(rng) else { break };
        path.push(oe);
        cur = g.head(oe);
    }
    // BFS back to v inside the allowed subgraph
    let mut prev: Vec<Option<OEdge>> = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    seen[cur] = true;
    let mut queue = VecDeque::from([cur]);
    while let Some(x) = queue.pop_front() {
        for oe in g.edges_from(x) {
            let y = g.head(oe);
            if allowed[oe.edge] && !seen[y] {
                seen[y] = true;
                prev[y] = Some(oe);
                queue.push_back(y);
            }
        }
    }
    let mut back = Vec::new();
    let mut x = v;
    while x != cur {
        let oe = prev[x].unwrap();
        back.push(oe);
        x = g.tail(oe);
    }
    back.reverse();
    path.extend(back);
    EdgePath::new(g, v, path).unwrap().tighten()
}

/// Random triangular map on a fixed host: every prefix and suffix is a
/// random loop in the strictly lower strata.
pub fn random_map_on<R: Rng>(rng: &mut R, host: &MarkedGraph, filtration: &Filtration, steps: usize) -> TriangularMap {
    let g = host.graph();
    let m = g.edge_count();
    let mut ps = Vec::with_capacity(m);
    let mut us = Vec::with_capacity(m);
    for e in 0..m {
        let pos = filtration.position(e);
        let lower: Vec<bool> = (0..m).map(|x| filtration.position(x) < pos).collect();
        let oe = OEdge::fwd(e);
        ps.push(random_loop(rng, g, &lower, g.tail(oe), steps));
        us.push(random_loop(rng, g, &lower, g.head(oe), steps));
    }
    TriangularMap::validate(host.clone(), filtration.clone(), ps, us).unwrap()
}

/// UR map on the standard rose: `x_i ↦ x_i · u_i` with `u_i` a random word
/// of length at most `max_suffix` in the earlier generators.
pub fn random_rose_map<R: Rng>(rng: &mut R, rank: usize, max_suffix: usize) -> TriangularMap {
    let host = MarkedGraph::standard_rose(rank);
    let sufs: Vec<Word> = (0..rank)
        .map(|i| if i == 0 { Word::identity() } else { random_word(rng, i, max_suffix) })
        .collect();
    TriangularMap::from_words(host, Filtration::identity(rank), &vec![Word::identity(); rank], &sufs).unwrap()
}
