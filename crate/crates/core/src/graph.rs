//! Finite graphs with markings, filtrations and edge paths.

use std::collections::VecDeque;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::subgroup::{Expander, SubgroupGraph};
use crate::word::Word;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge {0} does not start where the path currently ends")]
    NotConcatenable(usize),
    #[error("path is not closed")]
    NotClosed,
    #[error("edge labels do not form a free basis")]
    NotABasis,
    #[error("tree edges do not form a spanning tree")]
    NotASpanningTree,
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid filtration order")]
    BadFiltration,
    #[error("edge lengths must be positive")]
    NonPositiveLength,
    #[error("edge or vertex index out of range")]
    OutOfRange,
    #[error("word {0} cannot be realized as a loop")]
    WordNotRealizable(Word),
}

/// An edge traversed in a chosen direction.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OEdge {
    pub edge: usize,
    pub forward: bool,
}

impl OEdge {
    pub fn fwd(edge: usize) -> Self {
        OEdge { edge, forward: true }
    }

    pub fn bwd(edge: usize) -> Self {
        OEdge {
            edge,
            forward: false,
        }
    }

    pub fn rev(self) -> Self {
        OEdge {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

impl fmt::Debug for OEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.forward {
            write!(f, "e{}", self.edge)
        } else {
            write!(f, "E{}", self.edge)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub length: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Graph with unit edge lengths.
    pub fn new(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        Graph::with_lengths(
            n_vertices,
            edges
                .iter()
                .map(|&(t, h)| Edge {
                    tail: t,
                    head: h,
                    length: Rational::one(),
                })
                .collect(),
        )
    }

    pub fn with_lengths(n_vertices: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if edges
            .iter()
            .any(|e| e.tail >= n_vertices || e.head >= n_vertices)
        {
            return Err(GraphError::OutOfRange);
        }
        if edges.iter().any(|e| !e.length.is_positive()) {
            return Err(GraphError::NonPositiveLength);
        }
        let g = Graph { n_vertices, edges };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// The rose with `k` unit petals.
    pub fn rose(k: usize) -> Self {
        Graph::new(1, &vec![(0, 0); k]).expect("rose is connected")
    }

    fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return true;
        }
        let mut seen = vec![false; self.n_vertices];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            for oe in self.edges_from(v) {
                let w = self.head(oe);
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.n_vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn length(&self, e: usize) -> &Rational {
        &self.edges[e].length
    }

    pub fn tail(&self, oe: OEdge) -> usize {
        let e = &self.edges[oe.edge];
        if oe.forward {
            e.tail
        } else {
            e.head
        }
    }

    pub fn head(&self, oe: OEdge) -> usize {
        self.tail(oe.rev())
    }

    /// Oriented edges leaving `v`, in a fixed order.
    pub fn edges_from(&self, v: usize) -> Vec<OEdge> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail == v {
                out.push(OEdge::fwd(i));
            }
            if e.head == v {
                out.push(OEdge::bwd(i));
            }
        }
        out
    }

    /// Sum of edge lengths (covolume of the universal cover).
    pub fn total_length(&self) -> Rational {
        self.edges.iter().map(|e| e.length.clone()).sum()
    }

    pub fn with_edge_lengths(&self, lengths: Vec<Rational>) -> Result<Self, GraphError> {
        Graph::with_lengths(
            self.n_vertices,
            self.edges
                .iter()
                .zip(lengths)
                .map(|(e, l)| Edge {
                    tail: e.tail,
                    head: e.head,
                    length: l,
                })
                .collect(),
        )
    }
}

/// A path of oriented edges with explicit endpoints, so that the empty
/// path still knows where it sits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgePath {
    start: usize,
    end: usize,
    edges: Vec<OEdge>,
}

impl fmt::Debug for EdgePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}:", self.start)?;
        for oe in &self.edges {
            write!(f, " {oe:?}")?;
        }
        write!(f, " :{}>", self.end)
    }
}

impl EdgePath {
    pub fn trivial(v: usize) -> Self {
        EdgePath {
            start: v,
            end: v,
            edges: Vec::new(),
        }
    }

    pub fn new(g: &Graph, start: usize, edges: Vec<OEdge>) -> Result<Self, GraphError> {
        if start >= g.vertex_count() {
            return Err(GraphError::OutOfRange);
        }
        let mut cur = start;
        for oe in &edges {
            if oe.edge >= g.edge_count() {
                return Err(GraphError::OutOfRange);
            }
            if g.tail(*oe) != cur {
                return Err(GraphError::NotConcatenable(oe.edge));
            }
            cur = g.head(*oe);
        }
        Ok(EdgePath {
            start,
            end: cur,
            edges,
        })
    }

    pub(crate) fn unchecked(start: usize, end: usize, edges: Vec<OEdge>) -> Self {
        EdgePath { start, end, edges }
    }

    pub fn edge(g: &Graph, oe: OEdge) -> Self {
        EdgePath {
            start: g.tail(oe),
            end: g.head(oe),
            edges: vec![oe],
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn edges(&self) -> &[OEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.start == self.end
    }

    pub fn is_tight(&self) -> bool {
        self.edges.windows(2).all(|w| w[1] != w[0].rev())
    }

    pub fn metric_length(&self, g: &Graph) -> Rational {
        self.edges.iter().map(|oe| g.length(oe.edge).clone()).sum()
    }

    pub fn reverse(&self) -> Self {
        EdgePath {
            start: self.end,
            end: self.start,
            edges: self.edges.iter().rev().map(|oe| oe.rev()).collect(),
        }
    }

    /// Concatenation; panics when the endpoints do not match.
    pub fn concat(&self, other: &EdgePath) -> Self {
        assert_eq!(self.end, other.start, "paths are not concatenable");
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        EdgePath {
            start: self.start,
            end: other.end,
            edges,
        }
    }

    /// Concatenation followed by tightening, without copying twice.
    pub fn concat_tight(&self, other: &EdgePath) -> Self {
        assert_eq!(self.end, other.start, "paths are not concatenable");
        let mut edges = self.edges.clone();
        for &oe in &other.edges {
            if edges.last() == Some(&oe.rev()) {
                edges.pop();
            } else {
                edges.push(oe);
            }
        }
        EdgePath {
            start: self.start,
            end: other.end,
            edges,
        }
    }

    /// In-place version of [`EdgePath::concat_tight`].
    pub fn extend_tight(&mut self, other: &EdgePath) {
        assert_eq!(self.end, other.start, "paths are not concatenable");
        for &oe in &other.edges {
            if self.edges.last() == Some(&oe.rev()) {
                self.edges.pop();
            } else {
                self.edges.push(oe);
            }
        }
        self.end = other.end;
    }

    /// The immersed path homotopic rel endpoints.
    pub fn tighten(&self) -> Self {
        let mut edges: Vec<OEdge> = Vec::with_capacity(self.edges.len());
        for &oe in &self.edges {
            if edges.last() == Some(&oe.rev()) {
                edges.pop();
            } else {
                edges.push(oe);
            }
        }
        EdgePath {
            start: self.start,
            end: self.end,
            edges,
        }
    }

    pub fn sub_path(&self, g: &Graph, from: usize, to: usize) -> EdgePath {
        let start = if from == 0 {
            self.start
        } else {
            g.head(self.edges[from - 1])
        };
        let end = if to == from {
            start
        } else {
            g.head(self.edges[to - 1])
        };
        EdgePath {
            start,
            end,
            edges: self.edges[from..to].to_vec(),
        }
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.iter().any(|oe| oe.edge == e)
    }

    /// The path traversed `k` times (closed paths only); negative powers
    /// traverse the reverse.
    pub fn pow(&self, k: i64) -> EdgePath {
        assert!(self.is_closed());
        let base = if k < 0 { self.reverse() } else { self.clone() };
        let mut out = EdgePath::trivial(self.start);
        for _ in 0..k.unsigned_abs() {
            out.extend_tight(&base);
        }
        out
    }
}

/// Tightens a closed path cyclically: returns the prefix `c` and the
/// cyclically tight core `k` with `p ≃ c · k · c⁻¹`.
pub fn cyclic_tighten(g: &Graph, p: &EdgePath) -> (EdgePath, EdgePath) {
    assert!(p.is_closed());
    let t = p.tighten();
    let e = t.edges();
    let mut i = 0;
    while 2 * i + 1 < e.len() && e[e.len() - 1 - i] == e[i].rev() {
        i += 1;
    }
    let v = if i == 0 { t.start() } else { g.head(e[i - 1]) };
    (
        EdgePath {
            start: t.start(),
            end: v,
            edges: e[..i].to_vec(),
        },
        EdgePath {
            start: v,
            end: v,
            edges: e[i..e.len() - i].to_vec(),
        },
    )
}

/// A total order on the edges; `position[e]` is the stratum of edge `e`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Filtration {
    order: Vec<usize>,
    #[serde(skip)]
    position: Vec<usize>,
}

impl Filtration {
    pub fn new(order: Vec<usize>) -> Result<Self, GraphError> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (i, &e) in order.iter().enumerate() {
            if e >= n || position[e] != usize::MAX {
                return Err(GraphError::BadFiltration);
            }
            position[e] = i;
        }
        Ok(Filtration { order, position })
    }

    pub fn identity(n: usize) -> Self {
        Filtration::new((0..n).collect()).unwrap()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, e: usize) -> usize {
        self.position[e]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Whether every edge of `p` lies strictly below edge `e`.
    pub fn path_below(&self, p: &EdgePath, e: usize) -> bool {
        let top = self.position[e];
        p.edges().iter().all(|oe| self.position[oe.edge] < top)
    }
}

/// A graph together with an identification of its fundamental group with
/// `F_rank`: every edge carries the word of the loop running from the base
/// through the tree to the edge and back through the tree.
#[derive(Clone)]
pub struct MarkedGraph {
    graph: Graph,
    rank: usize,
    base: usize,
    in_tree: Vec<bool>,
    labels: Vec<Word>,
    tree_paths: Vec<EdgePath>,
    expander: Expander,
    nontree: Vec<usize>,
}

impl fmt::Debug for MarkedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkedGraph")
            .field("graph", &self.graph)
            .field("base", &self.base)
            .field("labels", &self.labels)
            .finish()
    }
}

impl PartialEq for MarkedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph
            && self.base == other.base
            && self.in_tree == other.in_tree
            && self.labels == other.labels
    }
}

impl MarkedGraph {
    /// `labels[e]` must be `ε` exactly on the tree edges; the remaining
    /// labels must form a free basis of `F_rank`.
    pub fn new(
        graph: Graph,
        rank: usize,
        base: usize,
        tree: &[usize],
        labels: Vec<Word>,
    ) -> Result<Self, GraphError> {
        let m = graph.edge_count();
        if base >= graph.vertex_count() || labels.len() != m || tree.iter().any(|&e| e >= m) {
            return Err(GraphError::OutOfRange);
        }
        let mut in_tree = vec![false; m];
        for &e in tree {
            in_tree[e] = true;
        }
        if tree.len() + 1 != graph.vertex_count() {
            return Err(GraphError::NotASpanningTree);
        }
        // tree paths from the base
        let mut tree_paths: Vec<Option<EdgePath>> = vec![None; graph.vertex_count()];
        tree_paths[base] = Some(EdgePath::trivial(base));
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for oe in graph.edges_from(v) {
                let w = graph.head(oe);
                if in_tree[oe.edge] && tree_paths[w].is_none() {
                    let p = tree_paths[v].as_ref().unwrap().concat(&EdgePath::edge(&graph, oe));
                    tree_paths[w] = Some(p);
                    queue.push_back(w);
                }
            }
        }
        if tree_paths.iter().any(Option::is_none) {
            return Err(GraphError::NotASpanningTree);
        }
        let tree_paths: Vec<EdgePath> = tree_paths.into_iter().map(Option::unwrap).collect();
        if (0..m).any(|e| in_tree[e] && !labels[e].is_empty()) {
            return Err(GraphError::NotABasis);
        }
        let nontree: Vec<usize> = (0..m).filter(|&e| !in_tree[e]).collect();
        let basis: Vec<Word> = nontree.iter().map(|&e| labels[e].clone()).collect();
        if basis.len() != rank
            || basis.iter().any(|w| w.max_generator().is_some_and(|g| g >= rank))
        {
            return Err(GraphError::NotABasis);
        }
        let folded = SubgroupGraph::fold(rank, &basis);
        if folded.vertex_count() != 1 || folded.edge_count() != rank {
            return Err(GraphError::NotABasis);
        }
        Ok(MarkedGraph {
            expander: Expander::new(&basis),
            graph,
            rank,
            base,
            in_tree,
            labels,
            tree_paths,
            nontree,
        })
    }

    /// Rose whose petals are marked by the given basis.
    pub fn rose(rank: usize, petals: Vec<Word>) -> Result<Self, GraphError> {
        MarkedGraph::new(Graph::rose(petals.len()), rank, 0, &[], petals)
    }

    pub fn standard_rose(rank: usize) -> Self {
        MarkedGraph::rose(rank, (0..rank).map(Word::generator).collect()).unwrap()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn label(&self, e: usize) -> &Word {
        &self.labels[e]
    }

    pub fn labels(&self) -> &[Word] {
        &self.labels
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.in_tree[e]
    }

    pub fn tree_edges(&self) -> Vec<usize> {
        (0..self.graph.edge_count()).filter(|&e| self.in_tree[e]).collect()
    }

    pub fn tree_path(&self, v: usize) -> &EdgePath {
        &self.tree_paths[v]
    }

    /// Same marking with new edge lengths.
    pub fn with_lengths(&self, lengths: Vec<Rational>) -> Result<Self, GraphError> {
        let mut out = self.clone();
        out.graph = self.graph.with_edge_lengths(lengths)?;
        Ok(out)
    }

    pub fn oriented_label(&self, oe: OEdge) -> Word {
        if oe.forward {
            self.labels[oe.edge].clone()
        } else {
            self.labels[oe.edge].inverse()
        }
    }

    /// Word of `tree(base→start) · p · tree(end→base)`.
    pub fn path_word(&self, p: &EdgePath) -> Word {
        Word::reduce(
            p.edges()
                .iter()
                .flat_map(|&oe| self.oriented_label(oe).letters().to_vec()),
        )
    }

    pub fn loop_to_word(&self, p: &EdgePath) -> Result<Word, GraphError> {
        if !p.is_closed() {
            return Err(GraphError::NotClosed);
        }
        Ok(self.path_word(p))
    }

    /// The tight loop at the base representing `w`.
    pub fn word_to_loop(&self, w: &Word) -> Result<EdgePath, GraphError> {
        let expr = self
            .expander
            .express(w)
            .ok_or_else(|| GraphError::WordNotRealizable(w.clone()))?;
        let mut p = EdgePath::trivial(self.base);
        for (j, s) in expr {
            let e = self.nontree[j];
            let lp = self.edge_loop(e);
            p.extend_tight(&if s > 0 { lp } else { lp.reverse() });
        }
        Ok(p)
    }

    /// A tight loop at `v` whose path word is `w`.
    pub fn word_to_loop_at(&self, v: usize, w: &Word) -> Result<EdgePath, GraphError> {
        let t = &self.tree_paths[v];
        Ok(t.reverse().concat_tight(&self.word_to_loop(w)?).concat_tight(t))
    }

    /// `tree(base→tail e) · e · tree(head e→base)`.
    pub fn edge_loop(&self, e: usize) -> EdgePath {
        let oe = OEdge::fwd(e);
        self.tree_paths[self.graph.tail(oe)]
            .concat(&EdgePath::edge(&self.graph, oe))
            .concat_tight(&self.tree_paths[self.graph.head(oe)].reverse())
    }

    /// Cyclically tight loop representing the conjugacy class of `w`.
    pub fn class_loop(&self, w: &Word) -> Result<EdgePath, GraphError> {
        let l = self.word_to_loop(w)?;
        Ok(cyclic_tighten(&self.graph, &l).1)
    }

    pub fn subgraph_components(&self, edges: &[bool]) -> Vec<Vec<usize>> {
        let n = self.graph.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let c = out.len();
            comp[s] = c;
            let mut verts = vec![s];
            let mut i = 0;
            while i < verts.len() {
                let v = verts[i];
                i += 1;
                for oe in self.graph.edges_from(v) {
                    let w = self.graph.head(oe);
                    if edges[oe.edge] && comp[w] == usize::MAX {
                        comp[w] = c;
                        verts.push(w);
                    }
                }
            }
            verts.sort();
            out.push(verts);
        }
        out
    }

    /// Fundamental group of the component of the subgraph `edges` containing
    /// `v`, as a subgroup of `F_rank` through the marking (basepoint moved to
    /// `v` along the tree).
    pub fn subgraph_group(&self, edges: &[bool], v: usize) -> SubgroupGraph {
        // spanning tree of the component by BFS, then one loop per extra edge
        let n = self.graph.vertex_count();
        let mut paths: Vec<Option<EdgePath>> = vec![None; n];
        paths[v] = Some(EdgePath::trivial(v));
        let mut queue = VecDeque::from([v]);
        let mut used = vec![false; self.graph.edge_count()];
        while let Some(x) = queue.pop_front() {
            for oe in self.graph.edges_from(x) {
                let w = self.graph.head(oe);
                if edges[oe.edge] && paths[w].is_none() {
                    used[oe.edge] = true;
                    paths[w] = Some(paths[x].as_ref().unwrap().concat(&EdgePath::edge(&self.graph, oe)));
                    queue.push_back(w);
                }
            }
        }
        let mut gens = Vec::new();
        for e in 0..self.graph.edge_count() {
            if !edges[e] || used[e] {
                continue;
            }
            let oe = OEdge::fwd(e);
            let (t, h) = (self.graph.tail(oe), self.graph.head(oe));
            if let (Some(pt), Some(ph)) = (&paths[t], &paths[h]) {
                let lp = pt.concat(&EdgePath::edge(&self.graph, oe)).concat(&ph.reverse());
                gens.push(self.path_word(&lp));
            }
        }
        SubgroupGraph::fold(self.rank, &gens)
    }
}

#[derive(Serialize)]
struct EdgeJson {
    id: usize,
    tail: usize,
    head: usize,
    length: String,
}

#[derive(Serialize)]
struct MarkingJson {
    base: usize,
    tree: Vec<usize>,
    labels: Vec<Word>,
}

#[derive(Serialize)]
struct MarkedGraphJson {
    rank: usize,
    vertices: usize,
    edges: Vec<EdgeJson>,
    marking: MarkingJson,
}

impl Serialize for MarkedGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MarkedGraphJson {
            rank: self.rank,
            vertices: self.graph.vertex_count(),
            edges: self
                .graph
                .edges()
                .iter()
                .enumerate()
                .map(|(id, e)| EdgeJson {
                    id,
                    tail: e.tail,
                    head: e.head,
                    length: e.length.to_string(),
                })
                .collect(),
            marking: MarkingJson {
                base: self.base,
                tree: self.tree_edges(),
                labels: self.labels.clone(),
            },
        }
        .serialize(s)
    }
}

/// Edge lengths as `p/q` strings.
pub fn rational_string(q: &Rational) -> String {
    if q.is_zero() {
        "0".into()
    } else {
        q.to_string()
    }
}
