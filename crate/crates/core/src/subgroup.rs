//! Stallings graphs of finitely generated subgroups.
//!
//! [`Folding`] folds a labelled graph while remembering, for every pair of
//! identified vertices, a connecting path of the original graph whose label
//! is freely trivial. That record lets a path of the folded graph be lifted
//! back to the original one, which is how words are rewritten in terms of a
//! generating set ([`Expander`]).

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::word::{generator_of, letter, letter_char, Letter, Word};

/// Oriented edge of the unfolded graph: (edge id, traversed forward).
type GEdge = (usize, bool);

#[derive(Debug, Clone)]
pub(crate) struct Folding {
    src: Vec<usize>,
    dst: Vec<usize>,
    label: Vec<usize>,
    n_vertices: usize,
    parent: Vec<usize>,
    alive: Vec<bool>,
    bridges: Vec<Vec<(usize, Vec<GEdge>)>>,
}

fn tighten_gpath(path: impl IntoIterator<Item = GEdge>) -> Vec<GEdge> {
    let mut out: Vec<GEdge> = Vec::new();
    for (e, f) in path {
        if out.last() == Some(&(e, !f)) {
            out.pop();
        } else {
            out.push((e, f));
        }
    }
    out
}

impl Folding {
    pub(crate) fn new(n_vertices: usize) -> Self {
        Folding {
            src: Vec::new(),
            dst: Vec::new(),
            label: Vec::new(),
            n_vertices,
            parent: (0..n_vertices).collect(),
            alive: Vec::new(),
            bridges: vec![Vec::new(); n_vertices],
        }
    }

    fn add_vertex(&mut self) -> usize {
        let v = self.n_vertices;
        self.n_vertices += 1;
        self.parent.push(v);
        self.bridges.push(Vec::new());
        v
    }

    /// Adds an edge reading letter `l` from `from` to `to`.
    fn add_letter_edge(&mut self, from: usize, l: Letter, to: usize) -> GEdge {
        let e = self.src.len();
        let g = generator_of(l);
        if l > 0 {
            self.src.push(from);
            self.dst.push(to);
        } else {
            self.src.push(to);
            self.dst.push(from);
        }
        self.label.push(g);
        self.alive.push(true);
        (e, l > 0)
    }

    /// Adds a closed path at `at` reading `w`; returns the oriented edges.
    pub(crate) fn add_loop(&mut self, at: usize, w: &Word) -> Vec<GEdge> {
        let ls = w.letters();
        let mut cur = at;
        let mut out = Vec::with_capacity(ls.len());
        for (i, &l) in ls.iter().enumerate() {
            let next = if i + 1 == ls.len() {
                at
            } else {
                self.add_vertex()
            };
            out.push(self.add_letter_edge(cur, l, next));
            cur = next;
        }
        out
    }

    pub(crate) fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn ends(&self, (e, f): GEdge) -> (usize, usize) {
        if f {
            (self.src[e], self.dst[e])
        } else {
            (self.dst[e], self.src[e])
        }
    }

    /// A path in the unfolded graph from `a` to `b` with freely trivial
    /// label; `a` and `b` must have been identified.
    fn connect(&self, a: usize, b: usize) -> Vec<GEdge> {
        if a == b {
            return Vec::new();
        }
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::from([a]);
        prev.insert(a, (a, usize::MAX));
        while let Some(v) = queue.pop_front() {
            if v == b {
                break;
            }
            for (i, (w, _)) in self.bridges[v].iter().enumerate() {
                if !prev.contains_key(w) {
                    prev.insert(*w, (v, i));
                    queue.push_back(*w);
                }
            }
        }
        let mut segments = Vec::new();
        let mut cur = b;
        while cur != a {
            let (p, i) = prev[&cur];
            segments.push(&self.bridges[p][i].1);
            cur = p;
        }
        tighten_gpath(segments.into_iter().rev().flatten().copied())
    }

    fn merge(&mut self, x: usize, y: usize, path: Vec<GEdge>) {
        let (rx, ry) = (self.find(x), self.find(y));
        debug_assert_ne!(rx, ry);
        let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
        self.parent[hi] = lo;
        let back: Vec<GEdge> = path.iter().rev().map(|&(e, f)| (e, !f)).collect();
        self.bridges[x].push((y, path));
        self.bridges[y].push((x, back));
    }

    /// Folds until the graph is deterministic in both directions.
    pub(crate) fn fold(&mut self) {
        'outer: loop {
            let mut out_map: HashMap<(usize, usize), usize> = HashMap::new();
            let mut in_map: HashMap<(usize, usize), usize> = HashMap::new();
            for e in 0..self.src.len() {
                if !self.alive[e] {
                    continue;
                }
                let ko = (self.find(self.src[e]), self.label[e]);
                if let Some(&e1) = out_map.get(&ko) {
                    let (d1, d2) = (self.dst[e1], self.dst[e]);
                    if self.find(d1) != self.find(d2) {
                        let mut p = vec![(e1, false)];
                        p.extend(self.connect(self.src[e1], self.src[e]));
                        p.push((e, true));
                        let p = tighten_gpath(p);
                        self.merge(d1, d2, p);
                    }
                    self.alive[e] = false;
                    continue 'outer;
                }
                out_map.insert(ko, e);
                let ki = (self.find(self.dst[e]), self.label[e]);
                if let Some(&e1) = in_map.get(&ki) {
                    let (s1, s2) = (self.src[e1], self.src[e]);
                    if self.find(s1) != self.find(s2) {
                        let mut p = vec![(e1, true)];
                        p.extend(self.connect(self.dst[e1], self.dst[e]));
                        p.push((e, false));
                        let p = tighten_gpath(p);
                        self.merge(s1, s2, p);
                    }
                    self.alive[e] = false;
                    continue 'outer;
                }
                in_map.insert(ki, e);
            }
            break;
        }
    }

    /// Transition table of the folded graph keyed by (root vertex, letter).
    fn index(&self) -> HashMap<(usize, Letter), GEdge> {
        let mut idx = HashMap::new();
        for e in 0..self.src.len() {
            if self.alive[e] {
                let g = self.label[e];
                idx.insert((self.find(self.src[e]), letter(g, true)), (e, true));
                idx.insert((self.find(self.dst[e]), letter(g, false)), (e, false));
            }
        }
        idx
    }

    /// Compact folded graph rooted at the image of `base`.
    fn to_subgroup_graph(&self, rank: usize, base: usize) -> SubgroupGraph {
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        let root = self.find(base);
        ids.insert(root, 0);
        for v in 0..self.n_vertices {
            let r = self.find(v);
            let next = ids.len();
            ids.entry(r).or_insert(next);
        }
        let mut edges = Vec::new();
        for e in 0..self.src.len() {
            if self.alive[e] {
                edges.push((
                    ids[&self.find(self.src[e])],
                    self.label[e],
                    ids[&self.find(self.dst[e])],
                ));
            }
        }
        SubgroupGraph::from_edges(rank, ids.len(), 0, edges)
    }
}

/// Rewrites elements of a finitely generated subgroup as products of a fixed
/// generating list.
#[derive(Debug, Clone)]
pub struct Expander {
    folding: Folding,
    index: HashMap<(usize, Letter), GEdge>,
    /// For each unfolded edge: (generator slot, position, forward along slot).
    slot_of_edge: Vec<(usize, usize, bool)>,
    slot_len: Vec<usize>,
}

impl Expander {
    pub fn new(generators: &[Word]) -> Self {
        let mut folding = Folding::new(1);
        let mut slot_of_edge = Vec::new();
        let mut slot_len = Vec::new();
        for (j, w) in generators.iter().enumerate() {
            let path = folding.add_loop(0, w);
            for (p, &(_, f)) in path.iter().enumerate() {
                slot_of_edge.push((j, p, f));
            }
            slot_len.push(w.len());
        }
        folding.fold();
        let index = folding.index();
        Expander {
            folding,
            index,
            slot_of_edge,
            slot_len,
        }
    }

    /// Returns `[(j, ±1), ...]` with `w = Π generators[j]^{±1}`, or `None`
    /// when `w` is not in the subgroup.
    pub fn express(&self, w: &Word) -> Option<Vec<(usize, i32)>> {
        let f = &self.folding;
        let mut cur_root = f.find(0);
        let mut lifted: Vec<GEdge> = Vec::new();
        let mut cur = 0usize;
        for &l in w.letters() {
            let ge = *self.index.get(&(cur_root, l))?;
            let (s, t) = f.ends(ge);
            lifted.extend(f.connect(cur, s));
            lifted.push(ge);
            cur = t;
            cur_root = f.find(t);
        }
        if cur_root != f.find(0) {
            return None;
        }
        lifted.extend(f.connect(cur, 0));
        let path = tighten_gpath(lifted);
        let mut out = Vec::new();
        let mut i = 0;
        while i < path.len() {
            let (e, fwd) = path[i];
            let (j, pos, along) = self.slot_of_edge[e];
            let m = self.slot_len[j];
            if fwd == along {
                debug_assert_eq!(pos, 0);
                out.push((j, 1));
            } else {
                debug_assert_eq!(pos, m - 1);
                out.push((j, -1));
            }
            i += m;
        }
        Some(out)
    }

    /// As [`Expander::express`], returning the expression as a word over
    /// generator slots (slot `j` is generator letter `j`).
    pub fn express_word(&self, w: &Word) -> Option<Word> {
        self.express(w)
            .map(|v| Word::reduce(v.into_iter().map(|(j, s)| letter(j, s > 0))))
    }
}

/// A folded graph with a basepoint, representing a subgroup of `F_rank`.
///
/// Every vertex other than the basepoint has degree at least two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupGraph {
    rank: usize,
    base: usize,
    n_vertices: usize,
    /// (source, generator, target)
    edges: Vec<(usize, usize, usize)>,
    out: Vec<BTreeMap<Letter, usize>>,
}

#[derive(Debug, Serialize)]
struct SubgroupGraphJson {
    rank: usize,
    base: usize,
    vertices: usize,
    edges: Vec<(usize, String, usize)>,
    generators: Vec<Word>,
}

impl Serialize for SubgroupGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SubgroupGraphJson {
            rank: self.rank,
            base: self.base,
            vertices: self.n_vertices,
            edges: self
                .edges
                .iter()
                .map(|&(a, g, b)| (a, letter_char(letter(g, true)).to_string(), b))
                .collect(),
            generators: self.generators(),
        }
        .serialize(s)
    }
}

/// One component of a fiber product: its group is
/// `left⁻¹ H left ∩ right⁻¹ K right`.
#[derive(Debug, Clone)]
pub struct Intersection {
    pub graph: SubgroupGraph,
    pub left: Word,
    pub right: Word,
}

impl SubgroupGraph {
    fn from_edges(
        rank: usize,
        n_vertices: usize,
        base: usize,
        edges: Vec<(usize, usize, usize)>,
    ) -> Self {
        let mut out = vec![BTreeMap::new(); n_vertices];
        for &(a, g, b) in &edges {
            out[a].insert(letter(g, true), b);
            out[b].insert(letter(g, false), a);
        }
        SubgroupGraph {
            rank,
            base,
            n_vertices,
            edges,
            out,
        }
        .trimmed()
    }

    /// Removes hanging trees not containing the basepoint and compacts ids
    /// so that the basepoint is vertex 0.
    fn trimmed(self) -> Self {
        let n = self.n_vertices;
        let mut deg: Vec<usize> = self.out.iter().map(|m| m.len()).collect();
        let mut removed = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&v| v != self.base && deg[v] <= 1).collect();
        while let Some(v) = stack.pop() {
            if removed[v] {
                continue;
            }
            removed[v] = true;
            for &w in self.out[v].values() {
                if !removed[w] && w != v {
                    deg[w] -= 1;
                    if w != self.base && deg[w] <= 1 {
                        stack.push(w);
                    }
                }
            }
        }
        // BFS order from base gives deterministic ids
        let mut ids = vec![usize::MAX; n];
        let mut order = vec![self.base];
        ids[self.base] = 0;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for &w in self.out[v].values() {
                if !removed[w] && ids[w] == usize::MAX {
                    ids[w] = order.len();
                    order.push(w);
                }
            }
        }
        let mut edges: Vec<(usize, usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(a, _, b)| ids[a] != usize::MAX && ids[b] != usize::MAX)
            .map(|&(a, g, b)| (ids[a], g, ids[b]))
            .collect();
        edges.sort();
        let m = order.len();
        let mut out = vec![BTreeMap::new(); m];
        for &(a, g, b) in &edges {
            out[a].insert(letter(g, true), b);
            out[b].insert(letter(g, false), a);
        }
        SubgroupGraph {
            rank: self.rank,
            base: 0,
            n_vertices: m,
            edges,
            out,
        }
    }

    /// Folded graph of `⟨generators⟩`.
    pub fn fold(rank: usize, generators: &[Word]) -> Self {
        let mut f = Folding::new(1);
        for w in generators {
            f.add_loop(0, w);
        }
        f.fold();
        f.to_subgroup_graph(rank, 0)
    }

    pub fn trivial(rank: usize) -> Self {
        SubgroupGraph::from_edges(rank, 1, 0, Vec::new())
    }

    pub fn whole(rank: usize) -> Self {
        SubgroupGraph::fold(rank, &(0..rank).map(Word::generator).collect::<Vec<_>>())
    }

    pub fn ambient_rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.n_vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Rank of the subgroup: `|E| − |V| + 1`.
    pub fn rank(&self) -> usize {
        self.edges.len() + 1 - self.n_vertices
    }

    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn step(&self, v: usize, l: Letter) -> Option<usize> {
        self.out[v].get(&l).copied()
    }

    /// Reads `w` from vertex `v` as far as possible; returns the vertex path
    /// and the number of letters consumed.
    pub fn read_from(&self, v: usize, w: &Word) -> (Vec<usize>, usize) {
        let mut path = vec![v];
        let mut cur = v;
        for (i, &l) in w.letters().iter().enumerate() {
            match self.step(cur, l) {
                Some(n) => {
                    cur = n;
                    path.push(n);
                }
                None => return (path, i),
            }
        }
        (path, w.len())
    }

    /// Membership: the vertex path of `w` as a loop at the basepoint.
    pub fn contains_witness(&self, w: &Word) -> Option<Vec<usize>> {
        let (path, read) = self.read_from(self.base, w);
        (read == w.len() && *path.last().unwrap() == self.base).then_some(path)
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.contains_witness(w).is_some()
    }

    pub fn contains_subgroup(&self, other: &SubgroupGraph) -> bool {
        other.generators().iter().all(|g| self.contains(g))
    }

    /// Reduced words labelling a BFS spanning tree from the basepoint.
    pub fn tree_words(&self) -> Vec<Word> {
        let mut words: Vec<Option<Word>> = vec![None; self.n_vertices];
        words[self.base] = Some(Word::identity());
        let mut queue = VecDeque::from([self.base]);
        while let Some(v) = queue.pop_front() {
            let wv = words[v].clone().unwrap();
            for (&l, &t) in &self.out[v] {
                if words[t].is_none() {
                    words[t] = Some(wv.mul(&Word::reduce([l])));
                    queue.push_back(t);
                }
            }
        }
        words.into_iter().map(|w| w.unwrap()).collect()
    }

    /// A free basis of the subgroup read off a spanning tree.
    pub fn generators(&self) -> Vec<Word> {
        let tw = self.tree_words();
        let mut gens = Vec::new();
        for &(a, g, b) in &self.edges {
            let w = tw[a].mul(&Word::generator(g)).mul(&tw[b].inverse());
            if !w.is_empty() {
                gens.push(w);
            }
        }
        debug_assert_eq!(gens.len(), self.rank());
        gens
    }

    /// Moves the basepoint off its hanging spur. Returns the core graph and
    /// the word `p` with `self = p · core · p⁻¹`.
    pub fn shaved(&self) -> (SubgroupGraph, Word) {
        if self.is_trivial() {
            return (self.clone(), Word::identity());
        }
        let mut cur = self.base;
        let mut back: Option<usize> = None;
        let mut raw = Vec::new();
        loop {
            let deg = self.out[cur].len();
            let on_spur = if back.is_none() { deg == 1 } else { deg == 2 };
            if !on_spur {
                break;
            }
            let (&l, &t) = self.out[cur]
                .iter()
                .find(|(_, &t)| Some(t) != back)
                .unwrap();
            raw.push(l);
            back = Some(cur);
            cur = t;
        }
        let p = Word::reduce(raw);
        let core = SubgroupGraph {
            rank: self.rank,
            base: cur,
            n_vertices: self.n_vertices,
            edges: self.edges.clone(),
            out: self.out.clone(),
        }
        .trimmed();
        (core, p)
    }

    /// Canonical key of the conjugacy class of the subgroup.
    pub fn conjugacy_key(&self) -> Vec<(usize, Letter, usize)> {
        let (core, _) = self.shaved();
        (0..core.n_vertices)
            .map(|r| core.canonical_from(r))
            .min()
            .unwrap_or_default()
    }

    fn canonical_from(&self, root: usize) -> Vec<(usize, Letter, usize)> {
        let mut ids = vec![usize::MAX; self.n_vertices];
        ids[root] = 0;
        let mut order = vec![root];
        let mut i = 0;
        let mut code = Vec::new();
        while i < order.len() {
            let v = order[i];
            i += 1;
            for (&l, &t) in &self.out[v] {
                if ids[t] == usize::MAX {
                    ids[t] = order.len();
                    order.push(t);
                }
                if l > 0 {
                    code.push((ids[v], l, ids[t]));
                }
            }
        }
        code.sort();
        code
    }

    /// Whether rooting `self` at `a` and `other` at `b` gives label-isomorphic
    /// graphs.
    fn rooted_iso(&self, a: usize, other: &SubgroupGraph, b: usize) -> bool {
        if self.n_vertices != other.n_vertices || self.edges.len() != other.edges.len() {
            return false;
        }
        let mut map = vec![usize::MAX; self.n_vertices];
        let mut inv = vec![usize::MAX; other.n_vertices];
        map[a] = b;
        inv[b] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            let w = map[v];
            if self.out[v].len() != other.out[w].len() {
                return false;
            }
            for (&l, &t) in &self.out[v] {
                let Some(&u) = other.out[w].get(&l) else {
                    return false;
                };
                if map[t] == usize::MAX {
                    if inv[u] != usize::MAX {
                        return false;
                    }
                    map[t] = u;
                    inv[u] = t;
                    queue.push_back(t);
                } else if map[t] != u {
                    return false;
                }
            }
        }
        true
    }

    /// Some `γ` with `γ⁻¹ H γ = K`, where `H = self`.
    pub fn conjugator(&self, other: &SubgroupGraph) -> Option<Word> {
        if self.is_trivial() || other.is_trivial() {
            return (self.is_trivial() && other.is_trivial()).then(Word::identity);
        }
        let (ch, ph) = self.shaved();
        let (ck, pk) = other.shaved();
        let tw = ch.tree_words();
        for u in 0..ch.n_vertices {
            if ch.rooted_iso(u, &ck, ck.base) {
                return Some(ph.mul(&tw[u]).mul(&pk.inverse()));
            }
        }
        None
    }

    pub fn is_conjugate(&self, other: &SubgroupGraph) -> bool {
        self.conjugator(other).is_some()
    }

    /// Some `γ` with `γ⁻¹ w γ ∈ H`.
    pub fn conjugate_into(&self, w: &Word) -> Option<Word> {
        let (c, conj) = w.cyclic_reduce();
        if c.is_empty() {
            return Some(Word::identity());
        }
        let tw = self.tree_words();
        for v in 0..self.n_vertices {
            let (path, read) = self.read_from(v, &c);
            if read == c.len() && *path.last().unwrap() == v {
                return Some(conj.mul(&tw[v].inverse()));
            }
        }
        None
    }

    /// Some `γ` with `γ⁻¹ H γ ⊆ K` where `H = self`.
    pub fn conjugate_subgroup_into(&self, other: &SubgroupGraph) -> Option<Word> {
        if self.is_trivial() {
            return Some(Word::identity());
        }
        let (ch, ph) = self.shaved();
        let tw = other.tree_words();
        'target: for u in 0..other.n_vertices {
            let mut map = vec![usize::MAX; ch.n_vertices];
            map[ch.base] = u;
            let mut queue = VecDeque::from([ch.base]);
            while let Some(v) = queue.pop_front() {
                for (&l, &t) in &ch.out[v] {
                    let Some(img) = other.step(map[v], l) else {
                        continue 'target;
                    };
                    if map[t] == usize::MAX {
                        map[t] = img;
                        queue.push_back(t);
                    } else if map[t] != img {
                        continue 'target;
                    }
                }
            }
            return Some(ph.mul(&tw[u].inverse()));
        }
        None
    }

    /// Components of the fiber product with nontrivial fundamental group.
    pub fn intersect(&self, other: &SubgroupGraph) -> Vec<Intersection> {
        let (n1, n2) = (self.n_vertices, other.n_vertices);
        let id = |a: usize, b: usize| a * n2 + b;
        let mut comp = vec![usize::MAX; n1 * n2];
        let tw1 = self.tree_words();
        let tw2 = other.tree_words();
        let mut result = Vec::new();
        // start with the basepoint pair so the first component is exact
        let starts = std::iter::once((self.base, other.base))
            .chain((0..n1).flat_map(|a| (0..n2).map(move |b| (a, b))));
        let mut n_comp = 0;
        for (a0, b0) in starts {
            if comp[id(a0, b0)] != usize::MAX {
                continue;
            }
            let c = n_comp;
            n_comp += 1;
            let mut verts = vec![(a0, b0)];
            comp[id(a0, b0)] = c;
            let mut i = 0;
            let mut edges = Vec::new();
            while i < verts.len() {
                let (a, b) = verts[i];
                i += 1;
                for (&l, &ta) in &self.out[a] {
                    if let Some(&tb) = other.out[b].get(&l) {
                        if comp[id(ta, tb)] == usize::MAX {
                            comp[id(ta, tb)] = c;
                            verts.push((ta, tb));
                        }
                        if l > 0 {
                            edges.push(((a, b), generator_of(l), (ta, tb)));
                        }
                    }
                }
            }
            if edges.len() < verts.len() {
                continue;
            }
            let local: HashMap<(usize, usize), usize> =
                verts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
            let g = SubgroupGraph::from_edges(
                self.rank,
                verts.len(),
                0,
                edges
                    .into_iter()
                    .map(|(s, g, t)| (local[&s], g, local[&t]))
                    .collect(),
            );
            if g.is_trivial() {
                continue;
            }
            result.push(Intersection {
                graph: g,
                left: tw1[a0].clone(),
                right: tw2[b0].clone(),
            });
        }
        result
    }

    /// Decides `w ∈ A·g·B` (`A = self`), returning `(a, b)` with `w = a·g·b`.
    pub fn in_double_coset(&self, g: &Word, b_graph: &SubgroupGraph, w: &Word) -> Option<(Word, Word)> {
        let gi = g.inverse();
        let conj: Vec<Word> = self
            .generators()
            .iter()
            .map(|x| gi.mul(x).mul(g))
            .collect();
        let ap = SubgroupGraph::fold(self.rank, &conj);
        let z = gi.mul(w);
        let (apath, read) = ap.read_from(ap.base, &z);
        let u1 = *apath.last().unwrap();
        let z2 = Word::reduce(z.letters()[read..].iter().copied());
        // BFS in the product of ap and B
        let nb = b_graph.n_vertices;
        let start = ap.base * nb + b_graph.base;
        let mut prev: HashMap<usize, (usize, Letter)> = HashMap::new();
        prev.insert(start, (usize::MAX, 0));
        let mut queue = VecDeque::from([start]);
        let mut hits = Vec::new();
        while let Some(s) = queue.pop_front() {
            let (a, bv) = (s / nb, s % nb);
            if a == u1 {
                hits.push(s);
            }
            for (&l, &ta) in &ap.out[a] {
                if let Some(&tb) = b_graph.out[bv].get(&l) {
                    let t = ta * nb + tb;
                    if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(t) {
                        e.insert((s, l));
                        queue.push_back(t);
                    }
                }
            }
        }
        for s in hits {
            let bv = s % nb;
            let (bpath, bread) = b_graph.read_from(bv, &z2);
            if bread != z2.len() || *bpath.last().unwrap() != b_graph.base {
                continue;
            }
            let mut raw = Vec::new();
            let mut cur = s;
            while cur != start {
                let (p, l) = prev[&cur];
                raw.push(l);
                cur = p;
            }
            raw.reverse();
            let b = Word::reduce(raw).mul(&z2);
            let a = w.mul(&b.inverse()).mul(&gi);
            debug_assert!(self.contains(&a) && b_graph.contains(&b));
            return Some((a, b));
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn sg(rank: usize, gens: &[&str]) -> SubgroupGraph {
        SubgroupGraph::fold(rank, &gens.iter().map(|s| w(s)).collect::<Vec<_>>())
    }

    #[test]
    fn fold_examples() {
        let h = sg(2, &["a"]);
        assert_eq!((h.vertex_count(), h.edge_count(), h.rank()), (1, 1, 1));
        let h = sg(2, &["a", "b"]);
        assert_eq!((h.vertex_count(), h.edge_count(), h.rank()), (1, 2, 2));
        let h = sg(2, &["a", "baB"]);
        assert_eq!((h.vertex_count(), h.edge_count(), h.rank()), (2, 3, 2));
        assert!(sg(2, &[]).is_trivial());
    }

    #[test]
    fn membership_examples() {
        let h = sg(2, &["a", "baB"]);
        assert_eq!(h.contains_witness(&w("abaB")).unwrap().len(), 5);
        assert!(!h.contains(&w("b")));
        let f2 = SubgroupGraph::whole(2);
        for x in crate::word::reduced_words(2, 4) {
            assert!(f2.contains(&x));
        }
    }

    #[test]
    fn conjugator_examples() {
        let h = sg(2, &["a"]);
        let k = sg(2, &["baB"]);
        let g = h.conjugator(&k).unwrap();
        assert_eq!(g.to_string(), "B");
        assert_eq!(w("a").conjugate_by(&g.inverse()), w("baB"));
        assert!(sg(2, &["a"]).conjugator(&sg(2, &["b"])).is_none());
        assert_eq!(h.conjugator(&h), Some(Word::identity()));
    }

    #[test]
    fn intersect_examples() {
        let r = sg(3, &["a", "b"]).intersect(&sg(3, &["b", "c"]));
        assert_eq!(r.len(), 1);
        assert!(r[0].graph.is_conjugate(&sg(3, &["b"])));
        assert!(sg(2, &["a"]).intersect(&sg(2, &["b"])).is_empty());
        let r = sg(2, &["aa", "b"]).intersect(&sg(2, &["a"]));
        assert_eq!(r.len(), 1);
        assert!(r[0].graph.is_conjugate(&sg(2, &["aa"])));
    }

    #[test]
    fn double_coset_examples() {
        let a = sg(2, &["a"]);
        let (x, y) = a.in_double_coset(&w("b"), &a, &w("ba")).unwrap();
        assert_eq!((x.to_string(), y.to_string()), ("".into(), "a".into()));
        assert!(a.in_double_coset(&w("b"), &a, &w("bb")).is_none());
        let (x, y) = a.in_double_coset(&w("b"), &a, &w("aabA")).unwrap();
        assert_eq!((x.to_string(), y.to_string()), ("aa".into(), "A".into()));
    }

    #[test]
    fn double_coset_brute_force() {
        let a = sg(2, &["a"]);
        let b = sg(2, &["ab"]);
        let g = w("b");
        let mut members = std::collections::HashSet::new();
        for i in -4..=4 {
            for j in -4..=4 {
                members.insert(w("a").pow(i).mul(&g).mul(&w("ab").pow(j)));
            }
        }
        for x in crate::word::reduced_words(2, 5) {
            let got = a.in_double_coset(&g, &b, &x);
            if members.contains(&x) {
                assert!(got.is_some(), "{x}");
            }
            if let Some((p, q)) = got {
                assert_eq!(p.mul(&g).mul(&q), x);
            }
        }
    }

    #[test]
    fn expander_rewrites_in_basis() {
        let basis = vec![w("a"), w("b"), w("bc")];
        let e = Expander::new(&basis);
        let expr = e.express_word(&w("c")).unwrap();
        assert_eq!(expr.to_string(), "Bc");
        assert_eq!(expr.substitute(&basis), w("c"));
        let e = Expander::new(&[w("aa"), w("b")]);
        assert!(e.express(&w("a")).is_none());
    }

    #[test]
    fn conjugate_into_finds_cyclic_conjugates() {
        let h = sg(2, &["a"]);
        let g = h.conjugate_into(&w("baB")).unwrap();
        assert!(h.contains(&w("baB").conjugate_by(&g.inverse())));
        assert!(sg(2, &["b"]).conjugate_into(&w("ba")).is_none());
        let k = sg(3, &["a", "b"]);
        let g = sg(3, &["cabC"]).conjugate_subgroup_into(&k).unwrap();
        assert!(k.contains(&w("cabC").conjugate_by(&g.inverse())));
    }
}
