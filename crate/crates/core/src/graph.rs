//! Mixed graphs with per-endpoint marks: ADMGs, MAGs and (partially oriented) PAGs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::VertexSet;

pub const MAX_VERTICES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    Admg,
    Mag,
    Pag,
    /// Partially oriented mixed graph: a PAG in the middle of being oriented.
    Pmg,
}

impl GraphKind {
    pub fn allows_circles(self) -> bool {
        matches!(self, GraphKind::Pag | GraphKind::Pmg)
    }
}

/// An edge listed with its endpoints in ascending order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub mark_a: Mark,
    pub mark_b: Mark,
}

/// Graph on vertices `0..n`. Each edge stores one mark per endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MixedGraph {
    n: usize,
    kind: GraphKind,
    /// `marks[a * n + b]` is the mark at `b` on the edge between `a` and `b`.
    marks: Vec<Option<Mark>>,
    adj: Vec<VertexSet>,
}

impl MixedGraph {
    pub fn new(n: usize, kind: GraphKind) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::TooManyVertices(n));
        }
        Ok(MixedGraph {
            n,
            kind,
            marks: vec![None; n * n],
            adj: vec![VertexSet::EMPTY; n],
        })
    }

    /// Builds a graph from `(a, b, mark at a, mark at b)` tuples.
    pub fn from_edges(n: usize, kind: GraphKind, edges: &[(usize, usize, Mark, Mark)]) -> Result<Self> {
        let mut g = MixedGraph::new(n, kind)?;
        for &(a, b, ma, mb) in edges {
            g.add_edge(a, b, ma, mb)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    pub fn set_kind(&mut self, kind: GraphKind) -> Result<()> {
        if !kind.allows_circles() && self.has_circle() {
            return Err(Error::CircleMark);
        }
        self.kind = kind;
        Ok(())
    }

    pub fn with_kind(mut self, kind: GraphKind) -> Result<Self> {
        self.set_kind(kind)?;
        Ok(self)
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::VertexOutOfRange { vertex: v, n: self.n });
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: usize, b: usize, mark_a: Mark, mark_b: Mark) -> Result<()> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if a == b {
            return Err(Error::InvalidEdge { a, b, reason: "self loop" });
        }
        if self.adjacent(a, b) {
            return Err(Error::InvalidEdge { a, b, reason: "already adjacent" });
        }
        if !self.kind.allows_circles() && (mark_a == Mark::Circle || mark_b == Mark::Circle) {
            return Err(Error::CircleMark);
        }
        self.marks[b * self.n + a] = Some(mark_a);
        self.marks[a * self.n + b] = Some(mark_b);
        self.adj[a].insert(b);
        self.adj[b].insert(a);
        Ok(())
    }

    pub fn add_directed(&mut self, from: usize, to: usize) -> Result<()> {
        self.add_edge(from, to, Mark::Tail, Mark::Arrow)
    }

    pub fn add_bidirected(&mut self, a: usize, b: usize) -> Result<()> {
        self.add_edge(a, b, Mark::Arrow, Mark::Arrow)
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        if a < self.n && b < self.n {
            self.marks[a * self.n + b] = None;
            self.marks[b * self.n + a] = None;
            self.adj[a].remove(b);
            self.adj[b].remove(a);
        }
    }

    /// Mark at `b` on the edge between `a` and `b`.
    #[inline]
    pub fn mark(&self, a: usize, b: usize) -> Option<Mark> {
        self.marks[a * self.n + b]
    }

    /// Overwrites the mark at `b` on an existing edge `a`–`b`.
    pub fn set_mark(&mut self, a: usize, b: usize, m: Mark) {
        debug_assert!(self.adjacent(a, b));
        self.marks[a * self.n + b] = Some(m);
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> VertexSet {
        self.adj[v]
    }

    /// `a -> b`.
    #[inline]
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.mark(b, a) == Some(Mark::Tail) && self.mark(a, b) == Some(Mark::Arrow)
    }

    /// `a <-> b`.
    #[inline]
    pub fn is_bidirected(&self, a: usize, b: usize) -> bool {
        self.mark(b, a) == Some(Mark::Arrow) && self.mark(a, b) == Some(Mark::Arrow)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |a| {
            self.adj[a]
                .iter()
                .filter(move |&b| b > a)
                .map(move |b| Edge {
                    a,
                    b,
                    mark_a: self.mark(b, a).expect("adjacency and marks agree"),
                    mark_b: self.mark(a, b).expect("adjacency and marks agree"),
                })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn has_circle(&self) -> bool {
        self.marks.contains(&Some(Mark::Circle))
    }

    pub fn has_undirected(&self) -> bool {
        self.edges().any(|e| e.mark_a == Mark::Tail && e.mark_b == Mark::Tail)
    }

    /// Same adjacencies with every mark replaced by a circle.
    pub fn circle_skeleton(&self) -> MixedGraph {
        let mut g = self.clone();
        g.kind = GraphKind::Pmg;
        for m in g.marks.iter_mut().flatten() {
            *m = Mark::Circle;
        }
        g
    }

    pub fn same_skeleton(&self, other: &MixedGraph) -> bool {
        self.n == other.n && self.adj == other.adj
    }

    /// Position-wise mark table; equal tables mean identical graphs.
    pub fn mark_table(&self) -> &[Option<Mark>] {
        &self.marks
    }

    fn ensure_no_circles(&self) -> Result<()> {
        if self.has_circle() {
            Err(Error::CircleMark)
        } else {
            Ok(())
        }
    }

    pub fn parents(&self, v: usize) -> VertexSet {
        self.adj[v].iter().filter(|&w| self.is_directed(w, v)).collect()
    }

    pub fn children(&self, v: usize) -> VertexSet {
        self.adj[v].iter().filter(|&w| self.is_directed(v, w)).collect()
    }

    pub fn siblings(&self, v: usize) -> VertexSet {
        self.adj[v].iter().filter(|&w| self.is_bidirected(v, w)).collect()
    }

    /// `an(W)`, including `W` itself.
    pub fn ancestors_of(&self, w: VertexSet) -> VertexSet {
        self.closure(w, |g, v| g.parents(v))
    }

    /// `de(W)`, including `W` itself.
    pub fn descendants_of(&self, w: VertexSet) -> VertexSet {
        self.closure(w, |g, v| g.children(v))
    }

    fn closure(&self, start: VertexSet, step: impl Fn(&Self, usize) -> VertexSet) -> VertexSet {
        let mut seen = start;
        let mut frontier = start;
        while !frontier.is_empty() {
            let mut next = VertexSet::EMPTY;
            for v in frontier {
                next = next.union(step(self, v));
            }
            frontier = next.difference(seen);
            seen = seen.union(next);
        }
        seen
    }

    /// Bidirected-connected component of `v` in the subgraph induced by `within`.
    pub fn district_within(&self, v: usize, within: VertexSet) -> VertexSet {
        let mut seen = VertexSet::singleton(v);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for w in self.siblings(u).intersection(within) {
                if !seen.contains(w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Districts of the whole graph, each listed once, ordered by smallest vertex.
    pub fn districts(&self) -> Result<Vec<VertexSet>> {
        self.ensure_no_circles()?;
        let mut left = self.vertices();
        let mut out = Vec::new();
        while let Some(v) = left.min() {
            let d = self.district_within(v, self.vertices());
            left = left.difference(d);
            out.push(d);
        }
        Ok(out)
    }

    /// Vertices of `w` with no proper descendant inside `w`.
    pub fn barren(&self, w: VertexSet) -> VertexSet {
        w.iter()
            .filter(|&v| self.descendants_of(VertexSet::singleton(v)).intersection(w) == VertexSet::singleton(v))
            .collect()
    }

    /// Union of `pa(v)` over `v` in `w`.
    pub fn parents_of(&self, w: VertexSet) -> VertexSet {
        w.iter().fold(VertexSet::EMPTY, |acc, v| acc.union(self.parents(v)))
    }

    pub fn siblings_of(&self, w: VertexSet) -> VertexSet {
        w.iter().fold(VertexSet::EMPTY, |acc, v| acc.union(self.siblings(v)))
    }
}

/// Family relations of one vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Relations {
    pub parents: VertexSet,
    pub children: VertexSet,
    pub siblings: VertexSet,
    pub ancestors: VertexSet,
    pub descendants: VertexSet,
    pub district: VertexSet,
}

pub fn relations(g: &MixedGraph, v: usize) -> Result<Relations> {
    g.check_vertex(v)?;
    g.ensure_no_circles()?;
    let one = VertexSet::singleton(v);
    Ok(Relations {
        parents: g.parents(v),
        children: g.children(v),
        siblings: g.siblings(v),
        ancestors: g.ancestors_of(one),
        descendants: g.descendants_of(one),
        district: g.district_within(v, g.vertices()),
    })
}

/// Precomputed ancestor/descendant/parent/sibling sets for graphs without circles.
#[derive(Clone, Debug)]
pub struct GraphIndex {
    pub n: usize,
    pub pa: Vec<VertexSet>,
    pub sib: Vec<VertexSet>,
    pub an: Vec<VertexSet>,
    pub de: Vec<VertexSet>,
}

impl GraphIndex {
    pub fn new(g: &MixedGraph) -> Result<Self> {
        g.ensure_no_circles()?;
        let n = g.n();
        let pa: Vec<_> = (0..n).map(|v| g.parents(v)).collect();
        let sib: Vec<_> = (0..n).map(|v| g.siblings(v)).collect();
        let an: Vec<_> = (0..n).map(|v| g.ancestors_of(VertexSet::singleton(v))).collect();
        let mut de = vec![VertexSet::EMPTY; n];
        for v in 0..n {
            for u in an[v] {
                de[u].insert(v);
            }
        }
        for v in 0..n {
            if !an[v].without(v).intersection(de[v]).is_empty() {
                return Err(Error::Cycle);
            }
        }
        Ok(GraphIndex { n, pa, sib, an, de })
    }

    pub fn ancestors(&self, w: VertexSet) -> VertexSet {
        w.iter().fold(VertexSet::EMPTY, |acc, v| acc.union(self.an[v]))
    }

    pub fn parents(&self, w: VertexSet) -> VertexSet {
        w.iter().fold(VertexSet::EMPTY, |acc, v| acc.union(self.pa[v]))
    }

    pub fn siblings(&self, w: VertexSet) -> VertexSet {
        w.iter().fold(VertexSet::EMPTY, |acc, v| acc.union(self.sib[v]))
    }

    pub fn barren(&self, w: VertexSet) -> VertexSet {
        w.iter().filter(|&v| self.de[v].intersection(w) == VertexSet::singleton(v)).collect()
    }

    pub fn is_antichain(&self, w: VertexSet) -> bool {
        self.barren(w) == w
    }

    pub fn district_within(&self, v: usize, within: VertexSet) -> VertexSet {
        let mut seen = VertexSet::singleton(v);
        let mut frontier = seen;
        while !frontier.is_empty() {
            let next = self.siblings(frontier).intersection(within).difference(seen);
            seen = seen.union(next);
            frontier = next;
        }
        seen
    }

    /// Union of the districts of `G_within` that meet `w`.
    pub fn districts_meeting(&self, w: VertexSet, within: VertexSet) -> VertexSet {
        let mut out = VertexSet::EMPTY;
        for v in w {
            if !out.contains(v) {
                out = out.union(self.district_within(v, within));
            }
        }
        out
    }
}

fn check_set(g: &MixedGraph, s: VertexSet) -> Result<()> {
    match s.max() {
        Some(v) if v >= g.n() => Err(Error::VertexOutOfRange { vertex: v, n: g.n() }),
        _ => Ok(()),
    }
}

/// Is every path between `a` and `b` blocked by `c`?
///
/// Searches walks in which colliders lie in `c` and non-colliders do not, which
/// connect exactly the pairs joined by an m-connecting path.
pub fn m_separated(g: &MixedGraph, a: VertexSet, b: VertexSet, c: VertexSet) -> Result<bool> {
    g.ensure_no_circles()?;
    for s in [a, b, c] {
        check_set(g, s)?;
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("separated sets must be nonempty".into()));
    }
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::Domain("sets in a separation statement must be disjoint".into()));
    }
    Ok(!m_connected_unchecked(g, a, b, c))
}

pub(crate) fn m_connected_unchecked(g: &MixedGraph, a: VertexSet, b: VertexSet, c: VertexSet) -> bool {
    let n = g.n();
    // state index: 2 * v + (arrived with an arrowhead at v)
    let mut seen = vec![false; 2 * n];
    let mut queue = VecDeque::new();
    for s in a {
        for w in g.neighbors(s) {
            let st = 2 * w + (g.mark(s, w) == Some(Mark::Arrow)) as usize;
            if !seen[st] {
                seen[st] = true;
                queue.push_back(st);
            }
        }
    }
    while let Some(st) = queue.pop_front() {
        let (v, arrow_in) = (st / 2, st % 2 == 1);
        if b.contains(v) {
            return true;
        }
        let in_c = c.contains(v);
        for x in g.neighbors(v) {
            let collider = arrow_in && g.mark(x, v) == Some(Mark::Arrow);
            if collider != in_c {
                continue;
            }
            let next = 2 * x + (g.mark(v, x) == Some(Mark::Arrow)) as usize;
            if !seen[next] {
                seen[next] = true;
                queue.push_back(next);
            }
        }
    }
    false
}

/// No directed cycles, no vertex that is both a sibling and an ancestor of
/// another, and no arrowheads into endpoints of undirected edges.
pub fn is_ancestral(g: &MixedGraph) -> Result<bool> {
    let idx = match GraphIndex::new(g) {
        Ok(idx) => idx,
        Err(Error::Cycle) => return Ok(false),
        Err(e) => return Err(e),
    };
    for v in 0..g.n() {
        if !idx.sib[v].intersection(idx.an[v]).is_empty() {
            return Ok(false);
        }
    }
    for e in g.edges() {
        if e.mark_a == Mark::Tail && e.mark_b == Mark::Tail {
            for v in [e.a, e.b] {
                let into = g.neighbors(v).iter().any(|w| g.mark(w, v) == Some(Mark::Arrow));
                if into {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Is there a path between `a` and `b` whose inner vertices are all colliders
/// and ancestors of `{a, b}`?
pub(crate) fn has_inducing_path(g: &MixedGraph, idx: &GraphIndex, a: usize, b: usize) -> bool {
    let allowed = idx.ancestors(VertexSet::from([a, b]));
    let n = g.n();
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    for w in g.neighbors(a) {
        if w == b {
            return true;
        }
        if allowed.contains(w) && g.mark(a, w) == Some(Mark::Arrow) && !seen[w] {
            seen[w] = true;
            stack.push(w);
        }
    }
    // every vertex on the stack was entered through an arrowhead
    while let Some(v) = stack.pop() {
        for x in g.neighbors(v) {
            if g.mark(x, v) != Some(Mark::Arrow) {
                continue;
            }
            if x == b {
                return true;
            }
            if x != a && allowed.contains(x) && g.mark(v, x) == Some(Mark::Arrow) && !seen[x] {
                seen[x] = true;
                stack.push(x);
            }
        }
    }
    false
}

/// Ancestral graph in which every nonadjacent pair can be m-separated.
pub fn is_maximal(g: &MixedGraph) -> Result<bool> {
    if !is_ancestral(g)? {
        return Err(Error::NotAncestral);
    }
    let idx = GraphIndex::new(g)?;
    for a in 0..g.n() {
        for b in a + 1..g.n() {
            if !g.adjacent(a, b) && has_inducing_path(g, &idx, a, b) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Validates that `g` is a MAG and returns it relabelled with that kind.
pub fn as_mag(g: &MixedGraph) -> Result<MixedGraph> {
    if !is_ancestral(g)? {
        return Err(Error::NotAncestral);
    }
    if !is_maximal(g)? {
        return Err(Error::Domain("graph is ancestral but not maximal".into()));
    }
    g.clone().with_kind(GraphKind::Mag)
}

/// The MAG over the same vertices with the same m-separations as an ADMG.
pub fn project_to_mag(g: &MixedGraph) -> Result<MixedGraph> {
    if g.has_undirected() {
        return Err(Error::Domain("ADMGs have no undirected edges".into()));
    }
    let idx = GraphIndex::new(g)?;
    let mut out = MixedGraph::new(g.n(), GraphKind::Mag)?;
    for a in 0..g.n() {
        for b in a + 1..g.n() {
            if !g.adjacent(a, b) && !has_inducing_path(g, &idx, a, b) {
                continue;
            }
            if idx.an[b].contains(a) {
                out.add_directed(a, b)?;
            } else if idx.an[a].contains(b) {
                out.add_directed(b, a)?;
            } else {
                out.add_bidirected(a, b)?;
            }
        }
    }
    Ok(out)
}

/// Topological order of the directed part, breaking ties by smallest vertex id.
pub fn topological_order(g: &MixedGraph) -> Result<Vec<usize>> {
    g.ensure_no_circles()?;
    let n = g.n();
    let mut indeg: Vec<usize> = (0..n).map(|v| g.parents(v).len()).collect();
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for c in g.children(v) {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                heap.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        return Err(Error::Cycle);
    }
    Ok(order)
}

/// Inverse of an order: `rank[v]` is the position of `v`.
pub fn ranks(order: &[usize]) -> Vec<usize> {
    let mut rank = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    rank
}
