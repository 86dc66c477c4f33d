//! Orientation rules for partial ancestral graphs.
//!
//! Rules 1 to 4 propagate arrowheads and tails that every MAG in the class
//! shares; rules 5 to 10 add the remaining invariant tails. Rules only ever
//! replace circles. A rule that would overwrite a non-circle mark sets the
//! conflict flag instead, which marks the working graph as inconsistent.

use std::collections::VecDeque;

use serde::Serialize;

use crate::graph::{GraphKind, Mark, MixedGraph};
use crate::set::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    R0,
    OneAdjacency,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleApplication {
    pub rule: Rule,
    pub vertices: Vec<usize>,
}

/// `⟨d, ..., a, b, c⟩`: every vertex strictly between `d` and `b` is a
/// collider on the path and a parent of `c`, and `d` is not adjacent to `c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DiscriminatingPath {
    pub vertices: Vec<usize>,
}

impl DiscriminatingPath {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    /// The vertex whose collider status the path decides.
    pub fn pivot(&self) -> usize {
        self.vertices[self.vertices.len() - 2]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("paths are nonempty")
    }

    /// The vertex just before the pivot.
    pub fn before_pivot(&self) -> usize {
        self.vertices[self.vertices.len() - 3]
    }

    /// `{d, b, c}`.
    pub fn triple(&self) -> VertexSet {
        VertexSet::from([self.start(), self.pivot(), self.end()])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum R4Choice {
    Collider,
    NonCollider,
    Fork,
}

pub trait R4Oracle {
    fn decide(&self, working: &MixedGraph, path: &DiscriminatingPath) -> R4Choice;
}

impl<F: Fn(&MixedGraph, &DiscriminatingPath) -> R4Choice> R4Oracle for F {
    fn decide(&self, working: &MixedGraph, path: &DiscriminatingPath) -> R4Choice {
        self(working, path)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Closure {
    Complete,
    Fork(DiscriminatingPath),
    Conflict,
}

pub const DEFAULT_PATH_CAP: usize = 10_000;
const TAIL_SEARCH_BUDGET: usize = 200_000;

/// A graph being oriented.
#[derive(Clone, Debug)]
pub struct Orienter {
    pub graph: MixedGraph,
    pub conflict: bool,
    pub trace: Option<Vec<RuleApplication>>,
    /// Remaining vertex expansions for discriminating-path searches.
    pub path_budget: usize,
    pub path_cap_hit: bool,
}

impl Orienter {
    pub fn new(mut graph: MixedGraph, tracing: bool) -> Self {
        graph.set_kind(GraphKind::Pmg).expect("PMGs admit every mark");
        Orienter { graph, conflict: false, trace: tracing.then(Vec::new), path_budget: DEFAULT_PATH_CAP, path_cap_hit: false }
    }

    /// Circle skeleton of `g`.
    pub fn from_skeleton(g: &MixedGraph, tracing: bool) -> Self {
        Orienter::new(g.circle_skeleton(), tracing)
    }

    pub fn with_path_cap(mut self, cap: usize) -> Self {
        self.path_budget = cap;
        self
    }

    fn log(&mut self, rule: Rule, vertices: &[usize]) {
        if let Some(t) = self.trace.as_mut() {
            t.push(RuleApplication { rule, vertices: vertices.to_vec() });
        }
    }

    fn set(&mut self, a: usize, b: usize, m: Mark) -> bool {
        match self.graph.mark(a, b) {
            Some(Mark::Circle) => {
                self.graph.set_mark(a, b, m);
                true
            }
            Some(cur) if cur == m => false,
            Some(_) => {
                self.conflict = true;
                false
            }
            None => {
                self.conflict = true;
                false
            }
        }
    }

    /// Arrowhead at `b` on the edge `a`–`b`.
    pub fn arrow(&mut self, a: usize, b: usize) -> bool {
        self.set(a, b, Mark::Arrow)
    }

    /// Tail at `b` on the edge `a`–`b`.
    pub fn tail(&mut self, a: usize, b: usize) -> bool {
        self.set(a, b, Mark::Tail)
    }

    pub fn orient_collider(&mut self, a: usize, b: usize, c: usize, rule: Rule) -> bool {
        let changed = self.arrow(a, b) | self.arrow(c, b);
        if changed {
            self.log(rule, &[a, b, c]);
        }
        changed
    }

    fn mark(&self, a: usize, b: usize) -> Option<Mark> {
        self.graph.mark(a, b)
    }

    /// Marks the pivot of `path` as a collider or a non-collider.
    pub fn resolve_discriminating(&mut self, path: &DiscriminatingPath, collider: bool) {
        let (a, b, c) = (path.before_pivot(), path.pivot(), path.end());
        if collider {
            self.arrow(a, b);
            self.arrow(c, b);
            self.arrow(b, c);
        } else {
            self.tail(c, b);
            self.arrow(b, c);
        }
        self.log(Rule::R4, &path.vertices);
    }

    // a *-> b o-* c, a and c nonadjacent  =>  b -> c
    fn r1(&mut self) -> bool {
        let g = &self.graph;
        let mut todo = Vec::new();
        for b in 0..g.n() {
            for c in g.neighbors(b) {
                if g.mark(c, b) != Some(Mark::Circle) {
                    continue;
                }
                let hit = g.neighbors(b).iter().find(|&a| a != c && g.mark(a, b) == Some(Mark::Arrow) && !g.adjacent(a, c));
                if let Some(a) = hit {
                    todo.push((a, b, c));
                }
            }
        }
        let mut changed = false;
        for (a, b, c) in todo {
            if self.mark(c, b) == Some(Mark::Circle) {
                self.tail(c, b);
                self.arrow(b, c);
                self.log(Rule::R1, &[a, b, c]);
                changed = true;
            }
        }
        changed
    }

    // (a -> b *-> c or a *-> b -> c) and a *-o c  =>  a *-> c
    fn r2(&mut self) -> bool {
        let g = &self.graph;
        let mut todo = Vec::new();
        for a in 0..g.n() {
            for c in g.neighbors(a) {
                if g.mark(a, c) != Some(Mark::Circle) {
                    continue;
                }
                let via = g.neighbors(a).intersection(g.neighbors(c)).iter().find(|&b| {
                    (g.is_directed(a, b) && g.mark(b, c) == Some(Mark::Arrow))
                        || (g.mark(a, b) == Some(Mark::Arrow) && g.is_directed(b, c))
                });
                if let Some(b) = via {
                    todo.push((a, b, c));
                }
            }
        }
        let mut changed = false;
        for (a, b, c) in todo {
            if self.arrow(a, c) {
                self.log(Rule::R2, &[a, b, c]);
                changed = true;
            }
        }
        changed
    }

    // a *-> b <-* c, a *-o d o-* c, a and c nonadjacent, d *-o b  =>  d *-> b
    fn r3(&mut self) -> bool {
        let g = &self.graph;
        let mut todo = Vec::new();
        for b in 0..g.n() {
            let into: Vec<usize> = g.neighbors(b).iter().filter(|&x| g.mark(x, b) == Some(Mark::Arrow)).collect();
            if into.len() < 2 {
                continue;
            }
            for d in g.neighbors(b) {
                if g.mark(d, b) != Some(Mark::Circle) {
                    continue;
                }
                'pairs: for (i, &a) in into.iter().enumerate() {
                    for &c in &into[i + 1..] {
                        if a == d || c == d || g.adjacent(a, c) {
                            continue;
                        }
                        if g.mark(a, d) == Some(Mark::Circle) && g.mark(c, d) == Some(Mark::Circle) {
                            todo.push((a, d, c, b));
                            break 'pairs;
                        }
                    }
                }
            }
        }
        let mut changed = false;
        for (a, d, c, b) in todo {
            if self.arrow(d, b) {
                self.log(Rule::R3, &[a, d, c, b]);
                changed = true;
            }
        }
        changed
    }

    /// Shortest discriminating path for `b` towards `c` from each possible start.
    pub fn discriminating_paths(&mut self, b: usize, c: usize, first_only: bool) -> Vec<DiscriminatingPath> {
        let g = &self.graph;
        let n = g.n();
        let mut out = Vec::new();
        if !g.adjacent(b, c) {
            return out;
        }
        let mut prev = vec![usize::MAX; n];
        let mut queued = VertexSet::from([b, c]);
        let mut found = VertexSet::EMPTY;
        let mut queue = VecDeque::new();
        for a in g.neighbors(b).intersection(g.neighbors(c)) {
            if g.mark(b, a) == Some(Mark::Arrow) && g.is_directed(a, c) {
                prev[a] = b;
                queued.insert(a);
                queue.push_back(a);
            }
        }
        while let Some(v) = queue.pop_front() {
            if self.path_budget == 0 {
                self.path_cap_hit = true;
                break;
            }
            self.path_budget -= 1;
            for x in g.neighbors(v) {
                if queued.contains(x) || found.contains(x) || g.mark(x, v) != Some(Mark::Arrow) {
                    continue;
                }
                if !g.adjacent(x, c) {
                    found.insert(x);
                    let mut vertices = vec![x];
                    let mut cur = v;
                    while cur != b {
                        vertices.push(cur);
                        cur = prev[cur];
                    }
                    vertices.push(b);
                    vertices.push(c);
                    out.push(DiscriminatingPath { vertices });
                    if first_only {
                        return out;
                    }
                } else if g.is_directed(x, c) && g.mark(v, x) == Some(Mark::Arrow) {
                    prev[x] = v;
                    queued.insert(x);
                    queue.push_back(x);
                }
            }
        }
        out
    }

    fn next_r4_site(&mut self) -> Option<DiscriminatingPath> {
        let n = self.graph.n();
        for c in 0..n {
            for b in self.graph.neighbors(c) {
                if self.graph.mark(c, b) == Some(Mark::Circle) {
                    if let Some(p) = self.discriminating_paths(b, c, true).pop() {
                        return Some(p);
                    }
                }
            }
        }
        None
    }

    /// Applies rules 1 to 4 until nothing changes or `oracle` asks for a fork.
    pub fn close_arrows(&mut self, oracle: &dyn R4Oracle) -> Closure {
        loop {
            if self.conflict {
                return Closure::Conflict;
            }
            if self.r1() | self.r2() | self.r3() {
                continue;
            }
            if self.conflict {
                return Closure::Conflict;
            }
            let Some(path) = self.next_r4_site() else {
                return Closure::Complete;
            };
            match oracle.decide(&self.graph, &path) {
                R4Choice::Collider => self.resolve_discriminating(&path, true),
                R4Choice::NonCollider => self.resolve_discriminating(&path, false),
                R4Choice::Fork => return Closure::Fork(path),
            }
        }
    }

    /// Applies rules 5 to 10 until nothing changes.
    pub fn close_tails(&mut self) {
        loop {
            let changed = self.r5() | self.r6() | self.r7() | self.r8() | self.r9() | self.r10();
            if !changed {
                break;
            }
        }
    }

    fn is_circle_edge(&self, a: usize, b: usize) -> bool {
        self.mark(a, b) == Some(Mark::Circle) && self.mark(b, a) == Some(Mark::Circle)
    }

    /// Uncovered path `⟨from, next, ..., to⟩` along edges accepted by `step`,
    /// with the extra requirements that `next` avoids `avoid_next` and the
    /// vertex before `to` avoids `avoid_last`.
    fn uncovered_path(
        &self,
        from: usize,
        to: usize,
        step: &dyn Fn(&MixedGraph, usize, usize) -> bool,
        first: VertexSet,
        last_ok: &dyn Fn(usize) -> bool,
        min_inner: usize,
    ) -> Option<Vec<usize>> {
        let g = &self.graph;
        let mut budget = TAIL_SEARCH_BUDGET;
        let mut path = vec![from];
        fn dfs(
            g: &MixedGraph,
            path: &mut Vec<usize>,
            to: usize,
            step: &dyn Fn(&MixedGraph, usize, usize) -> bool,
            last_ok: &dyn Fn(usize) -> bool,
            min_inner: usize,
            budget: &mut usize,
            on_path: VertexSet,
        ) -> bool {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let cur = *path.last().unwrap();
            let prev = path.len().checked_sub(2).map(|i| path[i]);
            for x in g.neighbors(cur) {
                if on_path.contains(x) || !step(g, cur, x) {
                    continue;
                }
                if prev.is_some_and(|p| g.adjacent(p, x)) {
                    continue;
                }
                if x == to {
                    if path.len() > min_inner && last_ok(cur) {
                        path.push(x);
                        return true;
                    }
                    continue;
                }
                path.push(x);
                if dfs(g, path, to, step, last_ok, min_inner, budget, on_path.with(x)) {
                    return true;
                }
                path.pop();
            }
            false
        }
        for x in first {
            if x == to || !g.adjacent(from, x) || !step(g, from, x) {
                continue;
            }
            path.truncate(1);
            path.push(x);
            if dfs(g, &mut path, to, step, last_ok, min_inner, &mut budget, VertexSet::from([from, x])) {
                return Some(path);
            }
        }
        None
    }

    // a o-o b with an uncovered circle path ⟨a, c, ..., d, b⟩, a-d and b-c
    // nonadjacent  =>  a - b and every edge of the path undirected
    fn r5(&mut self) -> bool {
        let n = self.graph.n();
        for a in 0..n {
            for b in self.graph.neighbors(a) {
                if !self.is_circle_edge(a, b) {
                    continue;
                }
                let g = &self.graph;
                let first: VertexSet = g.neighbors(a).iter().filter(|&c| c != b && !g.adjacent(b, c)).collect();
                let step = |g: &MixedGraph, u: usize, v: usize| g.mark(u, v) == Some(Mark::Circle) && g.mark(v, u) == Some(Mark::Circle);
                let last_ok = |d: usize| d != a && !g.adjacent(a, d);
                if let Some(path) = self.uncovered_path(a, b, &step, first, &last_ok, 2) {
                    self.tail(a, b);
                    self.tail(b, a);
                    for w in path.windows(2) {
                        self.tail(w[0], w[1]);
                        self.tail(w[1], w[0]);
                    }
                    self.log(Rule::R5, &path);
                    return true;
                }
            }
        }
        false
    }

    // a - b o-* c  =>  b -* c
    fn r6(&mut self) -> bool {
        let g = &self.graph;
        let mut todo = Vec::new();
        for b in 0..g.n() {
            let undirected = g.neighbors(b).iter().find(|&a| g.mark(a, b) == Some(Mark::Tail) && g.mark(b, a) == Some(Mark::Tail));
            if let Some(a) = undirected {
                for c in g.neighbors(b) {
                    if c != a && g.mark(c, b) == Some(Mark::Circle) {
                        todo.push((a, b, c));
                    }
                }
            }
        }
        let mut changed = false;
        for (a, b, c) in todo {
            if self.tail(c, b) {
                self.log(Rule::R6, &[a, b, c]);
                changed = true;
            }
        }
        changed
    }

    // a -o b o-* c, a and c nonadjacent  =>  b -* c
    fn r7(&mut self) -> bool {
        let g = &self.graph;
        let mut todo = Vec::new();
        for b in 0..g.n() {
            for c in g.neighbors(b) {
                if g.mark(c, b) != Some(Mark::Circle) {
                    continue;
                }
                let hit = g.neighbors(b).iter().find(|&a| {
                    a != c && g.mark(b, a) == Some(Mark::Tail) && g.mark(a, b) == Some(Mark::Circle) && !g.adjacent(a, c)
                });
                if let Some(a) = hit {
                    todo.push((a, b, c));
                }
            }
        }
        let mut changed = false;
        for (a, b, c) in todo {
            if self.tail(c, b) {
                self.log(Rule::R7, &[a, b, c]);
                changed = true;
            }
        }
        changed
    }

    fn circle_arrow(&self, a: usize, c: usize) -> bool {
        self.mark(c, a) == Some(Mark::Circle) && self.mark(a, c) == Some(Mark::Arrow)
    }

    // (a -> b -> c or a -o b -> c) and a o-> c  =>  a -> c
    fn r8(&mut self) -> bool {
        let g = &self.graph;
        let mut todo = Vec::new();
        for a in 0..g.n() {
            for c in g.neighbors(a) {
                if !self.circle_arrow(a, c) {
                    continue;
                }
                let via = g.neighbors(a).intersection(g.neighbors(c)).iter().find(|&b| {
                    g.is_directed(b, c)
                        && g.mark(b, a) == Some(Mark::Tail)
                        && matches!(g.mark(a, b), Some(Mark::Arrow) | Some(Mark::Circle))
                });
                if let Some(b) = via {
                    todo.push((a, b, c));
                }
            }
        }
        let mut changed = false;
        for (a, b, c) in todo {
            if self.tail(c, a) {
                self.log(Rule::R8, &[a, b, c]);
                changed = true;
            }
        }
        changed
    }

    fn potentially_directed(g: &MixedGraph, u: usize, v: usize) -> bool {
        g.mark(v, u) != Some(Mark::Arrow) && g.mark(u, v) != Some(Mark::Tail)
    }

    // a o-> c with an uncovered p.d. path ⟨a, b, ..., c⟩, b and c nonadjacent  =>  a -> c
    fn r9(&mut self) -> bool {
        let n = self.graph.n();
        for a in 0..n {
            for c in self.graph.neighbors(a) {
                if !self.circle_arrow(a, c) {
                    continue;
                }
                let g = &self.graph;
                let first: VertexSet = g.neighbors(a).iter().filter(|&b| b != c && !g.adjacent(b, c)).collect();
                if let Some(path) = self.uncovered_path(a, c, &Self::potentially_directed, first, &|_| true, 1) {
                    self.tail(c, a);
                    self.log(Rule::R9, &path);
                    return true;
                }
            }
        }
        false
    }

    // a o-> c, b -> c <- d, uncovered p.d. paths from a to b and from a to d
    // leaving a through distinct nonadjacent vertices  =>  a -> c
    fn r10(&mut self) -> bool {
        let n = self.graph.n();
        for a in 0..n {
            for c in self.graph.neighbors(a) {
                if !self.circle_arrow(a, c) {
                    continue;
                }
                let g = &self.graph;
                let parents: Vec<usize> = g.neighbors(c).iter().filter(|&b| b != a && g.is_directed(b, c)).collect();
                if parents.len() < 2 {
                    continue;
                }
                let starts: Vec<usize> = g
                    .neighbors(a)
                    .iter()
                    .filter(|&x| x != c && Self::potentially_directed(g, a, x))
                    .collect();
                // firsts[i]: vertices next to a on some uncovered p.d. path from a to parents[i]
                let firsts: Vec<VertexSet> = parents
                    .iter()
                    .map(|&p| {
                        starts
                            .iter()
                            .copied()
                            .filter(|&x| {
                                x == p
                                    || self
                                        .uncovered_path(a, p, &Self::potentially_directed, VertexSet::singleton(x), &|_| true, 1)
                                        .is_some()
                            })
                            .collect()
                    })
                    .collect();
                for i in 0..parents.len() {
                    for j in i + 1..parents.len() {
                        let ok = firsts[i].iter().any(|x| firsts[j].iter().any(|y| x != y && !g.adjacent(x, y)));
                        if ok {
                            let (b, d) = (parents[i], parents[j]);
                            self.tail(c, a);
                            self.log(Rule::R10, &[a, b, c, d]);
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}
