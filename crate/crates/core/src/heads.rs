//! Heads and tails of a MAG with the parametrizing set they generate.
//!
//! A head is a barren set that is bidirected-connected once the graph is cut
//! down to the head's ancestors. Two MAGs are Markov equivalent exactly when
//! their parametrizing sets `{H ∪ A : A ⊆ tail(H)}` coincide.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{GraphIndex, MixedGraph};
use crate::set::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct HeadTail {
    pub head: VertexSet,
    pub tail: VertexSet,
}

pub fn is_head(idx: &GraphIndex, h: VertexSet) -> bool {
    let Some(v) = h.min() else { return false };
    if !idx.is_antichain(h) {
        return false;
    }
    h.is_subset(idx.district_within(v, idx.ancestors(h)))
}

/// `dis_{an(H)}(H)`: the district of `G_{an(H)}` holding the head.
pub fn head_district(idx: &GraphIndex, h: VertexSet) -> VertexSet {
    idx.districts_meeting(h, idx.ancestors(h))
}

pub fn tail_of(idx: &GraphIndex, h: VertexSet) -> VertexSet {
    let d = head_district(idx, h);
    d.union(idx.parents(d)).difference(h)
}

/// `ceil(W)`: members of `W` with no proper ancestor in `W`.
pub fn ceiling(idx: &GraphIndex, w: VertexSet) -> VertexSet {
    w.iter().filter(|&v| idx.an[v].intersection(w) == VertexSet::singleton(v)).collect()
}

/// Siblings of the head's district that lie outside it.
pub fn hamlet(idx: &GraphIndex, h: VertexSet) -> VertexSet {
    let d = head_district(idx, h);
    idx.siblings(d).difference(d)
}

/// Calls `visit` on every nonempty antichain inside `within` of size at most
/// `cap`, growing sets in ascending vertex order.
fn for_each_antichain(
    idx: &GraphIndex,
    within: VertexSet,
    cap: usize,
    visit: &mut impl FnMut(VertexSet) -> ControlFlow<()>,
) -> ControlFlow<()> {
    fn grow(
        idx: &GraphIndex,
        cur: VertexSet,
        allowed: VertexSet,
        cap: usize,
        visit: &mut impl FnMut(VertexSet) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        for v in allowed {
            let next = cur.with(v);
            visit(next)?;
            if next.len() < cap {
                let later = VertexSet::from_bits(allowed.bits() & u64::MAX.checked_shl(v as u32 + 1).unwrap_or(0));
                let rest = later.difference(idx.an[v]).difference(idx.de[v]);
                grow(idx, next, rest, cap, visit)?;
            }
        }
        ControlFlow::Continue(())
    }
    grow(idx, VertexSet::EMPTY, within, cap, visit)
}

fn visit_heads(
    idx: &GraphIndex,
    g: &MixedGraph,
    cap: usize,
    mut visit: impl FnMut(VertexSet) -> ControlFlow<()>,
) -> Result<ControlFlow<()>> {
    for d in g.districts()? {
        let flow = for_each_antichain(idx, d, cap, &mut |h| if is_head(idx, h) { visit(h) } else { ControlFlow::Continue(()) });
        if flow.is_break() {
            return Ok(flow);
        }
    }
    Ok(ControlFlow::Continue(()))
}

/// All heads with their tails, ordered by size then by sorted vertex list.
/// `max_size` limits the head size.
pub fn enumerate_heads(g: &MixedGraph, max_size: Option<usize>) -> Result<Vec<HeadTail>> {
    let idx = GraphIndex::new(g)?;
    Ok(heads_indexed(&idx, g, max_size))
}

pub(crate) fn heads_indexed(idx: &GraphIndex, g: &MixedGraph, max_size: Option<usize>) -> Vec<HeadTail> {
    let mut out = Vec::new();
    let cap = max_size.unwrap_or(g.n());
    let _ = visit_heads(idx, g, cap, |head| {
        out.push(HeadTail { head, tail: tail_of(idx, head) });
        ControlFlow::Continue(())
    });
    out.sort_by_key(|ht| (ht.head.len(), ht.head.to_vec()));
    out
}

pub fn max_head_size(g: &MixedGraph) -> Result<usize> {
    Ok(enumerate_heads(g, None)?.iter().map(|ht| ht.head.len()).max().unwrap_or(0))
}

/// Does `g` have a head with more than `k` vertices? Stops at the first one.
pub fn has_head_larger_than(g: &MixedGraph, k: usize) -> Result<bool> {
    let idx = GraphIndex::new(g)?;
    let flow = visit_heads(&idx, g, g.n(), |h| if h.len() > k { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })?;
    Ok(flow.is_break())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParametrizingSet {
    pub n: usize,
    sets: BTreeSet<VertexSet>,
}

impl ParametrizingSet {
    pub fn from_sets(n: usize, sets: impl IntoIterator<Item = VertexSet>) -> Self {
        ParametrizingSet { n, sets: sets.into_iter().collect() }
    }

    pub fn contains(&self, w: VertexSet) -> bool {
        self.sets.contains(&w)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexSet> + '_ {
        self.sets.iter().copied()
    }

    /// Pairs in the collection; for a parametrizing set these are the adjacencies.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.contains(VertexSet::from([a, b]))
    }
}

pub fn parametrizing_set(g: &MixedGraph) -> Result<ParametrizingSet> {
    let idx = GraphIndex::new(g)?;
    let mut sets = BTreeSet::new();
    for ht in heads_indexed(&idx, g, None) {
        for extra in ht.tail.subsets() {
            sets.insert(ht.head.union(extra));
        }
    }
    Ok(ParametrizingSet { n: g.n(), sets })
}

/// Membership in the parametrizing set without building it.
pub fn in_parametrizing_set(idx: &GraphIndex, w: VertexSet) -> bool {
    w.subsets().skip(1).any(|h| is_head(idx, h) && w.difference(h).is_subset(tail_of(idx, h)))
}

/// Members of size `2..=k`.
pub fn restricted_parametrizing_set(g: &MixedGraph, k: usize) -> Result<ParametrizingSet> {
    let idx = GraphIndex::new(g)?;
    let mut sets = BTreeSet::new();
    for ht in heads_indexed(&idx, g, Some(k)) {
        let room = k - ht.head.len();
        for extra in ht.tail.subsets().filter(|s| s.len() <= room) {
            let w = ht.head.union(extra);
            if w.len() >= 2 {
                sets.insert(w);
            }
        }
    }
    Ok(ParametrizingSet { n: g.n(), sets })
}

fn adjacency_count(g: &MixedGraph, w: VertexSet) -> usize {
    let vs = w.to_vec();
    let mut count = 0;
    for (i, &a) in vs.iter().enumerate() {
        count += vs[i + 1..].iter().filter(|&&b| g.adjacent(a, b)).count();
    }
    count
}

/// Adjacent pairs plus the 3-element members with one or two adjacencies.
pub fn s3_tilde(g: &MixedGraph) -> Result<ParametrizingSet> {
    let idx = GraphIndex::new(g)?;
    let n = g.n();
    let mut sets = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            if g.adjacent(a, b) {
                sets.insert(VertexSet::from([a, b]));
            }
            for c in b + 1..n {
                let w = VertexSet::from([a, b, c]);
                let adj = adjacency_count(g, w);
                if (adj == 1 || adj == 2) && in_parametrizing_set(&idx, w) {
                    sets.insert(w);
                }
            }
        }
    }
    Ok(ParametrizingSet { n, sets })
}

pub fn markov_equivalent(g1: &MixedGraph, g2: &MixedGraph) -> Result<bool> {
    if g1.n() != g2.n() || !g1.same_skeleton(g2) {
        return Ok(false);
    }
    Ok(parametrizing_set(g1)? == parametrizing_set(g2)?)
}
