//! Conditional-independence lists that characterize the model of a MAG.
//!
//! Heads are grouped by their last vertex under a topological order. Removing
//! a non-final head vertex `k` from the ancestral set of a head `H` leaves a
//! smaller head `H'` around the same final vertex; each such step yields one
//! independence. The refined property keeps a single step into every
//! non-maximal head, the ordered local property keeps them all, and the
//! pairwise property uses the ancestral separating set of each nonadjacent pair.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ranks, topological_order, GraphIndex, MixedGraph};
use crate::heads::{ceiling, hamlet, heads_indexed, HeadTail};
use crate::set::VertexSet;

/// `a ⊥ b | c`, stored with `a` holding the smaller minimum vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CiStatement {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c: VertexSet,
}

impl CiStatement {
    /// `None` when either side is empty.
    pub fn new(a: VertexSet, b: VertexSet, c: VertexSet) -> Option<Self> {
        let (amin, bmin) = (a.min()?, b.min()?);
        debug_assert!(a.is_disjoint(b) && a.is_disjoint(c) && b.is_disjoint(c));
        Some(if amin < bmin { CiStatement { a, b, c } } else { CiStatement { a: b, b: a, c } })
    }

    fn sort_key(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        (self.a.to_vec(), self.b.to_vec(), self.c.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MarkovProperty {
    #[default]
    Refined,
    OrderedLocal,
    Pairwise,
}

/// Head bookkeeping for one graph under one topological order.
pub struct HeadStructure<'g> {
    pub graph: &'g MixedGraph,
    pub idx: GraphIndex,
    pub order: Vec<usize>,
    pub rank: Vec<usize>,
    tails: HashMap<VertexSet, VertexSet>,
    by_anchor: Vec<Vec<VertexSet>>,
}

impl<'g> HeadStructure<'g> {
    pub fn new(g: &'g MixedGraph, order: Option<&[usize]>) -> Result<Self> {
        let idx = GraphIndex::new(g)?;
        let order = match order {
            Some(o) => {
                check_order(g, &idx, o)?;
                o.to_vec()
            }
            None => topological_order(g)?,
        };
        let rank = ranks(&order);
        let heads = heads_indexed(&idx, g, None);
        let mut by_anchor = vec![Vec::new(); g.n()];
        let mut tails = HashMap::with_capacity(heads.len());
        for ht in heads {
            by_anchor[anchor_of(&rank, ht.head)].push(ht.head);
            tails.insert(ht.head, ht.tail);
        }
        Ok(HeadStructure { graph: g, idx, order, rank, tails, by_anchor })
    }

    pub fn tail(&self, h: VertexSet) -> VertexSet {
        self.tails.get(&h).copied().unwrap_or_else(|| crate::heads::tail_of(&self.idx, h))
    }

    /// Heads whose last vertex under the order is `i`.
    pub fn heads_at(&self, i: usize) -> &[VertexSet] {
        &self.by_anchor[i]
    }

    /// Vertices up to and including `i` in the order.
    pub fn prefix(&self, i: usize) -> VertexSet {
        self.order[..=self.rank[i]].iter().copied().collect()
    }

    /// The head of `i` in the ancestral set of its predecessors.
    pub fn maximal_head(&self, i: usize) -> VertexSet {
        self.idx.barren(self.idx.district_within(i, self.prefix(i)))
    }

    pub fn anchor(&self, h: VertexSet) -> usize {
        anchor_of(&self.rank, h)
    }

    /// Head left after removing `k` from the ancestors of head `h`.
    pub fn marginalize(&self, h: VertexSet, k: usize) -> Option<VertexSet> {
        let i = self.anchor(h);
        if k == i || !h.contains(k) {
            return None;
        }
        let rest = self.idx.ancestors(h).without(k);
        Some(self.idx.barren(self.idx.district_within(i, rest)))
    }

    /// `i ⊥ (H ∪ T) \ (H' ∪ T' ∪ {k}) | (H' ∪ T') \ {i}` for the step `h --k--> h2`.
    pub fn step_statement(&self, h: VertexSet, k: usize, h2: VertexSet) -> Option<CiStatement> {
        let i = self.anchor(h);
        let big = h.union(self.tail(h));
        let small = h2.union(self.tail(h2));
        CiStatement::new(VertexSet::singleton(i), big.difference(small).without(k), small.without(i))
    }

    pub fn markov_blanket(&self, i: usize, within: VertexSet) -> VertexSet {
        let d = self.idx.district_within(i, within);
        d.union(self.idx.parents(d)).without(i)
    }

    /// `i ⊥ pre(i) \ mb(i, [i]) | mb(i, [i])`.
    pub fn local_statement(&self, i: usize) -> Option<CiStatement> {
        let upto = self.prefix(i);
        let mb = self.markov_blanket(i, upto);
        CiStatement::new(VertexSet::singleton(i), upto.without(i).difference(mb), mb)
    }
}

fn anchor_of(rank: &[usize], h: VertexSet) -> usize {
    h.iter().max_by_key(|&v| rank[v]).expect("heads are nonempty")
}

fn check_order(g: &MixedGraph, idx: &GraphIndex, order: &[usize]) -> Result<()> {
    let mut seen = VertexSet::EMPTY;
    for &v in order {
        if v >= g.n() || seen.contains(v) {
            return Err(Error::Domain("order must list every vertex once".into()));
        }
        if !idx.pa[v].is_subset(seen) {
            return Err(Error::Domain(format!("order places {v} before one of its parents")));
        }
        seen.insert(v);
    }
    if seen != g.vertices() {
        return Err(Error::Domain("order must list every vertex once".into()));
    }
    Ok(())
}

pub fn markov_blanket(g: &MixedGraph, i: usize, within: VertexSet) -> Result<VertexSet> {
    let idx = GraphIndex::new(g)?;
    if !within.contains(i) {
        return Err(Error::Domain(format!("vertex {i} is not in the given set")));
    }
    if idx.ancestors(within) != within {
        return Err(Error::Domain("blanket set must be ancestral".into()));
    }
    let d = idx.district_within(i, within);
    Ok(d.union(idx.parents(d)).without(i))
}

pub fn marginalize_head(g: &MixedGraph, order: &[usize], h: VertexSet, k: usize) -> Result<VertexSet> {
    let hs = HeadStructure::new(g, Some(order))?;
    if !crate::heads::is_head(&hs.idx, h) {
        return Err(Error::Domain(format!("{h:?} is not a head")));
    }
    hs.marginalize(h, k)
        .ok_or_else(|| Error::Domain(format!("{k} cannot be marginalized from {h:?}")))
}

pub fn ci_from_marginalization(
    g: &MixedGraph,
    order: &[usize],
    h: VertexSet,
    k: usize,
) -> Result<Option<CiStatement>> {
    let hs = HeadStructure::new(g, Some(order))?;
    let h2 = hs.marginalize(h, k).ok_or_else(|| Error::Domain(format!("{k} cannot be marginalized from {h:?}")))?;
    Ok(hs.step_statement(h, k, h2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PowerEdge {
    pub parent: VertexSet,
    pub child: VertexSet,
    pub via: usize,
}

/// Heads sharing a last vertex, with marginalization steps between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PowerDag {
    pub anchor: usize,
    pub maximal: VertexSet,
    pub heads: Vec<HeadTail>,
    pub edges: Vec<PowerEdge>,
}

fn complete_component(hs: &HeadStructure, i: usize) -> PowerDag {
    let heads = hs.heads_at(i);
    let mut edges = Vec::new();
    for &h in heads {
        for k in h.without(i) {
            if let Some(child) = hs.marginalize(h, k) {
                edges.push(PowerEdge { parent: h, child, via: k });
            }
        }
    }
    PowerDag {
        anchor: i,
        maximal: hs.maximal_head(i),
        heads: heads.iter().map(|&head| HeadTail { head, tail: hs.tail(head) }).collect(),
        edges,
    }
}

/// The single step chosen into a non-maximal head: marginalize the earliest
/// ceiling vertex of its hamlet, from the parent head with the largest
/// ancestral set (ties to the smallest sorted vertex list).
fn refined_edge(hs: &HeadStructure, complete: &PowerDag, h: VertexSet) -> Option<PowerEdge> {
    let ham = hamlet(&hs.idx, h);
    let k = ceiling(&hs.idx, ham).iter().min_by_key(|&v| hs.rank[v])?;
    let parents: Vec<VertexSet> = complete
        .edges
        .iter()
        .filter(|e| e.child == h && e.via == k)
        .map(|e| e.parent)
        .collect();
    let maximal: Vec<VertexSet> = parents
        .iter()
        .copied()
        .filter(|&p| {
            let ap = hs.idx.ancestors(p);
            !parents.iter().any(|&q| {
                let aq = hs.idx.ancestors(q);
                aq != ap && ap.is_subset(aq)
            })
        })
        .collect();
    let parent = maximal.into_iter().min_by_key(|p| p.to_vec())?;
    Some(PowerEdge { parent, child: h, via: k })
}

fn refined_component(hs: &HeadStructure, i: usize) -> PowerDag {
    let complete = complete_component(hs, i);
    let edges = complete
        .heads
        .iter()
        .filter(|ht| ht.head != complete.maximal)
        .filter_map(|ht| refined_edge(hs, &complete, ht.head))
        .collect();
    PowerDag { edges, ..complete }
}

pub fn complete_power_dag(g: &MixedGraph, order: Option<&[usize]>) -> Result<Vec<PowerDag>> {
    let hs = HeadStructure::new(g, order)?;
    Ok(hs.order.iter().map(|&i| complete_component(&hs, i)).collect())
}

pub fn refined_power_dag(g: &MixedGraph, order: Option<&[usize]>) -> Result<Vec<PowerDag>> {
    let hs = HeadStructure::new(g, order)?;
    Ok(hs.order.iter().map(|&i| refined_component(&hs, i)).collect())
}

fn finish(list: BTreeSet<CiStatement>) -> Vec<CiStatement> {
    let mut v: Vec<_> = list.into_iter().collect();
    v.sort_by_key(|s| s.sort_key());
    v
}

pub fn refined_statements(hs: &HeadStructure) -> Vec<CiStatement> {
    let mut out = BTreeSet::new();
    for &i in &hs.order {
        out.extend(hs.local_statement(i));
        for e in refined_component(hs, i).edges {
            out.extend(hs.step_statement(e.parent, e.via, e.child));
        }
    }
    finish(out)
}

pub fn ordered_local_statements(hs: &HeadStructure) -> Vec<CiStatement> {
    let mut out = BTreeSet::new();
    for &i in &hs.order {
        out.extend(hs.local_statement(i));
        for e in complete_component(hs, i).edges {
            out.extend(hs.step_statement(e.parent, e.via, e.child));
        }
    }
    finish(out)
}

/// `a ⊥ b | an({a, b}) \ {a, b}` for each nonadjacent pair.
pub fn pairwise_statements(g: &MixedGraph, idx: &GraphIndex) -> Vec<CiStatement> {
    let mut out = BTreeSet::new();
    for a in 0..g.n() {
        for b in a + 1..g.n() {
            if !g.adjacent(a, b) {
                let ab = VertexSet::from([a, b]);
                out.extend(CiStatement::new(VertexSet::singleton(a), VertexSet::singleton(b), idx.ancestors(ab).difference(ab)));
            }
        }
    }
    finish(out)
}

pub fn ci_list(g: &MixedGraph, order: Option<&[usize]>, property: MarkovProperty) -> Result<Vec<CiStatement>> {
    match property {
        MarkovProperty::Pairwise => Ok(pairwise_statements(g, &GraphIndex::new(g)?)),
        MarkovProperty::Refined => Ok(refined_statements(&HeadStructure::new(g, order)?)),
        MarkovProperty::OrderedLocal => Ok(ordered_local_statements(&HeadStructure::new(g, order)?)),
    }
}
