//! Partial ancestral graphs: construction from a MAG or from a parametrizing
//! set, and recovery of a representative MAG.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{is_ancestral, is_maximal, GraphKind, Mark, MixedGraph};
use crate::heads::ParametrizingSet;
use crate::orient::{Closure, DiscriminatingPath, Orienter, R4Choice, RuleApplication, DEFAULT_PATH_CAP};
use crate::set::VertexSet;

#[derive(Clone, Debug, Serialize)]
pub struct Pag {
    #[serde(skip)]
    pub graph: MixedGraph,
    pub trace: Vec<RuleApplication>,
    /// Every invariant arrowhead is present.
    pub arrow_complete: bool,
    /// Invariant tails have been added as well.
    pub tails_oriented: bool,
}

impl Pag {
    fn finish(mut o: Orienter, tails: bool) -> Result<Pag> {
        if tails {
            o.close_tails();
        }
        if o.conflict {
            return Err(Error::InvalidMec("orientation rules produced conflicting marks"));
        }
        let mut graph = o.graph;
        graph.set_kind(GraphKind::Pag)?;
        Ok(Pag { graph, trace: o.trace.unwrap_or_default(), arrow_complete: true, tails_oriented: tails })
    }
}

/// Unshielded triples `(a, b, c)` with `a < c` and `b` in the middle.
pub fn unshielded_triples(g: &MixedGraph) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for b in 0..g.n() {
        let nb = g.neighbors(b).to_vec();
        for (i, &a) in nb.iter().enumerate() {
            for &c in &nb[i + 1..] {
                if !g.adjacent(a, c) {
                    out.push((a, b, c));
                }
            }
        }
    }
    out
}

/// Unshielded triples of a MAG or PAG with arrowheads at the middle from both sides.
pub fn unshielded_colliders(g: &MixedGraph) -> Vec<(usize, usize, usize)> {
    unshielded_triples(g)
        .into_iter()
        .filter(|&(a, b, c)| g.mark(a, b) == Some(Mark::Arrow) && g.mark(c, b) == Some(Mark::Arrow))
        .collect()
}

fn mag_oracle(mag: &MixedGraph) -> impl Fn(&MixedGraph, &DiscriminatingPath) -> R4Choice + '_ {
    move |_, path| {
        if mag.mark(path.end(), path.pivot()) == Some(Mark::Tail) {
            R4Choice::NonCollider
        } else {
            R4Choice::Collider
        }
    }
}

pub fn mag_to_pag(g: &MixedGraph, tails: bool) -> Result<Pag> {
    mag_to_pag_traced(g, tails, true)
}

pub(crate) fn mag_to_pag_traced(g: &MixedGraph, tails: bool, tracing: bool) -> Result<Pag> {
    if g.has_circle() {
        return Err(Error::CircleMark);
    }
    let mut o = Orienter::from_skeleton(g, tracing).with_path_cap(usize::MAX);
    for (a, b, c) in unshielded_colliders(g) {
        o.orient_collider(a, b, c, crate::orient::Rule::R0);
    }
    match o.close_arrows(&mag_oracle(g)) {
        Closure::Complete => Pag::finish(o, tails),
        Closure::Conflict => Err(Error::InvalidMec("orientation rules produced conflicting marks")),
        Closure::Fork(_) => unreachable!("the MAG decides every discriminating path"),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PsetOptions {
    /// Orient `a <-> b` for members `{a, b, c}` whose only adjacency is `a`–`b`.
    pub one_adjacency_shortcut: bool,
    pub tails: bool,
}

/// PAG whose skeleton and orientations are read off `s`.
pub fn pag_from_parametrizing_set(s: &ParametrizingSet, opts: PsetOptions) -> Result<Pag> {
    let n = s.n;
    let mut skel = MixedGraph::new(n, GraphKind::Pmg)?;
    for a in 0..n {
        for b in a + 1..n {
            if s.adjacent(a, b) {
                skel.add_edge(a, b, Mark::Circle, Mark::Circle)?;
            }
        }
    }
    let mut o = Orienter::new(skel, true).with_path_cap(usize::MAX);
    for (a, b, c) in unshielded_triples(&o.graph) {
        if s.contains(VertexSet::from([a, b, c])) {
            o.orient_collider(a, b, c, crate::orient::Rule::R0);
        }
    }
    if opts.one_adjacency_shortcut {
        for w in s.iter().filter(|w| w.len() == 3) {
            let v = w.to_vec();
            let pairs = [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])];
            let adjacent: Vec<_> = pairs.iter().filter(|&&(x, y)| o.graph.adjacent(x, y)).collect();
            if let [&(x, y)] = adjacent[..] {
                let changed = o.arrow(x, y) | o.arrow(y, x);
                if changed {
                    if let Some(t) = o.trace.as_mut() {
                        t.push(RuleApplication { rule: crate::orient::Rule::OneAdjacency, vertices: v.clone() });
                    }
                }
            }
        }
    }
    let oracle = |_: &MixedGraph, p: &DiscriminatingPath| {
        if s.contains(p.triple()) {
            R4Choice::Collider
        } else {
            R4Choice::NonCollider
        }
    };
    match o.close_arrows(&oracle) {
        Closure::Complete => Pag::finish(o, opts.tails),
        Closure::Conflict => Err(Error::InvalidMec("parametrizing set implies conflicting marks")),
        Closure::Fork(_) => unreachable!("the parametrizing set decides every discriminating path"),
    }
}

/// Orients the circle-circle edges inside `component` along a maximum
/// cardinality search order (lowest vertex first on ties). Fails when the
/// component is not chordal, since then every orientation adds a collider.
fn orient_circle_component(g: &mut MixedGraph, circle_adj: &[VertexSet], component: VertexSet) -> Result<()> {
    let mut order = Vec::with_capacity(component.len());
    let mut weight = vec![0usize; g.n()];
    let mut left = component;
    while !left.is_empty() {
        let v = left.iter().max_by_key(|&v| (weight[v], std::cmp::Reverse(v))).expect("nonempty");
        left.remove(v);
        order.push(v);
        for w in circle_adj[v].intersection(left) {
            weight[w] += 1;
        }
    }
    let mut placed = VertexSet::EMPTY;
    for &v in &order {
        let earlier = circle_adj[v].intersection(placed);
        for x in earlier {
            for y in earlier {
                if x < y && !g.adjacent(x, y) {
                    return Err(Error::InvalidMec("circle component is not chordal"));
                }
            }
        }
        for u in earlier {
            g.set_mark(v, u, Mark::Tail);
            g.set_mark(u, v, Mark::Arrow);
        }
        placed.insert(v);
    }
    Ok(())
}

/// Representative MAG of the class a PAG stands for.
///
/// Circle-arrow edges become directed, circle-tail edges undirected, and each
/// circle component is oriented as a DAG without unshielded colliders. The
/// result must be a MAG whose own PAG has the input's arrowheads.
pub fn pag_to_mag(p: &MixedGraph) -> Result<MixedGraph> {
    let mut g = p.clone();
    g.set_kind(GraphKind::Pmg)?;
    let n = g.n();
    let mut circle_adj = vec![VertexSet::EMPTY; n];
    for e in p.edges() {
        match (e.mark_a, e.mark_b) {
            (Mark::Circle, Mark::Circle) => {
                circle_adj[e.a].insert(e.b);
                circle_adj[e.b].insert(e.a);
            }
            (Mark::Circle, _) => g.set_mark(e.b, e.a, Mark::Tail),
            (_, Mark::Circle) => g.set_mark(e.a, e.b, Mark::Tail),
            _ => {}
        }
    }
    let mut left: VertexSet = (0..n).filter(|&v| !circle_adj[v].is_empty()).collect();
    while let Some(v) = left.min() {
        let mut comp = VertexSet::singleton(v);
        let mut frontier = comp;
        while !frontier.is_empty() {
            let next = frontier.iter().fold(VertexSet::EMPTY, |acc, u| acc.union(circle_adj[u])).difference(comp);
            comp = comp.union(next);
            frontier = next;
        }
        left = left.difference(comp);
        orient_circle_component(&mut g, &circle_adj, comp)?;
    }
    g.set_kind(GraphKind::Mag)?;
    if !is_ancestral(&g)? {
        return Err(Error::InvalidMec("representative graph is not ancestral"));
    }
    if !is_maximal(&g)? {
        return Err(Error::InvalidMec("representative graph is not maximal"));
    }
    let back = mag_to_pag_traced(&g, false, false)?;
    let same_arrows = p
        .mark_table()
        .iter()
        .zip(back.graph.mark_table())
        .all(|(x, y)| (*x == Some(Mark::Arrow)) == (*y == Some(Mark::Arrow)));
    if !p.same_skeleton(&back.graph) || !same_arrows {
        return Err(Error::InvalidMec("arrowheads differ from those of the class of the representative MAG"));
    }
    Ok(g)
}

/// An arrow-complete PAG together with a MAG it represents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mec {
    pub pag: MixedGraph,
    pub mag: MixedGraph,
}

impl Mec {
    pub fn from_mag(mag: &MixedGraph) -> Result<Mec> {
        let pag = mag_to_pag_traced(mag, false, false)?.graph;
        let mag = pag_to_mag(&pag)?;
        Ok(Mec { pag, mag })
    }

    /// Validates a (possibly partially oriented) PAG and replaces it by the
    /// canonical arrow-complete PAG of its class.
    pub fn from_pag(p: &MixedGraph) -> Result<Mec> {
        let mag = pag_to_mag(p)?;
        let pag = mag_to_pag_traced(&mag, false, false)?.graph;
        Ok(Mec { pag, mag })
    }

    pub fn empty(n: usize) -> Result<Mec> {
        Ok(Mec { pag: MixedGraph::new(n, GraphKind::Pag)?, mag: MixedGraph::new(n, GraphKind::Mag)? })
    }

    /// Full PAG with invariant tails.
    pub fn full_pag(&self) -> Result<Pag> {
        mag_to_pag(&self.mag, true)
    }
}

/// Number of `(start, pivot, end)` triples joined by a discriminating path.
pub fn count_discriminating_paths(p: &MixedGraph) -> usize {
    let mut o = Orienter::new(p.clone(), false).with_path_cap(usize::MAX);
    let mut count = 0;
    for c in 0..p.n() {
        for b in p.neighbors(c) {
            count += o.discriminating_paths(b, c, false).len();
        }
    }
    count
}

pub fn find_discriminating_paths(p: &MixedGraph, b: usize, c: usize) -> Vec<DiscriminatingPath> {
    Orienter::new(p.clone(), false).with_path_cap(DEFAULT_PATH_CAP).discriminating_paths(b, c, false)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::graph::fixtures::*;
    use crate::heads::{markov_equivalent, s3_tilde};

    #[test]
    fn worked_example_from_parametrizing_set() {
        let p = pag_from_parametrizing_set(&eight_vertex_s3(), PsetOptions { one_adjacency_shortcut: false, tails: true }).unwrap();
        assert_eq!(p.graph, eight_vertex_final().with_kind(GraphKind::Pag).unwrap());
        let q = pag_from_parametrizing_set(&eight_vertex_s3(), PsetOptions { one_adjacency_shortcut: true, tails: true }).unwrap();
        assert_eq!(q.graph, p.graph);
    }

    #[test]
    fn worked_example_counts_two_discriminating_paths() {
        let p = eight_vertex_final();
        assert_eq!(count_discriminating_paths(&p), 2);
        assert_eq!(find_discriminating_paths(&p, 5, 6)[0].vertices, vec![1, 4, 5, 6]);
        assert_eq!(find_discriminating_paths(&p, 7, 6)[0].vertices, vec![1, 4, 5, 7, 6]);
    }

    #[test]
    fn worked_example_representative_mag() {
        let p = eight_vertex_final();
        let mag = pag_to_mag(&p).unwrap();
        assert_eq!(mag.mark_table(), p.mark_table());
        assert_eq!(s3_tilde(&mag).unwrap(), eight_vertex_s3());
        let back = mag_to_pag(&mag, true).unwrap();
        assert_eq!(back.graph.mark_table(), p.mark_table());
    }

    #[test]
    fn dag_collider_pag() {
        // 1 -> 3 <- 2, 3 -> 4
        let g = labelled(4, GraphKind::Mag, &[(1, 3), (2, 3), (3, 4)], &[]);
        let p = mag_to_pag(&g, false).unwrap().graph;
        assert_eq!((p.mark(0, 2), p.mark(2, 0)), (Some(Mark::Arrow), Some(Mark::Circle)));
        assert!(p.is_directed(2, 3));
    }

    #[test]
    fn circle_chain_orients_without_colliders() {
        let g = MixedGraph::from_edges(3, GraphKind::Pag, &[(0, 1, Mark::Circle, Mark::Circle), (1, 2, Mark::Circle, Mark::Circle)]).unwrap();
        let m = pag_to_mag(&g).unwrap();
        assert!(m.is_directed(0, 1) && m.is_directed(1, 2));
    }

    #[test]
    fn invalid_pag_is_rejected() {
        let g = MixedGraph::from_edges(3, GraphKind::Pag, &[(0, 1, Mark::Circle, Mark::Arrow), (1, 2, Mark::Circle, Mark::Circle)]).unwrap();
        assert!(matches!(pag_to_mag(&g), Err(Error::InvalidMec(_))));
    }

    #[test]
    fn fig3_round_trip() {
        let g = fig3_i();
        let p = mag_to_pag(&g, true).unwrap();
        let m = pag_to_mag(&p.graph).unwrap();
        assert!(markov_equivalent(&g, &m).unwrap());
    }
}
