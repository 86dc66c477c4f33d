//! Moves between Markov equivalence classes: adding an adjacency, deleting an
//! adjacency, and turning the collider status of unshielded triples.
//!
//! Each move rebuilds the PAG from the new skeleton. Unshielded colliders that
//! survive the edit are kept, new unshielded triples are split into definite
//! colliders and undecided ones, and every combination of the undecided ones
//! is orientated. Discriminating paths whose pivot the old class cannot settle
//! fork the orientation in two. Results that are not valid classes are dropped.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{GraphIndex, Mark, MixedGraph};
use crate::heads::in_parametrizing_set;
use crate::orient::{Closure, DiscriminatingPath, Orienter, R4Choice, R4Oracle, Rule, DEFAULT_PATH_CAP};
use crate::pag::{unshielded_triples, Mec};
use crate::set::VertexSet;

/// Unshielded triple `ends.0 * center * ends.1` with `ends.0 < ends.1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Triple {
    pub center: usize,
    pub ends: (usize, usize),
}

impl Triple {
    pub fn new(a: usize, center: usize, c: usize) -> Self {
        Triple { center, ends: (a.min(c), a.max(c)) }
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::from([self.ends.0, self.center, self.ends.1])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NewTriples {
    /// Already colliders in the old class.
    pub definite: Vec<Triple>,
    /// Could go either way.
    pub possible: Vec<Triple>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "move", rename_all = "kebab-case")]
pub enum MoveKind {
    AddAdjacency { a: usize, b: usize },
    DeleteAdjacency { a: usize, b: usize },
    Turn { flipped: Vec<Triple> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchChoice {
    pub path: Vec<usize>,
    pub collider: bool,
}

#[derive(Clone, Debug)]
pub struct MoveProposal {
    pub kind: MoveKind,
    pub result: Mec,
    pub branches: Vec<BranchChoice>,
}

#[derive(Clone, Debug, Default)]
pub struct MoveOutcome {
    pub proposals: Vec<MoveProposal>,
    /// Orientations discarded because they do not form a valid class.
    pub invalid: usize,
    pub branch_cap_hit: bool,
    pub path_cap_hit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct MoveLimits {
    /// Forks allowed per move.
    pub branch_cap: usize,
    /// Vertex expansions allowed per discriminating-path search pass.
    pub path_cap: usize,
}

impl Default for MoveLimits {
    fn default() -> Self {
        MoveLimits { branch_cap: 256, path_cap: DEFAULT_PATH_CAP }
    }
}

fn is_collider(p: &MixedGraph, t: Triple) -> bool {
    p.mark(t.ends.0, t.center) == Some(Mark::Arrow) && p.mark(t.ends.1, t.center) == Some(Mark::Arrow)
}

/// Unshielded colliders of `old` that are still unshielded in `skeleton`.
fn kept_colliders(old: &MixedGraph, skeleton: &MixedGraph) -> Vec<Triple> {
    unshielded_triples(old)
        .into_iter()
        .map(|(a, b, c)| Triple::new(a, b, c))
        .filter(|&t| {
            skeleton.adjacent(t.ends.0, t.center) && skeleton.adjacent(t.ends.1, t.center) && !skeleton.adjacent(t.ends.0, t.ends.1)
        })
        .filter(|&t| is_collider(old, t))
        .collect()
}

/// New unshielded triples centred on `a` once `a`–`b` is added.
pub fn new_triples_at(p: &MixedGraph, a: usize, b: usize) -> NewTriples {
    let mut out = NewTriples::default();
    for k in p.neighbors(a) {
        if k == b || p.adjacent(k, b) {
            continue;
        }
        let t = Triple::new(b, a, k);
        match p.mark(k, a) {
            Some(Mark::Tail) => {}
            Some(Mark::Arrow) => out.definite.push(t),
            _ => out.possible.push(t),
        }
    }
    out
}

/// Unshielded triples `i * a * j` created by removing `i`–`j`.
pub fn new_triples_delete(p: &MixedGraph, i: usize, j: usize) -> NewTriples {
    let mut out = NewTriples::default();
    for a in p.neighbors(i).intersection(p.neighbors(j)) {
        let t = Triple::new(i, a, j);
        if p.mark(i, a) == Some(Mark::Arrow) && p.mark(j, a) == Some(Mark::Arrow) {
            out.definite.push(t);
        } else if p.mark(i, a) != Some(Mark::Tail) && p.mark(j, a) != Some(Mark::Tail) {
            out.possible.push(t);
        }
    }
    out
}

/// The collider sets a move starts from, before any rule beyond the
/// collider rule runs. The second value reports truncation by `cap`.
fn collider_cases(kept: &[Triple], groups: &[(Vec<Triple>, Vec<Triple>)], cap: usize) -> (Vec<Vec<Triple>>, bool) {
    let mut seen = HashSet::new();
    let mut cases = Vec::new();
    let mut truncated = false;
    let mut push = |mut c: Vec<Triple>, cases: &mut Vec<Vec<Triple>>| {
        c.sort();
        c.dedup();
        if seen.insert(c.clone()) {
            cases.push(c);
        }
    };
    push(kept.to_vec(), &mut cases);
    for (definite, possible) in groups {
        if possible.len() >= 20 {
            truncated = true;
        }
        let width = possible.len().min(19);
        for mask in 0u32..(1 << width) {
            if cases.len() > cap {
                truncated = true;
                break;
            }
            let mut c: Vec<Triple> = kept.iter().chain(definite).copied().collect();
            c.extend((0..width).filter(|&k| mask & (1 << k) != 0).map(|k| possible[k]));
            push(c, &mut cases);
        }
    }
    (cases, truncated)
}

struct Drain<'a> {
    oracle: &'a dyn R4Oracle,
    limits: MoveLimits,
    forks: usize,
    outcome: MoveOutcome,
    seen: HashSet<Vec<Option<Mark>>>,
    old_key: &'a [Option<Mark>],
}

impl Drain<'_> {
    fn run(&mut self, kind: &MoveKind, start: Orienter) {
        let mut stack = vec![(start, Vec::<BranchChoice>::new())];
        while let Some((mut o, trail)) = stack.pop() {
            let closure = o.close_arrows(self.oracle);
            self.outcome.path_cap_hit |= o.path_cap_hit;
            match closure {
                Closure::Conflict => self.outcome.invalid += 1,
                Closure::Complete => self.accept(kind, &o.graph, trail),
                Closure::Fork(path) => {
                    if self.forks >= self.limits.branch_cap {
                        self.outcome.branch_cap_hit = true;
                        continue;
                    }
                    self.forks += 1;
                    let mut collider = o.clone();
                    collider.resolve_discriminating(&path, true);
                    o.resolve_discriminating(&path, false);
                    let choice = |c| BranchChoice { path: path.vertices.clone(), collider: c };
                    let mut t_nc = trail.clone();
                    t_nc.push(choice(false));
                    let mut t_c = trail;
                    t_c.push(choice(true));
                    stack.push((o, t_nc));
                    stack.push((collider, t_c));
                }
            }
        }
    }

    fn accept(&mut self, kind: &MoveKind, working: &MixedGraph, branches: Vec<BranchChoice>) {
        match Mec::from_pag(working) {
            Ok(mec) => {
                if mec.pag.mark_table() != self.old_key && self.seen.insert(mec.pag.mark_table().to_vec()) {
                    self.outcome.proposals.push(MoveProposal { kind: kind.clone(), result: mec, branches });
                }
            }
            Err(_) => self.outcome.invalid += 1,
        }
    }
}

fn start_from(skeleton: &MixedGraph, colliders: &[Triple], limits: MoveLimits) -> Orienter {
    let mut o = Orienter::from_skeleton(skeleton, false).with_path_cap(limits.path_cap);
    for t in colliders {
        o.orient_collider(t.ends.0, t.center, t.ends.1, Rule::R0);
    }
    o
}

fn membership(idx: &GraphIndex) -> impl Fn(VertexSet) -> bool + '_ {
    move |w| in_parametrizing_set(idx, w)
}

fn run_cases(
    current: &Mec,
    skeleton: &MixedGraph,
    cases: Vec<Vec<Triple>>,
    truncated: bool,
    kind: MoveKind,
    oracle: &dyn R4Oracle,
    limits: MoveLimits,
) -> MoveOutcome {
    let mut drain = Drain {
        oracle,
        limits,
        forks: 0,
        outcome: MoveOutcome { branch_cap_hit: truncated, ..Default::default() },
        seen: HashSet::new(),
        old_key: current.pag.mark_table(),
    };
    for colliders in cases {
        drain.run(&kind, start_from(skeleton, &colliders, limits));
    }
    drain.outcome
}

fn add_skeleton(p: &MixedGraph, i: usize, j: usize) -> Result<MixedGraph> {
    if i == j || p.adjacent(i, j) {
        return Err(crate::Error::Domain(format!("{i} and {j} must be distinct and nonadjacent")));
    }
    let mut skel = p.circle_skeleton();
    skel.add_edge(i, j, Mark::Circle, Mark::Circle)?;
    Ok(skel)
}

fn add_cases_capped(p: &MixedGraph, skel: &MixedGraph, i: usize, j: usize, cap: usize) -> (Vec<Vec<Triple>>, bool, [NewTriples; 2]) {
    let kept = kept_colliders(p, skel);
    let at_i = new_triples_at(p, i, j);
    let at_j = new_triples_at(p, j, i);
    let both = (
        at_i.definite.iter().chain(&at_j.definite).copied().collect(),
        at_i.possible.iter().chain(&at_j.possible).copied().collect(),
    );
    let groups = [
        (at_i.definite.clone(), at_i.possible.clone()),
        (at_j.definite.clone(), at_j.possible.clone()),
        both,
    ];
    let (cases, truncated) = collider_cases(&kept, &groups, cap);
    (cases, truncated, [at_i, at_j])
}

/// The collider sets tried by [`add_adjacency`] and the new triples at each endpoint.
pub fn add_adjacency_cases(p: &MixedGraph, i: usize, j: usize) -> Result<(Vec<Vec<Triple>>, [NewTriples; 2])> {
    let skel = add_skeleton(p, i, j)?;
    let (cases, _, triples) = add_cases_capped(p, &skel, i, j, usize::MAX);
    Ok((cases, triples))
}

pub fn add_adjacency(current: &Mec, i: usize, j: usize, limits: MoveLimits) -> Result<MoveOutcome> {
    let p = &current.pag;
    let skel = add_skeleton(p, i, j)?;
    let (cases, truncated, _) = add_cases_capped(p, &skel, i, j, limits.branch_cap);
    let idx = GraphIndex::new(&current.mag)?;
    let in_s = membership(&idx);
    let oracle = |_: &MixedGraph, path: &DiscriminatingPath| {
        let (b, c) = (path.pivot(), path.end());
        if in_s(path.triple()) || p.mark(c, b) == Some(Mark::Arrow) {
            R4Choice::Collider
        } else if p.mark(c, b) == Some(Mark::Tail) {
            R4Choice::NonCollider
        } else {
            R4Choice::Fork
        }
    };
    Ok(run_cases(current, &skel, cases, truncated, MoveKind::AddAdjacency { a: i, b: j }, &oracle, limits))
}

pub fn delete_adjacency(current: &Mec, i: usize, j: usize, limits: MoveLimits) -> Result<MoveOutcome> {
    let p = &current.pag;
    if !p.adjacent(i, j) {
        return Err(crate::Error::Domain(format!("{i} and {j} are not adjacent")));
    }
    let mut skel = p.circle_skeleton();
    skel.remove_edge(i, j);
    let kept = kept_colliders(p, &skel);
    let fresh = new_triples_delete(p, i, j);
    let (cases, truncated) = collider_cases(&kept, &[(fresh.definite, fresh.possible)], limits.branch_cap);
    let idx = GraphIndex::new(&current.mag)?;
    let in_s = membership(&idx);
    let oracle = |_: &MixedGraph, path: &DiscriminatingPath| {
        if in_s(path.triple()) {
            R4Choice::Collider
        } else if p.mark(path.end(), path.pivot()) == Some(Mark::Tail) {
            R4Choice::NonCollider
        } else {
            R4Choice::Fork
        }
    };
    Ok(run_cases(current, &skel, cases, truncated, MoveKind::DeleteAdjacency { a: i, b: j }, &oracle, limits))
}

/// Flips the collider status of every set of at most `budget` unshielded
/// triples. The skeleton stays the same; every discriminating path forks.
pub fn turn(current: &Mec, budget: usize, limits: MoveLimits) -> Result<MoveOutcome> {
    let p = &current.pag;
    let skel = p.circle_skeleton();
    let triples: Vec<Triple> = unshielded_triples(p).into_iter().map(|(a, b, c)| Triple::new(a, b, c)).collect();
    let colliders: HashSet<Triple> = triples.iter().copied().filter(|&t| is_collider(p, t)).collect();
    let oracle = |_: &MixedGraph, _: &DiscriminatingPath| R4Choice::Fork;
    let mut total = MoveOutcome::default();
    let mut seen: HashSet<Vec<Option<Mark>>> = HashSet::new();
    let mut flips: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..budget {
        let mut next = Vec::new();
        for f in &frontier {
            let from = f.last().map_or(0, |&x| x + 1);
            for k in from..triples.len() {
                let mut g = f.clone();
                g.push(k);
                next.push(g);
            }
        }
        flips.extend(next.iter().cloned());
        frontier = next;
    }
    for flip in flips {
        let flipped: Vec<Triple> = flip.iter().map(|&k| triples[k]).collect();
        let set: Vec<Triple> = triples
            .iter()
            .copied()
            .filter(|t| colliders.contains(t) != flipped.contains(t))
            .collect();
        let out = run_cases(current, &skel, vec![set], false, MoveKind::Turn { flipped }, &oracle, limits);
        total.invalid += out.invalid;
        total.branch_cap_hit |= out.branch_cap_hit;
        total.path_cap_hit |= out.path_cap_hit;
        for prop in out.proposals {
            if seen.insert(prop.result.pag.mark_table().to_vec()) {
                total.proposals.push(prop);
            }
        }
    }
    Ok(total)
}
