//! Greedy search over Markov equivalence classes of MAGs.
//!
//! Starting from the empty graph, the search runs an adding phase, a
//! deleting phase and a turning phase, each until no proposal improves the
//! score, and repeats the cycle until a whole cycle changes nothing. Within a
//! sweep every distinct candidate class is scored once and the best strictly
//! improving one is taken.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyCache, Estimator};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::graph::{Mark, MixedGraph};
use crate::heads::has_head_larger_than;
use crate::imset::{score_mag, ScoreOptions, ScoreReport};
use crate::moves::{add_adjacency, delete_adjacency, turn, MoveKind, MoveLimits, MoveOutcome};
use crate::pag::{Mec, Pag};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Reject classes whose representative MAG has a larger head.
    pub max_head_size: Option<usize>,
    /// Largest number of triples flipped at once; 0 disables turning.
    pub turn_budget: usize,
    pub score: ScoreOptions,
    pub estimator: Estimator,
    /// Only pairs adjacent in this graph may become adjacent.
    #[serde(skip)]
    pub skeleton: Option<MixedGraph>,
    /// Adjacencies are never added to a vertex of this degree.
    pub max_degree: Option<usize>,
    pub limits: MoveLimits,
    /// Cap on accepted moves.
    pub max_iterations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_head_size: None,
            turn_budget: 1,
            score: ScoreOptions::default(),
            estimator: Estimator::default(),
            skeleton: None,
            max_degree: None,
            limits: MoveLimits::default(),
            max_iterations: 1000,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_head_size == Some(0) {
            return Err(Error::Domain("maximal head size must be at least 1".into()));
        }
        if let Some(s) = &self.skeleton {
            if s.n() != n {
                return Err(Error::Domain(format!("skeleton has {} vertices, data has {n}", s.n())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Add,
    Delete,
    Turn,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum SearchEvent {
    Start {
        score: f64,
    },
    Sweep {
        phase: Phase,
        moves: usize,
        candidates: usize,
        head_rejected: usize,
        invalid: usize,
    },
    Accepted {
        phase: Phase,
        #[serde(flatten)]
        kind: MoveKind,
        score: f64,
    },
    BranchCap {
        phase: Phase,
        moves: usize,
    },
    PathCap {
        phase: Phase,
        moves: usize,
    },
    IterationCap {
        limit: usize,
    },
    Finished {
        score: f64,
        iterations: usize,
    },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseStats {
    pub sweeps: usize,
    pub accepted: usize,
    /// Move generator calls.
    pub moves: usize,
    /// Distinct candidate classes scored.
    pub candidates: usize,
    pub head_rejected: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SearchStats {
    pub add: PhaseStats,
    pub delete: PhaseStats,
    pub turn: PhaseStats,
    pub cycles: usize,
    pub iterations: usize,
}

impl SearchStats {
    fn phase_mut(&mut self, p: Phase) -> &mut PhaseStats {
        match p {
            Phase::Add => &mut self.add,
            Phase::Delete => &mut self.delete,
            Phase::Turn => &mut self.turn,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub mec: Mec,
    /// PAG with invariant tails.
    pub pag: Pag,
    pub report: ScoreReport,
    /// Score after the start and after each accepted move.
    pub trajectory: Vec<f64>,
    pub events: Vec<SearchEvent>,
    pub stats: SearchStats,
}

#[derive(Clone, Copy, Debug)]
enum MoveSpec {
    Add(usize, usize),
    Delete(usize, usize),
    Turn(usize),
}

impl MoveSpec {
    fn run(self, mec: &Mec, limits: MoveLimits) -> Result<MoveOutcome> {
        match self {
            MoveSpec::Add(i, j) => add_adjacency(mec, i, j, limits),
            MoveSpec::Delete(i, j) => delete_adjacency(mec, i, j, limits),
            MoveSpec::Turn(t) => turn(mec, t, limits),
        }
    }
}

pub struct Searcher<'a> {
    cache: &'a EntropyCache,
    cfg: &'a SearchConfig,
    exec: &'a Executor,
    current: Mec,
    score: f64,
    events: Vec<SearchEvent>,
    trajectory: Vec<f64>,
    stats: SearchStats,
}

impl<'a> Searcher<'a> {
    pub fn new(cache: &'a EntropyCache, cfg: &'a SearchConfig, exec: &'a Executor) -> Result<Self> {
        let n = cache.n_vars();
        cfg.validate(n)?;
        if cache.n_samples() <= n + 2 {
            return Err(Error::InsufficientSamples { size: n, samples: cache.n_samples() });
        }
        // fail now rather than half-way through on a singular joint covariance
        cache.entropy(crate::set::VertexSet::full(n))?;
        let current = Mec::empty(n)?;
        let score = score_mag(&current.mag, cache, cfg.score)?.total;
        Ok(Searcher {
            cache,
            cfg,
            exec,
            current,
            score,
            events: vec![SearchEvent::Start { score }],
            trajectory: vec![score],
            stats: SearchStats::default(),
        })
    }

    /// Replaces the starting class.
    pub fn start_from(&mut self, mec: Mec) -> Result<()> {
        self.score = score_mag(&mec.mag, self.cache, self.cfg.score)?.total;
        self.current = mec;
        self.trajectory = vec![self.score];
        self.events = vec![SearchEvent::Start { score: self.score }];
        Ok(())
    }

    pub fn current(&self) -> &Mec {
        &self.current
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn events(&self) -> &[SearchEvent] {
        &self.events
    }

    fn specs(&self, phase: Phase) -> Vec<MoveSpec> {
        let p = &self.current.pag;
        let n = p.n();
        let mut out = Vec::new();
        match phase {
            Phase::Add => {
                let full_degree = |v: usize| self.cfg.max_degree.is_some_and(|d| p.neighbors(v).len() >= d);
                for i in 0..n {
                    for j in i + 1..n {
                        let allowed = self.cfg.skeleton.as_ref().is_none_or(|s| s.adjacent(i, j));
                        if !p.adjacent(i, j) && allowed && !full_degree(i) && !full_degree(j) {
                            out.push(MoveSpec::Add(i, j));
                        }
                    }
                }
            }
            Phase::Delete => out.extend(p.edges().map(|e| MoveSpec::Delete(e.a, e.b))),
            Phase::Turn => {
                if self.cfg.turn_budget > 0 {
                    out.push(MoveSpec::Turn(self.cfg.turn_budget));
                }
            }
        }
        out
    }

    /// One sweep of `phase`. Returns whether a move was accepted.
    pub fn sweep(&mut self, phase: Phase) -> Result<bool> {
        let specs = self.specs(phase);
        if specs.is_empty() {
            return Ok(false);
        }
        let limits = self.cfg.limits;
        let current = &self.current;
        let outcomes: Vec<MoveOutcome> =
            self.exec.map(&specs, |s| s.run(current, limits)).into_iter().collect::<Result<_>>()?;
        let mut seen: HashSet<&[Option<Mark>]> = HashSet::new();
        let mut candidates = Vec::new();
        let (mut invalid, mut branch_caps, mut path_caps) = (0, 0, 0);
        for outcome in &outcomes {
            invalid += outcome.invalid;
            branch_caps += usize::from(outcome.branch_cap_hit);
            path_caps += usize::from(outcome.path_cap_hit);
            for prop in &outcome.proposals {
                if seen.insert(prop.result.pag.mark_table()) {
                    candidates.push(prop);
                }
            }
        }
        let (cache, cfg) = (self.cache, self.cfg);
        let scores = self.exec.map(&candidates, |prop| -> Result<Option<f64>> {
            if let Some(k) = cfg.max_head_size {
                if has_head_larger_than(&prop.result.mag, k)? {
                    return Ok(None);
                }
            }
            Ok(Some(score_mag(&prop.result.mag, cache, cfg.score)?.total))
        });
        let mut best: Option<(usize, f64)> = None;
        let mut head_rejected = 0;
        for (k, s) in scores.into_iter().enumerate() {
            match s? {
                None => head_rejected += 1,
                Some(s) => {
                    if s < best.map_or(self.score, |b| b.1) {
                        best = Some((k, s));
                    }
                }
            }
        }

        let st = self.stats.phase_mut(phase);
        st.sweeps += 1;
        st.moves += specs.len();
        st.candidates += candidates.len();
        st.head_rejected += head_rejected;
        self.events.push(SearchEvent::Sweep { phase, moves: specs.len(), candidates: candidates.len(), head_rejected, invalid });
        if branch_caps > 0 {
            log::info!("{phase:?} sweep: branch cap reached in {branch_caps} moves");
            self.events.push(SearchEvent::BranchCap { phase, moves: branch_caps });
        }
        if path_caps > 0 {
            log::info!("{phase:?} sweep: discriminating path budget reached in {path_caps} moves");
            self.events.push(SearchEvent::PathCap { phase, moves: path_caps });
        }
        let Some((k, s)) = best else {
            return Ok(false);
        };
        let prop = candidates[k];
        log::debug!("{phase:?}: accepted {:?} with score {s}", prop.kind);
        self.events.push(SearchEvent::Accepted { phase, kind: prop.kind.clone(), score: s });
        self.current = prop.result.clone();
        self.score = s;
        self.trajectory.push(s);
        self.stats.phase_mut(phase).accepted += 1;
        self.stats.iterations += 1;
        Ok(true)
    }

    /// Runs `phase` until it stops improving or the iteration cap is reached.
    pub fn run_phase(&mut self, phase: Phase) -> Result<bool> {
        let mut changed = false;
        while self.stats.iterations < self.cfg.max_iterations && self.sweep(phase)? {
            changed = true;
        }
        Ok(changed)
    }

    pub fn run(mut self) -> Result<SearchResult> {
        let mut capped = false;
        loop {
            self.stats.cycles += 1;
            let mut changed = false;
            for phase in [Phase::Add, Phase::Delete, Phase::Turn] {
                changed |= self.run_phase(phase)?;
            }
            if self.stats.iterations >= self.cfg.max_iterations {
                capped = true;
                break;
            }
            if !changed {
                break;
            }
        }
        if capped {
            log::warn!("search stopped after {} accepted moves", self.cfg.max_iterations);
            self.events.push(SearchEvent::IterationCap { limit: self.cfg.max_iterations });
        }
        self.events.push(SearchEvent::Finished { score: self.score, iterations: self.stats.iterations });
        let pag = self.current.full_pag()?;
        let report = score_mag(&self.current.mag, self.cache, self.cfg.score)?;
        Ok(SearchResult {
            mec: self.current,
            pag,
            report,
            trajectory: self.trajectory,
            events: self.events,
            stats: self.stats,
        })
    }
}

/// Runs the search on samples × variables data.
pub fn gesmag(data: &DMatrix<f64>, cfg: &SearchConfig, exec: &Executor) -> Result<SearchResult> {
    let cache = EntropyCache::from_data(data, cfg.estimator)?;
    gesmag_with_cache(&cache, cfg, exec)
}

pub fn gesmag_with_cache(cache: &EntropyCache, cfg: &SearchConfig, exec: &Executor) -> Result<SearchResult> {
    Searcher::new(cache, cfg, exec)?.run()
}
