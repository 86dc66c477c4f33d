//! Integer-valued set functions built from independence statements, and the
//! penalized score they induce.
//!
//! For a statement `A ⊥ B | C` the semi-elementary imset puts `+1` on `ABC`
//! and `C` and `-1` on `AC` and `BC`. Pairing an imset with estimated
//! entropies gives minus the summed conditional mutual informations, so a
//! graph whose statements fail in the data is charged for each violation.
//! Lower scores are better.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::entropy::EntropyCache;
use crate::error::Result;
use crate::graph::MixedGraph;
use crate::heads::parametrizing_set;
use crate::markov::{ci_list, CiStatement, MarkovProperty};
use crate::set::VertexSet;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Imset {
    coef: BTreeMap<VertexSet, i64>,
}

impl Imset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, s: VertexSet, c: i64) {
        let e = self.coef.entry(s).or_insert(0);
        *e += c;
        if *e == 0 {
            self.coef.remove(&s);
        }
    }

    pub fn add_statement(&mut self, ci: &CiStatement) {
        self.add(ci.a.union(ci.b).union(ci.c), 1);
        self.add(ci.a.union(ci.c), -1);
        self.add(ci.b.union(ci.c), -1);
        self.add(ci.c, 1);
    }

    pub fn semi_elementary(ci: &CiStatement) -> Self {
        let mut u = Imset::new();
        u.add_statement(ci);
        u
    }

    pub fn from_statements<'a>(list: impl IntoIterator<Item = &'a CiStatement>) -> Self {
        let mut u = Imset::new();
        for ci in list {
            u.add_statement(ci);
        }
        u
    }

    pub fn get(&self, s: VertexSet) -> i64 {
        self.coef.get(&s).copied().unwrap_or(0)
    }

    /// Sets with a nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = (VertexSet, i64)> + '_ {
        self.coef.iter().map(|(&s, &c)| (s, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coef.is_empty()
    }

    /// `Σ_S u(S) Ĥ(S)`, touching only the support.
    pub fn inner_product(&self, cache: &EntropyCache) -> Result<f64> {
        let mut acc = 0.0;
        for (&s, &c) in &self.coef {
            if !s.is_empty() {
                acc += c as f64 * cache.entropy(s)?;
            }
        }
        Ok(acc)
    }
}

/// `Î(A; B | C) = Ĥ(AC) + Ĥ(BC) - Ĥ(ABC) - Ĥ(C)`.
pub fn conditional_mutual_information(ci: &CiStatement, cache: &EntropyCache) -> Result<f64> {
    Imset::semi_elementary(ci).inner_product(cache).map(|x| -x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionKind {
    /// Vertices plus edges: free parameters of a linear Gaussian MAG model.
    #[default]
    Gaussian,
    /// Size of the parametrizing set.
    Pset,
}

pub fn model_dimension(g: &MixedGraph, kind: DimensionKind) -> Result<usize> {
    Ok(match kind {
        DimensionKind::Gaussian => g.n() + g.edge_count(),
        DimensionKind::Pset => parametrizing_set(g)?.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ScoreOptions {
    pub property: MarkovProperty,
    pub dimension: DimensionKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScoreReport {
    pub total: f64,
    /// `2N Ĥ(V)`, shared by every graph on the same data.
    pub saturated: f64,
    /// `2N Σ Î` over the statements.
    pub violation: f64,
    /// `d log N`.
    pub penalty: f64,
    pub dimension: usize,
    pub statements: Vec<(CiStatement, f64)>,
}

impl ScoreReport {
    pub fn infinite() -> Self {
        ScoreReport {
            total: f64::INFINITY,
            saturated: f64::NAN,
            violation: f64::INFINITY,
            penalty: f64::NAN,
            dimension: 0,
            statements: Vec::new(),
        }
    }
}

pub fn score_statements(
    g: &MixedGraph,
    statements: Vec<CiStatement>,
    cache: &EntropyCache,
    dimension: DimensionKind,
) -> Result<ScoreReport> {
    let n = cache.n_samples() as f64;
    let saturated = 2.0 * n * cache.entropy(g.vertices())?;
    let imset = Imset::from_statements(&statements);
    let violation = -2.0 * n * imset.inner_product(cache)?;
    let d = model_dimension(g, dimension)?;
    let penalty = d as f64 * n.ln();
    let mut per = Vec::with_capacity(statements.len());
    for ci in statements {
        per.push((ci, conditional_mutual_information(&ci, cache)?));
    }
    Ok(ScoreReport { total: saturated + violation + penalty, saturated, violation, penalty, dimension: d, statements: per })
}

/// Score of a MAG under its lowest-index-first topological order.
pub fn score_mag(g: &MixedGraph, cache: &EntropyCache, opts: ScoreOptions) -> Result<ScoreReport> {
    if g.n() != cache.n_vars() {
        return Err(crate::Error::Domain(format!(
            "graph has {} vertices but the data has {} variables",
            g.n(),
            cache.n_vars()
        )));
    }
    let statements = ci_list(g, None, opts.property)?;
    score_statements(g, statements, cache, opts.dimension)
}
