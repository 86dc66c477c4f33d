//! Comparison metrics between an estimated and a true graph, and maximum
//! likelihood fitting of linear Gaussian MAG models for BIC comparisons.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::entropy::{log_det_pd, sample_covariance};
use crate::error::{Error, Result};
use crate::graph::{project_to_mag, GraphKind, Mark, MixedGraph};
use crate::imset::{model_dimension, DimensionKind};
use crate::pag::pag_to_mag;

fn same_size(a: &MixedGraph, b: &MixedGraph) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Domain(format!("graphs have {} and {} vertices", a.n(), b.n())));
    }
    Ok(())
}

/// Fraction of matching endpoint marks, over twice the number of pairs
/// adjacent in either graph. Two empty graphs agree completely.
pub fn edge_mark_accuracy(est: &MixedGraph, truth: &MixedGraph) -> Result<f64> {
    same_size(est, truth)?;
    let (mut union, mut matches) = (0usize, 0usize);
    for a in 0..est.n() {
        for b in a + 1..est.n() {
            let (e, t) = (est.adjacent(a, b), truth.adjacent(a, b));
            if !(e || t) {
                continue;
            }
            union += 1;
            if e && t {
                matches += usize::from(est.mark(a, b) == truth.mark(a, b));
                matches += usize::from(est.mark(b, a) == truth.mark(b, a));
            }
        }
    }
    Ok(if union == 0 { 1.0 } else { matches as f64 / (2 * union) as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeType {
    Adjacency,
    Directed,
    Bidirected,
    CircleArrow,
    CircleCircle,
}

impl EdgeType {
    pub const ALL: [EdgeType; 5] =
        [EdgeType::Adjacency, EdgeType::Directed, EdgeType::Bidirected, EdgeType::CircleArrow, EdgeType::CircleCircle];

    /// Marks `(at a, at b)` of an `a`–`b` edge of this type, read left to right.
    fn marks(self) -> Option<(Mark, Mark)> {
        match self {
            EdgeType::Adjacency => None,
            EdgeType::Directed => Some((Mark::Tail, Mark::Arrow)),
            EdgeType::Bidirected => Some((Mark::Arrow, Mark::Arrow)),
            EdgeType::CircleArrow => Some((Mark::Circle, Mark::Arrow)),
            EdgeType::CircleCircle => Some((Mark::Circle, Mark::Circle)),
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeType::Adjacency => "adjacency",
            EdgeType::Directed => "->",
            EdgeType::Bidirected => "<->",
            EdgeType::CircleArrow => "o->",
            EdgeType::CircleCircle => "o-o",
        })
    }
}

/// Orientation of the pair `a < b` if it carries an edge of type `t`:
/// `Some(true)` read `a` to `b`, `Some(false)` read `b` to `a`.
fn orientation(g: &MixedGraph, a: usize, b: usize, t: EdgeType) -> Option<bool> {
    if !g.adjacent(a, b) {
        return None;
    }
    let Some((left, right)) = t.marks() else {
        return Some(true);
    };
    let (ma, mb) = (g.mark(b, a)?, g.mark(a, b)?);
    if (ma, mb) == (left, right) {
        Some(true)
    } else if (mb, ma) == (left, right) {
        Some(false)
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn tpr(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn fpr(&self) -> Option<f64> {
        let d = self.fp + self.tn;
        (d > 0).then(|| self.fp as f64 / d as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeRates {
    pub edge_type: EdgeType,
    #[serde(flatten)]
    pub counts: Confusion,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

/// Per-type confusion counts over unordered vertex pairs. A pair counts as a
/// true positive when both graphs carry the type in the same direction; an
/// estimated edge of the type on a pair where the truth has another type
/// counts as a false positive.
pub fn edge_type_rates(est: &MixedGraph, truth: &MixedGraph) -> Result<Vec<EdgeRates>> {
    same_size(est, truth)?;
    let mut out = Vec::new();
    for t in EdgeType::ALL {
        let mut c = Confusion::default();
        for a in 0..est.n() {
            for b in a + 1..est.n() {
                match (orientation(truth, a, b, t), orientation(est, a, b, t)) {
                    (Some(x), Some(y)) if x == y => c.tp += 1,
                    (Some(_), _) => c.fn_ += 1,
                    (None, Some(_)) => c.fp += 1,
                    (None, None) => c.tn += 1,
                }
            }
        }
        out.push(EdgeRates { edge_type: t, counts: c, tpr: c.tpr(), fpr: c.fpr() });
    }
    Ok(out)
}

/// A MAG standing for `g`: itself, its projection, or a member of its class.
pub fn representative_mag(g: &MixedGraph) -> Result<MixedGraph> {
    match g.kind() {
        GraphKind::Mag => Ok(g.clone()),
        GraphKind::Admg => project_to_mag(g),
        GraphKind::Pag | GraphKind::Pmg => pag_to_mag(g),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianFit {
    /// `coef[(a, b)]` is the coefficient of `a` in the equation of `b`.
    #[serde(skip)]
    pub coef: DMatrix<f64>,
    #[serde(skip)]
    pub omega: DMatrix<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood never decreased between sweeps.
    pub monotone: bool,
}

pub const RICF_TOLERANCE: f64 = 1e-8;
pub const RICF_MAX_ITERATIONS: usize = 500;

pub fn implied_covariance(coef: &DMatrix<f64>, omega: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = coef.nrows();
    let inv = (DMatrix::identity(n, n) - coef).try_inverse()?;
    Some(inv.transpose() * omega * inv)
}

/// Gaussian log-likelihood of `n_samples` observations with maximum
/// likelihood covariance `s` under model covariance `sigma`.
pub fn gaussian_log_likelihood(sigma: &DMatrix<f64>, s: &DMatrix<f64>, n_samples: usize) -> f64 {
    let p = s.nrows() as f64;
    let Some(chol) = sigma.clone().cholesky() else {
        return f64::NEG_INFINITY;
    };
    let log_det = log_det_pd(sigma.clone()).unwrap_or(f64::INFINITY);
    let trace = (chol.inverse() * s).trace();
    -0.5 * n_samples as f64 * (p * (2.0 * std::f64::consts::PI).ln() + log_det + trace)
}

/// Maximum likelihood covariance, with denominator `N`.
pub fn mle_covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows() as f64;
    sample_covariance(data) * ((n - 1.0) / n)
}

fn rows_of(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |r, c| m[(rows[r], c)])
}

/// Residual iterative conditional fitting from a maximum likelihood
/// covariance. Each vertex in turn is regressed on its parents and on the
/// current residuals of its siblings.
pub fn ricf(g: &MixedGraph, s: &DMatrix<f64>, n_samples: usize) -> Result<GaussianFit> {
    let n = g.n();
    if s.nrows() != n || s.ncols() != n {
        return Err(Error::Domain(format!("covariance is {}x{} for {n} vertices", s.nrows(), s.ncols())));
    }
    if g.has_circle() || g.has_undirected() {
        return Err(Error::Domain("fitting needs directed and bidirected edges only".into()));
    }
    if s.clone().cholesky().is_none() {
        return Err(Error::DegenerateData { subset: g.vertices() });
    }
    let mut coef = DMatrix::<f64>::zeros(n, n);
    let mut omega = DMatrix::<f64>::from_diagonal(&s.diagonal());
    let ll = |coef: &DMatrix<f64>, omega: &DMatrix<f64>| {
        implied_covariance(coef, omega).map_or(f64::NEG_INFINITY, |sig| gaussian_log_likelihood(&sig, s, n_samples))
    };
    let mut last = ll(&coef, &omega);
    let (mut monotone, mut converged, mut iterations) = (true, false, 0);
    while iterations < RICF_MAX_ITERATIONS {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 0..n {
            let pa = g.parents(i).to_vec();
            let sp = g.siblings(i).to_vec();
            if pa.is_empty() && sp.is_empty() {
                change = change.max((omega[(i, i)] - s[(i, i)]).abs());
                omega[(i, i)] = s[(i, i)];
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            // rows of (I - B)^T: residual of each vertex as a combination of all variables
            let resid = (DMatrix::identity(n, n) - &coef).transpose();
            let omega_rest = DMatrix::from_fn(n - 1, n - 1, |r, c| omega[(others[r], others[c])]);
            let omega_rest_inv = omega_rest
                .try_inverse()
                .ok_or_else(|| Error::Domain("error covariance became singular during fitting".into()))?;
            let sp_pos: Vec<usize> = sp.iter().map(|&k| others.iter().position(|&o| o == k).unwrap()).collect();
            let pseudo = rows_of(&(&omega_rest_inv * rows_of(&resid, &others)), &sp_pos);
            let mut t = DMatrix::<f64>::zeros(pa.len() + sp.len(), n);
            for (r, &a) in pa.iter().enumerate() {
                t[(r, a)] = 1.0;
            }
            t.view_mut((pa.len(), 0), (sp.len(), n)).copy_from(&pseudo);
            let cov_w = &t * s * t.transpose();
            let cov_wy = &t * s.column(i);
            let sol = cov_w
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Domain("regressors are collinear during fitting".into()))?
                .solve(&cov_wy);
            let resid_var = s[(i, i)] - sol.dot(&cov_wy);
            for (r, &a) in pa.iter().enumerate() {
                change = change.max((coef[(a, i)] - sol[r]).abs());
                coef[(a, i)] = sol[r];
            }
            let gamma = sol.rows(pa.len(), sp.len()).into_owned();
            for (r, &k) in sp.iter().enumerate() {
                change = change.max((omega[(i, k)] - gamma[r]).abs());
                omega[(i, k)] = gamma[r];
                omega[(k, i)] = gamma[r];
            }
            let inv_sp = DMatrix::from_fn(sp.len(), sp.len(), |r, c| omega_rest_inv[(sp_pos[r], sp_pos[c])]);
            let w = resid_var + (gamma.transpose() * inv_sp * &gamma)[(0, 0)];
            change = change.max((omega[(i, i)] - w).abs());
            omega[(i, i)] = w;
        }
        let now = ll(&coef, &omega);
        if now < last - 1e-9 * last.abs().max(1.0) {
            monotone = false;
        }
        last = now;
        if change < RICF_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("fitting stopped after {iterations} sweeps without converging");
    }
    Ok(GaussianFit { coef, omega, log_likelihood: last, iterations, converged, monotone })
}

pub fn ricf_from_data(g: &MixedGraph, data: &DMatrix<f64>) -> Result<GaussianFit> {
    ricf(g, &mle_covariance(data), data.nrows())
}

/// `-2 log L + d log N`, lower is better.
pub fn bic(g: &MixedGraph, s: &DMatrix<f64>, n_samples: usize, dim: DimensionKind) -> Result<f64> {
    let mag = representative_mag(g)?;
    let fit = ricf(&mag, s, n_samples)?;
    Ok(-2.0 * fit.log_likelihood + model_dimension(&mag, dim)? as f64 * (n_samples as f64).ln())
}

/// `sign(Δ) log(|Δ| + 1)` for `Δ = BIC(est) - BIC(truth)`; positive when the
/// estimate is worse.
pub fn bic_diff(est: &MixedGraph, truth: &MixedGraph, data: &DMatrix<f64>, dim: DimensionKind) -> Result<f64> {
    same_size(est, truth)?;
    let s = mle_covariance(data);
    let delta = bic(est, &s, data.nrows(), dim)? - bic(truth, &s, data.nrows(), dim)?;
    Ok(delta.signum() * (delta.abs() + 1.0).ln())
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub rates: Vec<EdgeRates>,
    pub log_bic_diff: Option<f64>,
    pub runtime_secs: Option<f64>,
}

pub fn compare(est: &MixedGraph, truth: &MixedGraph) -> Result<MetricReport> {
    Ok(MetricReport {
        accuracy: edge_mark_accuracy(est, truth)?,
        rates: edge_type_rates(est, truth)?,
        log_bic_diff: None,
        runtime_secs: None,
    })
}
