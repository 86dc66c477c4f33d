//! Random ADMGs and linear Gaussian data on their MAG projections.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{project_to_mag, GraphKind, MixedGraph, MAX_VERTICES};
use crate::heads::max_head_size;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub avg_degree: f64,
    /// Probability that an edge is directed rather than bidirected.
    pub p_directed: f64,
    /// Magnitude range of coefficients; signs are symmetric.
    pub coef_range: (f64, f64),
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n: 10, avg_degree: 3.0, p_directed: 0.6, coef_range: (0.1, 1.0), n_samples: 5000, seed: 0 }
    }
}

impl SimConfig {
    pub fn edge_count(&self) -> Result<usize> {
        if self.n > MAX_VERTICES {
            return Err(Error::TooManyVertices(self.n));
        }
        if !(self.avg_degree >= 0.0) || !(self.p_directed > 0.0 && self.p_directed <= 1.0) {
            return Err(Error::Infeasible(format!(
                "average degree {} and directed probability {} are out of range",
                self.avg_degree, self.p_directed
            )));
        }
        let (lo, hi) = self.coef_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Infeasible(format!("coefficient range ({lo}, {hi}) must satisfy 0 < lo <= hi")));
        }
        let m = (self.n as f64 * self.avg_degree / 2.0).round() as usize;
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        if m > pairs {
            return Err(Error::Infeasible(format!("{m} edges do not fit on {} vertices", self.n)));
        }
        Ok(m)
    }
}

/// Generator for one named stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform edge set of the configured size over a uniform vertex order.
pub fn random_admg(cfg: &SimConfig, rng: &mut impl Rng) -> Result<MixedGraph> {
    let m = cfg.edge_count()?;
    let n = cfg.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = MixedGraph::new(n, GraphKind::Admg)?;
    let pairs = n * n.saturating_sub(1) / 2;
    for k in sample(rng, pairs, m) {
        let (x, y) = pair_at(n, k);
        let (a, b) = (order[x], order[y]);
        if rng.gen_bool(cfg.p_directed) {
            g.add_directed(a, b)?;
        } else {
            g.add_bidirected(a, b)?;
        }
    }
    Ok(g)
}

/// `k`-th pair `(x, y)` with `x < y` in row-major order.
fn pair_at(n: usize, mut k: usize) -> (usize, usize) {
    for x in 0..n {
        let row = n - x - 1;
        if k < row {
            return (x, x + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

fn signed_uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    let mag = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    if rng.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// `X_b = Σ_a coef[(a, b)] X_a + ε_b` with `ε ~ N(0, omega)`.
#[derive(Clone, Debug)]
pub struct LinearGaussianSem {
    pub graph: MixedGraph,
    pub coef: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

const INFLATE_RETRIES: usize = 5;

impl LinearGaussianSem {
    pub fn random(graph: &MixedGraph, coef_range: (f64, f64), rng: &mut impl Rng) -> Result<Self> {
        let n = graph.n();
        let mut coef = DMatrix::zeros(n, n);
        let mut omega = DMatrix::zeros(n, n);
        for e in graph.edges() {
            let w = signed_uniform(rng, coef_range);
            if graph.is_directed(e.a, e.b) {
                coef[(e.a, e.b)] = w;
            } else if graph.is_directed(e.b, e.a) {
                coef[(e.b, e.a)] = w;
            } else if graph.is_bidirected(e.a, e.b) {
                omega[(e.a, e.b)] = w;
                omega[(e.b, e.a)] = w;
            } else {
                return Err(Error::WrongKind { expected: GraphKind::Admg, found: graph.kind() });
            }
        }
        for a in 0..n {
            omega[(a, a)] = 1.0 + omega.row(a).iter().map(|x| x.abs()).sum::<f64>();
        }
        Ok(LinearGaussianSem { graph: graph.clone(), coef, omega })
    }

    fn mixing(&self) -> Result<DMatrix<f64>> {
        let n = self.graph.n();
        (DMatrix::identity(n, n) - &self.coef).try_inverse().ok_or(Error::Cycle)
    }

    /// `(I - B)^{-T} Ω (I - B)^{-1}`.
    pub fn implied_covariance(&self) -> Result<DMatrix<f64>> {
        let inv = self.mixing()?;
        Ok(inv.transpose() * &self.omega * inv)
    }

    /// Samples × variables.
    pub fn sample(&mut self, n_samples: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
        let n = self.graph.n();
        let mut attempt = 0;
        let chol = loop {
            if let Some(c) = self.omega.clone().cholesky() {
                break c;
            }
            if attempt == INFLATE_RETRIES {
                return Err(Error::DegenerateData { subset: self.graph.vertices() });
            }
            attempt += 1;
            log::warn!("error covariance is not positive definite, doubling its diagonal");
            for a in 0..n {
                self.omega[(a, a)] *= 2.0;
            }
        };
        let z = DMatrix::<f64>::from_fn(n_samples, n, |_, _| rng.sample(StandardNormal));
        let noise = z * chol.l().transpose();
        Ok(noise * self.mixing()?)
    }
}

#[derive(Clone, Debug)]
pub struct Replication {
    pub admg: MixedGraph,
    pub mag: MixedGraph,
    pub sem: LinearGaussianSem,
    pub data: DMatrix<f64>,
}

/// Replication `k` of `cfg`: graph and data use separate streams.
pub fn replicate(cfg: &SimConfig, k: u64) -> Result<Replication> {
    let mut graph_rng = stream_rng(cfg.seed, 2 * k);
    let mut data_rng = stream_rng(cfg.seed, 2 * k + 1);
    let admg = random_admg(cfg, &mut graph_rng)?;
    let mag = project_to_mag(&admg)?;
    let mut sem = LinearGaussianSem::random(&mag, cfg.coef_range, &mut graph_rng)?;
    let data = sem.sample(cfg.n_samples, &mut data_rng)?;
    Ok(Replication { admg, mag, sem, data })
}

/// Counts of maximal head sizes over `reps` projected random graphs;
/// entry `k` counts graphs whose largest head has `k` vertices.
pub fn head_size_histogram(cfg: &SimConfig, reps: u64) -> Result<Vec<usize>> {
    let mut counts = vec![0; cfg.n + 1];
    for k in 0..reps {
        let mag = project_to_mag(&random_admg(cfg, &mut stream_rng(cfg.seed, 2 * k))?)?;
        counts[max_head_size(&mag)?] += 1;
    }
    Ok(counts)
}
