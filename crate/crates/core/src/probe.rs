//! Scaling probe: search cost on simulated problems of growing size with
//! the degree, head size and discriminating path budget held fixed.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Executor;
use crate::search::{gesmag, SearchConfig};
use crate::simulate::{replicate, SimConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub sizes: Vec<usize>,
    pub reps: u64,
    /// `n` is overwritten per size.
    pub sim: SimConfig,
    pub search: SearchConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub reps: u64,
    /// Mean number of candidate classes scored in the adding and deleting phases.
    pub mean_moves: f64,
    /// Mean number of move generator calls in the same phases.
    pub mean_generator_calls: f64,
    pub mean_seconds: f64,
    pub mean_edges: f64,
}

pub fn complexity_probe(cfg: &ProbeConfig, exec: &Executor) -> Result<Vec<ProbeRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let sim = SimConfig { n, ..cfg.sim.clone() };
        let (mut moves, mut calls, mut secs, mut edges) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..cfg.reps {
            let rep = replicate(&sim, k)?;
            let started = Instant::now();
            let out = gesmag(&rep.data, &cfg.search, exec)?;
            secs += started.elapsed().as_secs_f64();
            moves += (out.stats.add.candidates + out.stats.delete.candidates) as f64;
            calls += (out.stats.add.moves + out.stats.delete.moves) as f64;
            edges += out.mec.pag.edge_count() as f64;
        }
        let r = cfg.reps.max(1) as f64;
        log::info!("probe n={n}: {:.1} moves, {:.3}s per run", moves / r, secs / r);
        rows.push(ProbeRow {
            n,
            reps: cfg.reps,
            mean_moves: moves / r,
            mean_generator_calls: calls / r,
            mean_seconds: secs / r,
            mean_edges: edges / r,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.max(f64::MIN_POSITIVE).ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [5.0, 10.0, 20.0].iter().map(|&x: &f64| (x, 3.0 * x.powi(2))).collect();
        assert!((log_log_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_probe_runs() {
        let cfg = ProbeConfig {
            sizes: vec![2, 3],
            reps: 1,
            sim: SimConfig { avg_degree: 1.0, n_samples: 200, ..Default::default() },
            search: SearchConfig::default(),
        };
        let rows = complexity_probe(&cfg, &Executor::sequential()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].mean_generator_calls >= 1.0);
    }
}
