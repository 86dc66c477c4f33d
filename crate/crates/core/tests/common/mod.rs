//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use gesmag_core::graph::{is_ancestral, is_maximal, project_to_mag};
use gesmag_core::markov::CiStatement;
use gesmag_core::simulate::{random_admg, stream_rng, SimConfig};
use gesmag_core::{GraphKind, Mark, MixedGraph, VertexSet};
use rand::Rng;

/// Every MAG on `n` vertices, by trying all four states of every pair.
pub fn all_mags(n: usize) -> Vec<MixedGraph> {
    all_ancestral(n)
        .into_iter()
        .filter(|g| is_maximal(g).unwrap())
        .map(|g| g.with_kind(GraphKind::Mag).unwrap())
        .collect()
}

/// Every ancestral ADMG on `n` vertices.
pub fn all_ancestral(n: usize) -> Vec<MixedGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    let total = 4usize.pow(pairs.len() as u32);
    'graphs: for code in 0..total {
        let mut g = MixedGraph::new(n, GraphKind::Admg).unwrap();
        let mut c = code;
        for &(a, b) in &pairs {
            let r = match c % 4 {
                0 => Ok(()),
                1 => g.add_directed(a, b),
                2 => g.add_directed(b, a),
                _ => g.add_bidirected(a, b),
            };
            c /= 4;
            if r.is_err() {
                continue 'graphs;
            }
        }
        if gesmag_core::graph::topological_order(&g).is_err() {
            continue;
        }
        if is_ancestral(&g).unwrap() {
            out.push(g);
        }
    }
    out
}

/// A MAG drawn by projecting a random ADMG of random density.
pub fn random_mag(n: usize, seed: u64) -> MixedGraph {
    let mut rng = stream_rng(seed, 99);
    let max_deg = (n - 1) as f64;
    let cfg = SimConfig {
        n,
        avg_degree: (rng.gen_range(0.0..=max_deg) * 2.0).round() / 2.0,
        p_directed: rng.gen_range(0.2..=1.0),
        ..Default::default()
    };
    project_to_mag(&random_admg(&cfg, &mut rng).unwrap()).unwrap()
}

/// A random ADMG (not necessarily ancestral).
pub fn random_admg_of(n: usize, seed: u64) -> MixedGraph {
    let mut rng = stream_rng(seed, 98);
    let cfg = SimConfig {
        n,
        avg_degree: (rng.gen_range(0.0..=(n - 1) as f64) * 2.0).round() / 2.0,
        p_directed: rng.gen_range(0.0..=1.0),
        ..Default::default()
    };
    random_admg(&cfg, &mut rng).unwrap()
}

pub fn ancestors(g: &MixedGraph, w: VertexSet) -> VertexSet {
    let mut out = w;
    loop {
        let mut next = out;
        for v in out {
            for u in 0..g.n() {
                if g.is_directed(u, v) {
                    next.insert(u);
                }
            }
        }
        if next == out {
            return out;
        }
        out = next;
    }
}

/// m-connection by listing every simple path between the two sets: a path is
/// open when its colliders are ancestors of `c` and its other inner vertices
/// are outside `c`.
pub fn m_connected_by_paths(g: &MixedGraph, a: VertexSet, b: VertexSet, c: VertexSet) -> bool {
    let anc = ancestors(g, c);
    fn walk(g: &MixedGraph, path: &mut Vec<usize>, b: VertexSet, c: VertexSet, anc: VertexSet) -> bool {
        let last = *path.last().unwrap();
        if path.len() > 1 && b.contains(last) {
            return true;
        }
        for next in g.neighbors(last) {
            if path.contains(&next) {
                continue;
            }
            if path.len() >= 2 {
                let prev = path[path.len() - 2];
                let collider = g.mark(prev, last) == Some(Mark::Arrow) && g.mark(next, last) == Some(Mark::Arrow);
                let open = if collider { anc.contains(last) } else { !c.contains(last) };
                if !open {
                    continue;
                }
            }
            path.push(next);
            if walk(g, path, b, c, anc) {
                return true;
            }
            path.pop();
        }
        false
    }
    a.iter().any(|s| walk(g, &mut vec![s], b, c, anc))
}

/// Elementary statement `a ⊥ b | k` with `a < b`.
pub type Elementary = (usize, usize, VertexSet);

fn elem(a: usize, b: usize, k: VertexSet) -> Elementary {
    (a.min(b), a.max(b), k)
}

/// All elementary separations of the graph, found by the path oracle.
pub fn separation_model(g: &MixedGraph) -> BTreeSet<Elementary> {
    let mut out = BTreeSet::new();
    for a in 0..g.n() {
        for b in a + 1..g.n() {
            let rest = g.vertices().without(a).without(b);
            for k in rest.subsets() {
                if !m_connected_by_paths(g, VertexSet::singleton(a), VertexSet::singleton(b), k) {
                    out.insert((a, b, k));
                }
            }
        }
    }
    out
}

/// Elementary statements equivalent, in any semigraphoid, to the given list.
pub fn elementary_of(list: &[CiStatement]) -> BTreeSet<Elementary> {
    let mut out = BTreeSet::new();
    for s in list {
        for a in s.a {
            for b in s.b {
                let free = s.a.union(s.b).without(a).without(b);
                for d in free.subsets() {
                    out.insert(elem(a, b, s.c.union(d)));
                }
            }
        }
    }
    out
}

/// Closure under the elementary semigraphoid rule
/// `(a ⊥ b | Kc) & (a ⊥ c | K)  <=>  (a ⊥ c | Kb) & (a ⊥ b | K)`.
pub fn semigraphoid_closure(mut set: BTreeSet<Elementary>) -> BTreeSet<Elementary> {
    loop {
        let mut added = Vec::new();
        for &(x, y, kc) in &set {
            for (a, b) in [(x, y), (y, x)] {
                for c in kc {
                    let k = kc.without(c);
                    if set.contains(&elem(a, c, k)) {
                        for s in [elem(a, c, k.with(b)), elem(a, b, k)] {
                            if !set.contains(&s) {
                                added.push(s);
                            }
                        }
                    }
                }
            }
        }
        if added.is_empty() {
            return set;
        }
        set.extend(added);
    }
}

/// Membership by separation: `w` is outside the parametrizing set exactly
/// when two of its vertices are separated by a set covering the rest of `w`.
pub fn in_pset_by_separation(g: &MixedGraph, w: VertexSet) -> bool {
    for a in w {
        for b in w {
            if b <= a {
                continue;
            }
            let must = w.without(a).without(b);
            let optional = g.vertices().difference(w);
            for extra in optional.subsets() {
                let c = must.union(extra);
                if !m_connected_by_paths(g, VertexSet::singleton(a), VertexSet::singleton(b), c) {
                    return false;
                }
            }
        }
    }
    true
}

/// Bidirected-connected component of `v` inside `within`.
fn district(g: &MixedGraph, v: usize, within: VertexSet) -> VertexSet {
    let mut seen = VertexSet::singleton(v);
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for w in within {
            if !seen.contains(w) && g.is_bidirected(u, w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    seen
}

/// Heads and tails found by checking every subset of vertices.
pub fn heads_by_subsets(g: &MixedGraph) -> Vec<(VertexSet, VertexSet)> {
    let mut out = Vec::new();
    for h in g.vertices().subsets().filter(|h| !h.is_empty()) {
        let barren = h.iter().all(|v| h.without(v).iter().all(|u| !ancestors(g, VertexSet::singleton(u)).contains(v) || u == v));
        let an = ancestors(g, h);
        let d = district(g, h.min().unwrap(), an);
        if !barren || !h.is_subset(d) {
            continue;
        }
        let mut pa = VertexSet::EMPTY;
        for v in d {
            for u in 0..g.n() {
                if g.is_directed(u, v) {
                    pa.insert(u);
                }
            }
        }
        out.push((h, d.union(pa).difference(h)));
    }
    out
}

/// Every topological order of the directed part.
pub fn all_orders(g: &MixedGraph) -> Vec<Vec<usize>> {
    fn go(g: &MixedGraph, placed: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if placed.len() == g.n() {
            out.push(placed.clone());
            return;
        }
        for v in 0..g.n() {
            if placed.contains(&v) || (0..g.n()).any(|u| g.is_directed(u, v) && !placed.contains(&u)) {
                continue;
            }
            placed.push(v);
            go(g, placed, out);
            placed.pop();
        }
    }
    let mut out = Vec::new();
    go(g, &mut Vec::new(), &mut out);
    out
}

/// The four-vertex MAG `1 <-> 2`, `1 -> 4`, `2 -> 3`, `2 <-> 4`, `3 <-> 4`
/// with 0-based labels. Its only separation is `0 ⊥ 2 | 1`.
pub fn four_vertex_mag() -> MixedGraph {
    let mut g = MixedGraph::new(4, GraphKind::Mag).unwrap();
    g.add_directed(1, 2).unwrap();
    g.add_directed(0, 3).unwrap();
    g.add_bidirected(1, 3).unwrap();
    g.add_bidirected(2, 3).unwrap();
    g.add_bidirected(0, 1).unwrap();
    g
}

/// Maximum of the Gaussian log-likelihood of `g` by BFGS over edge
/// coefficients, error covariances and log error variances, with central
/// difference gradients. Independent of the fitting code under test.
pub fn quasi_newton_log_likelihood(g: &MixedGraph, s: &nalgebra::DMatrix<f64>, n_samples: usize) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let n = g.n();
    let directed: Vec<(usize, usize)> = g.edges().filter(|e| g.is_directed(e.a, e.b) || g.is_directed(e.b, e.a)).map(|e| if g.is_directed(e.a, e.b) { (e.a, e.b) } else { (e.b, e.a) }).collect();
    let bidirected: Vec<(usize, usize)> = g.edges().filter(|e| g.is_bidirected(e.a, e.b)).map(|e| (e.a, e.b)).collect();
    let dim = directed.len() + bidirected.len() + n;
    let objective = |x: &DVector<f64>| -> f64 {
        let mut b = DMatrix::<f64>::zeros(n, n);
        let mut omega = DMatrix::<f64>::zeros(n, n);
        for (k, &(u, v)) in directed.iter().enumerate() {
            b[(u, v)] = x[k];
        }
        for (k, &(u, v)) in bidirected.iter().enumerate() {
            omega[(u, v)] = x[directed.len() + k];
            omega[(v, u)] = x[directed.len() + k];
        }
        for v in 0..n {
            omega[(v, v)] = x[directed.len() + bidirected.len() + v].exp();
        }
        let a = (DMatrix::identity(n, n) - b).try_inverse().unwrap();
        let sigma = a.transpose() * omega * a;
        let Some(chol) = sigma.cholesky() else { return f64::INFINITY };
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        log_det + (chol.inverse() * s).trace()
    };
    let grad = |x: &DVector<f64>| {
        DVector::from_fn(dim, |k, _| {
            let h = 1e-6 * x[k].abs().max(1.0);
            let (mut up, mut down) = (x.clone(), x.clone());
            up[k] += h;
            down[k] -= h;
            (objective(&up) - objective(&down)) / (2.0 * h)
        })
    };
    let mut x = DVector::zeros(dim);
    for v in 0..n {
        x[directed.len() + bidirected.len() + v] = s[(v, v)].ln();
    }
    let mut h_inv = DMatrix::<f64>::identity(dim, dim);
    let (mut f, mut g0) = (objective(&x), grad(&x));
    for _ in 0..5000 {
        if g0.norm() < 1e-10 {
            break;
        }
        let dir = -(&h_inv * &g0);
        let slope = g0.dot(&dir);
        let dir = if slope < 0.0 { dir } else { -g0.clone() };
        let slope = g0.dot(&dir);
        let mut step = 1.0;
        let mut next = &x + &dir * step;
        let mut f_next = objective(&next);
        while !(f_next <= f + 1e-4 * step * slope) && step > 1e-16 {
            step *= 0.5;
            next = &x + &dir * step;
            f_next = objective(&next);
        }
        if step <= 1e-16 {
            break;
        }
        let g1 = grad(&next);
        let (sk, yk) = (&next - &x, &g1 - &g0);
        let sy = sk.dot(&yk);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(dim, dim);
            h_inv = (&eye - rho * &sk * yk.transpose()) * &h_inv * (&eye - rho * &yk * sk.transpose()) + rho * &sk * sk.transpose();
        }
        x = next;
        f = f_next;
        g0 = g1;
    }
    -0.5 * n_samples as f64 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + f)
}

/// Closed-form Gaussian log-likelihood of a DAG: one least-squares
/// regression of each vertex on its parents.
pub fn dag_log_likelihood(g: &MixedGraph, s: &nalgebra::DMatrix<f64>, n_samples: usize) -> f64 {
    let mut total = 0.0;
    for v in 0..g.n() {
        let pa: Vec<usize> = (0..g.n()).filter(|&u| g.is_directed(u, v)).collect();
        let mut var = s[(v, v)];
        if !pa.is_empty() {
            let spp = nalgebra::DMatrix::from_fn(pa.len(), pa.len(), |r, c| s[(pa[r], pa[c])]);
            let spv = nalgebra::DVector::from_fn(pa.len(), |r, _| s[(pa[r], v)]);
            var -= spv.dot(&spp.lu().solve(&spv).unwrap());
        }
        total += (2.0 * std::f64::consts::PI * var).ln() + 1.0;
    }
    -0.5 * n_samples as f64 * total
}

/// Mean and standard error of the full-set entropy estimate over `reps`
/// data sets of `n_samples` draws from `N(0, sigma)`.
pub fn entropy_draws(sigma: &nalgebra::DMatrix<f64>, n_samples: usize, reps: u64, estimator: gesmag_core::entropy::Estimator) -> (f64, f64) {
    let p = sigma.nrows();
    let chol = sigma.clone().cholesky().unwrap().l();
    let normal = rand_distr::StandardNormal;
    let mut rng = stream_rng(11, n_samples as u64);
    let mut vals = Vec::with_capacity(reps as usize);
    for _ in 0..reps {
        let z = nalgebra::DMatrix::<f64>::from_fn(n_samples, p, |_, _| rand::Rng::sample(&mut rng, normal));
        let x = z * chol.transpose();
        let cache = gesmag_core::entropy::EntropyCache::from_data(&x, estimator).unwrap();
        vals.push(cache.entropy(VertexSet::full(p)).unwrap());
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    (mean, (var / vals.len() as f64).sqrt())
}
