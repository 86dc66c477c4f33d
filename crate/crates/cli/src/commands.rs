use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gesmag_core::data::Dataset;
use gesmag_core::entropy::EntropyCache;
use gesmag_core::eval::{bic_diff, compare, representative_mag, EdgeType, MetricReport};
use gesmag_core::exec::Executor;
use gesmag_core::graph::project_to_mag;
use gesmag_core::heads::{enumerate_heads, max_head_size};
use gesmag_core::imset::{score_mag, ScoreOptions};
use gesmag_core::markov::ci_list;
use gesmag_core::moves::MoveLimits;
use gesmag_core::pag::{mag_to_pag, pag_to_mag};
use gesmag_core::probe::{complexity_probe, log_log_slope, ProbeConfig};
use gesmag_core::search::{gesmag, SearchConfig};
use gesmag_core::simulate::{replicate, SimConfig};
use gesmag_core::textfmt::{parse_graph, write_graph};
use gesmag_core::{GraphKind, Mec, MixedGraph, VertexSet};
use serde::Serialize;
use serde_json::json;

use crate::manifest::{relative_name, RunManifest};
use crate::{ConvertArgs, Conversion, EvalArgs, HeadsArgs, LearnArgs, MarkovArgs, ProbeArgs, ScoreArgs, SimulateArgs};

fn read_graph(path: &Path) -> Result<MixedGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_graph(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_data(path: &Path) -> Result<Dataset> {
    Dataset::read(path).with_context(|| format!("reading {}", path.display()))
}

/// `println!` that reports a closed standard output as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

fn write_graph_file(path: &Path, g: &MixedGraph, manifest: &Path) -> Result<()> {
    let text = format!("# manifest: {}\n{}", relative_name(manifest), write_graph(g));
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Full PAG of the class of any graph: MAGs and ADMGs are converted, PAGs are
/// re-derived from a representative so partially oriented input is canonical.
fn full_pag(g: &MixedGraph) -> Result<MixedGraph> {
    Ok(Mec::from_mag(&representative_mag(g)?)?.full_pag()?.graph)
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = SimConfig {
        n: a.n,
        avg_degree: a.avg_degree,
        p_directed: a.pd,
        coef_range: (a.coef_lo, a.coef_hi),
        n_samples: a.samples,
        seed: a.seed,
    };
    cfg.edge_count()?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let manifest_path = a.out_dir.join("simulate.manifest.json");
    let mut manifest = RunManifest::start("simulate", json!({ "sim": &cfg, "reps": a.reps }), Some(a.seed))?;
    for k in 0..a.reps {
        let rep = replicate(&cfg, k)?;
        let graph = a.out_dir.join(format!("graph_{k}.graph"));
        let admg = a.out_dir.join(format!("admg_{k}.graph"));
        let data = a.out_dir.join(format!("data_{k}.csv"));
        write_graph_file(&graph, &rep.mag, &manifest_path)?;
        write_graph_file(&admg, &rep.admg, &manifest_path)?;
        Dataset { names: None, values: rep.data }.write(&data)?;
        for p in [graph, admg, data] {
            manifest.output(&p);
        }
    }
    log::info!("wrote {} replications to {}", a.reps, a.out_dir.display());
    manifest.write(&manifest_path)
}

fn search_config(a: &LearnArgs, n: usize) -> Result<SearchConfig> {
    let skeleton = match &a.skeleton {
        Some(p) => {
            let s = read_graph(p)?;
            if s.n() != n {
                bail!("skeleton {} has {} vertices but the data has {n} columns", p.display(), s.n());
            }
            Some(s)
        }
        None => None,
    };
    Ok(SearchConfig {
        max_head_size: a.max_head_size,
        turn_budget: a.turn,
        score: ScoreOptions { property: a.scoring.property.into(), dimension: a.scoring.dimension.into() },
        estimator: a.scoring.estimator.into(),
        skeleton,
        max_degree: a.max_degree,
        limits: MoveLimits { branch_cap: a.branch_cap, path_cap: a.path_cap },
        max_iterations: a.max_iterations,
    })
}

fn learn_one(a: &LearnArgs, exec: &Executor, data: &Path, out: &Path, report: Option<&Path>, manifest: &Path) -> Result<()> {
    let ds = read_data(data)?;
    let cfg = search_config(a, ds.n_vars())?;
    let result = gesmag(&ds.values, &cfg, exec).with_context(|| format!("searching on {}", data.display()))?;
    write_graph_file(out, &result.pag.graph, manifest)?;
    if let Some(r) = report {
        write_json(
            r,
            &json!({
                "manifest": relative_name(manifest),
                "score": result.report,
                "trajectory": result.trajectory,
                "stats": result.stats,
                "events": result.events,
            }),
        )?;
    }
    log::info!("{}: score {:.3} after {} moves", data.display(), result.report.total, result.stats.iterations);
    Ok(())
}

/// `prefix_<k>.suffix` files in `dir`, sorted by `k`.
fn numbered(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(k) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(suffix)).and_then(|k| k.parse().ok()) {
            out.push((k, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn learn(a: LearnArgs) -> Result<()> {
    let exec = Executor::new(a.jobs);
    let config = json!({
        "max_head_size": a.max_head_size,
        "turn": a.turn,
        "estimator": format!("{:?}", gesmag_core::entropy::Estimator::from(a.scoring.estimator)),
        "property": gesmag_core::markov::MarkovProperty::from(a.scoring.property),
        "dimension": gesmag_core::imset::DimensionKind::from(a.scoring.dimension),
        "skeleton": a.skeleton,
        "max_degree": a.max_degree,
        "branch_cap": a.branch_cap,
        "path_cap": a.path_cap,
        "max_iterations": a.max_iterations,
        "jobs": exec.jobs(),
    });
    let mut manifest = RunManifest::start("learn", config, None)?;
    if let Some(skel) = &a.skeleton {
        manifest.input(skel)?;
    }
    if let Some(dir) = &a.batch_dir {
        let inputs = numbered(dir, "data_", ".csv")?;
        if inputs.is_empty() {
            bail!("no data_<k>.csv files in {}", dir.display());
        }
        let manifest_path = dir.join("learn.manifest.json");
        for (k, data) in inputs {
            let out = dir.join(format!("est_{k}.graph"));
            let report = dir.join(format!("est_{k}.report.json"));
            manifest.input(&data)?;
            learn_one(&a, &exec, &data, &out, Some(&report), &manifest_path)?;
            manifest.output(&out);
            manifest.output(&report);
        }
        return manifest.write(&manifest_path);
    }
    let (Some(data), Some(out)) = (&a.data, &a.out) else {
        bail!("--data and --out are required without --batch-dir");
    };
    let manifest_path = RunManifest::path_for(out);
    manifest.input(data)?;
    learn_one(&a, &exec, data, out, a.report.as_deref(), &manifest_path)?;
    manifest.output(out);
    if let Some(r) = &a.report {
        manifest.output(r);
    }
    manifest.write(&manifest_path)
}

pub fn score(a: ScoreArgs) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let ds = read_data(&a.data)?;
    let mag = representative_mag(&g)?;
    let cache = EntropyCache::from_data(&ds.values, a.scoring.estimator.into())?;
    let opts = ScoreOptions { property: a.scoring.property.into(), dimension: a.scoring.dimension.into() };
    let report = score_mag(&mag, &cache, opts)?;
    let body = json!({ "graph": a.graph, "data": a.data, "options": opts, "score": report });
    match &a.report {
        Some(path) => {
            let manifest_path = RunManifest::path_for(path);
            let mut manifest = RunManifest::start("score", opts, None)?;
            manifest.input(&a.graph)?;
            manifest.input(&a.data)?;
            let mut body = body;
            body["manifest"] = json!(relative_name(&manifest_path));
            write_json(path, &body)?;
            manifest.output(path);
            manifest.write(&manifest_path)
        }
        None => {
            out!("{}", serde_json::to_string_pretty(&body)?);
            Ok(())
        }
    }
}

fn metrics(est: &MixedGraph, truth: &MixedGraph, data: Option<&Dataset>, a: &EvalArgs) -> Result<MetricReport> {
    let (pe, pt) = (full_pag(est)?, full_pag(truth)?);
    let mut report = compare(&pe, &pt)?;
    if let Some(ds) = data {
        report.log_bic_diff = Some(bic_diff(est, truth, &ds.values, a.dimension.into())?);
    }
    Ok(report)
}

fn csv_row(k: u64, m: &MetricReport) -> String {
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
    let mut row = format!("{k},{},{}", m.accuracy, opt(m.log_bic_diff));
    for r in &m.rates {
        let c = r.counts;
        row.push_str(&format!(",{},{},{},{},{},{}", c.tp, c.fp, c.tn, c.fn_, opt(r.tpr), opt(r.fpr)));
    }
    row
}

fn csv_header() -> String {
    let mut h = String::from("rep,accuracy,log_bic_diff");
    for t in EdgeType::ALL {
        let name = format!("{t:?}").to_lowercase();
        for col in ["tp", "fp", "tn", "fn", "tpr", "fpr"] {
            h.push_str(&format!(",{name}_{col}"));
        }
    }
    h
}

/// Mean, standard deviation and count of each numeric column.
fn summarize(header: &str, rows: &[String]) -> String {
    let names: Vec<&str> = header.split(',').collect();
    let mut out = String::from("metric,mean,sd,count\n");
    for (c, name) in names.iter().enumerate().skip(1) {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.split(',').nth(c).and_then(|v| v.parse().ok())).collect();
        if vals.is_empty() {
            out.push_str(&format!("{name},,,0\n"));
            continue;
        }
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        let sd = if vals.len() > 1 { (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt() } else { 0.0 };
        out.push_str(&format!("{name},{mean},{sd},{}\n", vals.len()));
    }
    out
}

pub fn eval(a: EvalArgs) -> Result<()> {
    if let Some(dir) = &a.batch {
        let report = a.report.clone().unwrap_or_else(|| dir.join("metrics.csv"));
        let manifest_path = RunManifest::path_for(&report);
        let mut manifest = RunManifest::start("eval", json!({ "batch": dir, "dimension": format!("{:?}", gesmag_core::imset::DimensionKind::from(a.dimension)) }), None)?;
        let header = csv_header();
        let mut rows = Vec::new();
        for (k, est_path) in numbered(dir, "est_", ".graph")? {
            let truth_path = dir.join(format!("graph_{k}.graph"));
            let data_path = dir.join(format!("data_{k}.csv"));
            let data = if data_path.exists() { Some(read_data(&data_path)?) } else { None };
            let m = metrics(&read_graph(&est_path)?, &read_graph(&truth_path)?, data.as_ref(), &a)?;
            for p in [&est_path, &truth_path] {
                manifest.input(p)?;
            }
            rows.push(csv_row(k, &m));
        }
        if rows.is_empty() {
            bail!("no est_<k>.graph files in {}", dir.display());
        }
        let mut table = header.clone() + "\n";
        for r in &rows {
            table.push_str(r);
            table.push('\n');
        }
        fs::write(&report, table).with_context(|| format!("writing {}", report.display()))?;
        let summary = report.with_file_name(format!(
            "{}_summary.csv",
            report.file_stem().map_or_else(|| "metrics".into(), |s| s.to_string_lossy().into_owned())
        ));
        fs::write(&summary, summarize(&header, &rows))?;
        manifest.output(&report);
        manifest.output(&summary);
        return manifest.write(&manifest_path);
    }
    let (Some(est_path), Some(truth_path)) = (&a.est, &a.truth) else {
        bail!("--est and --truth are required without --batch");
    };
    let data = a.data.as_deref().map(read_data).transpose()?;
    let m = metrics(&read_graph(est_path)?, &read_graph(truth_path)?, data.as_ref(), &a)?;
    match &a.report {
        Some(path) => {
            let manifest_path = RunManifest::path_for(path);
            let mut manifest = RunManifest::start("eval", json!({ "est": est_path, "truth": truth_path, "data": a.data }), None)?;
            manifest.input(est_path)?;
            manifest.input(truth_path)?;
            if let Some(d) = &a.data {
                manifest.input(d)?;
            }
            write_json(path, &json!({ "manifest": relative_name(&manifest_path), "metrics": m }))?;
            manifest.output(path);
            manifest.write(&manifest_path)
        }
        None => {
            out!("{}", serde_json::to_string_pretty(&m)?);
            Ok(())
        }
    }
}

pub fn convert(a: ConvertArgs) -> Result<()> {
    let g = read_graph(&a.input)?;
    let out = match a.conversion() {
        Conversion::MagToPag => {
            if g.kind() != GraphKind::Mag {
                bail!("{} is not a MAG", a.input.display());
            }
            mag_to_pag(&g, !a.arrows_only)?.graph
        }
        Conversion::PagToMag => pag_to_mag(&g)?,
        Conversion::AdmgToMag => project_to_mag(&g)?,
    };
    match &a.out {
        Some(path) => {
            let manifest_path = RunManifest::path_for(path);
            let name = match a.conversion() {
                Conversion::MagToPag => "mag-to-pag",
                Conversion::PagToMag => "pag-to-mag",
                Conversion::AdmgToMag => "admg-to-mag",
            };
            let mut manifest = RunManifest::start("convert", json!({ "conversion": name, "arrows_only": a.arrows_only }), None)?;
            manifest.input(&a.input)?;
            write_graph_file(path, &out, &manifest_path)?;
            manifest.output(path);
            manifest.write(&manifest_path)
        }
        None => {
            write!(std::io::stdout().lock(), "{}", write_graph(&out))?;
            Ok(())
        }
    }
}

pub fn markov(a: MarkovArgs) -> Result<()> {
    let g = representative_mag(&read_graph(&a.graph)?)?;
    let list = ci_list(&g, a.order.as_deref(), a.property.into())?;
    for s in list {
        out!("{}", serde_json::to_string(&s)?);
    }
    Ok(())
}

pub fn heads(a: HeadsArgs) -> Result<()> {
    let g = representative_mag(&read_graph(&a.graph)?)?;
    let heads = enumerate_heads(&g, a.max_size)?;
    let body = json!({
        "max_head_size": max_head_size(&g)?,
        "heads": heads,
        "districts": g.districts()?.into_iter().collect::<Vec<VertexSet>>(),
    });
    out!("{}", serde_json::to_string_pretty(&body)?);
    Ok(())
}

pub fn probe(a: ProbeArgs) -> Result<()> {
    let cfg = ProbeConfig {
        sizes: a.sizes.clone(),
        reps: a.reps,
        sim: SimConfig { n: 0, avg_degree: a.avg_degree, p_directed: a.pd, n_samples: a.samples, seed: a.seed, ..SimConfig::default() },
        search: SearchConfig {
            max_head_size: Some(a.max_head_size),
            turn_budget: a.turn,
            max_degree: Some(a.max_degree),
            limits: MoveLimits { path_cap: a.path_cap, ..MoveLimits::default() },
            ..SearchConfig::default()
        },
    };
    let exec = Executor::new(a.jobs);
    let rows = complexity_probe(&cfg, &exec)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_moves)).collect();
    let slope = (pts.len() >= 2).then(|| log_log_slope(&pts));
    out!("{:>4} {:>12} {:>12} {:>10}", "n", "moves", "calls", "seconds");
    for r in &rows {
        out!("{:>4} {:>12.1} {:>12.1} {:>10.3}", r.n, r.mean_moves, r.mean_generator_calls, r.mean_seconds);
    }
    if let Some(s) = slope {
        out!("log-log slope of moves against n: {s:.3}");
    }
    if let Some(path) = &a.report {
        let manifest_path = RunManifest::path_for(path);
        let mut manifest = RunManifest::start("probe", &cfg, Some(a.seed))?;
        write_json(path, &json!({ "manifest": relative_name(&manifest_path), "rows": rows, "slope": slope }))?;
        manifest.output(path);
        manifest.write(&manifest_path)?;
    }
    Ok(())
}
