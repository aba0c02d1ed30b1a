//! Scenario presets and the experiment loop.
//!
//! Each preset runs a cross product of parameters over independent seeded
//! replicas and emits one CSV data series (plus a JSON metadata file). The
//! full configuration is echoed as a `# config:` comment line at the top of
//! the CSV, so every output is reproducible from the file alone. Replicas
//! run in parallel; rows are emitted in deterministic job order.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use obst_core::metrics;
use obst_core::overlay::{CostLedger, Overlay};
use obst_core::seeding::derive_seed;
use obst_core::static_opt::{self, BoundReport};
use obst_core::workload::{self, GuestGraph, RequestSequence};

use crate::config::{CliError, ExperimentConfig};

/// Seed substreams used by the runner; trees and churn use streams `0..=k`
/// inside the overlay itself.
const GUEST_STREAM: u64 = 101;
const SIGMA_STREAM: u64 = 102;
const OVERLAY_STREAM: u64 = 103;
const SWEEP_STREAM: u64 = 104;

pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub rows: usize,
}

/// Builds the guest graph of one replica, together with the edge multiset
/// that uniform-edge demand samples from.
pub fn make_guest(
    cfg: &ExperimentConfig,
    guest: &str,
    n: usize,
    seed: u64,
) -> Result<(GuestGraph, Vec<(u32, u32)>), CliError> {
    let fail = |e: workload::WorkloadError| CliError::Run(format!("guest {guest}: {e}"));
    match guest {
        "bt" => {
            let g = workload::gen_bt(n, cfg.bt_swarm_size, cfg.bt_swarms_per_peer, seed)
                .map_err(fail)?;
            let edges = g.edges();
            Ok((g, edges))
        }
        "rnd" => {
            let g = workload::gen_rnd_obst(n, cfg.rnd_k, seed).map_err(fail)?;
            let edges = g.edges();
            Ok((g, edges))
        }
        "bad2" => {
            let b = workload::gen_bad2(n).map_err(fail)?;
            let mut multiset = b.e1.clone();
            multiset.extend_from_slice(&b.e2);
            Ok((b.guest, multiset))
        }
        "edge-list" => {
            let path = cfg
                .edge_list_path
                .as_ref()
                .ok_or_else(|| CliError::config("edge_list_path", "missing"))?;
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let (g, warnings) = workload::load_edge_list(&text).map_err(fail)?;
            let (g, more) = workload::relabel_bfs(&g, seed);
            for w in warnings.iter().chain(&more) {
                eprintln!("warning: {path}: {w}");
            }
            if g.n() < n {
                return Err(CliError::config(
                    "n_values",
                    format!("edge list provides {} peers, run needs {n}", g.n()),
                ));
            }
            let g = if g.n() > n {
                workload::induced_prefix(&g, n).map_err(fail)?
            } else {
                g
            };
            let edges = g.edges();
            Ok((g, edges))
        }
        other => Err(CliError::config("guest", format!("unknown guest {other:?}"))),
    }
}

pub fn make_sigma(
    seq: &str,
    p_repeat: f64,
    guest: &GuestGraph,
    multiset: &[(u32, u32)],
    m: usize,
    seed: u64,
) -> Result<RequestSequence, CliError> {
    let fail = |e: workload::WorkloadError| CliError::Run(format!("sequence {seq}: {e}"));
    match seq {
        "match" => workload::seq_match(guest, m, seed).map_err(fail),
        "rw" => workload::seq_rw(guest, m, p_repeat, seed).map_err(fail),
        "uniform-edges" => workload::seq_uniform_edges(multiset, m, seed).map_err(fail),
        other => Err(CliError::config("seq", format!("unknown generator {other:?}"))),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum SampleKind {
    None,
    /// Diameter and min cut of the union graph at every sample point.
    Topology,
    /// Windowed distance/cost averages at every sample point.
    Window,
}

struct Sample {
    t: usize,
    window_avg_distance: f64,
    window_avg_cost: f64,
    diameter: usize,
    min_cut: usize,
}

struct RunOutput {
    ledger: CostLedger,
    overlay: Overlay,
    samples: Vec<Sample>,
}

/// One replica: builds guest, sequence and overlay from the replica seed's
/// substreams, then serves the whole sequence with optional churn and
/// periodic sampling.
#[allow(clippy::too_many_arguments)]
fn run_one(
    cfg: &ExperimentConfig,
    guest_kind: &str,
    seq_kind: &str,
    p_repeat: f64,
    n: usize,
    k: usize,
    lambda: usize,
    seed: u64,
    sample: SampleKind,
) -> Result<RunOutput, CliError> {
    let m = cfg.effective_m(n);
    let (guest, multiset) = make_guest(cfg, guest_kind, n, derive_seed(seed, GUEST_STREAM))?;
    let sigma = make_sigma(
        seq_kind,
        p_repeat,
        &guest,
        &multiset,
        m,
        derive_seed(seed, SIGMA_STREAM),
    )?;
    let mut overlay = Overlay::new_random(n, k, derive_seed(seed, OVERLAY_STREAM))
        .map_err(|e| CliError::Run(e.to_string()))?;

    let every = cfg.adjust_every.max(1);
    let sample_every = cfg.effective_sample_every(n);
    let mut ledger = CostLedger::new(if cfg.adjust {
        obst_core::overlay::ServeMode::Adjusting
    } else {
        obst_core::overlay::ServeMode::Static
    });
    ledger.records.reserve(sigma.len());
    let mut samples = Vec::new();
    let mut win_dist = 0.0;
    let mut win_cost = 0.0;
    let mut win_len = 0usize;

    for (i, &(u, v)) in sigma.requests.iter().enumerate() {
        let adjust_now = cfg.adjust && (i + 1) % every == 0;
        let rec = overlay
            .serve_request(u, v, adjust_now)
            .map_err(|e| CliError::Run(format!("request {i}: {e}")))?;
        win_dist += rec.distance as f64;
        win_cost += rec.distance as f64 + 1.0 + rec.rotations as f64;
        win_len += 1;
        ledger.records.push(rec);
        if lambda > 0 {
            overlay
                .churn_step(lambda)
                .map_err(|e| CliError::Run(format!("churn after request {i}: {e}")))?;
        }
        if sample != SampleKind::None && (i + 1) % sample_every == 0 {
            let (diam, cut) = if sample == SampleKind::Topology {
                let g = overlay.union_graph();
                (
                    metrics::diameter(&g).unwrap_or(0),
                    metrics::min_edge_cut(&g),
                )
            } else {
                (0, 0)
            };
            samples.push(Sample {
                t: i + 1,
                window_avg_distance: win_dist / win_len as f64,
                window_avg_cost: win_cost / win_len as f64,
                diameter: diam,
                min_cut: cut,
            });
            win_dist = 0.0;
            win_cost = 0.0;
            win_len = 0;
        }
    }
    Ok(RunOutput {
        ledger,
        overlay,
        samples,
    })
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Runs jobs in parallel and returns their row blocks in job order.
fn par_rows<J, F>(jobs: Vec<J>, f: F) -> Result<Vec<String>, CliError>
where
    J: Send + Sync,
    F: Fn(&J) -> Result<Vec<String>, CliError> + Sync,
{
    let blocks: Result<Vec<Vec<String>>, CliError> = jobs.par_iter().map(&f).collect();
    Ok(blocks?.into_iter().flatten().collect())
}

fn fig3(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let mut guests = vec!["bt".to_string(), "rnd".to_string()];
    if cfg.edge_list_path.is_some() {
        guests.push("edge-list".into());
    }
    let mut jobs = Vec::new();
    for g in &guests {
        for &n in &cfg.n_values {
            for &k in &cfg.k_values {
                for &seed in &cfg.seeds {
                    jobs.push((g.clone(), n, k, seed));
                }
            }
        }
    }
    let rows = par_rows(jobs, |(g, n, k, seed)| {
        let out = run_one(cfg, g, &cfg.seq, cfg.p_repeat, *n, *k, 0, *seed, SampleKind::None)?;
        Ok(vec![format!(
            "{g},{n},{k},{seed},{},{},{},{}",
            out.ledger.len(),
            f6(out.ledger.average_distance()),
            f6(out.ledger.average_cost()),
            f6(out.ledger.tail_average_distance(0.25)),
        )])
    })?;
    Ok((
        "guest,n,k,seed,m,avg_distance,avg_cost,converged_distance".into(),
        rows,
    ))
}

fn fig4(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let mut jobs = Vec::new();
    for &n in &cfg.n_values {
        for &k in &cfg.k_values {
            for &seed in &cfg.seeds {
                jobs.push((n, k, seed));
            }
        }
    }
    let rows = par_rows(jobs, |(n, k, seed)| {
        let out = run_one(
            cfg,
            "bad2",
            "uniform-edges",
            cfg.p_repeat,
            *n,
            *k,
            0,
            *seed,
            SampleKind::None,
        )?;
        Ok(vec![format!(
            "{n},{k},{seed},{},{},{}",
            out.ledger.len(),
            f6(out.ledger.average_distance()),
            f6(out.ledger.average_cost()),
        )])
    })?;
    Ok(("n,k,seed,m,avg_distance,avg_cost".into(), rows))
}

fn fig5(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let n = cfg.n_values[0];
    let patterns: &[(&str, &str, f64)] = &[
        ("match", "match", 0.0),
        ("rw-0.5", "rw", 0.5),
        ("rw-1.0", "rw", 0.0),
    ];
    let mut jobs = Vec::new();
    for &(label, kind, p) in patterns {
        for &k in &cfg.k_values {
            for &seed in &cfg.seeds {
                jobs.push((label, kind, p, k, seed));
            }
        }
    }
    let rows = par_rows(jobs, |(label, kind, p, k, seed)| {
        let out = run_one(cfg, &cfg.guest, kind, *p, n, *k, 0, *seed, SampleKind::None)?;
        Ok(vec![format!(
            "{label},{k},{seed},{},{},{}",
            out.ledger.len(),
            f6(out.ledger.average_distance()),
            f6(out.ledger.average_cost()),
        )])
    })?;
    Ok(("pattern,k,seed,m,avg_distance,avg_cost".into(), rows))
}

fn fig6(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let n = cfg.n_values[0];
    let k = cfg.k_values[0];
    let rows = par_rows(cfg.seeds.clone(), |&seed| {
        let out = run_one(
            cfg,
            &cfg.guest,
            &cfg.seq,
            cfg.p_repeat,
            n,
            k,
            0,
            seed,
            SampleKind::Topology,
        )?;
        Ok(out
            .samples
            .iter()
            .map(|s| format!("{n},{k},{seed},{},{},{}", s.t, s.diameter, s.min_cut))
            .collect())
    })?;
    Ok(("n,k,seed,t,diameter,min_cut".into(), rows))
}

fn fig7(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let k = cfg.k_values[0];
    let patterns: &[(&str, &str, f64)] = &[("match", "match", 0.0), ("rw-0.5", "rw", 0.5)];
    let mut jobs = Vec::new();
    for &n in &cfg.n_values {
        for &(label, kind, p) in patterns {
            for &seed in &cfg.seeds {
                jobs.push((n, label, kind, p, seed));
            }
        }
    }
    let rows = par_rows(jobs, |(n, label, kind, p, seed)| {
        let out = run_one(cfg, &cfg.guest, kind, *p, *n, k, 0, *seed, SampleKind::None)?;
        let diam = metrics::diameter(&out.overlay.union_graph())
            .map_err(|e| CliError::Run(e.to_string()))?;
        Ok(vec![format!("{n},{label},{seed},{k},{diam}")])
    })?;
    Ok(("n,pattern,seed,k,diameter".into(), rows))
}

fn fig8(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let n = cfg.n_values[0];
    let k = cfg.k_values[0];
    let rows = par_rows(cfg.seeds.clone(), |&seed| {
        let out = run_one(
            cfg,
            &cfg.guest,
            &cfg.seq,
            cfg.p_repeat,
            n,
            k,
            0,
            seed,
            SampleKind::Window,
        )?;
        Ok(out
            .samples
            .iter()
            .map(|s| {
                format!(
                    "{seed},{},{},{}",
                    s.t,
                    f6(s.window_avg_distance),
                    f6(s.window_avg_cost)
                )
            })
            .collect())
    })?;
    Ok(("run,t,window_avg_distance,window_avg_cost".into(), rows))
}

fn fig9(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let n = cfg.n_values[0];
    let k = cfg.k_values[0];
    let rows = par_rows(cfg.seeds.clone(), |&seed| {
        let out = run_one(
            cfg,
            &cfg.guest,
            &cfg.seq,
            cfg.p_repeat,
            n,
            k,
            0,
            seed,
            SampleKind::None,
        )?;
        let series = metrics::robustness_sweep(
            &out.overlay,
            &cfg.removal_fractions,
            derive_seed(seed, SWEEP_STREAM),
        )
        .map_err(|e| CliError::Run(e.to_string()))?;
        Ok(series
            .iter()
            .map(|s| {
                format!(
                    "{n},{k},{seed},{},{},{},{},{},{},{}",
                    s.removed,
                    s.n_alive,
                    f6(s.largest_cc_fraction),
                    f6(s.pair_connectivity_tree),
                    f6(s.pair_connectivity_graph),
                    s.diameter,
                    s.min_cut
                )
            })
            .collect())
    })?;
    Ok((
        "n,k,seed,removed,n_alive,largest_cc_fraction,pair_connectivity_tree,pair_connectivity_graph,diameter,min_cut"
            .into(),
        rows,
    ))
}

fn fig10(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let n = cfg.n_values[0];
    let k = cfg.k_values[0];
    let mut jobs = Vec::new();
    for &lambda in &cfg.lambda_values {
        for &seed in &cfg.seeds {
            jobs.push((lambda, seed));
        }
    }
    let rows = par_rows(jobs, |(lambda, seed)| {
        let out = run_one(
            cfg,
            &cfg.guest,
            &cfg.seq,
            cfg.p_repeat,
            n,
            k,
            *lambda,
            *seed,
            SampleKind::None,
        )?;
        Ok(vec![format!(
            "{n},{k},{lambda},{seed},{},{},{}",
            out.ledger.len(),
            f6(out.ledger.average_distance()),
            f6(out.ledger.average_cost()),
        )])
    })?;
    Ok(("n,k,lambda,seed,m,avg_distance,avg_cost".into(), rows))
}

fn custom(cfg: &ExperimentConfig) -> Result<(String, Vec<String>), CliError> {
    let lambda = cfg.lambda_values[0];
    let mut jobs = Vec::new();
    for &n in &cfg.n_values {
        for &k in &cfg.k_values {
            for &seed in &cfg.seeds {
                jobs.push((n, k, seed));
            }
        }
    }
    let rows = par_rows(jobs, |(n, k, seed)| {
        let out = run_one(
            cfg,
            &cfg.guest,
            &cfg.seq,
            cfg.p_repeat,
            *n,
            *k,
            lambda,
            *seed,
            SampleKind::None,
        )?;
        Ok(vec![format!(
            "{},{n},{k},{lambda},{seed},{},{},{},{}",
            cfg.guest,
            out.ledger.len(),
            f6(out.ledger.average_distance()),
            f6(out.ledger.average_cost()),
            f6(out.ledger.tail_average_distance(0.25)),
        )])
    })?;
    Ok((
        "guest,n,k,lambda,seed,m,avg_distance,avg_cost,converged_distance".into(),
        rows,
    ))
}

/// Executes the configured scenario: writes `<scenario>.csv` (config echo in
/// a leading `#` comment, then header and data rows) and
/// `<scenario>.meta.json` (config echo plus wall time) into `out_dir`.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let (header, rows) = match cfg.scenario.as_str() {
        "fig3" => fig3(cfg)?,
        "fig4" => fig4(cfg)?,
        "fig5" => fig5(cfg)?,
        "fig6" => fig6(cfg)?,
        "fig7" => fig7(cfg)?,
        "fig8" => fig8(cfg)?,
        "fig9" => fig9(cfg)?,
        "fig10" => fig10(cfg)?,
        "custom" => custom(cfg)?,
        other => return Err(CliError::config("scenario", format!("unknown {other:?}"))),
    };
    let dir = Path::new(&cfg.out_dir);
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let csv_path = dir.join(format!("{}.csv", cfg.scenario));
    let mut csv = format!("# config: {}\n{header}\n", cfg.to_json());
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    fs::write(&csv_path, csv).map_err(|source| CliError::Io {
        path: csv_path.display().to_string(),
        source,
    })?;

    let meta_path = dir.join(format!("{}.meta.json", cfg.scenario));
    let meta = serde_json::json!({
        "config": cfg,
        "rows": rows.len(),
        "csv": csv_path.display().to_string(),
        "wall_time_ms": started.elapsed().as_millis() as u64,
    });
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap()).map_err(|source| {
        CliError::Io {
            path: meta_path.display().to_string(),
            source,
        }
    })?;
    Ok(RunArtifacts {
        csv_path,
        meta_path,
        rows: rows.len(),
    })
}

/// The `bounds` output for one instance: the entropy bounds next to the
/// measured static cost of the constructed overlay.
#[derive(serde::Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    #[serde(flatten)]
    pub report: BoundReport,
    /// Average static request cost of the built k-tree overlay on sigma.
    pub measured_static_cost: f64,
}

pub fn compute_bounds(
    sigma: &RequestSequence,
    n: usize,
    k: usize,
) -> Result<BoundsRow, CliError> {
    let fail = |e: static_opt::StaticOptError| CliError::Run(e.to_string());
    let partition = static_opt::partition_requests(sigma, k).map_err(fail)?;
    let report = static_opt::bound_report(sigma, n, k, Some(&partition)).map_err(fail)?;
    let mut overlay = static_opt::build_static_obst_with(sigma, n, &partition).map_err(fail)?;
    let ledger = overlay
        .run_sequence(
            sigma,
            obst_core::overlay::RunOptions {
                adjust: false,
                adjust_every: 1,
            },
        )
        .map_err(|e| CliError::Run(e.to_string()))?;
    Ok(BoundsRow {
        n,
        k,
        m: sigma.len(),
        report,
        measured_static_cost: ledger.average_cost(),
    })
}
