//! Command implementations behind the `rco` binary.

pub mod config;
pub mod replay;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use rco_core::episode::{run_episode, EpisodeConfig, EpisodeOutput, Mode};
use rco_core::metrics::{aggregate, summary_csv, Aggregate};
use serde::Serialize;
use thiserror::Error;

pub use config::{ConfigFile, Overrides, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Runs `jobs` episodes at a time. Results come back in input order.
fn run_many(settings: &Settings, configs: &[(usize, EpisodeConfig)]) -> Result<Vec<EpisodeOutput>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|(i, cfg)| {
                let sc = &settings.scenarios[*i];
                log::info!("{} {}", sc.name, cfg.mode);
                run_episode(sc, settings.backend.as_ref(), cfg).map_err(|e| CliError::Runtime(e.to_string()))
            })
            .collect()
    })
}

fn episode_stem(scenario: &str, mode: Mode) -> String {
    format!("{scenario}.{mode}")
}

/// Every scenario under every mode. Writes `summary.csv`, one result JSON
/// per episode under `episodes/` and one decision log per episode under
/// `logs/`.
pub fn run(settings: &Settings) -> Result<Vec<EpisodeOutput>, CliError> {
    let mut configs = Vec::new();
    for i in 0..settings.scenarios.len() {
        for &mode in &settings.modes {
            configs.push((
                i,
                EpisodeConfig {
                    mode,
                    ..settings.episode.clone()
                },
            ));
        }
    }
    let outputs = run_many(settings, &configs)?;

    let out = &settings.out;
    for o in &outputs {
        let mode: Mode = o.result.mode.parse().map_err(CliError::Runtime)?;
        let stem = episode_stem(&o.result.scenario, mode);
        let json = serde_json::to_string_pretty(&o.result).map_err(|e| CliError::Runtime(e.to_string()))?;
        write(&out.join("episodes").join(format!("{stem}.json")), json.as_bytes())?;
        write(&out.join("logs").join(format!("{stem}.jsonl")), o.log_jsonl().as_bytes())?;
    }
    let results: Vec<_> = outputs.iter().map(|o| o.result.clone()).collect();
    let csv = summary_csv(&results).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&out.join("summary.csv"), csv.as_bytes())?;
    Ok(outputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_max: usize,
    pub rc: f64,
    pub is_score: f64,
    pub ds: f64,
    pub as_speed: f64,
    pub delta_rc: f64,
    pub delta_is: f64,
    pub delta_ds: f64,
}

/// Mean RCO metrics per step limit, with differences from the baseline
/// mean over the same scenarios.
pub fn sweep(settings: &Settings, limits: &[usize]) -> Result<(Aggregate, Vec<SweepRow>), CliError> {
    if limits.is_empty() {
        return Err(CliError::Config("no step limits given".into()));
    }
    if limits.contains(&0) {
        return Err(CliError::Config("step limits must be at least 1".into()));
    }
    let n = settings.scenarios.len();
    let mut configs: Vec<(usize, EpisodeConfig)> = (0..n)
        .map(|i| {
            (
                i,
                EpisodeConfig {
                    mode: Mode::Baseline,
                    ..settings.episode.clone()
                },
            )
        })
        .collect();
    for &limit in limits {
        let mut cfg = EpisodeConfig {
            mode: Mode::Rco,
            ..settings.episode.clone()
        };
        cfg.orchestrator.planner.max_steps = limit;
        configs.extend((0..n).map(|i| (i, cfg.clone())));
    }
    let outputs = run_many(settings, &configs)?;
    let results: Vec<_> = outputs.into_iter().map(|o| o.result).collect();

    let base = aggregate(&results[..n]);
    let rows = limits
        .iter()
        .zip(results[n..].chunks(n))
        .map(|(&n_max, chunk)| {
            let a = aggregate(chunk);
            SweepRow {
                n_max,
                rc: a.rc,
                is_score: a.is_score,
                ds: a.ds,
                as_speed: a.as_speed,
                delta_rc: a.rc - base.rc,
                delta_is: a.is_score - base.is_score,
                delta_ds: a.ds - base.ds,
            }
        })
        .collect();
    Ok((base, rows))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(["n_max", "rc", "is", "ds", "as", "delta_rc", "delta_is", "delta_ds"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.n_max.to_string(),
            format!("{:.4}", r.rc),
            format!("{:.4}", r.is_score),
            format!("{:.4}", r.ds),
            format!("{:.4}", r.as_speed),
            format!("{:.4}", r.delta_rc),
            format!("{:.4}", r.delta_is),
            format!("{:.4}", r.delta_ds),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_sweep(settings: &Settings, rows: &[SweepRow]) -> Result<String, CliError> {
    let csv = sweep_csv(rows)?;
    write(&settings.out.join("sweep.csv"), csv.as_bytes())?;
    Ok(csv)
}
