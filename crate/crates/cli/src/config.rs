//! Run configuration: JSON file, command-line overrides, defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use rco_core::backend::{HttpBackend, HttpConfig, ReasoningBackend, ScriptedBackend, ScriptedTable};
use rco_core::bundle::{bundled_scenario, bundled_scenarios, bundled_table};
use rco_core::episode::{EpisodeConfig, Mode};
use rco_core::metrics::Penalties;
use rco_core::safety::SafetyGains;
use rco_core::simenv::{load_scenarios, Scenario};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Scripted,
    Http,
}

/// Keys accepted in a `--config` file. Every key has a flag of the same
/// name, with `-` in place of `_`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenarios: Vec<PathBuf>,
    pub mode: Vec<Mode>,
    pub backend: Option<BackendKind>,
    pub table: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_max: Option<usize>,
    pub k: Option<usize>,
    pub wait_cap: Option<u64>,
    pub replan_budget: Option<u32>,
    pub hazard_threshold: Option<f64>,
    pub shift_threshold: Option<f64>,
    pub delta_throttle: Option<f64>,
    pub delta_brake: Option<f64>,
    pub penalties: Option<Penalties>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let mut file: ConfigFile = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() && base.join(&*p).exists() {
                *p = base.join(&*p);
            }
        };
        file.scenarios.iter_mut().for_each(rebase);
        file.table.iter_mut().for_each(rebase);
        Ok(file)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags given on the command line win over its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenario files, directories, bundled scenario names, or `bundled`.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub scenarios: Vec<PathBuf>,
    /// Modes to run (rco, baseline, always-stop).
    #[arg(long, value_delimiter = ',')]
    pub mode: Vec<Mode>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Extra scripted response table merged over the bundled one.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Action step limit.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// History window, in frames.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub wait_cap: Option<u64>,
    #[arg(long)]
    pub replan_budget: Option<u32>,
    #[arg(long)]
    pub hazard_threshold: Option<f64>,
    #[arg(long)]
    pub shift_threshold: Option<f64>,
    #[arg(long)]
    pub delta_throttle: Option<f64>,
    #[arg(long)]
    pub delta_brake: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Episodes run in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Everything a run needs, validated.
pub struct Settings {
    pub scenarios: Vec<Scenario>,
    pub modes: Vec<Mode>,
    pub backend: Arc<dyn ReasoningBackend>,
    pub episode: EpisodeConfig,
    pub out: PathBuf,
    pub jobs: usize,
}

impl std::fmt::Debug for Settings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Settings")
            .field("scenarios", &self.scenarios.iter().map(|s| &s.name).collect::<Vec<_>>())
            .field("modes", &self.modes)
            .field("episode", &self.episode)
            .field("out", &self.out)
            .field("jobs", &self.jobs)
            .finish()
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn pick_list<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

fn resolve_scenarios(paths: &[PathBuf]) -> Result<Vec<Scenario>, CliError> {
    if paths.is_empty() {
        return Ok(bundled_scenarios());
    }
    let mut out = Vec::new();
    for p in paths {
        if p.exists() {
            out.extend(load_scenarios(p).map_err(|e| CliError::Config(e.to_string()))?);
        } else if p.as_os_str() == "bundled" {
            out.extend(bundled_scenarios());
        } else if let Some(sc) = p.to_str().and_then(bundled_scenario) {
            out.push(sc);
        } else {
            return Err(CliError::Config(format!("{}: no such file or bundled scenario", p.display())));
        }
    }
    let mut names: Vec<&str> = out.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Config(format!("scenario `{}` given twice", w[0])));
    }
    if out.is_empty() {
        return Err(CliError::Config("no scenarios found".into()));
    }
    Ok(out)
}

fn resolve_backend(kind: BackendKind, table: Option<&Path>) -> Result<Arc<dyn ReasoningBackend>, CliError> {
    match kind {
        BackendKind::Scripted => {
            let mut t = bundled_table();
            if let Some(path) = table {
                let extra = ScriptedTable::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                t.merge(extra);
            }
            Ok(Arc::new(ScriptedBackend::new(t)))
        }
        BackendKind::Http => {
            let cfg = HttpConfig::from_env().ok_or_else(|| {
                CliError::Config(format!("the http backend needs {}", rco_core::backend::ENV_URL))
            })?;
            Ok(Arc::new(HttpBackend::new(cfg)))
        }
    }
}

impl Overrides {
    /// Applies flags over the config file over defaults.
    pub fn resolve(self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };

        let mut episode = EpisodeConfig {
            seed: pick(self.seed, file.seed),
            ..Default::default()
        };
        let planner = &mut episode.orchestrator.planner;
        if let Some(n) = pick(self.n_max, file.n_max) {
            planner.max_steps = n;
        }
        if let Some(k) = pick(self.k, file.k) {
            planner.history_len = k;
            episode.orchestrator.verifier.history_len = k;
        }
        if let Some(w) = pick(self.wait_cap, file.wait_cap) {
            planner.wait_cap = w;
        }
        if let Some(b) = pick(self.replan_budget, file.replan_budget) {
            planner.replan_budget = b;
        }
        let verifier = &mut episode.orchestrator.verifier;
        if let Some(t) = pick(self.hazard_threshold, file.hazard_threshold) {
            verifier.hazard_ratio_threshold = t;
        }
        if let Some(t) = pick(self.shift_threshold, file.shift_threshold) {
            verifier.shift_threshold = t;
        }
        let gains = episode.orchestrator.gains;
        let dt = pick(self.delta_throttle, file.delta_throttle).unwrap_or(gains.delta_throttle());
        let db = pick(self.delta_brake, file.delta_brake).unwrap_or(gains.delta_brake());
        episode.orchestrator.gains = SafetyGains::new(dt, db).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = file.penalties {
            episode.penalties = p;
        }
        episode.validate().map_err(CliError::Config)?;

        let jobs = pick(self.jobs, file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let mut modes = pick_list(self.mode, file.mode);
        if modes.is_empty() {
            modes.push(Mode::Rco);
        }
        let backend_kind = pick(self.backend, file.backend).unwrap_or(BackendKind::Scripted);
        let table = pick(self.table, file.table);

        Ok(Settings {
            scenarios: resolve_scenarios(&pick_list(self.scenarios, file.scenarios))?,
            modes,
            backend: resolve_backend(backend_kind, table.as_deref())?,
            episode,
            out: pick(self.out, file.out).unwrap_or_else(|| PathBuf::from("results")),
            jobs,
        })
    }
}
