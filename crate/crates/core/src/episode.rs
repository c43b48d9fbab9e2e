//! Closed-loop episode runner tying the simulator, base agent and override
//! together.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::ReasoningBackend;
use crate::domain::Action;
use crate::metrics::{self, EpisodeResult, Penalties};
use crate::orchestrator::{engage, step, ActionSource, DecisionRecord, OrchestratorConfig, OverrideState, VehicleState};
use crate::simenv::{detect_infractions, observe, tick, BaseAgent, Scenario, ScenarioError, SimConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Base agent with the override engaged whenever a deficit is present.
    Rco,
    /// Base agent alone.
    Baseline,
    /// Holds the fail-safe stop every tick.
    AlwaysStop,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rco => "rco",
            Mode::Baseline => "baseline",
            Mode::AlwaysStop => "always-stop",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rco" => Ok(Mode::Rco),
            "baseline" => Ok(Mode::Baseline),
            "always-stop" | "always_stop" => Ok(Mode::AlwaysStop),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub mode: Mode,
    pub orchestrator: OrchestratorConfig,
    pub sim: SimConfig,
    pub penalties: Penalties,
    /// Replaces the scenario's own seed when set.
    pub seed: Option<u64>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            mode: Mode::Rco,
            orchestrator: OrchestratorConfig::default(),
            sim: SimConfig::default(),
            penalties: Penalties::default(),
            seed: None,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.orchestrator.validate()?;
        self.sim.validate()?;
        self.penalties.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    pub result: EpisodeResult,
    pub log: Vec<DecisionRecord>,
    /// Ego position at every tick, starting with the initial pose.
    pub trajectory: Vec<[f64; 2]>,
}

impl EpisodeOutput {
    /// Decision log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

pub fn run_episode(
    scenario: &Scenario,
    backend: &dyn ReasoningBackend,
    cfg: &EpisodeConfig,
) -> Result<EpisodeOutput, ScenarioError> {
    let seed = cfg.seed.unwrap_or(scenario.seed);
    let mut w = WorldState::from_scenario(scenario, seed, cfg.sim)?;
    let mut orch = cfg.orchestrator.clone();
    orch.key = Some(w.spec.key.clone());
    orch.dt = cfg.sim.dt;
    let keep = orch.planner.history_len.max(orch.verifier.history_len);

    let mut history: VecDeque<_> = VecDeque::with_capacity(keep + 1);
    let mut state = OverrideState::new(orch.planner.max_steps);
    let mut agent = BaseAgent::new();
    let mut events = Vec::new();
    let mut log = Vec::new();
    let mut trajectory = vec![[w.ego.pose.x, w.ego.pose.y]];

    while !w.done() {
        let obs = observe(&w);
        let deficit = obs.snapshot.has_deficit();
        history.push_back(obs.snapshot);
        while history.len() > keep {
            history.pop_front();
        }

        let (action, record) = match cfg.mode {
            Mode::AlwaysStop => {
                let a = Action::FAIL_SAFE_STOP;
                (a, DecisionRecord::new(w.tick, false, a, ActionSource::FailSafe))
            }
            Mode::Baseline => {
                let a = agent.act(&w, &obs.visible_ids);
                (a, DecisionRecord::new(w.tick, false, a, ActionSource::Base))
            }
            Mode::Rco => {
                state = engage(deficit, &state);
                if state.active {
                    let vehicle = VehicleState {
                        pose: w.ego.pose,
                        measurements: w.measurements(),
                    };
                    let (a, next, rec) = step(&state, history.make_contiguous(), &vehicle, backend, &orch);
                    state = next;
                    // keep the base agent's steering memory in step with the road
                    agent.ctrl = state.ctrl;
                    (a, rec)
                } else {
                    let a = agent.act(&w, &obs.visible_ids);
                    state.observe_base(a);
                    state.ctrl = agent.ctrl;
                    (a, DecisionRecord::new(w.tick, false, a, ActionSource::Base))
                }
            }
        };

        let next = tick(&w, action);
        events.extend(detect_infractions(&w, &next));
        trajectory.push([next.ego.pose.x, next.ego.pose.y]);
        log.push(record);
        w = next;
    }

    let route_length = w.spec.route.length();
    let progress = w.progress.max_s;
    let rc = metrics::completion_percent(progress, route_length);
    let is_score = metrics::infraction_score(&events, &w.spec.policy, &cfg.penalties);
    let game_time_s = w.time_s();
    let result = EpisodeResult {
        scenario: scenario.name.clone(),
        mode: cfg.mode.to_string(),
        rc,
        is_score,
        ds: metrics::driving_score(rc, is_score),
        as_speed: metrics::average_speed(progress, game_time_s).unwrap_or(0.0),
        infractions: events,
        game_time_s,
        route_length_m: route_length,
        progress_m: progress,
        ticks: w.tick,
        planning_events: state.planning_events,
        planning_calls: state.planning_calls,
        constraint_calls: state.constraint_calls,
        override_ticks: log.iter().filter(|r| r.active).count() as u64,
        fail_safe_ticks: log
            .iter()
            .filter(|r| r.active && r.source == ActionSource::FailSafe)
            .count() as u64,
    };
    Ok(EpisodeOutput {
        result,
        log,
        trajectory,
    })
}

/// Every scenario under every mode, scenario-major, with `base` supplying
/// everything but the mode.
pub fn run_suite(
    scenarios: &[Scenario],
    backend: &dyn ReasoningBackend,
    base: &EpisodeConfig,
    modes: &[Mode],
) -> Result<Vec<EpisodeResult>, ScenarioError> {
    let mut out = Vec::with_capacity(scenarios.len() * modes.len());
    for sc in scenarios {
        for &mode in modes {
            let cfg = EpisodeConfig {
                mode,
                ..base.clone()
            };
            out.push(run_episode(sc, backend, &cfg)?.result);
        }
    }
    Ok(out)
}

pub const ALL_MODES: [Mode; 3] = [Mode::Rco, Mode::Baseline, Mode::AlwaysStop];
