//! Hazard inference and short-term motion planning through the reasoning
//! backend, with risk-averse fallbacks for every failure.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendRequest, Parsed, PlanSkeleton, Purpose, ReasoningBackend};
use crate::domain::{
    ActionSequence, ConditionActionPair, EnvironmentSnapshot, ExecutionCondition, HazardSet, HighLevelAction,
    MotionPlan, Navi, Strategy,
};
use crate::prompt;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("expected a stop-observe-move plan")]
    WrongStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub history_len: usize,
    pub max_steps: usize,
    /// Upper bound on a single wait, in ticks.
    pub wait_cap: u64,
    pub replan_budget: u32,
    pub timeout_ms: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            history_len: 5,
            max_steps: 5,
            wait_cap: 50,
            replan_budget: 3,
            timeout_ms: 2000,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.history_len < 2 {
            return Err(format!("history_len {} < 2", self.history_len));
        }
        if self.max_steps == 0 || self.wait_cap == 0 || self.replan_budget == 0 || self.timeout_ms == 0 {
            return Err("max_steps, wait_cap, replan_budget and timeout_ms must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardInference {
    pub hazards: HazardSet,
    pub strategy: Strategy,
    /// Why the fallback was taken, if it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanOutcome {
    pub plan: MotionPlan,
    /// Backend output was cut to `max_steps` pairs or `wait_cap` ticks.
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Serialize)]
struct HazardPayload<'a> {
    purpose: Purpose,
    key: Option<&'a str>,
    history: Vec<EnvironmentSnapshot>,
    navi: &'a Navi,
}

#[derive(Serialize)]
struct MotionPayload<'a> {
    purpose: Purpose,
    key: Option<&'a str>,
    hazards: &'a HazardSet,
    strategy: Strategy,
    navi: &'a Navi,
    history: [EnvironmentSnapshot; 1],
}

fn last_k(history: &[EnvironmentSnapshot], k: usize) -> &[EnvironmentSnapshot] {
    &history[history.len().saturating_sub(k)..]
}

/// Queries the backend with the last `history_len` frames. Any failure gives
/// an empty hazard set and stop-observe-move.
pub fn infer_hazards(
    history: &[EnvironmentSnapshot],
    backend: &dyn ReasoningBackend,
    key: Option<&str>,
    cfg: &PlannerConfig,
) -> HazardInference {
    let window = last_k(history, cfg.history_len);
    let fallback = |why: String| {
        warn!("hazard inference fallback: {why}");
        HazardInference {
            hazards: Vec::new(),
            strategy: Strategy::StopObserveMove,
            fallback: Some(why),
        }
    };
    let Some(latest) = window.last() else {
        return fallback("empty history".into());
    };
    let payload = HazardPayload {
        purpose: Purpose::HazardAndPlan,
        key,
        history: window.iter().map(EnvironmentSnapshot::redacted).collect(),
        navi: &latest.navi,
    };
    let req = BackendRequest {
        purpose: Purpose::HazardAndPlan,
        prompt: prompt::render(
            prompt::HAZARD_AND_PLAN,
            &[
                ("frames", window.len().to_string()),
                ("history", prompt::describe_history(&payload.history)),
                ("navi", prompt::describe_navi(&latest.navi)),
            ],
        ),
        payload: serde_json::to_string(&payload).unwrap_or_default(),
        timeout_ms: cfg.timeout_ms.max(1),
    };
    match backend.call(&req) {
        Ok(resp) => match resp.parsed {
            Parsed::Hazards { hazards, strategy } => HazardInference {
                hazards,
                strategy,
                fallback: None,
            },
            other => fallback(format!("unexpected answer {other:?}")),
        },
        Err(e) => fallback(e.to_string()),
    }
}

fn som_fallback(cfg: &PlannerConfig, why: String) -> PlanOutcome {
    warn!("motion planning fallback: {why}");
    PlanOutcome {
        plan: MotionPlan::StopObserveMove {
            wait_ticks: cfg.wait_cap,
            move_trigger: ExecutionCondition::ConsistentNoImmediateHazard,
        },
        truncated: false,
        fallback: Some(why),
    }
}

/// Asks for concrete steps under the chosen strategy.
///
/// A stop-observe-move answer is accepted under either strategy since it is
/// never less cautious than moving. A move answer under stop-observe-move,
/// an empty move, or any backend failure falls back to waiting the full cap.
#[allow(clippy::too_many_arguments)]
pub fn plan_motion(
    hazards: &HazardSet,
    strategy: Strategy,
    navi: &Navi,
    current: &EnvironmentSnapshot,
    backend: &dyn ReasoningBackend,
    key: Option<&str>,
    cfg: &PlannerConfig,
    dt: f64,
) -> PlanOutcome {
    let current = current.redacted();
    let prompt_text = prompt::render(
        prompt::SHORT_TERM_MOTION,
        &[
            ("hazards", prompt::describe_hazards(hazards)),
            (
                "strategy",
                match strategy {
                    Strategy::Move => "move".to_string(),
                    Strategy::StopObserveMove => "stop_observe_move".to_string(),
                },
            ),
            ("navi", prompt::describe_navi(navi)),
            ("perception", prompt::describe_perception(&current.perception)),
            ("dt", format!("{dt}")),
            ("n_max", cfg.max_steps.to_string()),
            ("wait_cap", cfg.wait_cap.to_string()),
        ],
    );
    let tick = current.tick;
    let payload = MotionPayload {
        purpose: Purpose::ShortTermMotion,
        key,
        hazards,
        strategy,
        navi,
        history: [current],
    };
    let req = BackendRequest {
        purpose: Purpose::ShortTermMotion,
        prompt: prompt_text,
        payload: serde_json::to_string(&payload).unwrap_or_default(),
        timeout_ms: cfg.timeout_ms.max(1),
    };
    let skeleton = match backend.call(&req) {
        Ok(resp) => match resp.parsed {
            Parsed::Plan(s) => s,
            other => return som_fallback(cfg, format!("unexpected answer {other:?}")),
        },
        Err(e) => return som_fallback(cfg, e.to_string()),
    };
    match skeleton {
        PlanSkeleton::StopObserveMove { wait, trigger } => PlanOutcome {
            plan: MotionPlan::StopObserveMove {
                wait_ticks: wait.min(cfg.wait_cap),
                move_trigger: trigger,
            },
            truncated: wait > cfg.wait_cap,
            fallback: None,
        },
        PlanSkeleton::Move { .. } if strategy != Strategy::Move => {
            som_fallback(cfg, "move plan under stop-observe-move".into())
        }
        PlanSkeleton::Move { pairs } if pairs.is_empty() => som_fallback(cfg, "empty move plan".into()),
        PlanSkeleton::Move { pairs } => {
            let (sequence, truncated) = ActionSequence::truncated(pairs, tick, cfg.max_steps);
            PlanOutcome {
                plan: MotionPlan::Move { sequence },
                truncated,
                fallback: None,
            }
        }
    }
}

pub fn complement(c: ExecutionCondition) -> ExecutionCondition {
    match c {
        ExecutionCondition::ConsistentNoImmediateHazard => ExecutionCondition::ConsistentImmediateHazard,
        ExecutionCondition::ConsistentImmediateHazard => ExecutionCondition::ConsistentNoImmediateHazard,
    }
}

/// Turns a wait into that many stop pairs, capped at `wait_cap`. Each stop
/// is guarded by the complement of the move trigger; the orchestrator
/// re-guards the head stop with the live classification, so a waiting stop
/// runs under any consistent state.
pub fn expand_stop_observe_move(
    plan: &MotionPlan,
    wait_cap: u64,
    created_tick: u64,
) -> Result<(ActionSequence, bool), PlanError> {
    let MotionPlan::StopObserveMove {
        wait_ticks,
        move_trigger,
    } = plan
    else {
        return Err(PlanError::WrongStrategy);
    };
    let n = (*wait_ticks).min(wait_cap) as usize;
    let pair = ConditionActionPair::new(complement(*move_trigger), HighLevelAction::stop());
    let limit = wait_cap.max(1) as usize;
    let (seq, _) = ActionSequence::truncated(vec![pair; n], created_tick, limit);
    Ok((seq, *wait_ticks > wait_cap))
}
