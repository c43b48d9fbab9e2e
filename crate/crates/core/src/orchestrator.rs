//! The override loop: owns the plan-ahead sequence, plans when it runs dry
//! or a guard fails, and emits constrained actuator commands.

use serde::{Deserialize, Serialize};

use crate::backend::ReasoningBackend;
use crate::controlmap::{resolve_action, SteerController};
use crate::domain::{
    Action, ActionSequence, Behavior, ConditionActionPair, EnvironmentSnapshot, ExecutionCondition, HazardSet,
    HighLevelAction, MotionPlan, Pose, SafetyConstraints, Strategy, VehicleMeasurements,
};
use crate::planner::{complement, expand_stop_observe_move, infer_hazards, plan_motion, PlannerConfig};
use crate::safety::{apply_constraints_traced, generate_constraints, ConstraintSource, SafetyGains};
use crate::verifier::{classify_condition, verdict_for, Classification, Verdict, VerifierConfig};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestratorConfig {
    pub planner: PlannerConfig,
    pub verifier: VerifierConfig,
    pub gains: SafetyGains,
    pub dt: f64,
    /// Scenario key handed to the backend in every payload.
    pub key: Option<String>,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            planner: PlannerConfig::default(),
            verifier: VerifierConfig::default(),
            gains: SafetyGains::default(),
            dt: 0.1,
            key: None,
        }
    }
}

impl OrchestratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.planner.validate()?;
        self.verifier.validate().map_err(|e| e.to_string())?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("dt {} must be positive", self.dt));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaitState {
    pub trigger: ExecutionCondition,
    /// Stop ticks executed since the wait began.
    pub waited: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverrideState {
    pub sequence: ActionSequence,
    pub consecutive_replans: u32,
    pub active: bool,
    pub prev_action: Action,
    pub ctrl: SteerController,
    pub constraints: Option<(SafetyConstraints, ConstraintSource)>,
    pub waiting: Option<WaitState>,
    pub hazards: HazardSet,
    pub planning_events: u64,
    /// Hazard and motion calls.
    pub planning_calls: u64,
    pub constraint_calls: u64,
}

impl OverrideState {
    pub fn new(max_steps: usize) -> Self {
        OverrideState {
            sequence: ActionSequence::empty(0, max_steps),
            consecutive_replans: 0,
            active: false,
            prev_action: Action::IDLE,
            ctrl: SteerController::default(),
            constraints: None,
            waiting: None,
            hazards: Vec::new(),
            planning_events: 0,
            planning_calls: 0,
            constraint_calls: 0,
        }
    }

    /// Records an action the base agent emitted while the override was idle.
    pub fn observe_base(&mut self, a: Action) {
        self.prev_action = a;
    }
}

/// Seizes control when a deficit appears and hands it back, with the plan
/// discarded, when perception recovers.
pub fn engage(deficit_present: bool, state: &OverrideState) -> OverrideState {
    let mut next = state.clone();
    match (deficit_present, state.active) {
        (true, false) => {
            next.active = true;
            next.sequence.clear();
            next.waiting = None;
            next.consecutive_replans = 0;
            next.constraints = None;
            next.ctrl.reset();
        }
        (false, true) => {
            next.active = false;
            next.sequence.clear();
            next.waiting = None;
            next.consecutive_replans = 0;
        }
        _ => {}
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSource {
    Base,
    Pair,
    FailSafe,
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub schema_version: u32,
    pub tick: u64,
    pub active: bool,
    pub classification: Option<Classification>,
    /// Verdict on every head pair examined this tick, in order.
    pub verdicts: Vec<Verdict>,
    pub source: ActionSource,
    pub action: Action,
    /// The pair whose action was emitted, after any re-guarding.
    pub executed: Option<ConditionActionPair>,
    pub triggered: Vec<String>,
    pub direction_mismatch: bool,
    pub planning_events: u32,
    pub planning_calls: u32,
    pub constraint_calls: u32,
    pub strategies: Vec<Strategy>,
    pub wait_extension: bool,
    pub truncated: bool,
    pub fallbacks: Vec<String>,
    pub sequence_len_before: usize,
    pub sequence_len: usize,
    pub sequence_limit: usize,
    pub consecutive_replans: u32,
    pub fail_safe_reason: Option<String>,
}

impl DecisionRecord {
    pub fn new(tick: u64, active: bool, action: Action, source: ActionSource) -> Self {
        DecisionRecord {
            schema_version: LOG_SCHEMA_VERSION,
            tick,
            active,
            classification: None,
            verdicts: Vec::new(),
            source,
            action,
            executed: None,
            triggered: Vec::new(),
            direction_mismatch: false,
            planning_events: 0,
            planning_calls: 0,
            constraint_calls: 0,
            strategies: Vec::new(),
            wait_extension: false,
            truncated: false,
            fallbacks: Vec::new(),
            sequence_len_before: 0,
            sequence_len: 0,
            sequence_limit: 0,
            consecutive_replans: 0,
            fail_safe_reason: None,
        }
    }
}

/// Ego state the override needs beyond the snapshot: its pose for steering
/// and the onboard measurements for the safety envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose,
    pub measurements: VehicleMeasurements,
}

fn plan_round(
    st: &mut OverrideState,
    history: &[EnvironmentSnapshot],
    backend: &dyn ReasoningBackend,
    cfg: &OrchestratorConfig,
    rec: &mut DecisionRecord,
) {
    let env = history.last().expect("caller checked history");
    let key = cfg.key.as_deref();
    if rec.planning_events == 0 {
        let (sc, source) = generate_constraints(
            &env.navi,
            &env.surrounding,
            env.surrounding.nearest_obstacle_m,
            backend,
            key,
            cfg.planner.timeout_ms,
        );
        st.constraints = Some((sc, source));
        st.constraint_calls += 1;
        rec.constraint_calls += 1;
        if source == ConstraintSource::Default {
            rec.fallbacks.push("constraints: default table".into());
        }
    }

    let hi = infer_hazards(history, backend, key, &cfg.planner);
    let out = plan_motion(
        &hi.hazards,
        hi.strategy,
        &env.navi,
        env,
        backend,
        key,
        &cfg.planner,
        cfg.dt,
    );
    st.planning_events += 1;
    st.planning_calls += 2;
    rec.planning_events += 1;
    rec.planning_calls += 2;
    rec.strategies.push(out.plan.strategy());
    rec.truncated |= out.truncated;
    if let Some(f) = hi.fallback {
        rec.fallbacks.push(format!("hazards: {f}"));
    }
    if let Some(f) = out.fallback {
        rec.fallbacks.push(format!("motion: {f}"));
    }
    st.hazards = hi.hazards;

    match out.plan {
        MotionPlan::Move { sequence } => {
            st.sequence = sequence;
            st.waiting = None;
        }
        plan @ MotionPlan::StopObserveMove { move_trigger, .. } => {
            let (seq, cut) = expand_stop_observe_move(&plan, cfg.planner.wait_cap, env.tick)
                .expect("stop-observe-move plan");
            rec.truncated |= cut;
            st.sequence = seq;
            st.waiting = Some(WaitState {
                trigger: move_trigger,
                waited: 0,
            });
        }
    }
}

fn fail_safe(st: &mut OverrideState, rec: &mut DecisionRecord, reason: &str) -> Action {
    st.sequence.clear();
    st.waiting = None;
    st.consecutive_replans = 0;
    st.prev_action = Action::FAIL_SAFE_STOP;
    rec.source = ActionSource::FailSafe;
    rec.action = Action::FAIL_SAFE_STOP;
    rec.fail_safe_reason = Some(reason.to_string());
    Action::FAIL_SAFE_STOP
}

/// One tick of the override. `history` ends with the current snapshot.
///
/// The emitted action is either the constrained resolution of a head pair
/// that passed verification, or the fail-safe stop.
pub fn step(
    state: &OverrideState,
    history: &[EnvironmentSnapshot],
    vehicle: &VehicleState,
    backend: &dyn ReasoningBackend,
    cfg: &OrchestratorConfig,
) -> (Action, OverrideState, DecisionRecord) {
    let mut st = state.clone();
    let tick = history.last().map(|s| s.tick).unwrap_or(0);
    let mut rec = DecisionRecord::new(tick, st.active, Action::FAIL_SAFE_STOP, ActionSource::FailSafe);
    rec.sequence_len_before = st.sequence.len();

    let action = match classify_condition(history, &cfg.verifier) {
        Err(e) => fail_safe(&mut st, &mut rec, &e.to_string()),
        Ok(classification) => {
            rec.classification = Some(classification);
            run_loop(&mut st, classification, history, vehicle, backend, cfg, &mut rec)
        }
    };

    rec.sequence_len = st.sequence.len();
    rec.sequence_limit = st.sequence.limit();
    rec.consecutive_replans = st.consecutive_replans;
    (action, st, rec)
}

fn run_loop(
    st: &mut OverrideState,
    classification: Classification,
    history: &[EnvironmentSnapshot],
    vehicle: &VehicleState,
    backend: &dyn ReasoningBackend,
    cfg: &OrchestratorConfig,
    rec: &mut DecisionRecord,
) -> Action {
    let env = history.last().expect("classified history is non-empty");
    let live = classification.as_condition();
    let max_rounds = cfg.planner.replan_budget + 1;

    loop {
        if st.sequence.is_empty() {
            let keep_waiting = match (st.waiting, live) {
                (Some(w), Some(c)) => c != w.trigger && w.waited < cfg.planner.wait_cap,
                _ => false,
            };
            if keep_waiting {
                let trigger = st.waiting.map(|w| w.trigger).expect("waiting");
                let pair = ConditionActionPair::new(complement(trigger), HighLevelAction::stop());
                st.sequence = ActionSequence::empty(env.tick, cfg.planner.wait_cap as usize);
                st.sequence.push_back(pair).expect("room for one stop");
                rec.wait_extension = true;
            } else {
                if rec.planning_events >= max_rounds {
                    return fail_safe(st, rec, "no executable plan within the replan budget");
                }
                plan_round(st, history, backend, cfg, rec);
                if st.sequence.is_empty() {
                    // Zero-tick wait: loop back to either extend or replan.
                    continue;
                }
            }
        }

        // A waiting stop is safe under any consistent state.
        if let (Some(_), Some(c)) = (st.waiting, live) {
            if let Some(head) = st.sequence.front_mut() {
                if head.action.behavior() == Behavior::Stop {
                    head.condition = c;
                }
            }
        }

        let head = *st.sequence.front().expect("non-empty sequence");
        let verdict = verdict_for(&head, classification);
        rec.verdicts.push(verdict);
        match verdict {
            Verdict::Execute => {
                st.sequence.pop_front();
                st.consecutive_replans = 0;
                if let Some(w) = st.waiting.as_mut() {
                    w.waited += 1;
                }
                let resolved = resolve_action(head.action, st.prev_action, vehicle.pose, &env.navi, &st.ctrl, cfg.dt);
                st.ctrl = resolved.ctrl;
                let sc = st
                    .constraints
                    .map(|(sc, _)| sc)
                    .unwrap_or_else(|| crate::safety::default_constraints(&env.navi, &env.surrounding));
                let (action, triggered) = apply_constraints_traced(resolved.action, &vehicle.measurements, &sc, &cfg.gains);
                st.prev_action = action;
                rec.source = ActionSource::Pair;
                rec.action = action;
                rec.executed = Some(head);
                rec.triggered = triggered.names().into_iter().map(String::from).collect();
                rec.direction_mismatch = resolved.direction_mismatch;
                return action;
            }
            Verdict::Deny => {
                if st.consecutive_replans >= cfg.planner.replan_budget {
                    return fail_safe(st, rec, "replan budget exhausted");
                }
                st.consecutive_replans += 1;
                st.sequence.clear();
                st.waiting = None;
            }
        }
    }
}
