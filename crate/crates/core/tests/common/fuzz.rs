//! Randomized override driver: deficits drift, split, vanish and jump while
//! the scripted backend answers from a table that includes oversized,
//! malformed and strategy-mismatched plans.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rco_core::backend::{ScriptedBackend, ScriptedTable};
use rco_core::controlmap::resolve_action;
use rco_core::domain::*;
use rco_core::orchestrator::*;
use rco_core::safety::{apply_constraints, default_constraints};
use rco_core::verifier::{classify_condition, verdict_for, Verdict};

use super::{frame, nb};

const TABLE: &str = r#"{
  "fuzz": {
    "hazard_and_plan": {"hazards":[{"object":"car","motion":"oncoming"}],"strategy":"move"},
    "short_term_motion": {"strategy":"move","pairs":[
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"acceleration"},
      {"condition":"consistent_immediate_hazard","behavior":"stop","speed":"deceleration_to_zero"},
      {"condition":"consistent_no_immediate_hazard","behavior":"turn_left","speed":"deceleration"},
      {"condition":"consistent_no_immediate_hazard","behavior":"change_lane_right","speed":"quick_deceleration"},
      {"condition":"consistent_immediate_hazard","behavior":"move_forward","speed":"deceleration"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"quick_acceleration"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"},
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"}]},
    "safety_constraints": {"v_max":6,"d_min":5,"ac_max":2,"de_max":4,"psi_max":0.4,"d_brake":6}
  },
  "fuzz/path": {
    "hazard_and_plan": {"hazards":[{"object":"pedestrian","motion":"crossing"}],"strategy":"stop_observe_move"},
    "short_term_motion": {"strategy":"stop_observe_move","wait":7,"trigger":"consistent_no_immediate_hazard"}
  },
  "fuzz_long_wait": {
    "hazard_and_plan": {"hazards":[],"strategy":"stop_observe_move"},
    "short_term_motion": {"strategy":"stop_observe_move","wait":80,"trigger":"consistent_immediate_hazard"}
  },
  "fuzz_long_wait/path": {
    "hazard_and_plan": {"hazards":[],"strategy":"move"},
    "short_term_motion": {"strategy":"move","pairs":[]}
  },
  "fuzz_broken": {
    "hazard_and_plan": "I think there is a pedestrian, not sure.",
    "short_term_motion": {"strategy":"move","pairs":[{"condition":"inconsistent","behavior":"fly","speed":"warp"}]},
    "safety_constraints": {"v_max":-1}
  },
  "fuzz_broken/path": {
    "hazard_and_plan": {"hazards":[],"strategy":"stop_observe_move"},
    "short_term_motion": {"strategy":"move","pairs":[
      {"condition":"consistent_no_immediate_hazard","behavior":"move_forward","speed":"constant_speed"}]}
  }
}"#;

pub const FUZZ_KEYS: [&str; 3] = ["fuzz", "fuzz_long_wait", "fuzz_broken"];

pub fn backend() -> ScriptedBackend {
    ScriptedBackend::new(ScriptedTable::from_json(TABLE).expect("fuzz table"))
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FuzzStats {
    pub ticks: u64,
    pub active: u64,
    pub pair_ticks: u64,
    pub fail_safe_ticks: u64,
    pub planning_events: u64,
    pub max_sequence: usize,
}

struct Drift {
    deficits: Vec<NormBox>,
}

fn shifted(b: NormBox, dx: f64, dy: f64) -> NormBox {
    let w = b.x1() - b.x0();
    let h = b.y1() - b.y0();
    let x0 = (b.x0() + dx).clamp(0.0, 1.0 - w);
    let y0 = (b.y0() + dy).clamp(0.0, 1.0 - h);
    nb(x0, y0, x0 + w, y0 + h)
}

fn fresh(rng: &mut ChaCha8Rng) -> NormBox {
    let w = rng.random_range(0.02..0.2);
    let h = rng.random_range(0.02..0.25);
    let x0 = rng.random_range(0.0..1.0 - w);
    // mostly near the bottom so that some land in the driving corridor
    let y1 = rng.random_range(0.5f64..1.0).max(h);
    nb(x0, y1 - h, x0 + w, y1)
}

impl Drift {
    fn advance(&mut self, rng: &mut ChaCha8Rng) {
        let roll: f64 = rng.random();
        if roll < 0.04 && self.deficits.len() < 3 {
            let b = fresh(rng);
            self.deficits.push(b);
        } else if roll < 0.08 && !self.deficits.is_empty() {
            let i = rng.random_range(0..self.deficits.len());
            self.deficits.remove(i);
        } else if roll < 0.11 && !self.deficits.is_empty() {
            let i = rng.random_range(0..self.deficits.len());
            self.deficits[i] = shifted(self.deficits[i], rng.random_range(-0.5..0.5), 0.0);
        } else {
            for b in &mut self.deficits {
                *b = shifted(*b, rng.random_range(-0.01..0.01), rng.random_range(-0.005..0.005));
            }
        }
    }
}

/// Runs `ticks` fuzzed ticks and checks every emitted action. Returns the
/// first violation as an error.
pub fn run(seed: u64, ticks: u64, key: &str, n_max: usize) -> Result<FuzzStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = backend();
    let mut cfg = OrchestratorConfig {
        key: Some(key.to_string()),
        ..Default::default()
    };
    cfg.planner.max_steps = n_max;
    let wait_cap = cfg.planner.wait_cap as usize;
    let k = cfg.verifier.history_len;

    let mut drift = Drift {
        deficits: vec![nb(0.4, 0.6, 0.5, 0.8)],
    };
    let mut history: VecDeque<EnvironmentSnapshot> = VecDeque::new();
    let mut state = OverrideState::new(n_max);
    let mut stats = FuzzStats::default();

    for tick in 0..ticks {
        drift.advance(&mut rng);
        let objects: Vec<NormBox> = (0..rng.random_range(0..3)).map(|_| fresh(&mut rng)).collect();
        let snap = frame(tick, &drift.deficits, &objects);
        let deficit = snap.has_deficit();
        history.push_back(snap);
        while history.len() > k {
            history.pop_front();
        }
        stats.ticks += 1;

        state = engage(deficit, &state);
        if !state.active {
            state.observe_base(Action::new(0.7, 0.0, 0.0).unwrap());
            continue;
        }
        stats.active += 1;

        let vehicle = VehicleState {
            pose: Pose::new(0.0, 0.0, 0.0),
            measurements: VehicleMeasurements {
                v: rng.random_range(0.0..12.0),
                a_x: rng.random_range(-6.0..4.0),
                omega_z: rng.random_range(-0.8..0.8),
                d_follow: if rng.random_bool(0.5) {
                    VehicleMeasurements::NO_LEAD
                } else {
                    rng.random_range(0.0..30.0)
                },
            },
        };
        let h = history.make_contiguous();
        let (action, next, rec) = step(&state, h, &vehicle, &b, &cfg);
        let fail = |msg: String| Err(format!("tick {tick}: {msg}\n{rec:?}"));

        if action != rec.action {
            return fail("returned action differs from the logged one".into());
        }
        match rec.source {
            ActionSource::Base => return fail("base action while the override is active".into()),
            ActionSource::FailSafe => {
                stats.fail_safe_ticks += 1;
                if action != Action::FAIL_SAFE_STOP {
                    return fail(format!("fail-safe source with {action:?}"));
                }
            }
            ActionSource::Pair => {
                stats.pair_ticks += 1;
                let Some(pair) = rec.executed else {
                    return fail("pair source without an executed pair".into());
                };
                let cls = classify_condition(h, &cfg.verifier).map_err(|e| e.to_string())?;
                if verdict_for(&pair, cls) != Verdict::Execute {
                    return fail(format!("{pair:?} emitted under {cls:?}"));
                }
                let resolved = resolve_action(pair.action, state.prev_action, vehicle.pose, &h[h.len() - 1].navi, &state.ctrl, cfg.dt);
                let sc = next
                    .constraints
                    .map(|(sc, _)| sc)
                    .unwrap_or_else(|| default_constraints(&h[h.len() - 1].navi, &h[h.len() - 1].surrounding));
                let expect = apply_constraints(resolved.action, &vehicle.measurements, &sc, &cfg.gains);
                if expect != action {
                    return fail(format!("{action:?} does not trace to {pair:?} ({expect:?})"));
                }
            }
        }

        let bound = if next.waiting.is_some() { wait_cap } else { n_max };
        if next.sequence.len() > bound {
            return fail(format!("sequence length {} over {bound}", next.sequence.len()));
        }
        if rec.sequence_len > rec.sequence_limit {
            return fail("sequence over its own limit".into());
        }
        if rec.planning_events > cfg.planner.replan_budget + 1 {
            return fail(format!("{} planning events in one tick", rec.planning_events));
        }
        if rec.planning_calls != 2 * rec.planning_events {
            return fail("planning calls out of step with events".into());
        }
        stats.planning_events += rec.planning_events as u64;
        stats.max_sequence = stats.max_sequence.max(next.sequence.len());
        state = next;
    }
    Ok(stats)
}
