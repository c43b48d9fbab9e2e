use super::{WorldState, EGO_LENGTH_M};
use crate::controlmap::{compute_steer, map_speed_control, SteerController};
use crate::domain::{Action, LightState, SpeedControl};

/// Hazards and signals farther than this are ignored by the base agent.
pub const BASE_HAZARD_RANGE_M: f64 = 12.0;
const CORRIDOR_HALF_WIDTH_M: f64 = 2.0;
/// Where the agent aims to stand still, before a stop line.
const STOP_MARGIN_M: f64 = 1.0;
const COMFORT_DECEL: f64 = 2.5;

/// Scripted driver used while the override is idle: follows the route and
/// reacts only to hazards it can see.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaseAgent {
    pub ctrl: SteerController,
}

impl BaseAgent {
    pub fn new() -> Self {
        Self::default()
    }

    /// `visible_ids` are the objects present in this tick's perception.
    /// Masked objects are absent there, so the agent drives on past them.
    pub fn act(&mut self, w: &WorldState, visible_ids: &[u32]) -> Action {
        let ego = w.ego.pose;
        let navi = w.navi();
        let steer = match compute_steer(ego, navi.target_point, &self.ctrl, w.config.dt) {
            Ok((s, next)) => {
                self.ctrl = next;
                s
            }
            Err(_) => 0.0,
        };

        let sees = |id: u32| visible_ids.contains(&id);
        let blocked = w.actors().iter().any(|a| {
            if !sees(a.id) {
                return false;
            }
            let (fwd, left) = ego.to_local([a.pose.x, a.pose.y]);
            let (l, wd) = a.dimensions();
            let gap = fwd - 0.5 * EGO_LENGTH_M - 0.5 * l.max(wd);
            fwd > 0.0 && gap <= BASE_HAZARD_RANGE_M && left.abs() <= CORRIDOR_HALF_WIDTH_M + 0.5 * wd
        });
        if blocked {
            return Action::clamped(0.0, 0.8, steer);
        }

        // Closest stop line the agent must honor.
        let front = w.front_s();
        let mut stop_at: Option<f64> = None;
        let mut consider = |line: f64| {
            let d = line - front;
            if d > -0.5 && d <= BASE_HAZARD_RANGE_M {
                stop_at = Some(stop_at.map_or(d, |s: f64| s.min(d)));
            }
        };
        for (i, l) in w.spec.traffic_lights.iter().enumerate() {
            if sees(l.id) && w.light_state(i) != LightState::Green {
                consider(l.stop_line_s);
            }
        }
        for (i, s) in w.spec.stop_signs.iter().enumerate() {
            if sees(s.id) && !w.served[i] {
                consider(s.stop_line_s);
            }
        }

        match stop_at {
            Some(d) => {
                let remaining = d - STOP_MARGIN_M;
                let v = w.ego.v;
                let v_des = (2.0 * COMFORT_DECEL * remaining.max(0.0)).sqrt();
                if remaining <= 0.25 {
                    Action::clamped(0.0, 0.8, steer)
                } else if v > v_des + 0.2 {
                    Action::clamped(0.0, 0.5, steer)
                } else if v < v_des - 0.2 {
                    Action::clamped(0.4, 0.0, steer)
                } else {
                    Action::clamped(0.0, 0.0, steer)
                }
            }
            None => {
                let (t, b) = map_speed_control(SpeedControl::ConstantSpeed, 0.0);
                Action::clamped(t, b, steer)
            }
        }
    }
}
