//! Translation of planner tokens into actuator commands.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    wrap_angle, Action, Behavior, HighLevelAction, Navi, Pose, RoadGeometry, SpeedControl,
};

/// Lateral offset used to aim a lane change.
pub const LANE_WIDTH_M: f64 = 3.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("target point coincides with the ego position")]
    DegenerateTarget,
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
}

/// Throttle and brake for a speed token. The only memory is the previous
/// throttle.
pub fn map_speed_control(speed: SpeedControl, prev_throttle: f64) -> (f64, f64) {
    let prev = if prev_throttle.is_nan() {
        0.0
    } else {
        prev_throttle.clamp(0.0, 1.0)
    };
    let (throttle, brake): (f64, f64) = match speed {
        SpeedControl::ConstantSpeed => (0.7, 0.0),
        SpeedControl::Deceleration => ((prev - 0.2).max(0.0), 0.2),
        SpeedControl::QuickDeceleration => ((prev - 0.4).max(0.0), 0.4),
        SpeedControl::DecelerationToZero => (0.0, 0.8),
        SpeedControl::Acceleration => ((prev + 0.2).min(1.0), 0.0),
        SpeedControl::QuickAcceleration => ((prev + 0.4).min(1.0), 0.0),
    };
    (throttle.clamp(0.0, 1.0), brake.clamp(0.0, 1.0))
}

/// PID on the heading error towards a target point.
///
/// The error is `heading - bearing`, so a target to the right gives a
/// positive error and a positive (rightward) steer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteerController {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral: f64,
    pub prev_error: f64,
    pub integral_bound: f64,
}

impl Default for SteerController {
    fn default() -> Self {
        SteerController::with_gains(0.9, 0.0, 0.1)
    }
}

impl SteerController {
    pub fn with_gains(kp: f64, ki: f64, kd: f64) -> Self {
        SteerController {
            kp: kp.max(0.0),
            ki: ki.max(0.0),
            kd: kd.max(0.0),
            integral: 0.0,
            prev_error: 0.0,
            integral_bound: 1.0,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = 0.0;
    }
}

pub fn compute_steer(
    ego: Pose,
    target: [f64; 2],
    ctrl: &SteerController,
    dt: f64,
) -> Result<(f64, SteerController), ControlError> {
    if !(dt > 0.0) {
        return Err(ControlError::NonPositiveDt(dt));
    }
    let (dx, dy) = (target[0] - ego.x, target[1] - ego.y);
    if dx.hypot(dy) < 1e-9 {
        return Err(ControlError::DegenerateTarget);
    }
    let bearing = dy.atan2(dx);
    let error = wrap_angle(ego.heading - bearing);

    let mut next = *ctrl;
    next.integral = (ctrl.integral + error * dt).clamp(-ctrl.integral_bound, ctrl.integral_bound);
    let derivative = (error - ctrl.prev_error) / dt;
    next.prev_error = error;

    let u = ctrl.kp * error + ctrl.ki * next.integral + ctrl.kd * derivative;
    Ok((u.clamp(-1.0, 1.0), next))
}

/// Whether a directional behavior agrees with the road ahead.
pub fn aligns_with_navigation(behavior: Behavior, geometry: RoadGeometry) -> bool {
    use RoadGeometry::*;
    match behavior {
        Behavior::MoveForward | Behavior::Stop => true,
        Behavior::TurnLeft => matches!(geometry, Intersection | LeftCurve),
        Behavior::TurnRight => matches!(geometry, Intersection | RightCurve),
        Behavior::ChangeLaneLeft | Behavior::ChangeLaneRight => geometry == Straight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub action: Action,
    pub ctrl: SteerController,
    /// Behavior actually executed after the alignment check.
    pub behavior: Behavior,
    pub direction_mismatch: bool,
}

pub fn resolve_action(
    hla: HighLevelAction,
    prev: Action,
    ego: Pose,
    navi: &Navi,
    ctrl: &SteerController,
    dt: f64,
) -> Resolved {
    let (throttle, brake) = map_speed_control(hla.speed(), prev.throttle());

    let mut behavior = hla.behavior();
    let mut direction_mismatch = false;
    if !aligns_with_navigation(behavior, navi.road_geometry) {
        behavior = Behavior::MoveForward;
        direction_mismatch = true;
    }

    let (steer, ctrl) = if behavior == Behavior::Stop {
        (0.0, *ctrl)
    } else {
        let target = match behavior {
            Behavior::ChangeLaneLeft => lateral_shift(navi, LANE_WIDTH_M),
            Behavior::ChangeLaneRight => lateral_shift(navi, -LANE_WIDTH_M),
            _ => navi.target_point,
        };
        compute_steer(ego, target, ctrl, dt).unwrap_or((0.0, *ctrl))
    };

    Resolved {
        action: Action::clamped(throttle, brake, steer),
        ctrl,
        behavior,
        direction_mismatch,
    }
}

// positive offset is to the left of the current direction
fn lateral_shift(navi: &Navi, offset: f64) -> [f64; 2] {
    let (s, c) = navi.current_direction.sin_cos();
    [
        navi.target_point[0] - s * offset,
        navi.target_point[1] + c * offset,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn navi(target: [f64; 2], geometry: RoadGeometry) -> Navi {
        Navi {
            target_point: target,
            current_direction: 0.0,
            road_geometry: geometry,
        }
    }

    #[test]
    fn speed_table_examples() {
        assert_eq!(map_speed_control(SpeedControl::ConstantSpeed, 0.3), (0.7, 0.0));
        let (t, b) = map_speed_control(SpeedControl::Deceleration, 0.5);
        assert_eq!((t, b), (0.5 - 0.2, 0.2));
        assert!((t - 0.3).abs() < 1e-12);
        assert_eq!(
            map_speed_control(SpeedControl::QuickAcceleration, 0.9),
            (1.0, 0.0)
        );
        assert_eq!(
            map_speed_control(SpeedControl::DecelerationToZero, 0.7),
            (0.0, 0.8)
        );
        assert_eq!(map_speed_control(SpeedControl::QuickDeceleration, 0.1), (0.0, 0.4));
    }

    #[test]
    fn straight_target_gives_zero_steer() {
        let (steer, _) = compute_steer(
            Pose::new(0.0, 0.0, 0.0),
            [10.0, 0.0],
            &SteerController::default(),
            0.1,
        )
        .unwrap();
        assert_eq!(steer, 0.0);
    }

    #[test]
    fn left_target_steers_left() {
        let (steer, _) = compute_steer(
            Pose::new(0.0, 0.0, 0.0),
            [10.0, 5.0],
            &SteerController::default(),
            0.1,
        )
        .unwrap();
        assert!(steer < 0.0);
        let (steer, _) = compute_steer(
            Pose::new(0.0, 0.0, 0.0),
            [10.0, -5.0],
            &SteerController::default(),
            0.1,
        )
        .unwrap();
        assert!(steer > 0.0);
    }

    #[test]
    fn proportional_step_response() {
        // Heading 0.3 rad left of a target straight down +x: error = 0.3.
        let ctrl = SteerController::with_gains(1.0, 0.0, 0.0);
        let (steer, next) = compute_steer(Pose::new(0.0, 0.0, 0.3), [10.0, 0.0], &ctrl, 0.1).unwrap();
        assert!((steer - 0.3).abs() < 1e-12);
        assert!((next.prev_error - 0.3).abs() < 1e-12);
        assert!((next.integral - 0.03).abs() < 1e-12);
    }

    #[test]
    fn integral_is_clamped() {
        let mut ctrl = SteerController::with_gains(0.0, 1.0, 0.0);
        for _ in 0..100 {
            let (_, next) = compute_steer(Pose::new(0.0, 0.0, 1.0), [10.0, 0.0], &ctrl, 0.5).unwrap();
            ctrl = next;
        }
        assert_eq!(ctrl.integral, 1.0);
    }

    #[test]
    fn degenerate_target_is_an_error() {
        let r = compute_steer(
            Pose::new(1.0, 2.0, 0.0),
            [1.0, 2.0],
            &SteerController::default(),
            0.1,
        );
        assert_eq!(r, Err(ControlError::DegenerateTarget));
        let r = compute_steer(Pose::new(0.0, 0.0, 0.0), [1.0, 2.0], &SteerController::default(), 0.0);
        assert!(matches!(r, Err(ControlError::NonPositiveDt(_))));
    }

    #[test]
    fn resolve_examples() {
        let ego = Pose::new(0.0, 0.0, 0.0);
        let ctrl = SteerController::default();
        let prev = Action::new(0.3, 0.0, 0.0).unwrap();

        let r = resolve_action(
            HighLevelAction::new(Behavior::MoveForward, SpeedControl::ConstantSpeed),
            prev,
            ego,
            &navi([8.0, 0.0], RoadGeometry::Straight),
            &ctrl,
            0.1,
        );
        assert_eq!(r.action, Action::new(0.7, 0.0, 0.0).unwrap());
        assert!(!r.direction_mismatch);

        let r = resolve_action(
            HighLevelAction::stop(),
            prev,
            ego,
            &navi([8.0, 3.0], RoadGeometry::Straight),
            &ctrl,
            0.1,
        );
        assert_eq!(r.action, Action::FAIL_SAFE_STOP);
    }

    #[test]
    fn turn_left_at_intersection_steers_left() {
        // Route turns left: the target sits ahead and to the left.
        let prev = Action::new(0.5, 0.0, 0.0).unwrap();
        let r = resolve_action(
            HighLevelAction::new(Behavior::TurnLeft, SpeedControl::Deceleration),
            prev,
            Pose::new(0.0, 0.0, 0.0),
            &navi([4.0, 4.0], RoadGeometry::Intersection),
            &SteerController::default(),
            0.1,
        );
        assert!(r.action.steer() < 0.0);
        assert!((r.action.throttle() - 0.3).abs() < 1e-12);
        assert_eq!(r.action.brake(), 0.2);
        assert_eq!(r.behavior, Behavior::TurnLeft);
    }

    #[test]
    fn misaligned_turn_is_demoted() {
        let r = resolve_action(
            HighLevelAction::new(Behavior::TurnLeft, SpeedControl::ConstantSpeed),
            Action::IDLE,
            Pose::new(0.0, 0.0, 0.0),
            &navi([8.0, 0.0], RoadGeometry::Straight),
            &SteerController::default(),
            0.1,
        );
        assert!(r.direction_mismatch);
        assert_eq!(r.behavior, Behavior::MoveForward);
        assert_eq!(r.action.steer(), 0.0);

        let r = resolve_action(
            HighLevelAction::new(Behavior::ChangeLaneRight, SpeedControl::ConstantSpeed),
            Action::IDLE,
            Pose::new(0.0, 0.0, 0.0),
            &navi([8.0, 0.0], RoadGeometry::Intersection),
            &SteerController::default(),
            0.1,
        );
        assert!(r.direction_mismatch);
    }

    #[test]
    fn lane_change_aims_sideways() {
        let r = resolve_action(
            HighLevelAction::new(Behavior::ChangeLaneLeft, SpeedControl::ConstantSpeed),
            Action::IDLE,
            Pose::new(0.0, 0.0, 0.0),
            &navi([8.0, 0.0], RoadGeometry::Straight),
            &SteerController::default(),
            0.1,
        );
        assert!(r.action.steer() < 0.0);
    }
}
