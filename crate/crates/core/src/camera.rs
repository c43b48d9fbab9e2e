//! Angular-sector camera model shared by the simulator's projection and by
//! consumers that reason about boxes (range from the box's ground contact).
//!
//! Three views, 60 degrees each, centered at +60 (left), 0 (front) and -60
//! (right) degrees of ego-frame bearing. Bearings are counter-clockwise, so a
//! positive bearing is to the left.

use crate::domain::{NormBox, ViewId};

pub const VIEW_FOV: f64 = std::f64::consts::PI / 3.0;
pub const VERTICAL_FOV: f64 = std::f64::consts::PI / 6.0;
pub const CAMERA_HEIGHT_M: f64 = 1.5;
pub const MAX_RANGE_M: f64 = 40.0;

pub fn view_center(view: ViewId) -> f64 {
    match view {
        ViewId::Left => VIEW_FOV,
        ViewId::Front => 0.0,
        ViewId::Right => -VIEW_FOV,
    }
}

/// View whose sector contains `bearing`, if any.
pub fn view_of_bearing(bearing: f64) -> Option<ViewId> {
    let half = 0.5 * VIEW_FOV;
    if bearing.abs() <= half {
        Some(ViewId::Front)
    } else if bearing > half && bearing <= 1.5 * VIEW_FOV {
        Some(ViewId::Left)
    } else if bearing < -half && bearing >= -1.5 * VIEW_FOV {
        Some(ViewId::Right)
    } else {
        None
    }
}

/// Horizontal image coordinate of a bearing in `view` (unclamped).
pub fn image_x(view: ViewId, bearing: f64) -> f64 {
    0.5 - (bearing - view_center(view)) / VIEW_FOV
}

/// Vertical image coordinate of a point `height_m` above the ground at
/// horizontal distance `range_m` (unclamped).
pub fn image_y(height_m: f64, range_m: f64) -> f64 {
    0.5 - ((height_m - CAMERA_HEIGHT_M) / range_m.max(1e-3)).atan() / VERTICAL_FOV
}

/// Ego-frame (forward, left) position of a box that touches the ground,
/// recovered from its bottom edge. `None` for boxes whose bottom lies at or
/// above the horizon (signals, objects beyond the visible ground).
pub fn ground_estimate(view: ViewId, bbox: &NormBox) -> Option<(f64, f64)> {
    let below = (bbox.y1() - 0.5) * VERTICAL_FOV;
    if below <= 1e-4 {
        return None;
    }
    let range = CAMERA_HEIGHT_M / below.tan();
    let (xc, _) = bbox.centroid();
    let bearing = view_center(view) + (0.5 - xc) * VIEW_FOV;
    Some((range * bearing.cos(), range * bearing.sin()))
}
