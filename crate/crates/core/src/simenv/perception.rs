use std::f64::consts::FRAC_PI_2;

use super::{class_base_height, class_dimensions, WorldState};
use crate::camera::{image_x, image_y, view_center, view_of_bearing, MAX_RANGE_M, VIEW_FOV};
use crate::domain::{
    DeficitRegion, EnvironmentSnapshot, LightState, NormBox, ObjectClass, Perception, Pose, ViewId, VisibleObject,
};

/// Snapshot plus the ground-truth ids of objects left visible in it, in
/// projection order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub snapshot: EnvironmentSnapshot,
    pub visible_ids: Vec<u32>,
}

struct Candidate {
    id: u32,
    class: ObjectClass,
    pose: Pose,
    light: Option<LightState>,
}

fn candidates(w: &WorldState) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = w
        .actors()
        .into_iter()
        .map(|a| Candidate {
            id: a.id,
            class: a.class,
            pose: a.pose,
            light: None,
        })
        .collect();
    for (i, l) in w.spec.traffic_lights.iter().enumerate() {
        out.push(Candidate {
            id: l.id,
            class: ObjectClass::TrafficLight,
            pose: Pose::new(l.position[0], l.position[1], 0.0),
            light: Some(w.light_state(i)),
        });
    }
    for s in &w.spec.stop_signs {
        out.push(Candidate {
            id: s.id,
            class: ObjectClass::StopSign,
            pose: Pose::new(s.position[0], s.position[1], 0.0),
            light: None,
        });
    }
    out
}

/// Projects one object into the camera whose sector holds its center.
fn project(ego: &Pose, c: &Candidate) -> Option<(ViewId, NormBox, f64)> {
    let (fwd, left) = ego.to_local([c.pose.x, c.pose.y]);
    let range = fwd.hypot(left);
    if fwd <= 0.0 || range > MAX_RANGE_M || range < 1e-6 {
        return None;
    }
    let view = view_of_bearing(left.atan2(fwd))?;

    let (len, wid, top) = class_dimensions(c.class);
    let (s, co) = c.pose.heading.sin_cos();
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (dl, dw) in [(0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5)] {
        let cx = c.pose.x + co * dl * len - s * dw * wid;
        let cy = c.pose.y + s * dl * len + co * dw * wid;
        let (f, l) = ego.to_local([cx, cy]);
        let b = l.atan2(f).clamp(-FRAC_PI_2, FRAC_PI_2);
        bmin = bmin.min(b);
        bmax = bmax.max(b);
    }
    let (lo, hi) = (view_center(view) - 0.5 * VIEW_FOV, view_center(view) + 0.5 * VIEW_FOV);
    let (bmin, bmax) = (bmin.max(lo), bmax.min(hi));

    let x0 = image_x(view, bmax).clamp(0.0, 1.0);
    let x1 = image_x(view, bmin).clamp(0.0, 1.0);
    let y0 = image_y(top, range).clamp(0.0, 1.0);
    let y1 = image_y(class_base_height(c.class), range).clamp(0.0, 1.0);
    if x1 - x0 < 1e-9 || y1 - y0 < 1e-9 {
        return None;
    }
    NormBox::new(x0, y0, x1, y1).ok().map(|b| (view, b, range))
}

/// Ground-truth perception with the scenario's deficit policy applied, plus
/// which objects remain visible.
pub fn observe(w: &WorldState) -> Observation {
    let ego = w.ego.pose;
    let mut perception = Perception::empty();
    let mut shown: Vec<(ViewId, u32, NormBox)> = Vec::new();
    for c in candidates(w) {
        let Some((view, bbox, range)) = project(&ego, &c) else {
            continue;
        };
        let cam = perception.view_mut(view);
        if w.spec.policy.masks(c.class, w.tick) {
            cam.deficits.push(DeficitRegion {
                view,
                bbox,
                masked_object_id: Some(c.id),
            });
        } else {
            cam.visible_objects.push(VisibleObject {
                class: c.class,
                bbox,
                range_m: range,
                light_state: c.light,
            });
            shown.push((view, c.id, bbox));
        }
    }
    for view in ViewId::ALL {
        perception.view_mut(view).enforce_occlusion();
    }
    let visible_ids = shown
        .into_iter()
        .filter(|(view, _, bbox)| !perception.view(*view).deficits.iter().any(|d| d.bbox.contains(bbox)))
        .map(|(_, id, _)| id)
        .collect();

    let snapshot = EnvironmentSnapshot {
        tick: w.tick,
        perception,
        navi: w.navi(),
        surrounding: w.spec.surrounding.with_obstacle(w.nearest_obstacle()),
    };
    Observation { snapshot, visible_ids }
}

pub fn perceive(w: &WorldState) -> EnvironmentSnapshot {
    observe(w).snapshot
}
