//! Prompt templates and the textual serialization of symbolic perception.

use std::fmt::Write;

use crate::domain::{CameraView, EnvironmentSnapshot, HazardSet, Navi, NormBox, Perception, Surrounding};

pub const HAZARD_AND_PLAN: &str = include_str!("../assets/prompts/hazard_and_plan.txt");
pub const SHORT_TERM_MOTION: &str = include_str!("../assets/prompts/short_term_motion.txt");
pub const SAFETY_CONSTRAINTS: &str = include_str!("../assets/prompts/safety_constraints.txt");

/// Substitutes `{name}` placeholders. Unknown placeholders and literal JSON
/// braces are left alone.
pub fn render(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

fn fmt_box(b: &NormBox) -> String {
    format!("({:.3}, {:.3}, {:.3}, {:.3})", b.x0(), b.y0(), b.x1(), b.y1())
}

fn describe_view(out: &mut String, v: &CameraView) {
    let name = match v.view {
        crate::domain::ViewId::Left => "left",
        crate::domain::ViewId::Front => "front",
        crate::domain::ViewId::Right => "right",
    };
    if v.deficits.is_empty() && v.visible_objects.is_empty() {
        let _ = writeln!(out, "  {name}: nothing detected");
        return;
    }
    let _ = writeln!(out, "  {name}:");
    for d in &v.deficits {
        let _ = writeln!(out, "    masked region {}", fmt_box(&d.bbox));
    }
    for o in &v.visible_objects {
        let class = serde_json::to_value(o.class)
            .ok()
            .and_then(|c| c.as_str().map(str::to_owned))
            .unwrap_or_default();
        let light = o
            .light_state
            .map(|s| format!(" ({s:?})").to_lowercase())
            .unwrap_or_default();
        let _ = writeln!(out, "    {class}{light} {} at {:.1} m", fmt_box(&o.bbox), o.range_m);
    }
}

pub fn describe_perception(p: &Perception) -> String {
    let mut out = String::new();
    for v in p.views() {
        describe_view(&mut out, v);
    }
    out
}

pub fn describe_history(history: &[EnvironmentSnapshot]) -> String {
    let mut out = String::new();
    for snap in history {
        let _ = writeln!(out, "Frame {}:", snap.tick);
        out.push_str(&describe_perception(&snap.perception));
    }
    out
}

pub fn describe_navi(n: &Navi) -> String {
    let geometry = serde_json::to_value(n.road_geometry)
        .ok()
        .and_then(|g| g.as_str().map(str::to_owned))
        .unwrap_or_default();
    format!(
        "target point ({:.1}, {:.1}) m, current direction {:.1} deg, road geometry {geometry}",
        n.target_point[0],
        n.target_point[1],
        n.current_direction.to_degrees()
    )
}

pub fn describe_hazards(h: &HazardSet) -> String {
    serde_json::to_string(h).unwrap_or_else(|_| "[]".into())
}

pub fn describe_surrounding(s: &Surrounding) -> String {
    format!(
        "weather {:?}, daylight {:?}, traffic density {:?}",
        s.weather, s.daylight, s.traffic_density
    )
    .to_lowercase()
}
