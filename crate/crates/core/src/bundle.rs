//! Scenarios and scripted answers shipped with the crate.

use crate::backend::ScriptedTable;
use crate::simenv::Scenario;

const SCENARIOS: [(&str, &str); 9] = [
    ("traffic_light_benign", include_str!("../scenarios/traffic_light_benign.json")),
    ("traffic_light_hazard", include_str!("../scenarios/traffic_light_hazard.json")),
    ("stop_sign_benign", include_str!("../scenarios/stop_sign_benign.json")),
    ("stop_sign_hazard", include_str!("../scenarios/stop_sign_hazard.json")),
    ("pedestrian_benign", include_str!("../scenarios/pedestrian_benign.json")),
    ("pedestrian_hazard", include_str!("../scenarios/pedestrian_hazard.json")),
    ("bicycle_benign", include_str!("../scenarios/bicycle_benign.json")),
    ("bicycle_hazard", include_str!("../scenarios/bicycle_hazard.json")),
    ("stale_plan", include_str!("../scenarios/stale_plan.json")),
];

const TABLE: &str = include_str!("../scripted/table.json");

pub fn bundled_scenario_names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}

pub fn bundled_scenarios() -> Vec<Scenario> {
    SCENARIOS
        .iter()
        .map(|(name, text)| Scenario::from_json(text, name).expect("bundled scenario is valid"))
        .collect()
}

pub fn bundled_scenario(name: &str) -> Option<Scenario> {
    bundled_scenarios().into_iter().find(|s| s.name == name)
}

pub fn bundled_table() -> ScriptedTable {
    ScriptedTable::from_json(TABLE).expect("bundled table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn everything_parses() {
        let all = bundled_scenarios();
        assert_eq!(all.len(), 9);
        for (s, name) in all.iter().zip(bundled_scenario_names()) {
            assert_eq!(s.name, name);
        }
        let table = bundled_table();
        for s in &all {
            assert!(table.keys().any(|k| k == s.key()), "{}", s.name);
        }
    }
}
