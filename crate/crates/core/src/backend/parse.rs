use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use super::{BackendError, Parsed, PlanSkeleton, Purpose};
use crate::domain::{Hazard, SafetyConstraints, Strategy};

#[derive(Deserialize)]
struct HazardsWire {
    #[serde(default)]
    hazards: Vec<Hazard>,
    strategy: Strategy,
}

/// Pulls the first JSON object out of free text and validates it against
/// the schema for `purpose`.
///
/// Unknown behavior, speed, condition, object or motion tokens are rejected;
/// nothing is coerced. Extra keys are ignored.
pub fn parse_structured(raw: &str, purpose: Purpose) -> Result<Parsed, BackendError> {
    let (position, value) = first_object(raw)
        .ok_or_else(|| BackendError::schema(0, "$", "no JSON object found"))?;
    match purpose {
        Purpose::HazardAndPlan => {
            let w: HazardsWire = typed(position, value)?;
            Ok(Parsed::Hazards {
                hazards: w.hazards,
                strategy: w.strategy,
            })
        }
        Purpose::ShortTermMotion => {
            let plan: PlanSkeleton = typed(position, value)?;
            Ok(Parsed::Plan(plan))
        }
        Purpose::SafetyConstraints => {
            let sc: SafetyConstraints = typed(position, value)?;
            Ok(Parsed::Constraints(sc))
        }
    }
}

fn typed<T: DeserializeOwned>(position: usize, value: Value) -> Result<T, BackendError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "$".to_string() } else { path };
        BackendError::schema(position, field, e.into_inner().to_string())
    })
}

fn first_object(raw: &str) -> Option<(usize, Value)> {
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(v @ Value::Object(_))) = stream.next() {
            return Some((i, v));
        }
    }
    None
}
