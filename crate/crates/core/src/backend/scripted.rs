use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{parse_structured, BackendError, BackendRequest, BackendResponse, Purpose, ReasoningBackend};
use crate::camera;
use crate::domain::{EnvironmentSnapshot, ViewId};

/// Forward reach and half-width of the corridor checked by [`situation_cue`].
const CORRIDOR_REACH_M: f64 = 30.0;
const CORRIDOR_HALF_WIDTH_M: f64 = 2.5;

/// Response table: `key` (optionally `key/cue`) to raw responses per purpose.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptedTable {
    entries: BTreeMap<String, BTreeMap<Purpose, String>>,
}

impl ScriptedTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, purpose: Purpose, raw: impl Into<String>) {
        self.entries
            .entry(key.into())
            .or_default()
            .insert(purpose, raw.into());
    }

    /// Parses the table file format: an object of keys, each an object of
    /// purposes whose values are either raw response strings or JSON
    /// objects (stored re-serialized).
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: BTreeMap<String, BTreeMap<Purpose, Value>> = serde_json::from_str(text)?;
        let mut table = ScriptedTable::new();
        for (key, by_purpose) in raw {
            for (purpose, v) in by_purpose {
                let text = match v {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                table.insert(key.clone(), purpose, text);
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn merge(&mut self, other: ScriptedTable) {
        for (key, by_purpose) in other.entries {
            self.entries.entry(key).or_default().extend(by_purpose);
        }
    }

    pub fn lookup(&self, key: &str, cue: Option<&str>, purpose: Purpose) -> Option<&str> {
        let specific = cue.and_then(|c| self.entries.get(&format!("{key}/{c}")));
        specific
            .and_then(|m| m.get(&purpose))
            .or_else(|| self.entries.get(key).and_then(|m| m.get(&purpose)))
            .map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Coarse situation tag derived from the latest frame: `"path"` when a
/// ground-contact deficit or road user in the front view sits inside the
/// corridor ahead, `"clear"` otherwise.
pub fn situation_cue(snapshot: &EnvironmentSnapshot) -> &'static str {
    let front = snapshot.perception.view(ViewId::Front);
    let boxes = front
        .deficits
        .iter()
        .map(|d| d.bbox)
        .chain(
            front
                .visible_objects
                .iter()
                .filter(|o| o.class.is_traffic_object())
                .map(|o| o.bbox),
        );
    for b in boxes {
        if let Some((fwd, left)) = camera::ground_estimate(ViewId::Front, &b) {
            if fwd > 0.0 && fwd <= CORRIDOR_REACH_M && left.abs() <= CORRIDOR_HALF_WIDTH_M {
                return "path";
            }
        }
    }
    "clear"
}

#[derive(Deserialize)]
struct PayloadView {
    key: Option<String>,
    #[serde(default)]
    history: Vec<EnvironmentSnapshot>,
}

/// Deterministic table-driven backend.
///
/// The lookup key comes from the request payload's `key` field; the latest
/// frame of the payload's `history` selects a cue-specific entry when one
/// exists. A miss is a schema violation, like any unusable answer.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    table: ScriptedTable,
}

impl ScriptedBackend {
    pub fn new(table: ScriptedTable) -> Self {
        ScriptedBackend { table }
    }

    pub fn table(&self) -> &ScriptedTable {
        &self.table
    }

    pub fn respond(&self, purpose: Purpose, key: &str, cue: Option<&str>) -> Result<BackendResponse, BackendError> {
        let raw = self
            .table
            .lookup(key, cue, purpose)
            .ok_or_else(|| {
                BackendError::schema(0, "key", format!("no scripted entry for `{key}` / {}", purpose.as_str()))
            })?
            .to_string();
        let parsed = parse_structured(&raw, purpose)?;
        Ok(BackendResponse {
            raw,
            parsed,
            latency_ms: 0,
        })
    }
}

impl ReasoningBackend for ScriptedBackend {
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let view: PayloadView = serde_json::from_str(&req.payload)
            .map_err(|e| BackendError::schema(0, "payload", e.to_string()))?;
        let key = view
            .key
            .ok_or_else(|| BackendError::schema(0, "payload.key", "missing scenario key"))?;
        let cue = view.history.last().map(situation_cue);
        self.respond(req.purpose, &key, cue)
    }
}
