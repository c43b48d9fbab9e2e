//! Renders a decision log as a readable per-tick trace.

use std::fmt::Write as _;
use std::path::Path;

use rco_core::orchestrator::{ActionSource, DecisionRecord};
use serde::Serialize;

use crate::CliError;

fn token<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

pub fn parse_log(text: &str, origin: &str) -> Result<Vec<DecisionRecord>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| CliError::Config(format!("{origin}:{}: {e}", i + 1)))
        })
        .collect()
}

pub fn load_log(path: &Path) -> Result<Vec<DecisionRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_log(&text, &path.display().to_string())
}

/// One line per record. `active_only` drops ticks driven by the base agent.
pub fn render(records: &[DecisionRecord], active_only: bool) -> String {
    let mut out = String::new();
    for r in records.iter().filter(|r| r.active || !active_only) {
        let source = match r.source {
            ActionSource::Base => "base",
            ActionSource::Pair => "pair",
            ActionSource::FailSafe => "fail-safe",
        };
        let _ = write!(out, "{:>5} {:<9} {}", r.tick, source, r.action);
        if let Some(c) = r.classification {
            let _ = write!(out, "  [{}]", token(&c));
        }
        if let Some(p) = &r.executed {
            let _ = write!(
                out,
                "  {}/{} if {}",
                token(&p.action.behavior()),
                token(&p.action.speed()),
                token(&p.condition)
            );
        }
        if r.planning_events > 0 {
            let strategies: Vec<String> = r.strategies.iter().map(token).collect();
            let _ = write!(out, "  planned x{} ({})", r.planning_events, strategies.join(","));
        }
        if r.active {
            let _ = write!(out, "  seq {}/{}", r.sequence_len, r.sequence_limit);
        }
        if !r.triggered.is_empty() {
            let _ = write!(out, "  limits {}", r.triggered.join(","));
        }
        if !r.fallbacks.is_empty() {
            let _ = write!(out, "  fallback {}", r.fallbacks.join("; "));
        }
        if let Some(why) = &r.fail_safe_reason {
            let _ = write!(out, "  ({why})");
        }
        out.push('\n');
    }
    out
}
