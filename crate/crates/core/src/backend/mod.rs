//! Pluggable reasoning backend behind hazard inference, motion planning and
//! constraint generation.
//!
//! Two implementations ship: [`ScriptedBackend`], a deterministic table used
//! by tests and the bundled scenarios, and [`HttpBackend`], a blocking
//! chat-completions client for real models. Both return values that already
//! passed [`parse_structured`]; callers never see a partial parse.

mod http;
mod parse;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ConditionActionPair, ExecutionCondition, HazardSet, SafetyConstraints, Strategy};

pub use http::{HttpBackend, HttpConfig, ENV_MODEL, ENV_TOKEN, ENV_URL};
pub use parse::parse_structured;
pub use scripted::{situation_cue, ScriptedBackend, ScriptedTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    HazardAndPlan,
    ShortTermMotion,
    SafetyConstraints,
}

impl Purpose {
    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::HazardAndPlan => "hazard_and_plan",
            Purpose::ShortTermMotion => "short_term_motion",
            Purpose::SafetyConstraints => "safety_constraints",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub purpose: Purpose,
    pub prompt: String,
    /// Canonical JSON of the planning inputs.
    pub payload: String,
    pub timeout_ms: u64,
}

/// Motion plan as the backend states it, before step and wait caps apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum PlanSkeleton {
    Move {
        pairs: Vec<ConditionActionPair>,
    },
    StopObserveMove {
        wait: u64,
        trigger: ExecutionCondition,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parsed {
    Hazards {
        hazards: HazardSet,
        strategy: Strategy,
    },
    Plan(PlanSkeleton),
    Constraints(SafetyConstraints),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendResponse {
    pub raw: String,
    pub parsed: Parsed,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend timed out after {0} ms")]
    Timeout(u64),
    #[error("transport failure: {0}")]
    TransportFailure(String),
    #[error("schema violation at byte {position}, field `{field}`: {message}")]
    SchemaViolation {
        position: usize,
        field: String,
        message: String,
    },
}

impl BackendError {
    pub(crate) fn schema(position: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        BackendError::SchemaViolation {
            position,
            field: field.into(),
            message: message.into(),
        }
    }
}

pub trait ReasoningBackend: Send + Sync {
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError>;
}

impl<B: ReasoningBackend + ?Sized> ReasoningBackend for &B {
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).call(req)
    }
}

impl<B: ReasoningBackend + ?Sized> ReasoningBackend for Box<B> {
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).call(req)
    }
}

impl<B: ReasoningBackend + ?Sized> ReasoningBackend for std::sync::Arc<B> {
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).call(req)
    }
}
