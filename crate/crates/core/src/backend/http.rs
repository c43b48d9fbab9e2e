use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{parse_structured, BackendError, BackendRequest, BackendResponse, Purpose, ReasoningBackend};

pub const ENV_URL: &str = "RCO_BACKEND_URL";
pub const ENV_MODEL: &str = "RCO_BACKEND_MODEL";
pub const ENV_TOKEN: &str = "RCO_BACKEND_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    /// Full chat-completions URL, e.g. `http://localhost:8000/v1/chat/completions`.
    pub url: String,
    pub model: String,
    pub token: Option<String>,
}

impl HttpConfig {
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(ENV_URL).ok()?;
        Some(HttpConfig {
            url,
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".to_string()),
            token: std::env::var(ENV_TOKEN).ok().filter(|t| !t.is_empty()),
        })
    }
}

fn system_preamble(purpose: Purpose) -> &'static str {
    match purpose {
        Purpose::HazardAndPlan => {
            "You assist an autonomous vehicle whose cameras have masked regions. \
             Infer which objects may hide in the masked regions and how they move, \
             then choose a planning strategy. Answer with a single JSON object."
        }
        Purpose::ShortTermMotion => {
            "You plan short-term motion for an autonomous vehicle as condition-action pairs. \
             Answer with a single JSON object."
        }
        Purpose::SafetyConstraints => {
            "You set vehicle safety limits in SI units for the current driving conditions. \
             Answer with a single JSON object."
        }
    }
}

/// Blocking chat-completions client. Temperature is pinned to 0.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    config: HttpConfig,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        HttpBackend { config }
    }

    pub fn request_body(&self, req: &BackendRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system_preamble(req.purpose)},
                {"role": "user", "content": req.prompt},
            ],
            "temperature": 0,
        })
    }
}

fn map_transport(err: ureq::Error, timeout_ms: u64) -> BackendError {
    match err {
        ureq::Error::Timeout(_) => BackendError::Timeout(timeout_ms),
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => BackendError::Timeout(timeout_ms),
        other => BackendError::TransportFailure(other.to_string()),
    }
}

impl ReasoningBackend for HttpBackend {
    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let timeout_ms = req.timeout_ms.max(1);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let started = Instant::now();

        let mut builder = agent.post(&self.config.url);
        if let Some(token) = &self.config.token {
            builder = builder.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = builder
            .header("Content-Type", "application/json")
            .send(self.request_body(req).to_string())
            .map_err(|e| map_transport(e, timeout_ms))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| map_transport(e, timeout_ms))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::TransportFailure(format!("HTTP {status}: {body}")));
        }

        let envelope: Value = serde_json::from_str(&body)
            .map_err(|e| BackendError::schema(0, "$", format!("completion envelope: {e}")))?;
        let content = envelope
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::schema(0, "choices[0].message.content", "missing completion text"))?
            .to_string();
        let parsed = parse_structured(&content, req.purpose)?;
        Ok(BackendResponse {
            raw: content,
            parsed,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
