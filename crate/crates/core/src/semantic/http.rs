use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};
use tracing::warn;
use ureq::Agent;

use super::{parse_reply, SemanticBackend, SemanticTask, SemanticVerdict};
use crate::error::SemanticError;

const SYSTEM_PROMPT: &str = "You are a software supply chain security reviewer. \
Answer with the single structured line requested and nothing else.";

pub const ENV_BASE_URL: &str = "HSBR_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "HSBR_LLM_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Root of the OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub max_in_flight: usize,
    pub timeout: Duration,
    /// Transport attempts per request.
    pub max_attempts: u32,
}

impl HttpBackendConfig {
    /// Reads base URL and key from the environment.
    pub fn from_env(model: impl Into<String>) -> Self {
        HttpBackendConfig {
            base_url: std::env::var(ENV_BASE_URL)
                .unwrap_or_else(|_| "https://api.openai.com/v1".to_string()),
            api_key: std::env::var(ENV_API_KEY).ok(),
            model: model.into(),
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
            max_attempts: 3,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate poisoned");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate poisoned") += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpBackend {
    agent: Agent,
    config: HttpBackendConfig,
    gate: Gate,
    name: String,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        HttpBackend {
            agent,
            gate: Gate {
                free: Mutex::new(config.max_in_flight.max(1)),
                cv: Condvar::new(),
            },
            name: format!("http:{}", config.model),
            config,
        }
    }

    fn complete(&self, prompt: &str) -> Result<String, SemanticError> {
        let _permit = self.gate.acquire();
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": prompt},
            ],
        });
        let mut last = String::new();
        for attempt in 1..=self.config.max_attempts.max(1) {
            let mut req = self.agent.post(&url).header("Content-Type", "application/json");
            if let Some(key) = &self.config.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            match req.send(body.to_string()) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    match status {
                        200..=299 => {
                            let text = resp
                                .body_mut()
                                .read_to_string()
                                .map_err(|e| SemanticError::Unavailable(e.to_string()))?;
                            let value: Value = serde_json::from_str(&text)
                                .map_err(|e| SemanticError::Unavailable(format!("bad response: {e}")))?;
                            return value
                                .pointer("/choices/0/message/content")
                                .and_then(Value::as_str)
                                .map(String::from)
                                .ok_or_else(|| {
                                    SemanticError::Unavailable("response has no message content".into())
                                });
                        }
                        401 | 403 => {
                            return Err(SemanticError::Unavailable(format!(
                                "authentication rejected (HTTP {status})"
                            )))
                        }
                        _ => last = format!("HTTP {status}"),
                    }
                }
                Err(e) => last = e.to_string(),
            }
            warn!(attempt, error = %last, "semantic request failed");
        }
        Err(SemanticError::Unavailable(last))
    }
}

impl SemanticBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    /// Sends the rendered prompt; an unparseable reply is retried once and
    /// then replaced by the low-confidence fallback.
    fn judge(&self, task: &SemanticTask) -> Result<SemanticVerdict, SemanticError> {
        let prompt = task.render_prompt()?;
        for _ in 0..2 {
            let reply = self.complete(&prompt)?;
            if let Some(v) = parse_reply(&reply, task.kind()) {
                return Ok(v);
            }
        }
        Ok(SemanticVerdict::fallback(task, "unparseable backend reply"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::VerdictLabel;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves `replies` in order (the last one repeats) and counts requests.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, Arc<Mutex<Vec<String>>>) {
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let addr = format!("http://{}", server.server_addr().to_ip().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let (h, b) = (hits.clone(), bodies.clone());
        std::thread::spawn(move || {
            for mut req in server.incoming_requests() {
                let i = h.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                b.lock().unwrap().push(body);
                let (status, content) = replies[i.min(replies.len() - 1)].clone();
                let payload = json!({"choices": [{"message": {"content": content}}]}).to_string();
                let _ = req.respond(tiny_http::Response::from_string(payload).with_status_code(status));
            }
        });
        (addr, hits, bodies)
    }

    fn backend(base: String) -> HttpBackend {
        HttpBackend::new(HttpBackendConfig {
            base_url: base,
            api_key: Some("k".into()),
            model: "test-model".into(),
            max_in_flight: 2,
            timeout: Duration::from_secs(5),
            max_attempts: 2,
        })
    }

    fn task() -> SemanticTask {
        SemanticTask::PrConsistency {
            title: "fix typo".into(),
            body: "small".into(),
            diff: vec![],
        }
    }

    #[test]
    fn parses_structured_reply() {
        let (base, hits, bodies) = serve(vec![(
            200,
            "label=inconsistent; confidence=0.7; rationale=adds blob".into(),
        )]);
        let v = backend(base).judge(&task()).unwrap();
        assert_eq!(v.label, VerdictLabel::Inconsistent);
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        let sent: Value = serde_json::from_str(&bodies.lock().unwrap()[0]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert!(sent["messages"][1]["content"].as_str().unwrap().contains("Title: fix typo"));
    }

    #[test]
    fn unparseable_retried_once_then_fallback() {
        let (base, hits, _) = serve(vec![(200, "no idea".into())]);
        let v = backend(base).judge(&task()).unwrap();
        assert!(v.degraded);
        assert_eq!(v.label, VerdictLabel::Consistent);
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn unparseable_then_good() {
        let (base, hits, _) = serve(vec![
            (200, "hmm".into()),
            (200, "label=consistent; confidence=0.9; rationale=ok".into()),
        ]);
        let v = backend(base).judge(&task()).unwrap();
        assert!(!v.degraded);
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn server_errors_become_unavailable() {
        let (base, hits, _) = serve(vec![(500, String::new())]);
        let err = backend(base).judge(&task()).unwrap_err();
        assert!(matches!(err, SemanticError::Unavailable(_)));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let (base, hits, _) = serve(vec![(401, String::new())]);
        assert!(backend(base).judge(&task()).is_err());
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }
}
