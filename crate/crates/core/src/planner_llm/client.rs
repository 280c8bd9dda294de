use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::Prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerEndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    /// First retry delay; doubles after every failure.
    pub backoff_ms: u64,
    pub image_scale: u32,
}

impl Default for PlannerEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "MCOX_API_KEY".into(),
            timeout_s: 120.0,
            max_retries: 3,
            backoff_ms: 500,
            image_scale: super::DEFAULT_IMAGE_SCALE,
        }
    }
}

impl PlannerEndpointConfig {
    pub fn validate(&self) -> Result<(), EndpointError> {
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err(EndpointError::Config("timeout_s must be positive".into()));
        }
        if self.base_url.trim().is_empty() || self.model.trim().is_empty() {
            return Err(EndpointError::Config("base_url and model must be set".into()));
        }
        if self.image_scale == 0 {
            return Err(EndpointError::Config("image_scale must be at least 1".into()));
        }
        Ok(())
    }

    pub fn endpoint_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndpointError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("environment variable {0} with the API key is not set")]
    MissingKey(String),
    #[error("endpoint rejected the request with status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),
}

/// A failed exchange: either no HTTP response at all or a status code with
/// its body.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportFailure {
    Io(String),
    Status(u16, String),
}

pub trait Transport {
    /// POSTs `body` as JSON and returns the response body on 2xx.
    fn post_json(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<String, TransportFailure>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<String, TransportFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent
            .post(url)
            .header("Authorization", &format!("Bearer {api_key}"))
            .send_json(body)
            .map_err(|e| TransportFailure::Io(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportFailure::Io(e.to_string()))?;
        if (200..300).contains(&status) {
            Ok(text)
        } else {
            Err(TransportFailure::Status(status, text))
        }
    }
}

/// Chat-completions request: one user message with the prompt text and the
/// map image as a data URL.
pub fn request_body(cfg: &PlannerEndpointConfig, prompt: &Prompt) -> Value {
    json!({
        "model": cfg.model,
        "messages": [{
            "role": "user",
            "content": [
                {"type": "text", "text": prompt.text},
                {"type": "image_url", "image_url": {"url": prompt.image_data_url()}}
            ]
        }]
    })
}

/// Pulls the assistant text out of a chat-completions response body.
pub fn extract_message(body: &str) -> Result<String, EndpointError> {
    let v: Value = serde_json::from_str(body).map_err(|e| EndpointError::BadResponse(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(EndpointError::BadResponse("no choices[0].message.content".into())),
    }
}

fn transient(f: &TransportFailure) -> bool {
    match f {
        TransportFailure::Io(_) => true,
        TransportFailure::Status(s, _) => *s >= 500 || *s == 429,
    }
}

/// Sends the prompt and returns the assistant text. Transport errors, 429
/// and 5xx responses are retried with exponential backoff up to
/// `max_retries` times; other statuses fail at once.
pub fn query_endpoint(
    cfg: &PlannerEndpointConfig,
    prompt: &Prompt,
    transport: &dyn Transport,
) -> Result<String, EndpointError> {
    cfg.validate()?;
    let key = std::env::var(&cfg.api_key_env)
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| EndpointError::MissingKey(cfg.api_key_env.clone()))?;
    let body = request_body(cfg, prompt);
    let url = cfg.endpoint_url();
    let timeout = Duration::from_secs_f64(cfg.timeout_s);
    let mut delay = cfg.backoff_ms;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let failure = match transport.post_json(&url, &key, &body, timeout) {
            Ok(text) => return extract_message(&text),
            Err(f) => f,
        };
        if !transient(&failure) {
            let TransportFailure::Status(status, body) = failure else {
                unreachable!()
            };
            return Err(EndpointError::Status { status, body });
        }
        if attempts > cfg.max_retries {
            let last = match failure {
                TransportFailure::Io(m) => m,
                TransportFailure::Status(s, b) => format!("status {s}: {b}"),
            };
            return Err(EndpointError::RetriesExhausted { attempts, last });
        }
        thread::sleep(Duration::from_millis(delay));
        delay = delay.saturating_mul(2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    struct Fake {
        replies: RefCell<Vec<Result<String, TransportFailure>>>,
        calls: RefCell<usize>,
    }

    impl Fake {
        fn new(replies: Vec<Result<String, TransportFailure>>) -> Self {
            Self {
                replies: RefCell::new(replies),
                calls: RefCell::new(0),
            }
        }
    }

    impl Transport for Fake {
        fn post_json(&self, _u: &str, _k: &str, _b: &Value, _t: Duration) -> Result<String, TransportFailure> {
            *self.calls.borrow_mut() += 1;
            self.replies.borrow_mut().remove(0)
        }
    }

    fn ok(text: &str) -> Result<String, TransportFailure> {
        Ok(json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string())
    }

    fn cfg(var: &str) -> PlannerEndpointConfig {
        PlannerEndpointConfig {
            api_key_env: var.into(),
            backoff_ms: 1,
            ..Default::default()
        }
    }

    fn prompt() -> Prompt {
        Prompt {
            text: "hi".into(),
            image_base64: "AAAA".into(),
        }
    }

    #[test]
    fn returns_text() {
        std::env::set_var("MCOX_TEST_KEY_A", "k");
        let t = Fake::new(vec![ok("ROBOT 0: (1,1)")]);
        assert_eq!(
            query_endpoint(&cfg("MCOX_TEST_KEY_A"), &prompt(), &t).unwrap(),
            "ROBOT 0: (1,1)"
        );
    }

    #[test]
    fn retries_transient_errors() {
        std::env::set_var("MCOX_TEST_KEY_B", "k");
        let t = Fake::new(vec![
            Err(TransportFailure::Status(500, "oops".into())),
            Err(TransportFailure::Status(503, "busy".into())),
            ok("done"),
        ]);
        assert_eq!(query_endpoint(&cfg("MCOX_TEST_KEY_B"), &prompt(), &t).unwrap(), "done");
        assert_eq!(*t.calls.borrow(), 3);

        let t = Fake::new(vec![Err(TransportFailure::Io("reset".into())); 4]);
        let err = query_endpoint(&cfg("MCOX_TEST_KEY_B"), &prompt(), &t).unwrap_err();
        assert!(matches!(err, EndpointError::RetriesExhausted { attempts: 4, .. }));

        let t = Fake::new(vec![Err(TransportFailure::Status(401, "no".into()))]);
        let err = query_endpoint(&cfg("MCOX_TEST_KEY_B"), &prompt(), &t).unwrap_err();
        assert!(matches!(err, EndpointError::Status { status: 401, .. }));
    }

    #[test]
    fn missing_key_fails_before_network() {
        let t = Fake::new(vec![]);
        let err = query_endpoint(&cfg("MCOX_TEST_KEY_UNSET"), &prompt(), &t).unwrap_err();
        assert_eq!(err, EndpointError::MissingKey("MCOX_TEST_KEY_UNSET".into()));
        assert_eq!(*t.calls.borrow(), 0);
    }

    #[test]
    fn body_has_text_and_image() {
        let b = request_body(&PlannerEndpointConfig::default(), &prompt());
        assert_eq!(b["model"], "gpt-4o");
        assert_eq!(b["messages"][0]["content"][0]["text"], "hi");
        assert_eq!(
            b["messages"][0]["content"][1]["image_url"]["url"],
            "data:image/png;base64,AAAA"
        );
    }
}
