//! Chat-completion HTTP backend.
//!
//! Speaks the widely used chat JSON shape: POST `{model, messages,
//! temperature, max_tokens}`, read `choices[0].message.content`. Rate
//! limits (429), server errors (5xx), and transport failures retry with
//! exponential backoff; auth failures and other 4xx abort the run. A
//! well-formed 200 whose body does not carry the expected JSON shape is
//! returned verbatim so the response parser can classify it instead of
//! the transport layer guessing.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::backend::{short_digest, Backend, BackendError, BackendRequest, BackendResponse};

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Full URL of the completion endpoint.
    pub endpoint: String,
    /// Model name sent in the request body.
    pub model: String,
    /// Bearer token, if the endpoint wants one. Not part of the digest.
    pub api_token: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after the first (0 = never retry).
    pub max_retries: u32,
    /// First retry delay; doubles each retry.
    pub initial_backoff: Duration,
    /// Requests in flight across all worker threads.
    pub max_in_flight: usize,
    /// Completion budget sent as `max_tokens`.
    pub max_tokens: u32,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            api_token: None,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            max_in_flight: 4,
            max_tokens: 512,
        }
    }
}

/// Counting gate bounding concurrent requests.
struct Gate {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(limit: usize) -> Self {
        Self {
            slots: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> GatePass<'_> {
        let mut slots = self.slots.lock().expect("gate poisoned");
        while *slots == 0 {
            slots = self.freed.wait(slots).expect("gate poisoned");
        }
        *slots -= 1;
        GatePass { gate: self }
    }
}

struct GatePass<'a> {
    gate: &'a Gate,
}

impl Drop for GatePass<'_> {
    fn drop(&mut self) {
        let mut slots = self.gate.slots.lock().expect("gate poisoned");
        *slots += 1;
        self.gate.freed.notify_one();
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

enum Attempt {
    Done(String),
    Retry(String),
    Abort(String),
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Fatal(format!("http client: {e}")))?;
        Ok(Self {
            gate: Gate::new(config.max_in_flight),
            config,
            client,
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut request = self.client.post(&self.config.endpoint).json(body);
        if let Some(token) = &self.config.api_token {
            request = request.bearer_auth(token);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if status.is_success() {
            // Pull the completion text out; hand the raw body downstream
            // if the shape is unexpected.
            let content = serde_json::from_str::<Value>(&text).ok().and_then(|v| {
                v.pointer("/choices/0/message/content")
                    .and_then(Value::as_str)
                    .map(str::to_string)
            });
            return Attempt::Done(content.unwrap_or(text));
        }
        let code = status.as_u16();
        match code {
            401 | 403 => Attempt::Abort(format!("authentication rejected (status {code})")),
            429 => Attempt::Retry(format!("rate limited (status {code})")),
            500..=599 => Attempt::Retry(format!("server error (status {code}): {text}")),
            _ => Attempt::Abort(format!("request rejected (status {code}): {text}")),
        }
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn config_digest(&self) -> String {
        short_digest(&[
            b"http",
            self.config.endpoint.as_bytes(),
            self.config.model.as_bytes(),
            self.config.max_tokens.to_string().as_bytes(),
        ])
    }

    fn generate(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.prompt.system_text},
                {"role": "user", "content": request.prompt.user_text},
            ],
            "temperature": 0,
            "max_tokens": self.config.max_tokens,
        });
        let _pass = self.gate.acquire();
        let mut backoff = self.config.initial_backoff;
        let mut last_failure = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.attempt(&body) {
                Attempt::Done(text) => {
                    return Ok(BackendResponse {
                        text,
                        retries: attempt,
                    })
                }
                Attempt::Abort(message) => return Err(BackendError::Fatal(message)),
                Attempt::Retry(message) => {
                    log::debug!(
                        "query {} window {}: attempt {} failed: {message}",
                        request.qid,
                        request.window_start,
                        attempt + 1
                    );
                    last_failure = message;
                }
            }
        }
        Err(BackendError::Transport(format!(
            "gave up after {} attempts: {last_failure}",
            self.config.max_retries + 1
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt_builder::{render, PromptWindow, RenderOptions};
    use std::io::{Read, Write};
    use std::net::{SocketAddr, TcpListener, TcpStream};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::thread;

    fn read_request(stream: &mut TcpStream) -> String {
        let mut bytes = Vec::new();
        let mut buf = [0u8; 1024];
        let header_end = loop {
            let n = stream.read(&mut buf).unwrap();
            assert!(n > 0, "client closed before finishing request");
            bytes.extend_from_slice(&buf[..n]);
            if let Some(pos) = bytes.windows(4).position(|w| w == b"\r\n\r\n") {
                break pos + 4;
            }
        };
        let head = String::from_utf8_lossy(&bytes[..header_end]).to_string();
        let content_length: usize = head
            .lines()
            .find_map(|l| {
                let (name, value) = l.split_once(':')?;
                name.eq_ignore_ascii_case("content-length")
                    .then(|| value.trim().parse().ok())?
            })
            .unwrap_or(0);
        while bytes.len() < header_end + content_length {
            let n = stream.read(&mut buf).unwrap();
            assert!(n > 0, "client closed mid-body");
            bytes.extend_from_slice(&buf[..n]);
        }
        String::from_utf8_lossy(&bytes).to_string()
    }

    /// Serve one canned (status, body) per connection, in order; return
    /// the raw requests observed.
    fn stub_server(responses: Vec<(u16, String)>) -> (SocketAddr, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                seen.push(read_request(&mut stream));
                let reason = match status {
                    200 => "OK",
                    401 => "Unauthorized",
                    429 => "Too Many Requests",
                    500 => "Internal Server Error",
                    _ => "Other",
                };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\n\
                     Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
            seen
        });
        (addr, handle)
    }

    fn completion_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn test_config(addr: SocketAddr) -> HttpBackendConfig {
        HttpBackendConfig {
            endpoint: format!("http://{addr}/v1/chat/completions"),
            model: "test-model".into(),
            api_token: Some("secret-token".into()),
            timeout: Duration::from_secs(5),
            max_retries: 3,
            initial_backoff: Duration::from_millis(1),
            max_in_flight: 2,
            max_tokens: 128,
        }
    }

    fn sample_request() -> (PromptWindow, crate::prompt_builder::RenderedPrompt) {
        let window = PromptWindow::new(
            "q7",
            "which backend is this",
            vec![
                ("d1".into(), "first passage".into()),
                ("d2".into(), "second passage".into()),
            ],
        )
        .unwrap();
        let prompt = render(&window, &RenderOptions::default()).unwrap();
        (window, prompt)
    }

    fn generate_against(
        addr: SocketAddr,
        overrides: impl FnOnce(&mut HttpBackendConfig),
    ) -> Result<BackendResponse, BackendError> {
        let mut config = test_config(addr);
        overrides(&mut config);
        let backend = HttpBackend::new(config).unwrap();
        let (window, prompt) = sample_request();
        backend.generate(&BackendRequest {
            qid: "q7",
            window_start: 0,
            prompt: &prompt,
            window: &window,
        })
    }

    #[test]
    fn success_returns_completion_text() {
        let (addr, server) = stub_server(vec![(200, completion_body("[2] > [1]"))]);
        let response = generate_against(addr, |_| {}).unwrap();
        assert_eq!(response.text, "[2] > [1]");
        assert_eq!(response.retries, 0);

        let seen = server.join().unwrap();
        assert_eq!(seen.len(), 1);
        let request = &seen[0];
        assert!(request.starts_with("POST /v1/chat/completions HTTP/1.1\r\n"));
        assert!(request
            .to_ascii_lowercase()
            .contains("authorization: bearer secret-token"));
        let body_start = request.find("\r\n\r\n").unwrap() + 4;
        let body: Value = serde_json::from_str(&request[body_start..]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0);
        assert_eq!(body["max_tokens"], 128);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["role"], "user");
        let user = body["messages"][1]["content"].as_str().unwrap();
        assert!(user.contains("which backend is this"));
        assert!(user.contains("[1] first passage"));
    }

    #[test]
    fn rate_limit_retries_then_succeeds() {
        let (addr, server) = stub_server(vec![
            (429, "{\"error\": \"slow down\"}".into()),
            (429, "{\"error\": \"slow down\"}".into()),
            (200, completion_body("[1] > [2]")),
        ]);
        let response = generate_against(addr, |_| {}).unwrap();
        assert_eq!(response.text, "[1] > [2]");
        assert_eq!(response.retries, 2);
        assert_eq!(server.join().unwrap().len(), 3);
    }

    #[test]
    fn persistent_server_errors_become_transport_failures() {
        let (addr, server) = stub_server(vec![
            (500, "boom".into()),
            (500, "boom".into()),
            (500, "boom".into()),
        ]);
        let err = generate_against(addr, |c| c.max_retries = 2).unwrap_err();
        assert!(matches!(err, BackendError::Transport(_)), "got {err:?}");
        assert_eq!(server.join().unwrap().len(), 3);
    }

    #[test]
    fn auth_failure_is_fatal_and_not_retried() {
        let (addr, server) = stub_server(vec![(401, "{\"error\": \"no\"}".into())]);
        let err = generate_against(addr, |_| {}).unwrap_err();
        assert!(matches!(err, BackendError::Fatal(_)), "got {err:?}");
        assert_eq!(server.join().unwrap().len(), 1);
    }

    #[test]
    fn unexpected_success_body_passes_through_verbatim() {
        // The classifier downstream decides what to do with it; transport
        // must not invent a failure out of a 200.
        let (addr, _server) = stub_server(vec![(200, "I cannot rank these passages.".into())]);
        let response = generate_against(addr, |_| {}).unwrap();
        assert_eq!(response.text, "I cannot rank these passages.");
    }

    #[test]
    fn gate_bounds_concurrency() {
        let gate = Arc::new(Gate::new(2));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (gate, in_flight, peak) = (gate.clone(), in_flight.clone(), peak.clone());
                thread::spawn(move || {
                    let _pass = gate.acquire();
                    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(5));
                    in_flight.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2, "gate leaked concurrency");
        assert_eq!(in_flight.load(Ordering::SeqCst), 0);
    }
}
