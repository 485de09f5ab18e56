//! JSON-over-HTTP backends: remote classifier and generation endpoints.
//!
//! Wire contract: `POST {endpoint}/classify` with `{"texts": [...]}` returns
//! `{"logits": [[...], ...]}`; `POST {endpoint}/generate` with
//! `{"prompt": ..., "max_new_tokens": ..., "temperature": 0}` returns
//! `{"text": ...}`. Any non-200 status, transport failure or malformed body
//! is an error; requests are retried up to the configured count.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use sentsel_core::inference::{ClientError, GenerationClient};
use sentsel_core::scoring::{BackendCaps, BackendError, ScorerBackend};

/// Connection settings shared by both endpoint kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL, e.g. `http://localhost:8080`; the route is appended.
    pub endpoint: String,
    pub timeout: Duration,
    /// Additional attempts after the first failure.
    pub retries: u32,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), timeout: Duration::from_secs(30), retries: 2 }
    }

    fn url(&self, route: &str) -> String {
        format!("{}/{}", self.endpoint.trim_end_matches('/'), route)
    }

    fn client(&self) -> Result<reqwest::blocking::Client, String> {
        reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| e.to_string())
    }
}

/// Issues `request` up to `1 + retries` times, returning the first success.
fn with_retries<T>(
    retries: u32,
    mut request: impl FnMut() -> Result<T, String>,
) -> Result<T, String> {
    let mut last_error = String::new();
    for _ in 0..=retries {
        match request() {
            Ok(value) => return Ok(value),
            Err(message) => last_error = message,
        }
    }
    Err(last_error)
}

fn post_json<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &Req,
) -> Result<Resp, String> {
    let response = client.post(url).json(body).send().map_err(|e| format!("{url}: {e}"))?;
    let status = response.status();
    if !status.is_success() {
        return Err(format!("{url}: status {status}"));
    }
    response.json::<Resp>().map_err(|e| format!("{url}: malformed response body: {e}"))
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct ClassifyResponse {
    logits: Vec<Vec<f64>>,
}

/// A classifier served over HTTP.
pub struct HttpScorerBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    caps: BackendCaps,
    num_classes: usize,
}

impl HttpScorerBackend {
    /// Builds a backend; `num_classes` and the capability descriptor are
    /// declared by the caller since the wire protocol does not expose them.
    pub fn new(config: HttpConfig, caps: BackendCaps, num_classes: usize) -> Result<Self, BackendError> {
        let client = config.client().map_err(BackendError::new)?;
        Ok(Self { config, client, caps, num_classes })
    }
}

impl ScorerBackend for HttpScorerBackend {
    fn capabilities(&self) -> BackendCaps {
        self.caps
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn classify(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        let url = self.config.url("classify");
        let response: ClassifyResponse = with_retries(self.config.retries, || {
            post_json(&self.client, &url, &ClassifyRequest { texts })
        })
        .map_err(BackendError::new)?;
        if response.logits.len() != texts.len() {
            return Err(BackendError::new(format!(
                "{url}: {} logit rows for {} texts",
                response.logits.len(),
                texts.len()
            )));
        }
        if let Some(row) = response.logits.iter().find(|r| r.len() != self.num_classes) {
            return Err(BackendError::new(format!(
                "{url}: logit row of width {} for a {}-class backend",
                row.len(),
                self.num_classes
            )));
        }
        Ok(response.logits)
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    max_new_tokens: usize,
    /// Always 0: decoding must be greedy for reproducible votes.
    temperature: f64,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// A text-generation model served over HTTP.
pub struct HttpGenerationClient {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpGenerationClient {
    pub fn new(config: HttpConfig) -> Result<Self, ClientError> {
        let client = config.client().map_err(ClientError::new)?;
        Ok(Self { config, client })
    }
}

impl GenerationClient for HttpGenerationClient {
    fn generate(&self, prompt: &str, max_new_tokens: usize) -> Result<String, ClientError> {
        let url = self.config.url("generate");
        let response: GenerateResponse = with_retries(self.config.retries, || {
            post_json(&self.client, &url, &GenerateRequest { prompt, max_new_tokens, temperature: 0.0 })
        })
        .map_err(ClientError::new)?;
        Ok(response.text)
    }
}
