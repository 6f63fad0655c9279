//! Chat-completions style HTTP provider.

use std::time::Duration;

use serde_json::{json, Value};

use super::{DraftRequest, Provider, ProviderError};
use crate::constraint::Diagnostic;

const DRAFT_SYSTEM: &str = "You turn vehicle software requirements into an instance model. \
Answer with one fenced block tagged model holding the instance-model JSON \
(keys functions, hardware, links, edges) and one fenced block tagged constraints \
holding invariants of the form 'context <Type> inv <Name>: <expr>'. \
Use only functions from the catalogue and the given hardware.";

const SUGGEST_SYSTEM: &str = "You explain model verification failures to an engineer. \
For each diagnostic write one line with a concrete, actionable change.";

#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_tokens: u32,
}

/// Request payload for one chat exchange.
pub fn build_request_body(model: &str, system: &str, user: &str, max_tokens: u32) -> Value {
    json!({
        "model": model,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
        "temperature": 0,
        "max_tokens": max_tokens,
    })
}

/// `choices[0].message.content` of a response body.
pub fn parse_response(body: &str) -> Result<String, ProviderError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ProviderError::Response(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Response("missing choices[0].message.content".into()))
}

pub(crate) fn draft_prompt(request: &DraftRequest<'_>) -> String {
    let catalogue = serde_json::to_string_pretty(request.catalogue).unwrap_or_default();
    let hardware = serde_json::to_string_pretty(request.hardware).unwrap_or_default();
    let mut prompt = format!(
        "Requirements:\n{}\n\nFunction catalogue:\n{catalogue}\n\nHardware:\n{hardware}\n",
        request.requirements.trim_end()
    );
    if let Some(feedback) = request.feedback {
        prompt.push_str(&format!("\nYour previous draft failed verification:\n{feedback}\nReturn a corrected draft.\n"));
    }
    prompt
}

impl HttpProvider {
    fn exchange(&self, system: &str, user: &str) -> Result<String, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let mut req = client
            .post(&self.endpoint)
            .json(&build_request_body(&self.model, system, user, self.max_tokens));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("HTTP {status}")));
        }
        parse_response(&body)
    }
}

impl Provider for HttpProvider {
    fn draft(&self, request: &DraftRequest<'_>) -> Result<String, ProviderError> {
        self.exchange(DRAFT_SYSTEM, &draft_prompt(request))
    }

    fn suggest(&self, diagnostics: &[Diagnostic]) -> Result<String, ProviderError> {
        let listing = serde_json::to_string_pretty(diagnostics).unwrap_or_default();
        self.exchange(SUGGEST_SYSTEM, &format!("Diagnostics:\n{listing}\n"))
    }
}
