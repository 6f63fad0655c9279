//! Drafting instance models and constraints from free-text requirements.
//!
//! A [`Provider`] turns requirements plus catalogue and hardware into a
//! response carrying two fenced blocks, one tagged `model` and one tagged
//! `constraints`. [`generate_artifacts`] verifies each draft and feeds the
//! diagnostics back until a draft passes or the round budget runs out.

mod http;
mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::{
    builtin_rules, evaluate, explain, parse_constraints, ConstraintSet, Diagnostic, EvaluationReport,
};
use crate::model::{load_instance_model, FunctionSpec, HardwareNode, InstanceModel, Link};

pub use http::{build_request_body, parse_response, HttpProvider};
pub use mock::{MockFault, MockProvider};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("provider request failed: {0}")]
    Transport(String),
    #[error("provider response malformed: {0}")]
    Response(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("draft rejected after {} round(s)", .0.rounds.len())]
    Rejected(GenerationTrace),
    #[error("invalid generation input: {0}")]
    Input(String),
}

/// Hardware graph supplied alongside the catalogue.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSpec {
    #[serde(default)]
    pub hardware: Vec<HardwareNode>,
    #[serde(default)]
    pub links: Vec<Link>,
}

/// Everything a provider sees when drafting.
#[derive(Debug, Clone, Copy)]
pub struct DraftRequest<'a> {
    pub requirements: &'a str,
    pub catalogue: &'a [FunctionSpec],
    pub hardware: &'a HardwareSpec,
    /// 1-based.
    pub round: usize,
    /// Feedback on the previous round's draft.
    pub feedback: Option<&'a str>,
}

pub trait Provider {
    /// Returns response text containing `model` and `constraints` fences.
    fn draft(&self, request: &DraftRequest<'_>) -> Result<String, ProviderError>;

    /// Rewrites diagnostics as feedback text.
    fn suggest(&self, diagnostics: &[Diagnostic]) -> Result<String, ProviderError>;
}

/// Extracts the body of the single fenced block tagged `tag`.
///
/// The body is returned byte-for-byte: everything after the newline ending
/// the opening fence up to the newline before the closing fence.
pub fn extract_fenced(content: &str, tag: &str) -> Result<String, ProviderError> {
    let opening = format!("```{tag}");
    let mut found: Option<String> = None;
    let mut lines = content.split_inclusive('\n');
    while let Some(line) = lines.next() {
        if line.trim_end_matches(['\r', '\n']) != opening {
            continue;
        }
        let mut body = String::new();
        let mut closed = false;
        for inner in lines.by_ref() {
            if inner.trim_end_matches(['\r', '\n']) == "```" {
                closed = true;
                break;
            }
            body.push_str(inner);
        }
        if !closed {
            return Err(ProviderError::Response(format!("unterminated '{tag}' block")));
        }
        if found.is_some() {
            return Err(ProviderError::Response(format!("more than one '{tag}' block")));
        }
        if body.ends_with('\n') {
            body.pop();
            if body.ends_with('\r') {
                body.pop();
            }
        }
        found = Some(body);
    }
    found.ok_or_else(|| ProviderError::Response(format!("no '{tag}' block")))
}

/// Mock rendering of diagnostics: `message suggestion`, one line each,
/// sorted by constraint then element.
pub fn template_feedback(diagnostics: &[Diagnostic]) -> String {
    let mut sorted: Vec<&Diagnostic> = diagnostics.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.constraint_id, &a.context_element_id).cmp(&(&b.constraint_id, &b.context_element_id))
    });
    sorted
        .iter()
        .map(|d| format!("{} {}\n", d.message, d.suggestion))
        .collect()
}

/// Feedback text for a draft; never fails, falling back to the template form.
pub fn translate_diagnostics(diagnostics: &[Diagnostic], provider: &dyn Provider) -> String {
    if diagnostics.is_empty() {
        return String::new();
    }
    match provider.suggest(diagnostics) {
        Ok(text) if !text.trim().is_empty() => text,
        _ => template_feedback(diagnostics),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRound {
    pub round: usize,
    /// Model document as drafted; empty when the response had none.
    pub draft: String,
    pub constraints: String,
    /// One-line verification outcome.
    pub summary: String,
    /// Text sent back to the provider; empty on acceptance.
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationTrace {
    pub rounds: Vec<TraceRound>,
    pub status: TraceStatus,
}

enum RoundOutcome {
    Accepted(InstanceModel, ConstraintSet),
    Failed { summary: String, feedback: String },
}

fn catalogue_violations(model: &InstanceModel, catalogue: &[FunctionSpec]) -> Vec<String> {
    model
        .functions
        .iter()
        .filter(|f| !catalogue.iter().any(|c| c.id == f.id))
        .map(|f| format!("function '{}' is not in the catalogue", f.id))
        .collect()
}

fn verify(
    model_doc: &str,
    constraints_src: &str,
    catalogue: &[FunctionSpec],
    provider: &dyn Provider,
) -> RoundOutcome {
    let model = match load_instance_model(model_doc) {
        Ok(m) => m,
        Err(e) => {
            let text = format!("The drafted model was rejected: {e}.\n");
            return RoundOutcome::Failed {
                summary: e.to_string(),
                feedback: text,
            };
        }
    };
    let unknown = catalogue_violations(&model, catalogue);
    if !unknown.is_empty() {
        let feedback: String = unknown
            .iter()
            .map(|u| format!("Unknown catalogue id: {u}; use only catalogue functions.\n"))
            .collect();
        return RoundOutcome::Failed {
            summary: format!("unknown catalogue id: {}", unknown.join("; ")),
            feedback,
        };
    }
    let constraints = match parse_constraints(constraints_src) {
        Ok(c) => c,
        Err(e) => {
            return RoundOutcome::Failed {
                summary: format!("constraint parse error: {e}"),
                feedback: format!("The drafted constraints do not parse: {e}.\n"),
            }
        }
    };
    let report = full_report(&constraints, &model);
    if report.all_hold() {
        return RoundOutcome::Accepted(model, constraints);
    }
    let diagnostics = explain(&report, &model);
    let failing: Vec<String> = diagnostics
        .iter()
        .map(|d| format!("{}@{}", d.constraint_id, d.context_element_id))
        .collect();
    RoundOutcome::Failed {
        summary: format!("{} failing check(s): {}", failing.len(), failing.join(", ")),
        feedback: translate_diagnostics(&diagnostics, provider),
    }
}

/// Evaluates the built-in rule pack and `generated` side by side.
pub fn full_report(generated: &ConstraintSet, model: &InstanceModel) -> EvaluationReport {
    let mut report = evaluate(&builtin_rules(), model);
    report.entries.extend(evaluate(generated, model).entries);
    report
}

/// Drafts, verifies and repairs until acceptance or `max_rounds` attempts.
pub fn generate_artifacts(
    requirements: &str,
    catalogue: &[FunctionSpec],
    hardware: &HardwareSpec,
    provider: &dyn Provider,
    max_rounds: usize,
) -> Result<(InstanceModel, ConstraintSet, GenerationTrace), LlmError> {
    if requirements.trim().is_empty() {
        return Err(LlmError::Input("requirements are empty".into()));
    }
    if max_rounds == 0 {
        return Err(LlmError::Input("max_rounds must be at least 1".into()));
    }
    for (i, f) in catalogue.iter().enumerate() {
        if catalogue[..i].iter().any(|g| g.id == f.id) {
            return Err(LlmError::Input(format!("duplicate catalogue id '{}'", f.id)));
        }
    }
    let mut rounds = Vec::new();
    let mut feedback: Option<String> = None;
    for round in 1..=max_rounds {
        let request = DraftRequest {
            requirements,
            catalogue,
            hardware,
            round,
            feedback: feedback.as_deref(),
        };
        let response = provider.draft(&request)?;
        let (draft, constraints, outcome) = match (
            extract_fenced(&response, "model"),
            extract_fenced(&response, "constraints"),
        ) {
            (Ok(m), Ok(c)) => {
                let outcome = verify(&m, &c, catalogue, provider);
                (m, c, outcome)
            }
            (m, c) => {
                let err = m.err().or(c.err()).unwrap();
                let outcome = RoundOutcome::Failed {
                    summary: err.to_string(),
                    feedback: format!("The response could not be read: {err}.\n"),
                };
                (String::new(), String::new(), outcome)
            }
        };
        match outcome {
            RoundOutcome::Accepted(model, cs) => {
                rounds.push(TraceRound {
                    round,
                    draft,
                    constraints,
                    summary: "accepted".into(),
                    feedback: String::new(),
                });
                return Ok((
                    model,
                    cs,
                    GenerationTrace {
                        rounds,
                        status: TraceStatus::Accepted,
                    },
                ));
            }
            RoundOutcome::Failed { summary, feedback: text } => {
                rounds.push(TraceRound {
                    round,
                    draft,
                    constraints,
                    summary,
                    feedback: text.clone(),
                });
                feedback = Some(text);
            }
        }
    }
    Err(LlmError::Rejected(GenerationTrace {
        rounds,
        status: TraceStatus::Rejected,
    }))
}

/// Provider settings as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(default)]
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_model_name")]
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Scripted mock misbehaviour, for exercising the repair loop.
    #[serde(default)]
    pub mock_fault: Option<MockFault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

fn default_model_name() -> String {
    "default".into()
}

fn default_timeout() -> u64 {
    60
}

fn default_max_tokens() -> u32 {
    4096
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            endpoint: None,
            api_key: None,
            model: default_model_name(),
            timeout_secs: default_timeout(),
            max_tokens: default_max_tokens(),
            mock_fault: None,
        }
    }
}

impl ProviderConfig {
    /// Applies `FORGE_LLM_ENDPOINT` and `FORGE_LLM_API_KEY` from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(e) = lookup("FORGE_LLM_ENDPOINT") {
            self.endpoint = Some(e);
        }
        if let Some(k) = lookup("FORGE_LLM_API_KEY") {
            self.api_key = Some(k);
        }
    }

    pub fn build(&self) -> Result<Box<dyn Provider>, LlmError> {
        match self.kind {
            ProviderKind::Mock => Ok(Box::new(MockProvider {
                fault: self.mock_fault,
            })),
            ProviderKind::Http => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| LlmError::Input("http provider needs an endpoint".into()))?;
                Ok(Box::new(HttpProvider {
                    endpoint,
                    api_key: self.api_key.clone(),
                    model: self.model.clone(),
                    timeout: std::time::Duration::from_secs(self.timeout_secs),
                    max_tokens: self.max_tokens,
                }))
            }
        }
    }
}
