use std::cell::Cell;

use forge_core::constraint::{Diagnostic, Severity};
use forge_core::llm::{
    build_request_body, extract_fenced, generate_artifacts, parse_response, template_feedback, translate_diagnostics,
    DraftRequest, HardwareSpec, LlmError, MockFault, MockProvider, Provider, ProviderConfig, ProviderError,
    ProviderKind, TraceStatus,
};
use forge_core::model::{load_instance_model, FunctionSpec, SafetyMechanism};

const CATALOGUE: &str = include_str!("../../../fixtures/demo/catalogue.json");
const HARDWARE: &str = include_str!("../../../fixtures/demo/hardware.json");
const REQUIREMENTS: &str = include_str!("../../../fixtures/demo/requirements.txt");

fn catalogue() -> Vec<FunctionSpec> {
    serde_json::from_str(CATALOGUE).unwrap()
}

fn hardware() -> HardwareSpec {
    serde_json::from_str(HARDWARE).unwrap()
}

fn diag(constraint: &str, element: &str) -> Diagnostic {
    Diagnostic {
        constraint_id: constraint.into(),
        context: "Function".into(),
        context_element_id: element.into(),
        severity: Severity::Error,
        message: format!("{constraint} violated on {element}."),
        suggestion: "Raise it.".into(),
    }
}

/// Replays canned responses and counts calls.
struct Scripted {
    responses: Vec<Result<String, ProviderError>>,
    calls: Cell<usize>,
}

impl Provider for Scripted {
    fn draft(&self, _: &DraftRequest<'_>) -> Result<String, ProviderError> {
        let i = self.calls.get();
        self.calls.set(i + 1);
        self.responses[i.min(self.responses.len() - 1)].clone()
    }

    fn suggest(&self, _: &[Diagnostic]) -> Result<String, ProviderError> {
        Err(ProviderError::Transport("offline".into()))
    }
}

#[test]
fn mock_builds_braking_chain() {
    let req = "feature: braking uses speed_sense, brake_ctrl asil D redundancy 2";
    let (model, cs, trace) = generate_artifacts(req, &catalogue(), &hardware(), &MockProvider::default(), 3).unwrap();
    assert_eq!(trace.status, TraceStatus::Accepted);
    assert_eq!(trace.rounds.len(), 1);
    let ids: Vec<&str> = model.functions.iter().map(|f| f.id.as_str()).collect();
    assert_eq!(ids, ["brake_ctrl", "speed_sense"]);
    let ctrl = model.function("brake_ctrl").unwrap();
    assert_eq!(ctrl.asil.name(), "D");
    assert_eq!(ctrl.redundancy, 2);
    assert_eq!(ctrl.safety_mechanism, SafetyMechanism::HotStandby);
    assert_eq!(model.edges.len(), 1);
    assert_eq!((model.edges[0].src_fn.as_str(), model.edges[0].dst_fn.as_str()), ("speed_sense", "brake_ctrl"));
    assert_eq!(model.hardware.len(), 3);
    assert!(cs.constraints.is_empty());
}

#[test]
fn demo_requirements_pass_with_constraints() {
    let (model, cs, trace) =
        generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &MockProvider::default(), 3).unwrap();
    assert_eq!(trace.rounds.len(), 1);
    assert_eq!(model.functions.len(), 3);
    assert_eq!(model.edges.len(), 2);
    assert_eq!(cs.constraints.len(), 2);
    assert_eq!(load_instance_model(&trace.rounds[0].draft).unwrap(), model);
}

#[test]
fn mock_is_deterministic() {
    let run = || generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &MockProvider::default(), 3).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.0, b.0);
    assert_eq!(a.2, b.2);
}

#[test]
fn unknown_function_is_rejected() {
    let err = generate_artifacts(
        "feature: braking uses ghost_fn",
        &catalogue(),
        &hardware(),
        &MockProvider::default(),
        2,
    )
    .unwrap_err();
    let LlmError::Rejected(trace) = err else { panic!("{err:?}") };
    assert_eq!(trace.status, TraceStatus::Rejected);
    assert_eq!(trace.rounds.len(), 2);
    assert!(trace.rounds[0].summary.contains("unknown catalogue id"));
    assert!(trace.rounds[0].summary.contains("ghost_fn"));
}

#[test]
fn scripted_fault_is_repaired_in_round_two() {
    let provider = MockProvider {
        fault: Some(MockFault::ZeroCpuFirstRound),
    };
    let (model, _, trace) = generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &provider, 2).unwrap();
    assert_eq!(trace.status, TraceStatus::Accepted);
    assert_eq!(trace.rounds.len(), 2);
    assert!(trace.rounds[0].summary.contains("MinCpu"));
    assert!(trace.rounds[0].feedback.contains("MinCpu"));
    assert!(trace.rounds[0].feedback.contains("brake_act"));
    assert!(trace.rounds[1].feedback.is_empty());
    assert!(model.functions.iter().all(|f| f.cpu_req > 0));

    let err = generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &provider, 1).unwrap_err();
    assert!(matches!(err, LlmError::Rejected(t) if t.rounds.len() == 1));
}

#[test]
fn generated_constraint_failure_feeds_back() {
    let req = "feature: b uses speed_sense, brake_ctrl\nconstraint: context Function inv Tiny: self.mem_req <= 64";
    let err = generate_artifacts(req, &catalogue(), &hardware(), &MockProvider::default(), 1).unwrap_err();
    let LlmError::Rejected(trace) = err else { panic!() };
    assert!(trace.rounds[0].feedback.contains("Tiny"));
    assert!(trace.rounds[0].feedback.contains("brake_ctrl"));
}

#[test]
fn input_checks() {
    let mock = MockProvider::default();
    assert!(matches!(
        generate_artifacts("  \n", &catalogue(), &hardware(), &mock, 1),
        Err(LlmError::Input(_))
    ));
    assert!(matches!(
        generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &mock, 0),
        Err(LlmError::Input(_))
    ));
    let mut dup = catalogue();
    dup.push(dup[0].clone());
    assert!(matches!(
        generate_artifacts(REQUIREMENTS, &dup, &hardware(), &mock, 1),
        Err(LlmError::Input(_))
    ));
}

#[test]
fn provider_errors_surface_and_bad_responses_are_retried() {
    let down = Scripted {
        responses: vec![Err(ProviderError::Transport("timeout".into()))],
        calls: Cell::new(0),
    };
    let err = generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &down, 3).unwrap_err();
    assert!(matches!(err, LlmError::Provider(ProviderError::Transport(_))));

    let (good, _) = MockProvider::default().draft_parts(&DraftRequest {
        requirements: REQUIREMENTS,
        catalogue: &catalogue(),
        hardware: &hardware(),
        round: 1,
        feedback: None,
    });
    let flaky = Scripted {
        responses: vec![
            Ok("no fences here".into()),
            Ok(format!("Sure.\n```model\n{good}```\n```constraints\n```\n")),
        ],
        calls: Cell::new(0),
    };
    let (_, _, trace) = generate_artifacts(REQUIREMENTS, &catalogue(), &hardware(), &flaky, 3).unwrap();
    assert_eq!(trace.rounds.len(), 2);
    assert!(trace.rounds[0].draft.is_empty());
    assert!(trace.rounds[0].feedback.contains("could not be read"));
}

#[test]
fn fence_extraction_is_exact() {
    let text = "intro\n```model\n{\"a\": 1}\n  spaced \n```\n```constraints\n```\n";
    assert_eq!(extract_fenced(text, "model").unwrap(), "{\"a\": 1}\n  spaced ");
    assert_eq!(extract_fenced(text, "constraints").unwrap(), "");
    assert!(extract_fenced(text, "other").is_err());
    assert!(extract_fenced("```model\nx\n", "model").is_err());
    assert!(extract_fenced("```model\n```\n```model\n```\n", "model").is_err());
    // A tag must match the whole fence line.
    assert!(extract_fenced("```models\nx\n```\n", "model").is_err());
}

#[test]
fn feedback_templates() {
    let mock = MockProvider::default();
    assert_eq!(translate_diagnostics(&[], &mock), "");
    let one = translate_diagnostics(&[diag("MinCpu", "f1")], &mock);
    assert_eq!(one.lines().count(), 1);
    assert!(one.contains("MinCpu") && one.contains("f1"));
    let two = template_feedback(&[diag("MinMem", "a"), diag("MinCpu", "z")]);
    let lines: Vec<&str> = two.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("MinCpu"));

    let offline = Scripted {
        responses: vec![],
        calls: Cell::new(0),
    };
    assert_eq!(
        translate_diagnostics(&[diag("MinCpu", "f1")], &offline),
        template_feedback(&[diag("MinCpu", "f1")])
    );
}

#[test]
fn http_wire_format() {
    let body = build_request_body("m1", "sys", "usr", 100);
    assert_eq!(body["model"], "m1");
    assert_eq!(body["temperature"], 0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "usr");
    let reply = r#"{"choices":[{"message":{"role":"assistant","content":"```model\n{}\n```"}}]}"#;
    assert_eq!(parse_response(reply).unwrap(), "```model\n{}\n```");
    assert!(parse_response(r#"{"choices":[]}"#).is_err());
    assert!(parse_response("not json").is_err());
}

#[test]
fn provider_config() {
    let mut cfg = ProviderConfig::default();
    assert_eq!(cfg.kind, ProviderKind::Mock);
    assert!(cfg.build().is_ok());
    cfg.kind = ProviderKind::Http;
    assert!(matches!(cfg.build(), Err(LlmError::Input(_))));
    cfg.apply_env(|k| match k {
        "FORGE_LLM_ENDPOINT" => Some("http://127.0.0.1:9/v1/chat".into()),
        "FORGE_LLM_API_KEY" => Some("k".into()),
        _ => None,
    });
    assert_eq!(cfg.endpoint.as_deref(), Some("http://127.0.0.1:9/v1/chat"));
    assert_eq!(cfg.api_key.as_deref(), Some("k"));
    assert!(cfg.build().is_ok());
}
