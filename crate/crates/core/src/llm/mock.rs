//! Deterministic stand-in for a language model.
//!
//! Requirements lines of the form
//! `feature: <name> uses <fn>[ asil <level>][ redundancy <n>], <fn>...`
//! select catalogue functions and chain them with edges; qualifiers apply to
//! the function they follow. `constraint: <rule>` lines are passed through as
//! constraint source. Other lines are ignored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{template_feedback, DraftRequest, Provider, ProviderError};
use crate::constraint::Diagnostic;
use crate::model::{save_instance_model, AsilLevel, FlowEdge, FunctionSpec, InstanceModel, SafetyMechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFault {
    /// The first drafted function gets `cpu_req = 0` in round 1 only.
    ZeroCpuFirstRound,
}

#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    pub fault: Option<MockFault>,
}

const MOCK_RATE_HZ: f64 = 100.0;
const MOCK_MSG_BYTES: u64 = 64;

struct Feature {
    name: String,
    items: Vec<(String, Option<AsilLevel>, Option<u32>)>,
}

fn parse_feature(spec: &str) -> Option<Feature> {
    let (name, list) = spec.split_once(" uses ")?;
    let name: String = name
        .trim()
        .chars()
        .map(|c| if c.is_whitespace() || c == '#' || c == '/' { '_' } else { c })
        .collect();
    let mut items = Vec::new();
    for item in list.split(',') {
        let mut tokens = item.split_whitespace();
        let Some(id) = tokens.next() else { continue };
        let (mut asil, mut redundancy) = (None, None);
        while let Some(key) = tokens.next() {
            match (key, tokens.next()) {
                ("asil", Some(v)) => asil = v.parse().ok(),
                ("redundancy", Some(v)) => redundancy = v.parse().ok().filter(|r| *r >= 1),
                _ => {}
            }
        }
        items.push((id.to_string(), asil, redundancy));
    }
    Some(Feature { name, items })
}

fn placeholder(id: &str) -> FunctionSpec {
    FunctionSpec {
        id: id.to_string(),
        cpu_req: 1,
        mem_req: 1,
        power_req: 0.0,
        asil: AsilLevel::QM,
        redundancy: 1,
        safety_mechanism: SafetyMechanism::None,
        out_ports: Vec::new(),
        in_ports: Vec::new(),
    }
}

fn first_compatible_ports(src: &FunctionSpec, dst: &FunctionSpec) -> Option<(String, String)> {
    src.out_ports.iter().find_map(|o| {
        dst.in_ports
            .iter()
            .find(|i| i.datatype == o.datatype)
            .map(|i| (o.name.clone(), i.name.clone()))
    })
}

impl MockProvider {
    /// The `(model document, constraint source)` pair drafted for a request.
    pub fn draft_parts(&self, request: &DraftRequest<'_>) -> (String, String) {
        let mut functions: BTreeMap<String, FunctionSpec> = BTreeMap::new();
        let mut edges: Vec<FlowEdge> = Vec::new();
        let mut constraints = String::new();
        for line in request.requirements.lines().map(str::trim) {
            if let Some(rule) = line.strip_prefix("constraint:") {
                constraints.push_str(rule.trim());
                constraints.push('\n');
                continue;
            }
            let Some(feature) = line.strip_prefix("feature:").and_then(parse_feature) else {
                continue;
            };
            for (id, asil, redundancy) in &feature.items {
                let f = functions.entry(id.clone()).or_insert_with(|| {
                    request
                        .catalogue
                        .iter()
                        .find(|c| &c.id == id)
                        .cloned()
                        .unwrap_or_else(|| placeholder(id))
                });
                if let Some(a) = asil {
                    f.asil = *a;
                }
                if let Some(r) = redundancy {
                    f.redundancy = *r;
                }
                if f.redundancy > 1 && f.safety_mechanism == SafetyMechanism::None {
                    f.safety_mechanism = SafetyMechanism::HotStandby;
                }
            }
            let mut k = 0;
            for pair in feature.items.windows(2) {
                let (src, dst) = (&functions[&pair[0].0], &functions[&pair[1].0]);
                let Some((src_port, dst_port)) = first_compatible_ports(src, dst) else {
                    continue;
                };
                let duplicate = edges.iter().any(|e| {
                    e.src_fn == src.id && e.dst_fn == dst.id && e.src_port == src_port && e.dst_port == dst_port
                });
                if duplicate {
                    continue;
                }
                k += 1;
                edges.push(FlowEdge {
                    id: format!("{}_{k}", feature.name),
                    src_fn: src.id.clone(),
                    dst_fn: dst.id.clone(),
                    src_port,
                    dst_port,
                    rate_hz: MOCK_RATE_HZ,
                    msg_bytes: MOCK_MSG_BYTES,
                    latency_budget_ms: None,
                });
            }
        }
        if self.fault == Some(MockFault::ZeroCpuFirstRound) && request.round == 1 {
            if let Some(f) = functions.values_mut().next() {
                f.cpu_req = 0;
            }
        }
        let model = InstanceModel {
            functions: functions.into_values().collect(),
            hardware: request.hardware.hardware.clone(),
            links: request.hardware.links.clone(),
            edges,
            allocation: None,
        };
        (save_instance_model(&model), constraints)
    }
}

impl Provider for MockProvider {
    fn draft(&self, request: &DraftRequest<'_>) -> Result<String, ProviderError> {
        let (model, constraints) = self.draft_parts(request);
        Ok(format!("```model\n{model}```\n```constraints\n{constraints}```\n"))
    }

    fn suggest(&self, diagnostics: &[Diagnostic]) -> Result<String, ProviderError> {
        Ok(template_feedback(diagnostics))
    }
}
