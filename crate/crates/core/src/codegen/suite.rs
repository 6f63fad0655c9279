use serde::{Deserialize, Serialize};

use super::{CodegenError, DeploymentPlan};
use crate::sim::FaultSpec;

pub const DEFAULT_DURATION_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Functional,
    Nonfunctional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRef {
    pub src: String,
    pub dst: String,
}

/// One entry of the user's acceptance-criteria document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub id: String,
    /// Inferred from faults and latency limits when absent.
    #[serde(default)]
    pub kind: Option<TestKind>,
    pub flow: FlowRef,
    #[serde(default)]
    pub min_delivery_ratio: Option<f64>,
    #[serde(default)]
    pub max_p95_latency_ms: Option<f64>,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    #[serde(default)]
    pub duration_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_delivery_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_p95_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub id: String,
    pub kind: TestKind,
    pub flow: FlowRef,
    pub assertions: Assertions,
    pub faults: Vec<FaultSpec>,
    pub duration_ms: u64,
}

impl TestCase {
    pub fn check(&self) -> Result<(), String> {
        if self.duration_ms == 0 {
            return Err("duration_ms must be positive".into());
        }
        let a = &self.assertions;
        if a.min_delivery_ratio.is_none() && a.max_p95_latency_ms.is_none() {
            return Err("no assertion given".into());
        }
        if let Some(r) = a.min_delivery_ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(format!("min_delivery_ratio {r} outside [0, 1]"));
            }
        }
        if let Some(l) = a.max_p95_latency_ms {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(format!("max_p95_latency_ms {l} must be finite and non-negative"));
            }
        }
        if self.kind == TestKind::Functional && !self.faults.is_empty() {
            return Err("functional cases run without faults".into());
        }
        for f in &self.faults {
            f.check()?;
        }
        Ok(())
    }
}

/// Maps criteria onto test cases, one each, in input order.
pub fn emit_tests(criteria: &[Criterion], plan: &DeploymentPlan) -> Result<Vec<TestCase>, CodegenError> {
    criteria
        .iter()
        .map(|c| {
            let known = plan
                .topics
                .iter()
                .any(|t| t.src_fn == c.flow.src && t.dst_fn == c.flow.dst);
            if !known {
                return Err(CodegenError::UnknownFlow {
                    id: c.id.clone(),
                    src: c.flow.src.clone(),
                    dst: c.flow.dst.clone(),
                });
            }
            let kind = c.kind.unwrap_or(if c.faults.is_empty() && c.max_p95_latency_ms.is_none() {
                TestKind::Functional
            } else {
                TestKind::Nonfunctional
            });
            let case = TestCase {
                id: c.id.clone(),
                kind,
                flow: c.flow.clone(),
                assertions: Assertions {
                    min_delivery_ratio: c.min_delivery_ratio,
                    max_p95_latency_ms: c.max_p95_latency_ms,
                },
                faults: c.faults.clone(),
                duration_ms: c.duration_ms.unwrap_or(DEFAULT_DURATION_MS),
            };
            case.check().map_err(|message| CodegenError::Criterion {
                id: c.id.clone(),
                message,
            })?;
            Ok(case)
        })
        .collect()
}
