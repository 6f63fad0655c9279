use std::fmt::Write as _;

use serde::Serialize;

use super::{env_key, DeploymentPlan};
use crate::model::{expand_instances, InstanceId, InstanceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Publish,
    Subscribe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortBinding {
    pub port: String,
    pub datatype: String,
    pub direction: Direction,
    /// Empty for ports no flow touches.
    pub topics: Vec<String>,
    pub wire_format: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdapterSpec {
    pub instance: InstanceId,
    pub middleware: String,
    pub bindings: Vec<PortBinding>,
}

fn split_topics(value: Option<&String>) -> Vec<String> {
    value
        .map(|v| v.split(',').map(str::to_string).collect())
        .unwrap_or_default()
}

/// One spec per function instance, in instance order.
pub fn emit_adapters(plan: &DeploymentPlan, model: &InstanceModel) -> Vec<AdapterSpec> {
    let mut out = Vec::new();
    for inst in expand_instances(model) {
        let f = model.function(&inst.function).expect("expanded instance");
        let env = plan.instance_service(&inst).map(|s| &s.env);
        let lookup = |key: String| split_topics(env.and_then(|e| e.get(&key)));
        let mut bindings = Vec::new();
        for p in &f.out_ports {
            bindings.push(PortBinding {
                port: p.name.clone(),
                datatype: p.datatype.clone(),
                direction: Direction::Publish,
                topics: lookup(format!("TOPIC_OUT_{}", env_key(&p.name))),
                wire_format: format!("{} encoded as length-prefixed bytes", p.datatype),
            });
        }
        for p in &f.in_ports {
            bindings.push(PortBinding {
                port: p.name.clone(),
                datatype: p.datatype.clone(),
                direction: Direction::Subscribe,
                topics: lookup(format!("TOPIC_IN_{}", env_key(&p.name))),
                wire_format: format!("{} decoded from length-prefixed bytes", p.datatype),
            });
        }
        out.push(AdapterSpec {
            instance: inst,
            middleware: plan.rtenv.middleware.name().to_string(),
            bindings,
        });
    }
    out
}

/// Stub text with one named hook per port.
pub fn render_adapter(spec: &AdapterSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "adapter {}", spec.instance);
    let _ = writeln!(s, "middleware {}", spec.middleware);
    if spec.bindings.is_empty() {
        s.push_str("# no ports\n");
    }
    for b in &spec.bindings {
        let (verb, hook) = match b.direction {
            Direction::Publish => ("publish", "encode"),
            Direction::Subscribe => ("subscribe", "decode"),
        };
        let _ = writeln!(s);
        let _ = writeln!(s, "port {} : {}", b.port, b.datatype);
        if b.topics.is_empty() {
            let _ = writeln!(s, "  {verb} (unbound)");
        }
        for t in &b.topics {
            let _ = writeln!(s, "  {verb} {t}");
        }
        let _ = writeln!(s, "  wire {}", b.wire_format);
        let _ = writeln!(s, "  hook {hook}_{}", super::env_key(&b.port).to_ascii_lowercase());
    }
    s
}
