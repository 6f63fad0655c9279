//! Instance models: the typed system graph, its canonical JSON document form,
//! replica expansion and allocation merging.

mod types;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{quantize, to_canonical_json};

pub use types::{
    asil_at_least, AsilLevel, FlowEdge, FunctionSpec, HardwareNode, InstanceId, InstanceModel,
    Link, Placement, Port, SafetyMechanism,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("allocation coverage error: {0}")]
    Coverage(String),
    #[error("allocation targets unknown node '{node}' (instance {instance})")]
    UnknownNode { instance: String, node: String },
}

impl ModelError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Parses and validates an instance-model document.
///
/// Decimals are quantized to the canonical six fractional digits so that
/// `load(save(load(d))) == load(d)` holds for every accepted document.
pub fn load_instance_model(doc: &str) -> Result<InstanceModel, ModelError> {
    let value: serde_json::Value = serde_json::from_str(doc).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut model: InstanceModel = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "$".to_string() } else { path };
        ModelError::schema(path, e.into_inner().to_string())
    })?;
    quantize_decimals(&mut model);
    validate::validate(&model)?;
    Ok(model)
}

fn quantize_decimals(model: &mut InstanceModel) {
    for f in &mut model.functions {
        f.power_req = quantize(f.power_req);
    }
    for n in &mut model.hardware {
        n.base_power = quantize(n.base_power);
        n.cost = quantize(n.cost);
    }
    for l in &mut model.links {
        l.bandwidth_bps = quantize(l.bandwidth_bps);
        l.latency_ms = quantize(l.latency_ms);
    }
    for e in &mut model.edges {
        e.rate_hz = quantize(e.rate_hz);
        e.latency_budget_ms = e.latency_budget_ms.map(quantize);
    }
}

/// Returns the model with every collection in canonical order.
pub fn canonicalize(model: &InstanceModel) -> InstanceModel {
    let mut m = model.clone();
    quantize_decimals(&mut m);
    m.functions.sort_by(|a, b| a.id.cmp(&b.id));
    for f in &mut m.functions {
        f.out_ports.sort_by(|a, b| a.name.cmp(&b.name));
        f.in_ports.sort_by(|a, b| a.name.cmp(&b.name));
    }
    m.hardware.sort_by(|a, b| a.id.cmp(&b.id));
    m.links.sort_by(|a, b| a.id.cmp(&b.id));
    m.edges.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(alloc) = &mut m.allocation {
        alloc.sort_by(|a, b| a.instance.cmp(&b.instance));
    }
    m
}

/// Renders the canonical document for a valid model.
pub fn save_instance_model(model: &InstanceModel) -> String {
    to_canonical_json(&canonicalize(model))
}

/// Every replica of every function, ordered by `(function id, replica index)`.
pub fn expand_instances(model: &InstanceModel) -> Vec<InstanceId> {
    let mut functions: Vec<&FunctionSpec> = model.functions.iter().collect();
    functions.sort_by(|a, b| a.id.cmp(&b.id));
    functions
        .into_iter()
        .flat_map(|f| (0..f.redundancy).map(move |k| InstanceId::new(f.id.clone(), k)))
        .collect()
}

/// Total assignment of instances to hardware node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AllocationMatrix(pub BTreeMap<InstanceId, String>);

impl AllocationMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, instance: InstanceId, node: impl Into<String>) {
        self.0.insert(instance, node.into());
    }

    pub fn node_of(&self, instance: &InstanceId) -> Option<&str> {
        self.0.get(instance).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InstanceId, &str)> {
        self.0.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// Reads the allocation of an enhanced model.
    pub fn from_model(model: &InstanceModel) -> Option<Self> {
        model.allocation.as_ref().map(|pairs| {
            AllocationMatrix(
                pairs
                    .iter()
                    .map(|p| (p.instance.clone(), p.node.clone()))
                    .collect(),
            )
        })
    }

    /// `instance,node` lines with a header, in instance order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,node\n");
        for (i, n) in self.iter() {
            out.push_str(&format!("{i},{n}\n"));
        }
        out
    }
}

impl FromIterator<(InstanceId, String)> for AllocationMatrix {
    fn from_iter<T: IntoIterator<Item = (InstanceId, String)>>(iter: T) -> Self {
        AllocationMatrix(iter.into_iter().collect())
    }
}

/// Produces the enhanced instance model.
pub fn merge_allocation(
    model: &InstanceModel,
    alloc: &AllocationMatrix,
) -> Result<InstanceModel, ModelError> {
    let expected: BTreeSet<InstanceId> = expand_instances(model).into_iter().collect();
    if let Some(missing) = expected.iter().find(|i| !alloc.0.contains_key(*i)) {
        return Err(ModelError::Coverage(format!("instance {missing} is not allocated")));
    }
    if let Some(extra) = alloc.0.keys().find(|i| !expected.contains(*i)) {
        return Err(ModelError::Coverage(format!("instance {extra} is not part of the model")));
    }
    for (instance, node) in alloc.iter() {
        if model.node(node).is_none() {
            return Err(ModelError::UnknownNode {
                instance: instance.to_string(),
                node: node.to_string(),
            });
        }
    }
    let mut enhanced = model.clone();
    enhanced.allocation = Some(
        alloc
            .iter()
            .map(|(i, n)| Placement {
                instance: i.clone(),
                node: n.to_string(),
            })
            .collect(),
    );
    Ok(enhanced)
}
