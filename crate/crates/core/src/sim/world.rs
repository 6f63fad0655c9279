use std::collections::BTreeMap;

use super::{FaultKind, FaultSpec, SimError};
use crate::allocator::{build_problem, latency_units, units_to_ms};
use crate::codegen::{quorum, DeploymentPlan, ServiceKind};
use crate::model::{expand_instances, InstanceId, InstanceModel, SafetyMechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryMode {
    /// First message with a given sequence number counts.
    FirstArrival,
    /// `quorum` replica messages within the window.
    Voting { quorum: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimFlow {
    pub edge: String,
    pub src_fn: String,
    pub dst_fn: String,
    pub period_ms: f64,
    /// Node index of each producer replica.
    pub producers: Vec<usize>,
    /// Node index of each consumer replica.
    pub consumers: Vec<usize>,
    pub mode: DeliveryMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRoute {
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    /// Arrival offset at each node of `nodes`.
    pub offsets_ms: Vec<f64>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimWorld {
    /// Sorted ids.
    pub nodes: Vec<String>,
    pub links: Vec<String>,
    /// Sorted by edge id.
    pub flows: Vec<SimFlow>,
    pub routes: Vec<Vec<Option<SimRoute>>>,
}

impl SimWorld {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.binary_search_by(|l| l.as_str().cmp(id)).ok()
    }

    pub fn flow(&self, edge: &str) -> Option<&SimFlow> {
        self.flows.iter().find(|f| f.edge == edge)
    }

    pub fn check_faults(&self, faults: &[FaultSpec]) -> Result<(), SimError> {
        for f in faults {
            f.check().map_err(SimError::Fault)?;
            let known = match f.kind {
                FaultKind::NodeCrash => self.node_index(&f.target).is_some(),
                FaultKind::LinkDrop => self.link_index(&f.target).is_some(),
            };
            if !known {
                return Err(SimError::Fault(format!("unknown target '{}'", f.target)));
            }
        }
        Ok(())
    }
}

fn inconsistent(msg: String) -> SimError {
    SimError::Consistency(msg)
}

pub fn build_sim(plan: &DeploymentPlan, model: &InstanceModel) -> Result<SimWorld, SimError> {
    let problem = build_problem::<f64>(model, &[]).map_err(|e| inconsistent(e.to_string()))?;
    let nodes: Vec<String> = problem.nodes.iter().map(|n| n.id.clone()).collect();
    let links: Vec<String> = problem.links.iter().map(|l| l.id.clone()).collect();

    let mut placed: BTreeMap<InstanceId, usize> = BTreeMap::new();
    for s in plan.services().filter(|s| s.kind == ServiceKind::Function) {
        let idx = problem
            .node_index(&s.node)
            .ok_or_else(|| inconsistent(format!("service {} on unknown node {}", s.name, s.node)))?;
        if model.node_of(&s.instance) != Some(s.node.as_str()) {
            return Err(inconsistent(format!("service {} is not where the model allocates it", s.name)));
        }
        if placed.insert(s.instance.clone(), idx).is_some() {
            return Err(inconsistent(format!("instance {} deployed twice", s.instance)));
        }
    }
    let expected = expand_instances(model);
    if expected.len() != placed.len() || expected.iter().any(|i| !placed.contains_key(i)) {
        return Err(inconsistent("plan services do not match the model's instances".into()));
    }

    let mut flows = Vec::new();
    if plan.topics.len() != model.edges.len() {
        return Err(inconsistent("plan topic table does not cover the model's edges".into()));
    }
    for t in &plan.topics {
        let edge = model
            .edges
            .iter()
            .find(|e| e.id == t.edge)
            .ok_or_else(|| inconsistent(format!("topic for unknown edge {}", t.edge)))?;
        if edge.src_fn != t.src_fn || edge.dst_fn != t.dst_fn {
            return Err(inconsistent(format!("edge {} endpoints differ from the plan", t.edge)));
        }
        let src = model.function(&t.src_fn).expect("validated edge");
        let dst = model.function(&t.dst_fn).expect("validated edge");
        let at = |f: &str, k: u32| placed[&InstanceId::new(f, k)];
        let mode = if src.safety_mechanism == SafetyMechanism::Voting && src.redundancy > 1 {
            for k in 0..dst.redundancy {
                let consumer = InstanceId::new(&dst.id, k);
                let voter = t
                    .voted
                    .iter()
                    .find(|v| v.consumer == consumer)
                    .and_then(|v| plan.service(&v.voter))
                    .ok_or_else(|| inconsistent(format!("{}: no voter for {consumer}", t.edge)))?;
                if problem.node_index(&voter.node) != Some(at(&dst.id, k)) {
                    return Err(inconsistent(format!("voter {} is not colocated", voter.name)));
                }
            }
            DeliveryMode::Voting {
                quorum: quorum(src.redundancy),
            }
        } else {
            DeliveryMode::FirstArrival
        };
        flows.push(SimFlow {
            edge: t.edge.clone(),
            src_fn: t.src_fn.clone(),
            dst_fn: t.dst_fn.clone(),
            period_ms: edge.period_ms(),
            producers: (0..src.redundancy).map(|k| at(&src.id, k)).collect(),
            consumers: (0..dst.redundancy).map(|k| at(&dst.id, k)).collect(),
            mode,
        });
    }
    flows.sort_by(|a, b| a.edge.cmp(&b.edge));

    let link_units: Vec<u64> = links
        .iter()
        .map(|id| latency_units(model.link(id).expect("problem link").latency_ms))
        .collect();
    let routes = problem
        .routes
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| {
                    r.as_ref().map(|r| {
                        let mut acc = 0u64;
                        let mut offsets_ms = vec![0.0];
                        for &l in &r.links {
                            acc += link_units[l];
                            offsets_ms.push(units_to_ms(acc));
                        }
                        SimRoute {
                            nodes: r.nodes.clone(),
                            links: r.links.clone(),
                            offsets_ms,
                            latency_ms: r.latency_ms,
                        }
                    })
                })
                .collect()
        })
        .collect();

    Ok(SimWorld {
        nodes,
        links,
        flows,
        routes,
    })
}
