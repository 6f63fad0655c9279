use std::collections::BTreeMap;

use serde::Serialize;

use super::{env_key, CodegenError, RuntimeEnvSpec, VOTING_WINDOW_MS};
use crate::model::{expand_instances, InstanceId, InstanceModel, SafetyMechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    Function,
    Voter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceEntry {
    pub name: String,
    pub kind: ServiceKind,
    /// The function instance, or for voters the consumer instance guarded.
    pub instance: InstanceId,
    pub node: String,
    pub port: u16,
    pub command: String,
    pub env: BTreeMap<String, String>,
    pub restart: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodePlan {
    pub node: String,
    pub address: String,
    /// Sorted by name.
    pub services: Vec<ServiceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VotedTopic {
    pub consumer: InstanceId,
    pub voter: String,
    pub topic: String,
}

/// Wiring of one flow edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicEntry {
    pub edge: String,
    pub src_fn: String,
    pub src_port: String,
    pub dst_fn: String,
    pub dst_port: String,
    /// Logical topic `<src_fn>/<src_port>`.
    pub topic: String,
    /// Topic each producer replica publishes on, by replica index.
    pub replica_topics: Vec<String>,
    pub mechanism: SafetyMechanism,
    /// Non-empty iff the producer votes.
    pub voted: Vec<VotedTopic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentPlan {
    pub rtenv: RuntimeEnvSpec,
    /// Every hardware node id with its address, in id order.
    pub addresses: BTreeMap<String, String>,
    /// Nodes hosting at least one service, in id order.
    pub nodes: Vec<NodePlan>,
    /// Sorted by edge id.
    pub topics: Vec<TopicEntry>,
}

impl DeploymentPlan {
    pub fn services(&self) -> impl Iterator<Item = &ServiceEntry> {
        self.nodes.iter().flat_map(|n| n.services.iter())
    }

    pub fn service(&self, name: &str) -> Option<&ServiceEntry> {
        self.services().find(|s| s.name == name)
    }

    /// The function service of `instance`.
    pub fn instance_service(&self, instance: &InstanceId) -> Option<&ServiceEntry> {
        self.services()
            .find(|s| s.kind == ServiceKind::Function && &s.instance == instance)
    }

    pub fn endpoint(&self, service: &ServiceEntry) -> String {
        format!("{}:{}", self.addresses[&service.node], service.port)
    }
}

fn voter_name(edge: &str, consumer: &InstanceId) -> String {
    format!("voter.{edge}.{consumer}")
}

/// Quorum for `r` voting replicas.
pub fn quorum(r: u32) -> u32 {
    (r + 2) / 2
}

pub fn plan_deployment(model: &InstanceModel, rtenv: &RuntimeEnvSpec) -> Result<DeploymentPlan, CodegenError> {
    rtenv.check()?;
    let allocation = model.allocation.as_ref().ok_or(CodegenError::MissingAllocation)?;
    let node_of: BTreeMap<&InstanceId, &str> = allocation.iter().map(|p| (&p.instance, p.node.as_str())).collect();

    let mut ids: Vec<&str> = model.hardware.iter().map(|n| n.id.as_str()).collect();
    ids.sort_unstable();
    let addresses: BTreeMap<String, String> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), format!("{}{}", rtenv.subnet_prefix, i + 1)))
        .collect();

    let mut edges: Vec<_> = model.edges.iter().collect();
    edges.sort_by(|a, b| a.id.cmp(&b.id));
    let mut topics = Vec::new();
    for e in &edges {
        let src = model.function(&e.src_fn).expect("validated edge");
        let dst = model.function(&e.dst_fn).expect("validated edge");
        let logical = format!("{}/{}", e.src_fn, e.src_port);
        let replica_topics: Vec<String> = if src.redundancy > 1 {
            (0..src.redundancy).map(|k| format!("{logical}/{k}")).collect()
        } else {
            vec![logical.clone()]
        };
        let voted = if src.safety_mechanism == SafetyMechanism::Voting && src.redundancy > 1 {
            (0..dst.redundancy)
                .map(|k| {
                    let consumer = InstanceId::new(dst.id.clone(), k);
                    VotedTopic {
                        voter: voter_name(&e.id, &consumer),
                        topic: format!("{logical}/voted/{consumer}"),
                        consumer,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        topics.push(TopicEntry {
            edge: e.id.clone(),
            src_fn: e.src_fn.clone(),
            src_port: e.src_port.clone(),
            dst_fn: e.dst_fn.clone(),
            dst_port: e.dst_port.clone(),
            topic: logical,
            replica_topics,
            mechanism: src.safety_mechanism,
            voted,
        });
    }

    // First pass: names, kinds and nodes.
    let mut skeleton: Vec<(String, ServiceKind, InstanceId, String)> = Vec::new();
    for inst in expand_instances(model) {
        let node = node_of
            .get(&inst)
            .ok_or(CodegenError::MissingAllocation)?
            .to_string();
        skeleton.push((inst.to_string(), ServiceKind::Function, inst, node));
    }
    for t in &topics {
        for v in &t.voted {
            let node = node_of.get(&v.consumer).ok_or(CodegenError::MissingAllocation)?.to_string();
            skeleton.push((v.voter.clone(), ServiceKind::Voter, v.consumer.clone(), node));
        }
    }
    let mut per_node: BTreeMap<String, Vec<(String, ServiceKind, InstanceId)>> = BTreeMap::new();
    for (name, kind, inst, node) in skeleton {
        per_node.entry(node).or_default().push((name, kind, inst));
    }
    let mut ports: BTreeMap<String, (String, u16)> = BTreeMap::new();
    for (node, services) in per_node.iter_mut() {
        services.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, (name, _, _)) in services.iter().enumerate() {
            let port = u32::from(rtenv.base_port) + k as u32;
            let port = u16::try_from(port)
                .map_err(|_| CodegenError::RuntimeEnv(format!("node {node} runs out of ports")))?;
            ports.insert(name.clone(), (node.clone(), port));
        }
    }
    let endpoint = |name: &str| {
        let (node, port) = &ports[name];
        format!("{}:{}", addresses[node], port)
    };

    let mut nodes = Vec::new();
    for (node, services) in per_node {
        let address = addresses[&node].clone();
        let mut entries = Vec::new();
        for (name, kind, inst) in services {
            let port = ports[&name].1;
            let mut env = BTreeMap::new();
            env.insert("ADDRESS".to_string(), address.clone());
            env.insert("PORT".to_string(), port.to_string());
            env.insert("MIDDLEWARE".to_string(), rtenv.middleware.name().to_string());
            env.insert("TRANSPORT".to_string(), rtenv.transport.clone());
            let mut peers: Vec<String> = Vec::new();
            let command = match kind {
                ServiceKind::Function => {
                    let f = model.function(&inst.function).expect("expanded instance");
                    env.insert("INSTANCE".to_string(), inst.to_string());
                    env.insert("REPLICA".to_string(), inst.replica.to_string());
                    for p in &f.out_ports {
                        let mut published: Vec<String> = topics
                            .iter()
                            .filter(|t| t.src_fn == f.id && t.src_port == p.name)
                            .map(|t| t.replica_topics[inst.replica as usize].clone())
                            .collect();
                        published.dedup();
                        if !published.is_empty() {
                            env.insert(format!("TOPIC_OUT_{}", env_key(&p.name)), published.join(","));
                        }
                    }
                    for p in &f.in_ports {
                        let mut subscribed: Vec<String> = Vec::new();
                        for t in topics.iter().filter(|t| t.dst_fn == f.id && t.dst_port == p.name) {
                            if t.voted.is_empty() {
                                subscribed.extend(t.replica_topics.iter().cloned());
                                let src_r = t.replica_topics.len() as u32;
                                for k in 0..src_r {
                                    peers.push(endpoint(&InstanceId::new(t.src_fn.clone(), k).to_string()));
                                }
                            } else {
                                let v = t.voted.iter().find(|v| v.consumer == inst).expect("voter per consumer");
                                subscribed.push(v.topic.clone());
                                peers.push(endpoint(&v.voter));
                            }
                        }
                        subscribed.sort();
                        subscribed.dedup();
                        if !subscribed.is_empty() {
                            env.insert(format!("TOPIC_IN_{}", env_key(&p.name)), subscribed.join(","));
                        }
                    }
                    format!("{} {} --instance {}", rtenv.virtualization.name(), inst.function, inst)
                }
                ServiceKind::Voter => {
                    let (t, v) = topics
                        .iter()
                        .find_map(|t| t.voted.iter().find(|v| v.voter == name).map(|v| (t, v)))
                        .expect("voter from topic table");
                    let r = t.replica_topics.len() as u32;
                    env.insert("VOTER_FOR".to_string(), v.consumer.to_string());
                    env.insert("TOPIC_IN".to_string(), t.replica_topics.join(","));
                    env.insert("TOPIC_OUT".to_string(), v.topic.clone());
                    env.insert("QUORUM".to_string(), quorum(r).to_string());
                    env.insert("WINDOW_MS".to_string(), crate::canonical::format_decimal(VOTING_WINDOW_MS));
                    for k in 0..r {
                        peers.push(endpoint(&InstanceId::new(t.src_fn.clone(), k).to_string()));
                    }
                    format!(
                        "{} voter --quorum {} --window-ms {}",
                        rtenv.virtualization.name(),
                        quorum(r),
                        crate::canonical::format_decimal(VOTING_WINDOW_MS)
                    )
                }
            };
            peers.sort();
            peers.dedup();
            if !peers.is_empty() {
                env.insert("PEERS".to_string(), peers.join(","));
            }
            entries.push(ServiceEntry {
                name,
                kind,
                instance: inst,
                node: node.clone(),
                port,
                command,
                env,
                restart: "always".to_string(),
            });
        }
        nodes.push(NodePlan {
            node,
            address,
            services: entries,
        });
    }

    Ok(DeploymentPlan {
        rtenv: rtenv.clone(),
        addresses,
        nodes,
        topics,
    })
}
