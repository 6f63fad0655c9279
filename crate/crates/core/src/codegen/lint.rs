use std::collections::{BTreeMap, BTreeSet};

use super::{DeploymentPlan, ServiceKind};
use crate::model::{expand_instances, InstanceModel};

/// Checks a plan for dangling names and placement drift. Returns one line
/// per problem; empty means clean.
pub fn lint(plan: &DeploymentPlan, model: &InstanceModel) -> Vec<String> {
    let mut issues = Vec::new();

    let mut seen_addr = BTreeSet::new();
    for addr in plan.addresses.values() {
        if !seen_addr.insert(addr) {
            issues.push(format!("address {addr} assigned twice"));
        }
    }

    let mut endpoints = BTreeSet::new();
    let mut names = BTreeSet::new();
    for n in &plan.nodes {
        if plan.addresses.get(&n.node) != Some(&n.address) {
            issues.push(format!("node {} address {} not in address table", n.node, n.address));
        }
        let mut ports = BTreeSet::new();
        for s in &n.services {
            if s.node != n.node {
                issues.push(format!("service {} listed under {} but placed on {}", s.name, n.node, s.node));
            }
            if !ports.insert(s.port) {
                issues.push(format!("port {} reused on {}", s.port, n.node));
            }
            if !names.insert(s.name.as_str()) {
                issues.push(format!("service name {} reused", s.name));
            }
            endpoints.insert(format!("{}:{}", n.address, s.port));
        }
    }

    let mut topics = BTreeSet::new();
    for t in &plan.topics {
        topics.extend(t.replica_topics.iter().map(String::as_str));
        topics.extend(t.voted.iter().map(|v| v.topic.as_str()));
    }

    for s in plan.services() {
        let address = &plan.addresses[&s.node];
        if s.env.get("ADDRESS") != Some(address) {
            issues.push(format!("{}: ADDRESS does not match node {}", s.name, s.node));
        }
        if s.env.get("PORT") != Some(&s.port.to_string()) {
            issues.push(format!("{}: PORT does not match {}", s.name, s.port));
        }
        for (key, value) in &s.env {
            if key == "PEERS" {
                for peer in value.split(',') {
                    if !endpoints.contains(peer) {
                        issues.push(format!("{}: peer {peer} resolves to no service", s.name));
                    }
                }
            } else if key.starts_with("TOPIC_") {
                for topic in value.split(',') {
                    if !topics.contains(topic) {
                        issues.push(format!("{}: topic {topic} missing from topic table", s.name));
                    }
                }
            }
        }
        match (model.node_of(&s.instance), s.kind) {
            (Some(node), _) if node == s.node => {}
            (Some(node), ServiceKind::Function) => {
                issues.push(format!("{} runs on {} but is allocated to {node}", s.name, s.node))
            }
            (Some(node), ServiceKind::Voter) => issues.push(format!(
                "{} runs on {} away from its consumer on {node}",
                s.name, s.node
            )),
            (None, _) => issues.push(format!("{}: instance {} has no allocation", s.name, s.instance)),
        }
    }

    for inst in expand_instances(model) {
        if plan.instance_service(&inst).is_none() {
            issues.push(format!("instance {inst} has no service"));
        }
    }
    let mut replica_nodes: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for s in plan.services().filter(|s| s.kind == ServiceKind::Function) {
        if !replica_nodes.entry(&s.instance.function).or_default().insert(&s.node) {
            issues.push(format!("replicas of {} share node {}", s.instance.function, s.node));
        }
    }

    // Producers publish what consumers subscribe to.
    for t in &plan.topics {
        for (k, topic) in t.replica_topics.iter().enumerate() {
            let producer = plan.services().find(|s| {
                s.kind == ServiceKind::Function && s.instance.function == t.src_fn && s.instance.replica as usize == k
            });
            let publishes = producer.is_some_and(|p| {
                p.env
                    .get(&format!("TOPIC_OUT_{}", super::env_key(&t.src_port)))
                    .is_some_and(|v| v.split(',').any(|x| x == topic))
            });
            if !publishes {
                issues.push(format!("{}: nothing publishes {topic}", t.edge));
            }
        }
        let consumers = plan
            .services()
            .filter(|s| s.kind == ServiceKind::Function && s.instance.function == t.dst_fn);
        for c in consumers {
            let subscribed = c
                .env
                .get(&format!("TOPIC_IN_{}", super::env_key(&t.dst_port)))
                .map(|v| v.split(',').map(str::to_string).collect::<BTreeSet<_>>())
                .unwrap_or_default();
            let expected: Vec<&String> = match t.voted.iter().find(|v| v.consumer == c.instance) {
                Some(v) => vec![&v.topic],
                None if t.voted.is_empty() => t.replica_topics.iter().collect(),
                None => {
                    issues.push(format!("{}: no voter guards {}", t.edge, c.instance));
                    continue;
                }
            };
            for topic in expected {
                if !subscribed.contains(topic) {
                    issues.push(format!("{}: {} does not subscribe to {topic}", t.edge, c.name));
                }
            }
        }
    }
    issues
}
