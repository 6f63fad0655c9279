//! Closed-form delivery oracle: every message is traced independently with
//! no event queue. Only certain link drops (p = 0 or 1) are supported, since
//! probabilistic draws are an implementation detail of the simulator.

use std::collections::BTreeMap;

use forge_core::model::{InstanceId, InstanceModel, SafetyMechanism};
use forge_core::sim::{FaultKind, FaultSpec};

use crate::alloc_oracle::oracle_route;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleFlow {
    pub sent: u64,
    pub delivered: u64,
    /// Sorted.
    pub latencies: Vec<f64>,
}

fn crashed_by(faults: &[FaultSpec], node: &str, t: f64, horizon: f64) -> bool {
    faults
        .iter()
        .any(|f| f.kind == FaultKind::NodeCrash && f.target == node && f.at_ms <= t && f.at_ms <= horizon)
}

fn dropping(faults: &[FaultSpec], link: &str, t: f64, horizon: f64) -> bool {
    faults.iter().any(|f| {
        f.kind == FaultKind::LinkDrop && f.target == link && f.at_ms <= t && f.at_ms <= horizon && f.p == Some(1.0)
    })
}

/// `(nodes, links, arrival offsets in ms, total latency)` from `a` to `b`.
fn path(model: &InstanceModel, a: &str, b: &str) -> Option<(Vec<String>, Vec<String>, Vec<f64>, f64)> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let (units, mut links) = oracle_route(model, lo, hi)?;
    if a > b {
        links.reverse();
    }
    let mut nodes = vec![a.to_string()];
    let mut offsets = vec![0.0];
    let mut acc = 0u64;
    for id in &links {
        let l = model.link(id).unwrap();
        let here = nodes.last().unwrap().clone();
        nodes.push(if l.endpoint_a == here { l.endpoint_b.clone() } else { l.endpoint_a.clone() });
        acc += (l.latency_ms * 1e6).round() as u64;
        offsets.push(acc as f64 / 1e6);
    }
    Some((nodes, links, offsets, units as f64 / 1e6))
}

/// Expected per-edge outcome of a run of the enhanced `model`.
pub fn oracle_delivery(model: &InstanceModel, faults: &[FaultSpec], horizon_ms: u64) -> BTreeMap<String, OracleFlow> {
    let horizon = horizon_ms as f64;
    let alloc = model.allocation.as_ref().expect("enhanced model");
    let node_of = |f: &str, k: u32| {
        let id = InstanceId::new(f, k);
        alloc.iter().find(|p| p.instance == id).unwrap().node.clone()
    };
    let mut out = BTreeMap::new();
    for e in &model.edges {
        let src = model.function(&e.src_fn).unwrap();
        let dst = model.function(&e.dst_fn).unwrap();
        let period = 1000.0 / e.rate_hz;
        let voting = src.safety_mechanism == SafetyMechanism::Voting && src.redundancy > 1;
        let quorum = (src.redundancy + 2) / 2;
        let mut flow = OracleFlow {
            sent: 0,
            delivered: 0,
            latencies: Vec::new(),
        };
        let mut seq = 0u64;
        while (seq as f64) * period < horizon {
            flow.sent += 1;
            let t0 = seq as f64 * period;
            // (acceptance time, latency) per consumer replica
            let mut best: Option<(f64, f64)> = None;
            for c in 0..dst.redundancy {
                let dst_node = node_of(&dst.id, c);
                let mut arrivals: Vec<(f64, f64)> = Vec::new();
                for r in 0..src.redundancy {
                    let src_node = node_of(&src.id, r);
                    if crashed_by(faults, &src_node, t0, horizon) {
                        continue;
                    }
                    let Some((nodes, links, offsets, latency)) = path(model, &src_node, &dst_node) else {
                        continue;
                    };
                    let lost = nodes
                        .iter()
                        .zip(&offsets)
                        .any(|(n, off)| crashed_by(faults, n, t0 + off, horizon))
                        || links
                            .iter()
                            .zip(&offsets)
                            .any(|(l, off)| dropping(faults, l, t0 + off, horizon));
                    if !lost {
                        arrivals.push((t0 + latency, latency));
                    }
                }
                arrivals.sort_by(|a, b| a.0.total_cmp(&b.0));
                let accepted = if voting {
                    arrivals.first().and_then(|&(first, _)| {
                        let in_window: Vec<_> = arrivals.iter().filter(|a| a.0 - first <= 50.0).collect();
                        in_window.get(quorum as usize - 1).map(|a| **a)
                    })
                } else {
                    arrivals.first().copied()
                };
                if let Some(a) = accepted {
                    if best.is_none_or(|b| a.0 < b.0) {
                        best = Some(a);
                    }
                }
            }
            if let Some((_, latency)) = best {
                flow.delivered += 1;
                flow.latencies.push(latency);
            }
            seq += 1;
        }
        flow.latencies.sort_by(f64::total_cmp);
        out.insert(e.id.clone(), flow);
    }
    out
}
