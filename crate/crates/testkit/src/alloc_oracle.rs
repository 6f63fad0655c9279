//! Brute-force allocation oracle working directly on the instance model.
//!
//! Routes are found by listing every simple path; assignments by counting
//! through all `|nodes|^|instances|` combinations with no pruning.

use std::collections::HashMap;

use forge_core::model::{InstanceId, InstanceModel};

/// Best simple path between two nodes: `(latency in micro-ms, link ids)`.
pub fn oracle_route(model: &InstanceModel, from: &str, to: &str) -> Option<(u64, Vec<String>)> {
    if from == to {
        return Some((0, Vec::new()));
    }
    let mut best: Option<(u64, Vec<String>, Vec<String>)> = None;
    let mut stack = vec![(from.to_string(), vec![from.to_string()], Vec::<String>::new(), 0u64)];
    while let Some((at, nodes, links, lat)) = stack.pop() {
        if at == to {
            let better = match &best {
                None => true,
                Some((l, ns, _)) => (lat, &nodes) < (*l, ns),
            };
            if better {
                best = Some((lat, nodes, links));
            }
            continue;
        }
        for l in &model.links {
            let next = if l.endpoint_a == at {
                &l.endpoint_b
            } else if l.endpoint_b == at {
                &l.endpoint_a
            } else {
                continue;
            };
            if nodes.contains(next) {
                continue;
            }
            let mut ns = nodes.clone();
            ns.push(next.clone());
            let mut ls = links.clone();
            ls.push(l.id.clone());
            stack.push((next.clone(), ns, ls, lat + (l.latency_ms * 1e6).round() as u64));
        }
    }
    best.map(|(l, _, links)| (l, links))
}

fn instances(model: &InstanceModel) -> Vec<InstanceId> {
    let mut out = Vec::new();
    for f in &model.functions {
        for k in 0..f.redundancy {
            out.push(InstanceId::new(f.id.clone(), k));
        }
    }
    out.sort();
    out
}

/// `(feasible, [power, cost, traffic])` of one assignment.
pub fn oracle_score(model: &InstanceModel, placement: &HashMap<InstanceId, String>) -> (bool, [f64; 3]) {
    let mut feasible = true;
    let mut power = 0.0;
    let mut cost = 0.0;
    for n in &model.hardware {
        let hosted: Vec<&InstanceId> = placement.iter().filter(|(_, v)| **v == n.id).map(|(k, _)| k).collect();
        if hosted.is_empty() {
            continue;
        }
        power += n.base_power;
        cost += n.cost;
        let mut cpu = 0;
        let mut mem = 0;
        for i in &hosted {
            let f = model.function(&i.function).unwrap();
            cpu += f.cpu_req;
            mem += f.mem_req;
            if f.asil > n.asil_cap {
                feasible = false;
            }
        }
        if cpu > n.cpu_cap || mem > n.mem_cap {
            feasible = false;
        }
        for a in &hosted {
            if hosted.iter().any(|b| b.function == a.function && b.replica != a.replica) {
                feasible = false;
            }
        }
    }
    for (i, _) in placement.iter() {
        power += model.function(&i.function).unwrap().power_req;
    }
    let mut traffic = 0.0;
    let mut load: HashMap<String, f64> = HashMap::new();
    for e in &model.edges {
        let (sf, df) = (model.function(&e.src_fn).unwrap(), model.function(&e.dst_fn).unwrap());
        for s in 0..sf.redundancy {
            for d in 0..df.redundancy {
                let a = &placement[&InstanceId::new(sf.id.clone(), s)];
                let b = &placement[&InstanceId::new(df.id.clone(), d)];
                let Some((lat, links)) = oracle_route(model, a, b) else {
                    feasible = false;
                    continue;
                };
                let bits = e.rate_hz * e.msg_bytes as f64 * 8.0;
                traffic += bits * links.len() as f64;
                for l in links {
                    *load.entry(l).or_default() += bits;
                }
                if let Some(budget) = e.latency_budget_ms {
                    if lat > (budget * 1e6).round() as u64 {
                        feasible = false;
                    }
                }
            }
        }
    }
    for l in &model.links {
        if load.get(&l.id).copied().unwrap_or(0.0) > l.bandwidth_bps {
            feasible = false;
        }
    }
    (feasible, [power, cost, traffic])
}

/// Every total assignment of the model's instances, as maps.
pub fn all_assignments(model: &InstanceModel) -> Vec<HashMap<InstanceId, String>> {
    let ids = instances(model);
    let nodes: Vec<&str> = model.hardware.iter().map(|n| n.id.as_str()).collect();
    if nodes.is_empty() {
        return if ids.is_empty() { vec![HashMap::new()] } else { vec![] };
    }
    let total = nodes.len().pow(ids.len() as u32);
    (0..total)
        .map(|mut code| {
            ids.iter()
                .map(|id| {
                    let n = nodes[code % nodes.len()];
                    code /= nodes.len();
                    (id.clone(), n.to_string())
                })
                .collect()
        })
        .collect()
}

fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Non-dominated objective points over all feasible assignments, sorted.
pub fn oracle_front(model: &InstanceModel) -> Vec<[f64; 3]> {
    let feasible: Vec<[f64; 3]> = all_assignments(model)
        .iter()
        .map(|a| oracle_score(model, a))
        .filter(|(ok, _)| *ok)
        .map(|(_, o)| o)
        .collect();
    let mut front: Vec<[f64; 3]> = feasible
        .iter()
        .filter(|o| !feasible.iter().any(|p| dominates(p, o)))
        .copied()
        .collect();
    front.sort_by(|a, b| a.partial_cmp(b).unwrap());
    front.dedup();
    front
}
