use std::collections::{BTreeMap, HashMap};

use super::AllocError;
use crate::model::{expand_instances, AllocationMatrix, AsilLevel, InstanceId, InstanceModel};
use crate::Scalar;

/// Latencies are routed in integer micro-units so that path sums and budget
/// comparisons are exact.
const LATENCY_UNITS_PER_MS: f64 = 1e6;

pub(crate) fn latency_units(ms: f64) -> u64 {
    (ms * LATENCY_UNITS_PER_MS).round().max(0.0) as u64
}

pub(crate) fn units_to_ms(units: u64) -> f64 {
    units as f64 / LATENCY_UNITS_PER_MS
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    pub id: InstanceId,
    pub cpu_req: u64,
    pub mem_req: u64,
    pub power_req: T,
    pub asil: AsilLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemNode<T> {
    pub id: String,
    pub cpu_cap: u64,
    pub mem_cap: u64,
    pub base_power: T,
    pub cost: T,
    pub asil_cap: AsilLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemLink<T> {
    pub id: String,
    pub bandwidth_bps: T,
}

/// One replica-to-replica flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow<T> {
    pub edge: String,
    pub src: usize,
    pub dst: usize,
    /// `rate_hz * msg_bytes * 8`.
    pub bits_per_s: T,
    pub budget_units: Option<u64>,
    pub budget_ms: Option<T>,
}

/// Shortest path between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Route<T> {
    /// Node indices from source to destination inclusive.
    pub nodes: Vec<usize>,
    /// Link indices traversed, in order.
    pub links: Vec<usize>,
    pub latency_units: u64,
    pub latency_ms: T,
}

impl<T> Route<T> {
    pub fn hops(&self) -> usize {
        self.links.len()
    }
}

/// Index-based view of an instance model for the solvers.
///
/// Instances follow [`expand_instances`] order and nodes are sorted by id, so
/// genomes (one node index per instance) compare in a deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem<T> {
    pub instances: Vec<ProblemInstance<T>>,
    pub nodes: Vec<ProblemNode<T>>,
    pub links: Vec<ProblemLink<T>>,
    pub flows: Vec<Flow<T>>,
    /// `routes[a][b]`; `None` when `a` and `b` are disconnected.
    pub routes: Vec<Vec<Option<Route<T>>>>,
    pub pins: Vec<Option<usize>>,
    /// Instance indices grouped by function, for anti-affinity.
    pub replica_groups: Vec<(String, Vec<usize>)>,
}

impl<T: Scalar> AllocationProblem<T> {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn instance_index(&self, id: &InstanceId) -> Option<usize> {
        self.instances.iter().position(|i| &i.id == id)
    }

    /// Number of total assignments, as a float to survive overflow.
    pub fn search_space(&self) -> f64 {
        (self.nodes.len() as f64).powi(self.instances.len() as i32)
    }

    pub fn matrix(&self, genome: &[usize]) -> AllocationMatrix {
        genome
            .iter()
            .enumerate()
            .map(|(i, &n)| (self.instances[i].id.clone(), self.nodes[n].id.clone()))
            .collect()
    }

    pub fn genome(&self, m: &AllocationMatrix) -> Result<Vec<usize>, AllocError> {
        if m.len() != self.instances.len() {
            return Err(AllocError::Totality(format!(
                "{} placements for {} instances",
                m.len(),
                self.instances.len()
            )));
        }
        self.instances
            .iter()
            .map(|inst| {
                let node = m
                    .node_of(&inst.id)
                    .ok_or_else(|| AllocError::Totality(format!("instance {} is not placed", inst.id)))?;
                self.node_index(node)
                    .ok_or_else(|| AllocError::Totality(format!("instance {} placed on unknown node {node}", inst.id)))
            })
            .collect()
    }
}

/// Builds the solver view of `model`; an existing allocation is ignored.
pub fn build_problem<T: Scalar>(
    model: &InstanceModel,
    pins: &[(InstanceId, String)],
) -> Result<AllocationProblem<T>, AllocError> {
    let ids = expand_instances(model);
    let instances: Vec<ProblemInstance<T>> = ids
        .iter()
        .map(|id| {
            let f = model.function(&id.function).expect("expanded from the model");
            ProblemInstance {
                id: id.clone(),
                cpu_req: f.cpu_req,
                mem_req: f.mem_req,
                power_req: T::of(f.power_req),
                asil: f.asil,
            }
        })
        .collect();
    let mut hw: Vec<_> = model.hardware.iter().collect();
    hw.sort_by(|a, b| a.id.cmp(&b.id));
    let nodes: Vec<ProblemNode<T>> = hw
        .iter()
        .map(|n| ProblemNode {
            id: n.id.clone(),
            cpu_cap: n.cpu_cap,
            mem_cap: n.mem_cap,
            base_power: T::of(n.base_power),
            cost: T::of(n.cost),
            asil_cap: n.asil_cap,
        })
        .collect();
    let node_idx: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();

    let mut model_links: Vec<_> = model.links.iter().collect();
    model_links.sort_by(|a, b| a.id.cmp(&b.id));
    let links: Vec<ProblemLink<T>> = model_links
        .iter()
        .map(|l| ProblemLink {
            id: l.id.clone(),
            bandwidth_bps: T::of(l.bandwidth_bps),
        })
        .collect();
    // adjacency: (neighbour, link index, latency units)
    let mut adj: Vec<Vec<(usize, usize, u64)>> = vec![Vec::new(); nodes.len()];
    for (li, l) in model_links.iter().enumerate() {
        let (a, b) = (node_idx[l.endpoint_a.as_str()], node_idx[l.endpoint_b.as_str()]);
        let w = latency_units(l.latency_ms);
        adj[a].push((b, li, w));
        adj[b].push((a, li, w));
    }
    let mut routes: Vec<Vec<Option<Route<T>>>> = vec![vec![None; nodes.len()]; nodes.len()];
    for a in 0..nodes.len() {
        let from_a = shortest_paths(&adj, a);
        for (b, r) in from_a.into_iter().enumerate() {
            if b < a {
                continue;
            }
            if let Some((units, path, via)) = r {
                let reversed = Route {
                    nodes: path.iter().rev().copied().collect(),
                    links: via.iter().rev().copied().collect(),
                    latency_units: units,
                    latency_ms: T::of(units_to_ms(units)),
                };
                routes[a][b] = Some(Route {
                    nodes: path,
                    links: via,
                    latency_units: units,
                    latency_ms: T::of(units_to_ms(units)),
                });
                routes[b][a] = Some(reversed);
            }
        }
    }

    let index_of: HashMap<&InstanceId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut edges: Vec<_> = model.edges.iter().collect();
    edges.sort_by(|a, b| a.id.cmp(&b.id));
    let mut flows = Vec::new();
    for e in edges {
        let src_r = model.function(&e.src_fn).expect("validated").redundancy;
        let dst_r = model.function(&e.dst_fn).expect("validated").redundancy;
        for s in 0..src_r {
            for d in 0..dst_r {
                flows.push(Flow {
                    edge: e.id.clone(),
                    src: index_of[&InstanceId::new(e.src_fn.clone(), s)],
                    dst: index_of[&InstanceId::new(e.dst_fn.clone(), d)],
                    bits_per_s: T::of(e.rate_hz) * T::of_u64(e.msg_bytes) * T::of(8.0),
                    budget_units: e.latency_budget_ms.map(latency_units),
                    budget_ms: e.latency_budget_ms.map(T::of),
                });
            }
        }
    }

    let mut pin_table = vec![None; instances.len()];
    for (inst, node) in pins {
        let i = *index_of.get(inst).ok_or_else(|| AllocError::UnknownPinTarget {
            what: "instance",
            id: inst.to_string(),
        })?;
        let n = *node_idx.get(node.as_str()).ok_or_else(|| AllocError::UnknownPinTarget {
            what: "node",
            id: node.clone(),
        })?;
        pin_table[i] = Some(n);
    }

    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        groups.entry(id.function.clone()).or_default().push(i);
    }

    Ok(AllocationProblem {
        instances,
        nodes,
        links,
        flows,
        routes,
        pins: pin_table,
        replica_groups: groups.into_iter().collect(),
    })
}

type Label = (u64, Vec<usize>, Vec<usize>);

/// Dijkstra keyed by `(latency, node sequence)`. Node indices follow id
/// order, so comparing index sequences compares id sequences.
fn shortest_paths(adj: &[Vec<(usize, usize, u64)>], source: usize) -> Vec<Option<Label>> {
    let n = adj.len();
    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    best[source] = Some((0, vec![source], Vec::new()));
    loop {
        let next = (0..n)
            .filter(|&v| !done[v] && best[v].is_some())
            .min_by(|&x, &y| {
                let (a, b) = (best[x].as_ref().unwrap(), best[y].as_ref().unwrap());
                (a.0, &a.1).cmp(&(b.0, &b.1))
            });
        let Some(u) = next else { break };
        done[u] = true;
        let (dist, path, via) = best[u].clone().unwrap();
        for &(v, link, w) in &adj[u] {
            if done[v] {
                continue;
            }
            let mut p = path.clone();
            p.push(v);
            let candidate = (dist + w, p);
            let better = match &best[v] {
                None => true,
                Some((d, q, _)) => (candidate.0, &candidate.1) < (*d, q),
            };
            if better {
                let mut l = via.clone();
                l.push(link);
                best[v] = Some((candidate.0, candidate.1, l));
            }
        }
    }
    best
}
