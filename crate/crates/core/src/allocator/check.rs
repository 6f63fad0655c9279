use super::problem::units_to_ms;
use super::{AllocError, AllocationProblem, ObjectiveVector, Violation, ViolationKind};
use crate::model::AllocationMatrix;
use crate::Scalar;

/// Violations of a total assignment; empty iff feasible.
pub fn check_feasible<T: Scalar>(
    problem: &AllocationProblem<T>,
    m: &AllocationMatrix,
) -> Result<Vec<Violation<T>>, AllocError> {
    let genome = problem.genome(m)?;
    Ok(violations(problem, &genome, genome.len()))
}

pub fn objectives<T: Scalar>(
    problem: &AllocationProblem<T>,
    m: &AllocationMatrix,
) -> Result<ObjectiveVector<T>, AllocError> {
    let genome = problem.genome(m)?;
    Ok(genome_objectives(problem, &genome))
}

pub(crate) fn genome_objectives<T: Scalar>(problem: &AllocationProblem<T>, genome: &[usize]) -> ObjectiveVector<T> {
    let mut used = vec![false; problem.nodes.len()];
    let mut power = T::zero();
    for (i, &n) in genome.iter().enumerate() {
        used[n] = true;
        power = power + problem.instances[i].power_req;
    }
    let mut cost = T::zero();
    for (n, node) in problem.nodes.iter().enumerate() {
        if used[n] {
            power = power + node.base_power;
            cost = cost + node.cost;
        }
    }
    let mut traffic = T::zero();
    for f in &problem.flows {
        let (a, b) = (genome[f.src], genome[f.dst]);
        if a != b {
            if let Some(route) = &problem.routes[a][b] {
                traffic = traffic + f.bits_per_s * T::of_u64(route.hops() as u64);
            }
        }
    }
    ObjectiveVector {
        power_w: power,
        cost,
        traffic_bps: traffic,
    }
}

fn violation<T: Scalar>(kind: ViolationKind, subjects: Vec<String>, magnitude: T, normalized: T) -> Violation<T> {
    Violation {
        kind,
        subjects,
        magnitude,
        normalized,
    }
}

fn ratio<T: Scalar>(over: T, limit: T) -> T {
    if limit > T::zero() {
        over / limit
    } else {
        over
    }
}

/// Violations caused by the first `assigned` genes alone. Every kind only
/// grows as more genes are placed, so a non-empty result rules out all
/// completions of the prefix.
pub(crate) fn violations<T: Scalar>(problem: &AllocationProblem<T>, genome: &[usize], assigned: usize) -> Vec<Violation<T>> {
    let placed = &genome[..assigned];
    let mut out = Vec::new();
    let mut cpu = vec![0u64; problem.nodes.len()];
    let mut mem = vec![0u64; problem.nodes.len()];
    for (i, &n) in placed.iter().enumerate() {
        cpu[n] += problem.instances[i].cpu_req;
        mem[n] += problem.instances[i].mem_req;
    }
    for (n, node) in problem.nodes.iter().enumerate() {
        if cpu[n] > node.cpu_cap {
            let over = cpu[n] - node.cpu_cap;
            out.push(violation(
                ViolationKind::CpuCapacity,
                vec![node.id.clone()],
                T::of_u64(over),
                ratio(T::of_u64(over), T::of_u64(node.cpu_cap)),
            ));
        }
        if mem[n] > node.mem_cap {
            let over = mem[n] - node.mem_cap;
            out.push(violation(
                ViolationKind::MemCapacity,
                vec![node.id.clone()],
                T::of_u64(over),
                ratio(T::of_u64(over), T::of_u64(node.mem_cap)),
            ));
        }
    }
    for (i, &n) in placed.iter().enumerate() {
        let inst = &problem.instances[i];
        let node = &problem.nodes[n];
        if inst.asil > node.asil_cap {
            let gap = (inst.asil.rank() - node.asil_cap.rank()) as u64;
            out.push(violation(
                ViolationKind::Asil,
                vec![inst.id.to_string(), node.id.clone()],
                T::of_u64(gap),
                T::of_u64(gap) / T::of(4.0),
            ));
        }
    }
    for (function, members) in &problem.replica_groups {
        let mut per_node = vec![0u64; problem.nodes.len()];
        for &i in members.iter().filter(|&&i| i < assigned) {
            per_node[genome[i]] += 1;
        }
        for (n, &count) in per_node.iter().enumerate() {
            if count > 1 {
                out.push(violation(
                    ViolationKind::AntiAffinity,
                    vec![function.clone(), problem.nodes[n].id.clone()],
                    T::of_u64(count - 1),
                    T::of_u64(count - 1),
                ));
            }
        }
    }
    for (i, &n) in placed.iter().enumerate() {
        if let Some(pin) = problem.pins[i] {
            if pin != n {
                out.push(violation(
                    ViolationKind::Pinning,
                    vec![problem.instances[i].id.to_string(), problem.nodes[pin].id.clone()],
                    T::one(),
                    T::one(),
                ));
            }
        }
    }
    let mut load = vec![T::zero(); problem.links.len()];
    for f in &problem.flows {
        if f.src >= assigned || f.dst >= assigned {
            continue;
        }
        let (a, b) = (genome[f.src], genome[f.dst]);
        let subjects = || {
            vec![
                f.edge.clone(),
                problem.instances[f.src].id.to_string(),
                problem.instances[f.dst].id.to_string(),
            ]
        };
        let latency = if a == b {
            0
        } else {
            match &problem.routes[a][b] {
                Some(route) => {
                    for &l in &route.links {
                        load[l] = load[l] + f.bits_per_s;
                    }
                    route.latency_units
                }
                None => {
                    out.push(violation(ViolationKind::Unroutable, subjects(), T::one(), T::one()));
                    continue;
                }
            }
        };
        if let (Some(budget), Some(budget_ms)) = (f.budget_units, f.budget_ms) {
            if latency > budget {
                let over = T::of(units_to_ms(latency - budget));
                out.push(violation(ViolationKind::LatencyBudget, subjects(), over, ratio(over, budget_ms)));
            }
        }
    }
    for (l, link) in problem.links.iter().enumerate() {
        if load[l] > link.bandwidth_bps {
            let over = load[l] - link.bandwidth_bps;
            out.push(violation(
                ViolationKind::LinkBandwidth,
                vec![link.id.clone()],
                over,
                ratio(over, link.bandwidth_bps),
            ));
        }
    }
    out
}
