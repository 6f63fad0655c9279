//! Cross-reference and invariant checks run after a document deserializes.
//!
//! Function CPU and memory requirements are only type-checked here; their
//! positivity is a constraint-pack rule so that a zero requirement surfaces
//! as a named constraint violation rather than a load failure.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{expand_instances, InstanceModel, ModelError, SafetyMechanism};

type Result<T> = std::result::Result<T, ModelError>;

fn check_ident(path: String, id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(ModelError::schema(path, "identifier must not be empty"));
    }
    if let Some(c) = id.chars().find(|c| c.is_whitespace() || *c == '#' || *c == '/') {
        return Err(ModelError::schema(
            path,
            format!("identifier '{id}' contains forbidden character {c:?}"),
        ));
    }
    Ok(())
}

fn check_unique<'a>(
    class: &str,
    list: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<HashMap<&'a str, usize>> {
    let mut seen = HashMap::new();
    for (i, id) in ids.enumerate() {
        check_ident(format!("{list}[{i}].id"), id)?;
        if seen.insert(id, i).is_some() {
            return Err(ModelError::schema(
                format!("{list}[{i}].id"),
                format!("duplicate {class} id '{id}'"),
            ));
        }
    }
    Ok(seen)
}

fn check_decimal(path: String, value: f64, positive: bool) -> Result<()> {
    let ok = value.is_finite() && if positive { value > 0.0 } else { value >= 0.0 };
    if ok {
        Ok(())
    } else {
        let need = if positive { "positive" } else { "non-negative" };
        Err(ModelError::schema(path, format!("must be a finite {need} number, got {value}")))
    }
}

pub(super) fn validate(model: &InstanceModel) -> Result<()> {
    let functions = check_unique("function", "functions", model.functions.iter().map(|f| f.id.as_str()))?;
    for (i, f) in model.functions.iter().enumerate() {
        let at = |field: &str| format!("functions[{i}].{field}");
        check_decimal(at("power_req"), f.power_req, false)?;
        if f.redundancy == 0 {
            return Err(ModelError::schema(at("redundancy"), "must be at least 1"));
        }
        if f.redundancy > 1 && f.safety_mechanism == SafetyMechanism::None {
            return Err(ModelError::schema(
                at("safety_mechanism"),
                format!("redundancy {} requires a safety mechanism other than none", f.redundancy),
            ));
        }
        let mut names = HashSet::new();
        for (list, ports) in [("out_ports", &f.out_ports), ("in_ports", &f.in_ports)] {
            for (j, p) in ports.iter().enumerate() {
                check_ident(format!("functions[{i}].{list}[{j}].name"), &p.name)?;
                if p.datatype.is_empty() {
                    return Err(ModelError::schema(
                        format!("functions[{i}].{list}[{j}].datatype"),
                        "datatype must not be empty",
                    ));
                }
                if !names.insert(p.name.as_str()) {
                    return Err(ModelError::schema(
                        format!("functions[{i}].{list}[{j}].name"),
                        format!("duplicate port name '{}' in function '{}'", p.name, f.id),
                    ));
                }
            }
        }
    }

    let nodes = check_unique("hardware node", "hardware", model.hardware.iter().map(|n| n.id.as_str()))?;
    for (i, n) in model.hardware.iter().enumerate() {
        let at = |field: &str| format!("hardware[{i}].{field}");
        if n.cpu_cap == 0 {
            return Err(ModelError::schema(at("cpu_cap"), "must be positive"));
        }
        if n.mem_cap == 0 {
            return Err(ModelError::schema(at("mem_cap"), "must be positive"));
        }
        check_decimal(at("base_power"), n.base_power, false)?;
        check_decimal(at("cost"), n.cost, false)?;
    }

    check_unique("link", "links", model.links.iter().map(|l| l.id.as_str()))?;
    let mut pairs = BTreeSet::new();
    for (i, l) in model.links.iter().enumerate() {
        let at = |field: &str| format!("links[{i}].{field}");
        for (field, end) in [("endpoint_a", &l.endpoint_a), ("endpoint_b", &l.endpoint_b)] {
            if !nodes.contains_key(end.as_str()) {
                return Err(ModelError::schema(at(field), format!("unknown hardware node '{end}'")));
            }
        }
        if l.endpoint_a == l.endpoint_b {
            return Err(ModelError::schema(at("endpoint_b"), "link endpoints must differ"));
        }
        check_decimal(at("bandwidth_bps"), l.bandwidth_bps, true)?;
        check_decimal(at("latency_ms"), l.latency_ms, false)?;
        let key = if l.endpoint_a < l.endpoint_b {
            (l.endpoint_a.as_str(), l.endpoint_b.as_str())
        } else {
            (l.endpoint_b.as_str(), l.endpoint_a.as_str())
        };
        if !pairs.insert(key) {
            return Err(ModelError::schema(
                at("id"),
                format!("second link between '{}' and '{}'", key.0, key.1),
            ));
        }
    }

    check_unique("edge", "edges", model.edges.iter().map(|e| e.id.as_str()))?;
    for (i, e) in model.edges.iter().enumerate() {
        let at = |field: &str| format!("edges[{i}].{field}");
        let src = functions
            .get(e.src_fn.as_str())
            .map(|&k| &model.functions[k])
            .ok_or_else(|| ModelError::schema(at("src_fn"), format!("unknown function '{}'", e.src_fn)))?;
        let dst = functions
            .get(e.dst_fn.as_str())
            .map(|&k| &model.functions[k])
            .ok_or_else(|| ModelError::schema(at("dst_fn"), format!("unknown function '{}'", e.dst_fn)))?;
        let out = src.out_port(&e.src_port).ok_or_else(|| {
            ModelError::schema(at("src_port"), format!("function '{}' has no out port '{}'", src.id, e.src_port))
        })?;
        let inp = dst.in_port(&e.dst_port).ok_or_else(|| {
            ModelError::schema(at("dst_port"), format!("function '{}' has no in port '{}'", dst.id, e.dst_port))
        })?;
        if out.datatype != inp.datatype {
            return Err(ModelError::schema(
                at("dst_port"),
                format!(
                    "incompatible interface: {}.{} produces datatype '{}' but {}.{} consumes '{}'",
                    src.id, out.name, out.datatype, dst.id, inp.name, inp.datatype
                ),
            ));
        }
        check_decimal(at("rate_hz"), e.rate_hz, true)?;
        if e.msg_bytes == 0 {
            return Err(ModelError::schema(at("msg_bytes"), "must be positive"));
        }
        if let Some(b) = e.latency_budget_ms {
            check_decimal(at("latency_budget_ms"), b, false)?;
        }
    }

    if let Some(alloc) = &model.allocation {
        let expected: BTreeSet<_> = expand_instances(model).into_iter().collect();
        let mut seen = BTreeSet::new();
        for (i, p) in alloc.iter().enumerate() {
            let at = |field: &str| format!("allocation[{i}].{field}");
            if !expected.contains(&p.instance) {
                return Err(ModelError::schema(
                    at("instance"),
                    format!("instance '{}' does not exist", p.instance),
                ));
            }
            if !seen.insert(&p.instance) {
                return Err(ModelError::schema(
                    at("instance"),
                    format!("instance '{}' allocated twice", p.instance),
                ));
            }
            if !nodes.contains_key(p.node.as_str()) {
                return Err(ModelError::schema(at("node"), format!("unknown hardware node '{}'", p.node)));
            }
        }
        if let Some(missing) = expected.iter().find(|i| !seen.contains(i)) {
            return Err(ModelError::schema(
                "allocation",
                format!("instance '{missing}' is not allocated"),
            ));
        }
    }
    Ok(())
}
