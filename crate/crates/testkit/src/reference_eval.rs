//! Naive tree-walking interpreter for constraint ASTs.
//!
//! Works on the JSON form of the model, resolves variables by name through a
//! string-keyed environment and looks attributes up as JSON keys. Only the
//! verdicts are meant to agree with the production evaluator.

use std::collections::HashMap;

use forge_core::constraint::{
    ArgShape, BinOp, CollOp, Constraint, ConstraintSet, ContextType, Expr, ExprKind, Head, Literal, Step, UnOp,
    Verdict,
};
use forge_core::model::InstanceModel;
use serde_json::Value;

#[derive(Debug, Clone)]
enum RVal {
    Int(i64),
    Dec(f64),
    Str(String),
    Bool(bool),
    Asil(u8),
    Mech(String),
    Obj { kind: &'static str, id: String, data: Value },
    Coll(Vec<RVal>),
}

const ASIL: [&str; 5] = ["QM", "A", "B", "C", "D"];
const MECH: [&str; 3] = ["none", "hot_standby", "voting"];

struct Interp {
    model: Value,
    /// `(name, value)` frames; implicit iterators use the name `None`.
    env: Vec<(Option<String>, RVal)>,
}

type R = Result<RVal, String>;

fn num(v: &RVal) -> Option<f64> {
    match v {
        RVal::Int(i) => Some(*i as f64),
        RVal::Dec(d) => Some(*d),
        _ => None,
    }
}

fn eq(a: &RVal, b: &RVal) -> Result<bool, String> {
    match (a, b) {
        (RVal::Int(x), RVal::Int(y)) => Ok(x == y),
        (RVal::Int(_) | RVal::Dec(_), RVal::Int(_) | RVal::Dec(_)) => Ok(num(a) == num(b)),
        (RVal::Str(x), RVal::Str(y)) => Ok(x == y),
        (RVal::Bool(x), RVal::Bool(y)) => Ok(x == y),
        (RVal::Asil(x), RVal::Asil(y)) => Ok(x == y),
        (RVal::Mech(x), RVal::Mech(y)) => Ok(x == y),
        (RVal::Obj { kind: k1, id: i1, .. }, RVal::Obj { kind: k2, id: i2, .. }) => Ok(k1 == k2 && i1 == i2),
        _ => Err("type mismatch".into()),
    }
}

fn json_scalar(key: &str, v: &Value) -> R {
    match key {
        "asil" | "asil_cap" => {
            let s = v.as_str().ok_or("bad asil")?;
            Ok(RVal::Asil(ASIL.iter().position(|a| *a == s).ok_or("bad asil")? as u8))
        }
        "safety_mechanism" => Ok(RVal::Mech(v.as_str().ok_or("bad mechanism")?.to_string())),
        _ => match v {
            Value::Bool(b) => Ok(RVal::Bool(*b)),
            Value::String(s) => Ok(RVal::Str(s.clone())),
            Value::Number(n) if n.is_u64() || n.is_i64() => {
                n.as_i64().map(RVal::Int).ok_or_else(|| "integer out of range".to_string())
            }
            Value::Number(n) => Ok(RVal::Dec(n.as_f64().ok_or("bad number")?)),
            _ => Err(format!("unsupported attribute {key}")),
        },
    }
}

impl Interp {
    fn objects(&self, list: &str, kind: &'static str) -> RVal {
        let items = self.model[list].as_array().cloned().unwrap_or_default();
        RVal::Coll(
            items
                .into_iter()
                .map(|data| RVal::Obj {
                    kind,
                    id: data["id"].as_str().unwrap_or_default().to_string(),
                    data,
                })
                .collect(),
        )
    }

    fn placements(&self) -> R {
        let mut out = Vec::new();
        for p in self.model["allocation"].as_array().cloned().unwrap_or_default() {
            let instance = p["instance"].as_str().ok_or("bad placement")?.to_string();
            let (function, replica) = instance.rsplit_once('#').ok_or("bad placement")?;
            let spec = self.model["functions"]
                .as_array()
                .and_then(|fs| fs.iter().find(|f| f["id"] == function))
                .cloned()
                .ok_or("placement of unknown function")?;
            let data = serde_json::json!({
                "instance": instance,
                "function": function,
                "replica": replica.parse::<u64>().map_err(|e| e.to_string())?,
                "node": p["node"],
                "cpu_req": spec["cpu_req"],
                "mem_req": spec["mem_req"],
                "power_req": spec["power_req"],
                "asil": spec["asil"],
            });
            out.push(RVal::Obj {
                kind: "Placement",
                id: instance,
                data,
            });
        }
        Ok(RVal::Coll(out))
    }

    fn attr(&self, target: RVal, name: &str) -> R {
        let RVal::Obj { kind, id, data } = target else {
            return Err("navigation into non-object".into());
        };
        if kind == "Model" {
            return match name {
                "functions" => Ok(self.objects("functions", "Function")),
                "hardware" => Ok(self.objects("hardware", "HardwareNode")),
                "links" => Ok(self.objects("links", "Link")),
                "edges" => Ok(self.objects("edges", "FlowEdge")),
                "allocation" => self.placements(),
                _ => Err(format!("no attribute {name}")),
            };
        }
        if kind == "Function" && (name == "out_ports" || name == "in_ports") {
            let ports = data[name].as_array().cloned().unwrap_or_default();
            return Ok(RVal::Coll(
                ports
                    .into_iter()
                    .map(|p| RVal::Obj {
                        kind: "Port",
                        id: format!("{}.{}", id, p["name"].as_str().unwrap_or_default()),
                        data: p,
                    })
                    .collect(),
            ));
        }
        if name == "id" && kind == "Port" {
            return Err("ports have no id".into());
        }
        match data.get(name) {
            Some(v) => json_scalar(name, v),
            None => Err(format!("{kind} has no attribute {name}")),
        }
    }

    fn lookup(&self, head: &Head) -> R {
        match head {
            Head::SelfRef => Ok(self.env[0].1.clone()),
            Head::Var(v) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n.as_deref() == Some(v.as_str()) && v != "self")
                .map(|(_, val)| val.clone())
                .ok_or_else(|| format!("unbound {v}")),
            Head::Implicit => Ok(self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n.is_none())
                .unwrap_or(&self.env[0])
                .1
                .clone()),
        }
    }

    fn eval(&mut self, e: &Expr) -> R {
        match &e.kind {
            ExprKind::Literal(l) => match l {
                Literal::Int(i) => Ok(RVal::Int(*i)),
                Literal::Decimal(d) => Ok(RVal::Dec(*d)),
                Literal::Str(s) => Ok(RVal::Str(s.clone())),
                Literal::Bool(b) => Ok(RVal::Bool(*b)),
                Literal::Enum { ty, value } => match ty.as_str() {
                    "AsilLevel" | "Asil" => ASIL
                        .iter()
                        .position(|a| a == value)
                        .map(|p| RVal::Asil(p as u8))
                        .ok_or_else(|| "bad enum".into()),
                    "SafetyMechanism" if MECH.contains(&value.as_str()) => Ok(RVal::Mech(value.clone())),
                    _ => Err("bad enum".into()),
                },
            },
            ExprKind::Unary(op, x) => {
                let v = self.eval(x)?;
                match (op, v) {
                    (UnOp::Not, RVal::Bool(b)) => Ok(RVal::Bool(!b)),
                    (UnOp::Neg, RVal::Int(i)) => i.checked_neg().map(RVal::Int).ok_or_else(|| "overflow".into()),
                    (UnOp::Neg, RVal::Dec(d)) => Ok(RVal::Dec(-d)),
                    _ => Err("bad unary operand".into()),
                }
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                binop(*op, &a, &b)
            }
            ExprKind::Nav(nav) => {
                let mut cur = self.lookup(&nav.head)?;
                for step in &nav.steps {
                    cur = match step {
                        Step::Attr(a) => self.attr(cur, a)?,
                        Step::Call(call) => {
                            let RVal::Coll(items) = cur else {
                                return Err("collection op on non-collection".into());
                            };
                            match call.op.arg_shape() {
                                ArgShape::Empty => match call.op {
                                    CollOp::Size => RVal::Int(items.len() as i64),
                                    _ => sum(&items)?,
                                },
                                ArgShape::Value => {
                                    let needle = self.eval(call.arg.as_deref().unwrap())?;
                                    let mut found = false;
                                    for it in &items {
                                        found |= eq(it, &needle)?;
                                    }
                                    RVal::Bool(found)
                                }
                                ArgShape::Iterator => {
                                    let body = call.arg.as_deref().unwrap();
                                    let mut results = Vec::new();
                                    for it in &items {
                                        self.env.push((call.binder.clone(), it.clone()));
                                        let r = self.eval(body);
                                        self.env.pop();
                                        results.push(r?);
                                    }
                                    iterate(call.op, items, results)?
                                }
                            }
                        }
                    };
                }
                Ok(cur)
            }
        }
    }
}

fn sum(items: &[RVal]) -> R {
    if items.iter().all(|v| matches!(v, RVal::Int(_))) {
        let mut t: i64 = 0;
        for v in items {
            if let RVal::Int(i) = v {
                t = t.checked_add(*i).ok_or("overflow")?;
            }
        }
        return Ok(RVal::Int(t));
    }
    let mut t = 0.0;
    for v in items {
        t += num(v).ok_or("sum of non-number")?;
    }
    if t.is_finite() {
        Ok(RVal::Dec(t))
    } else {
        Err("non-finite".into())
    }
}

fn iterate(op: CollOp, items: Vec<RVal>, results: Vec<RVal>) -> R {
    let bools = || -> Result<Vec<bool>, String> {
        results
            .iter()
            .map(|r| match r {
                RVal::Bool(b) => Ok(*b),
                _ => Err("non-boolean body".to_string()),
            })
            .collect()
    };
    match op {
        CollOp::ForAll => Ok(RVal::Bool(bools()?.into_iter().all(|b| b))),
        CollOp::Exists => Ok(RVal::Bool(bools()?.into_iter().any(|b| b))),
        CollOp::Select => {
            let keep = bools()?;
            Ok(RVal::Coll(items.into_iter().zip(keep).filter(|(_, k)| *k).map(|(i, _)| i).collect()))
        }
        CollOp::Collect => Ok(RVal::Coll(results)),
        CollOp::IsUnique => {
            let mut unique = true;
            for i in 0..results.len() {
                for j in 0..results.len() {
                    if i < j && eq(&results[i], &results[j])? {
                        unique = false;
                    }
                }
            }
            Ok(RVal::Bool(unique))
        }
        _ => unreachable!("not an iterator operation"),
    }
}

fn binop(op: BinOp, a: &RVal, b: &RVal) -> R {
    match op {
        BinOp::And | BinOp::Or | BinOp::Implies => match (a, b) {
            (RVal::Bool(x), RVal::Bool(y)) => Ok(RVal::Bool(match op {
                BinOp::And => *x && *y,
                BinOp::Or => *x || *y,
                _ => !*x || *y,
            })),
            _ => Err("logic on non-boolean".into()),
        },
        BinOp::Eq => eq(a, b).map(RVal::Bool),
        BinOp::Ne => eq(a, b).map(|x| RVal::Bool(!x)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            // -1, 0, 1
            let c: i8 = match (a, b) {
                (RVal::Int(x), RVal::Int(y)) => (x > y) as i8 - (x < y) as i8,
                (RVal::Str(x), RVal::Str(y)) => (x > y) as i8 - (x < y) as i8,
                (RVal::Asil(x), RVal::Asil(y)) => (x > y) as i8 - (x < y) as i8,
                _ => {
                    let (Some(x), Some(y)) = (num(a), num(b)) else {
                        return Err("unordered".into());
                    };
                    if x.is_nan() || y.is_nan() {
                        return Err("nan".into());
                    }
                    (x > y) as i8 - (x < y) as i8
                }
            };
            Ok(RVal::Bool(match op {
                BinOp::Lt => c < 0,
                BinOp::Le => c <= 0,
                BinOp::Gt => c > 0,
                _ => c >= 0,
            }))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => {
            if let (RVal::Int(x), RVal::Int(y)) = (a, b) {
                let r = match op {
                    BinOp::Add => x.checked_add(*y),
                    BinOp::Sub => x.checked_sub(*y),
                    _ => x.checked_mul(*y),
                };
                return r.map(RVal::Int).ok_or_else(|| "overflow".into());
            }
            let (Some(x), Some(y)) = (num(a), num(b)) else {
                return Err("arithmetic on non-number".into());
            };
            let r = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                _ => x * y,
            };
            if r.is_finite() {
                Ok(RVal::Dec(r))
            } else {
                Err("non-finite".into())
            }
        }
        BinOp::Div => {
            let (Some(x), Some(y)) = (num(a), num(b)) else {
                return Err("division of non-number".into());
            };
            if y == 0.0 {
                return Err("division by zero".into());
            }
            let r = x / y;
            if r.is_finite() {
                Ok(RVal::Dec(r))
            } else {
                Err("non-finite".into())
            }
        }
    }
}

fn elements(model: &Value, context: ContextType) -> Vec<RVal> {
    let (list, kind) = match context {
        ContextType::Model => {
            return vec![RVal::Obj {
                kind: "Model",
                id: "model".into(),
                data: Value::Null,
            }]
        }
        ContextType::Function => ("functions", "Function"),
        ContextType::HardwareNode => ("hardware", "HardwareNode"),
        ContextType::Link => ("links", "Link"),
        ContextType::FlowEdge => ("edges", "FlowEdge"),
    };
    model[list]
        .as_array()
        .cloned()
        .unwrap_or_default()
        .into_iter()
        .map(|data| RVal::Obj {
            kind,
            id: data["id"].as_str().unwrap_or_default().to_string(),
            data,
        })
        .collect()
}

/// Verdict of one constraint on every element of its context, keyed by element id.
pub fn reference_verdicts(c: &Constraint, model: &InstanceModel) -> HashMap<String, Verdict> {
    let json = serde_json::to_value(model).expect("model serializes");
    let mut out = HashMap::new();
    for element in elements(&json, c.context) {
        let RVal::Obj { id, .. } = &element else { unreachable!() };
        let id = id.clone();
        let mut interp = Interp {
            model: json.clone(),
            env: vec![(Some("self".into()), element)],
        };
        let verdict = match interp.eval(&c.body) {
            Ok(RVal::Bool(true)) => Verdict::Holds,
            Ok(RVal::Bool(false)) => Verdict::Violated,
            _ => Verdict::Invalid,
        };
        out.insert(id, verdict);
    }
    out
}

/// `(constraint name, context, element) -> verdict` for a whole set.
pub fn reference_report(cs: &ConstraintSet, model: &InstanceModel) -> Vec<(String, String, String, Verdict)> {
    let mut out = Vec::new();
    for c in &cs.constraints {
        for (element, v) in reference_verdicts(c, model) {
            out.push((c.name.clone(), c.context.name().to_string(), element, v));
        }
    }
    out.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
    out
}
