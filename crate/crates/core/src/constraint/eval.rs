//! Production evaluator.
//!
//! Constraints are compiled once: variables become environment slots,
//! attribute names become [`AttrKey`]s and literals are resolved to values.
//! Every `(constraint, element)` pair is then evaluated independently and the
//! report is sorted by constraint name, context and element id.

use std::borrow::Cow;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::ast::*;
use super::diagnostics::BodyShape;
use crate::model::{AsilLevel, FlowEdge, FunctionSpec, HardwareNode, InstanceModel, Link, Placement, Port, SafetyMechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub constraint: String,
    pub context: String,
    pub element: String,
    pub verdict: Verdict,
    /// Variable bindings that witness a failure, `self` first.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Location of the failing sub-expression for invalid verdicts.
    #[serde(skip)]
    pub span: Option<Span>,
    #[serde(skip)]
    pub shape: BodyShape,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub entries: Vec<ReportEntry>,
}

impl EvaluationReport {
    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| e.verdict != Verdict::Holds)
    }

    pub fn all_hold(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == verdict).count()
    }
}

/// Element identifier used in reports for a model-context constraint.
pub const MODEL_ELEMENT_ID: &str = "model";

/// Evaluates every constraint against every element of its context type.
pub fn evaluate(cs: &ConstraintSet, model: &InstanceModel) -> EvaluationReport {
    let compiled: Vec<(Node, BodyShape)> = cs
        .constraints
        .iter()
        .map(|c| (compile_body(&c.body), BodyShape::of(&c.body)))
        .collect();
    let ctx = Ctx::new(model);
    let mut jobs = Vec::new();
    for (ci, c) in cs.constraints.iter().enumerate() {
        for element in context_elements(model, c.context) {
            jobs.push((ci, element));
        }
    }
    let mut entries: Vec<ReportEntry> = jobs
        .into_par_iter()
        .map(|(ci, element)| {
            let c = &cs.constraints[ci];
            let (body, shape) = &compiled[ci];
            ctx.check(c, body, shape, element)
        })
        .collect();
    entries.sort_by(|a, b| {
        (a.constraint.as_str(), a.context.as_str(), a.element.as_str())
            .cmp(&(b.constraint.as_str(), b.context.as_str(), b.element.as_str()))
    });
    EvaluationReport { entries }
}

/// The model elements a constraint with `context` ranges over.
pub fn context_elements(model: &InstanceModel, context: ContextType) -> Vec<Obj<'_>> {
    match context {
        ContextType::Function => model.functions.iter().map(Obj::Function).collect(),
        ContextType::HardwareNode => model.hardware.iter().map(Obj::Node).collect(),
        ContextType::Link => model.links.iter().map(Obj::Link).collect(),
        ContextType::FlowEdge => model.edges.iter().map(Obj::Edge).collect(),
        ContextType::Model => vec![Obj::Model(model)],
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Obj<'a> {
    Model(&'a InstanceModel),
    Function(&'a FunctionSpec),
    Node(&'a HardwareNode),
    Link(&'a Link),
    Edge(&'a FlowEdge),
    Port(&'a FunctionSpec, &'a Port),
    Placement(&'a Placement),
}

impl<'a> Obj<'a> {
    pub fn kind(&self) -> &'static str {
        match self {
            Obj::Model(_) => "Model",
            Obj::Function(_) => "Function",
            Obj::Node(_) => "HardwareNode",
            Obj::Link(_) => "Link",
            Obj::Edge(_) => "FlowEdge",
            Obj::Port(..) => "Port",
            Obj::Placement(_) => "Placement",
        }
    }

    pub fn id(&self) -> Cow<'a, str> {
        match *self {
            Obj::Model(_) => Cow::Borrowed(MODEL_ELEMENT_ID),
            Obj::Function(f) => Cow::Borrowed(&f.id),
            Obj::Node(n) => Cow::Borrowed(&n.id),
            Obj::Link(l) => Cow::Borrowed(&l.id),
            Obj::Edge(e) => Cow::Borrowed(&e.id),
            Obj::Port(f, p) => Cow::Owned(format!("{}.{}", f.id, p.name)),
            Obj::Placement(p) => Cow::Owned(p.instance.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
enum Val<'a> {
    Int(i64),
    Dec(f64),
    Str(Cow<'a, str>),
    Bool(bool),
    Asil(AsilLevel),
    Mech(SafetyMechanism),
    Obj(Obj<'a>),
    Coll(Vec<Val<'a>>),
}

impl Val<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Val::Int(_) => "integer",
            Val::Dec(_) => "decimal",
            Val::Str(_) => "string",
            Val::Bool(_) => "boolean",
            Val::Asil(_) => "AsilLevel",
            Val::Mech(_) => "SafetyMechanism",
            Val::Obj(_) => "object",
            Val::Coll(_) => "collection",
        }
    }

    fn show(&self) -> String {
        match self {
            Val::Int(i) => i.to_string(),
            Val::Dec(d) => d.to_string(),
            Val::Str(s) => format!("'{s}'"),
            Val::Bool(b) => b.to_string(),
            Val::Asil(a) => a.to_string(),
            Val::Mech(m) => m.to_string(),
            Val::Obj(o) => o.id().into_owned(),
            Val::Coll(items) => format!("collection of {}", items.len()),
        }
    }

    fn num(&self) -> Option<f64> {
        match *self {
            Val::Int(i) => Some(i as f64),
            Val::Dec(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttrKey {
    Id,
    CpuReq,
    MemReq,
    PowerReq,
    Asil,
    Redundancy,
    SafetyMechanism,
    OutPorts,
    InPorts,
    CpuCap,
    MemCap,
    BasePower,
    Cost,
    AsilCap,
    EndpointA,
    EndpointB,
    BandwidthBps,
    LatencyMs,
    SrcFn,
    DstFn,
    SrcPort,
    DstPort,
    RateHz,
    MsgBytes,
    LatencyBudgetMs,
    Functions,
    Hardware,
    Links,
    Edges,
    Allocation,
    Name,
    Datatype,
    Instance,
    Function,
    Replica,
    Node,
}

impl AttrKey {
    fn resolve(name: &str) -> Option<AttrKey> {
        use AttrKey::*;
        Some(match name {
            "id" => Id,
            "cpu_req" => CpuReq,
            "mem_req" => MemReq,
            "power_req" => PowerReq,
            "asil" => Asil,
            "redundancy" => Redundancy,
            "safety_mechanism" => SafetyMechanism,
            "out_ports" => OutPorts,
            "in_ports" => InPorts,
            "cpu_cap" => CpuCap,
            "mem_cap" => MemCap,
            "base_power" => BasePower,
            "cost" => Cost,
            "asil_cap" => AsilCap,
            "endpoint_a" => EndpointA,
            "endpoint_b" => EndpointB,
            "bandwidth_bps" => BandwidthBps,
            "latency_ms" => LatencyMs,
            "src_fn" => SrcFn,
            "dst_fn" => DstFn,
            "src_port" => SrcPort,
            "dst_port" => DstPort,
            "rate_hz" => RateHz,
            "msg_bytes" => MsgBytes,
            "latency_budget_ms" => LatencyBudgetMs,
            "functions" => Functions,
            "hardware" => Hardware,
            "links" => Links,
            "edges" => Edges,
            "allocation" => Allocation,
            "name" => Name,
            "datatype" => Datatype,
            "instance" => Instance,
            "function" => Function,
            "replica" => Replica,
            "node" => Node,
            _ => return None,
        })
    }
}

#[derive(Debug)]
enum Node {
    Const(Literal),
    Slot(usize),
    Unbound(String),
    Attr(Box<Node>, String, Option<AttrKey>),
    Call {
        target: Box<Node>,
        op: CollOp,
        binder: String,
        arg: Option<Box<Node>>,
    },
    Bin(BinOp, Box<Node>, Box<Node>),
    Un(UnOp, Box<Node>),
    At(Box<Node>, Span),
}

struct Scope {
    name: Option<String>,
}

fn compile_body(body: &Expr) -> Node {
    let mut scopes = vec![Scope {
        name: Some("self".to_string()),
    }];
    compile(body, &mut scopes)
}

fn compile(e: &Expr, scopes: &mut Vec<Scope>) -> Node {
    let node = match &e.kind {
        ExprKind::Literal(l) => Node::Const(l.clone()),
        ExprKind::Binary(op, l, r) => Node::Bin(*op, Box::new(compile(l, scopes)), Box::new(compile(r, scopes))),
        ExprKind::Unary(op, x) => Node::Un(*op, Box::new(compile(x, scopes))),
        ExprKind::Nav(nav) => {
            let mut node = match &nav.head {
                Head::SelfRef => Node::Slot(0),
                Head::Var(v) => scopes
                    .iter()
                    .rposition(|s| s.name.as_deref() == Some(v.as_str()) && v != "self")
                    .map(Node::Slot)
                    .unwrap_or_else(|| Node::Unbound(v.clone())),
                Head::Implicit => Node::Slot(scopes.iter().rposition(|s| s.name.is_none()).unwrap_or(0)),
            };
            for step in &nav.steps {
                node = match step {
                    Step::Attr(a) => Node::Attr(Box::new(node), a.clone(), AttrKey::resolve(a)),
                    Step::Call(call) => {
                        let arg = call.arg.as_ref().map(|a| {
                            if call.op.arg_shape() == ArgShape::Iterator {
                                scopes.push(Scope {
                                    name: call.binder.clone(),
                                });
                                let n = compile(a, scopes);
                                scopes.pop();
                                n
                            } else {
                                compile(a, scopes)
                            }
                        });
                        Node::At(
                            Box::new(Node::Call {
                                target: Box::new(node),
                                op: call.op,
                                binder: call.binder.clone().unwrap_or_else(|| "it".to_string()),
                                arg: arg.map(Box::new),
                            }),
                            call.span,
                        )
                    }
                };
            }
            node
        }
    };
    Node::At(Box::new(node), e.span)
}

struct Failure {
    reason: String,
    span: Span,
    bindings: Vec<(String, String)>,
}

type Env<'a> = Vec<(&'a str, Val<'a>)>;

struct Ctx<'a> {
    functions: HashMap<&'a str, &'a FunctionSpec>,
}

fn int_of(v: u64) -> Result<Val<'static>, String> {
    i64::try_from(v)
        .map(Val::Int)
        .map_err(|_| format!("integer {v} exceeds the supported range"))
}

impl<'a> Ctx<'a> {
    fn new(model: &'a InstanceModel) -> Self {
        Ctx {
            functions: model.functions.iter().map(|f| (f.id.as_str(), f)).collect(),
        }
    }

    fn check(&self, c: &Constraint, body: &'a Node, shape: &BodyShape, element: Obj<'a>) -> ReportEntry {
        let element_id = element.id().into_owned();
        let mut env: Env<'a> = vec![("self", Val::Obj(element))];
        let mut entry = ReportEntry {
            constraint: c.name.clone(),
            context: c.context.name().to_string(),
            element: element_id.clone(),
            verdict: Verdict::Holds,
            witness: Vec::new(),
            reason: None,
            span: None,
            shape: shape.clone(),
        };
        match self.eval(body, &mut env, Span::default()) {
            Ok(Val::Bool(true)) => {}
            Ok(Val::Bool(false)) => {
                entry.verdict = Verdict::Violated;
                entry.witness.push(("self".to_string(), element_id));
                self.drill_witness(body, &mut env, &mut entry.witness);
            }
            Ok(other) => {
                entry.verdict = Verdict::Invalid;
                entry.reason = Some(format!("constraint body evaluated to {}, expected boolean", other.kind()));
                entry.span = Some(c.body.span);
                entry.witness.push(("self".to_string(), element_id));
            }
            Err(f) => {
                entry.verdict = Verdict::Invalid;
                entry.reason = Some(f.reason);
                entry.span = Some(f.span);
                entry.witness = f.bindings;
            }
        }
        entry
    }

    /// Follows a chain of `forAll` calls on the violated path and records the
    /// first counterexample at each level.
    fn drill_witness(&self, node: &'a Node, env: &mut Env<'a>, out: &mut Vec<(String, String)>) {
        let mut node = node;
        while let Node::At(inner, _) = node {
            node = inner;
        }
        let Node::Call {
            target,
            op: CollOp::ForAll,
            binder,
            arg: Some(body),
        } = node
        else {
            return;
        };
        let Ok(Val::Coll(items)) = self.eval(target, env, Span::default()) else {
            return;
        };
        for item in items {
            env.push((binder.as_str(), item.clone()));
            let holds = matches!(self.eval(body, env, Span::default()), Ok(Val::Bool(true)));
            if !holds {
                out.push((binder.clone(), item.show()));
                self.drill_witness(body, env, out);
                env.pop();
                return;
            }
            env.pop();
        }
    }

    fn fail<T>(&self, env: &Env<'a>, span: Span, reason: impl Into<String>) -> Result<T, Failure> {
        Err(Failure {
            reason: reason.into(),
            span,
            bindings: env
                .iter()
                .filter_map(|(name, v)| match v {
                    Val::Obj(o) => Some((name.to_string(), o.id().into_owned())),
                    _ => None,
                })
                .collect(),
        })
    }

    fn eval(&self, node: &'a Node, env: &mut Env<'a>, span: Span) -> Result<Val<'a>, Failure> {
        match node {
            Node::At(inner, s) => self.eval(inner, env, *s),
            Node::Const(lit) => match lit {
                Literal::Int(i) => Ok(Val::Int(*i)),
                Literal::Decimal(d) => Ok(Val::Dec(*d)),
                Literal::Str(s) => Ok(Val::Str(Cow::Borrowed(s))),
                Literal::Bool(b) => Ok(Val::Bool(*b)),
                Literal::Enum { ty, value } => match ty.as_str() {
                    "AsilLevel" | "Asil" => value
                        .parse()
                        .map(Val::Asil)
                        .or_else(|e| self.fail(env, span, e)),
                    "SafetyMechanism" => value
                        .parse()
                        .map(Val::Mech)
                        .or_else(|e| self.fail(env, span, e)),
                    _ => self.fail(env, span, format!("unknown enumeration '{ty}'")),
                },
            },
            Node::Slot(i) => Ok(env[*i].1.clone()),
            Node::Unbound(v) => self.fail(env, span, format!("unbound variable '{v}'")),
            Node::Attr(target, name, key) => {
                let v = self.eval(target, env, span)?;
                let Some(key) = *key else {
                    return self.fail(env, span, format!("unknown attribute '{name}'"));
                };
                match v {
                    Val::Obj(o) => self.attr(o, key, name).or_else(|e| self.fail(env, span, e)),
                    other => self.fail(env, span, format!("cannot navigate into a {}", other.kind())),
                }
            }
            Node::Un(op, x) => {
                let v = self.eval(x, env, span)?;
                match (op, v) {
                    (UnOp::Not, Val::Bool(b)) => Ok(Val::Bool(!b)),
                    (UnOp::Neg, Val::Int(i)) => match i.checked_neg() {
                        Some(n) => Ok(Val::Int(n)),
                        None => self.fail(env, span, "integer overflow"),
                    },
                    (UnOp::Neg, Val::Dec(d)) => Ok(Val::Dec(-d)),
                    (UnOp::Not, other) => self.fail(env, span, format!("'not' applied to {}", other.kind())),
                    (UnOp::Neg, other) => self.fail(env, span, format!("negation applied to {}", other.kind())),
                }
            }
            Node::Bin(op, l, r) => {
                let lv = self.eval(l, env, span)?;
                let rv = self.eval(r, env, span)?;
                binary(*op, &lv, &rv).or_else(|e| self.fail(env, span, e))
            }
            Node::Call { target, op, binder, arg } => {
                let coll = match self.eval(target, env, span)? {
                    Val::Coll(items) => items,
                    other => {
                        return self.fail(env, span, format!("'{}' applied to a {}", op.name(), other.kind()))
                    }
                };
                self.call(*op, coll, binder, arg.as_deref(), env, span)
            }
        }
    }

    fn call(
        &self,
        op: CollOp,
        items: Vec<Val<'a>>,
        binder: &'a str,
        arg: Option<&'a Node>,
        env: &mut Env<'a>,
        span: Span,
    ) -> Result<Val<'a>, Failure> {
        match op {
            CollOp::Size => Ok(Val::Int(items.len() as i64)),
            CollOp::Sum => {
                if items.iter().all(|v| matches!(v, Val::Int(_))) {
                    let mut total: i64 = 0;
                    for v in &items {
                        if let Val::Int(i) = v {
                            match total.checked_add(*i) {
                                Some(t) => total = t,
                                None => return self.fail(env, span, "integer overflow in sum"),
                            }
                        }
                    }
                    return Ok(Val::Int(total));
                }
                let mut total = 0.0f64;
                for v in &items {
                    match v.num() {
                        Some(x) => total += x,
                        None => return self.fail(env, span, format!("sum over a {}", v.kind())),
                    }
                }
                if total.is_finite() {
                    Ok(Val::Dec(total))
                } else {
                    self.fail(env, span, "non-finite sum")
                }
            }
            CollOp::Includes => {
                let arg = arg.expect("parser guarantees an includes argument");
                let needle = self.eval(arg, env, span)?;
                let mut found = false;
                for v in &items {
                    if values_equal(v, &needle).or_else(|e| self.fail(env, span, e))? {
                        found = true;
                    }
                }
                Ok(Val::Bool(found))
            }
            CollOp::ForAll | CollOp::Exists | CollOp::Select | CollOp::Collect | CollOp::IsUnique => {
                let body = arg.expect("parser guarantees an iterator body");
                let mut results = Vec::with_capacity(items.len());
                for item in &items {
                    env.push((binder, item.clone()));
                    let r = self.eval(body, env, span);
                    env.pop();
                    results.push(r?);
                }
                let truth = |v: &Val<'a>, env: &Env<'a>| match v {
                    Val::Bool(b) => Ok(*b),
                    other => self.fail(env, span, format!("'{}' body evaluated to {}", op.name(), other.kind())),
                };
                match op {
                    CollOp::ForAll => {
                        let mut all = true;
                        for r in &results {
                            all &= truth(r, env)?;
                        }
                        Ok(Val::Bool(all))
                    }
                    CollOp::Exists => {
                        let mut any = false;
                        for r in &results {
                            any |= truth(r, env)?;
                        }
                        Ok(Val::Bool(any))
                    }
                    CollOp::Select => {
                        let mut kept = Vec::new();
                        for (item, r) in items.into_iter().zip(&results) {
                            if truth(r, env)? {
                                kept.push(item);
                            }
                        }
                        Ok(Val::Coll(kept))
                    }
                    CollOp::Collect => Ok(Val::Coll(results)),
                    CollOp::IsUnique => {
                        let mut unique = true;
                        for i in 0..results.len() {
                            for j in i + 1..results.len() {
                                if values_equal(&results[i], &results[j]).or_else(|e| self.fail(env, span, e))? {
                                    unique = false;
                                }
                            }
                        }
                        Ok(Val::Bool(unique))
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    fn attr(&self, o: Obj<'a>, key: AttrKey, name: &str) -> Result<Val<'a>, String> {
        use AttrKey as K;
        let s = |x: &'a str| Ok(Val::Str(Cow::Borrowed(x)));
        let missing = || Err(format!("{} has no attribute '{name}'", o.kind()));
        match o {
            Obj::Model(m) => match key {
                K::Functions => Ok(Val::Coll(m.functions.iter().map(|f| Val::Obj(Obj::Function(f))).collect())),
                K::Hardware => Ok(Val::Coll(m.hardware.iter().map(|n| Val::Obj(Obj::Node(n))).collect())),
                K::Links => Ok(Val::Coll(m.links.iter().map(|l| Val::Obj(Obj::Link(l))).collect())),
                K::Edges => Ok(Val::Coll(m.edges.iter().map(|e| Val::Obj(Obj::Edge(e))).collect())),
                K::Allocation => Ok(Val::Coll(
                    m.allocation
                        .iter()
                        .flatten()
                        .map(|p| Val::Obj(Obj::Placement(p)))
                        .collect(),
                )),
                _ => missing(),
            },
            Obj::Function(f) => match key {
                K::Id => s(&f.id),
                K::CpuReq => int_of(f.cpu_req),
                K::MemReq => int_of(f.mem_req),
                K::PowerReq => Ok(Val::Dec(f.power_req)),
                K::Asil => Ok(Val::Asil(f.asil)),
                K::Redundancy => Ok(Val::Int(f.redundancy as i64)),
                K::SafetyMechanism => Ok(Val::Mech(f.safety_mechanism)),
                K::OutPorts => Ok(Val::Coll(f.out_ports.iter().map(|p| Val::Obj(Obj::Port(f, p))).collect())),
                K::InPorts => Ok(Val::Coll(f.in_ports.iter().map(|p| Val::Obj(Obj::Port(f, p))).collect())),
                _ => missing(),
            },
            Obj::Port(_, p) => match key {
                K::Name => s(&p.name),
                K::Datatype => s(&p.datatype),
                _ => missing(),
            },
            Obj::Node(n) => match key {
                K::Id => s(&n.id),
                K::CpuCap => int_of(n.cpu_cap),
                K::MemCap => int_of(n.mem_cap),
                K::BasePower => Ok(Val::Dec(n.base_power)),
                K::Cost => Ok(Val::Dec(n.cost)),
                K::AsilCap => Ok(Val::Asil(n.asil_cap)),
                _ => missing(),
            },
            Obj::Link(l) => match key {
                K::Id => s(&l.id),
                K::EndpointA => s(&l.endpoint_a),
                K::EndpointB => s(&l.endpoint_b),
                K::BandwidthBps => Ok(Val::Dec(l.bandwidth_bps)),
                K::LatencyMs => Ok(Val::Dec(l.latency_ms)),
                _ => missing(),
            },
            Obj::Edge(e) => match key {
                K::Id => s(&e.id),
                K::SrcFn => s(&e.src_fn),
                K::DstFn => s(&e.dst_fn),
                K::SrcPort => s(&e.src_port),
                K::DstPort => s(&e.dst_port),
                K::RateHz => Ok(Val::Dec(e.rate_hz)),
                K::MsgBytes => int_of(e.msg_bytes),
                K::LatencyBudgetMs => e
                    .latency_budget_ms
                    .map(Val::Dec)
                    .ok_or_else(|| format!("latency_budget_ms is undefined on edge '{}'", e.id)),
                _ => missing(),
            },
            Obj::Placement(p) => {
                let function = || {
                    self.functions
                        .get(p.instance.function.as_str())
                        .copied()
                        .ok_or_else(|| format!("placement of unknown function '{}'", p.instance.function))
                };
                match key {
                    K::Instance => Ok(Val::Str(Cow::Owned(p.instance.to_string()))),
                    K::Function => s(&p.instance.function),
                    K::Replica => Ok(Val::Int(p.instance.replica as i64)),
                    K::Node => s(&p.node),
                    K::CpuReq => int_of(function()?.cpu_req),
                    K::MemReq => int_of(function()?.mem_req),
                    K::PowerReq => Ok(Val::Dec(function()?.power_req)),
                    K::Asil => Ok(Val::Asil(function()?.asil)),
                    _ => missing(),
                }
            }
        }
    }
}

fn values_equal(a: &Val<'_>, b: &Val<'_>) -> Result<bool, String> {
    Ok(match (a, b) {
        (Val::Int(x), Val::Int(y)) => x == y,
        (Val::Int(_) | Val::Dec(_), Val::Int(_) | Val::Dec(_)) => a.num() == b.num(),
        (Val::Str(x), Val::Str(y)) => x == y,
        (Val::Bool(x), Val::Bool(y)) => x == y,
        (Val::Asil(x), Val::Asil(y)) => x == y,
        (Val::Mech(x), Val::Mech(y)) => x == y,
        (Val::Obj(x), Val::Obj(y)) => x.kind() == y.kind() && x.id() == y.id(),
        _ => return Err(format!("cannot compare {} with {}", a.kind(), b.kind())),
    })
}

fn binary<'a>(op: BinOp, l: &Val<'a>, r: &Val<'a>) -> Result<Val<'a>, String> {
    use std::cmp::Ordering;
    match op {
        BinOp::And | BinOp::Or | BinOp::Implies => match (l, r) {
            (Val::Bool(a), Val::Bool(b)) => Ok(Val::Bool(match op {
                BinOp::And => *a && *b,
                BinOp::Or => *a || *b,
                _ => !*a || *b,
            })),
            _ => Err(format!("'{}' applied to {} and {}", op.symbol(), l.kind(), r.kind())),
        },
        BinOp::Eq => values_equal(l, r).map(Val::Bool),
        BinOp::Ne => values_equal(l, r).map(|b| Val::Bool(!b)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord: Ordering = match (l, r) {
                (Val::Int(a), Val::Int(b)) => a.cmp(b),
                (Val::Int(_) | Val::Dec(_), Val::Int(_) | Val::Dec(_)) => l
                    .num()
                    .unwrap()
                    .partial_cmp(&r.num().unwrap())
                    .ok_or("comparison of non-finite numbers")?,
                (Val::Str(a), Val::Str(b)) => a.cmp(b),
                (Val::Asil(a), Val::Asil(b)) => a.cmp(b),
                _ => return Err(format!("cannot order {} and {}", l.kind(), r.kind())),
            };
            Ok(Val::Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            }))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => match (l, r) {
            (Val::Int(a), Val::Int(b)) => {
                let v = match op {
                    BinOp::Add => a.checked_add(*b),
                    BinOp::Sub => a.checked_sub(*b),
                    _ => a.checked_mul(*b),
                };
                v.map(Val::Int).ok_or_else(|| "integer overflow".to_string())
            }
            _ => {
                let (Some(a), Some(b)) = (l.num(), r.num()) else {
                    return Err(format!("'{}' applied to {} and {}", op.symbol(), l.kind(), r.kind()));
                };
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    _ => a * b,
                };
                if v.is_finite() {
                    Ok(Val::Dec(v))
                } else {
                    Err("non-finite arithmetic result".to_string())
                }
            }
        },
        BinOp::Div => {
            let (Some(a), Some(b)) = (l.num(), r.num()) else {
                return Err(format!("'/' applied to {} and {}", l.kind(), r.kind()));
            };
            if b == 0.0 {
                return Err("division by zero".to_string());
            }
            let v = a / b;
            if v.is_finite() {
                Ok(Val::Dec(v))
            } else {
                Err("non-finite arithmetic result".to_string())
            }
        }
    }
}
