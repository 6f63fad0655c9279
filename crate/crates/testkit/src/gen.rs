//! Seeded random generators for models and constraint ASTs.

use forge_core::constraint::{
    BinOp, CollOp, CollectionCall, Constraint, ContextType, Expr, ExprKind, Head, Literal, Nav, Span, Step, UnOp,
};
use forge_core::model::{
    expand_instances, AsilLevel, FlowEdge, FunctionSpec, HardwareNode, InstanceModel, Link, Placement, Port,
    SafetyMechanism,
};
use rand::seq::SliceRandom;
use rand::Rng;

const DATATYPES: [&str; 2] = ["frame", "scalar"];

fn asil(rng: &mut impl Rng) -> AsilLevel {
    *AsilLevel::ALL.choose(rng).unwrap()
}

/// Small model that exercises every attribute kind, including zero
/// requirements, missing latency budgets and optional allocations.
pub fn random_model(rng: &mut impl Rng) -> InstanceModel {
    let n_fns = rng.gen_range(0..=4);
    let n_nodes = rng.gen_range(1..=3);
    let mut functions = Vec::new();
    for i in 0..n_fns {
        let redundancy = if rng.gen_bool(0.3) { rng.gen_range(2..=3) } else { 1 };
        let safety_mechanism = if redundancy > 1 {
            *[SafetyMechanism::HotStandby, SafetyMechanism::Voting].choose(rng).unwrap()
        } else {
            *SafetyMechanism::ALL.choose(rng).unwrap()
        };
        functions.push(FunctionSpec {
            id: format!("f{i}"),
            cpu_req: rng.gen_range(0..=3),
            mem_req: rng.gen_range(0..=2) * 64,
            power_req: rng.gen_range(0..=4) as f64 * 0.5,
            asil: asil(rng),
            redundancy,
            safety_mechanism,
            out_ports: vec![Port::new("out0", *DATATYPES.choose(rng).unwrap())],
            in_ports: if rng.gen_bool(0.8) {
                vec![Port::new("in0", *DATATYPES.choose(rng).unwrap())]
            } else {
                vec![]
            },
        });
    }
    let hardware: Vec<HardwareNode> = (0..n_nodes)
        .map(|i| HardwareNode {
            id: format!("n{i}"),
            cpu_cap: rng.gen_range(1..=4),
            mem_cap: rng.gen_range(1..=4) * 128,
            base_power: rng.gen_range(0..=6) as f64,
            cost: rng.gen_range(0..=3) as f64 * 2.5,
            asil_cap: asil(rng),
        })
        .collect();
    let mut links = Vec::new();
    for a in 0..n_nodes {
        for b in a + 1..n_nodes {
            if rng.gen_bool(0.6) {
                links.push(Link {
                    id: format!("l{a}{b}"),
                    endpoint_a: format!("n{a}"),
                    endpoint_b: format!("n{b}"),
                    bandwidth_bps: rng.gen_range(1..=10) as f64 * 1e5,
                    latency_ms: rng.gen_range(0..=4) as f64 * 0.5,
                });
            }
        }
    }
    let mut edges = Vec::new();
    for s in &functions {
        for d in &functions {
            let Some(dst) = d.in_ports.first() else { continue };
            if s.out_ports[0].datatype == dst.datatype && rng.gen_bool(0.4) {
                edges.push(FlowEdge {
                    id: format!("e{}", edges.len()),
                    src_fn: s.id.clone(),
                    dst_fn: d.id.clone(),
                    src_port: "out0".into(),
                    dst_port: "in0".into(),
                    rate_hz: *[10.0, 50.0, 100.0].choose(rng).unwrap(),
                    msg_bytes: rng.gen_range(1..=4) * 32,
                    latency_budget_ms: rng.gen_bool(0.5).then(|| rng.gen_range(0..=6) as f64),
                });
            }
        }
    }
    let mut model = InstanceModel {
        functions,
        hardware,
        links,
        edges,
        allocation: None,
    };
    if rng.gen_bool(0.5) {
        let placements = expand_instances(&model)
            .into_iter()
            .map(|instance| Placement {
                instance,
                node: format!("n{}", rng.gen_range(0..n_nodes)),
            })
            .collect();
        model.allocation = Some(placements);
    }
    model
}

/// Allocation problem generator with up to `max_fns` functions (replicas come
/// on top). Node power and cost pull in opposite directions and capacities
/// are tight, so fronts usually hold several trade-off points.
pub fn random_alloc_model(rng: &mut impl Rng, max_fns: usize, max_nodes: usize) -> InstanceModel {
    let n_nodes = rng.gen_range(2..=max_nodes);
    let hardware: Vec<HardwareNode> = (0..n_nodes)
        .map(|i| {
            let base_power = rng.gen_range(1..=8) as f64;
            HardwareNode {
                id: format!("n{i}"),
                cpu_cap: rng.gen_range(3..=6),
                mem_cap: rng.gen_range(2..=6) * 128,
                base_power,
                cost: (10.0 - base_power + rng.gen_range(0..=2) as f64).max(1.0),
                asil_cap: *[AsilLevel::C, AsilLevel::D].choose(rng).unwrap(),
            }
        })
        .collect();
    let mut links = Vec::new();
    for a in 0..n_nodes {
        for b in a + 1..n_nodes {
            if b == a + 1 || rng.gen_bool(0.4) {
                links.push(Link {
                    id: format!("l{a}_{b}"),
                    endpoint_a: format!("n{a}"),
                    endpoint_b: format!("n{b}"),
                    bandwidth_bps: rng.gen_range(2..=20) as f64 * 5e4,
                    latency_ms: rng.gen_range(1..=5) as f64,
                });
            }
        }
    }
    let n_fns = rng.gen_range(1..=max_fns);
    let functions: Vec<FunctionSpec> = (0..n_fns)
        .map(|i| {
            let redundancy = if rng.gen_bool(0.2) { 2 } else { 1 };
            FunctionSpec {
                id: format!("f{i}"),
                cpu_req: rng.gen_range(1..=3),
                mem_req: rng.gen_range(1..=3) * 64,
                power_req: rng.gen_range(1..=6) as f64 * 0.5,
                asil: *[AsilLevel::QM, AsilLevel::A, AsilLevel::B, AsilLevel::C].choose(rng).unwrap(),
                redundancy,
                safety_mechanism: if redundancy > 1 {
                    SafetyMechanism::HotStandby
                } else {
                    SafetyMechanism::None
                },
                out_ports: vec![Port::new("out0", "frame")],
                in_ports: vec![Port::new("in0", "frame")],
            }
        })
        .collect();
    let mut edges = Vec::new();
    for i in 1..functions.len() {
        let src = rng.gen_range(0..i);
        edges.push(FlowEdge {
            id: format!("e{i}"),
            src_fn: functions[src].id.clone(),
            dst_fn: functions[i].id.clone(),
            src_port: "out0".into(),
            dst_port: "in0".into(),
            rate_hz: *[10.0, 50.0, 100.0].choose(rng).unwrap(),
            msg_bytes: rng.gen_range(1..=8) * 16,
            latency_budget_ms: rng.gen_bool(0.3).then(|| rng.gen_range(2..=8) as f64),
        });
    }
    InstanceModel {
        functions,
        hardware,
        links,
        edges,
        allocation: None,
    }
}

fn e(kind: ExprKind) -> Expr {
    Expr::unspanned(kind)
}

fn nav(head: Head, steps: Vec<Step>) -> Expr {
    e(ExprKind::Nav(Nav { head, steps }))
}

fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
    e(ExprKind::Binary(op, Box::new(l), Box::new(r)))
}

/// What a head refers to while generating.
#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Model,
    Function,
    Node,
    Link,
    Edge,
    Port,
    Placement,
}

const SCALARS: &[(Kind, &[&str])] = &[
    (Kind::Function, &["id", "cpu_req", "mem_req", "power_req", "asil", "redundancy", "safety_mechanism"]),
    (Kind::Node, &["id", "cpu_cap", "mem_cap", "base_power", "cost", "asil_cap"]),
    (Kind::Link, &["id", "endpoint_a", "endpoint_b", "bandwidth_bps", "latency_ms"]),
    (Kind::Edge, &["id", "src_fn", "dst_fn", "src_port", "dst_port", "rate_hz", "msg_bytes", "latency_budget_ms"]),
    (Kind::Port, &["name", "datatype"]),
    (Kind::Placement, &["instance", "function", "replica", "node", "cpu_req", "mem_req", "power_req", "asil"]),
];

const NUMERIC: &[&str] = &[
    "cpu_req", "mem_req", "power_req", "redundancy", "cpu_cap", "mem_cap", "base_power", "cost", "bandwidth_bps",
    "latency_ms", "rate_hz", "msg_bytes", "latency_budget_ms", "replica",
];

fn collections(kind: Kind) -> &'static [(&'static str, Kind)] {
    match kind {
        Kind::Model => &[
            ("functions", Kind::Function),
            ("hardware", Kind::Node),
            ("links", Kind::Link),
            ("edges", Kind::Edge),
            ("allocation", Kind::Placement),
        ],
        Kind::Function => &[("out_ports", Kind::Port), ("in_ports", Kind::Port)],
        _ => &[],
    }
}

struct ExprGen<'r, R: Rng> {
    rng: &'r mut R,
    /// Named variables in scope with their kinds.
    vars: Vec<(String, Kind)>,
    /// Kind of the innermost implicit iterator, if any.
    implicit: Vec<Kind>,
    self_kind: Kind,
    fresh: usize,
}

impl<R: Rng> ExprGen<'_, R> {
    fn head(&mut self) -> (Head, Kind) {
        let mut options = vec![(Head::SelfRef, self.self_kind)];
        for (v, k) in &self.vars {
            options.push((Head::Var(v.clone()), *k));
        }
        let implicit_kind = self.implicit.last().copied().unwrap_or(self.self_kind);
        options.push((Head::Implicit, implicit_kind));
        options.choose(self.rng).cloned().unwrap()
    }

    fn attr_of(&mut self, kind: Kind) -> String {
        if self.rng.gen_bool(0.03) {
            return "bogus".into();
        }
        let list = SCALARS.iter().find(|(k, _)| *k == kind).map(|(_, l)| *l).unwrap_or(&["functions"]);
        list.choose(self.rng).unwrap().to_string()
    }

    fn literal(&mut self) -> Expr {
        let lit = match self.rng.gen_range(0..8) {
            0 | 1 => Literal::Int(self.rng.gen_range(0..=5)),
            2 => Literal::Decimal(self.rng.gen_range(0..=8) as f64 * 0.5),
            3 => Literal::Str(["n0", "f1", "frame", "out0", "f0#0"].choose(self.rng).unwrap().to_string()),
            4 => Literal::Bool(self.rng.gen()),
            5 | 6 => Literal::Enum {
                ty: "AsilLevel".into(),
                value: ["QM", "A", "B", "C", "D"].choose(self.rng).unwrap().to_string(),
            },
            _ => Literal::Enum {
                ty: "SafetyMechanism".into(),
                value: ["none", "hot_standby", "voting"].choose(self.rng).unwrap().to_string(),
            },
        };
        e(ExprKind::Literal(lit))
    }

    /// A value-producing term (scalar navigation, literal or aggregate).
    fn term(&mut self, depth: u32) -> Expr {
        match self.rng.gen_range(0..10) {
            0..=2 => self.literal(),
            3 if depth > 0 => {
                let (head, kind) = self.collection_head();
                let op = *[CollOp::Size, CollOp::Size, CollOp::Sum].choose(self.rng).unwrap();
                let mut steps = head.1;
                if op == CollOp::Sum {
                    let (binder, body) = self.iterate(kind, depth - 1, |g, d| g.numeric(d));
                    steps.push(Step::Call(CollectionCall {
                        op: CollOp::Collect,
                        binder,
                        arg: Some(Box::new(body)),
                        span: Span::default(),
                    }));
                }
                steps.push(Step::Call(CollectionCall {
                    op,
                    binder: None,
                    arg: None,
                    span: Span::default(),
                }));
                nav(head.0, steps)
            }
            4 if depth > 0 => {
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div].choose(self.rng).unwrap();
                let l = self.numeric(depth - 1);
                let r = self.numeric(depth - 1);
                bin(op, l, r)
            }
            5 if depth > 0 => e(ExprKind::Unary(UnOp::Neg, Box::new(self.numeric(depth - 1)))),
            _ => {
                let (head, kind) = self.head();
                let attr = self.attr_of(kind);
                nav(head, vec![Step::Attr(attr)])
            }
        }
    }

    fn numeric(&mut self, depth: u32) -> Expr {
        if self.rng.gen_bool(0.6) {
            let (head, kind) = self.head();
            let list = SCALARS.iter().find(|(k, _)| *k == kind).map(|(_, l)| *l).unwrap_or(&[]);
            let numeric: Vec<&&str> = list.iter().filter(|a| NUMERIC.contains(a)).collect();
            if let Some(attr) = numeric.choose(self.rng) {
                return nav(head, vec![Step::Attr(attr.to_string())]);
            }
        }
        self.term(depth)
    }

    /// A navigation ending in a collection, with the element kind.
    fn collection_head(&mut self) -> ((Head, Vec<Step>), Kind) {
        let mut candidates = vec![(Head::SelfRef, self.self_kind)];
        for (v, k) in &self.vars {
            candidates.push((Head::Var(v.clone()), *k));
        }
        let with_colls: Vec<(Head, Kind)> =
            candidates.into_iter().filter(|(_, k)| !collections(*k).is_empty()).collect();
        match with_colls.choose(self.rng) {
            Some((head, kind)) => {
                let (attr, elem) = *collections(*kind).choose(self.rng).unwrap();
                ((head.clone(), vec![Step::Attr(attr.into())]), elem)
            }
            // no collection reachable: navigate anyway to produce an invalid verdict
            None => ((Head::SelfRef, vec![Step::Attr("functions".into())]), Kind::Function),
        }
    }

    fn iterate(
        &mut self,
        kind: Kind,
        depth: u32,
        body: impl FnOnce(&mut Self, u32) -> Expr,
    ) -> (Option<String>, Expr) {
        if self.rng.gen_bool(0.5) {
            let name = format!("v{}", self.fresh);
            self.fresh += 1;
            self.vars.push((name.clone(), kind));
            let b = body(self, depth);
            self.vars.pop();
            (Some(name), b)
        } else {
            self.implicit.push(kind);
            let b = body(self, depth);
            self.implicit.pop();
            (None, b)
        }
    }

    fn boolean(&mut self, depth: u32) -> Expr {
        let choice = if depth == 0 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..9) };
        match choice {
            0 | 1 => {
                let op = *[BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge]
                    .choose(self.rng)
                    .unwrap();
                let l = self.term(depth.saturating_sub(1));
                let r = self.term(depth.saturating_sub(1));
                bin(op, l, r)
            }
            2 => e(ExprKind::Literal(Literal::Bool(self.rng.gen()))),
            3 | 4 => {
                let op = *[BinOp::And, BinOp::Or, BinOp::Implies].choose(self.rng).unwrap();
                let l = self.boolean(depth - 1);
                let r = self.boolean(depth - 1);
                bin(op, l, r)
            }
            5 => e(ExprKind::Unary(UnOp::Not, Box::new(self.boolean(depth - 1)))),
            6 => {
                let ((head, mut steps), kind) = self.collection_head();
                let needle = if self.rng.gen_bool(0.5) {
                    let (h, k) = self.head();
                    if k == kind && h != Head::Implicit && self.rng.gen_bool(0.5) {
                        nav(h, vec![])
                    } else {
                        self.literal()
                    }
                } else {
                    self.literal()
                };
                if self.rng.gen_bool(0.5) {
                    let (binder, body) = self.iterate(kind, depth - 1, |g, _| {
                        let (h, k) = g.head();
                        let a = g.attr_of(k);
                        nav(h, vec![Step::Attr(a)])
                    });
                    steps.push(Step::Call(CollectionCall {
                        op: CollOp::Collect,
                        binder,
                        arg: Some(Box::new(body)),
                        span: Span::default(),
                    }));
                }
                steps.push(Step::Call(CollectionCall {
                    op: CollOp::Includes,
                    binder: None,
                    arg: Some(Box::new(needle)),
                    span: Span::default(),
                }));
                nav(head, steps)
            }
            _ => {
                let ((head, mut steps), kind) = self.collection_head();
                if self.rng.gen_bool(0.25) {
                    let (binder, body) = self.iterate(kind, depth - 1, |g, d| g.boolean(d));
                    steps.push(Step::Call(CollectionCall {
                        op: CollOp::Select,
                        binder,
                        arg: Some(Box::new(body)),
                        span: Span::default(),
                    }));
                }
                let op = *[CollOp::ForAll, CollOp::ForAll, CollOp::Exists, CollOp::IsUnique].choose(self.rng).unwrap();
                let (binder, body) = if op == CollOp::IsUnique {
                    self.iterate(kind, depth - 1, |g, _| {
                        let (h, k) = g.head();
                        let a = g.attr_of(k);
                        nav(h, vec![Step::Attr(a)])
                    })
                } else {
                    self.iterate(kind, depth - 1, |g, d| g.boolean(d))
                };
                steps.push(Step::Call(CollectionCall {
                    op,
                    binder,
                    arg: Some(Box::new(body)),
                    span: Span::default(),
                }));
                nav(head, steps)
            }
        }
    }
}

/// Random well-scoped constraint over the grammar. Roughly a third of the
/// generated bodies are ill-typed on purpose so that invalid verdicts occur.
pub fn random_constraint(rng: &mut impl Rng, name: &str) -> Constraint {
    let context = *ContextType::ALL.choose(rng).unwrap();
    let self_kind = match context {
        ContextType::Function => Kind::Function,
        ContextType::HardwareNode => Kind::Node,
        ContextType::Link => Kind::Link,
        ContextType::FlowEdge => Kind::Edge,
        ContextType::Model => Kind::Model,
    };
    let depth = rng.gen_range(1..=3);
    let mut g = ExprGen {
        rng,
        vars: Vec::new(),
        implicit: Vec::new(),
        self_kind,
        fresh: 0,
    };
    let body = g.boolean(depth);
    Constraint {
        context,
        name: name.to_string(),
        body,
        span: Span::default(),
    }
}
