//! An OCL-subset constraint language over instance models.
//!
//! Source files hold `context <Type> inv <Name>: <expr>` declarations; `--`
//! starts a line comment. Evaluation yields one verdict per constraint and
//! context element: `holds`, `violated`, or `invalid` when the expression is
//! undefined (division by zero, missing attribute, type mismatch). Invalid
//! never counts as success.
//!
//! Bare attribute names resolve against the innermost iterator without an
//! explicit binder, or against `self`: `self.functions->isUnique(id)`.

mod ast;
mod diagnostics;
mod eval;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::{
    ArgShape, BinOp, CollOp, CollectionCall, Constraint, ConstraintSet, ContextType, Expr, ExprKind,
    Head, Literal, Nav, Span, Step, UnOp,
};
pub use diagnostics::{explain, explain_with, BodyShape, Diagnostic, Severity};
pub use eval::{context_elements, evaluate, EvaluationReport, Obj, ReportEntry, Verdict, MODEL_ELEMENT_ID};
pub use parser::{parse_constraints, parse_expr};
pub use printer::{print_constraints, print_expr};

/// Returns true if `word` is reserved and cannot be used as an identifier.
pub fn is_keyword(word: &str) -> bool {
    lexer::is_keyword(word)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at line {}, column {}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

const BUILTIN_RULES: &str = include_str!("rules.ocl");

/// Source of the rule pack shipped with the pipeline.
pub fn builtin_rules_source() -> &'static str {
    BUILTIN_RULES
}

/// The parsed built-in rule pack.
pub fn builtin_rules() -> ConstraintSet {
    parse_constraints(BUILTIN_RULES).expect("built-in rule pack parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_instance_model, InstanceModel};

    fn demo() -> InstanceModel {
        load_instance_model(include_str!("../../../../fixtures/demo_brake.json")).unwrap()
    }

    fn nav(head: Head, attrs: &[&str]) -> Expr {
        Expr::unspanned(ExprKind::Nav(Nav {
            head,
            steps: attrs.iter().map(|a| Step::Attr(a.to_string())).collect(),
        }))
    }

    #[test]
    fn min_cpu_parses_to_comparison() {
        let cs = parse_constraints("context Function inv MinCpu: self.cpu_req > 0").unwrap();
        assert_eq!(cs.len(), 1);
        let c = &cs.constraints[0];
        assert_eq!(c.context, ContextType::Function);
        assert_eq!(c.name, "MinCpu");
        let expected = Expr::unspanned(ExprKind::Binary(
            BinOp::Gt,
            Box::new(nav(Head::SelfRef, &["cpu_req"])),
            Box::new(Expr::unspanned(ExprKind::Literal(Literal::Int(0)))),
        ));
        assert_eq!(c.body, expected);
    }

    #[test]
    fn is_unique_with_implicit_iterator() {
        let cs = parse_constraints("context Model inv U: self.functions->isUnique(id)").unwrap();
        let ExprKind::Nav(nav) = &cs.constraints[0].body.kind else {
            panic!("expected navigation")
        };
        assert_eq!(nav.steps[0], Step::Attr("functions".into()));
        let Step::Call(call) = &nav.steps[1] else { panic!() };
        assert_eq!(call.op, CollOp::IsUnique);
        assert_eq!(call.binder, None);
        assert_eq!(call.arg.as_deref(), Some(&nav_implicit_id()));
    }

    fn nav_implicit_id() -> Expr {
        nav(Head::Implicit, &["id"])
    }

    #[test]
    fn incomplete_expression_fails_at_end() {
        let err = parse_constraints("context Function inv Bad: self.cpu_req >").unwrap_err();
        assert_eq!((err.line, err.column), (1, 41));
        assert!(err.message.contains("end of input"), "{err}");
        assert!(err.expected.iter().any(|e| e == "literal"));
    }

    #[test]
    fn comparison_is_non_associative() {
        assert!(parse_constraints("context Function inv C: 1 < 2 < 3").is_err());
        assert!(parse_constraints("context Function inv C: (1 < 2) = true").is_ok());
    }

    #[test]
    fn duplicate_names_rejected_per_context() {
        let src = "context Function inv A: true\ncontext Function inv A: false";
        assert!(parse_constraints(src).is_err());
        let src = "context Function inv A: true\ncontext Link inv A: false";
        assert_eq!(parse_constraints(src).unwrap().len(), 2);
    }

    #[test]
    fn rebinding_a_variable_is_rejected() {
        let src = "context Model inv R: self.functions->forAll(f | self.functions->forAll(f | true))";
        assert!(parse_constraints(src).is_err());
    }

    #[test]
    fn precedence_reprint() {
        let cs = parse_constraints("context Function inv P: a and b or c").unwrap();
        assert_eq!(print_constraints(&cs), "context Function inv P: ((a and b) or c)\n");
        let cs = parse_constraints("context Function inv P: 1 + 2 * 3 - 4 / 5 > 0 implies not x = -y").unwrap();
        assert_eq!(
            print_expr(&cs.constraints[0].body),
            "((((1 + (2 * 3)) - (4 / 5)) > 0) implies ((not x) = (- y)))"
        );
    }

    #[test]
    fn print_round_trip() {
        let src = "context Function inv MinCpu: self.cpu_req > 0\n\
                   context Model inv U: self.functions->isUnique(id) and self.edges->forAll(e | e.rate_hz >= 0.5)\n\
                   context Function inv S: self.name = 'it\\'s' or self.asil >= AsilLevel::C";
        let cs = parse_constraints(src).unwrap();
        let printed = print_constraints(&cs);
        assert_eq!(parse_constraints(&printed).unwrap(), cs);
        assert_eq!(print_constraints(&ConstraintSet::default()), "");
    }

    #[test]
    fn builtin_pack_parses() {
        assert!(builtin_rules().len() >= 8);
    }

    fn verdicts(src: &str, model: &InstanceModel) -> Vec<(String, Verdict)> {
        evaluate(&parse_constraints(src).unwrap(), model)
            .entries
            .into_iter()
            .map(|e| (e.element, e.verdict))
            .collect()
    }

    #[test]
    fn min_cpu_holds_on_demo() {
        let v = verdicts("context Function inv MinCpu: self.cpu_req > 0", &demo());
        assert_eq!(
            v,
            vec![("brake_ctrl".into(), Verdict::Holds), ("speed_sense".into(), Verdict::Holds)]
        );
    }

    #[test]
    fn min_cpu_violated_on_zero() {
        let mut m = demo();
        m.functions[0].cpu_req = 0;
        let report = evaluate(
            &parse_constraints("context Function inv MinCpu: self.cpu_req > 0").unwrap(),
            &m,
        );
        let bad: Vec<_> = report.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].element, "speed_sense");
        assert_eq!(bad[0].verdict, Verdict::Violated);
        assert_eq!(bad[0].witness[0], ("self".to_string(), "speed_sense".to_string()));
    }

    #[test]
    fn division_by_zero_is_invalid_everywhere() {
        let v = verdicts("context Function inv Z: 1 / (self.cpu_req - self.cpu_req) > 0", &demo());
        assert!(v.iter().all(|(_, v)| *v == Verdict::Invalid));
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn quantifiers_over_empty_collections() {
        let m = InstanceModel::default();
        let v = verdicts(
            "context Model inv A: self.functions->forAll(f | false)\ncontext Model inv E: self.functions->exists(f | true)",
            &m,
        );
        assert_eq!(v, vec![("model".into(), Verdict::Holds), ("model".into(), Verdict::Violated)]);
    }

    #[test]
    fn type_mismatch_and_missing_attribute_are_invalid() {
        let v = verdicts(
            "context Function inv T: self.id = 3\ncontext Function inv M: self.cpu_cap > 0\ncontext FlowEdge inv B: self.latency_budget_ms > 0",
            &demo(),
        );
        assert!(v.iter().all(|(_, v)| *v == Verdict::Invalid), "{v:?}");
    }

    #[test]
    fn collection_ops() {
        let m = demo();
        let src = "context Model inv Sum: self.functions->collect(f | f.cpu_req)->sum() = 3\n\
                   context Model inv Size: self.functions->select(f | f.asil = AsilLevel::D)->size() = 1\n\
                   context Model inv Inc: self.hardware->collect(h | h.id)->includes('n2')\n\
                   context Model inv Dec: self.functions->collect(f | f.power_req)->sum() = 2.0\n\
                   context Function inv Ports: self.in_ports->forAll(p | p.datatype = 'wheel_speed')";
        let v = verdicts(src, &m);
        assert!(v.iter().all(|(_, v)| *v == Verdict::Holds), "{v:?}");
    }

    #[test]
    fn anti_affinity_rule_on_enhanced_model() {
        let mut alloc = crate::model::AllocationMatrix::new();
        alloc.assign(crate::model::InstanceId::new("brake_ctrl", 0), "n1");
        alloc.assign(crate::model::InstanceId::new("brake_ctrl", 1), "n1");
        alloc.assign(crate::model::InstanceId::new("speed_sense", 0), "n2");
        let enhanced = crate::model::merge_allocation(&demo(), &alloc).unwrap();
        let report = evaluate(&builtin_rules(), &enhanced);
        let failed: Vec<&str> = report.failures().map(|e| e.constraint.as_str()).collect();
        assert_eq!(failed, ["ReplicaAntiAffinity"]);
        let witness = &report.failures().next().unwrap().witness;
        assert_eq!(witness[1], ("a".to_string(), "brake_ctrl#0".to_string()));
        assert!(evaluate(&builtin_rules(), &demo()).all_hold());
    }

    #[test]
    fn report_is_sorted_and_complete() {
        let m = demo();
        let cs = parse_constraints(
            "context Link inv Z: self.latency_ms >= 0\ncontext Function inv A: true\ncontext Model inv M: true",
        )
        .unwrap();
        let r = evaluate(&cs, &m);
        assert_eq!(r.entries.len(), 1 + 2 + 1);
        let names: Vec<_> = r.entries.iter().map(|e| e.constraint.as_str()).collect();
        assert_eq!(names, ["A", "A", "M", "Z"]);
        assert_eq!(r, evaluate(&cs, &m));
    }

    #[test]
    fn explain_min_cpu() {
        let mut m = demo();
        m.functions[1].cpu_req = 0;
        m.functions[1].id = "f1".into();
        m.edges.clear();
        let r = evaluate(&parse_constraints("context Function inv MinCpu: self.cpu_req > 0").unwrap(), &m);
        let d = explain(&r, &m);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].constraint_id, "MinCpu");
        assert_eq!(d[0].context_element_id, "f1");
        assert!(d[0].message.contains("MinCpu") && d[0].message.contains("f1"));
        assert!(d[0].suggestion.contains("cpu_req"), "{}", d[0].suggestion);
        assert!(d[0].suggestion.starts_with("Increase"), "{}", d[0].suggestion);
        assert!(explain(&EvaluationReport::default(), &m).is_empty());
    }

    #[test]
    fn explain_invalid_mentions_operation_and_span() {
        let m = demo();
        let r = evaluate(
            &parse_constraints("context Function inv Z: 1 / (self.cpu_req - self.cpu_req) > 0").unwrap(),
            &m,
        );
        let d = explain(&r, &m);
        assert_eq!(d.len(), 2);
        assert!(d[0].suggestion.contains("division by zero"), "{}", d[0].suggestion);
        assert!(d[0].suggestion.contains("line 1, column 25"), "{}", d[0].suggestion);
    }

    #[test]
    fn explain_with_rewrites_but_never_blanks() {
        let mut m = demo();
        m.functions[0].cpu_req = 0;
        let r = evaluate(&parse_constraints("context Function inv MinCpu: self.cpu_req > 0").unwrap(), &m);
        let d = explain_with(&r, &m, |_, _| Some("Use a bigger budget.".into()));
        assert_eq!(d[0].suggestion, "Use a bigger budget.");
        let d = explain_with(&r, &m, |_, _| Some("  ".into()));
        assert!(d[0].suggestion.contains("cpu_req"));
    }
}
