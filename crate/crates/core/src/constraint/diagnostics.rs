//! Human-readable diagnostics with repair suggestions.

use serde::Serialize;

use super::ast::{BinOp, Expr, ExprKind, Head, Nav, Step, CollOp};
use super::eval::{EvaluationReport, ReportEntry, Verdict};
use super::printer::print_expr;
use crate::model::InstanceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub constraint_id: String,
    pub context: String,
    pub context_element_id: String,
    pub severity: Severity,
    pub message: String,
    pub suggestion: String,
}

/// Coarse classification of a constraint body, kept on report entries so
/// suggestions can be rendered without the original constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyShape {
    Compare {
        op: BinOp,
        /// Attribute of the context element on the left (`true`) or right side.
        attr: Option<(String, bool)>,
        text: String,
    },
    Implies {
        premise: String,
        conclusion: String,
    },
    Quantified {
        op: CollOp,
        collection: String,
        body: String,
    },
    Other {
        text: String,
    },
}

fn self_attr(e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::Nav(Nav {
            head: Head::SelfRef | Head::Implicit,
            steps,
        }) if steps.len() == 1 => match &steps[0] {
            Step::Attr(a) => Some(a.clone()),
            Step::Call(_) => None,
        },
        _ => None,
    }
}

impl BodyShape {
    pub fn of(body: &Expr) -> BodyShape {
        match &body.kind {
            ExprKind::Binary(op, l, r) if op.is_comparison() => BodyShape::Compare {
                op: *op,
                attr: self_attr(l).map(|a| (a, true)).or_else(|| self_attr(r).map(|a| (a, false))),
                text: print_expr(body),
            },
            ExprKind::Binary(BinOp::Implies, p, q) => BodyShape::Implies {
                premise: print_expr(p),
                conclusion: print_expr(q),
            },
            ExprKind::Nav(nav) => match nav.steps.last() {
                Some(Step::Call(call))
                    if matches!(call.op, CollOp::ForAll | CollOp::Exists | CollOp::IsUnique) =>
                {
                    let collection = Nav {
                        head: nav.head.clone(),
                        steps: nav.steps[..nav.steps.len() - 1].to_vec(),
                    };
                    BodyShape::Quantified {
                        op: call.op,
                        collection: print_expr(&Expr::unspanned(ExprKind::Nav(collection))),
                        body: call.arg.as_deref().map(print_expr).unwrap_or_default(),
                    }
                }
                _ => BodyShape::Other {
                    text: print_expr(body),
                },
            },
            _ => BodyShape::Other {
                text: print_expr(body),
            },
        }
    }
}

fn current_value(model: &InstanceModel, context: &str, element: &str, attr: &str) -> Option<String> {
    let value = match context {
        "Function" => serde_json::to_value(model.function(element)?).ok()?,
        "HardwareNode" => serde_json::to_value(model.node(element)?).ok()?,
        "Link" => serde_json::to_value(model.link(element)?).ok()?,
        "FlowEdge" => serde_json::to_value(model.edges.iter().find(|e| e.id == element)?).ok()?,
        _ => return None,
    };
    let v = value.get(attr)?;
    Some(match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    })
}

fn template(entry: &ReportEntry, model: &InstanceModel) -> String {
    let name = &entry.constraint;
    let element = &entry.element;
    if entry.verdict == Verdict::Invalid {
        let at = entry
            .span
            .map(|s| format!("line {}, column {}", s.line, s.column))
            .unwrap_or_else(|| "an unknown location".to_string());
        let reason = entry.reason.as_deref().unwrap_or("undefined operation");
        return format!(
            "The expression at {at} is undefined for {element} ({reason}); correct the model data or rewrite {name} so it avoids this operation."
        );
    }
    match &entry.shape {
        BodyShape::Compare { op, attr: Some((attr, on_left)), text } => {
            let now = current_value(model, &entry.context, element, attr)
                .map(|v| format!(" (currently {v})"))
                .unwrap_or_default();
            let verb = match (op, on_left) {
                (BinOp::Gt | BinOp::Ge, true) | (BinOp::Lt | BinOp::Le, false) => "increase",
                (BinOp::Lt | BinOp::Le, true) | (BinOp::Gt | BinOp::Ge, false) => "decrease",
                (BinOp::Eq, _) => "set",
                _ => "change",
            };
            format!("{} {attr} of {element}{now} to satisfy {name}: {text}.", capitalize(verb))
        }
        BodyShape::Compare { text, .. } => {
            format!("Adjust the values of {element} so that {text} holds ({name}).")
        }
        BodyShape::Implies { premise, conclusion } => format!(
            "Either make {premise} false for {element} or satisfy {conclusion} ({name})."
        ),
        BodyShape::Quantified { op, collection, body } => {
            let witness = entry
                .witness
                .iter()
                .skip(1)
                .map(|(var, id)| format!("{var} = {id}"))
                .collect::<Vec<_>>()
                .join(", ");
            match op {
                CollOp::ForAll if !witness.is_empty() => format!(
                    "Fix {witness} so that every element of {collection} satisfies {body} ({name})."
                ),
                CollOp::ForAll => format!("Make every element of {collection} satisfy {body} ({name})."),
                CollOp::Exists => format!(
                    "Add or change an element of {collection} so that at least one satisfies {body} ({name})."
                ),
                _ => format!("Make {body} unique across {collection} in {element} ({name})."),
            }
        }
        BodyShape::Other { text } => format!("Modify {element} so that {text} holds ({name})."),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// One diagnostic per non-holding report entry, with template suggestions.
pub fn explain(report: &EvaluationReport, model: &InstanceModel) -> Vec<Diagnostic> {
    explain_with(report, model, |_, _| None)
}

/// Like [`explain`], but lets `rewrite` replace the template suggestion.
/// Empty replacements are ignored so the suggestion is never blank.
pub fn explain_with(
    report: &EvaluationReport,
    model: &InstanceModel,
    mut rewrite: impl FnMut(&Diagnostic, &ReportEntry) -> Option<String>,
) -> Vec<Diagnostic> {
    report
        .failures()
        .map(|entry| {
            let message = match entry.verdict {
                Verdict::Invalid => format!(
                    "Constraint {} (context {}) cannot be evaluated on {}: {}.",
                    entry.constraint,
                    entry.context,
                    entry.element,
                    entry.reason.as_deref().unwrap_or("undefined operation")
                ),
                _ => format!(
                    "Constraint {} (context {}) is violated by {}.",
                    entry.constraint, entry.context, entry.element
                ),
            };
            let mut diag = Diagnostic {
                constraint_id: entry.constraint.clone(),
                context: entry.context.clone(),
                context_element_id: entry.element.clone(),
                severity: Severity::Error,
                message,
                suggestion: template(entry, model),
            };
            if let Some(text) = rewrite(&diag, entry).filter(|t| !t.trim().is_empty()) {
                diag.suggestion = text;
            }
            diag
        })
        .collect()
}
