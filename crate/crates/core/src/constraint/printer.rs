use super::ast::*;

/// Fully parenthesized source for a constraint set; reparses to an equal AST.
pub fn print_constraints(cs: &ConstraintSet) -> String {
    cs.constraints
        .iter()
        .map(|c| format!("context {} inv {}: {}\n", c.context, c.name, print_expr(&c.body)))
        .collect()
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Int(i) => out.push_str(&i.to_string()),
        Literal::Decimal(d) => {
            let s = d.to_string();
            out.push_str(&s);
            if !s.contains('.') {
                out.push_str(".0");
            }
        }
        Literal::Str(s) => {
            out.push('\'');
            for ch in s.chars() {
                match ch {
                    '\'' => out.push_str("\\'"),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    other => out.push(other),
                }
            }
            out.push('\'');
        }
        Literal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Literal::Enum { ty, value } => {
            out.push_str(ty);
            out.push_str("::");
            out.push_str(value);
        }
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Literal(lit) => write_literal(out, lit),
        ExprKind::Binary(op, l, r) => {
            out.push('(');
            write_expr(out, l);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, r);
            out.push(')');
        }
        ExprKind::Unary(op, x) => {
            out.push_str(match op {
                UnOp::Not => "(not ",
                UnOp::Neg => "(- ",
            });
            write_expr(out, x);
            out.push(')');
        }
        ExprKind::Nav(nav) => {
            let mut first_attr_bare = false;
            match &nav.head {
                Head::SelfRef => out.push_str("self"),
                Head::Var(v) => out.push_str(v),
                Head::Implicit => first_attr_bare = true,
            }
            for step in &nav.steps {
                match step {
                    Step::Attr(a) => {
                        if !std::mem::take(&mut first_attr_bare) {
                            out.push('.');
                        }
                        out.push_str(a);
                    }
                    Step::Call(call) => {
                        out.push_str("->");
                        out.push_str(call.op.name());
                        out.push('(');
                        if let Some(b) = &call.binder {
                            out.push_str(b);
                            out.push_str(" | ");
                        }
                        if let Some(arg) = &call.arg {
                            write_expr(out, arg);
                        }
                        out.push(')');
                    }
                }
            }
        }
    }
}
