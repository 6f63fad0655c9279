use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::ParseError;

enum Scope {
    Bound(String),
    Implicit,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    scopes: Vec<Scope>,
}

const PRIMARY_START: [&str; 7] = ["literal", "identifier", "'self'", "'('", "'not'", "'-'", "'::'"];

pub fn parse_constraints(text: &str) -> Result<ConstraintSet, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        scopes: Vec::new(),
    };
    let mut constraints: Vec<Constraint> = Vec::new();
    while p.peek() != &Tok::Eof {
        let c = p.declaration()?;
        if constraints
            .iter()
            .any(|other| other.context == c.context && other.name == c.name)
        {
            return Err(ParseError {
                line: c.span.line,
                column: c.span.column,
                message: format!("duplicate constraint name '{}' for context {}", c.name, c.context),
                expected: Vec::new(),
            });
        }
        constraints.push(c);
    }
    Ok(ConstraintSet { constraints })
}

/// Parses a single expression with `self` in scope.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        scopes: Vec::new(),
    };
    let e = p.expr()?;
    p.expect(Tok::Eof, &["end of input"])?;
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let span = self.span();
        Err(ParseError {
            line: span.line,
            column: span.column,
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<Span, ParseError> {
        if self.peek() == &tok {
            Ok(self.bump().1)
        } else {
            self.fail(expected)
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().1;
                Ok((name, span))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn declaration(&mut self) -> Result<Constraint, ParseError> {
        let start = self.expect(Tok::Context, &["'context'"])?;
        let ty_span = self.span();
        let (ty, _) = self.ident()?;
        let context = ContextType::from_name(&ty).ok_or_else(|| ParseError {
            line: ty_span.line,
            column: ty_span.column,
            message: format!("unknown context type '{ty}'"),
            expected: ContextType::ALL.iter().map(|c| c.name().to_string()).collect(),
        })?;
        self.expect(Tok::Inv, &["'inv'"])?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Colon, &["':'"])?;
        self.scopes.clear();
        let body = self.expr()?;
        if !matches!(self.peek(), Tok::Context | Tok::Eof) {
            return self.fail(&["'context'", "end of input", "operator"]);
        }
        Ok(Constraint {
            context,
            name,
            span: start.to(body.span),
            body,
        })
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let span = lhs.span.to(rhs.span);
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.or_expr()?;
        while self.peek() == &Tok::Implies {
            self.bump();
            let rhs = self.or_expr()?;
            lhs = Self::binary(BinOp::Implies, lhs, rhs);
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &Tok::Or {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Self::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.comparison()?;
        while self.peek() == &Tok::And {
            self.bump();
            let rhs = self.comparison()?;
            lhs = Self::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else {
            return Ok(lhs);
        };
        self.bump();
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            let span = self.span();
            return Err(ParseError {
                line: span.line,
                column: span.column,
                message: "comparison operators are non-associative; parenthesize".to_string(),
                expected: vec!["'and'".into(), "'or'".into(), "'implies'".into(), "')'".into()],
            });
        }
        Ok(Self::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek() {
            Tok::Not => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.primary(),
        };
        let start = self.bump().1;
        let operand = self.unary()?;
        let span = start.to(operand.span);
        Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), span))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        let lit = |l: Literal| Expr::new(ExprKind::Literal(l), span);
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(lit(Literal::Int(i)))
            }
            Tok::Decimal(d) => {
                self.bump();
                Ok(lit(Literal::Decimal(d)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(lit(Literal::Str(s)))
            }
            Tok::True => {
                self.bump();
                Ok(lit(Literal::Bool(true)))
            }
            Tok::False => {
                self.bump();
                Ok(lit(Literal::Bool(false)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let end = self.expect(Tok::RParen, &["')'", "operator"])?;
                Ok(Expr::new(inner.kind, span.to(end)))
            }
            Tok::Ident(ty) if self.peek_at(1) == &Tok::ColonColon => {
                self.bump();
                self.bump();
                let (value, end) = self.ident()?;
                Ok(Expr::new(ExprKind::Literal(Literal::Enum { ty, value }), span.to(end)))
            }
            Tok::SelfKw => {
                self.bump();
                self.nav(Head::SelfRef, Vec::new(), span)
            }
            Tok::Ident(name) => {
                self.bump();
                let bound = self
                    .scopes
                    .iter()
                    .any(|s| matches!(s, Scope::Bound(b) if *b == name));
                if bound {
                    self.nav(Head::Var(name), Vec::new(), span)
                } else {
                    self.nav(Head::Implicit, vec![Step::Attr(name)], span)
                }
            }
            _ => self.fail(&PRIMARY_START),
        }
    }

    fn nav(&mut self, head: Head, mut steps: Vec<Step>, start: Span) -> Result<Expr, ParseError> {
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.bump();
                    let (attr, _) = self.ident()?;
                    steps.push(Step::Attr(attr));
                }
                Tok::Arrow => {
                    self.bump();
                    steps.push(Step::Call(self.call()?));
                }
                _ => break,
            }
        }
        let span = start.to(self.prev_span());
        Ok(Expr::new(ExprKind::Nav(Nav { head, steps }), span))
    }

    fn call(&mut self) -> Result<CollectionCall, ParseError> {
        let op_span = self.span();
        let (name, _) = self.ident()?;
        let op = CollOp::from_name(&name).ok_or_else(|| ParseError {
            line: op_span.line,
            column: op_span.column,
            message: format!("unknown collection operation '{name}'"),
            expected: CollOp::ALL.iter().map(|o| o.name().to_string()).collect(),
        })?;
        self.expect(Tok::LParen, &["'('"])?;
        let (binder, arg) = match op.arg_shape() {
            ArgShape::Empty => (None, None),
            ArgShape::Value => (None, Some(Box::new(self.expr()?))),
            ArgShape::Iterator => {
                let explicit = match (self.peek(), self.peek_at(1)) {
                    (Tok::Ident(v), Tok::Bar) => Some(v.clone()),
                    _ => None,
                };
                if let Some(v) = &explicit {
                    let at = self.span();
                    if self.scopes.iter().any(|s| matches!(s, Scope::Bound(b) if b == v)) {
                        return Err(ParseError {
                            line: at.line,
                            column: at.column,
                            message: format!("variable '{v}' is already bound"),
                            expected: vec!["fresh identifier".into()],
                        });
                    }
                    self.bump();
                    self.bump();
                    self.scopes.push(Scope::Bound(v.clone()));
                } else {
                    self.scopes.push(Scope::Implicit);
                }
                let body = self.expr();
                self.scopes.pop();
                (explicit, Some(Box::new(body?)))
            }
        };
        let end = self.expect(Tok::RParen, &["')'"])?;
        Ok(CollectionCall {
            op,
            binder,
            arg,
            span: op_span.to(end),
        })
    }
}
