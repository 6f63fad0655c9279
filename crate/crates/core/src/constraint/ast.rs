use std::fmt;

/// Source location of a token or AST node. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            end: other.end,
            ..self
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContextType {
    Function,
    HardwareNode,
    Link,
    FlowEdge,
    Model,
}

impl ContextType {
    pub const ALL: [ContextType; 5] = [
        ContextType::Function,
        ContextType::HardwareNode,
        ContextType::Link,
        ContextType::FlowEdge,
        ContextType::Model,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContextType::Function => "Function",
            ContextType::HardwareNode => "HardwareNode",
            ContextType::Link => "Link",
            ContextType::FlowEdge => "FlowEdge",
            ContextType::Model => "Model",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ContextType::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for ContextType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "implies",
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Decimal(f64),
    Str(String),
    Bool(bool),
    /// `Type::value`, resolved at evaluation time.
    Enum { ty: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollOp {
    ForAll,
    Exists,
    Select,
    Collect,
    IsUnique,
    Size,
    Sum,
    Includes,
}

/// How a collection operation takes its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgShape {
    /// `(v | body)` or `(body)` with an implicit iterator.
    Iterator,
    /// `()`.
    Empty,
    /// `(expr)` evaluated in the enclosing scope.
    Value,
}

impl CollOp {
    pub const ALL: [CollOp; 8] = [
        CollOp::ForAll,
        CollOp::Exists,
        CollOp::Select,
        CollOp::Collect,
        CollOp::IsUnique,
        CollOp::Size,
        CollOp::Sum,
        CollOp::Includes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollOp::ForAll => "forAll",
            CollOp::Exists => "exists",
            CollOp::Select => "select",
            CollOp::Collect => "collect",
            CollOp::IsUnique => "isUnique",
            CollOp::Size => "size",
            CollOp::Sum => "sum",
            CollOp::Includes => "includes",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        CollOp::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn arg_shape(self) -> ArgShape {
        match self {
            CollOp::ForAll | CollOp::Exists | CollOp::Select | CollOp::Collect | CollOp::IsUnique => {
                ArgShape::Iterator
            }
            CollOp::Size | CollOp::Sum => ArgShape::Empty,
            CollOp::Includes => ArgShape::Value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Head {
    SelfRef,
    Var(String),
    /// A bare attribute name: resolves against the innermost iterator that
    /// has no explicit binder, or `self` when there is none.
    Implicit,
}

#[derive(Debug, Clone)]
pub struct CollectionCall {
    pub op: CollOp,
    /// Explicit iterator variable; `None` for implicit iterators and
    /// non-iterator operations.
    pub binder: Option<String>,
    pub arg: Option<Box<Expr>>,
    pub span: Span,
}

impl PartialEq for CollectionCall {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op && self.binder == other.binder && self.arg == other.arg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Attr(String),
    Call(CollectionCall),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nav {
    pub head: Head,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Nav(Nav),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
}

/// Expression node. Equality is structural and ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn unspanned(kind: ExprKind) -> Self {
        Self::new(kind, Span::default())
    }
}

/// `context <Type> inv <Name>: <body>`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub context: ContextType,
    pub name: String,
    pub body: Expr,
    pub span: Span,
}

impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        self.context == other.context && self.name == other.name && self.body == other.body
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn get(&self, context: ContextType, name: &str) -> Option<&Constraint> {
        self.constraints
            .iter()
            .find(|c| c.context == context && c.name == name)
    }

    /// Appends `other`, letting its constraints replace same-named ones.
    pub fn merged_with(&self, other: &ConstraintSet) -> ConstraintSet {
        let mut constraints: Vec<Constraint> = self
            .constraints
            .iter()
            .filter(|c| other.get(c.context, &c.name).is_none())
            .cloned()
            .collect();
        constraints.extend(other.constraints.iter().cloned());
        ConstraintSet { constraints }
    }
}
