use std::fmt;

/// Maximum column index (`XFD`).
pub const MAX_COL: u32 = 16_383;
/// Maximum row index (row 1,048,576).
pub const MAX_ROW: u32 = 1_048_575;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(NumberLit),
    Text(String),
    Boolean(bool),
    Cell(CellRef),
    Range(RangeRef),
    Function {
        name: String,
        args: Vec<Expr>,
    },
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Paren(Box<Expr>),
}

/// Unsigned numeric literal. `text` is the spelling from the formula source;
/// a leading minus is always a separate [`UnaryOp::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub struct NumberLit {
    pub text: String,
    pub value: f64,
}

impl NumberLit {
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        let value: f64 = text.parse().ok()?;
        if !value.is_finite() || text.starts_with(['-', '+']) {
            return None;
        }
        Some(Self { text, value })
    }
}

/// An A1-style reference. Coordinates are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub sheet: Option<String>,
    pub col: u32,
    pub row: u32,
    pub col_absolute: bool,
    pub row_absolute: bool,
}

impl CellRef {
    pub fn relative(col: u32, row: u32) -> Self {
        Self {
            sheet: None,
            col,
            row,
            col_absolute: false,
            row_absolute: false,
        }
    }

    pub fn absolute(col: u32, row: u32) -> Self {
        Self {
            sheet: None,
            col,
            row,
            col_absolute: true,
            row_absolute: true,
        }
    }

    pub fn on_sheet(mut self, sheet: impl Into<String>) -> Self {
        self.sheet = Some(sheet.into());
        self
    }
}

/// A rectangular range. Both corners carry the same sheet qualifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeRef {
    pub start: CellRef,
    pub end: CellRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 12] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
        BinaryOp::Concat,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Concat => "&",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    /// Binding strength; higher binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 1,
            BinaryOp::Concat => 2,
            BinaryOp::Add | BinaryOp::Sub => 3,
            BinaryOp::Mul | BinaryOp::Div => 4,
            BinaryOp::Pow => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Plus,
    /// Postfix `%`.
    Percent,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::Percent => "%",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            UnaryOp::Neg | UnaryOp::Plus => 6,
            UnaryOp::Percent => 7,
        }
    }
}

pub(crate) const ATOM_PRECEDENCE: u8 = 8;

impl Expr {
    pub fn number(text: &str) -> Self {
        Expr::Number(NumberLit::new(text).expect("valid number literal"))
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Self {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Self {
        Expr::Unary {
            op,
            operand: Box::new(operand),
        }
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Self {
        Expr::Function {
            name: name.to_ascii_uppercase(),
            args,
        }
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Unary { op, .. } => op.precedence(),
            _ => ATOM_PRECEDENCE,
        }
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Function { args, .. } => args.iter().collect(),
            Expr::Binary { left, right, .. } => vec![left, right],
            Expr::Unary { operand, .. } => vec![operand],
            Expr::Paren(inner) => vec![inner],
            _ => Vec::new(),
        }
    }

    /// Copy of the tree with every `Paren` node removed.
    pub fn strip_parens(&self) -> Expr {
        match self {
            Expr::Paren(inner) => inner.strip_parens(),
            Expr::Function { name, args } => Expr::Function {
                name: name.clone(),
                args: args.iter().map(Expr::strip_parens).collect(),
            },
            Expr::Binary { op, left, right } => Expr::binary(*op, left.strip_parens(), right.strip_parens()),
            Expr::Unary { op, operand } => Expr::unary(*op, operand.strip_parens()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Expr {
    /// Canonical formula text without the leading `=`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        super::print::write_expr(&mut out, self, &super::print::write_a1_ref);
        f.write_str(&out)
    }
}
