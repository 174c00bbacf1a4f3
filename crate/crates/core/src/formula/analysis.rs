//! Structural measurements over formula trees.

use serde::Serialize;
use thiserror::Error;

use super::ast::{CellRef, Expr, UnaryOp};
use crate::workbook::{CellAddress, Workbook};

/// A literal found inside a formula, with the name of the nearest
/// enclosing function call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constant {
    pub text: String,
    pub function: Option<String>,
}

/// Every literal leaf of `expr`, in source order.
///
/// A numeric literal directly under a unary minus is reported with its
/// sign (`-1`), since that is the constant as written.
pub fn constants_in(expr: &Expr) -> Vec<Constant> {
    let mut out = Vec::new();
    collect_constants(expr, None, &mut out);
    out
}

fn collect_constants(expr: &Expr, function: Option<&str>, out: &mut Vec<Constant>) {
    let push = |out: &mut Vec<Constant>, text: String| {
        out.push(Constant {
            text,
            function: function.map(str::to_string),
        })
    };
    match expr {
        Expr::Number(n) => push(out, n.text.clone()),
        Expr::Text(s) => push(out, format!("\"{}\"", s.replace('"', "\"\""))),
        Expr::Boolean(b) => push(out, if *b { "TRUE" } else { "FALSE" }.to_string()),
        Expr::Unary {
            op: UnaryOp::Neg,
            operand,
        } if matches!(**operand, Expr::Number(_)) => {
            let Expr::Number(n) = &**operand else { unreachable!() };
            push(out, format!("-{}", n.text));
        }
        Expr::Function { name, args } => {
            for arg in args {
                collect_constants(arg, Some(name), out);
            }
        }
        other => {
            for child in other.children() {
                collect_constants(child, function, out);
            }
        }
    }
}

fn is_operation(expr: &Expr) -> bool {
    matches!(expr, Expr::Binary { .. } | Expr::Unary { .. } | Expr::Function { .. })
}

/// Operator applications plus function calls. Literals, references and
/// parentheses count zero.
pub fn operation_count(expr: &Expr) -> usize {
    usize::from(is_operation(expr)) + expr.children().into_iter().map(operation_count).sum::<usize>()
}

/// Largest number of operation nodes on any root-to-leaf path.
pub fn max_nesting_depth(expr: &Expr) -> usize {
    let below = expr.children().into_iter().map(max_nesting_depth).max().unwrap_or(0);
    below + usize::from(is_operation(expr))
}

/// All reference leaves. Ranges are yielded as a pair of corners.
pub fn references(expr: &Expr) -> Vec<Reference<'_>> {
    let mut out = Vec::new();
    fn walk<'a>(e: &'a Expr, out: &mut Vec<Reference<'a>>) {
        match e {
            Expr::Cell(r) => out.push(Reference::Cell(r)),
            Expr::Range(r) => out.push(Reference::Range(&r.start, &r.end)),
            other => other.children().into_iter().for_each(|c| walk(c, out)),
        }
    }
    walk(expr, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference<'a> {
    Cell(&'a CellRef),
    Range(&'a CellRef, &'a CellRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefTarget {
    Cell(CellAddress),
    /// Inclusive rectangle with `start` at the top-left.
    Range {
        start: CellAddress,
        end: CellAddress,
    },
}

impl RefTarget {
    pub fn sheet(&self) -> usize {
        match self {
            RefTarget::Cell(a) => a.sheet,
            RefTarget::Range { start, .. } => start.sheet,
        }
    }

    pub fn contains(&self, addr: CellAddress) -> bool {
        match *self {
            RefTarget::Cell(a) => a == addr,
            RefTarget::Range { start, end } => {
                addr.sheet == start.sheet
                    && (start.col..=end.col).contains(&addr.col)
                    && (start.row..=end.row).contains(&addr.row)
            }
        }
    }

    /// Bottom-right corner.
    pub fn far_corner(&self) -> CellAddress {
        match *self {
            RefTarget::Cell(a) => a,
            RefTarget::Range { end, .. } => end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedReference {
    pub origin: CellAddress,
    pub target: RefTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown worksheet `{0}`")]
pub struct UnknownSheet(pub String);

fn resolve_sheet(r: &CellRef, origin: CellAddress, wb: &Workbook) -> Result<usize, UnknownSheet> {
    match &r.sheet {
        None => Ok(origin.sheet),
        Some(name) => wb.sheet_index(name).ok_or_else(|| UnknownSheet(name.clone())),
    }
}

/// Resolves every reference in `expr` against `wb`. Unqualified references
/// land on the origin's sheet.
pub fn referenced_cells(
    expr: &Expr,
    origin: CellAddress,
    wb: &Workbook,
) -> Result<Vec<ResolvedReference>, UnknownSheet> {
    references(expr)
        .into_iter()
        .map(|r| {
            let target = match r {
                Reference::Cell(c) => RefTarget::Cell(CellAddress::new(resolve_sheet(c, origin, wb)?, c.col, c.row)),
                Reference::Range(a, b) => {
                    let sheet = resolve_sheet(a, origin, wb)?;
                    RefTarget::Range {
                        start: CellAddress::new(sheet, a.col.min(b.col), a.row.min(b.row)),
                        end: CellAddress::new(sheet, a.col.max(b.col), a.row.max(b.row)),
                    }
                }
            };
            Ok(ResolvedReference { origin, target })
        })
        .collect()
}

/// Shifts the relative components of every reference by the given offsets,
/// as a copy-fill does. Returns `None` when a shifted reference would leave
/// the grid.
pub fn translate(expr: &Expr, drow: i64, dcol: i64) -> Option<Expr> {
    use super::ast::{MAX_COL, MAX_ROW};
    let shift = |r: &CellRef| -> Option<CellRef> {
        let mut r = r.clone();
        if !r.row_absolute {
            let row = r.row as i64 + drow;
            if !(0..=MAX_ROW as i64).contains(&row) {
                return None;
            }
            r.row = row as u32;
        }
        if !r.col_absolute {
            let col = r.col as i64 + dcol;
            if !(0..=MAX_COL as i64).contains(&col) {
                return None;
            }
            r.col = col as u32;
        }
        Some(r)
    };
    Some(match expr {
        Expr::Cell(r) => Expr::Cell(shift(r)?),
        Expr::Range(r) => Expr::Range(super::ast::RangeRef {
            start: shift(&r.start)?,
            end: shift(&r.end)?,
        }),
        Expr::Function { name, args } => Expr::Function {
            name: name.clone(),
            args: args.iter().map(|a| translate(a, drow, dcol)).collect::<Option<_>>()?,
        },
        Expr::Binary { op, left, right } => {
            Expr::binary(*op, translate(left, drow, dcol)?, translate(right, drow, dcol)?)
        }
        Expr::Unary { op, operand } => Expr::unary(*op, translate(operand, drow, dcol)?),
        Expr::Paren(inner) => Expr::Paren(Box::new(translate(inner, drow, dcol)?)),
        leaf => leaf.clone(),
    })
}
