//! Formula serialization: canonical A1 text and origin-relative R1C1
//! signatures.

use std::fmt::Write;

use super::ast::{CellRef, Expr, UnaryOp};
use crate::workbook::CellAddress;

/// Canonical text for an AST, including the leading `=`.
///
/// Function names and column letters are uppercase, whitespace is dropped,
/// and `Paren` nodes are kept. Parentheses are also inserted wherever the
/// tree shape would otherwise not survive a re-parse.
pub fn serialize(expr: &Expr) -> String {
    let mut out = String::from("=");
    write_expr(&mut out, expr, &write_a1_ref);
    out
}

/// Origin-relative signature. Relative components become offsets
/// (`R[-1]C[0]`), absolute components fixed 1-based coordinates (`R4C2`).
/// Copy-filled formulas map to identical strings.
pub fn normalize_r1c1(expr: &Expr, origin: CellAddress) -> String {
    let mut out = String::from("=");
    let write_ref = |out: &mut String, r: &CellRef| {
        if let Some(sheet) = &r.sheet {
            out.push_str(&quote_sheet_name(sheet));
            out.push('!');
        }
        write_r1c1_body(out, r, origin);
    };
    write_expr(&mut out, expr, &write_ref);
    out
}

fn write_r1c1_body(out: &mut String, r: &CellRef, origin: CellAddress) {
    if r.row_absolute {
        let _ = write!(out, "R{}", r.row as u64 + 1);
    } else {
        let _ = write!(out, "R[{}]", r.row as i64 - origin.row as i64);
    }
    if r.col_absolute {
        let _ = write!(out, "C{}", r.col as u64 + 1);
    } else {
        let _ = write!(out, "C[{}]", r.col as i64 - origin.col as i64);
    }
}

pub(crate) fn write_a1_ref(out: &mut String, r: &CellRef) {
    if let Some(sheet) = &r.sheet {
        out.push_str(&quote_sheet_name(sheet));
        out.push('!');
    }
    write_a1_body(out, r);
}

fn write_a1_body(out: &mut String, r: &CellRef) {
    if r.col_absolute {
        out.push('$');
    }
    out.push_str(&column_name(r.col));
    if r.row_absolute {
        out.push('$');
    }
    let _ = write!(out, "{}", r.row as u64 + 1);
}

pub(crate) fn write_expr(out: &mut String, expr: &Expr, write_ref: &dyn Fn(&mut String, &CellRef)) {
    match expr {
        Expr::Number(n) => out.push_str(&n.text),
        Expr::Text(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        Expr::Boolean(true) => out.push_str("TRUE"),
        Expr::Boolean(false) => out.push_str("FALSE"),
        Expr::Cell(r) => write_ref(out, r),
        Expr::Range(range) => {
            write_ref(out, &range.start);
            out.push(':');
            // the qualifier is written once, on the start corner
            let end = CellRef {
                sheet: None,
                ..range.end.clone()
            };
            write_ref(out, &end);
        }
        Expr::Function { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_expr(out, arg, write_ref);
            }
            out.push(')');
        }
        Expr::Paren(inner) => {
            out.push('(');
            write_expr(out, inner, write_ref);
            out.push(')');
        }
        Expr::Binary { op, left, right } => {
            let prec = op.precedence();
            write_operand(out, left, left.precedence() < prec, write_ref);
            out.push_str(op.symbol());
            write_operand(out, right, right.precedence() <= prec, write_ref);
        }
        Expr::Unary { op, operand } => {
            let needs = operand.precedence() < op.precedence();
            match op {
                UnaryOp::Neg | UnaryOp::Plus => {
                    out.push_str(op.symbol());
                    write_operand(out, operand, needs, write_ref);
                }
                UnaryOp::Percent => {
                    write_operand(out, operand, needs, write_ref);
                    out.push('%');
                }
            }
        }
    }
}

fn write_operand(out: &mut String, expr: &Expr, parens: bool, write_ref: &dyn Fn(&mut String, &CellRef)) {
    if parens {
        out.push('(');
        write_expr(out, expr, write_ref);
        out.push(')');
    } else {
        write_expr(out, expr, write_ref);
    }
}

/// `0 → A`, `25 → Z`, `26 → AA`.
pub fn column_name(col: u32) -> String {
    let mut n = col as u64 + 1;
    let mut buf = Vec::new();
    while n > 0 {
        let rem = ((n - 1) % 26) as u8;
        buf.push(b'A' + rem);
        n = (n - 1) / 26;
    }
    buf.reverse();
    String::from_utf8(buf).expect("ascii")
}

pub fn a1_name(col: u32, row: u32) -> String {
    format!("{}{}", column_name(col), row as u64 + 1)
}

/// Quotes a sheet name unless it lexes as a plain identifier that cannot
/// be mistaken for a reference or boolean.
pub fn quote_sheet_name(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && super::parser::parse_a1(name).is_none()
        && !name.eq_ignore_ascii_case("TRUE")
        && !name.eq_ignore_ascii_case("FALSE");
    if plain {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}
