//! Recursive-descent parser for A1-style spreadsheet formulas.
//!
//! Precedence, loosest to tightest: comparison, `&`, `+ -`, `* /`, `^`,
//! prefix `- +`, postfix `%`. Binary operators associate to the left.

use std::fmt;

use thiserror::Error;

use super::ast::{BinaryOp, CellRef, Expr, NumberLit, RangeRef, UnaryOp, MAX_COL, MAX_ROW};

/// A grammar error. `position` is a 0-based character offset into the
/// formula source, counting the leading `=`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

pub fn parse_formula(source: &str) -> Result<Expr, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    if chars.first() != Some(&'=') {
        return Err(ParseError {
            position: 0,
            message: "formula must begin with '='".into(),
        });
    }
    let mut p = Parser { chars, pos: 1 };
    let expr = p.expression()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        let message = if c == ')' {
            "unbalanced ')'".to_string()
        } else {
            format!("unexpected '{c}'")
        };
        return Err(p.error(message));
    }
    Ok(expr)
}

/// Parses a bare A1 reference such as `B7` or `$C$3`, without a sheet
/// qualifier. Used by the file loaders for cell addresses.
pub fn parse_a1(text: &str) -> Option<CellRef> {
    let chars: Vec<char> = text.chars().collect();
    let mut p = Parser { chars, pos: 0 };
    let r = p.a1_body(None).ok()?;
    if p.pos == p.chars.len() {
        Some(r)
    } else {
        None
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: impl fmt::Display) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(1)
    }

    fn binary_op(&mut self) -> Option<(BinaryOp, usize)> {
        self.skip_ws();
        let op = match (self.peek()?, self.peek_at(1)) {
            ('<', Some('=')) => return Some((BinaryOp::Le, 2)),
            ('>', Some('=')) => return Some((BinaryOp::Ge, 2)),
            ('<', Some('>')) => return Some((BinaryOp::Ne, 2)),
            ('<', _) => BinaryOp::Lt,
            ('>', _) => BinaryOp::Gt,
            ('=', _) => BinaryOp::Eq,
            ('&', _) => BinaryOp::Concat,
            ('+', _) => BinaryOp::Add,
            ('-', _) => BinaryOp::Sub,
            ('*', _) => BinaryOp::Mul,
            ('/', _) => BinaryOp::Div,
            ('^', _) => BinaryOp::Pow,
            _ => return None,
        };
        Some((op, 1))
    }

    fn binary_level(&mut self, level: u8) -> Result<Expr, ParseError> {
        if level > 5 {
            return self.prefix();
        }
        let mut left = self.binary_level(level + 1)?;
        while let Some((op, width)) = self.binary_op() {
            if op.precedence() != level {
                break;
            }
            self.pos += width;
            let right = self.binary_level(level + 1)?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let op = match self.peek() {
            Some('-') => UnaryOp::Neg,
            Some('+') => UnaryOp::Plus,
            _ => return self.postfix(),
        };
        self.pos += 1;
        let operand = self.prefix()?;
        Ok(Expr::unary(op, operand))
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut expr = self.primary()?;
        loop {
            self.skip_ws();
            if self.peek() == Some('%') {
                self.pos += 1;
                expr = Expr::unary(UnaryOp::Percent, expr);
            } else {
                return Ok(expr);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let Some(c) = self.peek() else {
            return Err(self.error("expected operand, found end of formula"));
        };
        match c {
            '(' => {
                self.pos += 1;
                let inner = self.expression()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(Expr::Paren(Box::new(inner)))
            }
            '"' => self.string(),
            '\'' => {
                let sheet = self.quoted_sheet()?;
                self.reference(Some(sheet))
            }
            c if c.is_ascii_digit() || c == '.' => self.number(),
            c if c.is_alphabetic() || c == '_' || c == '$' || c == '\\' => self.word(),
            ')' => Err(self.error("unbalanced ')'")),
            c => Err(self.error(format!("expected operand, found '{c}'"))),
        }
    }

    fn string(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut text = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(ParseError {
                        position: start,
                        message: "unterminated string literal".into(),
                    })
                }
                Some('"') if self.peek_at(1) == Some('"') => {
                    text.push('"');
                    self.pos += 2;
                }
                Some('"') => {
                    self.pos += 1;
                    return Ok(Expr::Text(text));
                }
                Some(c) => {
                    text.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        NumberLit::new(text.clone()).map(Expr::Number).ok_or(ParseError {
            position: start,
            message: format!("malformed number '{text}'"),
        })
    }

    fn quoted_sheet(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let mut name = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(ParseError {
                        position: start,
                        message: "unterminated sheet name".into(),
                    })
                }
                Some('\'') if self.peek_at(1) == Some('\'') => {
                    name.push('\'');
                    self.pos += 2;
                }
                Some('\'') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => {
                    name.push(c);
                    self.pos += 1;
                }
            }
        }
        if self.peek() != Some('!') || name.is_empty() {
            return Err(self.error("expected '!' after sheet name"));
        }
        self.pos += 1;
        Ok(name)
    }

    fn word(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '.' | '$' | '\\')) {
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        match self.peek() {
            Some('(') if !word.contains('$') => {
                self.pos += 1;
                let args = self.arguments()?;
                Ok(Expr::Function {
                    name: word.to_ascii_uppercase(),
                    args,
                })
            }
            Some('!') => {
                self.pos += 1;
                self.reference(Some(word))
            }
            _ if word.eq_ignore_ascii_case("TRUE") => Ok(Expr::Boolean(true)),
            _ if word.eq_ignore_ascii_case("FALSE") => Ok(Expr::Boolean(false)),
            _ => {
                self.pos = start;
                self.reference(None)
            }
        }
    }

    fn arguments(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.expression()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    return Ok(args);
                }
                None => return Err(self.error("expected ')'")),
                Some(c) => return Err(self.error(format!("expected ',' or ')', found '{c}'"))),
            }
        }
    }

    /// A cell or range reference, with the sheet qualifier already consumed.
    fn reference(&mut self, sheet: Option<String>) -> Result<Expr, ParseError> {
        let start = self.a1_body(sheet.clone())?;
        if self.peek() != Some(':') {
            return Ok(Expr::Cell(start));
        }
        self.pos += 1;
        let end_sheet = self.optional_qualifier()?;
        if let Some(end_sheet) = &end_sheet {
            let same = sheet.as_deref().is_some_and(|s| s.eq_ignore_ascii_case(end_sheet));
            if !same {
                return Err(self.error("range corners must share one sheet"));
            }
        }
        let end = self.a1_body(sheet)?;
        Ok(Expr::Range(RangeRef { start, end }))
    }

    fn optional_qualifier(&mut self) -> Result<Option<String>, ParseError> {
        if self.peek() == Some('\'') {
            return self.quoted_sheet().map(Some);
        }
        let save = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '.')) {
            self.pos += 1;
        }
        if self.peek() == Some('!') && self.pos > save {
            let name: String = self.chars[save..self.pos].iter().collect();
            self.pos += 1;
            Ok(Some(name))
        } else {
            self.pos = save;
            Ok(None)
        }
    }

    fn a1_body(&mut self, sheet: Option<String>) -> Result<CellRef, ParseError> {
        let start = self.pos;
        let malformed = |p: &Parser| {
            let mut end = p.pos;
            while matches!(p.chars.get(end), Some(c) if c.is_alphanumeric() || matches!(c, '$' | '_' | '.')) {
                end += 1;
            }
            let text: String = p.chars[start..end.max(start)].iter().collect();
            ParseError {
                position: start,
                message: if text.is_empty() {
                    "expected cell reference".to_string()
                } else {
                    format!("malformed reference '{text}'")
                },
            }
        };

        let col_absolute = self.peek() == Some('$');
        if col_absolute {
            self.pos += 1;
        }
        let mut col: u32 = 0;
        let mut letters = 0;
        while let Some(c) = self.peek().filter(char::is_ascii_alphabetic) {
            col = col * 26 + (c.to_ascii_uppercase() as u32 - 'A' as u32 + 1);
            letters += 1;
            self.pos += 1;
            if letters > 3 {
                return Err(malformed(self));
            }
        }
        if letters == 0 {
            return Err(malformed(self));
        }
        let row_absolute = self.peek() == Some('$');
        if row_absolute {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(malformed(self));
        }
        let row: u64 = self.chars[digits_start..self.pos]
            .iter()
            .collect::<String>()
            .parse()
            .map_err(|_| malformed(self))?;
        // A reference must not run into further identifier characters.
        if matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '.' | '$')) {
            return Err(malformed(self));
        }
        if row == 0 || row - 1 > MAX_ROW as u64 || col - 1 > MAX_COL {
            return Err(malformed(self));
        }
        Ok(CellRef {
            sheet,
            col: col - 1,
            row: (row - 1) as u32,
            col_absolute,
            row_absolute,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BinaryOp::*;

    fn p(s: &str) -> Expr {
        parse_formula(s).unwrap()
    }

    #[test]
    fn precedence_mul_over_add() {
        assert_eq!(
            p("=1+2*3"),
            Expr::binary(
                Add,
                Expr::number("1"),
                Expr::binary(Mul, Expr::number("2"), Expr::number("3"))
            )
        );
    }

    #[test]
    fn nested_function_calls() {
        let range = Expr::Range(RangeRef {
            start: CellRef::relative(0, 0),
            end: CellRef::relative(0, 2),
        });
        assert_eq!(
            p("=ROUND(SUM(A1:A3)/3,1)"),
            Expr::call(
                "ROUND",
                vec![
                    Expr::binary(Div, Expr::call("SUM", vec![range]), Expr::number("3")),
                    Expr::number("1"),
                ]
            )
        );
    }

    #[test]
    fn sheet_qualified_absolute_reference() {
        assert_eq!(
            p("=Sheet2!$B$4*A1"),
            Expr::binary(
                Mul,
                Expr::Cell(CellRef::absolute(1, 3).on_sheet("Sheet2")),
                Expr::Cell(CellRef::relative(0, 0))
            )
        );
    }

    #[test]
    fn unbalanced_paren_position() {
        let err = parse_formula("=SUM(").unwrap_err();
        assert_eq!(err.position, 5);
    }

    #[test]
    fn grammar_errors() {
        for bad in [
            "=",
            "=1+",
            "=(1",
            "=1)",
            "=A0",
            "=ABCD1",
            "=A",
            "=1 2",
            "SUM(1)",
            "=\"abc",
            "=SUM(1,)",
            "=Sheet1!A1:Other!B2",
            "=*2",
        ] {
            assert!(parse_formula(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn dangling_operator_reports_end() {
        let err = parse_formula("=1+").unwrap_err();
        assert_eq!(err.position, 3);
    }

    #[test]
    fn function_names_case_insensitive() {
        assert_eq!(p("=sum(a1)"), p("=SUM(A1)"));
    }

    #[test]
    fn unary_binds_tighter_than_power_and_percent_tightest() {
        assert_eq!(
            p("=-2^2"),
            Expr::binary(Pow, Expr::unary(UnaryOp::Neg, Expr::number("2")), Expr::number("2"))
        );
        assert_eq!(
            p("=-5%"),
            Expr::unary(UnaryOp::Neg, Expr::unary(UnaryOp::Percent, Expr::number("5")))
        );
    }

    #[test]
    fn comparison_below_concat() {
        assert_eq!(
            p("=A1&\"x\"=\"yx\""),
            Expr::binary(
                Eq,
                Expr::binary(Concat, Expr::Cell(CellRef::relative(0, 0)), Expr::Text("x".into())),
                Expr::Text("yx".into())
            )
        );
    }

    #[test]
    fn quoted_sheet_and_range() {
        let e = p("=SUM('My Data'!A1:'My Data'!B2)");
        let Expr::Function { args, .. } = e else { panic!() };
        let Expr::Range(r) = &args[0] else { panic!() };
        assert_eq!(r.start.sheet.as_deref(), Some("My Data"));
        assert_eq!(r.end.sheet.as_deref(), Some("My Data"));
        assert_eq!((r.end.col, r.end.row), (1, 1));
    }

    #[test]
    fn booleans_and_strings() {
        assert_eq!(p("=TRUE"), Expr::Boolean(true));
        assert_eq!(p("=\"a\"\"b\""), Expr::Text("a\"b".into()));
    }

    #[test]
    fn a1_helper() {
        assert_eq!(parse_a1("XFD1048576"), Some(CellRef::relative(MAX_COL, MAX_ROW)));
        assert_eq!(parse_a1("XFE1"), None);
        assert_eq!(parse_a1("A1 "), None);
    }
}
