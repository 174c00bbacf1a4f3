//! Line-based text format for hand-written workbooks.
//!
//! ```text
//! # comment
//! sheet Inputs
//! Inputs!A1=3.5
//! Inputs!A2=hello
//! 'Grades 2012'!B1==ROUND(Inputs!A1*2,1)
//! ```
//!
//! A single `=` after the address introduces a literal: `TRUE`/`FALSE`,
//! a number, or otherwise text. A second `=` starts a formula. Sheets are
//! created in the order they are first declared or assigned.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::LoadError;
use crate::formula::{a1_name, parse_a1, quote_sheet_name, serialize};
use crate::workbook::{CellAddress, CellContent, Formula, Literal, Workbook, WorkbookBuilder};

pub fn load_fixture(path: impl AsRef<Path>) -> Result<Workbook, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::io(path, e))?;
    parse_fixture(&text)
}

pub fn parse_fixture(text: &str) -> Result<Workbook, LoadError> {
    let mut builder = WorkbookBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix("sheet ").filter(|_| !trimmed.contains('=')) {
            builder
                .sheet_or_insert(name.trim())
                .map_err(|e| LoadError::line(line_no, e.to_string()))?;
            continue;
        }
        let (sheet, rest) =
            split_sheet(trimmed).ok_or_else(|| LoadError::line(line_no, "expected `<Sheet>!<cell>=<value>`"))?;
        let (addr_text, value) = rest
            .split_once('=')
            .ok_or_else(|| LoadError::line(line_no, "missing `=` after cell address"))?;
        let r = parse_a1(addr_text.trim())
            .ok_or_else(|| LoadError::line(line_no, format!("invalid cell address `{}`", addr_text.trim())))?;
        let sheet = builder
            .sheet_or_insert(&sheet)
            .map_err(|e| LoadError::line(line_no, e.to_string()))?;
        let addr = CellAddress::new(sheet, r.col, r.row);
        let content = if value.starts_with('=') {
            let f = Formula::parse(value.trim_end()).map_err(|e| LoadError::line(line_no, e.to_string()))?;
            CellContent::Formula(f)
        } else {
            CellContent::Literal(parse_literal(value.trim()))
        };
        builder
            .set_cell(addr, content)
            .map_err(|e| LoadError::line(line_no, e.to_string()))?;
    }
    Ok(builder.build())
}

/// Splits `Sheet!rest` or `'Quoted Sheet'!rest`.
fn split_sheet(line: &str) -> Option<(String, &str)> {
    if let Some(body) = line.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = body.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if let Some((_, '\'')) = chars.peek() {
                    chars.next();
                    name.push('\'');
                    continue;
                }
                return body[i + 1..].strip_prefix('!').map(|rest| (name, rest));
            }
            name.push(c);
        }
        None
    } else {
        let (name, rest) = line.split_once('!')?;
        let name = name.trim();
        (!name.is_empty()).then(|| (name.to_string(), rest))
    }
}

fn parse_literal(text: &str) -> Literal {
    if text.eq_ignore_ascii_case("TRUE") {
        Literal::boolean(true)
    } else if text.eq_ignore_ascii_case("FALSE") {
        Literal::boolean(false)
    } else {
        Literal::parse_number(text).unwrap_or_else(|| Literal::text(text))
    }
}

/// Renders a workbook in fixture format. Every sheet is declared up front
/// so empty sheets and tab order survive a reload.
pub fn write_fixture(wb: &Workbook) -> String {
    let mut out = String::new();
    for sheet in wb.sheets() {
        let _ = writeln!(out, "sheet {}", sheet.name());
    }
    for sheet in wb.sheets() {
        let name = quote_sheet_name(sheet.name());
        for (col, row, content) in sheet.cells() {
            let value = match content {
                CellContent::Literal(l) => l.text.clone(),
                CellContent::Formula(f) if f.source.contains(['\n', '\r']) => serialize(&f.ast),
                CellContent::Formula(f) => f.source.clone(),
            };
            let _ = writeln!(out, "{name}!{}={value}", a1_name(col, row));
        }
    }
    out
}
