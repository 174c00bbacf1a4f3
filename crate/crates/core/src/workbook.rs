//! In-memory spreadsheet model.
//!
//! A [`Workbook`] is assembled once through [`WorkbookBuilder`] and is
//! read-only afterwards. Cells are stored sparsely; an address without an
//! entry is empty.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::ModelError;
use crate::formula::{self, Expr};

/// Location of a cell inside a workbook. All components are 0-based.
///
/// The derived ordering is sheet, then row, then column, which is the
/// row-major traversal order used everywhere reports are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellAddress {
    pub sheet: usize,
    pub row: u32,
    pub col: u32,
}

impl CellAddress {
    pub fn new(sheet: usize, col: u32, row: u32) -> Self {
        Self { sheet, row, col }
    }
}

/// Computed or literal value of a cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum CellValue {
    Number(f64),
    Text(String),
    Boolean(bool),
    Error(String),
}

impl CellValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Number(n) => write!(f, "{n}"),
            CellValue::Text(s) => f.write_str(s),
            CellValue::Boolean(true) => f.write_str("TRUE"),
            CellValue::Boolean(false) => f.write_str("FALSE"),
            CellValue::Error(code) => f.write_str(code),
        }
    }
}

/// A constant cell. Numbers keep the decimal text they were read from next
/// to the parsed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub value: CellValue,
    pub text: String,
}

impl Literal {
    pub fn number(value: f64) -> Self {
        Self {
            text: format!("{value}"),
            value: CellValue::Number(value),
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            value: CellValue::Text(text.clone()),
            text,
        }
    }

    pub fn boolean(b: bool) -> Self {
        Self {
            text: if b { "TRUE" } else { "FALSE" }.to_string(),
            value: CellValue::Boolean(b),
        }
    }

    /// Parses decimal text into a numeric literal. Non-finite values are
    /// rejected.
    pub fn parse_number(text: &str) -> Option<Self> {
        let value: f64 = text.trim().parse().ok()?;
        if !value.is_finite() {
            return None;
        }
        Some(Self {
            value: CellValue::Number(value),
            text: text.trim().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    /// Text as loaded, always starting with `=`.
    pub source: String,
    pub ast: Expr,
    /// Value stored alongside the formula by the producing application, if any.
    pub cached: Option<CellValue>,
}

impl Formula {
    pub fn parse(source: &str) -> Result<Self, formula::ParseError> {
        let ast = formula::parse_formula(source)?;
        Ok(Self {
            source: source.to_string(),
            ast,
            cached: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    Literal(Literal),
    Formula(Formula),
}

impl CellContent {
    pub fn is_formula(&self) -> bool {
        matches!(self, CellContent::Formula(_))
    }

    pub fn as_formula(&self) -> Option<&Formula> {
        match self {
            CellContent::Formula(f) => Some(f),
            CellContent::Literal(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Worksheet {
    name: String,
    /// Keyed by (row, col) so iteration is row-major.
    cells: BTreeMap<(u32, u32), CellContent>,
}

impl Worksheet {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cell(&self, col: u32, row: u32) -> Option<&CellContent> {
        self.cells.get(&(row, col))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cells in row-major order as `(col, row, content)`.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, &CellContent)> {
        self.cells.iter().map(|(&(row, col), c)| (col, row, c))
    }
}

/// An ordered collection of uniquely named worksheets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workbook {
    sheets: Vec<Worksheet>,
}

impl Workbook {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn sheets(&self) -> &[Worksheet] {
        &self.sheets
    }

    pub fn sheet(&self, index: usize) -> Option<&Worksheet> {
        self.sheets.get(index)
    }

    /// Case-insensitive lookup of a worksheet by name.
    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn cell(&self, addr: CellAddress) -> Option<&CellContent> {
        self.sheets.get(addr.sheet)?.cell(addr.col, addr.row)
    }

    /// Every stored cell, ordered by sheet then row then column.
    pub fn cells(&self) -> impl Iterator<Item = (CellAddress, &CellContent)> {
        self.sheets.iter().enumerate().flat_map(|(i, sheet)| {
            sheet
                .cells()
                .map(move |(col, row, c)| (CellAddress::new(i, col, row), c))
        })
    }

    pub fn formulas(&self) -> impl Iterator<Item = (CellAddress, &Formula)> {
        self.cells().filter_map(|(addr, c)| c.as_formula().map(|f| (addr, f)))
    }

    /// Number of cells holding a literal or a formula.
    pub fn non_empty_cell_count(&self) -> usize {
        self.sheets.iter().map(Worksheet::len).sum()
    }

    pub fn formula_count(&self) -> usize {
        self.cells().filter(|(_, c)| c.is_formula()).count()
    }

    /// `Sheet1!B2`-style rendering of an address, quoting the sheet name
    /// when it would not lex as a plain identifier.
    pub fn display_address(&self, addr: CellAddress) -> String {
        let sheet = self
            .sheets
            .get(addr.sheet)
            .map(|s| formula::quote_sheet_name(&s.name))
            .unwrap_or_else(|| format!("#{}", addr.sheet));
        format!("{sheet}!{}", formula::a1_name(addr.col, addr.row))
    }
}

/// Incremental constructor for [`Workbook`].
#[derive(Debug, Default)]
pub struct WorkbookBuilder {
    sheets: Vec<Worksheet>,
}

impl WorkbookBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a worksheet and returns its index.
    pub fn add_sheet(&mut self, name: &str) -> Result<usize, ModelError> {
        if name.is_empty() {
            return Err(ModelError::EmptySheetName);
        }
        if self.sheet_index(name).is_some() {
            return Err(ModelError::DuplicateSheet(name.to_string()));
        }
        self.sheets.push(Worksheet {
            name: name.to_string(),
            cells: BTreeMap::new(),
        });
        Ok(self.sheets.len() - 1)
    }

    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.name.eq_ignore_ascii_case(name))
    }

    /// Returns the index of `name`, creating the sheet if needed.
    pub fn sheet_or_insert(&mut self, name: &str) -> Result<usize, ModelError> {
        match self.sheet_index(name) {
            Some(i) => Ok(i),
            None => self.add_sheet(name),
        }
    }

    /// Stores a cell. Empty-string text literals are dropped, since they
    /// count as empty.
    pub fn set_cell(&mut self, addr: CellAddress, content: CellContent) -> Result<(), ModelError> {
        let sheet = self
            .sheets
            .get_mut(addr.sheet)
            .ok_or(ModelError::NoSuchSheet(addr.sheet))?;
        if let CellContent::Literal(Literal {
            value: CellValue::Text(t),
            ..
        }) = &content
        {
            if t.is_empty() {
                return Ok(());
            }
        }
        if let CellContent::Literal(Literal {
            value: CellValue::Number(n),
            ..
        }) = &content
        {
            if !n.is_finite() {
                return Err(ModelError::NonFiniteNumber(formula::a1_name(addr.col, addr.row)));
            }
        }
        if sheet.cells.contains_key(&(addr.row, addr.col)) {
            return Err(ModelError::DuplicateCell(format!(
                "{}!{}",
                sheet.name,
                formula::a1_name(addr.col, addr.row)
            )));
        }
        sheet.cells.insert((addr.row, addr.col), content);
        Ok(())
    }

    /// Convenience for tests and fixtures: parses and stores a formula.
    pub fn set_formula(&mut self, addr: CellAddress, source: &str) -> Result<(), ModelError> {
        let f = Formula::parse(source)?;
        self.set_cell(addr, CellContent::Formula(f))
    }

    pub fn set_literal(&mut self, addr: CellAddress, literal: Literal) -> Result<(), ModelError> {
        self.set_cell(addr, CellContent::Literal(literal))
    }

    pub fn build(self) -> Workbook {
        Workbook { sheets: self.sheets }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> Workbook {
        let mut b = WorkbookBuilder::new();
        let s = b.add_sheet("Sheet1").unwrap();
        for row in 0..5 {
            b.set_literal(CellAddress::new(s, 0, row), Literal::number(row as f64 + 1.0))
                .unwrap();
        }
        b.set_formula(CellAddress::new(s, 1, 0), "=SUM(A1:A5)").unwrap();
        b.set_formula(CellAddress::new(s, 1, 1), "=B1/5").unwrap();
        b.build()
    }

    #[test]
    fn empty_workbook_counts_zero() {
        let wb = Workbook::empty();
        assert_eq!(wb.non_empty_cell_count(), 0);
        assert_eq!(wb.formula_count(), 0);
    }

    #[test]
    fn fixture_f1_counts() {
        let wb = f1();
        assert_eq!(wb.non_empty_cell_count(), 7);
        assert_eq!(wb.formula_count(), 2);
    }

    #[test]
    fn fixture_f2_counts_across_sheets() {
        let mut b = WorkbookBuilder::new();
        let s1 = b.add_sheet("Sheet1").unwrap();
        let s2 = b.add_sheet("Sheet2").unwrap();
        for row in 0..3 {
            b.set_literal(CellAddress::new(s1, 0, row), Literal::number(1.0))
                .unwrap();
        }
        b.set_formula(CellAddress::new(s1, 0, 3), "=SUM(A1:A3)").unwrap();
        b.set_literal(CellAddress::new(s2, 0, 0), Literal::text("x")).unwrap();
        b.set_literal(CellAddress::new(s2, 0, 1), Literal::boolean(true))
            .unwrap();
        let wb = b.build();
        assert_eq!(wb.non_empty_cell_count(), 6);
        assert_eq!(wb.formula_count(), 1);
    }

    #[test]
    fn literal_only_workbook_has_no_formulas() {
        let mut b = WorkbookBuilder::new();
        let s = b.add_sheet("Data").unwrap();
        b.set_literal(CellAddress::new(s, 3, 3), Literal::text(" ")).unwrap();
        let wb = b.build();
        assert_eq!(wb.formula_count(), 0);
        // whitespace-only text is content
        assert_eq!(wb.non_empty_cell_count(), 1);
    }

    #[test]
    fn empty_text_is_not_stored() {
        let mut b = WorkbookBuilder::new();
        let s = b.add_sheet("S").unwrap();
        b.set_literal(CellAddress::new(s, 0, 0), Literal::text("")).unwrap();
        assert_eq!(b.build().non_empty_cell_count(), 0);
    }

    #[test]
    fn sheet_names_unique_case_insensitive() {
        let mut b = WorkbookBuilder::new();
        b.add_sheet("Sheet1").unwrap();
        assert!(matches!(b.add_sheet("SHEET1"), Err(ModelError::DuplicateSheet(_))));
    }

    #[test]
    fn duplicate_cell_rejected() {
        let mut b = WorkbookBuilder::new();
        let s = b.add_sheet("S").unwrap();
        let a = CellAddress::new(s, 0, 0);
        b.set_literal(a, Literal::number(1.0)).unwrap();
        assert!(matches!(
            b.set_literal(a, Literal::number(2.0)),
            Err(ModelError::DuplicateCell(_))
        ));
    }

    #[test]
    fn iteration_is_row_major_and_unique() {
        let wb = f1();
        let addrs: Vec<_> = wb.cells().map(|(a, _)| a).collect();
        let mut sorted = addrs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(addrs, sorted);
        assert_eq!(addrs[0], CellAddress::new(0, 0, 0));
        assert_eq!(addrs[1], CellAddress::new(0, 1, 0));
    }

    #[test]
    fn display_address_quotes_when_needed() {
        let mut b = WorkbookBuilder::new();
        b.add_sheet("My Sheet").unwrap();
        let wb = b.build();
        assert_eq!(wb.display_address(CellAddress::new(0, 27, 9)), "'My Sheet'!AB10");
    }
}
