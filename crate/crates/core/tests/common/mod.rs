//! Generators shared by the integration and acceptance suites.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRng, TestRunner};

use sheetlint_core::formula::{BinaryOp, CellRef, Expr, RangeRef, UnaryOp};
use sheetlint_core::{CellAddress, Workbook, WorkbookBuilder};

pub const FUNCTIONS: &[&str] = &["SUM", "ROUND", "IF", "INDEX", "MAX", "AVERAGE", "NOW"];
pub const SHEETS: &[&str] = &["Sheet1", "Data", "My Sheet", "O'Brien"];

pub fn number_text() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..200).prop_map(|n| n.to_string()),
        (0u32..100, 1u32..100).prop_map(|(a, b)| format!("{a}.{b}")),
        Just("1".to_string()),
        Just("0.3".to_string()),
    ]
}

pub fn cell_ref(max_col: u32, max_row: u32) -> impl Strategy<Value = CellRef> {
    (
        0..=max_col,
        0..=max_row,
        any::<bool>(),
        any::<bool>(),
        proptest::option::weighted(0.2, proptest::sample::select(SHEETS)),
    )
        .prop_map(|(col, row, ca, ra, sheet)| CellRef {
            sheet: sheet.map(str::to_string),
            col,
            row,
            col_absolute: ca,
            row_absolute: ra,
        })
}

fn range_ref() -> impl Strategy<Value = RangeRef> {
    (cell_ref(40, 60), 0u32..5, 0u32..8, any::<bool>(), any::<bool>()).prop_map(|(start, w, h, ca, ra)| {
        let end = CellRef {
            sheet: start.sheet.clone(),
            col: start.col + w,
            row: start.row + h,
            col_absolute: ca,
            row_absolute: ra,
        };
        RangeRef { start, end }
    })
}

pub fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        4 => number_text().prop_map(|t| Expr::number(&t)),
        1 => "[a-z \"]{0,6}".prop_map(Expr::Text),
        1 => any::<bool>().prop_map(Expr::Boolean),
        4 => cell_ref(40, 60).prop_map(Expr::Cell),
        2 => range_ref().prop_map(Expr::Range),
    ]
}

/// Random formula trees of at most `depth` levels of non-leaf nodes.
pub fn expr(depth: u32) -> impl Strategy<Value = Expr> {
    expr_sized(depth, 64)
}

/// Like [`expr`] with a larger node budget, so deep trees are common.
pub fn expr_sized(depth: u32, size: u32) -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(depth, size, 2, |inner| {
        prop_oneof![
            4 => (proptest::sample::select(&BinaryOp::ALL[..]), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            2 => (
                proptest::sample::select(&[UnaryOp::Neg, UnaryOp::Plus, UnaryOp::Percent][..]),
                inner.clone()
            )
                .prop_map(|(op, e)| Expr::unary(op, e)),
            2 => (proptest::sample::select(FUNCTIONS), proptest::collection::vec(inner.clone(), 0..4))
                .prop_map(|(name, args)| Expr::call(name, args)),
            1 => inner.prop_map(|e| Expr::Paren(Box::new(e))),
        ]
    })
}

/// Depth of the tree counting every node, leaves included.
pub fn tree_height(e: &Expr) -> usize {
    1 + e.children().into_iter().map(tree_height).max().unwrap_or(0)
}

/// Deterministic sampler for the acceptance harness.
pub struct Sampler {
    runner: TestRunner,
}

impl Sampler {
    pub fn new(seed: u8) -> Self {
        let rng = TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &[seed; 32]);
        Self {
            runner: TestRunner::new_with_rng(Config::default(), rng),
        }
    }

    pub fn sample<S: Strategy>(&mut self, s: &S) -> S::Value {
        s.new_tree(&mut self.runner)
            .expect("strategy produces a value")
            .current()
    }
}

/// Random single-sheet workbook contents: a few literal inputs in column A and
/// formulas below and to the right.
pub fn workbook_cells() -> impl Strategy<Value = Vec<(u32, u32, Expr)>> {
    proptest::collection::vec((1u32..8, 0u32..12, expr(4)), 1..12)
}

pub fn build_workbook(formulas: &[(u32, u32, Expr)]) -> Workbook {
    let mut b = WorkbookBuilder::new();
    for s in SHEETS {
        b.add_sheet(s).unwrap();
    }
    for row in 0..12 {
        b.set_literal(
            CellAddress::new(0, 0, row),
            sheetlint_core::Literal::number(f64::from(row) + 1.0),
        )
        .unwrap();
    }
    let mut seen = std::collections::BTreeSet::new();
    for (col, row, e) in formulas {
        if seen.insert((*col, *row)) {
            let source = sheetlint_core::formula::serialize(e);
            b.set_formula(CellAddress::new(0, *col, *row), &source).unwrap();
        }
    }
    b.build()
}

/// Single sheet workbook from `(A1 address, content)` pairs; contents
/// starting with `=` are formulas, anything else a number or text.
pub fn sheet(cells: &[(&str, &str)]) -> Workbook {
    let mut text = String::from("sheet Sheet1\n");
    for (addr, content) in cells {
        text.push_str(&format!("Sheet1!{addr}={content}\n"));
    }
    sheetlint_core::io::parse_fixture(&text).unwrap()
}

/// Minimal XLSX package: workbook part, relationships, optional shared
/// strings and one worksheet per `(name, sheetData body)`.
pub fn xlsx_package(sheets: &[(&str, &str)], shared: Option<&str>) -> Vec<u8> {
    use std::io::Write;
    let mut buf = Vec::new();
    let mut zip = zip::ZipWriter::new(std::io::Cursor::new(&mut buf));
    let opts = zip::write::SimpleFileOptions::default();
    let mut wb = String::from(
        r#"<?xml version="1.0" encoding="UTF-8"?><workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships"><sheets>"#,
    );
    let mut rels = String::from(
        r#"<?xml version="1.0" encoding="UTF-8"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">"#,
    );
    for (i, (name, _)) in sheets.iter().enumerate() {
        let n = i + 1;
        wb.push_str(&format!(r#"<sheet name="{name}" sheetId="{n}" r:id="rId{n}"/>"#));
        rels.push_str(&format!(
            r#"<Relationship Id="rId{n}" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet{n}.xml"/>"#
        ));
    }
    wb.push_str("</sheets></workbook>");
    rels.push_str("</Relationships>");
    zip.start_file("xl/workbook.xml", opts).unwrap();
    zip.write_all(wb.as_bytes()).unwrap();
    zip.start_file("xl/_rels/workbook.xml.rels", opts).unwrap();
    zip.write_all(rels.as_bytes()).unwrap();
    if let Some(sst) = shared {
        zip.start_file("xl/sharedStrings.xml", opts).unwrap();
        zip.write_all(sst.as_bytes()).unwrap();
    }
    for (i, (_, data)) in sheets.iter().enumerate() {
        zip.start_file(format!("xl/worksheets/sheet{}.xml", i + 1), opts)
            .unwrap();
        let xml = format!(
            r#"<?xml version="1.0" encoding="UTF-8"?><worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData>{data}</sheetData></worksheet>"#
        );
        zip.write_all(xml.as_bytes()).unwrap();
    }
    zip.finish().unwrap();
    buf
}
