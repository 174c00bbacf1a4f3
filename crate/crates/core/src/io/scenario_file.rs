//! Scenario files.
//!
//! ```text
//! scenario weights as printed
//! input Weights!B2 = 2
//! input Weights!B3 = 3
//! expect Summary!C10 = 2.8 tol 0.05 label car 1 personal grade
//! ```
//!
//! Cells without a sheet qualifier refer to the first worksheet. `tol`
//! defaults to 0.05.

use std::path::Path;

use crate::error::LoadError;
use crate::formula::{parse_formula, Expr};
use crate::scenario::{CellLocator, Expectation, TestScenario, DEFAULT_TOLERANCE};
use crate::workbook::CellValue;

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<TestScenario>, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::io(path, e))?;
    parse_scenarios(&text)
}

struct Pending {
    line: usize,
    name: String,
    inputs: Vec<(CellLocator, CellValue)>,
    expectations: Vec<Expectation>,
}

impl Pending {
    fn finish(self) -> Result<TestScenario, LoadError> {
        if self.expectations.is_empty() {
            return Err(LoadError::line(
                self.line,
                format!("scenario `{}` has no expect lines", self.name),
            ));
        }
        TestScenario::new(self.name, self.inputs, self.expectations)
            .map_err(|e| LoadError::line(self.line, e.to_string()))
    }
}

pub fn parse_scenarios(text: &str) -> Result<Vec<TestScenario>, LoadError> {
    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "scenario" => {
                if rest.is_empty() {
                    return Err(LoadError::line(line_no, "scenario needs a name"));
                }
                if let Some(done) = current.take() {
                    out.push(done.finish()?);
                }
                current = Some(Pending {
                    line: line_no,
                    name: rest.to_string(),
                    inputs: Vec::new(),
                    expectations: Vec::new(),
                });
            }
            "input" | "expect" => {
                let pending = current
                    .as_mut()
                    .ok_or_else(|| LoadError::line(line_no, format!("`{keyword}` before any `scenario` line")))?;
                let (cell, value) = rest
                    .split_once('=')
                    .ok_or_else(|| LoadError::line(line_no, "expected `<cell> = <number>`"))?;
                let cell = parse_locator(cell.trim())
                    .ok_or_else(|| LoadError::line(line_no, format!("invalid cell `{}`", cell.trim())))?;
                if keyword == "input" {
                    let n =
                        number(value.trim()).ok_or_else(|| LoadError::line(line_no, "input value must be a number"))?;
                    pending.inputs.push((cell, CellValue::Number(n)));
                } else {
                    pending.expectations.push(parse_expectation(cell, value, line_no)?);
                }
            }
            other => return Err(LoadError::line(line_no, format!("unknown keyword `{other}`"))),
        }
    }
    if let Some(done) = current {
        out.push(done.finish()?);
    }
    Ok(out)
}

fn parse_expectation(cell: CellLocator, text: &str, line_no: usize) -> Result<Expectation, LoadError> {
    let mut tokens = text.split_whitespace();
    let expected = tokens
        .next()
        .and_then(number)
        .ok_or_else(|| LoadError::line(line_no, "expected value must be a number"))?;
    let mut tolerance = DEFAULT_TOLERANCE;
    let mut label = String::new();
    while let Some(tok) = tokens.next() {
        match tok {
            "tol" => {
                tolerance = tokens
                    .next()
                    .and_then(number)
                    .ok_or_else(|| LoadError::line(line_no, "`tol` needs a number"))?;
            }
            "label" => {
                label = tokens.by_ref().collect::<Vec<_>>().join(" ");
            }
            other => return Err(LoadError::line(line_no, format!("unexpected `{other}`"))),
        }
    }
    Ok(Expectation {
        cell,
        expected,
        tolerance,
        label,
    })
}

fn number(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|n| n.is_finite())
}

/// `B7`, `Sheet1!B7` or `'My Sheet'!$B$7`.
pub fn parse_locator(text: &str) -> Option<CellLocator> {
    match parse_formula(&format!("={text}")).ok()? {
        Expr::Cell(r) => Some(CellLocator {
            sheet: r.sheet,
            col: r.col,
            row: r.row,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# phase 2
scenario base
input Weights!B2 = 2
input B3 = 3
expect Summary!C10 = 2.8 tol 0.1 label car 1 personal grade
expect 'My Sheet'!D1 = -1.5

scenario second
expect A1 = 0
";

    #[test]
    fn parses_sections() {
        let s = parse_scenarios(SAMPLE).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].name(), "base");
        assert_eq!(s[0].inputs().len(), 2);
        assert_eq!(s[0].inputs()[0].0, CellLocator::new(Some("Weights"), 1, 1));
        assert_eq!(s[0].inputs()[1].0, CellLocator::new(None, 1, 2));
        let e = &s[0].expectations()[0];
        assert_eq!((e.expected, e.tolerance), (2.8, 0.1));
        assert_eq!(e.label, "car 1 personal grade");
        assert_eq!(s[0].expectations()[1].tolerance, DEFAULT_TOLERANCE);
        assert_eq!(s[0].expectations()[1].cell.sheet.as_deref(), Some("My Sheet"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("input A1 = 1", 1),
            ("scenario a\nexpect A1 = x", 2),
            ("scenario a\nexpect A1:B2 = 1", 2),
            ("scenario a\nexpect A1 = 1 tol", 2),
            ("scenario a\nfoo A1 = 1", 2),
            ("scenario a\ninput A1 = 1\n", 1),
            ("scenario a\nexpect A1 = 1 tol 0", 1),
        ] {
            match parse_scenarios(text) {
                Err(LoadError::Line { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
