//! Scenario-based correctness testing and data-entry error counting.
//!
//! A scenario binds input cells to values and lists the output cells with
//! the results they should produce. A workbook that lacks one of the input
//! cells cannot take the scenario at all and is marked not applicable
//! (rendered `X`).

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::eval::{EvalError, Evaluator, Overrides};
use crate::formula::{a1_name, quote_sheet_name};
use crate::workbook::{CellAddress, CellContent, CellValue, Workbook};

/// Grades are required to be accurate to one decimal place, so a correct
/// value lies within half a unit of that place.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

/// A cell named in a scenario file. Without a sheet it refers to the first
/// worksheet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellLocator {
    pub sheet: Option<String>,
    pub col: u32,
    pub row: u32,
}

impl CellLocator {
    pub fn new(sheet: Option<&str>, col: u32, row: u32) -> Self {
        Self {
            sheet: sheet.map(str::to_string),
            col,
            row,
        }
    }

    pub fn resolve(&self, wb: &Workbook) -> Option<CellAddress> {
        let sheet = match &self.sheet {
            Some(name) => wb.sheet_index(name)?,
            None if wb.sheets().is_empty() => return None,
            None => 0,
        };
        Some(CellAddress::new(sheet, self.col, self.row))
    }
}

impl fmt::Display for CellLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.sheet {
            write!(f, "{}!", quote_sheet_name(s))?;
        }
        f.write_str(&a1_name(self.col, self.row))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub cell: CellLocator,
    pub expected: f64,
    pub tolerance: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario `{scenario}`: tolerance for {cell} must be positive")]
    Tolerance { scenario: String, cell: String },
    #[error("scenario `{scenario}`: {cell} is expected twice")]
    DuplicateExpectation { scenario: String, cell: String },
    #[error("scenario `{scenario}`: {cell} is bound twice")]
    DuplicateInput { scenario: String, cell: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestScenario {
    name: String,
    inputs: Vec<(CellLocator, CellValue)>,
    expectations: Vec<Expectation>,
}

impl TestScenario {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<(CellLocator, CellValue)>,
        expectations: Vec<Expectation>,
    ) -> Result<Self, ScenarioError> {
        let name = name.into();
        for (i, e) in expectations.iter().enumerate() {
            if e.tolerance.is_nan() || e.tolerance <= 0.0 {
                return Err(ScenarioError::Tolerance {
                    scenario: name,
                    cell: e.cell.to_string(),
                });
            }
            if expectations[..i].iter().any(|o| o.cell == e.cell) {
                return Err(ScenarioError::DuplicateExpectation {
                    scenario: name,
                    cell: e.cell.to_string(),
                });
            }
        }
        for (i, (cell, _)) in inputs.iter().enumerate() {
            if inputs[..i].iter().any(|(o, _)| o == cell) {
                return Err(ScenarioError::DuplicateInput {
                    scenario: name,
                    cell: cell.to_string(),
                });
            }
        }
        Ok(Self {
            name,
            inputs,
            expectations,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[(CellLocator, CellValue)] {
        &self.inputs
    }

    pub fn expectations(&self) -> &[Expectation] {
        &self.expectations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationRecord {
    pub cell: String,
    pub label: String,
    pub expected: f64,
    pub tolerance: f64,
    pub actual: Option<CellValue>,
    pub error: Option<String>,
    pub delta: Option<f64>,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScenarioStatus {
    Passed,
    Failed { wrong_results: usize },
    NotApplicable { missing_inputs: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub name: String,
    #[serde(flatten)]
    pub status: ScenarioStatus,
    pub records: Vec<ExpectationRecord>,
}

impl ScenarioResult {
    /// Wrong results, or `None` when not applicable.
    pub fn wrong_results(&self) -> Option<usize> {
        match self.status {
            ScenarioStatus::Passed => Some(0),
            ScenarioStatus::Failed { wrong_results } => Some(wrong_results),
            ScenarioStatus::NotApplicable { .. } => None,
        }
    }
}

pub fn run_scenario(wb: &Workbook, scenario: &TestScenario) -> ScenarioResult {
    let mut overrides = Overrides::new();
    let mut missing = Vec::new();
    for (cell, value) in &scenario.inputs {
        match cell.resolve(wb).filter(|a| wb.cell(*a).is_some()) {
            Some(addr) => {
                overrides.insert(addr, value.clone());
            }
            None => missing.push(cell.to_string()),
        }
    }
    if !missing.is_empty() {
        return ScenarioResult {
            name: scenario.name.clone(),
            status: ScenarioStatus::NotApplicable {
                missing_inputs: missing,
            },
            records: Vec::new(),
        };
    }

    let mut ev = Evaluator::new(wb, &overrides);
    let records: Vec<ExpectationRecord> = scenario
        .expectations
        .iter()
        .map(|e| {
            let computed = match e.cell.resolve(wb) {
                Some(addr) => ev.evaluate(addr),
                None => Err(EvalError::UnknownSheet(e.cell.sheet.clone().unwrap_or_default())),
            };
            let (actual, error) = match computed {
                Ok(v) => (Some(v), None),
                Err(err) => (None, Some(err.to_string())),
            };
            let delta = actual
                .as_ref()
                .and_then(CellValue::as_number)
                .map(|n| (n - e.expected).abs());
            ExpectationRecord {
                cell: e.cell.to_string(),
                label: e.label.clone(),
                expected: e.expected,
                tolerance: e.tolerance,
                within_tolerance: delta.is_some_and(|d| d <= e.tolerance),
                actual,
                error,
                delta,
            }
        })
        .collect();
    let wrong = records.iter().filter(|r| !r.within_tolerance).count();
    ScenarioResult {
        name: scenario.name.clone(),
        status: if wrong == 0 {
            ScenarioStatus::Passed
        } else {
            ScenarioStatus::Failed { wrong_results: wrong }
        },
        records,
    }
}

/// Outcome of a scenario suite on one workbook.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioAggregate {
    pub results: Vec<ScenarioResult>,
    pub failed_count: usize,
    /// Set when any scenario was not applicable; the workbook is then
    /// excluded from pass/fail counting.
    pub not_applicable: bool,
}

impl ScenarioAggregate {
    /// `"X"` for inapplicable workbooks, else the failed-scenario count.
    pub fn failed_display(&self) -> String {
        if self.not_applicable {
            "X".to_string()
        } else {
            self.failed_count.to_string()
        }
    }

    /// Wrong results per scenario joined by commas, e.g. `0,5,1`, or one
    /// `X` per scenario for inapplicable workbooks.
    pub fn wrong_results_display(&self) -> String {
        self.results
            .iter()
            .map(|r| match (self.not_applicable, r.wrong_results()) {
                (false, Some(n)) => n.to_string(),
                _ => "X".to_string(),
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn all_passed(&self) -> bool {
        !self.not_applicable && self.failed_count == 0
    }
}

pub fn run_all(wb: &Workbook, scenarios: &[TestScenario]) -> ScenarioAggregate {
    let results: Vec<ScenarioResult> = scenarios.iter().map(|s| run_scenario(wb, s)).collect();
    let not_applicable = results
        .iter()
        .any(|r| matches!(r.status, ScenarioStatus::NotApplicable { .. }));
    let failed_count = if not_applicable {
        0
    } else {
        results
            .iter()
            .filter(|r| matches!(r.status, ScenarioStatus::Failed { .. }))
            .count()
    };
    ScenarioAggregate {
        results,
        failed_count,
        not_applicable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DataErrorReport {
    pub checked_cell_count: usize,
    pub mismatch_count: usize,
}

impl DataErrorReport {
    pub fn cell_error_rate(&self) -> f64 {
        if self.checked_cell_count == 0 {
            0.0
        } else {
            self.mismatch_count as f64 / self.checked_cell_count as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("reference data must name at least one cell")]
pub struct EmptyReference;

/// Compares manually entered literal cells against reference values.
/// Missing cells and formula cells count as mismatches; numbers compare
/// exactly.
pub fn count_data_errors(
    wb: &Workbook,
    reference: &BTreeMap<CellAddress, CellValue>,
) -> Result<DataErrorReport, EmptyReference> {
    if reference.is_empty() {
        return Err(EmptyReference);
    }
    let mismatch_count = reference
        .iter()
        .filter(|(addr, expected)| match wb.cell(**addr) {
            Some(CellContent::Literal(l)) => l.value != **expected,
            _ => true,
        })
        .count();
    Ok(DataErrorReport {
        checked_cell_count: reference.len(),
        mismatch_count,
    })
}
