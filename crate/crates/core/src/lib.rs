//! Static inspection of spreadsheets against configurable best-practice
//! rules, plus scenario-based correctness testing and version comparison.
//!
//! The pipeline is: load a [`Workbook`] (XLSX or the text fixture format),
//! run [`rules::run_inspection`] with a [`RuleConfig`], and render the
//! result with [`report`].

pub mod compare;
pub mod error;
pub mod eval;
pub mod formula;
pub mod io;
pub mod report;
pub mod rules;
pub mod scenario;
pub mod workbook;

pub use error::{ConfigError, LoadError, ModelError};
pub use rules::{InspectionReport, RuleConfig, RuleId, Violation, ViolationGroup};
pub use workbook::{CellAddress, CellContent, CellValue, Formula, Literal, Workbook, WorkbookBuilder};
