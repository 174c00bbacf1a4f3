//! File formats: workbook loaders, rule configuration and scenario files.

mod config;
mod fixture;
mod scenario_file;
mod xlsx;

use std::path::Path;

pub use config::{load_config, parse_config, write_config};
pub use fixture::{load_fixture, parse_fixture, write_fixture};
pub use scenario_file::{load_scenarios, parse_locator, parse_scenarios};
pub use xlsx::{load_xlsx, read_xlsx_bytes, XlsxLoad};

use crate::error::LoadError;
use crate::workbook::Workbook;

/// File extension of the text fixture format.
pub const FIXTURE_EXTENSION: &str = "fixture";

pub fn is_xlsx(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("xlsx"))
}

/// Loads `.xlsx` files as spreadsheet packages and anything else as a
/// fixture.
pub fn load_workbook(path: impl AsRef<Path>) -> Result<XlsxLoad, LoadError> {
    let path = path.as_ref();
    if is_xlsx(path) {
        load_xlsx(path)
    } else {
        Ok(XlsxLoad {
            workbook: load_fixture(path)?,
            warnings: Vec::new(),
        })
    }
}

/// Workbooks in a directory that [`load_workbook`] understands, sorted by
/// file name.
pub fn workbook_files(dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>, LoadError> {
    let dir = dir.as_ref();
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| LoadError::io(dir, e))?
        .filter_map(Result::ok)
        .map(|entry| entry.path())
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("xlsx") || e == FIXTURE_EXTENSION)
        })
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Convenience for callers that only want the workbook.
pub fn load(path: impl AsRef<Path>) -> Result<Workbook, LoadError> {
    let loaded = load_workbook(path)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    Ok(loaded.workbook)
}
