//! Before/after comparison of two versions of a workbook.

use serde::Serialize;

use crate::rules::{run_inspection, RuleConfig, RuleId};
use crate::workbook::Workbook;

/// A metric measured on both versions. `relative` is
/// `(after - before) / before`, undefined for a zero baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delta {
    pub before: usize,
    pub after: usize,
    pub relative: Option<f64>,
}

impl Delta {
    pub fn new(before: usize, after: usize) -> Self {
        Self {
            before,
            after,
            relative: (before > 0).then(|| (after as f64 - before as f64) / before as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleDelta {
    pub rule: RuleId,
    #[serde(flatten)]
    pub defects: Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub config: RuleConfig,
    pub cells: Delta,
    pub formulas: Delta,
    /// In [`RuleId::ALL`] order.
    pub defects: Vec<RuleDelta>,
}

impl ComparisonReport {
    pub fn defects(&self, rule: RuleId) -> Delta {
        self.defects
            .iter()
            .find(|d| d.rule == rule)
            .map(|d| d.defects)
            .expect("every rule is present")
    }
}

pub fn compare_workbooks(before: &Workbook, after: &Workbook, config: &RuleConfig) -> ComparisonReport {
    let b = run_inspection(before, config);
    let a = run_inspection(after, config);
    ComparisonReport {
        config: config.clone(),
        cells: Delta::new(b.metrics.non_empty_cells, a.metrics.non_empty_cells),
        formulas: Delta::new(b.metrics.formulas, a.metrics.formulas),
        defects: RuleId::ALL
            .iter()
            .map(|&rule| RuleDelta {
                rule,
                defects: Delta::new(b.statistics(rule).violation_count, a.statistics(rule).violation_count),
            })
            .collect(),
    }
}
