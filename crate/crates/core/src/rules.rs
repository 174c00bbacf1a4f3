//! The three best-practice checks, violation grouping and per-workbook
//! statistics.
//!
//! Every check is counted per formula cell: a formula holding five
//! offending constants is one violation. Ratios against the formula count
//! are therefore bounded by 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::ConfigError;
use crate::formula::{
    constants_in, max_nesting_depth, normalize_r1c1, operation_count, referenced_cells, serialize, RefTarget,
};
use crate::workbook::{CellAddress, Workbook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleId {
    Constants,
    Complexity,
    ReadingDirection,
}

impl RuleId {
    /// Report order.
    pub const ALL: [RuleId; 3] = [RuleId::Constants, RuleId::Complexity, RuleId::ReadingDirection];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::Constants => "CONSTANTS",
            RuleId::Complexity => "COMPLEXITY",
            RuleId::ReadingDirection => "READING_DIRECTION",
        }
    }

    /// Row label used in tabular reports.
    pub fn title(self) -> &'static str {
        match self {
            RuleId::Constants => "No Constants In Formulae",
            RuleId::Complexity => "Formula Complexity",
            RuleId::ReadingDirection => "Reading direction",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds and switches for the three checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleConfig {
    /// Literal texts that are never reported, e.g. `1`.
    pub constants_ignored_values: BTreeSet<String>,
    /// Functions whose arguments may hold constants, e.g. `INDEX`.
    pub constants_ignored_functions: BTreeSet<String>,
    pub complexity_max_operations: usize,
    pub complexity_max_nesting: usize,
    pub direction_check_right_below: bool,
    pub direction_check_sheet_order: bool,
}

impl RuleConfig {
    /// Every constant is a defect; at most 5 operations, nesting 2.
    pub fn config1() -> Self {
        Self {
            constants_ignored_values: BTreeSet::new(),
            constants_ignored_functions: BTreeSet::new(),
            complexity_max_operations: 5,
            complexity_max_nesting: 2,
            direction_check_right_below: true,
            direction_check_sheet_order: true,
        }
    }

    /// Constant `1` and constants inside `INDEX` are tolerated; at most
    /// 2 operations, nesting 2.
    pub fn config2() -> Self {
        Self {
            constants_ignored_values: BTreeSet::from(["1".to_string()]),
            constants_ignored_functions: BTreeSet::from(["INDEX".to_string()]),
            complexity_max_operations: 2,
            ..Self::config1()
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name.trim().to_ascii_lowercase().as_str() {
            "config1" => Ok(Self::config1()),
            "config2" => Ok(Self::config2()),
            _ => Err(ConfigError::UnknownPreset(name.to_string())),
        }
    }

    /// `config1` / `config2` when the values match a preset, else `custom`.
    pub fn label(&self) -> &'static str {
        if *self == Self::config1() {
            "config1"
        } else if *self == Self::config2() {
            "config2"
        } else {
            "custom"
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.complexity_max_operations < 1 {
            return Err(ConfigError::ThresholdTooSmall("complexity_max_operations"));
        }
        if self.complexity_max_nesting < 1 {
            return Err(ConfigError::ThresholdTooSmall("complexity_max_nesting"));
        }
        Ok(())
    }
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::config1()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationDetail {
    Constants { constants: Vec<String> },
    Complexity { operations: usize, nesting: usize },
    ReadingDirection { references: Vec<String> },
}

/// One formula cell flagged by one rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: RuleId,
    pub location: CellAddress,
    pub detail: ViolationDetail,
}

/// Violations of one rule whose formulas are copies of each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationGroup {
    pub rule: RuleId,
    pub signature: String,
    pub members: Vec<Violation>,
}

pub fn check_constants(wb: &Workbook, config: &RuleConfig) -> Vec<Violation> {
    wb.formulas()
        .filter_map(|(addr, f)| {
            let offending: Vec<String> = constants_in(&f.ast)
                .into_iter()
                .filter(|c| {
                    !config.constants_ignored_values.contains(&c.text)
                        && !c
                            .function
                            .as_ref()
                            .is_some_and(|name| config.constants_ignored_functions.contains(name))
                })
                .map(|c| c.text)
                .collect();
            (!offending.is_empty()).then_some(Violation {
                rule: RuleId::Constants,
                location: addr,
                detail: ViolationDetail::Constants { constants: offending },
            })
        })
        .collect()
}

pub fn check_complexity(wb: &Workbook, config: &RuleConfig) -> Vec<Violation> {
    wb.formulas()
        .filter_map(|(addr, f)| {
            let operations = operation_count(&f.ast);
            let nesting = max_nesting_depth(&f.ast);
            (operations > config.complexity_max_operations || nesting > config.complexity_max_nesting).then_some({
                Violation {
                    rule: RuleId::Complexity,
                    location: addr,
                    detail: ViolationDetail::Complexity { operations, nesting },
                }
            })
        })
        .collect()
}

/// Whether a resolved reference from `origin` breaks the left-and-above
/// convention.
///
/// Same-sheet targets violate when any referenced cell lies in a column to
/// the right or a row below, or is the origin itself. Targets on a later
/// worksheet tab violate; targets on an earlier tab never do.
pub fn breaks_reading_direction(origin: CellAddress, target: &RefTarget, config: &RuleConfig) -> bool {
    let sheet = target.sheet();
    if sheet == origin.sheet {
        if !config.direction_check_right_below {
            return false;
        }
        let far = target.far_corner();
        far.col > origin.col || far.row > origin.row || target.contains(origin)
    } else {
        config.direction_check_sheet_order && sheet > origin.sheet
    }
}

pub fn check_reading_direction(wb: &Workbook, config: &RuleConfig) -> Vec<Violation> {
    wb.formulas()
        .filter_map(|(addr, f)| {
            // formulas naming a missing sheet cannot be placed; skip them
            let refs = referenced_cells(&f.ast, addr, wb).ok()?;
            let offending: Vec<String> = refs
                .iter()
                .filter(|r| breaks_reading_direction(addr, &r.target, config))
                .map(|r| match r.target {
                    RefTarget::Cell(a) => wb.display_address(a),
                    RefTarget::Range { start, end } => format!(
                        "{}:{}",
                        wb.display_address(start),
                        crate::formula::a1_name(end.col, end.row)
                    ),
                })
                .collect();
            (!offending.is_empty()).then_some(Violation {
                rule: RuleId::ReadingDirection,
                location: addr,
                detail: ViolationDetail::ReadingDirection { references: offending },
            })
        })
        .collect()
}

pub fn check(rule: RuleId, wb: &Workbook, config: &RuleConfig) -> Vec<Violation> {
    match rule {
        RuleId::Constants => check_constants(wb, config),
        RuleId::Complexity => check_complexity(wb, config),
        RuleId::ReadingDirection => check_reading_direction(wb, config),
    }
}

/// Signature under which a violation is grouped: the R1C1 form of the
/// formula at its location.
fn signature(v: &Violation, wb: &Workbook) -> String {
    match wb.cell(v.location).and_then(|c| c.as_formula()) {
        Some(f) => normalize_r1c1(&f.ast, v.location),
        None => String::new(),
    }
}

/// Partitions violations by rule and copied-formula signature.
///
/// Groups come out in rule order, then by their first member; members are
/// ordered by sheet, row, column.
pub fn group_violations(violations: &[Violation], wb: &Workbook) -> Vec<ViolationGroup> {
    let mut groups: BTreeMap<(RuleId, String), Vec<Violation>> = BTreeMap::new();
    for v in violations {
        groups.entry((v.rule, signature(v, wb))).or_default().push(v.clone());
    }
    let mut out: Vec<ViolationGroup> = groups
        .into_iter()
        .map(|((rule, signature), mut members)| {
            members.sort_by_key(|m| m.location);
            ViolationGroup {
                rule,
                signature,
                members,
            }
        })
        .collect();
    out.sort_by_key(|g| (g.rule, g.members[0].location));
    out
}

/// Violation count and ratio to the formula count; the ratio is `None`
/// for a workbook without formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleStatistics {
    pub violation_count: usize,
    pub ratio: Option<f64>,
}

impl RuleStatistics {
    pub fn new(violation_count: usize, formula_count: usize) -> Self {
        Self {
            violation_count,
            ratio: (formula_count > 0).then(|| violation_count as f64 / formula_count as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleOutcome {
    pub rule: RuleId,
    pub violations: Vec<Violation>,
    pub groups: Vec<ViolationGroup>,
    pub statistics: RuleStatistics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub non_empty_cells: usize,
    pub formulas: usize,
}

impl Metrics {
    pub fn of(wb: &Workbook) -> Self {
        Self {
            non_empty_cells: wb.non_empty_cell_count(),
            formulas: wb.formula_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InspectionReport {
    pub config: RuleConfig,
    pub metrics: Metrics,
    /// One entry per rule, in [`RuleId::ALL`] order.
    pub rules: Vec<RuleOutcome>,
    /// Canonical formula text per flagged cell, for report rendering.
    pub formula_text: BTreeMap<CellAddress, String>,
    /// Display names for every flagged cell.
    pub cell_names: BTreeMap<CellAddress, String>,
}

impl InspectionReport {
    pub fn outcome(&self, rule: RuleId) -> &RuleOutcome {
        self.rules
            .iter()
            .find(|o| o.rule == rule)
            .expect("every rule is present")
    }

    pub fn statistics(&self, rule: RuleId) -> RuleStatistics {
        self.outcome(rule).statistics
    }
}

pub fn run_inspection(wb: &Workbook, config: &RuleConfig) -> InspectionReport {
    let metrics = Metrics::of(wb);
    let mut formula_text = BTreeMap::new();
    let mut cell_names = BTreeMap::new();
    let rules = RuleId::ALL
        .iter()
        .map(|&rule| {
            let violations = check(rule, wb, config);
            for v in &violations {
                if let Some(f) = wb.cell(v.location).and_then(|c| c.as_formula()) {
                    formula_text.entry(v.location).or_insert_with(|| serialize(&f.ast));
                }
                cell_names
                    .entry(v.location)
                    .or_insert_with(|| wb.display_address(v.location));
            }
            let groups = group_violations(&violations, wb);
            RuleOutcome {
                rule,
                statistics: RuleStatistics::new(violations.len(), metrics.formulas),
                violations,
                groups,
            }
        })
        .collect();
    InspectionReport {
        config: config.clone(),
        metrics,
        rules,
        formula_text,
        cell_names,
    }
}
