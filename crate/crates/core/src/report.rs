//! Report rendering.
//!
//! JSON output follows the schema in `docs/report-schema.md`; every
//! document carries `schema_version` and `kind`. Ratios are raw decimals,
//! undefined ratios are `null`, and not-applicable scenario outcomes are
//! the string `"X"`.
//!
//! Table output mirrors the usual audit-sheet layout: whole percents, `~`
//! for an undefined ratio and `X` for a workbook that could not take the
//! scenarios.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::compare::{ComparisonReport, Delta};
use crate::rules::{InspectionReport, Metrics, RuleConfig, RuleId, ViolationDetail};
use crate::scenario::{ScenarioAggregate, ScenarioResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Json,
    #[default]
    Table,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            other => Err(format!("unknown format `{other}` (expected json or table)")),
        }
    }
}

/// Any report the tool emits.
pub enum Report<'a> {
    Inspection(&'a InspectionReport),
    Metrics(Metrics),
    Scenarios(&'a ScenarioAggregate),
    Comparison(&'a ComparisonReport),
    Corpus(&'a [CorpusColumn]),
}

pub fn write_report(report: &Report<'_>, format: Format) -> String {
    match format {
        Format::Json => {
            let value = match report {
                Report::Inspection(r) => inspection_json(r),
                Report::Metrics(m) => envelope("metrics", [("metrics", to_value(m))]),
                Report::Scenarios(a) => scenarios_json(a),
                Report::Comparison(c) => comparison_json(c),
                Report::Corpus(cols) => corpus_json(cols),
            };
            let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Table => match report {
            Report::Inspection(r) => inspection_table(r),
            Report::Metrics(m) => lines(&metrics_rows(m)),
            Report::Scenarios(a) => scenarios_table(a),
            Report::Comparison(c) => comparison_table(c),
            Report::Corpus(cols) => corpus_table(cols),
        },
    }
}

/// Whole-percent rendering; `~` when undefined.
pub fn percent(ratio: Option<f64>) -> String {
    match ratio {
        Some(r) => format!("{}%", (r * 100.0).round() as i64),
        None => "~".to_string(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn envelope<const N: usize>(kind: &str, fields: [(&str, Value); N]) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    map.insert("kind".into(), kind.into());
    for (k, v) in fields {
        map.insert(k.into(), v);
    }
    Value::Object(map)
}

#[derive(Serialize)]
struct ConfigJson<'a> {
    name: &'static str,
    #[serde(flatten)]
    values: &'a RuleConfig,
}

fn config_json(config: &RuleConfig) -> Value {
    to_value(&ConfigJson {
        name: config.label(),
        values: config,
    })
}

#[derive(Serialize)]
struct ViolationJson<'a> {
    cell: &'a str,
    formula: &'a str,
    detail: &'a ViolationDetail,
}

#[derive(Serialize)]
struct GroupJson<'a> {
    signature: &'a str,
    size: usize,
    members: Vec<&'a str>,
}

#[derive(Serialize)]
struct RuleJson<'a> {
    rule: RuleId,
    violation_count: usize,
    ratio: Option<f64>,
    violations: Vec<ViolationJson<'a>>,
    groups: Vec<GroupJson<'a>>,
}

fn rules_json(r: &InspectionReport) -> Value {
    let name = |a| r.cell_names.get(a).map(String::as_str).unwrap_or("");
    let rules: Vec<RuleJson<'_>> = r
        .rules
        .iter()
        .map(|o| RuleJson {
            rule: o.rule,
            violation_count: o.statistics.violation_count,
            ratio: o.statistics.ratio,
            violations: o
                .violations
                .iter()
                .map(|v| ViolationJson {
                    cell: name(&v.location),
                    formula: r.formula_text.get(&v.location).map(String::as_str).unwrap_or(""),
                    detail: &v.detail,
                })
                .collect(),
            groups: o
                .groups
                .iter()
                .map(|g| GroupJson {
                    signature: &g.signature,
                    size: g.members.len(),
                    members: g.members.iter().map(|m| name(&m.location)).collect(),
                })
                .collect(),
        })
        .collect();
    to_value(&rules)
}

fn inspection_json(r: &InspectionReport) -> Value {
    envelope(
        "inspection",
        [
            ("config", config_json(&r.config)),
            ("metrics", to_value(&r.metrics)),
            ("rules", rules_json(r)),
        ],
    )
}

fn failed_value(a: &ScenarioAggregate) -> Value {
    if a.not_applicable {
        Value::from("X")
    } else {
        Value::from(a.failed_count)
    }
}

fn scenarios_json(a: &ScenarioAggregate) -> Value {
    envelope(
        "scenarios",
        [
            ("failed_in_scenarios", failed_value(a)),
            ("wrong_results", Value::from(a.wrong_results_display())),
            ("not_applicable", Value::from(a.not_applicable)),
            ("scenarios", to_value(&a.results)),
        ],
    )
}

#[derive(Serialize)]
struct RuleDeltaJson {
    rule: RuleId,
    before: usize,
    after: usize,
    relative: Option<f64>,
    ratio_before: Option<f64>,
    ratio_after: Option<f64>,
}

fn ratio(count: usize, formulas: usize) -> Option<f64> {
    (formulas > 0).then(|| count as f64 / formulas as f64)
}

fn comparison_json(c: &ComparisonReport) -> Value {
    let defects: Vec<RuleDeltaJson> = c
        .defects
        .iter()
        .map(|d| RuleDeltaJson {
            rule: d.rule,
            before: d.defects.before,
            after: d.defects.after,
            relative: d.defects.relative,
            ratio_before: ratio(d.defects.before, c.formulas.before),
            ratio_after: ratio(d.defects.after, c.formulas.after),
        })
        .collect();
    envelope(
        "comparison",
        [
            ("config", config_json(&c.config)),
            ("cells", to_value(&c.cells)),
            ("formulas", to_value(&c.formulas)),
            ("defects", to_value(&defects)),
        ],
    )
}

/// One workbook in a corpus run. `outcome` is `Err` with a message when the
/// file could not be loaded.
#[derive(Debug, Clone)]
pub struct CorpusColumn {
    pub name: String,
    pub outcome: Result<CorpusEntry, String>,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub inspection: InspectionReport,
    pub scenarios: Option<ScenarioAggregate>,
    pub baseline: Option<ComparisonReport>,
}

fn corpus_json(cols: &[CorpusColumn]) -> Value {
    let columns: Vec<Value> = cols
        .iter()
        .map(|c| match &c.outcome {
            Ok(e) => {
                let mut map = serde_json::Map::new();
                map.insert("name".into(), c.name.clone().into());
                map.insert("status".into(), "ok".into());
                map.insert("metrics".into(), to_value(&e.inspection.metrics));
                let stats: Vec<Value> = e
                    .inspection
                    .rules
                    .iter()
                    .map(|o| {
                        serde_json::json!({
                            "rule": o.rule,
                            "violation_count": o.statistics.violation_count,
                            "ratio": o.statistics.ratio,
                            "groups": o.groups.len(),
                        })
                    })
                    .collect();
                map.insert("rules".into(), Value::Array(stats));
                if let Some(a) = &e.scenarios {
                    map.insert("failed_in_scenarios".into(), failed_value(a));
                    map.insert("wrong_results".into(), a.wrong_results_display().into());
                }
                if let Some(b) = &e.baseline {
                    map.insert("baseline".into(), comparison_json(b));
                }
                Value::Object(map)
            }
            Err(msg) => serde_json::json!({ "name": c.name, "status": "X", "error": msg }),
        })
        .collect();
    let config = cols
        .iter()
        .find_map(|c| c.outcome.as_ref().ok())
        .map(|e| config_json(&e.inspection.config))
        .unwrap_or(Value::Null);
    envelope("corpus", [("config", config), ("columns", Value::Array(columns))])
}

type Rows = Vec<(String, String)>;

fn lines(rows: &Rows) -> String {
    let mut out = String::new();
    for (label, value) in rows {
        if value.is_empty() {
            let _ = writeln!(out, "{label}");
        } else {
            let _ = writeln!(out, "{label}: {value}");
        }
    }
    out
}

fn metrics_rows(m: &Metrics) -> Rows {
    vec![
        ("# of cells".into(), m.non_empty_cells.to_string()),
        ("# of formulae".into(), m.formulas.to_string()),
    ]
}

/// Audit-sheet row order: complexity, constants, reading direction.
const TABLE_RULES: [RuleId; 3] = [RuleId::Complexity, RuleId::Constants, RuleId::ReadingDirection];

const RELATIVE_TO_FORMULAE: &str = ".. relative to # of formulae";

fn inspection_table(r: &InspectionReport) -> String {
    let mut rows = metrics_rows(&r.metrics);
    rows.push(("Configuration".into(), r.config.label().into()));
    for rule in TABLE_RULES {
        let s = r.statistics(rule);
        rows.push((rule.title().into(), s.violation_count.to_string()));
        rows.push((RELATIVE_TO_FORMULAE.into(), percent(s.ratio)));
    }
    let mut out = lines(&rows);
    let groups: Vec<_> = r.rules.iter().flat_map(|o| &o.groups).collect();
    if !groups.is_empty() {
        out.push_str("\nViolation groups\n");
        for g in groups {
            let first = &g.members[0].location;
            let last = &g.members[g.members.len() - 1].location;
            let name = |a| r.cell_names.get(a).cloned().unwrap_or_default();
            let span = if first == last {
                name(first)
            } else {
                format!("{} .. {}", name(first), name(last))
            };
            let formula = r.formula_text.get(first).map(String::as_str).unwrap_or("");
            let _ = writeln!(
                out,
                "  {:<17} {:>4}  {span}  {formula}",
                g.rule.as_str(),
                g.members.len()
            );
        }
    }
    out
}

fn scenario_lines(out: &mut String, r: &ScenarioResult) {
    use crate::scenario::ScenarioStatus;
    let status = match &r.status {
        ScenarioStatus::Passed => "passed".to_string(),
        ScenarioStatus::Failed { wrong_results } => format!("failed ({wrong_results} wrong)"),
        ScenarioStatus::NotApplicable { missing_inputs } => {
            format!("X (missing input {})", missing_inputs.join(", "))
        }
    };
    let _ = writeln!(out, "scenario {}: {status}", r.name);
    for rec in r.records.iter().filter(|rec| !rec.within_tolerance) {
        let actual = match (&rec.actual, &rec.error) {
            (_, Some(err)) => err.clone(),
            (Some(v), None) => v.to_string(),
            (None, None) => String::new(),
        };
        let label = if rec.label.is_empty() {
            String::new()
        } else {
            format!(" ({})", rec.label)
        };
        let _ = writeln!(
            out,
            "  {}{label}: expected {} +/- {}, got {actual}",
            rec.cell, rec.expected, rec.tolerance
        );
    }
}

fn scenarios_table(a: &ScenarioAggregate) -> String {
    let mut out = lines(&vec![
        ("failed in # of scenarios".into(), a.failed_display()),
        ("# of wrong results / scenario".into(), a.wrong_results_display()),
    ]);
    out.push('\n');
    for r in &a.results {
        scenario_lines(&mut out, r);
    }
    out
}

fn delta_row(label: &str, d: &Delta) -> (String, String) {
    (label.into(), format!("{} -> {}", d.before, d.after))
}

fn comparison_rows(c: &ComparisonReport) -> Vec<(String, String)> {
    let mut rows = vec![
        ("Configuration".into(), c.config.label().to_string()),
        delta_row("# of cells", &c.cells),
        ("relative cell increase".into(), percent(c.cells.relative)),
        delta_row("# of formulae", &c.formulas),
        ("relative formulae increase".into(), percent(c.formulas.relative)),
    ];
    for rule in TABLE_RULES {
        let d = c.defects(rule);
        rows.push(delta_row(rule.title(), &d));
        rows.push((
            RELATIVE_TO_FORMULAE.into(),
            format!(
                "{} -> {}",
                percent(ratio(d.before, c.formulas.before)),
                percent(ratio(d.after, c.formulas.after))
            ),
        ));
        rows.push(("relative defect increase".into(), percent(d.relative)));
    }
    rows
}

fn comparison_table(c: &ComparisonReport) -> String {
    lines(&comparison_rows(c))
}

fn corpus_table(cols: &[CorpusColumn]) -> String {
    let entries: Vec<Option<&CorpusEntry>> = cols.iter().map(|c| c.outcome.as_ref().ok()).collect();
    let any = |f: fn(&CorpusEntry) -> bool| entries.iter().flatten().any(|e| f(e));
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut row = |label: &str, f: &dyn Fn(&CorpusEntry) -> String| {
        let cells = entries
            .iter()
            .map(|e| e.map(f).unwrap_or_else(|| "X".to_string()))
            .collect();
        rows.push((label.to_string(), cells));
    };

    row("# of cells", &|e| e.inspection.metrics.non_empty_cells.to_string());
    if any(|e| e.baseline.is_some()) {
        row("relative cell increase", &|e| {
            e.baseline
                .as_ref()
                .map(|b| percent(b.cells.relative))
                .unwrap_or_default()
        });
    }
    row("# of formulae", &|e| e.inspection.metrics.formulas.to_string());
    if any(|e| e.baseline.is_some()) {
        row("relative formulae increase", &|e| {
            e.baseline
                .as_ref()
                .map(|b| percent(b.formulas.relative))
                .unwrap_or_default()
        });
    }
    if any(|e| e.scenarios.is_some()) {
        row("Failed in # of scenarios", &|e| {
            e.scenarios
                .as_ref()
                .map(ScenarioAggregate::failed_display)
                .unwrap_or_default()
        });
        row("# of wrong results / scenario", &|e| {
            e.scenarios
                .as_ref()
                .map(ScenarioAggregate::wrong_results_display)
                .unwrap_or_default()
        });
    }
    let label = entries
        .iter()
        .flatten()
        .next()
        .map(|e| e.inspection.config.label())
        .unwrap_or("config1");
    rows.push((format!("Configuration: {label}"), vec![String::new(); cols.len()]));
    for rule in TABLE_RULES {
        let mut row = |l: &str, f: &dyn Fn(&CorpusEntry) -> String| {
            let cells = entries
                .iter()
                .map(|e| e.map(f).unwrap_or_else(|| "X".to_string()))
                .collect();
            rows.push((l.to_string(), cells));
        };
        row(rule.title(), &move |e| {
            e.inspection.statistics(rule).violation_count.to_string()
        });
        row(RELATIVE_TO_FORMULAE, &move |e| {
            percent(e.inspection.statistics(rule).ratio)
        });
        if entries.iter().flatten().any(|e| e.baseline.is_some()) {
            row("relative defect increase", &move |e| {
                e.baseline
                    .as_ref()
                    .map(|b| percent(b.defects(rule).relative))
                    .unwrap_or_default()
            });
        }
    }

    let header: Vec<String> = cols.iter().map(|c| c.name.clone()).collect();
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols.len())
        .map(|i| {
            rows.iter()
                .map(|(_, cells)| cells[i].len())
                .chain(std::iter::once(header[i].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut emit = |label: &str, cells: &[String]| {
        let mut line = format!("{label:<label_width$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(line, "  {cell:>w$}");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    emit("", &header);
    for (label, cells) in &rows {
        emit(label, cells);
    }
    out
}
