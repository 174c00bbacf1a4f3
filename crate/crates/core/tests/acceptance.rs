//! Acceptance suite. Runs every criterion, prints one `PASS`/`FAIL` line
//! each, and exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::process::ExitCode;

use common::{build_workbook, expr_sized, sheet, tree_height, workbook_cells, Sampler};
use sheetlint_core::compare::compare_workbooks;
use sheetlint_core::eval::{evaluate_cell, Overrides};
use sheetlint_core::formula::{
    max_nesting_depth, normalize_r1c1, operation_count, parse_formula, referenced_cells, serialize, Expr,
};
use sheetlint_core::io::{parse_fixture, parse_scenarios, read_xlsx_bytes, write_fixture};
use sheetlint_core::report::{percent, write_report, Format, Report};
use sheetlint_core::rules::{breaks_reading_direction, check, group_violations, run_inspection};
use sheetlint_core::scenario::{count_data_errors, run_all};
use sheetlint_core::{CellAddress, CellValue, RuleConfig, RuleId, Violation, Workbook};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn parser_round_trip() -> Outcome {
    let corpus = include_str!("data/formulas.txt");
    let mut checked = 0;
    let mut failures = Vec::new();
    for line in corpus.lines().filter(|l| l.starts_with('=')) {
        checked += 1;
        let outcome = parse_formula(line).map_err(|e| e.to_string()).and_then(|ast| {
            let text = serialize(&ast);
            let again = parse_formula(&text).map_err(|e| format!("{text}: {e}"))?;
            if again == ast {
                Ok(())
            } else {
                Err(format!("{text} re-parses differently"))
            }
        });
        if let Err(e) = outcome {
            failures.push(format!("{line}: {e}"));
        }
    }
    ensure(checked >= 100, || format!("corpus has only {checked} formulas"))?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{checked} formulas, 0 failures"))
}

/// Operation count and nesting depth by an explicit-stack walk, kept
/// independent of the recursive visitor in the library.
fn brute_force_measures(root: &Expr) -> (usize, usize) {
    let mut ops = 0;
    let mut deepest = 0;
    let mut stack = vec![(root, 0usize)];
    while let Some((node, above)) = stack.pop() {
        let here = match node {
            Expr::Binary { left, right, .. } => {
                stack.push((left, above + 1));
                stack.push((right, above + 1));
                1
            }
            Expr::Unary { operand, .. } => {
                stack.push((operand, above + 1));
                1
            }
            Expr::Function { args, .. } => {
                for a in args {
                    stack.push((a, above + 1));
                }
                1
            }
            Expr::Paren(inner) => {
                stack.push((inner, above));
                0
            }
            Expr::Number(_) | Expr::Text(_) | Expr::Boolean(_) | Expr::Cell(_) | Expr::Range(_) => 0,
        };
        ops += here;
        deepest = deepest.max(above + here);
    }
    (ops, deepest)
}

fn complexity_oracle() -> Outcome {
    let mut sampler = Sampler::new(11);
    let strategy = expr_sized(6, 400);
    let mut mismatches = Vec::new();
    let mut generated = 0;
    let mut heights = BTreeSet::new();
    while generated < 50 {
        let e = sampler.sample(&strategy);
        let height = tree_height(&e) - 1;
        if height > 6 {
            continue;
        }
        generated += 1;
        heights.insert(height);
        let expected = brute_force_measures(&e);
        let got = (operation_count(&e), max_nesting_depth(&e));
        if got != expected {
            mismatches.push(format!("{}: {got:?} vs {expected:?}", serialize(&e)));
        }
    }
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok(format!("50 trees (depths {heights:?}), 0 mismatches"))
}

fn flagged(wb: &Workbook, rule: RuleId, config: &RuleConfig) -> BTreeSet<String> {
    check(rule, wb, config)
        .iter()
        .map(|v| wb.display_address(v.location))
        .collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn configuration_semantics() -> Outcome {
    let mut cells: Vec<(String, String)> = (1..=10).map(|r| (format!("A{r}"), r.to_string())).collect();
    for (addr, f) in [
        ("B1", "=A1+1"),
        ("B2", "=INDEX(A1:C10,2,3)"),
        ("B3", "=A1+A2+A3+A4+A5+A6+A7"),
        ("B4", "=SUM(A1,A2)+SUM(A3,A4)"),
    ] {
        cells.push((addr.into(), f.into()));
    }
    let refs: Vec<(&str, &str)> = cells.iter().map(|(a, c)| (a.as_str(), c.as_str())).collect();
    let wb = sheet(&refs);
    let (c1, c2) = (RuleConfig::config1(), RuleConfig::config2());
    let checks = [
        (
            "constants/config1",
            flagged(&wb, RuleId::Constants, &c1),
            set(&["Sheet1!B1", "Sheet1!B2"]),
        ),
        ("constants/config2", flagged(&wb, RuleId::Constants, &c2), set(&[])),
        (
            "complexity/config1",
            flagged(&wb, RuleId::Complexity, &c1),
            set(&["Sheet1!B3"]),
        ),
        (
            "complexity/config2",
            flagged(&wb, RuleId::Complexity, &c2),
            set(&["Sheet1!B3", "Sheet1!B4"]),
        ),
    ];
    for (name, got, want) in &checks {
        ensure(got == want, || format!("{name}: got {got:?}, want {want:?}"))?;
    }
    Ok("4/4 exact sets".into())
}

fn reading_direction_table() -> Outcome {
    let wb = parse_fixture("sheet Sheet1\nsheet Sheet2\nsheet Sheet3\nSheet2!C3=0\n").unwrap();
    let origin = CellAddress::new(1, 2, 2);
    let config = RuleConfig::config1();
    let cases = [
        ("=B2", false),
        ("=D2", true),
        ("=B4", true),
        ("=D4", true),
        ("=Sheet3!A1", true),
        ("=Sheet1!Z99", false),
    ];
    let mut correct = 0;
    let mut wrong = Vec::new();
    for (formula, expected) in cases {
        let ast = parse_formula(formula).unwrap();
        let refs = referenced_cells(&ast, origin, &wb).unwrap();
        let got = refs
            .iter()
            .any(|r| breaks_reading_direction(origin, &r.target, &config));
        if got == expected {
            correct += 1;
        } else {
            wrong.push(format!("{formula}: got {got}"));
        }
    }
    ensure(wrong.is_empty(), || {
        format!("{correct}/6 correct; {}", wrong.join("; "))
    })?;
    Ok("6/6 correct".into())
}

fn check_partition(violations: &[Violation], wb: &Workbook) -> Result<(), String> {
    let groups = group_violations(violations, wb);
    let mut seen = BTreeSet::new();
    let mut signatures = BTreeSet::new();
    for g in &groups {
        ensure(!g.members.is_empty(), || "empty group".into())?;
        ensure(signatures.insert((g.rule, g.signature.clone())), || {
            format!("signature {} split across groups", g.signature)
        })?;
        for m in &g.members {
            ensure(m.rule == g.rule, || "member of another rule".into())?;
            let f = wb
                .cell(m.location)
                .and_then(|c| c.as_formula())
                .ok_or("member is not a formula")?;
            ensure(normalize_r1c1(&f.ast, m.location) == g.signature, || {
                format!("{} does not match {}", wb.display_address(m.location), g.signature)
            })?;
            ensure(seen.insert((m.rule, m.location)), || "violation in two groups".into())?;
        }
    }
    let all: BTreeSet<_> = violations.iter().map(|v| (v.rule, v.location)).collect();
    ensure(seen == all, || "groups do not cover the violations".into())
}

fn grouping() -> Outcome {
    let mut cells: Vec<(String, String)> = Vec::new();
    for r in 1..=20 {
        cells.push((format!("A{r}"), r.to_string()));
        cells.push((format!("B{r}"), format!("=A{r}*0.3")));
    }
    let refs: Vec<(&str, &str)> = cells.iter().map(|(a, c)| (a.as_str(), c.as_str())).collect();
    let wb = sheet(&refs);
    let violations = check(RuleId::Constants, &wb, &RuleConfig::config1());
    let groups = group_violations(&violations, &wb);
    ensure(groups.len() == 1 && groups[0].members.len() == 20, || {
        format!(
            "{} groups, sizes {:?}",
            groups.len(),
            groups.iter().map(|g| g.members.len()).collect::<Vec<_>>()
        )
    })?;

    let mut sampler = Sampler::new(23);
    let cells = workbook_cells();
    let mask = proptest::collection::vec(proptest::bool::ANY, 64);
    let configs = [RuleConfig::config1(), RuleConfig::config2()];
    for i in 0..1000 {
        let wb = build_workbook(&sampler.sample(&cells));
        let keep = sampler.sample(&mask);
        let config = &configs[i % 2];
        let mut violations: Vec<Violation> = RuleId::ALL.iter().flat_map(|r| check(*r, &wb, config)).collect();
        let mut k = 0;
        violations.retain(|_| {
            k += 1;
            keep[k % keep.len()]
        });
        check_partition(&violations, &wb).map_err(|e| format!("set {i}: {e}"))?;
    }
    Ok("20 copies -> 1 group of 20; partition holds on 1000 random sets".into())
}

fn monotonicity() -> Outcome {
    let mut sampler = Sampler::new(37);
    let cells = workbook_cells();
    let (c1, c2) = (RuleConfig::config1(), RuleConfig::config2());
    for i in 0..50 {
        let text = write_fixture(&build_workbook(&sampler.sample(&cells)));
        let wb = parse_fixture(&text).map_err(|e| e.to_string())?;
        let const1 = flagged(&wb, RuleId::Constants, &c1);
        let const2 = flagged(&wb, RuleId::Constants, &c2);
        let comp1 = flagged(&wb, RuleId::Complexity, &c1);
        let comp2 = flagged(&wb, RuleId::Complexity, &c2);
        ensure(const2.is_subset(&const1), || {
            format!("workbook {i}: constants {const2:?} vs {const1:?}")
        })?;
        ensure(comp1.is_subset(&comp2), || {
            format!("workbook {i}: complexity {comp1:?} vs {comp2:?}")
        })?;
    }
    Ok("50 workbooks, 0 counterexamples".into())
}

const WEIGHTS: [f64; 7] = [2.0, 3.0, 1.0, 1.0, 2.0, 1.0, 2.0];
const GRADES: [[f64; 7]; 4] = [
    [1.0, 2.0, 1.3, 2.7, 1.7, 3.0, 2.3],
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [4.0, 3.7, 3.3, 2.0, 1.0, 5.0, 2.7],
    [2.0, 3.0, 2.0, 2.0, 2.0, 2.0, 2.0],
];
/// Worked by hand: 23/12, 12/12, 36.8/12 and 27/12, each rounded to one
/// decimal with halves away from zero.
const PERSONAL: [f64; 4] = [1.9, 1.0, 3.1, 2.3];

fn grading_fixture() -> String {
    let mut text = String::from("sheet Grades\nsheet Weights\n");
    for (i, w) in WEIGHTS.iter().enumerate() {
        text.push_str(&format!("Weights!B{}={w}\n", i + 2));
    }
    let cols = ["B", "C", "D", "E"];
    for (p, grades) in GRADES.iter().enumerate() {
        let col = cols[p];
        for (i, g) in grades.iter().enumerate() {
            text.push_str(&format!("Grades!{col}{}={g}\n", i + 2));
        }
        let terms: Vec<String> = (2..=8).map(|r| format!("{col}{r}*Weights!$B${r}")).collect();
        text.push_str(&format!(
            "Grades!{col}10==ROUND(({})/SUM(Weights!$B$2:$B$8),1)\n",
            terms.join("+")
        ));
        text.push_str(&format!(
            "Grades!{col}11==SUMPRODUCT({col}2:{col}8,Weights!$B$2:$B$8)/SUM(Weights!$B$2:$B$8)\n"
        ));
    }
    text
}

fn evaluator_oracle() -> Outcome {
    let wb = parse_fixture(&grading_fixture()).map_err(|e| e.to_string())?;
    let none = Overrides::new();
    for (p, want) in PERSONAL.iter().enumerate() {
        let col = 1 + p as u32;
        let got = evaluate_cell(&wb, CellAddress::new(0, col, 9), &none).map_err(|e| e.to_string())?;
        let n = got.as_number().ok_or("grade is not a number")?;
        ensure((n - want).abs() <= 1e-9, || format!("person {}: {n} vs {want}", p + 1))?;
        let raw = evaluate_cell(&wb, CellAddress::new(0, col, 10), &none).map_err(|e| e.to_string())?;
        let exact: f64 = GRADES[p].iter().zip(WEIGHTS).map(|(g, w)| g * w).sum::<f64>() / 12.0;
        let raw = raw.as_number().ok_or("unrounded grade is not a number")?;
        ensure((raw - exact).abs() <= 1e-9, || {
            format!("person {}: unrounded {raw} vs {exact}", p + 1)
        })?;
    }
    let worked = sheet(&[
        ("A1", "1"),
        ("A2", "3"),
        ("B1", "2"),
        ("B2", "3"),
        ("C1", "=ROUND((B1*A1+B2*A2)/4,1)"),
    ]);
    let v = evaluate_cell(&worked, CellAddress::new(0, 2, 0), &none).map_err(|e| e.to_string())?;
    ensure(v == CellValue::Number(2.8), || format!("worked example gave {v}"))?;
    Ok("4 personal grades within 1e-9; (2*1+3*3)/4 -> 2.8 exactly".into())
}

const SCENARIOS: &str = "\
scenario typical
input A1 = 1
input A2 = 3
expect C1 = 2.8
expect C2 = 5.6

scenario high second grade
input A1 = 1
input A2 = 5
expect C1 = 4.3
expect C2 = 8.6

scenario even
input A1 = 2
input A2 = 2
expect C1 = 2.5
expect C2 = 5
";

fn scenario_aggregation() -> Outcome {
    let scenarios = parse_scenarios(SCENARIOS).map_err(|e| e.to_string())?;
    // caps the second grade at 4, which only the second scenario exposes
    let buggy = sheet(&[
        ("A1", "0"),
        ("A2", "0"),
        ("C1", "=ROUND((2*A1+3*MIN(A2,4))/4,1)"),
        ("C2", "=C1*2"),
    ]);
    let aggregate = run_all(&buggy, &scenarios);
    let table = write_report(&Report::Scenarios(&aggregate), Format::Table);
    ensure(table.contains("failed in # of scenarios: 1\n"), || table.clone())?;
    let wrong = aggregate.wrong_results_display();
    let parts: Vec<&str> = wrong.split(',').collect();
    ensure(
        parts.len() == 3 && parts[0] == "0" && parts[2] == "0" && parts[1].parse::<usize>().is_ok_and(|k| k > 0),
        || format!("wrong results {wrong}"),
    )?;

    let missing = sheet(&[("A1", "0"), ("C1", "=ROUND((2*A1+3*A2)/4,1)"), ("C2", "=C1*2")]);
    let aggregate = run_all(&missing, &scenarios);
    ensure(aggregate.failed_display() == "X", || {
        format!("missing input gave {}", aggregate.failed_display())
    })?;
    let table = write_report(&Report::Scenarios(&aggregate), Format::Table);
    ensure(table.contains("failed in # of scenarios: X\n"), || table.clone())?;
    Ok(format!("failed 1 of 3 with {wrong}; missing input -> X"))
}

fn cell_error_rate() -> Outcome {
    let mut text = String::from("sheet Data\n");
    let mut reference = BTreeMap::new();
    for i in 0..99u32 {
        let value = f64::from(i) * 0.5 + 1.0;
        let entered = if i == 41 { value + 10.0 } else { value };
        text.push_str(&format!("Data!A{}={entered}\n", i + 1));
        reference.insert(CellAddress::new(0, 0, i), CellValue::Number(value));
    }
    let wb = parse_fixture(&text).map_err(|e| e.to_string())?;
    let r = count_data_errors(&wb, &reference).map_err(|e| e.to_string())?;
    let (m, c) = (r.mismatch_count as u64, r.checked_cell_count as u64);
    ensure((m, c) == (1, 99), || format!("{m}/{c}"))?;
    // 1% <= m/c <= 1.6%, cross-multiplied to stay in integers
    ensure(100 * m >= c && 1000 * m <= 16 * c, || {
        format!("{m}/{c} outside the band")
    })?;
    Ok(format!("CER = {m}/{c} = {:.2}%", 100.0 * r.cell_error_rate()))
}

fn comparison_fixtures() -> (Workbook, Workbook) {
    let mut before = String::from("sheet S\n");
    for r in 1..=70 {
        before.push_str(&format!("S!A{r}={r}\n"));
    }
    for r in 1..=30 {
        before.push_str(&format!("S!B{r}==A{r}*2\n"));
    }
    let mut after = String::from("sheet S\n");
    for r in 1..=130 {
        after.push_str(&format!("S!A{r}={r}\n"));
    }
    for r in 1..=2 {
        after.push_str(&format!("S!B{r}==A{r}*2\n"));
    }
    for r in 3..=23 {
        after.push_str(&format!("S!B{r}==A{r}+A{}\n", r + 1));
    }
    (parse_fixture(&before).unwrap(), parse_fixture(&after).unwrap())
}

fn comparison_conventions() -> Outcome {
    let (before, after) = comparison_fixtures();
    let c = compare_workbooks(&before, &after, &RuleConfig::config1());
    ensure((c.cells.before, c.cells.after) == (100, 153), || {
        format!("cells {:?}", c.cells)
    })?;
    let cells = percent(c.cells.relative);
    let direction = percent(c.defects(RuleId::ReadingDirection).relative);
    let constants = percent(c.defects(RuleId::Constants).relative);
    ensure(cells == "53%", || format!("cells {cells}"))?;
    ensure(direction == "~", || format!("zero baseline {direction}"))?;
    ensure(constants == "-93%", || format!("decrease {constants}"))?;
    let table = write_report(&Report::Comparison(&c), Format::Table);
    for needle in [
        "relative cell increase: 53%",
        "relative defect increase: ~",
        "relative defect increase: -93%",
    ] {
        ensure(table.contains(needle), || format!("table lacks `{needle}`"))?;
    }
    Ok(format!(
        "cells {cells}, zero baseline {direction}, decrease {constants}"
    ))
}

const PARITY_FIXTURE: &str = "\
sheet Grades
sheet Weights
Grades!A1=name
Grades!B1=Ann
Grades!A2=math
Grades!B2=2
Grades!A3=art
Grades!B3=3
Grades!B4==ROUND((B2*Weights!B1+B3*Weights!B2)/SUM(Weights!B1:B2),1)
Grades!C2==B2*0.5
Grades!C3==B3*0.5
Grades!D1=TRUE
Grades!B5==IF(B4>2.5,\"fail\",\"pass\")
Weights!B1=2
Weights!B2=3
Weights!C1==Grades!B4
";

fn parity_package() -> Vec<u8> {
    let sst = r#"<?xml version="1.0" encoding="UTF-8"?><sst xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" count="4" uniqueCount="4"><si><t>name</t></si><si><t>Ann</t></si><si><t>math</t></si><si><r><t>a</t></r><r><t>rt</t></r></si></sst>"#;
    let grades = r#"<row r="1"><c r="A1" t="s"><v>0</v></c><c r="B1" t="s"><v>1</v></c><c r="D1" t="b"><v>1</v></c></row>
<row r="2"><c r="A2" t="s"><v>2</v></c><c r="B2"><v>2</v></c><c r="C2"><f t="shared" ref="C2:C3" si="0">B2*0.5</f><v>1</v></c></row>
<row r="3"><c r="A3" t="s"><v>3</v></c><c r="B3"><v>3</v></c><c r="C3"><f t="shared" si="0"/><v>1.5</v></c></row>
<row r="4"><c r="B4"><f>ROUND((B2*Weights!B1+B3*Weights!B2)/SUM(Weights!B1:B2),1)</f><v>2.6</v></c></row>
<row r="5"><c r="B5" t="str"><f>IF(B4&gt;2.5,"fail","pass")</f><v>fail</v></c></row>"#;
    let weights = r#"<row r="1"><c r="B1"><v>2</v></c><c r="C1"><f>Grades!B4</f><v>2.6</v></c></row><row r="2"><c r="B2"><v>3</v></c></row>"#;
    common::xlsx_package(&[("Grades", grades), ("Weights", weights)], Some(sst))
}

fn xlsx_fixture_parity() -> Outcome {
    let from_xlsx = read_xlsx_bytes(&parity_package()).map_err(|e| e.to_string())?;
    ensure(from_xlsx.warnings.is_empty(), || {
        format!("warnings {:?}", from_xlsx.warnings)
    })?;
    let from_fixture = parse_fixture(PARITY_FIXTURE).map_err(|e| e.to_string())?;
    for config in [RuleConfig::config1(), RuleConfig::config2()] {
        let a = write_report(
            &Report::Inspection(&run_inspection(&from_xlsx.workbook, &config)),
            Format::Json,
        );
        let b = write_report(
            &Report::Inspection(&run_inspection(&from_fixture, &config)),
            Format::Json,
        );
        ensure(a == b, || format!("{} reports differ", config.label()))?;
    }
    Ok("config1 and config2 JSON byte-identical".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("parser round trip", parser_round_trip),
        ("complexity oracle", complexity_oracle),
        ("configuration semantics", configuration_semantics),
        ("reading-direction truth table", reading_direction_table),
        ("grouping", grouping),
        ("configuration monotonicity", monotonicity),
        ("evaluator oracle", evaluator_oracle),
        ("scenario aggregation", scenario_aggregation),
        ("cell error rate", cell_error_rate),
        ("comparison conventions", comparison_conventions),
        ("xlsx/fixture parity", xlsx_fixture_parity),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => writeln!(out, "PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                writeln!(out, "FAIL  {name}: {why}")
            }
        }
        .expect("stdout");
    }
    writeln!(out, "acceptance: {} passed, {failed} failed", criteria.len() - failed).expect("stdout");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
