//! Formula evaluation with scenario overrides.
//!
//! Cells are computed on demand in dependency order. Each [`Evaluator`]
//! owns its memo table and cycle-detection stack, so independent runs over
//! one shared [`Workbook`] can proceed in parallel.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::formula::{BinaryOp, CellRef, Expr, UnaryOp};
use crate::workbook::{CellAddress, CellContent, CellValue, Workbook};

pub type Overrides = BTreeMap<CellAddress, CellValue>;

const SUPPORTED: &[&str] = &[
    "ABS",
    "AND",
    "AVERAGE",
    "COUNT",
    "COUNTA",
    "IF",
    "IFERROR",
    "INDEX",
    "MAX",
    "MIN",
    "NOT",
    "OR",
    "PRODUCT",
    "ROUND",
    "ROUNDDOWN",
    "ROUNDUP",
    "SUM",
    "SUMPRODUCT",
    "VLOOKUP",
];

/// Names of the functions the evaluator can compute, sorted.
pub fn supported_functions() -> &'static [&'static str] {
    SUPPORTED
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("circular reference: {}", CyclePath(.path))]
    Cycle { path: Vec<CellAddress> },
    #[error("unsupported function {0}")]
    UnsupportedFunction(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("{function} expects {expected} argument(s), got {got}")]
    Arity {
        function: String,
        expected: &'static str,
        got: usize,
    },
    #[error("unknown worksheet `{0}`")]
    UnknownSheet(String),
    #[error("address outside the workbook: sheet {0}")]
    NoSuchSheet(usize),
}

struct CyclePath<'a>(&'a [CellAddress]);

impl fmt::Display for CyclePath<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{}:{}", a.sheet, crate::formula::a1_name(a.col, a.row))?;
        }
        Ok(())
    }
}

/// Evaluates one cell with the given overrides in a fresh run.
pub fn evaluate_cell(wb: &Workbook, addr: CellAddress, overrides: &Overrides) -> Result<CellValue, EvalError> {
    Evaluator::new(wb, overrides).evaluate(addr)
}

/// Non-local exits while evaluating an expression: hard failures abort the
/// run, spreadsheet error codes become the cell's value.
enum Abort {
    Hard(EvalError),
    Code(&'static str),
}

impl From<EvalError> for Abort {
    fn from(e: EvalError) -> Self {
        Abort::Hard(e)
    }
}

type Flow<T> = Result<T, Abort>;

fn code_of(s: &str) -> &'static str {
    const CODES: &[&str] = &["#DIV/0!", "#N/A", "#NAME?", "#NULL!", "#NUM!", "#REF!", "#VALUE!"];
    CODES
        .iter()
        .find(|c| c.eq_ignore_ascii_case(s))
        .copied()
        .unwrap_or("#VALUE!")
}

/// A scalar, where `None` is an empty cell.
type Scalar = Option<CellValue>;

struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<Scalar>,
}

impl Grid {
    fn get(&self, row: usize, col: usize) -> &Scalar {
        &self.cells[row * self.cols + col]
    }
}

enum Val {
    Scalar(Scalar),
    Grid(Grid),
}

pub struct Evaluator<'a> {
    wb: &'a Workbook,
    overrides: &'a Overrides,
    cache: HashMap<CellAddress, Scalar>,
    in_progress: Vec<CellAddress>,
    memoize: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(wb: &'a Workbook, overrides: &'a Overrides) -> Self {
        Self {
            wb,
            overrides,
            cache: HashMap::new(),
            in_progress: Vec::new(),
            memoize: true,
        }
    }

    /// Recompute every dependency on every visit. Only useful as a
    /// reference when checking the memoized path.
    pub fn without_memo(mut self) -> Self {
        self.memoize = false;
        self
    }

    /// Value of `addr`; empty cells read as `Number(0)`.
    pub fn evaluate(&mut self, addr: CellAddress) -> Result<CellValue, EvalError> {
        Ok(self.cell(addr)?.unwrap_or(CellValue::Number(0.0)))
    }

    fn cell(&mut self, addr: CellAddress) -> Result<Scalar, EvalError> {
        if let Some(v) = self.overrides.get(&addr) {
            return Ok(Some(v.clone()));
        }
        if self.wb.sheet(addr.sheet).is_none() {
            return Err(EvalError::NoSuchSheet(addr.sheet));
        }
        if let Some(v) = self.cache.get(&addr) {
            return Ok(v.clone());
        }
        let formula = match self.wb.cell(addr) {
            None => return Ok(None),
            Some(CellContent::Literal(l)) => return Ok(Some(l.value.clone())),
            Some(CellContent::Formula(f)) => f,
        };
        if let Some(pos) = self.in_progress.iter().position(|a| *a == addr) {
            let mut path = self.in_progress[pos..].to_vec();
            path.push(addr);
            return Err(EvalError::Cycle { path });
        }
        self.in_progress.push(addr);
        let result = self.expr(&formula.ast, addr);
        self.in_progress.pop();
        let value = match result {
            Ok(Val::Scalar(None)) => CellValue::Number(0.0),
            Ok(Val::Scalar(Some(v))) => v,
            Ok(Val::Grid(_)) => CellValue::Error("#VALUE!".into()),
            Err(Abort::Code(code)) => CellValue::Error(code.into()),
            Err(Abort::Hard(e)) => return Err(e),
        };
        if self.memoize {
            self.cache.insert(addr, Some(value.clone()));
        }
        Ok(Some(value))
    }

    fn resolve(&self, r: &CellRef, origin: CellAddress) -> Result<usize, EvalError> {
        match &r.sheet {
            None => Ok(origin.sheet),
            Some(name) => self
                .wb
                .sheet_index(name)
                .ok_or_else(|| EvalError::UnknownSheet(name.clone())),
        }
    }

    fn expr(&mut self, e: &Expr, origin: CellAddress) -> Flow<Val> {
        Ok(match e {
            Expr::Number(n) => Val::Scalar(Some(CellValue::Number(n.value))),
            Expr::Text(s) => Val::Scalar(Some(CellValue::Text(s.clone()))),
            Expr::Boolean(b) => Val::Scalar(Some(CellValue::Boolean(*b))),
            Expr::Paren(inner) => self.expr(inner, origin)?,
            Expr::Cell(r) => {
                let sheet = self.resolve(r, origin)?;
                Val::Scalar(self.cell(CellAddress::new(sheet, r.col, r.row))?)
            }
            Expr::Range(range) => {
                let sheet = self.resolve(&range.start, origin)?;
                let (c0, c1) = (range.start.col.min(range.end.col), range.start.col.max(range.end.col));
                let (r0, r1) = (range.start.row.min(range.end.row), range.start.row.max(range.end.row));
                let mut cells = Vec::new();
                for row in r0..=r1 {
                    for col in c0..=c1 {
                        cells.push(self.cell(CellAddress::new(sheet, col, row))?);
                    }
                }
                Val::Grid(Grid {
                    rows: (r1 - r0 + 1) as usize,
                    cols: (c1 - c0 + 1) as usize,
                    cells,
                })
            }
            Expr::Unary { op, operand } => {
                let v = self.scalar(operand, origin)?;
                match op {
                    UnaryOp::Plus => Val::Scalar(v),
                    UnaryOp::Neg => number(-to_number(&v)?)?,
                    UnaryOp::Percent => number(to_number(&v)? / 100.0)?,
                }
            }
            Expr::Binary { op, left, right } => {
                let l = self.scalar(left, origin)?;
                let r = self.scalar(right, origin)?;
                binary(*op, &l, &r)?
            }
            Expr::Function { name, args } => self.call(name, args, origin)?,
        })
    }

    fn scalar(&mut self, e: &Expr, origin: CellAddress) -> Flow<Scalar> {
        match self.expr(e, origin)? {
            Val::Scalar(Some(CellValue::Error(code))) => Err(Abort::Code(code_of(&code))),
            Val::Scalar(s) => Ok(s),
            Val::Grid(_) => Err(Abort::Code("#VALUE!")),
        }
    }

    /// Numbers contributed by an aggregate's arguments. Values read through
    /// references skip text, booleans and blanks; computed values must be
    /// numeric.
    fn numbers(&mut self, args: &[Expr], origin: CellAddress) -> Flow<Vec<f64>> {
        let mut out = Vec::new();
        for arg in args {
            match self.expr(arg, origin)? {
                Val::Grid(g) => {
                    for v in &g.cells {
                        match v {
                            Some(CellValue::Number(n)) => out.push(*n),
                            Some(CellValue::Error(code)) => return Err(Abort::Code(code_of(code))),
                            _ => {}
                        }
                    }
                }
                Val::Scalar(v) => {
                    let through_ref = matches!(unparen(arg), Expr::Cell(_));
                    match v {
                        Some(CellValue::Number(n)) => out.push(n),
                        Some(CellValue::Error(code)) => return Err(Abort::Code(code_of(&code))),
                        None if !through_ref => out.push(0.0),
                        Some(CellValue::Boolean(b)) if !through_ref => out.push(if b { 1.0 } else { 0.0 }),
                        Some(CellValue::Text(t)) if !through_ref => {
                            return Err(Abort::Hard(EvalError::Type(format!("text \"{t}\" is not a number"))))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(out)
    }

    fn call(&mut self, name: &str, args: &[Expr], origin: CellAddress) -> Flow<Val> {
        let arity = |lo: usize, hi: usize, expected: &'static str| -> Flow<()> {
            if args.len() < lo || args.len() > hi {
                Err(Abort::Hard(EvalError::Arity {
                    function: name.to_string(),
                    expected,
                    got: args.len(),
                }))
            } else {
                Ok(())
            }
        };
        match name {
            "SUM" => {
                arity(1, usize::MAX, "at least 1")?;
                number(self.numbers(args, origin)?.iter().sum())
            }
            "PRODUCT" => {
                arity(1, usize::MAX, "at least 1")?;
                let ns = self.numbers(args, origin)?;
                number(if ns.is_empty() { 0.0 } else { ns.iter().product() })
            }
            "AVERAGE" => {
                arity(1, usize::MAX, "at least 1")?;
                let ns = self.numbers(args, origin)?;
                if ns.is_empty() {
                    return Err(Abort::Code("#DIV/0!"));
                }
                number(ns.iter().sum::<f64>() / ns.len() as f64)
            }
            "MIN" | "MAX" => {
                arity(1, usize::MAX, "at least 1")?;
                let ns = self.numbers(args, origin)?;
                let pick = if name == "MIN" { f64::min } else { f64::max };
                number(ns.into_iter().reduce(pick).unwrap_or(0.0))
            }
            "COUNT" | "COUNTA" => {
                arity(1, usize::MAX, "at least 1")?;
                let mut n = 0usize;
                for arg in args {
                    let counts = |v: &Scalar| match v {
                        Some(CellValue::Number(_)) => true,
                        Some(_) => name == "COUNTA",
                        None => false,
                    };
                    match self.expr(arg, origin) {
                        Ok(Val::Grid(g)) => n += g.cells.iter().filter(|v| counts(v)).count(),
                        Ok(Val::Scalar(v)) => n += usize::from(counts(&v)),
                        Err(Abort::Code(_)) => n += usize::from(name == "COUNTA"),
                        Err(hard) => return Err(hard),
                    }
                }
                number(n as f64)
            }
            "ABS" => {
                arity(1, 1, "1")?;
                number(to_number(&self.scalar(&args[0], origin)?)?.abs())
            }
            "ROUND" | "ROUNDUP" | "ROUNDDOWN" => {
                arity(2, 2, "2")?;
                let x = to_number(&self.scalar(&args[0], origin)?)?;
                let digits = to_number(&self.scalar(&args[1], origin)?)?.trunc() as i32;
                let mode = match name {
                    "ROUND" => Rounding::HalfAwayFromZero,
                    "ROUNDUP" => Rounding::AwayFromZero,
                    _ => Rounding::TowardZero,
                };
                number(round_to(x, digits, mode))
            }
            "IF" => {
                arity(2, 3, "2 or 3")?;
                let cond = truthy(&self.scalar(&args[0], origin)?)?;
                if cond {
                    self.expr(&args[1], origin)
                } else if let Some(e) = args.get(2) {
                    self.expr(e, origin)
                } else {
                    Ok(Val::Scalar(Some(CellValue::Boolean(false))))
                }
            }
            "IFERROR" => {
                arity(2, 2, "2")?;
                match self.expr(&args[0], origin) {
                    Ok(Val::Scalar(Some(CellValue::Error(_)))) | Err(Abort::Code(_)) => self.expr(&args[1], origin),
                    other => other,
                }
            }
            "AND" | "OR" => {
                arity(1, usize::MAX, "at least 1")?;
                let mut seen = Vec::new();
                for arg in args {
                    match self.expr(arg, origin)? {
                        Val::Grid(g) => {
                            for v in &g.cells {
                                match v {
                                    Some(CellValue::Number(_) | CellValue::Boolean(_)) => seen.push(truthy(v)?),
                                    Some(CellValue::Error(code)) => return Err(Abort::Code(code_of(code))),
                                    _ => {}
                                }
                            }
                        }
                        Val::Scalar(v) => seen.push(truthy(&v)?),
                    }
                }
                if seen.is_empty() {
                    return Err(Abort::Code("#VALUE!"));
                }
                let b = if name == "AND" {
                    seen.iter().all(|b| *b)
                } else {
                    seen.iter().any(|b| *b)
                };
                Ok(Val::Scalar(Some(CellValue::Boolean(b))))
            }
            "NOT" => {
                arity(1, 1, "1")?;
                let b = truthy(&self.scalar(&args[0], origin)?)?;
                Ok(Val::Scalar(Some(CellValue::Boolean(!b))))
            }
            "INDEX" => {
                arity(2, 3, "2 or 3")?;
                let grid = self.grid(&args[0], origin)?;
                let first = index_arg(&self.scalar(&args[1], origin)?)?;
                let second = match args.get(2) {
                    Some(e) => Some(index_arg(&self.scalar(e, origin)?)?),
                    None => None,
                };
                let (row, col) = match second {
                    Some(c) => (first, c),
                    // a single index walks along a one-row range
                    None if grid.rows == 1 => (1, first),
                    None => (first, 1),
                };
                if row == 0 || col == 0 {
                    return Err(Abort::Code("#VALUE!"));
                }
                if row > grid.rows || col > grid.cols {
                    return Err(Abort::Code("#REF!"));
                }
                Ok(Val::Scalar(grid.get(row - 1, col - 1).clone()))
            }
            "VLOOKUP" => {
                arity(3, 4, "3 or 4")?;
                let needle = self.scalar(&args[0], origin)?;
                let table = self.grid(&args[1], origin)?;
                let col = index_arg(&self.scalar(&args[2], origin)?)?;
                let approximate = match args.get(3) {
                    Some(e) => truthy(&self.scalar(e, origin)?)?,
                    None => true,
                };
                if col == 0 {
                    return Err(Abort::Code("#VALUE!"));
                }
                if col > table.cols {
                    return Err(Abort::Code("#REF!"));
                }
                let hit = if approximate {
                    let mut last = None;
                    for row in 0..table.rows {
                        let key = table.get(row, 0);
                        if key.is_none() || rank(key) != rank(&needle) {
                            continue;
                        }
                        if compare(key, &needle) == Ordering::Greater {
                            break;
                        }
                        last = Some(row);
                    }
                    last
                } else {
                    (0..table.rows).find(|&row| {
                        let key = table.get(row, 0);
                        key.is_some() && rank(key) == rank(&needle) && compare(key, &needle) == Ordering::Equal
                    })
                };
                match hit {
                    Some(row) => Ok(Val::Scalar(table.get(row, col - 1).clone())),
                    None => Err(Abort::Code("#N/A")),
                }
            }
            "SUMPRODUCT" => {
                arity(1, usize::MAX, "at least 1")?;
                let mut grids = Vec::new();
                for arg in args {
                    grids.push(self.grid(arg, origin)?);
                }
                let (rows, cols) = (grids[0].rows, grids[0].cols);
                if grids.iter().any(|g| g.rows != rows || g.cols != cols) {
                    return Err(Abort::Code("#VALUE!"));
                }
                let mut total = 0.0;
                for i in 0..rows * cols {
                    let mut term = 1.0;
                    for g in &grids {
                        term *= match &g.cells[i] {
                            Some(CellValue::Number(n)) => *n,
                            Some(CellValue::Error(code)) => return Err(Abort::Code(code_of(code))),
                            _ => 0.0,
                        };
                    }
                    total += term;
                }
                number(total)
            }
            other => Err(Abort::Hard(EvalError::UnsupportedFunction(other.to_string()))),
        }
    }

    fn grid(&mut self, e: &Expr, origin: CellAddress) -> Flow<Grid> {
        Ok(match self.expr(e, origin)? {
            Val::Grid(g) => g,
            Val::Scalar(Some(CellValue::Error(code))) => return Err(Abort::Code(code_of(&code))),
            Val::Scalar(s) => Grid {
                rows: 1,
                cols: 1,
                cells: vec![s],
            },
        })
    }
}

fn unparen(e: &Expr) -> &Expr {
    match e {
        Expr::Paren(inner) => unparen(inner),
        other => other,
    }
}

fn number(n: f64) -> Flow<Val> {
    if n.is_finite() {
        Ok(Val::Scalar(Some(CellValue::Number(n))))
    } else {
        Err(Abort::Code("#NUM!"))
    }
}

fn to_number(v: &Scalar) -> Flow<f64> {
    match v {
        None => Ok(0.0),
        Some(CellValue::Number(n)) => Ok(*n),
        Some(CellValue::Boolean(b)) => Ok(if *b { 1.0 } else { 0.0 }),
        Some(CellValue::Text(t)) => Err(Abort::Hard(EvalError::Type(format!("text \"{t}\" used as a number")))),
        Some(CellValue::Error(code)) => Err(Abort::Code(code_of(code))),
    }
}

fn truthy(v: &Scalar) -> Flow<bool> {
    match v {
        None => Ok(false),
        Some(CellValue::Boolean(b)) => Ok(*b),
        Some(CellValue::Number(n)) => Ok(*n != 0.0),
        Some(CellValue::Text(t)) => Err(Abort::Hard(EvalError::Type(format!(
            "text \"{t}\" used as a condition"
        )))),
        Some(CellValue::Error(code)) => Err(Abort::Code(code_of(code))),
    }
}

fn index_arg(v: &Scalar) -> Flow<usize> {
    let n = to_number(v)?.trunc();
    if n < 0.0 {
        return Err(Abort::Code("#VALUE!"));
    }
    Ok(n as usize)
}

fn as_text(v: &Scalar) -> String {
    match v {
        None => String::new(),
        Some(v) => v.to_string(),
    }
}

/// Ordering class for mixed comparisons: numbers < text < booleans.
fn rank(v: &Scalar) -> u8 {
    match v {
        None | Some(CellValue::Number(_)) => 0,
        Some(CellValue::Text(_)) => 1,
        Some(CellValue::Boolean(_)) => 2,
        Some(CellValue::Error(_)) => 3,
    }
}

fn compare(a: &Scalar, b: &Scalar) -> Ordering {
    use CellValue::*;
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(Text(t))) => "".cmp(t.to_lowercase().as_str()),
        (Some(Text(t)), None) => t.to_lowercase().as_str().cmp(""),
        (None, Some(Boolean(b))) => false.cmp(b),
        (Some(Boolean(a)), None) => a.cmp(&false),
        (Some(Text(x)), Some(Text(y))) => x.to_lowercase().cmp(&y.to_lowercase()),
        (Some(Boolean(x)), Some(Boolean(y))) => x.cmp(y),
        _ if rank(a) == 0 && rank(b) == 0 => {
            let x = a.as_ref().and_then(CellValue::as_number).unwrap_or(0.0);
            let y = b.as_ref().and_then(CellValue::as_number).unwrap_or(0.0);
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
        _ => rank(a).cmp(&rank(b)),
    }
}

fn binary(op: BinaryOp, l: &Scalar, r: &Scalar) -> Flow<Val> {
    use BinaryOp::*;
    let arith = |f: fn(f64, f64) -> f64| -> Flow<Val> { number(f(to_number(l)?, to_number(r)?)) };
    let cmp =
        |pred: fn(Ordering) -> bool| -> Flow<Val> { Ok(Val::Scalar(Some(CellValue::Boolean(pred(compare(l, r)))))) };
    match op {
        Add => arith(|a, b| a + b),
        Sub => arith(|a, b| a - b),
        Mul => arith(|a, b| a * b),
        Div => {
            let (a, b) = (to_number(l)?, to_number(r)?);
            if b == 0.0 {
                Err(Abort::Code("#DIV/0!"))
            } else {
                number(a / b)
            }
        }
        Pow => arith(f64::powf),
        Concat => Ok(Val::Scalar(Some(CellValue::Text(as_text(l) + &as_text(r))))),
        Eq => cmp(|o| o == Ordering::Equal),
        Ne => cmp(|o| o != Ordering::Equal),
        Lt => cmp(|o| o == Ordering::Less),
        Le => cmp(|o| o != Ordering::Greater),
        Gt => cmp(|o| o == Ordering::Greater),
        Ge => cmp(|o| o != Ordering::Less),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    HalfAwayFromZero,
    AwayFromZero,
    TowardZero,
}

/// Rounds to `digits` decimal places (negative digits round to tens,
/// hundreds, ...).
///
/// The scaled value is first snapped to 15 significant digits so that
/// inputs like `1.005` (stored as 1.00499999...) round the way their
/// decimal spelling suggests.
pub fn round_to(x: f64, digits: i32, mode: Rounding) -> f64 {
    let scale = 10f64.powi(digits.unsigned_abs() as i32);
    let scaled = if digits >= 0 { x * scale } else { x / scale };
    let snapped: f64 = format!("{scaled:.14e}").parse().unwrap_or(scaled);
    let rounded = match mode {
        Rounding::HalfAwayFromZero => snapped.round(),
        Rounding::AwayFromZero => snapped.signum() * snapped.abs().ceil(),
        Rounding::TowardZero => snapped.trunc(),
    };
    if digits >= 0 {
        rounded / scale
    } else {
        rounded * scale
    }
}

/// A formula whose stored cached value differs from what the evaluator
/// computes.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedMismatch {
    pub address: CellAddress,
    pub cached: CellValue,
    pub computed: Result<CellValue, EvalError>,
}

/// Re-evaluates every formula that carries a cached number and reports
/// disagreements beyond `1e-9`.
pub fn verify_cached_values(wb: &Workbook) -> Vec<CachedMismatch> {
    let overrides = Overrides::new();
    let mut ev = Evaluator::new(wb, &overrides);
    let mut out = Vec::new();
    for (addr, f) in wb.formulas() {
        let Some(cached @ CellValue::Number(expected)) = &f.cached else {
            continue;
        };
        let computed = ev.evaluate(addr);
        let agrees = matches!(&computed, Ok(CellValue::Number(n)) if (n - expected).abs() <= 1e-9);
        if !agrees {
            out.push(CachedMismatch {
                address: addr,
                cached: cached.clone(),
                computed,
            });
        }
    }
    out
}
