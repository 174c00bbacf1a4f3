//! Spreadsheet formula language: parsing, canonical printing and the
//! structural measurements the inspection rules rely on.

mod analysis;
mod ast;
mod parser;
mod print;

pub use analysis::{
    constants_in, max_nesting_depth, operation_count, referenced_cells, references, translate, Constant, RefTarget,
    Reference, ResolvedReference, UnknownSheet,
};
pub use ast::{BinaryOp, CellRef, Expr, NumberLit, RangeRef, UnaryOp, MAX_COL, MAX_ROW};
pub use parser::{parse_a1, parse_formula, ParseError};
pub use print::{a1_name, column_name, normalize_r1c1, quote_sheet_name, serialize};
