//! XLSX (Office Open XML) reader.
//!
//! Only what inspection needs is consumed: sheet names and order, shared
//! strings, and for each cell its address, type, value and formula text.
//! Shared formulas are expanded so every member cell carries its own
//! translated formula.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Seek};
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use zip::ZipArchive;

use crate::error::LoadError;
use crate::formula::{parse_a1, parse_formula, serialize, translate, Expr};
use crate::workbook::{CellAddress, CellContent, CellValue, Formula, Literal, Workbook, WorkbookBuilder};

const ZIP_MAGIC: &[u8; 4] = b"PK\x03\x04";

/// A loaded workbook plus the problems that were tolerated on the way.
#[derive(Debug)]
pub struct XlsxLoad {
    pub workbook: Workbook,
    pub warnings: Vec<String>,
}

pub fn load_xlsx(path: impl AsRef<Path>) -> Result<XlsxLoad, LoadError> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| LoadError::io(path, e))?;
    let mut magic = [0u8; 4];
    let n = file.read(&mut magic).map_err(|e| LoadError::io(path, e))?;
    if n < 4 || &magic != ZIP_MAGIC {
        return Err(LoadError::Format(format!("{} is not a ZIP archive", path.display())));
    }
    file.rewind().map_err(|e| LoadError::io(path, e))?;
    read_xlsx(file)
}

pub fn read_xlsx_bytes(bytes: &[u8]) -> Result<XlsxLoad, LoadError> {
    if !bytes.starts_with(ZIP_MAGIC) {
        return Err(LoadError::Format("not a ZIP archive".into()));
    }
    read_xlsx(std::io::Cursor::new(bytes))
}

fn read_xlsx<R: Read + Seek>(reader: R) -> Result<XlsxLoad, LoadError> {
    let mut zip = ZipArchive::new(reader).map_err(|e| LoadError::Format(e.to_string()))?;
    let workbook_xml =
        read_part(&mut zip, "xl/workbook.xml")?.ok_or_else(|| LoadError::Format("missing xl/workbook.xml".into()))?;
    let sheets = parse_workbook_sheets(&workbook_xml)?;
    let rels = match read_part(&mut zip, "xl/_rels/workbook.xml.rels")? {
        Some(xml) => parse_relationships(&xml)?,
        None => HashMap::new(),
    };
    let shared = match read_part(&mut zip, "xl/sharedStrings.xml")? {
        Some(xml) => parse_shared_strings(&xml)?,
        None => Vec::new(),
    };

    let mut builder = WorkbookBuilder::new();
    let mut warnings = Vec::new();
    for (ordinal, sheet) in sheets.iter().enumerate() {
        let index = builder.add_sheet(&sheet.name)?;
        let part = match sheet.rel_id.as_ref().and_then(|id| rels.get(id)) {
            Some(target) => target.clone(),
            None => format!("xl/worksheets/sheet{}.xml", ordinal + 1),
        };
        if !part.contains("worksheets/") {
            // chartsheets and dialog sheets hold no cells
            continue;
        }
        let xml =
            read_part(&mut zip, &part)?.ok_or_else(|| LoadError::Format(format!("missing worksheet part {part}")))?;
        read_sheet_cells(&xml, index, &sheet.name, &shared, &mut builder, &mut warnings)?;
    }
    Ok(XlsxLoad {
        workbook: builder.build(),
        warnings,
    })
}

fn read_part<R: Read + Seek>(zip: &mut ZipArchive<R>, name: &str) -> Result<Option<String>, LoadError> {
    let mut file = match zip.by_name(name) {
        Ok(f) => f,
        Err(zip::result::ZipError::FileNotFound) => return Ok(None),
        Err(e) => return Err(LoadError::Format(format!("{name}: {e}"))),
    };
    let mut text = String::new();
    file.read_to_string(&mut text)
        .map_err(|e| LoadError::Format(format!("{name}: {e}")))?;
    Ok(Some(text))
}

fn xml_error(part: &str, e: impl std::fmt::Display) -> LoadError {
    LoadError::Format(format!("{part}: {e}"))
}

fn attr(e: &BytesStart<'_>, local: &[u8]) -> Result<Option<String>, LoadError> {
    for a in e.attributes() {
        let a = a.map_err(|err| xml_error("attribute", err))?;
        if a.key.local_name().as_ref() == local {
            let v = a.unescape_value().map_err(|err| xml_error("attribute", err))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

struct SheetEntry {
    name: String,
    rel_id: Option<String>,
}

fn parse_workbook_sheets(xml: &str) -> Result<Vec<SheetEntry>, LoadError> {
    let mut reader = Reader::from_str(xml);
    let mut out = Vec::new();
    loop {
        match reader.read_event().map_err(|e| xml_error("xl/workbook.xml", e))? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == b"sheet" => {
                let name = attr(&e, b"name")?.ok_or_else(|| LoadError::Format("sheet without a name".into()))?;
                out.push(SheetEntry {
                    name,
                    rel_id: attr(&e, b"id")?,
                });
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

/// Relationship id → package part path.
fn parse_relationships(xml: &str) -> Result<HashMap<String, String>, LoadError> {
    let mut reader = Reader::from_str(xml);
    let mut out = HashMap::new();
    loop {
        match reader.read_event().map_err(|e| xml_error("workbook.xml.rels", e))? {
            Event::Start(e) | Event::Empty(e) if e.local_name().as_ref() == b"Relationship" => {
                if let (Some(id), Some(target)) = (attr(&e, b"Id")?, attr(&e, b"Target")?) {
                    let path = match target.strip_prefix('/') {
                        Some(abs) => abs.to_string(),
                        None => format!("xl/{target}"),
                    };
                    out.insert(id, path);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

fn parse_shared_strings(xml: &str) -> Result<Vec<String>, LoadError> {
    let mut reader = Reader::from_str(xml);
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    let mut in_text = false;
    let mut phonetic_depth = 0usize;
    loop {
        match reader.read_event().map_err(|e| xml_error("xl/sharedStrings.xml", e))? {
            Event::Start(e) => match e.local_name().as_ref() {
                b"si" => current = Some(String::new()),
                b"rPh" => phonetic_depth += 1,
                b"t" => in_text = phonetic_depth == 0,
                _ => {}
            },
            Event::Empty(e) if e.local_name().as_ref() == b"si" => out.push(String::new()),
            Event::End(e) => match e.local_name().as_ref() {
                b"si" => out.push(current.take().unwrap_or_default()),
                b"rPh" => phonetic_depth = phonetic_depth.saturating_sub(1),
                b"t" => in_text = false,
                _ => {}
            },
            Event::Text(t) if in_text => {
                let s = t.unescape().map_err(|e| xml_error("xl/sharedStrings.xml", e))?;
                if let Some(c) = current.as_mut() {
                    c.push_str(&s);
                }
            }
            Event::CData(t) if in_text => {
                if let Some(c) = current.as_mut() {
                    c.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Default)]
struct RawCell {
    reference: Option<String>,
    kind: Option<String>,
    value: Option<String>,
    formula: Option<String>,
    formula_kind: Option<String>,
    shared_index: Option<String>,
    inline: Option<String>,
}

#[derive(PartialEq)]
enum Capture {
    None,
    Value,
    Formula,
    Inline,
}

fn read_sheet_cells(
    xml: &str,
    sheet: usize,
    sheet_name: &str,
    shared: &[String],
    builder: &mut WorkbookBuilder,
    warnings: &mut Vec<String>,
) -> Result<(), LoadError> {
    let mut reader = Reader::from_str(xml);
    let mut cell: Option<RawCell> = None;
    let mut capture = Capture::None;
    let mut masters: HashMap<String, (CellAddress, Expr)> = HashMap::new();
    let mut row: u32 = 0;
    let mut next_col: u32 = 0;
    let mut phonetic = false;
    let part = format!("worksheet `{sheet_name}`");

    loop {
        let event = reader.read_event().map_err(|e| xml_error(&part, e))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"row" => {
                        if let Some(r) = attr(e, b"r")?.and_then(|r| r.parse::<u32>().ok()) {
                            row = r.saturating_sub(1);
                        } else {
                            row += 1;
                        }
                        next_col = 0;
                    }
                    b"c" => {
                        let raw = RawCell {
                            reference: attr(e, b"r")?,
                            kind: attr(e, b"t")?,
                            ..RawCell::default()
                        };
                        if empty {
                            // styled but valueless cell
                            next_col = locate(&raw, row, next_col).col + 1;
                        } else {
                            cell = Some(raw);
                        }
                    }
                    b"f" => {
                        if let Some(c) = cell.as_mut() {
                            c.formula_kind = attr(e, b"t")?;
                            c.shared_index = attr(e, b"si")?;
                            c.formula = Some(String::new());
                            if !empty {
                                capture = Capture::Formula;
                            }
                        }
                    }
                    b"v" if !empty => {
                        if let Some(c) = cell.as_mut() {
                            c.value = Some(String::new());
                            capture = Capture::Value;
                        }
                    }
                    b"rPh" if !empty => phonetic = true,
                    b"t" if !empty && !phonetic => {
                        if let Some(c) = cell.as_mut() {
                            c.inline.get_or_insert_with(String::new);
                            capture = Capture::Inline;
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) if capture != Capture::None => {
                let text = t.unescape().map_err(|e| xml_error(&part, e))?;
                append(cell.as_mut(), &capture, &text);
            }
            Event::CData(t) if capture != Capture::None => {
                append(cell.as_mut(), &capture, &String::from_utf8_lossy(&t));
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"f" | b"v" | b"t" => capture = Capture::None,
                b"rPh" => phonetic = false,
                b"c" => {
                    if let Some(raw) = cell.take() {
                        let addr = locate(&raw, row, next_col);
                        next_col = addr.col + 1;
                        let addr = CellAddress::new(sheet, addr.col, addr.row);
                        finish_cell(raw, addr, sheet_name, shared, &mut masters, builder, warnings)?;
                    }
                    capture = Capture::None;
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(())
}

fn append(cell: Option<&mut RawCell>, capture: &Capture, text: &str) {
    let Some(c) = cell else { return };
    let slot = match capture {
        Capture::Value => &mut c.value,
        Capture::Formula => &mut c.formula,
        Capture::Inline => &mut c.inline,
        Capture::None => return,
    };
    slot.get_or_insert_with(String::new).push_str(text);
}

/// Address from the `r` attribute, or the next column of the current row
/// when a writer omitted it.
fn locate(raw: &RawCell, row: u32, next_col: u32) -> CellAddress {
    match raw.reference.as_deref().and_then(parse_a1) {
        Some(r) => CellAddress::new(0, r.col, r.row),
        None => CellAddress::new(0, next_col, row),
    }
}

fn finish_cell(
    raw: RawCell,
    addr: CellAddress,
    sheet_name: &str,
    shared: &[String],
    masters: &mut HashMap<String, (CellAddress, Expr)>,
    builder: &mut WorkbookBuilder,
    warnings: &mut Vec<String>,
) -> Result<(), LoadError> {
    let where_ = format!("{sheet_name}!{}", crate::formula::a1_name(addr.col, addr.row));
    let value = match cell_value(&raw, shared) {
        Ok(v) => v,
        Err(msg) => {
            warnings.push(format!("{where_}: {msg}"));
            None
        }
    };

    let formula_text = raw.formula.as_deref().map(str::trim).unwrap_or("");
    let is_shared = raw.formula_kind.as_deref() == Some("shared");
    let source = if !formula_text.is_empty() {
        Some(format!("={formula_text}"))
    } else if is_shared {
        let si = raw.shared_index.clone().unwrap_or_default();
        match masters.get(&si) {
            Some((origin, ast)) => {
                let drow = addr.row as i64 - origin.row as i64;
                let dcol = addr.col as i64 - origin.col as i64;
                match translate(ast, drow, dcol) {
                    Some(t) => Some(serialize(&t)),
                    None => {
                        warnings.push(format!("{where_}: shared formula {si} shifts off the grid"));
                        None
                    }
                }
            }
            None => {
                warnings.push(format!("{where_}: unknown shared formula index {si}"));
                None
            }
        }
    } else {
        None
    };

    let content = match source {
        Some(source) => match parse_formula(&source) {
            Ok(ast) => {
                if is_shared && !formula_text.is_empty() {
                    if let Some(si) = &raw.shared_index {
                        masters.insert(si.clone(), (addr, ast.clone()));
                    }
                }
                CellContent::Formula(Formula {
                    source,
                    ast,
                    cached: value,
                })
            }
            Err(e) => {
                warnings.push(format!("{where_}: {e}; kept as text"));
                CellContent::Literal(Literal::text(source))
            }
        },
        None => match value {
            Some(CellValue::Number(n)) => CellContent::Literal(Literal {
                value: CellValue::Number(n),
                text: raw.value.as_deref().unwrap_or_default().trim().to_string(),
            }),
            Some(CellValue::Text(t)) => CellContent::Literal(Literal::text(t)),
            Some(CellValue::Boolean(b)) => CellContent::Literal(Literal::boolean(b)),
            Some(CellValue::Error(code)) => CellContent::Literal(Literal {
                text: code.clone(),
                value: CellValue::Error(code),
            }),
            None => return Ok(()),
        },
    };
    builder.set_cell(addr, content)?;
    Ok(())
}

fn cell_value(raw: &RawCell, shared: &[String]) -> Result<Option<CellValue>, String> {
    let kind = raw.kind.as_deref().unwrap_or("n");
    if kind == "inlineStr" {
        return Ok(raw.inline.clone().map(CellValue::Text));
    }
    let Some(v) = raw.value.as_deref() else {
        return Ok(None);
    };
    Ok(Some(match kind {
        "s" => {
            let idx: usize = v.trim().parse().map_err(|_| format!("bad shared string index `{v}`"))?;
            CellValue::Text(
                shared
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| format!("shared string index {idx} out of range"))?,
            )
        }
        "str" => CellValue::Text(v.to_string()),
        "b" => CellValue::Boolean(v.trim() == "1" || v.trim().eq_ignore_ascii_case("true")),
        "e" => CellValue::Error(v.trim().to_string()),
        _ => match Literal::parse_number(v) {
            Some(l) => l.value,
            None if v.trim().is_empty() => return Ok(None),
            None => return Err(format!("invalid number `{v}`")),
        },
    }))
}
