//! Loading raw files into uniform tables: delimited text, object trees
//! (JSON) and markup (XML).

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::stats::{is_null, parse_number};
use crate::error::{Error, Result};

/// Nested object paths are flattened with `.` up to this many segments.
pub const MAX_FLATTEN_DEPTH: usize = 3;

/// One entity: named columns and trimmed cell text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn cells(&self, column: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[column].as_str())
    }

    /// Cells with null tokens mapped to `None`.
    pub fn nullable(&self, column: usize) -> Vec<Option<&str>> {
        self.cells(column).map(|c| (!is_null(c)).then_some(c)).collect()
    }

    /// Cells parsed as decimals; nulls and unparseable cells are `None`.
    pub fn numeric(&self, column: usize) -> Vec<Option<f64>> {
        self.cells(column).map(|c| if is_null(c) { None } else { parse_number(c) }).collect()
    }
}

pub fn delimiter_for(path: &Path, text: &str) -> u8 {
    let ext = extension(path);
    if ext == "tsv" || ext == "tab" {
        return b'\t';
    }
    let first = text.lines().next().unwrap_or("");
    if first.contains('\t') && !first.contains(',') {
        b'\t'
    } else {
        b','
    }
}

pub(crate) fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string()
}

/// Parses delimiter-separated text with a header row. Quoted fields are
/// supported; every record must have the header's width.
pub fn read_delimited(name: &str, text: &str, delimiter: u8) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Malformed(format!("{name}: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if columns.is_empty() || (columns.len() == 1 && columns[0].is_empty()) {
        return Err(Error::Malformed(format!("{name}: missing header row")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed(format!("{name}: {e}")))?;
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(Table { name: name.to_string(), columns, rows })
}

/// Entities of an object tree: a top-level array of objects is one entity
/// named `name`; a top-level object contributes one entity per key holding
/// an array of objects.
pub fn read_json(name: &str, text: &str) -> Result<Vec<Table>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Malformed(format!("{name}: {e}")))?;
    let mut tables = Vec::new();
    match &doc {
        Value::Array(items) => {
            if let Some(records) = object_records(items) {
                tables.push(records_to_table(name, records));
            }
        }
        Value::Object(map) => {
            for (key, value) in map {
                if let Some(records) = value.as_array().and_then(|items| object_records(items)) {
                    tables.push(records_to_table(key, records));
                }
            }
        }
        _ => {}
    }
    Ok(tables)
}

fn object_records(items: &[Value]) -> Option<Vec<&Map<String, Value>>> {
    if items.is_empty() {
        return None;
    }
    items.iter().map(Value::as_object).collect()
}

fn records_to_table(name: &str, records: Vec<&Map<String, Value>>) -> Table {
    let flat: Vec<Vec<(String, String)>> = records
        .into_iter()
        .map(|record| {
            let mut out = Vec::new();
            flatten_json("", record, 1, &mut out);
            out
        })
        .collect();
    build_table(name, flat)
}

fn flatten_json(prefix: &str, map: &Map<String, Value>, depth: usize, out: &mut Vec<(String, String)>) {
    for (key, value) in map {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match value {
            Value::Object(inner) if depth < MAX_FLATTEN_DEPTH => flatten_json(&path, inner, depth + 1, out),
            other => out.push((path, json_cell(other))),
        }
    }
}

fn json_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.trim().to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

/// Union of keys in first-seen order; absent keys become empty (null) cells.
fn build_table(name: &str, records: Vec<Vec<(String, String)>>) -> Table {
    let mut columns: Vec<String> = Vec::new();
    for record in &records {
        for (key, _) in record {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
    }
    let rows = records
        .into_iter()
        .map(|record| {
            columns
                .iter()
                .map(|c| record.iter().find(|(k, _)| k == c).map(|(_, v)| v.clone()).unwrap_or_default())
                .collect()
        })
        .collect();
    Table { name: name.to_string(), columns, rows }
}

/// Entities of a markup document: child elements of the root, grouped by
/// tag name, that carry attributes or child elements. Columns are `@attr`
/// for attributes and dotted element paths for nested text.
type Record = Vec<(String, String)>;

pub fn read_markup(name: &str, text: &str) -> Result<Vec<Table>> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Malformed(format!("{name}: {e}")))?;
    let mut groups: Vec<(String, Vec<Record>)> = Vec::new();
    for child in doc.root_element().children().filter(|n| n.is_element()) {
        let has_structure = child.attributes().len() > 0 || child.children().any(|c| c.is_element());
        if !has_structure {
            continue;
        }
        let tag = child.tag_name().name().to_string();
        let mut record = Vec::new();
        flatten_element("", child, 1, &mut record);
        match groups.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, records)) => records.push(record),
            None => groups.push((tag, vec![record])),
        }
    }
    Ok(groups.into_iter().map(|(tag, records)| build_table(&tag, records)).collect())
}

fn flatten_element(prefix: &str, node: roxmltree::Node<'_, '_>, depth: usize, out: &mut Vec<(String, String)>) {
    for attr in node.attributes() {
        let key = if prefix.is_empty() { format!("@{}", attr.name()) } else { format!("{prefix}.@{}", attr.name()) };
        out.push((key, attr.value().trim().to_string()));
    }
    for child in node.children().filter(|n| n.is_element()) {
        let tag = child.tag_name().name();
        let path = if prefix.is_empty() { tag.to_string() } else { format!("{prefix}.{tag}") };
        let nested = child.children().any(|c| c.is_element()) || child.attributes().len() > 0;
        if nested && depth < MAX_FLATTEN_DEPTH {
            flatten_element(&path, child, depth + 1, out);
            let own: String = child.children().filter(|c| c.is_text()).filter_map(|c| c.text()).collect();
            if !own.trim().is_empty() {
                out.push((path, own.trim().to_string()));
            }
        } else {
            let text: String = child.descendants().filter(|d| d.is_text()).filter_map(|d| d.text()).collect();
            out.push((path, text.trim().to_string()));
        }
    }
}

/// Regular, non-hidden files of a directory in name order.
pub fn member_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .filter(|p| !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.')))
        .collect();
    files.sort();
    Ok(files)
}
