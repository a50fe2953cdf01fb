//! CSV and JSONL ingestion. Row numbers in errors are 1-based file lines,
//! so the CSV header is row 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde_json::Value;

use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::DataError;

enum Buf {
    Int(Vec<i64>),
    F32(Vec<f32>),
}

impl Buf {
    fn new(kind: ColumnKind) -> Buf {
        if kind.is_int() {
            Buf::Int(Vec::new())
        } else {
            Buf::F32(Vec::new())
        }
    }

    fn into_column(self, name: &str, kind: ColumnKind) -> Column {
        match self {
            Buf::Int(v) => Column::ints(name, kind, v),
            Buf::F32(v) => Column::floats(name, kind, v),
        }
    }
}

fn parse_cell(cell: &str, kind: ColumnKind, buf: &mut Buf, row: usize, col: &str) -> Result<(), DataError> {
    let bad = |what: &str| DataError::schema(row, format!("column `{col}`: {what} `{cell}`"));
    let parts: Vec<&str> = cell.split_whitespace().collect();
    match (kind, buf) {
        (ColumnKind::IntScalar, Buf::Int(v)) => {
            v.push(cell.trim().parse().map_err(|_| bad("expected an integer, found"))?);
        }
        (ColumnKind::F32Scalar, Buf::F32(v)) => {
            v.push(cell.trim().parse().map_err(|_| bad("expected a number, found"))?);
        }
        (ColumnKind::IntSeq(len), Buf::Int(v)) => {
            if parts.len() > len {
                return Err(bad(&format!("more than {len} ids in")));
            }
            for p in &parts {
                v.push(p.parse().map_err(|_| bad("expected integer ids, found"))?);
            }
            v.extend(std::iter::repeat_n(0, len - parts.len()));
        }
        (ColumnKind::F32Vec(dim), Buf::F32(v)) => {
            if parts.len() != dim {
                return Err(bad(&format!("expected {dim} numbers, found")));
            }
            for p in &parts {
                v.push(p.parse().map_err(|_| bad("expected numbers, found"))?);
            }
        }
        _ => unreachable!("buffer built from kind"),
    }
    Ok(())
}

/// Reads a CSV file with a header row. `schema` picks columns by header
/// name; sequence and vector cells hold whitespace-separated numbers.
pub fn load_csv(path: &Path, schema: &[(String, ColumnKind)]) -> Result<Dataset, DataError> {
    if schema.is_empty() {
        return Err(DataError::Invalid("loadCsv needs a non-empty schema".into()));
    }
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| DataError::schema(1, e.to_string()))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DataError::schema(1, "missing header row"));
    }
    let mut positions = Vec::with_capacity(schema.len());
    for (name, _) in schema {
        let pos = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::schema(1, format!("header has no column `{name}`")))?;
        positions.push(pos);
    }
    let mut bufs: Vec<Buf> = schema.iter().map(|(_, k)| Buf::new(*k)).collect();
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(rows + 2, |p| p.line() as usize);
            DataError::schema(row, e.to_string())
        })?;
        let row = rec.position().map_or(rows + 2, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(DataError::schema(
                row,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        for (((name, kind), &pos), buf) in schema.iter().zip(&positions).zip(&mut bufs) {
            parse_cell(&rec[pos], *kind, buf, row, name)?;
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::Invalid(format!("`{}` has no data rows", path.display())));
    }
    Dataset::new(
        bufs.into_iter()
            .zip(schema)
            .map(|(b, (name, kind))| b.into_column(name, *kind))
            .collect(),
    )
}

enum Shape {
    Scalar,
    Array(usize),
}

fn numbers(v: &Value) -> Option<(Shape, Vec<&serde_json::Number>)> {
    match v {
        Value::Number(n) => Some((Shape::Scalar, vec![n])),
        Value::Array(items) => {
            let ns: Option<Vec<_>> = items.iter().map(|x| x.as_number()).collect();
            ns.map(|ns| (Shape::Array(items.len()), ns))
        }
        _ => None,
    }
}

/// Reads one JSON object per line. Keys become columns in sorted order;
/// a column is integer when every value is an integer. Integer arrays are
/// padded with 0 to the longest row; float arrays must all share a length.
pub fn load_jsonl(path: &Path) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut objects: Vec<(usize, BTreeMap<String, Value>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line).map_err(|e| DataError::schema(row, e.to_string()))?;
        match v {
            Value::Object(map) => objects.push((row, map.into_iter().collect())),
            _ => return Err(DataError::schema(row, "expected a JSON object")),
        }
    }
    let (first_row, first) = objects
        .first()
        .ok_or_else(|| DataError::Invalid(format!("`{}` has no rows", path.display())))?;
    if first.is_empty() {
        return Err(DataError::schema(*first_row, "object has no keys"));
    }
    let keys: Vec<String> = first.keys().cloned().collect();
    let mut columns = Vec::with_capacity(keys.len());
    for key in &keys {
        let mut all_int = true;
        let mut any_array = false;
        let mut any_scalar = false;
        let mut widths = Vec::with_capacity(objects.len());
        for (row, obj) in &objects {
            if obj.len() != keys.len() {
                return Err(DataError::schema(
                    *row,
                    format!("expected keys {keys:?}, found {:?}", obj.keys().collect::<Vec<_>>()),
                ));
            }
            let v = obj
                .get(key)
                .ok_or_else(|| DataError::schema(*row, format!("missing key `{key}`")))?;
            let (shape, ns) = numbers(v).ok_or_else(|| {
                DataError::schema(*row, format!("`{key}` must be a number or an array of numbers"))
            })?;
            all_int &= ns.iter().all(|n| n.is_i64());
            match shape {
                Shape::Scalar => any_scalar = true,
                Shape::Array(w) => {
                    any_array = true;
                    widths.push((*row, w));
                }
            }
        }
        if any_array && any_scalar {
            let row = objects[widths.len().min(objects.len() - 1)].0;
            return Err(DataError::schema(row, format!("`{key}` mixes scalars and arrays")));
        }
        let kind = if any_scalar {
            if all_int {
                ColumnKind::IntScalar
            } else {
                ColumnKind::F32Scalar
            }
        } else if all_int {
            let max = widths.iter().map(|w| w.1).max().unwrap_or(0);
            if max == 0 {
                return Err(DataError::schema(*first_row, format!("`{key}` arrays are all empty")));
            }
            ColumnKind::IntSeq(max)
        } else {
            let w0 = widths[0].1;
            if let Some((row, w)) = widths.iter().find(|w| w.1 != w0) {
                return Err(DataError::schema(
                    *row,
                    format!("`{key}` has length {w}, expected {w0}"),
                ));
            }
            if w0 == 0 {
                return Err(DataError::schema(*first_row, format!("`{key}` arrays are all empty")));
            }
            ColumnKind::F32Vec(w0)
        };
        let mut buf = Buf::new(kind);
        for (_, obj) in &objects {
            let (_, ns) = numbers(&obj[key]).expect("validated above");
            match &mut buf {
                Buf::Int(v) => {
                    v.extend(ns.iter().map(|n| n.as_i64().expect("integer column")));
                    v.extend(std::iter::repeat_n(0, kind.width() - ns.len()));
                }
                Buf::F32(v) => v.extend(ns.iter().map(|n| n.as_f64().unwrap_or(f64::NAN) as f32)),
            }
        }
        columns.push(buf.into_column(key, kind));
    }
    Dataset::new(columns)
}
