//! In-memory columnar datasets and batch iteration.

use std::fmt;

use mlang_tensor::{SplitMix64, Tensor};

use crate::error::DataError;

pub const DEFAULT_BATCH_SIZE: usize = 32;

/// Column layout. Sequences are padded with id 0 to their fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    IntSeq(usize),
    F32Vec(usize),
    IntScalar,
    F32Scalar,
}

impl ColumnKind {
    pub fn width(self) -> usize {
        match self {
            ColumnKind::IntSeq(n) | ColumnKind::F32Vec(n) => n,
            ColumnKind::IntScalar | ColumnKind::F32Scalar => 1,
        }
    }

    pub fn is_int(self) -> bool {
        matches!(self, ColumnKind::IntSeq(_) | ColumnKind::IntScalar)
    }

    /// Parses `int_scalar`, `f32_scalar`, `int_seq(L)` or `f32_vec(D)`.
    pub fn parse(s: &str) -> Option<ColumnKind> {
        let s = s.trim();
        match s {
            "int_scalar" => return Some(ColumnKind::IntScalar),
            "f32_scalar" => return Some(ColumnKind::F32Scalar),
            _ => {}
        }
        let (head, rest) = s.split_once('(')?;
        let n: usize = rest.strip_suffix(')')?.trim().parse().ok()?;
        if n == 0 {
            return None;
        }
        match head.trim() {
            "int_seq" => Some(ColumnKind::IntSeq(n)),
            "f32_vec" => Some(ColumnKind::F32Vec(n)),
            _ => None,
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::IntSeq(n) => write!(f, "int_seq({n})"),
            ColumnKind::F32Vec(n) => write!(f, "f32_vec({n})"),
            ColumnKind::IntScalar => f.write_str("int_scalar"),
            ColumnKind::F32Scalar => f.write_str("f32_scalar"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Int(Vec<i64>),
    F32(Vec<f32>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Int(v) => v.len(),
            ColumnData::F32(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Row-major, `kind.width()` values per row.
    pub data: ColumnData,
}

impl Column {
    pub fn ints(name: &str, kind: ColumnKind, data: Vec<i64>) -> Column {
        Column {
            name: name.to_string(),
            kind,
            data: ColumnData::Int(data),
        }
    }

    pub fn floats(name: &str, kind: ColumnKind, data: Vec<f32>) -> Column {
        Column {
            name: name.to_string(),
            kind,
            data: ColumnData::F32(data),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        let w = self.kind.width();
        let data = match &self.data {
            ColumnData::Int(v) => {
                ColumnData::Int(rows.iter().flat_map(|&r| v[r * w..(r + 1) * w].iter().copied()).collect())
            }
            ColumnData::F32(v) => {
                ColumnData::F32(rows.iter().flat_map(|&r| v[r * w..(r + 1) * w].iter().copied()).collect())
            }
        };
        Column {
            name: self.name.clone(),
            kind: self.kind,
            data,
        }
    }

    /// Values of the given rows as a tensor of shape (rows) for scalar
    /// columns or (rows × width) otherwise.
    pub fn tensor(&self, rows: &[usize]) -> Tensor {
        let sel = self.select(rows);
        let shape = match self.kind {
            ColumnKind::IntScalar | ColumnKind::F32Scalar => vec![rows.len()],
            k => vec![rows.len(), k.width()],
        };
        match sel.data {
            ColumnData::Int(v) => Tensor::from_ints(shape, &v),
            ColumnData::F32(v) => Tensor::new(shape, v),
        }
        .expect("column tensor shape")
    }

    /// Row `r` as f64 values, for metrics and tests.
    pub fn row_f64(&self, r: usize) -> Vec<f64> {
        let w = self.kind.width();
        match &self.data {
            ColumnData::Int(v) => v[r * w..(r + 1) * w].iter().map(|&x| x as f64).collect(),
            ColumnData::F32(v) => v[r * w..(r + 1) * w].iter().map(|&x| x as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: usize,
    batch_size: usize,
    shuffle_seed: Option<u64>,
}

/// One batch: a tensor per column, in column order.
#[derive(Debug, Clone)]
pub struct Batch {
    pub fields: Vec<(String, Tensor)>,
}

impl Batch {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn names(&self) -> Vec<&str> {
        self.fields.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.fields.first().map_or(0, |(_, t)| t.shape()[0])
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Dataset, DataError> {
        let first = columns
            .first()
            .ok_or_else(|| DataError::Invalid("a dataset needs at least one column".into()))?;
        let w = first.kind.width();
        let rows = first.data.len() / w;
        for c in &columns {
            let w = c.kind.width();
            if c.data.len() != rows * w {
                return Err(DataError::Invalid(format!(
                    "column `{}` has {} values, expected {}",
                    c.name,
                    c.data.len(),
                    rows * w
                )));
            }
            let int_data = matches!(c.data, ColumnData::Int(_));
            if int_data != c.kind.is_int() {
                return Err(DataError::Invalid(format!(
                    "column `{}` storage does not match kind {}",
                    c.name, c.kind
                )));
            }
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|d| d.name == c.name) {
                return Err(DataError::Invalid(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(Dataset {
            columns,
            rows,
            batch_size: DEFAULT_BATCH_SIZE,
            shuffle_seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn shuffle_seed(&self) -> Option<u64> {
        self.shuffle_seed
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn schema(&self) -> Vec<(String, ColumnKind)> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.kind))
            .collect()
    }

    pub fn with_batch_size(&self, n: usize) -> Result<Dataset, DataError> {
        if n == 0 {
            return Err(DataError::Invalid("batch size must be positive".into()));
        }
        Ok(Dataset {
            batch_size: n,
            ..self.clone()
        })
    }

    pub fn with_shuffle(&self, seed: Option<u64>) -> Dataset {
        Dataset {
            shuffle_seed: seed,
            ..self.clone()
        }
    }

    /// The rows in `rows`, in that order. Batch settings carry over.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            rows: rows.len(),
            batch_size: self.batch_size,
            shuffle_seed: self.shuffle_seed,
        }
    }

    /// Iteration order: identity, or a Fisher–Yates permutation from the
    /// shuffle seed.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rows).collect();
        if let Some(seed) = self.shuffle_seed {
            SplitMix64::new(seed).shuffle(&mut idx);
        }
        idx
    }

    pub fn batch_count(&self) -> usize {
        self.rows.div_ceil(self.batch_size)
    }

    /// Row indices of each batch, in iteration order.
    pub fn batch_rows(&self) -> Vec<Vec<usize>> {
        self.order()
            .chunks(self.batch_size)
            .map(|c| c.to_vec())
            .collect()
    }

    pub fn batch(&self, rows: &[usize]) -> Batch {
        Batch {
            fields: self
                .columns
                .iter()
                .map(|c| (c.name.clone(), c.tensor(rows)))
                .collect(),
        }
    }

    pub fn batches(&self) -> Vec<Batch> {
        self.batch_rows().iter().map(|r| self.batch(r)).collect()
    }
}
