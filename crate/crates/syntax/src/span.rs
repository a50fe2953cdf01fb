//! Source positions.

use std::fmt;

/// A region of one source file.
///
/// Lines and columns are 1-based; columns count code points. The end
/// position is exclusive. `lo`/`hi` are the matching byte offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SourceSpan {
    pub file_id: u32,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub lo: u32,
    pub hi: u32,
}

impl SourceSpan {
    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        let (start, end) = (self.min_start(other), self.max_end(other));
        SourceSpan {
            file_id: self.file_id,
            start_line: start.0,
            start_col: start.1,
            lo: start.2,
            end_line: end.0,
            end_col: end.1,
            hi: end.2,
        }
    }

    fn min_start(self, o: SourceSpan) -> (u32, u32, u32) {
        if self.lo <= o.lo {
            (self.start_line, self.start_col, self.lo)
        } else {
            (o.start_line, o.start_col, o.lo)
        }
    }

    fn max_end(self, o: SourceSpan) -> (u32, u32, u32) {
        if self.hi >= o.hi {
            (self.end_line, self.end_col, self.hi)
        } else {
            (o.end_line, o.end_col, o.hi)
        }
    }

    /// True when `inner` lies within `self`.
    pub fn contains(&self, inner: &SourceSpan) -> bool {
        self.file_id == inner.file_id && self.lo <= inner.lo && inner.hi <= self.hi
    }

    pub fn is_well_formed(&self) -> bool {
        self.lo <= self.hi
            && (self.start_line, self.start_col) <= (self.end_line, self.end_col)
            && self.start_line >= 1
            && self.start_col >= 1
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

/// Maps file ids to their names and contents.
#[derive(Debug, Default, Clone)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, text: impl Into<String>) -> u32 {
        self.files.push(SourceFile {
            name: name.into(),
            text: text.into(),
        });
        (self.files.len() - 1) as u32
    }

    pub fn get(&self, file_id: u32) -> Option<&SourceFile> {
        self.files.get(file_id as usize)
    }

    pub fn name(&self, file_id: u32) -> &str {
        self.get(file_id).map(|f| f.name.as_str()).unwrap_or("<unknown>")
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}
