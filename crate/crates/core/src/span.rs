//! Source locations attached to tokens, AST nodes, and diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-open region of an input file, identified by its starting
/// line/column (both 1-based) and its length in bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line: u32, column: u32, length: u32) -> Self {
        SourceSpan { file: file.into(), line, column, length }
    }

    /// Span used for nodes synthesized by the compiler rather than parsed.
    pub fn synthetic() -> Self {
        SourceSpan { file: "<generated>".to_string(), line: 0, column: 0, length: 0 }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}
