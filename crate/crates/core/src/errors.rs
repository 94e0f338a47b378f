//! Diagnostics shared across the pipeline.
//!
//! Every error carries the span it was raised at; `Display` renders the
//! conventional `file:line:column: message` shape so CLI output is directly
//! clickable in editors.

use std::fmt;

use thiserror::Error;

use crate::span::SourceSpan;

/// Errors raised while turning source text into an analyzed program.
#[derive(Debug, Clone, Error)]
pub enum CompileError {
    #[error("{span}: lexical error: {message}")]
    Lex { span: SourceSpan, message: String },

    #[error("{span}: parse error: expected {expected}, found {found}")]
    Parse { span: SourceSpan, expected: String, found: String },

    /// Legal C that is deliberately outside the accepted subset.
    #[error("{span}: unsupported construct: {construct}")]
    Unsupported { span: SourceSpan, construct: String },

    /// Malformed `#pragma omp` text (duplicate clauses, bad clause syntax, ...).
    #[error("{span}: invalid OpenMP pragma: {message}")]
    Pragma { span: SourceSpan, message: String },

    /// Raised by the analysis passes for inputs that parsed but cannot be
    /// reasoned about (e.g. a clause names a variable with no declaration).
    #[error("{span}: analysis error: {message}")]
    Analysis { span: SourceSpan, message: String },
}

impl CompileError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            CompileError::Lex { span, .. }
            | CompileError::Parse { span, .. }
            | CompileError::Unsupported { span, .. }
            | CompileError::Pragma { span, .. }
            | CompileError::Analysis { span, .. } => span,
        }
    }
}

/// Non-fatal diagnostic (unknown pragma clauses, ignored hints, clause
/// conflicts resolved conservatively). Collected during parsing/analysis and
/// surfaced on stderr by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Warning {
    pub span: SourceSpan,
    pub message: String,
}

impl Warning {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        Warning { span, message: message.into() }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.span, self.message)
    }
}
