//! Execution engines: the sequential reference interpreter, the
//! deterministic message-passing simulator, and the differential checker
//! that compares them.

pub mod diff;
pub mod interp;
pub mod sim;
pub mod value;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::span::SourceSpan;
use value::Value;

/// Runtime bindings for global variables, keyed by name. Globals follow C
/// semantics (zero-initialized unless declared with an initializer);
/// bindings override either.
pub type Inputs = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("{span}: division by zero")]
    DivByZero { span: SourceSpan },

    #[error("{span}: index {index} out of bounds for `{var}` (extent {extent})")]
    OutOfBounds { span: SourceSpan, var: String, index: i64, extent: i64 },

    #[error("step limit of {limit} exceeded (possible runaway loop)")]
    StepLimit { limit: u64 },

    #[error("invalid input binding for `{name}`: {message}")]
    BadInput { name: String, message: String },

    #[error("{span}: {message}")]
    Invalid { span: SourceSpan, message: String },
}

/// One `printf` execution: the format string and the evaluated arguments.
/// Differential checks compare these value-for-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrintEvent {
    pub format: String,
    pub values: Vec<Value>,
}

impl PrintEvent {
    /// Render the event the way C's printf would (the conversions the
    /// subset supports: %d, %ld, %f, %lf, %e, %g, %%).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let chars: Vec<char> = self.format.chars().collect();
        let mut args = self.values.iter();
        let mut i = 0;
        while i < chars.len() {
            if chars[i] != '%' {
                out.push(chars[i]);
                i += 1;
                continue;
            }
            if chars.get(i + 1) == Some(&'%') {
                out.push('%');
                i += 2;
                continue;
            }
            // Scan the conversion: flags/width/precision then the letter.
            let mut j = i + 1;
            while j < chars.len() && !chars[j].is_ascii_alphabetic() {
                j += 1;
            }
            // Length modifiers (l, ll) then the conversion character.
            while j < chars.len() && (chars[j] == 'l' || chars[j] == 'h') {
                j += 1;
            }
            let conv = chars.get(j).copied().unwrap_or('d');
            let arg = args.next();
            match (conv, arg) {
                ('d' | 'i' | 'u', Some(v)) => {
                    let _ = std::fmt::Write::write_fmt(&mut out, format_args!("{}", v.as_int()));
                }
                ('f', Some(v)) => {
                    let _ = std::fmt::Write::write_fmt(
                        &mut out,
                        format_args!("{:.6}", v.as_float()),
                    );
                }
                ('e', Some(v)) => {
                    let _ = std::fmt::Write::write_fmt(
                        &mut out,
                        format_args!("{:.6e}", v.as_float()),
                    );
                }
                ('g', Some(v)) => {
                    let _ = std::fmt::Write::write_fmt(&mut out, format_args!("{}", v.as_float()));
                }
                (_, Some(v)) => {
                    let _ = std::fmt::Write::write_fmt(&mut out, format_args!("{v:?}"));
                }
                (_, None) => out.push('?'),
            }
            i = j + 1;
        }
        out
    }
}
