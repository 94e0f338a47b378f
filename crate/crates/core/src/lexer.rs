//! Tokenizer for the C subset.
//!
//! Three things distinguish it from a stock C lexer:
//! - `#pragma omp ...` lines (including `\` continuations) become a single
//!   [`TokenKind::Pragma`] token carrying the raw directive text;
//! - `#define NAME <int>` lines are recorded and later uses of `NAME` are
//!   folded into integer literals on the spot;
//! - all other preprocessor lines (`#include`, non-omp pragmas, ...) are
//!   discarded, as are comments.

use crate::errors::CompileError;
use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    IntLit(i64),
    FloatLit(f64),
    StrLit(String),
    /// Raw pragma text starting at the directive name, e.g.
    /// `omp parallel for reduction(+:sum)`.
    Pragma(String),

    KwInt,
    KwLong,
    KwFloat,
    KwDouble,
    KwVoid,
    KwIf,
    KwElse,
    KwFor,
    KwWhile,
    KwReturn,

    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Comma,

    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PercentAssign,
    PlusPlus,
    MinusMinus,

    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Not,
    /// Lexed so the parser can reject address-of / bitwise-and with a
    /// precise message.
    Amp,

    Eof,
}

impl TokenKind {
    /// Short human-readable name used in parse error messages.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(n) => format!("identifier `{n}`"),
            TokenKind::IntLit(v) => format!("integer literal `{v}`"),
            TokenKind::FloatLit(v) => format!("float literal `{v}`"),
            TokenKind::StrLit(_) => "string literal".to_string(),
            TokenKind::Pragma(_) => "#pragma".to_string(),
            TokenKind::KwInt => "`int`".to_string(),
            TokenKind::KwLong => "`long`".to_string(),
            TokenKind::KwFloat => "`float`".to_string(),
            TokenKind::KwDouble => "`double`".to_string(),
            TokenKind::KwVoid => "`void`".to_string(),
            TokenKind::KwIf => "`if`".to_string(),
            TokenKind::KwElse => "`else`".to_string(),
            TokenKind::KwFor => "`for`".to_string(),
            TokenKind::KwWhile => "`while`".to_string(),
            TokenKind::KwReturn => "`return`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::Semi => "`;`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Assign => "`=`".to_string(),
            TokenKind::PlusAssign => "`+=`".to_string(),
            TokenKind::MinusAssign => "`-=`".to_string(),
            TokenKind::StarAssign => "`*=`".to_string(),
            TokenKind::SlashAssign => "`/=`".to_string(),
            TokenKind::PercentAssign => "`%=`".to_string(),
            TokenKind::PlusPlus => "`++`".to_string(),
            TokenKind::MinusMinus => "`--`".to_string(),
            TokenKind::Plus => "`+`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Star => "`*`".to_string(),
            TokenKind::Slash => "`/`".to_string(),
            TokenKind::Percent => "`%`".to_string(),
            TokenKind::EqEq => "`==`".to_string(),
            TokenKind::NotEq => "`!=`".to_string(),
            TokenKind::Lt => "`<`".to_string(),
            TokenKind::Le => "`<=`".to_string(),
            TokenKind::Gt => "`>`".to_string(),
            TokenKind::Ge => "`>=`".to_string(),
            TokenKind::AndAnd => "`&&`".to_string(),
            TokenKind::OrOr => "`||`".to_string(),
            TokenKind::Not => "`!`".to_string(),
            TokenKind::Amp => "`&`".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

/// Tokenize `source`, folding `#define` constants and collapsing each
/// `#pragma omp` line into a single token.
pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, CompileError> {
    Lexer::new(source, file).run()
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: &'a str,
    defines: Vec<(String, i64)>,
    tokens: Vec<Token>,
    /// True until a non-whitespace token is seen on the current line;
    /// preprocessor directives are only legal in that position.
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(source: &str, file: &'a str) -> Lexer<'a> {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            file,
            defines: Vec::new(),
            tokens: Vec::new(),
            at_line_start: true,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
            self.at_line_start = true;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_here(&self, length: u32) -> SourceSpan {
        SourceSpan::new(self.file, self.line, self.col, length)
    }

    fn err(&self, span: SourceSpan, message: impl Into<String>) -> CompileError {
        CompileError::Lex { span, message: message.into() }
    }

    fn push(&mut self, kind: TokenKind, span: SourceSpan) {
        self.tokens.push(Token { kind, span });
        self.at_line_start = false;
    }

    fn run(mut self) -> Result<Vec<Token>, CompileError> {
        while let Some(c) = self.peek() {
            if c == '\n' || c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '/' && self.peek2() == Some('/') {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == '/' && self.peek2() == Some('*') {
                let open = self.span_here(2);
                self.bump();
                self.bump();
                loop {
                    match self.peek() {
                        Some('*') if self.peek2() == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            self.bump();
                        }
                        None => return Err(self.err(open, "unterminated block comment")),
                    }
                }
                continue;
            }
            if c == '#' {
                if !self.at_line_start {
                    let span = self.span_here(1);
                    return Err(self.err(span, "`#` is only valid at the start of a line"));
                }
                self.preprocessor_line()?;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                self.ident_or_keyword();
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && self.peek2().is_some_and(|d| d.is_ascii_digit()))
            {
                self.number()?;
                continue;
            }
            if c == '"' {
                self.string_literal()?;
                continue;
            }
            self.punct()?;
        }
        let span = self.span_here(0);
        self.tokens.push(Token { kind: TokenKind::Eof, span });
        Ok(self.tokens)
    }

    /// Consume the rest of the current line, honoring `\` continuations.
    /// Returns the collected text (continuations replaced by a space).
    fn rest_of_line(&mut self) -> String {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c == '\\' {
                // A backslash at end-of-line continues the directive.
                let mut look = self.pos + 1;
                while self.chars.get(look).is_some_and(|&d| d == ' ' || d == '\t' || d == '\r') {
                    look += 1;
                }
                if self.chars.get(look) == Some(&'\n') {
                    while self.pos <= look {
                        self.bump();
                    }
                    text.push(' ');
                    continue;
                }
            }
            if c == '\n' {
                break;
            }
            text.push(c);
            self.bump();
        }
        text
    }

    fn preprocessor_line(&mut self) -> Result<(), CompileError> {
        let start_span = self.span_here(1);
        self.bump(); // '#'
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.bump();
        }
        let mut directive = String::new();
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            directive.push(self.bump().unwrap());
        }
        match directive.as_str() {
            "pragma" => {
                let line = self.line;
                let col = start_span.column;
                let text = self.rest_of_line();
                let text = text.trim().to_string();
                if text == "omp" || text.starts_with("omp ") || text.starts_with("omp\t") {
                    let span = SourceSpan::new(self.file, line, col, text.chars().count() as u32);
                    self.push(TokenKind::Pragma(text), span);
                    self.at_line_start = true;
                }
                // Non-OpenMP pragmas are discarded like other directives.
                Ok(())
            }
            "define" => {
                let text = self.rest_of_line();
                self.parse_define(&text, start_span)
            }
            _ => {
                // #include and friends carry no meaning for the subset.
                self.rest_of_line();
                Ok(())
            }
        }
    }

    fn parse_define(&mut self, text: &str, span: SourceSpan) -> Result<(), CompileError> {
        let mut it = text.trim().split_whitespace();
        let name = it.next().unwrap_or("");
        let value = it.next().unwrap_or("");
        let extra = it.next();
        let valid_name = !name.is_empty()
            && name.chars().next().unwrap().is_ascii_alphabetic()
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid_name || extra.is_some() {
            return Err(self.err(span, format!("unsupported #define form `{}`", text.trim())));
        }
        let parsed = if let Some(hex) = value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
            i64::from_str_radix(hex, 16).ok()
        } else {
            value.parse::<i64>().ok()
        };
        match parsed {
            Some(v) => {
                self.defines.retain(|(n, _)| n != name);
                self.defines.push((name.to_string(), v));
                Ok(())
            }
            None => Err(self.err(
                span,
                format!("#define {name} must expand to an integer constant, got `{value}`"),
            )),
        }
    }

    fn ident_or_keyword(&mut self) {
        let line = self.line;
        let col = self.col;
        let mut name = String::new();
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            name.push(self.bump().unwrap());
        }
        let span = SourceSpan::new(self.file, line, col, name.chars().count() as u32);
        let kind = match name.as_str() {
            "int" => TokenKind::KwInt,
            "long" => TokenKind::KwLong,
            "float" => TokenKind::KwFloat,
            "double" => TokenKind::KwDouble,
            "void" => TokenKind::KwVoid,
            "if" => TokenKind::KwIf,
            "else" => TokenKind::KwElse,
            "for" => TokenKind::KwFor,
            "while" => TokenKind::KwWhile,
            "return" => TokenKind::KwReturn,
            _ => {
                if let Some((_, v)) = self.defines.iter().find(|(n, _)| *n == name) {
                    TokenKind::IntLit(*v)
                } else {
                    TokenKind::Ident(name)
                }
            }
        };
        self.push(kind, span);
    }

    fn number(&mut self) -> Result<(), CompileError> {
        let line = self.line;
        let col = self.col;
        let mut text = String::new();
        let mut is_float = false;

        if self.peek() == Some('0') && matches!(self.peek2(), Some('x') | Some('X')) {
            self.bump();
            self.bump();
            let mut hex = String::new();
            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                hex.push(self.bump().unwrap());
            }
            if hex.is_empty() {
                let span = self.span_here(1);
                return Err(self.err(span, "expected hexadecimal digits after `0x`"));
            }
            self.int_suffix();
            self.reject_trailing_ident_char()?;
            let value = i64::from_str_radix(&hex, 16).map_err(|_| {
                self.err(
                    SourceSpan::new(self.file, line, col, (hex.len() + 2) as u32),
                    "hexadecimal literal out of range",
                )
            })?;
            let span = SourceSpan::new(self.file, line, col, (hex.len() + 2) as u32);
            self.push(TokenKind::IntLit(value), span);
            return Ok(());
        }

        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            text.push(self.bump().unwrap());
        }
        if self.peek() == Some('.') {
            is_float = true;
            text.push(self.bump().unwrap());
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                text.push(self.bump().unwrap());
            }
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            // Only an exponent if followed by digits (or sign + digits).
            let mut look = self.pos + 1;
            if matches!(self.chars.get(look), Some('+') | Some('-')) {
                look += 1;
            }
            if self.chars.get(look).is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                text.push(self.bump().unwrap());
                if matches!(self.peek(), Some('+') | Some('-')) {
                    text.push(self.bump().unwrap());
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    text.push(self.bump().unwrap());
                }
            }
        }

        if is_float {
            if matches!(self.peek(), Some('f') | Some('F') | Some('l') | Some('L')) {
                self.bump();
            }
        } else {
            self.int_suffix();
        }
        self.reject_trailing_ident_char()?;

        let span = SourceSpan::new(self.file, line, col, text.chars().count() as u32);
        if is_float {
            let value: f64 = text
                .parse()
                .map_err(|_| self.err(span.clone(), format!("malformed float literal `{text}`")))?;
            self.push(TokenKind::FloatLit(value), span);
        } else {
            let value: i64 = text
                .parse()
                .map_err(|_| self.err(span.clone(), format!("integer literal `{text}` out of range")))?;
            self.push(TokenKind::IntLit(value), span);
        }
        Ok(())
    }

    fn int_suffix(&mut self) {
        while matches!(self.peek(), Some('u') | Some('U') | Some('l') | Some('L')) {
            self.bump();
        }
    }

    fn reject_trailing_ident_char(&mut self) -> Result<(), CompileError> {
        if self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            let span = self.span_here(1);
            return Err(self.err(
                span,
                format!("unexpected character `{}` in numeric literal", self.peek().unwrap()),
            ));
        }
        Ok(())
    }

    fn string_literal(&mut self) -> Result<(), CompileError> {
        let line = self.line;
        let col = self.col;
        let open = self.span_here(1);
        self.bump(); // '"'
        let mut value = String::new();
        let mut raw_len = 2u32;
        loop {
            match self.peek() {
                None | Some('\n') => return Err(self.err(open, "unterminated string literal")),
                Some('"') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    raw_len += 2;
                    let esc = self
                        .bump()
                        .ok_or_else(|| self.err(open.clone(), "unterminated string literal"))?;
                    match esc {
                        'n' => value.push('\n'),
                        't' => value.push('\t'),
                        '\\' => value.push('\\'),
                        '"' => value.push('"'),
                        '0' => value.push('\0'),
                        other => {
                            let span = self.span_here(1);
                            return Err(
                                self.err(span, format!("unsupported escape sequence `\\{other}`"))
                            );
                        }
                    }
                }
                Some(c) => {
                    value.push(c);
                    raw_len += 1;
                    self.bump();
                }
            }
        }
        let span = SourceSpan::new(self.file, line, col, raw_len);
        self.push(TokenKind::StrLit(value), span);
        Ok(())
    }

    fn punct(&mut self) -> Result<(), CompileError> {
        let line = self.line;
        let col = self.col;
        let c = self.peek().unwrap();
        let two = |l: &Lexer| l.peek2();
        let (kind, len) = match (c, two(self)) {
            ('+', Some('+')) => (TokenKind::PlusPlus, 2),
            ('-', Some('-')) => (TokenKind::MinusMinus, 2),
            ('+', Some('=')) => (TokenKind::PlusAssign, 2),
            ('-', Some('=')) => (TokenKind::MinusAssign, 2),
            ('*', Some('=')) => (TokenKind::StarAssign, 2),
            ('/', Some('=')) => (TokenKind::SlashAssign, 2),
            ('%', Some('=')) => (TokenKind::PercentAssign, 2),
            ('=', Some('=')) => (TokenKind::EqEq, 2),
            ('!', Some('=')) => (TokenKind::NotEq, 2),
            ('<', Some('=')) => (TokenKind::Le, 2),
            ('>', Some('=')) => (TokenKind::Ge, 2),
            ('&', Some('&')) => (TokenKind::AndAnd, 2),
            ('|', Some('|')) => (TokenKind::OrOr, 2),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('*', _) => (TokenKind::Star, 1),
            ('/', _) => (TokenKind::Slash, 1),
            ('%', _) => (TokenKind::Percent, 1),
            ('=', _) => (TokenKind::Assign, 1),
            ('<', _) => (TokenKind::Lt, 1),
            ('>', _) => (TokenKind::Gt, 1),
            ('!', _) => (TokenKind::Not, 1),
            ('&', _) => (TokenKind::Amp, 1),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            ('[', _) => (TokenKind::LBracket, 1),
            (']', _) => (TokenKind::RBracket, 1),
            ('{', _) => (TokenKind::LBrace, 1),
            ('}', _) => (TokenKind::RBrace, 1),
            (';', _) => (TokenKind::Semi, 1),
            (',', _) => (TokenKind::Comma, 1),
            _ => {
                let span = self.span_here(1);
                return Err(self.err(span, format!("unexpected character `{c}`")));
            }
        };
        for _ in 0..len {
            self.bump();
        }
        let span = SourceSpan::new(self.file, line, col, len);
        self.push(kind, span);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src, "test.c").unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn basic_tokens() {
        let ks = kinds("int a = 3; a += 2;");
        assert_eq!(
            ks,
            vec![
                TokenKind::KwInt,
                TokenKind::Ident("a".into()),
                TokenKind::Assign,
                TokenKind::IntLit(3),
                TokenKind::Semi,
                TokenKind::Ident("a".into()),
                TokenKind::PlusAssign,
                TokenKind::IntLit(2),
                TokenKind::Semi,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn pragma_line_is_one_token() {
        let ks = kinds("#pragma omp parallel for reduction(+:sum)\nfor");
        assert_eq!(
            ks,
            vec![
                TokenKind::Pragma("omp parallel for reduction(+:sum)".into()),
                TokenKind::KwFor,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn pragma_continuation_lines_merge() {
        let ks = kinds("#pragma omp parallel for \\\n    schedule(static)\nx");
        match &ks[0] {
            TokenKind::Pragma(text) => {
                assert!(text.contains("parallel for"));
                assert!(text.contains("schedule(static)"));
            }
            other => panic!("expected pragma token, got {other:?}"),
        }
    }

    #[test]
    fn define_folds_to_int_literal() {
        let ks = kinds("#define N 64\nint a[N];");
        assert_eq!(
            ks,
            vec![
                TokenKind::KwInt,
                TokenKind::Ident("a".into()),
                TokenKind::LBracket,
                TokenKind::IntLit(64),
                TokenKind::RBracket,
                TokenKind::Semi,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn include_and_foreign_pragmas_are_discarded() {
        let ks = kinds("#include <stdio.h>\n#pragma once\nint x;");
        assert_eq!(ks, vec![TokenKind::KwInt, TokenKind::Ident("x".into()), TokenKind::Semi, TokenKind::Eof]);
    }

    #[test]
    fn comments_are_skipped() {
        let ks = kinds("int /* inline */ x; // trailing\nx = 1;");
        assert_eq!(ks.len(), 8);
    }

    #[test]
    fn malformed_hex_errors_at_offending_column() {
        let err = tokenize("0x@", "test.c").unwrap_err();
        match err {
            CompileError::Lex { span, .. } => {
                assert_eq!(span.line, 1);
                assert_eq!(span.column, 3);
            }
            other => panic!("expected lex error, got {other:?}"),
        }
    }

    #[test]
    fn float_forms() {
        let ks = kinds("1.5 2. .5 1e3 2.5e-2 3.0f");
        let floats: Vec<f64> = ks
            .iter()
            .filter_map(|k| match k {
                TokenKind::FloatLit(v) => Some(*v),
                _ => None,
            })
            .collect();
        assert_eq!(floats, vec![1.5, 2.0, 0.5, 1000.0, 0.025, 3.0]);
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let toks = tokenize("int a;\n  a = 1;", "test.c").unwrap();
        let a_use = &toks[3];
        assert_eq!(a_use.span.line, 2);
        assert_eq!(a_use.span.column, 3);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("\"abc", "t.c").is_err());
    }

    #[test]
    fn non_integer_define_is_rejected() {
        assert!(tokenize("#define F 1.5\n", "t.c").is_err());
        assert!(tokenize("#define SQ(x) x*x\n", "t.c").is_err());
    }
}
