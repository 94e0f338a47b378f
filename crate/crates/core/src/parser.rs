//! Recursive-descent parser for the C subset.
//!
//! The parser resolves names while it goes (so the AST carries [`VarId`]s),
//! enforces the subset boundary with precise [`CompileError::Unsupported`]
//! diagnostics, and attaches each `#pragma omp parallel for` to the single
//! `for` statement it governs.
//!
//! Subset rules enforced here rather than later:
//! - exactly one function definition (the entry function), no parameters;
//! - names are program-unique: shadowing and duplicate declarations are
//!   rejected, which lets every later pass use a flat symbol table;
//! - `for` headers always have the canonical three parts over one iterator;
//! - pragma blocks do not nest, and `return` may only appear as the last
//!   top-level statement of the entry function.

use std::collections::HashMap;

use crate::ast::*;
use crate::errors::{CompileError, Warning};
use crate::lexer::{tokenize, Token, TokenKind};
use crate::span::SourceSpan;

/// A parsed program plus non-fatal diagnostics collected along the way.
#[derive(Debug, Clone)]
pub struct ParseOutput {
    pub program: Program,
    pub warnings: Vec<Warning>,
}

/// Tokenize and parse a full translation unit.
pub fn parse(source: &str, file: &str) -> Result<ParseOutput, CompileError> {
    let tokens = tokenize(source, file)?;
    parse_translation_unit(tokens, file)
}

/// Parse a token stream produced by [`tokenize`].
pub fn parse_translation_unit(tokens: Vec<Token>, file: &str) -> Result<ParseOutput, CompileError> {
    Parser::new(tokens, file).run()
}

/// C keywords that are legal C but outside the subset. Seeing one in
/// statement or declaration position yields `UnsupportedConstruct`.
const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "goto", "switch", "case", "default", "break", "continue", "do", "struct", "union", "enum",
    "typedef", "static", "extern", "const", "unsigned", "signed", "char", "short", "sizeof",
    "auto", "register", "volatile",
];

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    file: &'a str,
    vars: Vec<VarDecl>,
    globals: Vec<VarId>,
    /// Innermost-last stack of visible declarations.
    scopes: Vec<HashMap<String, VarId>>,
    /// Every name ever declared, for the program-unique-names rule.
    all_names: HashMap<String, VarId>,
    functions: Vec<FunctionDef>,
    warnings: Vec<Warning>,
    next_block_id: usize,
    in_pragma_body: bool,
}

impl<'a> Parser<'a> {
    fn new(tokens: Vec<Token>, file: &'a str) -> Parser<'a> {
        Parser {
            tokens,
            pos: 0,
            file,
            vars: Vec::new(),
            globals: Vec::new(),
            scopes: vec![HashMap::new()],
            all_names: HashMap::new(),
            functions: Vec::new(),
            warnings: Vec::new(),
            next_block_id: 0,
            in_pragma_body: false,
        }
    }

    // ---- token helpers ------------------------------------------------

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, off: usize) -> &TokenKind {
        let i = (self.pos + off).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, CompileError> {
        if self.peek() == &kind {
            Ok(self.bump())
        } else {
            Err(self.parse_err(kind.describe()))
        }
    }

    fn parse_err(&self, expected: impl Into<String>) -> CompileError {
        CompileError::Parse {
            span: self.span(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn unsupported(&self, construct: impl Into<String>) -> CompileError {
        CompileError::Unsupported { span: self.span(), construct: construct.into() }
    }

    // ---- scopes -------------------------------------------------------

    fn declare(
        &mut self,
        name: String,
        kind: ScalarKind,
        dims: Vec<i64>,
        init: Option<Expr>,
        scope: VarScope,
        span: SourceSpan,
    ) -> Result<VarId, CompileError> {
        if self.all_names.contains_key(&name) {
            return Err(CompileError::Unsupported {
                span,
                construct: format!("redeclaration of `{name}` (shadowing and duplicate names)"),
            });
        }
        let id = self.vars.len();
        self.vars.push(VarDecl { name: name.clone(), kind, dims, init, scope, span, synthetic: false });
        self.all_names.insert(name.clone(), id);
        self.scopes.last_mut().unwrap().insert(name, id);
        if scope == VarScope::Global {
            self.globals.push(id);
        }
        Ok(id)
    }

    fn resolve(&self, name: &str) -> Option<VarId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn resolve_or_err(&self, name: &str, span: &SourceSpan) -> Result<VarId, CompileError> {
        self.resolve(name).ok_or_else(|| CompileError::Parse {
            span: span.clone(),
            expected: "a declared variable".to_string(),
            found: format!("undeclared identifier `{name}`"),
        })
    }

    // ---- top level ----------------------------------------------------

    fn run(mut self) -> Result<ParseOutput, CompileError> {
        loop {
            match self.peek() {
                TokenKind::Eof => break,
                TokenKind::KwInt
                | TokenKind::KwLong
                | TokenKind::KwFloat
                | TokenKind::KwDouble
                | TokenKind::KwVoid => {
                    // `kind ident (` starts a function; anything else is a
                    // global declaration.
                    if matches!(self.peek_at(1), TokenKind::Ident(_))
                        && self.peek_at(2) == &TokenKind::LParen
                    {
                        self.function_def()?;
                    } else {
                        self.global_decl()?;
                    }
                }
                TokenKind::Pragma(_) => {
                    return Err(CompileError::Parse {
                        span: self.span(),
                        expected: "a declaration or function definition".to_string(),
                        found: "a pragma outside any function".to_string(),
                    });
                }
                TokenKind::Ident(name) => {
                    if UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
                        return Err(self.unsupported(format!("`{name}`")));
                    }
                    return Err(self.parse_err("a declaration or function definition"));
                }
                TokenKind::Star => return Err(self.unsupported("pointer declarator")),
                _ => return Err(self.parse_err("a declaration or function definition")),
            }
        }
        if self.functions.is_empty() {
            return Err(CompileError::Parse {
                span: self.span(),
                expected: "an entry function definition".to_string(),
                found: "end of input".to_string(),
            });
        }
        let program = Program {
            file: self.file.to_string(),
            vars: self.vars,
            globals: self.globals,
            functions: self.functions,
        };
        Ok(ParseOutput { program, warnings: self.warnings })
    }

    fn scalar_kind(&mut self) -> Result<ScalarKind, CompileError> {
        let kind = match self.peek() {
            TokenKind::KwInt => ScalarKind::Int,
            TokenKind::KwLong => ScalarKind::Long,
            TokenKind::KwFloat => ScalarKind::Float,
            TokenKind::KwDouble => ScalarKind::Double,
            _ => return Err(self.parse_err("a type name")),
        };
        self.bump();
        Ok(kind)
    }

    fn global_decl(&mut self) -> Result<(), CompileError> {
        let kind = self.scalar_kind()?;
        loop {
            self.declarator(kind, VarScope::Global)?;
            if self.eat(&TokenKind::Comma) {
                continue;
            }
            self.expect(TokenKind::Semi)?;
            break;
        }
        Ok(())
    }

    /// `ident ([extent]){0,2} (= init)?` — shared by globals and locals.
    fn declarator(&mut self, kind: ScalarKind, scope: VarScope) -> Result<VarId, CompileError> {
        if self.peek() == &TokenKind::Star {
            return Err(self.unsupported("pointer declarator"));
        }
        let span = self.span();
        let name = match self.bump().kind {
            TokenKind::Ident(n) => n,
            _ => {
                return Err(CompileError::Parse {
                    span,
                    expected: "a variable name".to_string(),
                    found: self.tokens[self.pos - 1].kind.describe(),
                })
            }
        };
        if UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
            return Err(CompileError::Unsupported { span, construct: format!("`{name}`") });
        }
        let mut dims = Vec::new();
        while self.peek() == &TokenKind::LBracket {
            if dims.len() == 2 {
                return Err(self.unsupported("arrays of rank greater than 2"));
            }
            self.bump();
            let extent_span = self.span();
            let extent_expr = self.expr()?;
            self.expect(TokenKind::RBracket)?;
            let extent = const_eval_int(&extent_expr).ok_or_else(|| CompileError::Parse {
                span: extent_span.clone(),
                expected: "a constant array extent".to_string(),
                found: "a non-constant expression".to_string(),
            })?;
            if extent <= 0 {
                return Err(CompileError::Parse {
                    span: extent_span,
                    expected: "a positive array extent".to_string(),
                    found: format!("{extent}"),
                });
            }
            dims.push(extent);
        }
        let init = if self.eat(&TokenKind::Assign) {
            if self.peek() == &TokenKind::LBrace {
                return Err(self.unsupported("aggregate initializer"));
            }
            let e = self.expr()?;
            if !dims.is_empty() {
                return Err(CompileError::Parse {
                    span: e.span().clone(),
                    expected: "no initializer on an array declaration".to_string(),
                    found: "an initializer".to_string(),
                });
            }
            if scope == VarScope::Global && const_eval_num(&e).is_none() {
                return Err(CompileError::Parse {
                    span: e.span().clone(),
                    expected: "a constant global initializer".to_string(),
                    found: "a non-constant expression".to_string(),
                });
            }
            Some(e)
        } else {
            None
        };
        self.declare(name, kind, dims, init, scope, span)
    }

    fn function_def(&mut self) -> Result<(), CompileError> {
        let span = self.span();
        let ret_void = self.peek() == &TokenKind::KwVoid;
        if !ret_void && self.peek() != &TokenKind::KwInt {
            return Err(self.unsupported("entry function must return `int` or `void`"));
        }
        self.bump();
        let name = match self.bump().kind {
            TokenKind::Ident(n) => n,
            _ => return Err(self.parse_err("a function name")),
        };
        self.expect(TokenKind::LParen)?;
        if self.peek() == &TokenKind::KwVoid {
            self.bump();
        }
        if self.peek() != &TokenKind::RParen {
            return Err(self.unsupported("function parameters"));
        }
        self.bump();
        if !self.functions.is_empty() {
            return Err(CompileError::Unsupported {
                span,
                construct: "multiple function definitions".to_string(),
            });
        }
        self.expect(TokenKind::LBrace)?;
        self.scopes.push(HashMap::new());
        let mut body = Vec::new();
        while self.peek() != &TokenKind::RBrace {
            if self.peek() == &TokenKind::Eof {
                return Err(self.parse_err("`}`"));
            }
            let stmts = self.stmt()?;
            body.extend(stmts);
        }
        self.bump();
        self.scopes.pop();
        check_return_placement(&body)?;
        self.functions.push(FunctionDef { name, ret_void, body, span });
        Ok(())
    }

    // ---- statements ---------------------------------------------------

    /// Parse one statement. Returns an empty list for `;` and multiple
    /// statements for declarator lists like `int i, j;` (they must stay in
    /// the enclosing scope, so no block is introduced).
    fn stmt(&mut self) -> Result<Vec<Stmt>, CompileError> {
        match self.peek().clone() {
            TokenKind::Semi => {
                self.bump();
                Ok(Vec::new())
            }
            TokenKind::LBrace => {
                let span = self.span();
                let body = self.block()?;
                Ok(vec![Stmt::Block { body, span }])
            }
            TokenKind::KwInt | TokenKind::KwLong | TokenKind::KwFloat | TokenKind::KwDouble => {
                self.decl_stmt()
            }
            TokenKind::KwVoid => Err(self.unsupported("`void` in declaration")),
            TokenKind::Pragma(text) => {
                let span = self.span();
                self.bump();
                Ok(vec![self.pragma_stmt(&text, span)?])
            }
            TokenKind::KwIf => Ok(vec![self.if_stmt()?]),
            TokenKind::KwWhile => Ok(vec![self.while_stmt()?]),
            TokenKind::KwFor => {
                let f = self.for_stmt()?;
                Ok(vec![Stmt::For(Box::new(f))])
            }
            TokenKind::KwReturn => {
                let span = self.span();
                self.bump();
                let value =
                    if self.peek() == &TokenKind::Semi { None } else { Some(self.expr()?) };
                self.expect(TokenKind::Semi)?;
                Ok(vec![Stmt::Return { value, span }])
            }
            TokenKind::Ident(name) => {
                if UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
                    return Err(self.unsupported(format!("`{name}`")));
                }
                if name == "printf" {
                    return Ok(vec![self.printf_stmt()?]);
                }
                if intrinsic_by_name(&name).is_some() && self.peek_at(1) == &TokenKind::LParen {
                    let span = self.span();
                    let call = self.expr()?;
                    self.expect(TokenKind::Semi)?;
                    return Ok(vec![Stmt::CallStmt { call, span }]);
                }
                Ok(vec![self.assign_stmt()?])
            }
            TokenKind::Star => Err(self.unsupported("pointer dereference")),
            TokenKind::Amp => Err(self.unsupported("address-of")),
            TokenKind::PlusPlus | TokenKind::MinusMinus => {
                Err(self.unsupported("prefix increment/decrement"))
            }
            _ => Err(self.parse_err("a statement")),
        }
    }

    /// `{ stmt* }` with its own scope; the brace pair is consumed.
    fn block(&mut self) -> Result<Vec<Stmt>, CompileError> {
        self.expect(TokenKind::LBrace)?;
        self.scopes.push(HashMap::new());
        let mut body = Vec::new();
        while self.peek() != &TokenKind::RBrace {
            if self.peek() == &TokenKind::Eof {
                return Err(self.parse_err("`}`"));
            }
            let stmts = self.stmt()?;
            body.extend(stmts);
        }
        self.bump();
        self.scopes.pop();
        Ok(body)
    }

    /// A statement in branch/loop-body position; `{...}` bodies are inlined
    /// into a plain statement list (names stay unique, so flattening the
    /// scope is safe).
    fn body(&mut self) -> Result<Vec<Stmt>, CompileError> {
        if self.peek() == &TokenKind::LBrace {
            self.block()
        } else {
            self.stmt()
        }
    }

    fn decl_stmt(&mut self) -> Result<Vec<Stmt>, CompileError> {
        let kind = self.scalar_kind()?;
        let mut decls = Vec::new();
        loop {
            let var = self.declarator(kind, VarScope::Local)?;
            decls.push(Stmt::Decl { var, span: self.vars[var].span.clone() });
            if self.eat(&TokenKind::Comma) {
                continue;
            }
            self.expect(TokenKind::Semi)?;
            break;
        }
        Ok(decls)
    }

    fn if_stmt(&mut self) -> Result<Stmt, CompileError> {
        let span = self.span();
        self.bump();
        self.expect(TokenKind::LParen)?;
        let cond = self.expr()?;
        self.expect(TokenKind::RParen)?;
        let then_body = self.body()?;
        let else_body =
            if self.eat(&TokenKind::KwElse) { self.body()? } else { Vec::new() };
        Ok(Stmt::If { cond, then_body, else_body, span })
    }

    fn while_stmt(&mut self) -> Result<Stmt, CompileError> {
        let span = self.span();
        self.bump();
        self.expect(TokenKind::LParen)?;
        let cond = self.expr()?;
        self.expect(TokenKind::RParen)?;
        let body = self.body()?;
        Ok(Stmt::While { cond, body, span })
    }

    fn for_stmt(&mut self) -> Result<ForStmt, CompileError> {
        let span = self.span();
        self.expect(TokenKind::KwFor)?;
        self.expect(TokenKind::LParen)?;
        self.scopes.push(HashMap::new());

        // init: `i = e` or `kind i = e`
        let init = match self.peek().clone() {
            TokenKind::KwInt | TokenKind::KwLong => {
                let kind = self.scalar_kind()?;
                let dspan = self.span();
                let name = match self.bump().kind {
                    TokenKind::Ident(n) => n,
                    _ => return Err(self.parse_err("an iterator name")),
                };
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                let var = self.declare(name, kind, Vec::new(), Some(value), VarScope::Local, dspan)?;
                ForInit::Decl { var }
            }
            TokenKind::KwFloat | TokenKind::KwDouble => {
                return Err(self.unsupported("non-integer loop iterator"));
            }
            TokenKind::Ident(name) => {
                let ispan = self.span();
                self.bump();
                let var = self.resolve_or_err(&name, &ispan)?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                if self.vars[var].is_array() {
                    return Err(CompileError::Parse {
                        span: ispan,
                        expected: "a scalar loop iterator".to_string(),
                        found: format!("array `{name}`"),
                    });
                }
                ForInit::Assign { var, value }
            }
            _ => return Err(self.parse_err("a loop initialization")),
        };
        let iter_var = init.var();
        if self.vars[iter_var].kind.is_float() {
            return Err(self.unsupported("non-integer loop iterator"));
        }
        self.expect(TokenKind::Semi)?;

        let cond = self.expr()?;
        self.expect(TokenKind::Semi)?;

        // step: `i++`, `i--`, `i op= e`, `i = e`
        let step_span = self.span();
        let step_name = match self.bump().kind {
            TokenKind::Ident(n) => n,
            _ => {
                return Err(CompileError::Parse {
                    span: step_span,
                    expected: "the loop iterator in the step clause".to_string(),
                    found: self.tokens[self.pos - 1].kind.describe(),
                })
            }
        };
        let step_var = self.resolve_or_err(&step_name, &step_span)?;
        if step_var != iter_var {
            return Err(CompileError::Parse {
                span: step_span,
                expected: "the loop init and step to target the same variable".to_string(),
                found: format!("`{step_name}`"),
            });
        }
        let step = match self.bump().kind {
            TokenKind::PlusPlus => {
                ForStep { var: step_var, op: AssignOp::Add, value: Expr::int(1), span: step_span }
            }
            TokenKind::MinusMinus => {
                ForStep { var: step_var, op: AssignOp::Sub, value: Expr::int(1), span: step_span }
            }
            TokenKind::PlusAssign => {
                ForStep { var: step_var, op: AssignOp::Add, value: self.expr()?, span: step_span }
            }
            TokenKind::MinusAssign => {
                ForStep { var: step_var, op: AssignOp::Sub, value: self.expr()?, span: step_span }
            }
            TokenKind::StarAssign => {
                ForStep { var: step_var, op: AssignOp::Mul, value: self.expr()?, span: step_span }
            }
            TokenKind::SlashAssign => {
                ForStep { var: step_var, op: AssignOp::Div, value: self.expr()?, span: step_span }
            }
            TokenKind::Assign => {
                ForStep { var: step_var, op: AssignOp::Set, value: self.expr()?, span: step_span }
            }
            other => {
                return Err(CompileError::Parse {
                    span: self.tokens[self.pos - 1].span.clone(),
                    expected: "a loop step (`++`, `--`, `+=`, `-=` or `=`)".to_string(),
                    found: other.describe(),
                })
            }
        };
        self.expect(TokenKind::RParen)?;
        let body = self.body()?;
        self.scopes.pop();
        Ok(ForStmt { init, cond, step, body, span })
    }

    fn pragma_stmt(&mut self, text: &str, span: SourceSpan) -> Result<Stmt, CompileError> {
        if self.in_pragma_body {
            return Err(CompileError::Unsupported {
                span,
                construct: "nested `parallel for` regions".to_string(),
            });
        }
        let (directive, mut warnings) = parse_omp_pragma(text, span.clone())?;
        self.warnings.append(&mut warnings);
        if self.peek() != &TokenKind::KwFor {
            return Err(CompileError::Parse {
                span: self.span(),
                expected: "a `for` loop immediately after `#pragma omp parallel for`".to_string(),
                found: self.peek().describe(),
            });
        }
        self.in_pragma_body = true;
        let for_stmt = self.for_stmt();
        self.in_pragma_body = false;
        let for_stmt = for_stmt?;

        // Resolve clause variable lists against the enclosing scope; the
        // loop iterator itself is also accepted.
        let iter = for_stmt.iterator();
        let lookup = |p: &Parser, n: &str, cspan: &SourceSpan| -> Result<VarId, CompileError> {
            if p.vars[iter].name == n {
                return Ok(iter);
            }
            p.resolve_or_err(n, cspan)
        };
        let mut reductions = Vec::new();
        if let Some(r) = &directive.reduction {
            for name in &r.vars {
                let id = lookup(self, name, &directive.span)?;
                if self.vars[id].is_array() {
                    return Err(CompileError::Pragma {
                        span: directive.span.clone(),
                        message: format!("reduction variable `{name}` must be a scalar"),
                    });
                }
                reductions.push((id, r.op));
            }
        }
        let mut private_vars = Vec::new();
        for name in &directive.private_list {
            private_vars.push(lookup(self, name, &directive.span)?);
        }
        let mut shared_vars = Vec::new();
        for name in &directive.shared_list {
            shared_vars.push(lookup(self, name, &directive.span)?);
        }

        let block_id = self.next_block_id;
        self.next_block_id += 1;
        Ok(Stmt::Pragma(Box::new(PragmaBlock {
            block_id,
            directive,
            reductions,
            private_vars,
            shared_vars,
            for_stmt,
            span,
        })))
    }

    fn printf_stmt(&mut self) -> Result<Stmt, CompileError> {
        let span = self.span();
        self.bump(); // printf
        self.expect(TokenKind::LParen)?;
        let fspan = self.span();
        let format = match self.bump().kind {
            TokenKind::StrLit(s) => s,
            other => {
                return Err(CompileError::Parse {
                    span: fspan,
                    expected: "a format string literal".to_string(),
                    found: other.describe(),
                })
            }
        };
        let mut args = Vec::new();
        while self.eat(&TokenKind::Comma) {
            args.push(self.expr()?);
        }
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)?;
        let specs = count_format_specifiers(&format);
        if specs != args.len() {
            return Err(CompileError::Parse {
                span: fspan,
                expected: format!("{specs} printf argument(s) to match the format string"),
                found: format!("{}", args.len()),
            });
        }
        Ok(Stmt::Print { format, args, span })
    }

    fn assign_stmt(&mut self) -> Result<Stmt, CompileError> {
        let span = self.span();
        let target = self.lvalue()?;
        let op = match self.peek() {
            TokenKind::Assign => AssignOp::Set,
            TokenKind::PlusAssign => AssignOp::Add,
            TokenKind::MinusAssign => AssignOp::Sub,
            TokenKind::StarAssign => AssignOp::Mul,
            TokenKind::SlashAssign => AssignOp::Div,
            TokenKind::PercentAssign => AssignOp::Rem,
            TokenKind::PlusPlus => {
                self.bump();
                self.expect(TokenKind::Semi)?;
                return Ok(Stmt::Assign { target, op: AssignOp::Add, value: Expr::int(1), span });
            }
            TokenKind::MinusMinus => {
                self.bump();
                self.expect(TokenKind::Semi)?;
                return Ok(Stmt::Assign { target, op: AssignOp::Sub, value: Expr::int(1), span });
            }
            _ => return Err(self.parse_err("an assignment operator")),
        };
        self.bump();
        let value = self.expr()?;
        self.expect(TokenKind::Semi)?;
        Ok(Stmt::Assign { target, op, value, span })
    }

    fn lvalue(&mut self) -> Result<LValue, CompileError> {
        let span = self.span();
        let name = match self.bump().kind {
            TokenKind::Ident(n) => n,
            other => {
                return Err(CompileError::Parse {
                    span,
                    expected: "an assignable variable".to_string(),
                    found: other.describe(),
                })
            }
        };
        let var = self.resolve_or_err(&name, &span)?;
        let indices = self.subscripts(var, &span)?;
        Ok(LValue { var, indices, span })
    }

    /// Parse `[e]` subscripts and check their count against the array rank.
    fn subscripts(&mut self, var: VarId, span: &SourceSpan) -> Result<Vec<Expr>, CompileError> {
        let mut indices = Vec::new();
        while self.peek() == &TokenKind::LBracket {
            self.bump();
            indices.push(self.expr()?);
            self.expect(TokenKind::RBracket)?;
        }
        let rank = self.vars[var].dims.len();
        if indices.len() != rank {
            return Err(CompileError::Parse {
                span: span.clone(),
                expected: format!(
                    "{} subscript(s) on `{}` (rank {})",
                    rank, self.vars[var].name, rank
                ),
                found: format!("{}", indices.len()),
            });
        }
        Ok(indices)
    }

    // ---- expressions ----------------------------------------------------

    fn expr(&mut self) -> Result<Expr, CompileError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &TokenKind::OrOr {
            let span = self.span();
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary { op: BinOp::Or, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.eq_expr()?;
        while self.peek() == &TokenKind::AndAnd {
            let span = self.span();
            self.bump();
            let rhs = self.eq_expr()?;
            lhs = Expr::Binary { op: BinOp::And, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn eq_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.rel_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::NotEq => BinOp::Ne,
                _ => break,
            };
            let span = self.span();
            self.bump();
            let rhs = self.rel_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn rel_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                _ => break,
            };
            let span = self.span();
            self.bump();
            let rhs = self.add_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            let span = self.span();
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                TokenKind::Percent => BinOp::Rem,
                _ => break,
            };
            let span = self.span();
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, CompileError> {
        match self.peek() {
            TokenKind::Minus => {
                let span = self.span();
                self.bump();
                let operand = self.unary_expr()?;
                Ok(Expr::Unary { op: UnaryOp::Neg, operand: Box::new(operand), span })
            }
            TokenKind::Not => {
                let span = self.span();
                self.bump();
                let operand = self.unary_expr()?;
                Ok(Expr::Unary { op: UnaryOp::Not, operand: Box::new(operand), span })
            }
            TokenKind::Amp => Err(self.unsupported("address-of")),
            TokenKind::Star => Err(self.unsupported("pointer dereference")),
            _ => self.primary_expr(),
        }
    }

    fn primary_expr(&mut self) -> Result<Expr, CompileError> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::IntLit(value) => {
                self.bump();
                Ok(Expr::IntLit { value, span })
            }
            TokenKind::FloatLit(value) => {
                self.bump();
                Ok(Expr::FloatLit { value, span })
            }
            TokenKind::LParen => {
                self.bump();
                // `(int)x` style casts are outside the subset.
                if matches!(
                    self.peek(),
                    TokenKind::KwInt | TokenKind::KwLong | TokenKind::KwFloat | TokenKind::KwDouble
                ) {
                    return Err(self.unsupported("type cast"));
                }
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.bump();
                if let Some(intrinsic) = intrinsic_by_name(&name) {
                    if self.peek() == &TokenKind::LParen {
                        self.bump();
                        let mut args = Vec::new();
                        if self.peek() != &TokenKind::RParen {
                            loop {
                                args.push(self.expr()?);
                                if !self.eat(&TokenKind::Comma) {
                                    break;
                                }
                            }
                        }
                        self.expect(TokenKind::RParen)?;
                        if args.len() != intrinsic.arity() {
                            return Err(CompileError::Parse {
                                span,
                                expected: format!(
                                    "{} argument(s) to `{}`",
                                    intrinsic.arity(),
                                    intrinsic.name()
                                ),
                                found: format!("{}", args.len()),
                            });
                        }
                        return Ok(Expr::Call { intrinsic, args, span });
                    }
                }
                if self.peek() == &TokenKind::LParen {
                    return Err(self.unsupported(format!("call to non-intrinsic function `{name}`")));
                }
                let var = self.resolve_or_err(&name, &span)?;
                if self.vars[var].is_array() {
                    let indices = self.subscripts(var, &span)?;
                    Ok(Expr::Index { base: var, indices, span })
                } else {
                    if self.peek() == &TokenKind::LBracket {
                        return Err(CompileError::Parse {
                            span,
                            expected: "no subscript on a scalar".to_string(),
                            found: format!("subscript on `{name}`"),
                        });
                    }
                    Ok(Expr::Var { id: var, span })
                }
            }
            TokenKind::StrLit(_) => Err(self.unsupported("string literal outside printf")),
            _ => Err(self.parse_err("an expression")),
        }
    }
}

/// `return` is only allowed as the final top-level statement of the entry
/// function; anywhere else the master/worker split could exit with the
/// message protocol half-finished.
fn check_return_placement(body: &[Stmt]) -> Result<(), CompileError> {
    let last = body.len().saturating_sub(1);
    for (i, s) in body.iter().enumerate() {
        if i == last && matches!(s, Stmt::Return { .. }) {
            continue;
        }
        let mut offending: Option<SourceSpan> = None;
        s.visit(&mut |inner| {
            if let Stmt::Return { span, .. } = inner {
                if offending.is_none() {
                    offending = Some(span.clone());
                }
            }
        });
        if let Some(span) = offending {
            return Err(CompileError::Unsupported {
                span,
                construct: "`return` before the end of the entry function".to_string(),
            });
        }
    }
    Ok(())
}

fn intrinsic_by_name(name: &str) -> Option<Intrinsic> {
    match name {
        "sqrt" => Some(Intrinsic::Sqrt),
        "fabs" => Some(Intrinsic::Fabs),
        "min" => Some(Intrinsic::Min),
        "max" => Some(Intrinsic::Max),
        _ => None,
    }
}

/// Number of `%` conversion specifiers in a printf format string.
fn count_format_specifiers(format: &str) -> usize {
    let chars: Vec<char> = format.chars().collect();
    let mut n = 0;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '%' {
            if chars.get(i + 1) == Some(&'%') {
                i += 2;
                continue;
            }
            n += 1;
        }
        i += 1;
    }
    n
}

/// Fold a constant integer expression (literals and arithmetic only).
pub fn const_eval_int(e: &Expr) -> Option<i64> {
    match e {
        Expr::IntLit { value, .. } => Some(*value),
        Expr::Unary { op: UnaryOp::Neg, operand, .. } => Some(const_eval_int(operand)?.wrapping_neg()),
        Expr::Binary { op, lhs, rhs, .. } => {
            let l = const_eval_int(lhs)?;
            let r = const_eval_int(rhs)?;
            match op {
                BinOp::Add => Some(l.wrapping_add(r)),
                BinOp::Sub => Some(l.wrapping_sub(r)),
                BinOp::Mul => Some(l.wrapping_mul(r)),
                BinOp::Div => {
                    if r == 0 {
                        None
                    } else {
                        Some(l.wrapping_div(r))
                    }
                }
                BinOp::Rem => {
                    if r == 0 {
                        None
                    } else {
                        Some(l.wrapping_rem(r))
                    }
                }
                _ => None,
            }
        }
        _ => None,
    }
}

/// Fold a constant numeric (int or float) expression; used to validate
/// global initializers.
pub fn const_eval_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::IntLit { value, .. } => Some(*value as f64),
        Expr::FloatLit { value, .. } => Some(*value),
        Expr::Unary { op: UnaryOp::Neg, operand, .. } => Some(-const_eval_num(operand)?),
        Expr::Binary { op, lhs, rhs, .. } => {
            let l = const_eval_num(lhs)?;
            let r = const_eval_num(rhs)?;
            match op {
                BinOp::Add => Some(l + r),
                BinOp::Sub => Some(l - r),
                BinOp::Mul => Some(l * r),
                BinOp::Div => Some(l / r),
                _ => None,
            }
        }
        _ => None,
    }
}

// ---- pragma parsing ---------------------------------------------------

/// Parse the text of a `#pragma omp ...` directive (everything after
/// `#pragma`). Unknown clauses produce a warning and are skipped; duplicate
/// or malformed known clauses are errors.
pub fn parse_omp_pragma(
    text: &str,
    span: SourceSpan,
) -> Result<(OmpDirective, Vec<Warning>), CompileError> {
    PragmaParser { toks: pragma_tokens(text), pos: 0, span, warnings: Vec::new() }.run()
}

#[derive(Debug, Clone, PartialEq)]
enum PTok {
    Ident(String),
    Int(i64),
    Sym(char),
}

fn pragma_tokens(text: &str) -> Vec<PTok> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                name.push(chars[i]);
                i += 1;
            }
            toks.push(PTok::Ident(name));
        } else if c.is_ascii_digit() {
            let mut n = 0i64;
            while i < chars.len() && chars[i].is_ascii_digit() {
                n = n.saturating_mul(10).saturating_add((chars[i] as u8 - b'0') as i64);
                i += 1;
            }
            toks.push(PTok::Int(n));
        } else {
            toks.push(PTok::Sym(c));
            i += 1;
        }
    }
    toks
}

struct PragmaParser {
    toks: Vec<PTok>,
    pos: usize,
    span: SourceSpan,
    warnings: Vec<Warning>,
}

impl PragmaParser {
    fn peek(&self) -> Option<&PTok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<PTok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> CompileError {
        CompileError::Pragma { span: self.span.clone(), message: message.into() }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), CompileError> {
        match self.bump() {
            Some(PTok::Sym(s)) if s == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self) -> Result<String, CompileError> {
        match self.bump() {
            Some(PTok::Ident(n)) => Ok(n),
            other => Err(self.err(format!("expected an identifier, found {other:?}"))),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, CompileError> {
        self.expect_sym('(')?;
        let mut names = vec![self.expect_ident()?];
        loop {
            match self.bump() {
                Some(PTok::Sym(',')) => names.push(self.expect_ident()?),
                Some(PTok::Sym(')')) => break,
                other => return Err(self.err(format!("expected `,` or `)`, found {other:?}"))),
            }
        }
        Ok(names)
    }

    /// Skip a parenthesized argument (balanced) following an unknown clause.
    fn skip_parens(&mut self) {
        if self.peek() != Some(&PTok::Sym('(')) {
            return;
        }
        let mut depth = 0;
        while let Some(t) = self.bump() {
            match t {
                PTok::Sym('(') => depth += 1,
                PTok::Sym(')') => {
                    depth -= 1;
                    if depth == 0 {
                        return;
                    }
                }
                _ => {}
            }
        }
    }

    fn run(mut self) -> Result<(OmpDirective, Vec<Warning>), CompileError> {
        match self.bump() {
            Some(PTok::Ident(w)) if w == "omp" => {}
            _ => return Err(self.err("directive does not start with `omp`")),
        }
        match self.bump() {
            Some(PTok::Ident(w)) if w == "parallel" => {}
            Some(PTok::Ident(other)) => {
                return Err(CompileError::Unsupported {
                    span: self.span.clone(),
                    construct: format!("`#pragma omp {other}`"),
                })
            }
            _ => return Err(self.err("expected `parallel for`")),
        }
        match self.bump() {
            Some(PTok::Ident(w)) if w == "for" => {}
            Some(PTok::Ident(other)) => {
                return Err(CompileError::Unsupported {
                    span: self.span.clone(),
                    construct: format!("`#pragma omp parallel {other}`"),
                })
            }
            _ => return Err(self.err("expected `for` after `parallel`")),
        }

        let mut directive = OmpDirective {
            schedule: None,
            reduction: None,
            private_list: Vec::new(),
            shared_list: Vec::new(),
            target_device: None,
            span: self.span.clone(),
        };

        while let Some(tok) = self.bump() {
            let name = match tok {
                PTok::Ident(n) => n,
                PTok::Sym(',') => continue,
                other => return Err(self.err(format!("unexpected `{other:?}` in clause list"))),
            };
            match name.as_str() {
                "schedule" => {
                    if directive.schedule.is_some() {
                        return Err(self.err("duplicate `schedule` clause"));
                    }
                    self.expect_sym('(')?;
                    let kind_name = self.expect_ident()?;
                    let kind = match kind_name.as_str() {
                        "static" => Some(ScheduleKind::Static),
                        "dynamic" => Some(ScheduleKind::Dynamic),
                        "guided" => Some(ScheduleKind::Guided),
                        other => {
                            self.warnings.push(Warning::new(
                                self.span.clone(),
                                format!("ignoring unsupported schedule kind `{other}`"),
                            ));
                            None
                        }
                    };
                    let chunk = match self.bump() {
                        Some(PTok::Sym(')')) => None,
                        Some(PTok::Sym(',')) => {
                            let c = match self.bump() {
                                Some(PTok::Int(v)) => v,
                                other => {
                                    return Err(self.err(format!(
                                        "schedule chunk must be an integer constant, found {other:?}"
                                    )))
                                }
                            };
                            self.expect_sym(')')?;
                            Some(c)
                        }
                        other => {
                            return Err(self.err(format!("expected `,` or `)`, found {other:?}")))
                        }
                    };
                    if let Some(kind) = kind {
                        directive.schedule = Some(ScheduleClause { kind, chunk });
                    }
                }
                "reduction" => {
                    if directive.reduction.is_some() {
                        return Err(self.err("duplicate `reduction` clause"));
                    }
                    self.expect_sym('(')?;
                    let op = match self.bump() {
                        Some(PTok::Sym('+')) => ReductionOp::Add,
                        Some(PTok::Sym('-')) => ReductionOp::Sub,
                        Some(PTok::Sym('*')) => ReductionOp::Mul,
                        Some(PTok::Sym('/')) => ReductionOp::Div,
                        other => {
                            return Err(
                                self.err(format!("unsupported reduction operator {other:?}"))
                            )
                        }
                    };
                    self.expect_sym(':')?;
                    let mut vars = vec![self.expect_ident()?];
                    loop {
                        match self.bump() {
                            Some(PTok::Sym(',')) => vars.push(self.expect_ident()?),
                            Some(PTok::Sym(')')) => break,
                            other => {
                                return Err(
                                    self.err(format!("expected `,` or `)`, found {other:?}"))
                                )
                            }
                        }
                    }
                    directive.reduction = Some(ReductionClause { op, vars });
                }
                "private" => {
                    if !directive.private_list.is_empty() {
                        return Err(self.err("duplicate `private` clause"));
                    }
                    directive.private_list = self.ident_list()?;
                }
                "shared" => {
                    if !directive.shared_list.is_empty() {
                        return Err(self.err("duplicate `shared` clause"));
                    }
                    directive.shared_list = self.ident_list()?;
                }
                "target" => {
                    if directive.target_device.is_some() {
                        return Err(self.err("duplicate `target` clause"));
                    }
                    // `target device(name)` — historical spelling for
                    // offload-target selection.
                    if self.peek() == Some(&PTok::Ident("device".to_string())) {
                        self.bump();
                        self.expect_sym('(')?;
                        let device = self.expect_ident()?;
                        self.expect_sym(')')?;
                        directive.target_device = Some(device);
                    } else {
                        self.warnings.push(Warning::new(
                            self.span.clone(),
                            "ignoring `target` clause without `device(...)`".to_string(),
                        ));
                        self.skip_parens();
                    }
                }
                unknown => {
                    self.warnings.push(Warning::new(
                        self.span.clone(),
                        format!("ignoring unknown pragma clause `{unknown}`"),
                    ));
                    self.skip_parens();
                }
            }
        }
        Ok((directive, self.warnings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(src: &str) -> Program {
        parse(src, "test.c").unwrap().program
    }

    fn parse_err(src: &str) -> CompileError {
        parse(src, "test.c").unwrap_err()
    }

    const SMALL: &str = r#"
#define N 4
int x;
int sum;
int main() {
    int i;
    sum = 0;
    x = 2;
    #pragma omp parallel for reduction(+: sum)
    for (i = 0; i < N; i++) {
        sum = sum + x * i;
    }
    printf("%d\n", sum);
    return 0;
}
"#;

    #[test]
    fn parses_small_program() {
        let p = parse_ok(SMALL);
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.entry().name, "main");
        assert_eq!(p.globals.len(), 2);
        let blocks = p.pragma_blocks();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].block_id, 0);
        assert_eq!(blocks[0].reductions.len(), 1);
        let (var, op) = blocks[0].reductions[0];
        assert_eq!(p.var(var).name, "sum");
        assert_eq!(op, ReductionOp::Add);
    }

    #[test]
    fn pragma_block_wraps_exactly_one_for() {
        let err = parse_err(
            "int main() { int i; \n#pragma omp parallel for\n i = 0; }",
        );
        assert!(matches!(err, CompileError::Parse { .. }), "{err}");
    }

    #[test]
    fn define_folds_into_extents() {
        let p = parse_ok("#define N 8\nint a[N][N];\nint main() { a[0][0] = 1; return 0; }");
        let a = p.var(p.var_id("a").unwrap());
        assert_eq!(a.dims, vec![8, 8]);
    }

    #[test]
    fn rejects_goto_and_switch() {
        let e = parse_err("int main() { goto done; }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
        let e = parse_err("int main() { switch (1) {} }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }

    #[test]
    fn rejects_pointers() {
        let e = parse_err("int main() { int *p; }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }

    #[test]
    fn rejects_shadowing() {
        let e = parse_err("int x; int main() { int x; return 0; }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }

    #[test]
    fn rejects_nested_parallel_for() {
        let e = parse_err(
            "int main() { int i; int j;\n#pragma omp parallel for\nfor (i = 0; i < 4; i++) {\n#pragma omp parallel for\nfor (j = 0; j < 4; j++) { } } }",
        );
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }

    #[test]
    fn rejects_early_return() {
        let e = parse_err("int main() { return 0; int x; x = 1; }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
        let e = parse_err("int x; int main() { if (1) { return 0; } x = 1; return 0; }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }

    #[test]
    fn rejects_subscript_arity_mismatch() {
        let e = parse_err("int a[4][4]; int main() { a[1] = 0; return 0; }");
        assert!(matches!(e, CompileError::Parse { .. }), "{e}");
    }

    #[test]
    fn rejects_printf_arity_mismatch() {
        let e = parse_err("int main() { printf(\"%d %d\\n\", 1); return 0; }");
        assert!(matches!(e, CompileError::Parse { .. }), "{e}");
    }

    #[test]
    fn rejects_undeclared_variable() {
        let e = parse_err("int main() { y = 1; return 0; }");
        assert!(matches!(e, CompileError::Parse { .. }), "{e}");
    }

    #[test]
    fn pragma_clauses_parse() {
        let (d, warnings) = parse_omp_pragma(
            "omp parallel for schedule(dynamic) reduction(+: sum) private(a, b) shared(c)",
            SourceSpan::new("t.c", 1, 1, 1),
        )
        .unwrap();
        assert_eq!(d.schedule, Some(ScheduleClause { kind: ScheduleKind::Dynamic, chunk: None }));
        let r = d.reduction.unwrap();
        assert_eq!(r.op, ReductionOp::Add);
        assert_eq!(r.vars, vec!["sum"]);
        assert_eq!(d.private_list, vec!["a", "b"]);
        assert_eq!(d.shared_list, vec!["c"]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn pragma_schedule_chunk_and_target_device() {
        let (d, _) = parse_omp_pragma(
            "omp parallel for schedule(static, 16) target device(mpi)",
            SourceSpan::new("t.c", 1, 1, 1),
        )
        .unwrap();
        assert_eq!(d.schedule, Some(ScheduleClause { kind: ScheduleKind::Static, chunk: Some(16) }));
        assert_eq!(d.target_device.as_deref(), Some("mpi"));
    }

    #[test]
    fn unknown_clause_warns_and_is_ignored() {
        let (d, warnings) = parse_omp_pragma(
            "omp parallel for num_threads(4) collapse(2)",
            SourceSpan::new("t.c", 1, 1, 1),
        )
        .unwrap();
        assert!(d.schedule.is_none());
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].message.contains("num_threads"));
    }

    #[test]
    fn duplicate_clause_is_an_error() {
        let e = parse_omp_pragma(
            "omp parallel for schedule(static) schedule(dynamic)",
            SourceSpan::new("t.c", 1, 1, 1),
        )
        .unwrap_err();
        assert!(matches!(e, CompileError::Pragma { .. }), "{e}");
    }

    #[test]
    fn non_parallel_for_directive_is_unsupported() {
        let e = parse_omp_pragma("omp critical", SourceSpan::new("t.c", 1, 1, 1)).unwrap_err();
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }

    #[test]
    fn reduction_of_array_is_rejected() {
        let e = parse_err(
            "int a[4]; int main() { int i;\n#pragma omp parallel for reduction(+: a)\nfor (i = 0; i < 4; i++) { } return 0; }",
        );
        assert!(matches!(e, CompileError::Pragma { .. }), "{e}");
    }

    #[test]
    fn for_headers_are_normalized() {
        let p = parse_ok(
            "int main() { int i; int n; n = 9; for (i = 0; i < n; i = i + 3) { } return 0; }",
        );
        let body = &p.entry().body;
        let f = body.iter().find_map(|s| match s {
            Stmt::For(f) => Some(f),
            _ => None,
        });
        let f = f.unwrap();
        assert_eq!(f.step.op, AssignOp::Set);
    }

    #[test]
    fn multi_declarator_lines_flatten() {
        let p = parse_ok("int main() { int i, j, k; i = 0; j = i; k = j; return k; }");
        assert_eq!(p.vars.len(), 3);
    }

    #[test]
    fn global_initializer_must_be_constant() {
        let e = parse_err("int n; int m = n; int main() { return 0; }");
        assert!(matches!(e, CompileError::Parse { .. }), "{e}");
    }

    #[test]
    fn cast_is_unsupported() {
        let e = parse_err("int main() { int x; x = (int)1.5; return 0; }");
        assert!(matches!(e, CompileError::Unsupported { .. }), "{e}");
    }
}
