//! Abstract syntax for the accepted C subset.
//!
//! The parser resolves every identifier while building the tree, so AST nodes
//! reference declarations by [`VarId`] (an index into [`Program::vars`])
//! rather than by name. Names are program-unique (the parser rejects
//! shadowing), which keeps later passes — classification, code generation,
//! and the flat per-rank environments of the simulator — free of scope logic.

use serde::{Deserialize, Serialize};

use crate::span::SourceSpan;

/// Index into [`Program::vars`].
pub type VarId = usize;

/// Scalar element types of the subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Int,
    Long,
    Float,
    Double,
}

impl ScalarKind {
    pub fn is_float(self) -> bool {
        matches!(self, ScalarKind::Float | ScalarKind::Double)
    }

    pub fn c_name(self) -> &'static str {
        match self {
            ScalarKind::Int => "int",
            ScalarKind::Long => "long",
            ScalarKind::Float => "float",
            ScalarKind::Double => "double",
        }
    }

    /// MPI datatype constant used when transferring values of this kind.
    pub fn mpi_name(self) -> &'static str {
        match self {
            ScalarKind::Int => "MPI_INT",
            ScalarKind::Long => "MPI_LONG",
            ScalarKind::Float => "MPI_FLOAT",
            ScalarKind::Double => "MPI_DOUBLE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarScope {
    Global,
    Local,
}

/// One declaration. `dims` is empty for scalars and holds one or two
/// constant, positive extents for arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub kind: ScalarKind,
    pub dims: Vec<i64>,
    pub init: Option<Expr>,
    pub scope: VarScope,
    pub span: SourceSpan,
    /// True for `_omp2dm_` helpers introduced by code generation.
    pub synthetic: bool,
}

impl VarDecl {
    pub fn is_array(&self) -> bool {
        !self.dims.is_empty()
    }

    /// Total element count (1 for scalars).
    pub fn elems(&self) -> i64 {
        self.dims.iter().product::<i64>().max(1)
    }

    /// Rows of the leading dimension (1 for scalars).
    pub fn rows(&self) -> i64 {
        self.dims.first().copied().unwrap_or(1)
    }

    /// Elements per row of the leading dimension.
    pub fn row_elems(&self) -> i64 {
        if self.dims.len() == 2 { self.dims[1] } else { 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }
}

/// The handful of math builtins the subset accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intrinsic {
    Sqrt,
    Fabs,
    Min,
    Max,
}

impl Intrinsic {
    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::Sqrt => "sqrt",
            Intrinsic::Fabs => "fabs",
            Intrinsic::Min => "min",
            Intrinsic::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Intrinsic::Sqrt | Intrinsic::Fabs => 1,
            Intrinsic::Min | Intrinsic::Max => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Expr {
    IntLit { value: i64, span: SourceSpan },
    FloatLit { value: f64, span: SourceSpan },
    Var { id: VarId, span: SourceSpan },
    /// `base[i]` or `base[i][j]`.
    Index { base: VarId, indices: Vec<Expr>, span: SourceSpan },
    Unary { op: UnaryOp, operand: Box<Expr>, span: SourceSpan },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr>, span: SourceSpan },
    Call { intrinsic: Intrinsic, args: Vec<Expr>, span: SourceSpan },
}

impl Expr {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Expr::IntLit { span, .. }
            | Expr::FloatLit { span, .. }
            | Expr::Var { span, .. }
            | Expr::Index { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Binary { span, .. }
            | Expr::Call { span, .. } => span,
        }
    }

    pub fn int(value: i64) -> Expr {
        Expr::IntLit { value, span: SourceSpan::synthetic() }
    }

    pub fn var(id: VarId) -> Expr {
        Expr::Var { id, span: SourceSpan::synthetic() }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span: SourceSpan::synthetic() }
    }

    pub fn call(intrinsic: Intrinsic, args: Vec<Expr>) -> Expr {
        Expr::Call { intrinsic, args, span: SourceSpan::synthetic() }
    }

    pub fn not(operand: Expr) -> Expr {
        Expr::Unary { op: UnaryOp::Not, operand: Box::new(operand), span: SourceSpan::synthetic() }
    }

    /// Walk the expression tree, visiting every node.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Index { indices, .. } => {
                for e in indices {
                    e.visit(f);
                }
            }
            Expr::Unary { operand, .. } => operand.visit(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Expr::Call { args, .. } => {
                for e in args {
                    e.visit(f);
                }
            }
            Expr::IntLit { .. } | Expr::FloatLit { .. } | Expr::Var { .. } => {}
        }
    }

    /// Does the expression mention `id`, either as a scalar or array base?
    pub fn mentions(&self, id: VarId) -> bool {
        let mut found = false;
        self.visit(&mut |e| match e {
            Expr::Var { id: v, .. } if *v == id => found = true,
            Expr::Index { base, .. } if *base == id => found = true,
            _ => {}
        });
        found
    }
}

/// Assignment operators: `=`, `+=`, `-=`, `*=`, `/=`, `%=`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
        }
    }

    /// The arithmetic a compound assignment applies, if any.
    pub fn bin_op(self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
            AssignOp::Rem => Some(BinOp::Rem),
        }
    }
}

/// Assignment target: a scalar or a subscripted array cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LValue {
    pub var: VarId,
    pub indices: Vec<Expr>,
    pub span: SourceSpan,
}

/// `for` initialization: either `i = e` (assignment to an existing variable)
/// or an inline declaration `int i = e` (initializer stored on the decl).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ForInit {
    Assign { var: VarId, value: Expr },
    Decl { var: VarId },
}

impl ForInit {
    pub fn var(&self) -> VarId {
        match self {
            ForInit::Assign { var, .. } | ForInit::Decl { var } => *var,
        }
    }
}

/// `for` step clause, normalized to compound-assignment shape:
/// `i++` parses as `(Add, 1)`, `i -= 2` as `(Sub, 2)`, `i = i * 2` as
/// `(Set, i * 2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForStep {
    pub var: VarId,
    pub op: AssignOp,
    pub value: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForStmt {
    pub init: ForInit,
    pub cond: Expr,
    pub step: ForStep,
    pub body: Vec<Stmt>,
    pub span: SourceSpan,
}

impl ForStmt {
    /// The loop iterator (shared by init and step; the parser enforces this).
    pub fn iterator(&self) -> VarId {
        self.init.var()
    }
}

/// Scheduling requested by a pragma's `schedule(...)` clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Static,
    Dynamic,
    Guided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleClause {
    pub kind: ScheduleKind,
    /// Parsed for fidelity; chunk sizing is controlled by the distributor.
    pub chunk: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ReductionOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ReductionOp::Add => "+",
            ReductionOp::Sub => "-",
            ReductionOp::Mul => "*",
            ReductionOp::Div => "/",
        }
    }

    /// Identity each worker starts its partial from: 0 for `+`/`-`, 1 for
    /// `*`/`/`.
    pub fn identity(self) -> i64 {
        match self {
            ReductionOp::Add | ReductionOp::Sub => 0,
            ReductionOp::Mul | ReductionOp::Div => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionClause {
    pub op: ReductionOp,
    pub vars: Vec<String>,
}

/// Syntactic form of a `#pragma omp parallel for`, before name resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmpDirective {
    pub schedule: Option<ScheduleClause>,
    pub reduction: Option<ReductionClause>,
    pub private_list: Vec<String>,
    pub shared_list: Vec<String>,
    pub target_device: Option<String>,
    pub span: SourceSpan,
}

/// A pragma and the single `for` it governs, with clause names resolved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PragmaBlock {
    /// Source-order index, stable across the whole pipeline; message tags and
    /// reports key off it.
    pub block_id: usize,
    pub directive: OmpDirective,
    pub reductions: Vec<(VarId, ReductionOp)>,
    pub private_vars: Vec<VarId>,
    pub shared_vars: Vec<VarId>,
    pub for_stmt: ForStmt,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Stmt {
    /// Point where a local declaration (and its initializer) takes effect.
    Decl { var: VarId, span: SourceSpan },
    Assign { target: LValue, op: AssignOp, value: Expr, span: SourceSpan },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt>, span: SourceSpan },
    While { cond: Expr, body: Vec<Stmt>, span: SourceSpan },
    For(Box<ForStmt>),
    Block { body: Vec<Stmt>, span: SourceSpan },
    /// `printf(fmt, args...)` — the only I/O in the subset.
    Print { format: String, args: Vec<Expr>, span: SourceSpan },
    /// An intrinsic call in statement position (evaluated, result discarded).
    CallStmt { call: Expr, span: SourceSpan },
    Return { value: Option<Expr>, span: SourceSpan },
    Pragma(Box<PragmaBlock>),
}

impl Stmt {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Stmt::Decl { span, .. }
            | Stmt::Assign { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::Block { span, .. }
            | Stmt::Print { span, .. }
            | Stmt::CallStmt { span, .. }
            | Stmt::Return { span, .. } => span,
            Stmt::For(f) => &f.span,
            Stmt::Pragma(p) => &p.span,
        }
    }

    /// Walk this statement and all nested statements, outer-first.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::If { then_body, else_body, .. } => {
                for s in then_body.iter().chain(else_body) {
                    s.visit(f);
                }
            }
            Stmt::While { body, .. } | Stmt::Block { body, .. } => {
                for s in body {
                    s.visit(f);
                }
            }
            Stmt::For(fs) => {
                for s in &fs.body {
                    s.visit(f);
                }
            }
            Stmt::Pragma(p) => {
                for s in &p.for_stmt.body {
                    s.visit(f);
                }
            }
            _ => {}
        }
    }

    /// Does this statement contain a pragma block (itself included)?
    pub fn contains_pragma(&self) -> bool {
        let mut found = false;
        self.visit(&mut |s| {
            if matches!(s, Stmt::Pragma(_)) {
                found = true;
            }
        });
        found
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    /// True for `void` entry functions, false for `int`.
    pub ret_void: bool,
    pub body: Vec<Stmt>,
    pub span: SourceSpan,
}

/// A parsed translation unit: the symbol table, globals in declaration
/// order, and the single entry function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Program {
    pub file: String,
    pub vars: Vec<VarDecl>,
    pub globals: Vec<VarId>,
    pub functions: Vec<FunctionDef>,
}

impl Program {
    pub fn var(&self, id: VarId) -> &VarDecl {
        &self.vars[id]
    }

    /// The entry function (the parser guarantees exactly one).
    pub fn entry(&self) -> &FunctionDef {
        &self.functions[0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// All pragma blocks in source order (index == `block_id`).
    pub fn pragma_blocks(&self) -> Vec<&PragmaBlock> {
        let mut out = Vec::new();
        for s in &self.entry().body {
            s.visit(&mut |s| {
                if let Stmt::Pragma(p) = s {
                    out.push(&**p);
                }
            });
        }
        // visit() is outer-first, which matches source order here because
        // blocks cannot nest.
        out.sort_by_key(|b| b.block_id);
        out
    }
}
