//! Tree-walking interpreter for the C subset.
//!
//! Runs pragma blocks as plain sequential loops, which makes it the
//! semantic oracle for everything downstream: the differential checker
//! compares generated message-passing programs against it, and the
//! classification tests compare static variable classes against the access
//! trace it records.
//!
//! The statement/expression executor is also reused by the message-passing
//! simulator (with tracing disabled) to run the computational fragments of
//! generated programs.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::ast::*;
use crate::runtime::value::{binop, intrinsic, unop, ArrayVal, Value};
use crate::span::SourceSpan;
use crate::runtime::{Inputs, PrintEvent, RuntimeError};

/// Default statement budget; generous for the bundled kernels, small enough
/// to stop runaway fuzz programs.
pub const DEFAULT_STEP_LIMIT: u64 = 200_000_000;

const NO_TAG: u32 = u32::MAX;

/// Flat variable store indexed by [`VarId`].
#[derive(Debug, Clone)]
pub struct Env {
    pub slots: Vec<Value>,
}

impl Env {
    /// Build an environment with C initialization semantics: every variable
    /// zeroed, then global initializers applied, then input bindings.
    pub fn new(program: &Program, inputs: &Inputs) -> Result<Env, RuntimeError> {
        let mut slots: Vec<Value> = program.vars.iter().map(Value::zero_for).collect();
        for &g in &program.globals {
            if let Some(init) = &program.vars[g].init {
                let v = eval_const(init).ok_or_else(|| RuntimeError::Invalid {
                    span: init.span().clone(),
                    message: "global initializer is not constant".to_string(),
                })?;
                slots[g] = v.convert_to(program.vars[g].kind);
            }
        }
        for (name, value) in inputs {
            let id = program.var_id(name).ok_or_else(|| RuntimeError::BadInput {
                name: name.clone(),
                message: "no such variable".to_string(),
            })?;
            let decl = &program.vars[id];
            if decl.scope != VarScope::Global {
                return Err(RuntimeError::BadInput {
                    name: name.clone(),
                    message: "only globals can be bound".to_string(),
                });
            }
            slots[id] = coerce_input(value, decl).ok_or_else(|| RuntimeError::BadInput {
                name: name.clone(),
                message: format!(
                    "shape mismatch (expected {} with dims {:?})",
                    decl.kind.c_name(),
                    decl.dims
                ),
            })?;
        }
        Ok(Env { slots })
    }

    pub fn by_name<'e>(&'e self, program: &Program, name: &str) -> Option<&'e Value> {
        program.var_id(name).map(|id| &self.slots[id])
    }
}

/// Check an input binding against a declaration and convert element kinds.
fn coerce_input(value: &Value, decl: &VarDecl) -> Option<Value> {
    let want_float = decl.kind.is_float();
    match (value, decl.dims.len()) {
        (Value::Int(_) | Value::Float(_), 0) => Some(value.convert_to(decl.kind)),
        (Value::IntArray(a), rank @ (1 | 2)) => {
            coerce_array(&a.data.iter().map(|&v| v as f64).collect::<Vec<_>>(), a.rank, rank, decl, want_float)
        }
        (Value::FloatArray(a), rank @ (1 | 2)) => {
            coerce_array(&a.data, a.rank as usize as u8, rank, decl, want_float)
        }
        _ => None,
    }
}

fn coerce_array(
    data: &[f64],
    value_rank: u8,
    decl_rank: usize,
    decl: &VarDecl,
    want_float: bool,
) -> Option<Value> {
    if value_rank as usize != decl_rank {
        return None;
    }
    if data.len() as i64 != decl.elems() {
        return None;
    }
    let rows = decl.rows() as usize;
    let cols = decl.row_elems() as usize;
    let rank = decl_rank as u8;
    if want_float {
        Some(Value::FloatArray(ArrayVal { data: data.to_vec(), rows, cols, rank }))
    } else {
        Some(Value::IntArray(ArrayVal {
            data: data.iter().map(|&v| v as i64).collect(),
            rows,
            cols,
            rank,
        }))
    }
}

/// Evaluate a constant expression (literals and arithmetic) with the same
/// typing rules as the interpreter, so `3 / 2` is integer division.
pub fn eval_const(e: &Expr) -> Option<Value> {
    match e {
        Expr::IntLit { value, .. } => Some(Value::Int(*value)),
        Expr::FloatLit { value, .. } => Some(Value::Float(*value)),
        Expr::Unary { op, operand, .. } => Some(unop(*op, &eval_const(operand)?)),
        Expr::Binary { op: BinOp::And | BinOp::Or, .. } => None,
        Expr::Binary { op, lhs, rhs, .. } => {
            binop(*op, &eval_const(lhs)?, &eval_const(rhs)?, e.span()).ok()
        }
        Expr::Call { intrinsic: f, args, .. } => {
            let vals: Option<Vec<Value>> = args.iter().map(eval_const).collect();
            Some(intrinsic(*f, &vals?))
        }
        _ => None,
    }
}

/// What one block of a traced execution observed: reads/writes of
/// variables declared outside the block while inside it, which reads
/// consumed a value produced before (or outside) the block, and which of
/// the written variables were later read while holding a value the block
/// wrote.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BlockTrace {
    pub reads_inside: BTreeSet<VarId>,
    pub writes_inside: BTreeSet<VarId>,
    /// Reads that observed a value the block itself did not write.
    pub upward_reads: BTreeSet<VarId>,
    pub post_reads: BTreeSet<VarId>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AccessTrace {
    /// Indexed by `block_id`.
    pub blocks: Vec<BlockTrace>,
}

struct TraceState {
    blocks: Vec<BlockTrace>,
    /// Per-variable, per-element tag: which block wrote the current value
    /// (`NO_TAG` = written outside any block / initial value).
    tags: Vec<Vec<u32>>,
    cur: Option<u32>,
    /// Variables declared inside the current block (excluded from its sets).
    block_locals: HashSet<VarId>,
}

impl TraceState {
    fn new(program: &Program) -> TraceState {
        let n_blocks = program.pragma_blocks().len();
        TraceState {
            blocks: vec![BlockTrace::default(); n_blocks],
            tags: program.vars.iter().map(|v| vec![NO_TAG; v.elems() as usize]).collect(),
            cur: None,
            block_locals: HashSet::new(),
        }
    }

    fn on_read(&mut self, var: VarId, elem: usize) {
        let tag = self.tags[var][elem];
        if let Some(b) = self.cur {
            if !self.block_locals.contains(&var) {
                self.blocks[b as usize].reads_inside.insert(var);
                if tag != b {
                    self.blocks[b as usize].upward_reads.insert(var);
                }
            }
        }
        if tag != NO_TAG && self.cur != Some(tag) {
            self.blocks[tag as usize].post_reads.insert(var);
        }
    }

    fn on_write(&mut self, var: VarId, elem: usize) {
        match self.cur {
            Some(b) => {
                if !self.block_locals.contains(&var) {
                    self.blocks[b as usize].writes_inside.insert(var);
                }
                self.tags[var][elem] = b;
            }
            None => self.tags[var][elem] = NO_TAG,
        }
    }

    fn on_decl(&mut self, var: VarId) {
        if self.cur.is_some() {
            self.block_locals.insert(var);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Normal,
    Return,
}

/// Statement/expression executor over one [`Env`].
pub struct Interp<'p> {
    pub program: &'p Program,
    pub env: Env,
    pub printed: Vec<PrintEvent>,
    pub steps: u64,
    pub max_steps: u64,
    trace: Option<TraceState>,
}

impl<'p> Interp<'p> {
    /// Executor without access tracing (used by the simulator's processes).
    pub fn new(program: &'p Program, env: Env) -> Interp<'p> {
        Interp {
            program,
            env,
            printed: Vec::new(),
            steps: 0,
            max_steps: DEFAULT_STEP_LIMIT,
            trace: None,
        }
    }

    fn traced(program: &'p Program, env: Env, max_steps: u64) -> Interp<'p> {
        Interp {
            program,
            env,
            printed: Vec::new(),
            steps: 0,
            max_steps,
            trace: Some(TraceState::new(program)),
        }
    }

    fn tick(&mut self) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(RuntimeError::StepLimit { limit: self.max_steps });
        }
        Ok(())
    }

    // ---- variable access ------------------------------------------------

    fn read_scalar(&mut self, id: VarId) -> Value {
        if let Some(t) = &mut self.trace {
            t.on_read(id, 0);
        }
        self.env.slots[id].clone()
    }

    fn write_scalar(&mut self, id: VarId, v: Value) {
        if let Some(t) = &mut self.trace {
            t.on_write(id, 0);
        }
        self.env.slots[id] = v.convert_to(self.program.vars[id].kind);
    }

    /// Evaluate subscripts, bounds-check, and return the flat element index.
    fn elem_index(
        &mut self,
        base: VarId,
        indices: &[Expr],
        span: &SourceSpan,
    ) -> Result<usize, RuntimeError> {
        let mut idx = [0i64; 2];
        for (k, e) in indices.iter().enumerate() {
            let v = self.eval(e)?;
            match v {
                Value::Int(i) => idx[k] = i,
                _ => {
                    return Err(RuntimeError::Invalid {
                        span: e.span().clone(),
                        message: "array subscript is not an integer".to_string(),
                    })
                }
            }
        }
        let decl = &self.program.vars[base];
        for (k, &extent) in decl.dims.iter().enumerate() {
            if idx[k] < 0 || idx[k] >= extent {
                return Err(RuntimeError::OutOfBounds {
                    span: span.clone(),
                    var: decl.name.clone(),
                    index: idx[k],
                    extent,
                });
            }
        }
        let flat = if decl.dims.len() == 2 {
            idx[0] * decl.dims[1] + idx[1]
        } else {
            idx[0]
        };
        Ok(flat as usize)
    }

    fn read_elem(&mut self, base: VarId, flat: usize, span: &SourceSpan) -> Result<Value, RuntimeError> {
        if let Some(t) = &mut self.trace {
            t.on_read(base, flat);
        }
        match &self.env.slots[base] {
            Value::IntArray(a) => Ok(Value::Int(a.data[flat])),
            Value::FloatArray(a) => Ok(Value::Float(a.data[flat])),
            _ => Err(RuntimeError::Invalid {
                span: span.clone(),
                message: "subscript applied to a scalar".to_string(),
            }),
        }
    }

    fn write_elem(&mut self, base: VarId, flat: usize, v: Value, span: &SourceSpan) -> Result<(), RuntimeError> {
        if let Some(t) = &mut self.trace {
            t.on_write(base, flat);
        }
        match &mut self.env.slots[base] {
            Value::IntArray(a) => a.data[flat] = v.as_int(),
            Value::FloatArray(a) => a.data[flat] = v.as_float(),
            _ => {
                return Err(RuntimeError::Invalid {
                    span: span.clone(),
                    message: "subscript applied to a scalar".to_string(),
                })
            }
        }
        Ok(())
    }

    // ---- expressions ------------------------------------------------------

    pub fn eval(&mut self, e: &Expr) -> Result<Value, RuntimeError> {
        match e {
            Expr::IntLit { value, .. } => Ok(Value::Int(*value)),
            Expr::FloatLit { value, .. } => Ok(Value::Float(*value)),
            Expr::Var { id, .. } => Ok(self.read_scalar(*id)),
            Expr::Index { base, indices, span } => {
                let flat = self.elem_index(*base, indices, span)?;
                self.read_elem(*base, flat, span)
            }
            Expr::Unary { op, operand, .. } => Ok(unop(*op, &self.eval(operand)?)),
            Expr::Binary { op: BinOp::And, lhs, rhs, .. } => {
                if !self.eval(lhs)?.truthy() {
                    return Ok(Value::Int(0));
                }
                Ok(Value::Int(self.eval(rhs)?.truthy() as i64))
            }
            Expr::Binary { op: BinOp::Or, lhs, rhs, .. } => {
                if self.eval(lhs)?.truthy() {
                    return Ok(Value::Int(1));
                }
                Ok(Value::Int(self.eval(rhs)?.truthy() as i64))
            }
            Expr::Binary { op, lhs, rhs, span } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                binop(*op, &a, &b, span)
            }
            Expr::Call { intrinsic: f, args, .. } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                Ok(intrinsic(*f, &vals))
            }
        }
    }

    // ---- statements -----------------------------------------------------

    pub fn exec_assign(
        &mut self,
        target: &LValue,
        op: AssignOp,
        value: &Expr,
    ) -> Result<(), RuntimeError> {
        let rhs = self.eval(value)?;
        if target.indices.is_empty() {
            let new = match op.bin_op() {
                None => rhs,
                Some(b) => {
                    let old = self.read_scalar(target.var);
                    binop(b, &old, &rhs, &target.span)?
                }
            };
            self.write_scalar(target.var, new);
        } else {
            let flat = self.elem_index(target.var, &target.indices, &target.span)?;
            let new = match op.bin_op() {
                None => rhs,
                Some(b) => {
                    let old = self.read_elem(target.var, flat, &target.span)?;
                    binop(b, &old, &rhs, &target.span)?
                }
            };
            self.write_elem(target.var, flat, new, &target.span)?;
        }
        Ok(())
    }

    fn exec_decl(&mut self, var: VarId) -> Result<(), RuntimeError> {
        if let Some(t) = &mut self.trace {
            t.on_decl(var);
        }
        // A declaration resets its slot (fresh object on every execution).
        self.env.slots[var] = Value::zero_for(&self.program.vars[var]);
        if let Some(init) = self.program.vars[var].init.clone() {
            let v = self.eval(&init)?;
            if let Some(t) = &mut self.trace {
                t.on_write(var, 0);
            }
            self.env.slots[var] = v.convert_to(self.program.vars[var].kind);
        }
        Ok(())
    }

    pub fn exec_for(&mut self, f: &ForStmt) -> Result<Flow, RuntimeError> {
        match &f.init {
            ForInit::Assign { var, value } => {
                let v = self.eval(value)?;
                self.write_scalar(*var, v);
            }
            ForInit::Decl { var } => self.exec_decl(*var)?,
        }
        loop {
            self.tick()?;
            if !self.eval(&f.cond)?.truthy() {
                break;
            }
            match self.exec_stmts(&f.body)? {
                Flow::Return => return Ok(Flow::Return),
                Flow::Normal => {}
            }
            let step_target =
                LValue { var: f.step.var, indices: Vec::new(), span: f.step.span.clone() };
            self.exec_assign(&step_target, f.step.op, &f.step.value)?;
        }
        Ok(Flow::Normal)
    }

    pub fn exec_stmt(&mut self, s: &Stmt) -> Result<Flow, RuntimeError> {
        self.tick()?;
        match s {
            Stmt::Decl { var, .. } => {
                self.exec_decl(*var)?;
                Ok(Flow::Normal)
            }
            Stmt::Assign { target, op, value, .. } => {
                self.exec_assign(target, *op, value)?;
                Ok(Flow::Normal)
            }
            Stmt::If { cond, then_body, else_body, .. } => {
                if self.eval(cond)?.truthy() {
                    self.exec_stmts(then_body)
                } else {
                    self.exec_stmts(else_body)
                }
            }
            Stmt::While { cond, body, .. } => {
                loop {
                    self.tick()?;
                    if !self.eval(cond)?.truthy() {
                        break;
                    }
                    if self.exec_stmts(body)? == Flow::Return {
                        return Ok(Flow::Return);
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::For(f) => self.exec_for(f),
            Stmt::Block { body, .. } => self.exec_stmts(body),
            Stmt::Print { format, args, .. } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                self.printed.push(PrintEvent { format: format.clone(), values });
                Ok(Flow::Normal)
            }
            Stmt::CallStmt { call, .. } => {
                self.eval(call)?;
                Ok(Flow::Normal)
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    self.eval(e)?;
                }
                Ok(Flow::Return)
            }
            Stmt::Pragma(p) => {
                if let Some(t) = &mut self.trace {
                    t.cur = Some(p.block_id as u32);
                    t.block_locals.clear();
                }
                let flow = self.exec_for(&p.for_stmt);
                if let Some(t) = &mut self.trace {
                    t.cur = None;
                    t.block_locals.clear();
                }
                flow
            }
        }
    }

    pub fn exec_stmts(&mut self, stmts: &[Stmt]) -> Result<Flow, RuntimeError> {
        for s in stmts {
            if self.exec_stmt(s)? == Flow::Return {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Normal)
    }
}

/// Result of a sequential reference run.
#[derive(Debug, Clone)]
pub struct SeqResult {
    pub env: Env,
    pub printed: Vec<PrintEvent>,
    pub trace: AccessTrace,
    pub steps: u64,
}

/// Run a program sequentially (pragma blocks as plain loops), recording
/// printed values and the per-block access trace.
pub fn interpret_sequential(program: &Program, inputs: &Inputs) -> Result<SeqResult, RuntimeError> {
    interpret_with_limit(program, inputs, DEFAULT_STEP_LIMIT)
}

pub fn interpret_with_limit(
    program: &Program,
    inputs: &Inputs,
    max_steps: u64,
) -> Result<SeqResult, RuntimeError> {
    let env = Env::new(program, inputs)?;
    let mut interp = Interp::traced(program, env, max_steps);
    interp.exec_stmts(&program.entry().body)?;
    let trace = AccessTrace {
        blocks: interp.trace.take().map(|t| t.blocks).unwrap_or_default(),
    };
    Ok(SeqResult { env: interp.env, printed: interp.printed, trace, steps: interp.steps })
}

/// Convenience used by several passes: evaluate an expression over scalars
/// only, without touching arrays (returns None if the expression reads an
/// array or is otherwise unevaluable in `env`).
pub fn eval_scalar_expr(program: &Program, env: &Env, e: &Expr) -> Option<Value> {
    match e {
        Expr::IntLit { value, .. } => Some(Value::Int(*value)),
        Expr::FloatLit { value, .. } => Some(Value::Float(*value)),
        Expr::Var { id, .. } => {
            let v = &env.slots[*id];
            if v.is_array() {
                None
            } else {
                Some(v.clone())
            }
        }
        Expr::Unary { op, operand, .. } => {
            Some(unop(*op, &eval_scalar_expr(program, env, operand)?))
        }
        Expr::Binary { op: BinOp::And | BinOp::Or, .. } => None,
        Expr::Binary { op, lhs, rhs, span } => binop(
            *op,
            &eval_scalar_expr(program, env, lhs)?,
            &eval_scalar_expr(program, env, rhs)?,
            span,
        )
        .ok(),
        Expr::Call { intrinsic: f, args, .. } => {
            let vals: Option<Vec<Value>> =
                args.iter().map(|a| eval_scalar_expr(program, env, a)).collect();
            Some(intrinsic(*f, &vals?))
        }
        Expr::Index { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn run(src: &str) -> SeqResult {
        let p = parse(src, "t.c").unwrap().program;
        interpret_sequential(&p, &Inputs::new()).unwrap()
    }

    fn run_with(src: &str, inputs: Inputs) -> SeqResult {
        let p = parse(src, "t.c").unwrap().program;
        interpret_sequential(&p, &inputs).unwrap()
    }

    #[test]
    fn reduction_example_with_bound_inputs() {
        // sum = x*0 + x*1 + x*2 + x*3 with x = 2, n = 4 → 12.
        let src = r#"
int n;
int x;
int sum;
int main() {
    int i;
    #pragma omp parallel for reduction(+: sum)
    for (i = 0; i < n; i++) {
        sum = sum + x * i;
    }
    printf("%d\n", sum);
    return 0;
}
"#;
        let mut inputs = Inputs::new();
        inputs.insert("n".to_string(), Value::Int(4));
        inputs.insert("x".to_string(), Value::Int(2));
        let p = parse(src, "t.c").unwrap().program;
        let r = interpret_sequential(&p, &inputs).unwrap();
        assert_eq!(r.env.by_name(&p, "sum"), Some(&Value::Int(12)));
        assert_eq!(r.printed.len(), 1);
        assert_eq!(r.printed[0].values, vec![Value::Int(12)]);
        assert_eq!(r.printed[0].render(), "12\n");
    }

    #[test]
    fn globals_are_zero_initialized() {
        let r = run("int a[3]; int s; int main() { s = a[0] + a[2]; return 0; }");
        assert!(matches!(r.env.slots.iter().next(), Some(Value::IntArray(_))));
    }

    #[test]
    fn global_initializers_apply() {
        let src = "int n = 3 / 2; double x = 3 / 2; int main() { return 0; }";
        let p = parse(src, "t.c").unwrap().program;
        let r = interpret_sequential(&p, &Inputs::new()).unwrap();
        // Both fold with C typing: 3/2 is integer division.
        assert_eq!(r.env.by_name(&p, "n"), Some(&Value::Int(1)));
        assert_eq!(r.env.by_name(&p, "x"), Some(&Value::Float(1.0)));
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let src = "int a[3]; int main() { int i; i = 3; a[i] = 1; return 0; }";
        let p = parse(src, "t.c").unwrap().program;
        let err = interpret_sequential(&p, &Inputs::new()).unwrap_err();
        assert!(matches!(err, RuntimeError::OutOfBounds { index: 3, .. }), "{err}");
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let src = "int main() { int a; int b; b = 0; a = 1 / b; return 0; }";
        let p = parse(src, "t.c").unwrap().program;
        let err = interpret_sequential(&p, &Inputs::new()).unwrap_err();
        assert!(matches!(err, RuntimeError::DivByZero { .. }), "{err}");
    }

    #[test]
    fn step_limit_stops_runaway_loops() {
        let src = "int main() { int i; i = 0; while (1) { i = i + 1; } return 0; }";
        let p = parse(src, "t.c").unwrap().program;
        let err = interpret_with_limit(&p, &Inputs::new(), 10_000).unwrap_err();
        assert!(matches!(err, RuntimeError::StepLimit { .. }), "{err}");
    }

    #[test]
    fn access_trace_records_block_reads_and_writes() {
        let src = r#"
int n;
int x;
int sum;
int out[8];
int main() {
    int i;
    n = 8;
    x = 2;
    #pragma omp parallel for
    for (i = 0; i < n; i++) {
        out[i] = x * i;
    }
    sum = out[3];
    return 0;
}
"#;
        let p = parse(src, "t.c").unwrap().program;
        let r = interpret_sequential(&p, &Inputs::new()).unwrap();
        let t = &r.trace.blocks[0];
        let id = |n: &str| p.var_id(n).unwrap();
        assert!(t.reads_inside.contains(&id("n")), "bound var is read by the block");
        assert!(t.reads_inside.contains(&id("x")));
        assert!(t.upward_reads.contains(&id("x")), "x's value comes from outside");
        assert!(t.writes_inside.contains(&id("out")));
        assert!(!t.writes_inside.contains(&id("x")));
        assert!(!t.upward_reads.contains(&id("out")), "out is only written");
        assert!(t.post_reads.contains(&id("out")), "out is read after the block");
        assert!(!t.post_reads.contains(&id("x")));
    }

    #[test]
    fn trace_skips_block_local_declarations() {
        let src = r#"
int a[4];
int main() {
    int i;
    #pragma omp parallel for
    for (i = 0; i < 4; i++) {
        int t;
        t = i * 2;
        a[i] = t;
    }
    return 0;
}
"#;
        let p = parse(src, "t.c").unwrap().program;
        let r = interpret_sequential(&p, &Inputs::new()).unwrap();
        let t = &r.trace.blocks[0];
        let tid = p.var_id("t").unwrap();
        assert!(!t.reads_inside.contains(&tid));
        assert!(!t.writes_inside.contains(&tid));
    }

    #[test]
    fn post_read_from_a_later_block_attributes_to_the_writer() {
        let src = r#"
int a[4];
int b[4];
int main() {
    int i;
    #pragma omp parallel for
    for (i = 0; i < 4; i++) {
        a[i] = i;
    }
    #pragma omp parallel for
    for (i = 0; i < 4; i++) {
        b[i] = a[i];
    }
    return 0;
}
"#;
        let p = parse(src, "t.c").unwrap().program;
        let r = interpret_sequential(&p, &Inputs::new()).unwrap();
        assert!(r.trace.blocks[0].post_reads.contains(&p.var_id("a").unwrap()));
        assert!(!r.trace.blocks[1].post_reads.contains(&p.var_id("b").unwrap()));
    }

    #[test]
    fn while_and_if_and_intrinsics_execute() {
        let r = run(
            r#"
double x;
int main() {
    int i;
    i = 0;
    x = 100.0;
    while (i < 3) {
        if (i % 2 == 0) {
            x = sqrt(x);
        } else {
            x = x * 2.0;
        }
        i++;
    }
    return 0;
}
"#,
        );
        assert_eq!(r.printed.len(), 0);
        // sqrt(100)=10, *2=20, sqrt(20)≈4.472
        match r.env.slots.first() {
            Some(Value::Float(v)) => assert!((v - 20.0f64.sqrt()).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn input_binding_validates_shape() {
        let src = "int a[4]; int main() { return 0; }";
        let p = parse(src, "t.c").unwrap().program;
        let mut inputs = Inputs::new();
        inputs.insert("a".to_string(), Value::Int(3));
        assert!(interpret_sequential(&p, &inputs).is_err());
    }

    #[test]
    fn negative_stride_loops_run() {
        let r = run_with(
            "int n; int s; int main() { int i; s = 0; for (i = 10; i > 0; i -= 3) { s += i; } printf(\"%d\\n\", s); return 0; }",
            Inputs::new(),
        );
        // 10 + 7 + 4 + 1 = 22
        assert_eq!(r.printed[0].values, vec![Value::Int(22)]);
    }

    #[test]
    fn compound_assignment_reads_then_writes() {
        let src = r#"
int c[2][2];
int main() {
    int i;
    #pragma omp parallel for
    for (i = 0; i < 2; i++) {
        c[i][0] += 5;
    }
    return 0;
}
"#;
        let p = parse(src, "t.c").unwrap().program;
        let r = interpret_sequential(&p, &Inputs::new()).unwrap();
        let cid = p.var_id("c").unwrap();
        let t = &r.trace.blocks[0];
        assert!(t.reads_inside.contains(&cid), "compound assign reads the target");
        assert!(t.upward_reads.contains(&cid), "the read observes the pre-block value");
        assert!(t.writes_inside.contains(&cid));
    }
}
