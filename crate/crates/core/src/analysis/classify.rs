//! Variable classification for pragma blocks.
//!
//! Every variable a block touches is placed in one of five classes that
//! drive data movement:
//!
//! - `In`: read inside, never written — sent to workers, never returned.
//! - `Out`: written inside, not read (except to build its own new value) —
//!   returned to the master, never sent.
//! - `InOut`: both — sent and returned.
//! - `Private`: per-iteration storage (iterator, block-local declarations,
//!   `private` clause) — neither sent nor returned.
//! - `Reduction`: scalar combined across iterations with a declared
//!   operator — workers accumulate from the operator's identity and the
//!   master folds the partial results.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::*;
use crate::errors::Warning;

/// Data-movement class of one variable with respect to one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarClass {
    In,
    Out,
    InOut,
    Private,
    Reduction(ReductionOp),
}

impl VarClass {
    pub fn name(&self) -> String {
        match self {
            VarClass::In => "in".to_string(),
            VarClass::Out => "out".to_string(),
            VarClass::InOut => "inout".to_string(),
            VarClass::Private => "private".to_string(),
            VarClass::Reduction(op) => format!("reduction({})", op.symbol()),
        }
    }

    /// Is the variable's final value produced by the block (so the master
    /// must receive it)?
    pub fn flows_out(&self) -> bool {
        matches!(self, VarClass::Out | VarClass::InOut | VarClass::Reduction(_))
    }

    /// Does the block consume the variable's incoming value?
    pub fn flows_in(&self) -> bool {
        matches!(self, VarClass::In | VarClass::InOut)
    }
}

/// One classified variable, with the observation that justified the class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedVar {
    pub id: VarId,
    pub class: VarClass,
    pub reason: String,
}

/// Classification of every variable one block touches, ordered by id.
#[derive(Debug, Clone, Serialize)]
pub struct BlockClasses {
    pub block_id: usize,
    pub vars: Vec<ClassifiedVar>,
}

impl BlockClasses {
    pub fn class_of(&self, id: VarId) -> Option<VarClass> {
        self.vars.iter().find(|v| v.id == id).map(|v| v.class)
    }

    pub fn ids_in_class(&self, pred: impl Fn(VarClass) -> bool) -> Vec<VarId> {
        self.vars.iter().filter(|v| pred(v.class)).map(|v| v.id).collect()
    }
}

/// Raw usage facts gathered from a block body.
#[derive(Debug, Default)]
pub struct BlockUsage {
    pub reads: BTreeSet<VarId>,
    pub writes: BTreeSet<VarId>,
    /// Scalar reads that only feed the same scalar's own updated value
    /// (`s = s + e`, `s += e`) are tracked separately: they do not make the
    /// incoming value a data dependency of a reduction.
    pub self_reads: BTreeSet<VarId>,
    /// Variables declared inside the block body.
    pub declared_inside: BTreeSet<VarId>,
}

fn record_expr_reads(e: &Expr, skip: Option<VarId>, usage: &mut BlockUsage) {
    match e {
        Expr::Var { id, .. } => {
            if Some(*id) == skip {
                usage.self_reads.insert(*id);
            } else {
                usage.reads.insert(*id);
            }
        }
        Expr::Index { base, indices, .. } => {
            usage.reads.insert(*base);
            for ix in indices {
                // A subscript is never part of the subscripted variable's
                // own update, even inside that variable's right-hand side.
                record_expr_reads(ix, None, usage);
            }
        }
        Expr::Unary { operand, .. } => record_expr_reads(operand, skip, usage),
        Expr::Binary { lhs, rhs, .. } => {
            record_expr_reads(lhs, skip, usage);
            record_expr_reads(rhs, skip, usage);
        }
        Expr::Call { args, .. } => {
            for a in args {
                record_expr_reads(a, skip, usage);
            }
        }
        Expr::IntLit { .. } | Expr::FloatLit { .. } => {}
    }
}

/// Gather reads/writes/self-reads/declarations from a block.
pub fn block_usage(program: &Program, block: &PragmaBlock) -> BlockUsage {
    let mut usage = BlockUsage::default();
    let f = &block.for_stmt;

    // The loop header is part of the block: its expressions are evaluated
    // by whoever runs the iterations (and by the master to size the work).
    match &f.init {
        ForInit::Assign { value, .. } => record_expr_reads(value, None, &mut usage),
        ForInit::Decl { var } => {
            usage.declared_inside.insert(*var);
            if let Some(init) = &program.vars[*var].init {
                record_expr_reads(init, None, &mut usage);
            }
        }
    }
    record_expr_reads(&f.cond, None, &mut usage);
    record_expr_reads(&f.step.value, None, &mut usage);
    usage.writes.insert(f.iterator());

    for s in &f.body {
        s.visit(&mut |x| match x {
            Stmt::Decl { var, .. } => {
                usage.declared_inside.insert(*var);
                if let Some(init) = &program.vars[*var].init {
                    record_expr_reads(init, None, &mut usage);
                }
            }
            Stmt::Assign { target, op, value, .. } => {
                usage.writes.insert(target.var);
                for ix in &target.indices {
                    record_expr_reads(ix, None, &mut usage);
                }
                if target.indices.is_empty() {
                    // Scalar update: reads of the target inside its own
                    // right-hand side are self-reads.
                    record_expr_reads(value, Some(target.var), &mut usage);
                    if op.bin_op().is_some() {
                        usage.self_reads.insert(target.var);
                    }
                } else {
                    record_expr_reads(value, None, &mut usage);
                    if op.bin_op().is_some() {
                        usage.reads.insert(target.var);
                    }
                }
            }
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => {
                record_expr_reads(cond, None, &mut usage)
            }
            Stmt::For(nested) => {
                match &nested.init {
                    ForInit::Assign { var, value } => {
                        usage.writes.insert(*var);
                        record_expr_reads(value, None, &mut usage);
                    }
                    ForInit::Decl { var } => {
                        usage.declared_inside.insert(*var);
                        if let Some(init) = &program.vars[*var].init {
                            record_expr_reads(init, None, &mut usage);
                        }
                    }
                }
                record_expr_reads(&nested.cond, None, &mut usage);
                usage.writes.insert(nested.init.var());
                record_expr_reads(&nested.step.value, Some(nested.init.var()), &mut usage);
                usage.self_reads.insert(nested.init.var());
            }
            Stmt::Print { args, .. } => {
                for a in args {
                    record_expr_reads(a, None, &mut usage);
                }
            }
            Stmt::CallStmt { call, .. } => record_expr_reads(call, None, &mut usage),
            Stmt::Return { value: Some(e), .. } => record_expr_reads(e, None, &mut usage),
            _ => {}
        });
    }
    usage
}

/// Variables read anywhere in `stmts`, treating every appearance (including
/// self-updates) as a read. Used for liveness outside the block.
fn reads_in_stmts(program: &Program, stmts: &[Stmt]) -> BTreeSet<VarId> {
    let mut reads = BTreeSet::new();
    let on_expr = |e: &Expr, reads: &mut BTreeSet<VarId>| {
        e.visit(&mut |x| match x {
            Expr::Var { id, .. } => {
                reads.insert(*id);
            }
            Expr::Index { base, .. } => {
                reads.insert(*base);
            }
            _ => {}
        });
    };
    for s in stmts {
        s.visit(&mut |x| match x {
            Stmt::Assign { target, op, value, .. } => {
                for ix in &target.indices {
                    on_expr(ix, &mut reads);
                }
                if op.bin_op().is_some() || !target.indices.is_empty() {
                    reads.insert(target.var);
                }
                on_expr(value, &mut reads);
            }
            Stmt::Decl { var, .. } => {
                if let Some(init) = &program.vars[*var].init {
                    on_expr(init, &mut reads);
                }
            }
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => on_expr(cond, &mut reads),
            Stmt::For(f) => {
                if let ForInit::Assign { value, .. } = &f.init {
                    on_expr(value, &mut reads);
                } else if let ForInit::Decl { var } = &f.init {
                    if let Some(init) = &program.vars[*var].init {
                        on_expr(init, &mut reads);
                    }
                }
                on_expr(&f.cond, &mut reads);
                on_expr(&f.step.value, &mut reads);
            }
            Stmt::Print { args, .. } => {
                for a in args {
                    on_expr(a, &mut reads);
                }
            }
            Stmt::CallStmt { call, .. } => on_expr(call, &mut reads),
            Stmt::Return { value: Some(e), .. } => on_expr(e, &mut reads),
            Stmt::Pragma(p) => {
                // Another block reading the variable keeps it live.
                let u = block_usage(program, p);
                reads.extend(u.reads.iter().copied());
                reads.extend(u.self_reads.iter().copied());
            }
            _ => {}
        });
    }
    reads
}

/// Conservative "observable after the block" set: globals always are (they
/// are program outputs), and a local is if any statement of the entry
/// function outside this block reads it.
pub fn live_after(program: &Program, block: &PragmaBlock) -> BTreeSet<VarId> {
    let mut live: BTreeSet<VarId> = program.globals.iter().copied().collect();
    let entry = program.entry();
    let mut outside: Vec<Stmt> = Vec::new();
    for s in &entry.body {
        collect_outside(s, block.block_id, &mut outside);
    }
    live.extend(reads_in_stmts(program, &outside));
    live
}

fn collect_outside(s: &Stmt, block_id: usize, out: &mut Vec<Stmt>) {
    match s {
        Stmt::Pragma(p) if p.block_id == block_id => {}
        Stmt::If { cond, then_body, else_body, span } => {
            let mut t = Vec::new();
            let mut e = Vec::new();
            for x in then_body {
                collect_outside(x, block_id, &mut t);
            }
            for x in else_body {
                collect_outside(x, block_id, &mut e);
            }
            out.push(Stmt::If {
                cond: cond.clone(),
                then_body: t,
                else_body: e,
                span: span.clone(),
            });
        }
        Stmt::While { cond, body, span } => {
            let mut b = Vec::new();
            for x in body {
                collect_outside(x, block_id, &mut b);
            }
            out.push(Stmt::While { cond: cond.clone(), body: b, span: span.clone() });
        }
        Stmt::Block { body, span } => {
            let mut b = Vec::new();
            for x in body {
                collect_outside(x, block_id, &mut b);
            }
            out.push(Stmt::Block { body: b, span: span.clone() });
        }
        Stmt::For(f) => {
            let mut b = Vec::new();
            for x in &f.body {
                collect_outside(x, block_id, &mut b);
            }
            let mut f2 = f.as_ref().clone();
            f2.body = b;
            out.push(Stmt::For(Box::new(f2)));
        }
        other => out.push(other.clone()),
    }
}

/// Classify every variable `block` touches.
pub fn classify_block(
    program: &Program,
    block: &PragmaBlock,
) -> (BlockClasses, Vec<Warning>) {
    let usage = block_usage(program, block);
    let live = live_after(program, block);
    let iterator = block.for_stmt.iterator();
    let mut warnings = Vec::new();

    let mut touched: BTreeSet<VarId> = BTreeSet::new();
    touched.extend(usage.reads.iter());
    touched.extend(usage.self_reads.iter());
    touched.extend(usage.writes.iter());
    touched.extend(usage.declared_inside.iter());
    touched.extend(block.private_vars.iter());
    touched.extend(block.reductions.iter().map(|(v, _)| *v));

    let mut classes: BTreeMap<VarId, ClassifiedVar> = BTreeMap::new();
    for id in touched {
        let decl = &program.vars[id];
        let reduction = block.reductions.iter().find(|(v, _)| *v == id).map(|(_, op)| *op);
        let (class, reason) = if id == iterator {
            (VarClass::Private, "distributed loop iterator".to_string())
        } else if let Some(op) = reduction {
            (VarClass::Reduction(op), "reduction clause".to_string())
        } else if usage.declared_inside.contains(&id) {
            (VarClass::Private, "declared inside the block".to_string())
        } else if block.private_vars.contains(&id) {
            if usage.writes.contains(&id) && live.contains(&id) {
                warnings.push(Warning {
                    span: block.span.clone(),
                    message: format!(
                        "`{}` is private but written in the block and read afterwards; \
                         its value after the block comes from outside the block",
                        decl.name
                    ),
                });
            }
            (VarClass::Private, "private clause".to_string())
        } else {
            let written = usage.writes.contains(&id);
            let outside_read = usage.reads.contains(&id);
            let read = outside_read || usage.self_reads.contains(&id);
            match (read, written) {
                (true, true) => {
                    let reason = if outside_read {
                        "read and written in the block".to_string()
                    } else {
                        "updates its own value each iteration".to_string()
                    };
                    (VarClass::InOut, reason)
                }
                (true, false) => (VarClass::In, "read in the block".to_string()),
                (false, true) => (VarClass::Out, "written in the block".to_string()),
                (false, false) => {
                    // Listed in a clause but never touched by the body.
                    (VarClass::Private, "listed but unused".to_string())
                }
            }
        };
        classes.insert(id, ClassifiedVar { id, class, reason });
    }

    // A reduction variable whose incoming value is consumed by anything
    // other than its own update cannot be computed from partials alone.
    for (id, _) in &block.reductions {
        if usage.reads.contains(id) {
            warnings.push(Warning {
                span: block.span.clone(),
                message: format!(
                    "reduction variable `{}` is read inside the block outside its own update",
                    program.vars[*id].name
                ),
            });
        }
    }

    (
        BlockClasses { block_id: block.block_id, vars: classes.into_values().collect() },
        warnings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn classes(src: &str) -> (Program, BlockClasses, Vec<Warning>) {
        let p = parse(src, "t.c").unwrap().program;
        let (c, w) = {
            let blocks = p.pragma_blocks();
            classify_block(&p, blocks[0])
        };
        (p, c, w)
    }

    fn class_of(p: &Program, c: &BlockClasses, name: &str) -> VarClass {
        c.class_of(p.var_id(name).unwrap()).unwrap_or_else(|| panic!("{name} not classified"))
    }

    #[test]
    fn reduction_block_classes() {
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
        let (p, c, w) = classes(src);
        assert_eq!(class_of(&p, &c, "sum"), VarClass::Reduction(ReductionOp::Add));
        assert_eq!(class_of(&p, &c, "x"), VarClass::In);
        assert_eq!(class_of(&p, &c, "n"), VarClass::In);
        assert_eq!(class_of(&p, &c, "i"), VarClass::Private);
        assert!(w.is_empty(), "{w:?}");
    }

    #[test]
    fn array_flow_classes() {
        let src = r#"
int n;
double a[16];
double b[16];
double c[16];
int main() {
    int i;
    #pragma omp parallel for
    for (i = 0; i < n; i++) {
        c[i] = c[i] + a[i] * b[i];
    }
    return 0;
}
"#;
        let (p, c, _) = classes(src);
        assert_eq!(class_of(&p, &c, "a"), VarClass::In);
        assert_eq!(class_of(&p, &c, "b"), VarClass::In);
        assert_eq!(class_of(&p, &c, "c"), VarClass::InOut);
    }

    #[test]
    fn write_only_array_is_out() {
        let src = "int n; int a[8]; int main() { int i;\n#pragma omp parallel for\nfor (i = 0; i < n; i++) { a[i] = i; } return 0; }";
        let (p, c, _) = classes(src);
        assert_eq!(class_of(&p, &c, "a"), VarClass::Out);
    }

    #[test]
    fn scalar_self_update_without_reduction_clause_is_inout() {
        let src = "int n; int s; int main() { int i;\n#pragma omp parallel for\nfor (i = 0; i < n; i++) { s = s + i; } return 0; }";
        let (p, c, _) = classes(src);
        // Not reduction-listed: each iteration consumes the previous value,
        // so the block both reads and produces `s` (rejected later as a
        // concurrent shared write).
        assert_eq!(class_of(&p, &c, "s"), VarClass::InOut);
    }

    #[test]
    fn private_clause_and_inner_declarations() {
        let src = r#"
int n;
int a[8][8];
int main() {
    int i;
    int j;
    #pragma omp parallel for private(j)
    for (i = 0; i < n; i++) {
        for (j = 0; j < n; j++) {
            int t;
            t = i + j;
            a[i][j] = t;
        }
    }
    return 0;
}
"#;
        let (p, c, w) = classes(src);
        assert_eq!(class_of(&p, &c, "j"), VarClass::Private);
        assert_eq!(class_of(&p, &c, "t"), VarClass::Private);
        assert_eq!(class_of(&p, &c, "a"), VarClass::Out);
        assert!(w.is_empty(), "{w:?}");
    }

    #[test]
    fn warns_when_private_value_is_observed_after() {
        let src = r#"
int n;
int j;
int a[8];
int main() {
    int i;
    #pragma omp parallel for private(j)
    for (i = 0; i < n; i++) {
        j = i * 2;
        a[i] = j;
    }
    printf("%d\n", j);
    return 0;
}
"#;
        let (_, _, w) = classes(src);
        assert!(w.iter().any(|x| x.message.contains("private")), "{w:?}");
    }

    #[test]
    fn warns_when_reduction_read_outside_update() {
        let src = r#"
int n;
int sum;
int a[8];
int main() {
    int i;
    #pragma omp parallel for reduction(+: sum)
    for (i = 0; i < n; i++) {
        sum = sum + i;
        a[i] = sum;
    }
    return 0;
}
"#;
        let (_, _, w) = classes(src);
        assert!(w.iter().any(|x| x.message.contains("reduction variable")), "{w:?}");
    }

    #[test]
    fn bound_variables_count_as_reads() {
        let src = "int lo; int hi; int a[32]; int main() { int i;\n#pragma omp parallel for\nfor (i = lo; i < hi; i++) { a[i] = 1; } return 0; }";
        let (p, c, _) = classes(src);
        assert_eq!(class_of(&p, &c, "lo"), VarClass::In);
        assert_eq!(class_of(&p, &c, "hi"), VarClass::In);
    }
}
