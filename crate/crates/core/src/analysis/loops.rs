//! Loop canonicalization.
//!
//! Distributing a loop across processes requires knowing its iteration
//! space up front: an iterator, an initial value, a bound, a constant
//! stride, and a comparison. This module extracts that shape from a `for`
//! statement or reports why it does not fit.

use serde::Serialize;

use crate::ast::*;
use crate::parser::const_eval_int;
use crate::span::SourceSpan;

/// Comparison operator of a canonical loop condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpKind {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpKind {
    pub fn holds(self, iter: i64, bound: i64) -> bool {
        match self {
            CmpKind::Lt => iter < bound,
            CmpKind::Le => iter <= bound,
            CmpKind::Gt => iter > bound,
            CmpKind::Ge => iter >= bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpKind::Lt => "<",
            CmpKind::Le => "<=",
            CmpKind::Gt => ">",
            CmpKind::Ge => ">=",
        }
    }

    fn from_bin_op(op: BinOp) -> Option<CmpKind> {
        match op {
            BinOp::Lt => Some(CmpKind::Lt),
            BinOp::Le => Some(CmpKind::Le),
            BinOp::Gt => Some(CmpKind::Gt),
            BinOp::Ge => Some(CmpKind::Ge),
            _ => None,
        }
    }
}

/// A loop in distribution-ready form:
/// `for (it = initial; it CMP bound; it += stride)`.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalLoop {
    pub iterator: VarId,
    pub initial: Expr,
    pub bound: Expr,
    pub stride: i64,
    pub cmp: CmpKind,
    pub span: SourceSpan,
}

impl CanonicalLoop {
    /// Number of iterations for concrete endpoint values.
    pub fn trip_count(&self, initial: i64, bound: i64) -> i64 {
        trip_count(initial, bound, self.stride, self.cmp)
    }

    /// Iterator value after the loop finishes, given the trip count.
    pub fn final_value(&self, initial: i64, trips: i64) -> i64 {
        initial + trips * self.stride
    }

    /// Iterator value at 0-based iteration `k`.
    pub fn iter_value(&self, initial: i64, k: i64) -> i64 {
        initial + k * self.stride
    }
}

/// Trip count of `for (i = initial; i CMP bound; i += stride)`.
pub fn trip_count(initial: i64, bound: i64, stride: i64, cmp: CmpKind) -> i64 {
    match cmp {
        CmpKind::Lt => {
            if initial >= bound {
                0
            } else {
                (bound - initial + stride - 1) / stride
            }
        }
        CmpKind::Le => {
            if initial > bound {
                0
            } else {
                (bound - initial) / stride + 1
            }
        }
        CmpKind::Gt => {
            let m = -stride;
            if initial <= bound {
                0
            } else {
                (initial - bound + m - 1) / m
            }
        }
        CmpKind::Ge => {
            let m = -stride;
            if initial < bound {
                0
            } else {
                (initial - bound) / m + 1
            }
        }
    }
}

/// Why a loop cannot be canonicalized.
#[derive(Debug, Clone)]
pub struct NonCanonical {
    pub span: SourceSpan,
    pub message: String,
}

fn reject<T>(span: &SourceSpan, message: impl Into<String>) -> Result<T, NonCanonical> {
    Err(NonCanonical { span: span.clone(), message: message.into() })
}

/// Extract the canonical form of a `for` statement.
///
/// Requirements:
/// - the iterator is an `int`/`long` scalar, shared by init/cond/step;
/// - the condition is `it < e`, `it <= e`, `it > e`, or `it >= e` where `e`
///   does not mention the iterator and reads no arrays;
/// - the step adds or subtracts a positive integer constant;
/// - the step direction can make the condition false;
/// - neither the initial value nor the bound mentions a variable written in
///   the loop body (they must be loop-invariant).
pub fn canonicalize_loop(program: &Program, f: &ForStmt) -> Result<CanonicalLoop, NonCanonical> {
    let iterator = f.init.var();
    let decl = &program.vars[iterator];
    if decl.is_array() || decl.kind.is_float() {
        return reject(&f.span, format!("iterator `{}` is not an integer scalar", decl.name));
    }

    let initial = match &f.init {
        ForInit::Assign { value, .. } => value.clone(),
        ForInit::Decl { var } => match &program.vars[*var].init {
            Some(e) => e.clone(),
            None => return reject(&f.span, "iterator declaration has no initial value"),
        },
    };

    let (cmp, bound) = match &f.cond {
        Expr::Binary { op, lhs, rhs, span } => {
            let cmp = match CmpKind::from_bin_op(*op) {
                Some(c) => c,
                None => return reject(span, "loop condition is not a <, <=, >, or >= comparison"),
            };
            match lhs.as_ref() {
                Expr::Var { id, .. } if *id == iterator => {}
                _ => return reject(span, "loop condition does not compare the iterator on the left"),
            }
            if rhs.mentions(iterator) {
                return reject(span, "loop bound mentions the iterator");
            }
            (cmp, rhs.as_ref().clone())
        }
        other => return reject(other.span(), "loop condition is not a comparison"),
    };

    if f.step.var != iterator {
        return reject(&f.step.span, "loop step does not update the iterator");
    }
    let stride = step_stride(iterator, &f.step)
        .ok_or_else(|| NonCanonical {
            span: f.step.span.clone(),
            message: "loop step is not `it += c` or `it -= c` with a positive integer constant"
                .to_string(),
        })?;
    let ascending = matches!(cmp, CmpKind::Lt | CmpKind::Le);
    if ascending != (stride > 0) {
        return reject(&f.step.span, "loop step direction never terminates the loop");
    }

    for (what, e) in [("initial value", &initial), ("bound", &bound)] {
        let mut bad: Option<String> = None;
        e.visit(&mut |x| {
            if bad.is_some() {
                return;
            }
            if let Expr::Index { base, .. } = x {
                bad = Some(format!("loop {what} reads array `{}`", program.vars[*base].name));
            }
        });
        if let Some(msg) = bad {
            return reject(e.span(), msg);
        }
    }
    let written = written_vars(&f.body);
    for (what, e) in [("initial value", &initial), ("bound", &bound)] {
        let mut bad: Option<String> = None;
        e.visit(&mut |x| {
            if bad.is_some() {
                return;
            }
            if let Expr::Var { id, .. } = x {
                if written.contains(id) {
                    bad = Some(format!(
                        "loop {what} reads `{}`, which the loop body writes",
                        program.vars[*id].name
                    ));
                }
            }
        });
        if let Some(msg) = bad {
            return reject(e.span(), msg);
        }
    }

    Ok(CanonicalLoop { iterator, initial, bound, stride, cmp, span: f.span.clone() })
}

/// Stride of a normalized step, if it is a constant update of the iterator.
fn step_stride(iterator: VarId, step: &ForStep) -> Option<i64> {
    let positive = |e: &Expr| const_eval_int(e).filter(|&c| c > 0);
    match step.op {
        AssignOp::Add => positive(&step.value),
        AssignOp::Sub => positive(&step.value).map(|c| -c),
        AssignOp::Set => match &step.value {
            Expr::Binary { op: BinOp::Add, lhs, rhs, .. } => match (lhs.as_ref(), rhs.as_ref()) {
                (Expr::Var { id, .. }, c) if *id == iterator => positive(c),
                (c, Expr::Var { id, .. }) if *id == iterator => positive(c),
                _ => None,
            },
            Expr::Binary { op: BinOp::Sub, lhs, rhs, .. } => match (lhs.as_ref(), rhs.as_ref()) {
                (Expr::Var { id, .. }, c) if *id == iterator => positive(c).map(|c| -c),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// All variables assigned anywhere in `stmts` (including nested loop
/// iterators and declarations with initializers).
pub fn written_vars(stmts: &[Stmt]) -> std::collections::BTreeSet<VarId> {
    let mut out = std::collections::BTreeSet::new();
    for s in stmts {
        s.visit(&mut |x| match x {
            Stmt::Assign { target, .. } => {
                out.insert(target.var);
            }
            Stmt::Decl { var, .. } => {
                out.insert(*var);
            }
            Stmt::For(f) => {
                out.insert(f.init.var());
            }
            _ => {}
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    /// Brute-force oracle: run the loop and count iterations.
    fn count_by_running(initial: i64, bound: i64, stride: i64, cmp: CmpKind) -> i64 {
        let mut i = initial;
        let mut n = 0;
        while cmp.holds(i, bound) {
            n += 1;
            i += stride;
            assert!(n < 10_000, "runaway loop in oracle");
        }
        n
    }

    #[test]
    fn trip_count_matches_execution_on_a_grid() {
        for cmp in [CmpKind::Lt, CmpKind::Le, CmpKind::Gt, CmpKind::Ge] {
            let ascending = matches!(cmp, CmpKind::Lt | CmpKind::Le);
            for s in 1..=4i64 {
                let stride = if ascending { s } else { -s };
                for initial in -8..=8 {
                    for bound in -8..=8 {
                        let expect = count_by_running(initial, bound, stride, cmp);
                        let got = trip_count(initial, bound, stride, cmp);
                        assert_eq!(
                            got, expect,
                            "init={initial} bound={bound} stride={stride} {}",
                            cmp.symbol()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn final_value_matches_execution() {
        for cmp in [CmpKind::Lt, CmpKind::Le, CmpKind::Gt, CmpKind::Ge] {
            let ascending = matches!(cmp, CmpKind::Lt | CmpKind::Le);
            for s in 1..=3i64 {
                let stride = if ascending { s } else { -s };
                for initial in -6..=6 {
                    for bound in -6..=6 {
                        let mut i = initial;
                        while cmp.holds(i, bound) {
                            i += stride;
                        }
                        let trips = trip_count(initial, bound, stride, cmp);
                        assert_eq!(initial + trips * stride, i);
                    }
                }
            }
        }
    }

    fn canon(src: &str) -> Result<CanonicalLoop, NonCanonical> {
        let p = parse(src, "t.c").unwrap().program;
        let blocks = p.pragma_blocks();
        canonicalize_loop(&p, &blocks[0].for_stmt)
    }

    fn wrap(header: &str, body: &str) -> String {
        format!(
            "int n; int a[64]; int main() {{ int i; int j;\n#pragma omp parallel for\nfor ({header}) {{ {body} }} return 0; }}"
        )
    }

    #[test]
    fn accepts_standard_ascending_loop() {
        let c = canon(&wrap("i = 0; i < n; i++", "a[i] = i;")).unwrap();
        assert_eq!(c.stride, 1);
        assert_eq!(c.cmp, CmpKind::Lt);
        assert_eq!(c.trip_count(0, 10), 10);
    }

    #[test]
    fn accepts_descending_and_strided_forms() {
        let c = canon(&wrap("i = n; i >= 1; i -= 2", "a[0] = a[0];")).unwrap();
        assert_eq!(c.stride, -2);
        assert_eq!(c.trip_count(9, 1), 5); // 9 7 5 3 1
        let c = canon(&wrap("i = 0; i < n; i = i + 3", "a[i] = 0;")).unwrap();
        assert_eq!(c.stride, 3);
        assert_eq!(c.trip_count(0, 10), 4); // 0 3 6 9
    }

    #[test]
    fn rejects_wrong_direction() {
        let err = canon(&wrap("i = 0; i < n; i--", "a[0] = 0;")).unwrap_err();
        assert!(err.message.contains("direction"), "{}", err.message);
    }

    #[test]
    fn rejects_bound_written_in_body() {
        let err = canon(&wrap("i = 0; i < n; i++", "n = n - 1;")).unwrap_err();
        assert!(err.message.contains("body writes"), "{}", err.message);
    }

    #[test]
    fn rejects_array_bound() {
        let err = canon(&wrap("i = 0; i < a[0]; i++", "j = i;")).unwrap_err();
        assert!(err.message.contains("reads array"), "{}", err.message);
    }

    #[test]
    fn rejects_iterator_in_bound() {
        let err = canon(&wrap("i = 0; i < i + n; i++", "j = i;")).unwrap_err();
        assert!(err.message.contains("mentions the iterator"), "{}", err.message);
    }
}
