//! Array subscript analysis.
//!
//! To slice arrays along the distributed loop, each subscript is matched
//! against the affine form `scale * it + offset` where `offset` does not
//! mention the iterator. Subscripts that mention the iterator in any other
//! shape are classed as mixed, and iterator-free subscripts are kept whole.

use serde::Serialize;

use crate::ast::*;
use crate::parser::const_eval_int;
use crate::printer::print_expr;
use crate::span::SourceSpan;

/// Shape of one subscript with respect to the distributed iterator.
#[derive(Debug, Clone, Serialize)]
pub enum SubscriptForm {
    /// `scale * it + offset`, with `offset` free of the iterator.
    Affine { scale: i64, offset: Expr },
    /// Does not mention the iterator at all.
    Free(Expr),
    /// Mentions the iterator, but not affinely.
    Mixed,
}

impl SubscriptForm {
    /// Constant value of the offset, if it folds.
    pub fn const_offset(&self) -> Option<i64> {
        match self {
            SubscriptForm::Affine { offset, .. } => const_eval_int(offset),
            _ => None,
        }
    }

    /// Human-readable rendering for reports (`2*it+1`, `j`, `mixed`).
    pub fn describe(&self, vars: &[VarDecl], iter_name: &str) -> String {
        match self {
            SubscriptForm::Affine { scale, offset } => {
                let mut s = match scale {
                    1 => iter_name.to_string(),
                    -1 => format!("-{iter_name}"),
                    k => format!("{k}*{iter_name}"),
                };
                let off = print_expr(offset, vars);
                if off != "0" {
                    if let Some(c) = const_eval_int(offset) {
                        if c < 0 {
                            s.push_str(&format!("{c}"));
                        } else {
                            s.push_str(&format!("+{c}"));
                        }
                    } else {
                        s.push_str(&format!("+({off})"));
                    }
                }
                s
            }
            SubscriptForm::Free(e) => print_expr(e, vars),
            SubscriptForm::Mixed => "mixed".to_string(),
        }
    }

    /// Structural equality used to compare access forms: same scale and a
    /// textually identical offset.
    pub fn same_shape(&self, other: &SubscriptForm, vars: &[VarDecl]) -> bool {
        match (self, other) {
            (
                SubscriptForm::Affine { scale: a, offset: x },
                SubscriptForm::Affine { scale: b, offset: y },
            ) => a == b && print_expr(x, vars) == print_expr(y, vars),
            (SubscriptForm::Free(x), SubscriptForm::Free(y)) => {
                print_expr(x, vars) == print_expr(y, vars)
            }
            _ => false,
        }
    }
}

/// One array read or write inside a pragma block.
#[derive(Debug, Clone, Serialize)]
pub struct ArrayAccess {
    pub var: VarId,
    pub write: bool,
    /// One form per dimension, in subscript order.
    pub forms: Vec<SubscriptForm>,
    pub span: SourceSpan,
}

impl ArrayAccess {
    /// The form of the first (row) subscript.
    pub fn row_form(&self) -> &SubscriptForm {
        &self.forms[0]
    }

    /// Does any subscript mention the iterator?
    pub fn mentions_iterator(&self) -> bool {
        self.forms
            .iter()
            .any(|f| matches!(f, SubscriptForm::Affine { .. } | SubscriptForm::Mixed))
    }
}

/// Match one subscript expression against `scale * it + offset`.
pub fn match_affine(e: &Expr, iter: VarId) -> SubscriptForm {
    if !e.mentions(iter) {
        return SubscriptForm::Free(e.clone());
    }
    match affine_parts(e, iter) {
        Some((scale, offset)) if scale != 0 => SubscriptForm::Affine { scale, offset },
        // A zero scale with the iterator mentioned means something like
        // `0 * it + j`; treat it as iterator-free in value but keep it
        // conservative.
        _ => SubscriptForm::Mixed,
    }
}

/// Decompose into `(scale, offset)`; `None` if not affine in the iterator.
fn affine_parts(e: &Expr, iter: VarId) -> Option<(i64, Expr)> {
    match e {
        Expr::Var { id, .. } if *id == iter => Some((1, Expr::int(0))),
        Expr::Unary { op: UnaryOp::Neg, operand, .. } => {
            let (a, b) = affine_parts(operand, iter)?;
            Some((-a, negate(&b)))
        }
        Expr::Binary { op: BinOp::Add, lhs, rhs, .. } => {
            match (lhs.mentions(iter), rhs.mentions(iter)) {
                (true, false) => {
                    let (a, b) = affine_parts(lhs, iter)?;
                    Some((a, add(b, rhs.as_ref().clone())))
                }
                (false, true) => {
                    let (a, b) = affine_parts(rhs, iter)?;
                    Some((a, add(lhs.as_ref().clone(), b)))
                }
                _ => None,
            }
        }
        Expr::Binary { op: BinOp::Sub, lhs, rhs, .. } => {
            match (lhs.mentions(iter), rhs.mentions(iter)) {
                (true, false) => {
                    let (a, b) = affine_parts(lhs, iter)?;
                    Some((a, sub(b, rhs.as_ref().clone())))
                }
                (false, true) => {
                    let (a, b) = affine_parts(rhs, iter)?;
                    Some((-a, sub(lhs.as_ref().clone(), b)))
                }
                _ => None,
            }
        }
        Expr::Binary { op: BinOp::Mul, lhs, rhs, .. } => {
            match (lhs.mentions(iter), rhs.mentions(iter)) {
                (true, false) => {
                    let k = const_eval_int(rhs)?;
                    let (a, b) = affine_parts(lhs, iter)?;
                    Some((a * k, scale_expr(b, k)))
                }
                (false, true) => {
                    let k = const_eval_int(lhs)?;
                    let (a, b) = affine_parts(rhs, iter)?;
                    Some((a * k, scale_expr(b, k)))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::IntLit { value: 0, .. })
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    fold_or(Expr::binary(BinOp::Add, a, b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    fold_or(Expr::binary(BinOp::Sub, a, b))
}

fn negate(e: &Expr) -> Expr {
    if is_zero(e) {
        return Expr::int(0);
    }
    fold_or(Expr::binary(BinOp::Sub, Expr::int(0), e.clone()))
}

fn scale_expr(e: Expr, k: i64) -> Expr {
    if is_zero(&e) {
        return Expr::int(0);
    }
    fold_or(Expr::binary(BinOp::Mul, e, Expr::int(k)))
}

/// Fold to an integer literal when the expression is constant, otherwise
/// keep it symbolic.
fn fold_or(e: Expr) -> Expr {
    match const_eval_int(&e) {
        Some(v) => Expr::int(v),
        None => e,
    }
}

/// Collect every array access in a pragma block's loop body, including the
/// implicit reads of compound-assignment targets and accesses in nested
/// loop headers.
pub fn collect_accesses(program: &Program, block: &PragmaBlock) -> Vec<ArrayAccess> {
    let iter = block.for_stmt.iterator();
    let mut out = Vec::new();
    let on_expr = |e: &Expr, out: &mut Vec<ArrayAccess>| {
        e.visit(&mut |x| {
            if let Expr::Index { base, indices, span } = x {
                out.push(ArrayAccess {
                    var: *base,
                    write: false,
                    forms: indices.iter().map(|ix| match_affine(ix, iter)).collect(),
                    span: span.clone(),
                });
            }
        });
    };
    let on_stmt = |s: &Stmt, out: &mut Vec<ArrayAccess>| match s {
        Stmt::Assign { target, op, value, .. } => {
            if !target.indices.is_empty() {
                let forms: Vec<SubscriptForm> =
                    target.indices.iter().map(|ix| match_affine(ix, iter)).collect();
                if op.bin_op().is_some() {
                    out.push(ArrayAccess {
                        var: target.var,
                        write: false,
                        forms: forms.clone(),
                        span: target.span.clone(),
                    });
                }
                out.push(ArrayAccess {
                    var: target.var,
                    write: true,
                    forms,
                    span: target.span.clone(),
                });
            }
            for ix in &target.indices {
                on_expr_dispatch(ix, iter, out);
            }
            on_expr_dispatch(value, iter, out);
        }
        Stmt::If { cond, .. } | Stmt::While { cond, .. } => on_expr_dispatch(cond, iter, out),
        Stmt::For(f) => {
            if let ForInit::Assign { value, .. } = &f.init {
                on_expr_dispatch(value, iter, out);
            }
            on_expr_dispatch(&f.cond, iter, out);
            on_expr_dispatch(&f.step.value, iter, out);
        }
        Stmt::Decl { var, .. } => {
            if let Some(init) = &program.vars[*var].init {
                on_expr_dispatch(init, iter, out);
            }
        }
        Stmt::Print { args, .. } => {
            for a in args {
                on_expr_dispatch(a, iter, out);
            }
        }
        Stmt::CallStmt { call, .. } => on_expr_dispatch(call, iter, out),
        Stmt::Return { value: Some(e), .. } => on_expr_dispatch(e, iter, out),
        _ => {}
    };
    // Reads in the distributed loop's own header.
    if let ForInit::Assign { value, .. } = &block.for_stmt.init {
        on_expr(value, &mut out);
    }
    on_expr(&block.for_stmt.cond, &mut out);
    on_expr(&block.for_stmt.step.value, &mut out);
    for s in &block.for_stmt.body {
        s.visit(&mut |x| on_stmt(x, &mut out));
    }
    out
}

fn on_expr_dispatch(e: &Expr, iter: VarId, out: &mut Vec<ArrayAccess>) {
    e.visit(&mut |x| {
        if let Expr::Index { base, indices, span } = x {
            out.push(ArrayAccess {
                var: *base,
                write: false,
                forms: indices.iter().map(|ix| match_affine(ix, iter)).collect(),
                span: span.clone(),
            });
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn forms_of(body: &str) -> (Program, Vec<ArrayAccess>) {
        let src = format!(
            "int n; int a[8]; int b[8][8]; int j;\nint main() {{ int i;\n#pragma omp parallel for\nfor (i = 0; i < n; i++) {{ {body} }} return 0; }}"
        );
        let p = parse(&src, "t.c").unwrap().program;
        let acc = {
            let blocks = p.pragma_blocks();
            collect_accesses(&p, blocks[0])
        };
        (p, acc)
    }

    fn affine(form: &SubscriptForm) -> (i64, Option<i64>) {
        match form {
            SubscriptForm::Affine { scale, offset } => (*scale, const_eval_int(offset)),
            other => panic!("expected affine, got {other:?}"),
        }
    }

    #[test]
    fn plain_iterator_subscript() {
        let (_p, acc) = forms_of("a[i] = 1;");
        assert_eq!(acc.len(), 1);
        assert!(acc[0].write);
        assert_eq!(affine(acc[0].row_form()), (1, Some(0)));
    }

    #[test]
    fn shifted_and_scaled_subscripts() {
        let (_p, acc) = forms_of("a[i + 1] = a[2 * i] + a[n - i];");
        let writes: Vec<_> = acc.iter().filter(|a| a.write).collect();
        assert_eq!(affine(writes[0].row_form()), (1, Some(1)));
        let reads: Vec<_> = acc.iter().filter(|a| !a.write).collect();
        assert_eq!(affine(reads[0].row_form()), (2, Some(0)));
        let (scale, off) = affine(reads[1].row_form());
        assert_eq!(scale, -1);
        assert_eq!(off, None); // offset is `n`, symbolic
    }

    #[test]
    fn iterator_free_and_mixed_subscripts() {
        let (_p, acc) = forms_of("b[j][i] = b[i][i * i];");
        let w = &acc[0];
        assert!(w.write);
        assert!(matches!(w.row_form(), SubscriptForm::Free(_)));
        assert!(matches!(w.forms[1], SubscriptForm::Affine { .. }));
        let r = acc.iter().find(|a| !a.write).unwrap();
        assert!(matches!(r.forms[1], SubscriptForm::Mixed));
    }

    #[test]
    fn compound_assign_counts_as_read_and_write() {
        let (_p, acc) = forms_of("a[i] += 2;");
        assert_eq!(acc.len(), 2);
        assert!(acc.iter().any(|a| a.write));
        assert!(acc.iter().any(|a| !a.write));
    }

    #[test]
    fn nested_loop_subscripts_are_collected() {
        let (_p, acc) = forms_of("for (j = 0; j < n; j++) { b[i][j] = b[i][j] + 1; }");
        assert!(acc.len() >= 2);
        for a in &acc {
            assert_eq!(affine(a.row_form()), (1, Some(0)));
            assert!(matches!(a.forms[1], SubscriptForm::Free(_)));
        }
    }

    #[test]
    fn describe_renders_compactly() {
        let (p, acc) = forms_of("a[2 * i + 1] = a[i - 3];");
        assert_eq!(acc[0].row_form().describe(&p.vars, "i"), "2*i+1");
        let r = acc.iter().find(|a| !a.write).unwrap();
        assert_eq!(r.row_form().describe(&p.vars, "i"), "i-3");
    }
}
