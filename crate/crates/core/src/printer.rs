//! Pretty-printer for the C subset.
//!
//! Output is normalized (canonical spacing, braces around every body, fixed
//! clause order in pragmas), so printing is a fixpoint: parsing the printed
//! text and printing again yields byte-identical output. The code generator
//! reuses these routines for statements it copies through unchanged.

use std::fmt::Write as _;

use crate::ast::*;

/// Precedence levels used to decide where parentheses are required.
fn precedence(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne => 3,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
        BinOp::Add | BinOp::Sub => 5,
        BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
    }
}

const UNARY_PREC: u8 = 7;

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => precedence(*op),
        Expr::Unary { .. } => UNARY_PREC,
        _ => 8,
    }
}

/// Render one expression. `vars` supplies names for `VarId`s.
pub fn print_expr(e: &Expr, vars: &[VarDecl]) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, vars);
    s
}

/// Render an expression as C99: intrinsics become the typed helper
/// functions (`omp2dm_imin`, ...) or the matching <math.h> calls.
pub fn print_expr_c99(e: &Expr, vars: &[VarDecl]) -> String {
    let mut s = String::new();
    write_expr_d(&mut s, e, vars, true);
    s
}

/// True if the expression evaluates to a floating-point value (mirrors the
/// interpreter's promotion rules).
pub fn expr_is_float(e: &Expr, vars: &[VarDecl]) -> bool {
    match e {
        Expr::IntLit { .. } => false,
        Expr::FloatLit { .. } => true,
        Expr::Var { id, .. } => vars[*id].kind.is_float(),
        Expr::Index { base, .. } => vars[*base].kind.is_float(),
        Expr::Unary { op, operand, .. } => match op {
            UnaryOp::Neg => expr_is_float(operand, vars),
            UnaryOp::Not => false,
        },
        Expr::Binary { op, lhs, rhs, .. } => match op {
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne | BinOp::And
            | BinOp::Or => false,
            _ => expr_is_float(lhs, vars) || expr_is_float(rhs, vars),
        },
        Expr::Call { intrinsic, args, .. } => match intrinsic {
            Intrinsic::Sqrt | Intrinsic::Fabs => true,
            Intrinsic::Min | Intrinsic::Max => args.iter().any(|a| expr_is_float(a, vars)),
        },
    }
}

fn write_expr(out: &mut String, e: &Expr, vars: &[VarDecl]) {
    write_expr_d(out, e, vars, false)
}

fn write_expr_d(out: &mut String, e: &Expr, vars: &[VarDecl], c99: bool) {
    match e {
        Expr::IntLit { value, .. } => {
            let _ = write!(out, "{value}");
        }
        Expr::FloatLit { value, .. } => {
            // `{:?}` keeps a decimal point or exponent, so the literal
            // re-lexes as a float and round-trips exactly.
            let _ = write!(out, "{value:?}");
        }
        Expr::Var { id, .. } => out.push_str(&vars[*id].name),
        Expr::Index { base, indices, .. } => {
            out.push_str(&vars[*base].name);
            for ix in indices {
                out.push('[');
                write_expr_d(out, ix, vars, c99);
                out.push(']');
            }
        }
        Expr::Unary { op, operand, .. } => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            // Parenthesize nested unaries: `--x` would lex as a decrement.
            let needs_parens = expr_prec(operand) < UNARY_PREC || matches!(**operand, Expr::Unary { .. });
            if needs_parens {
                out.push('(');
                write_expr_d(out, operand, vars, c99);
                out.push(')');
            } else {
                write_expr_d(out, operand, vars, c99);
            }
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let prec = precedence(*op);
            let lhs_parens = expr_prec(lhs) < prec;
            let rhs_parens = expr_prec(rhs) <= prec;
            if lhs_parens {
                out.push('(');
            }
            write_expr_d(out, lhs, vars, c99);
            if lhs_parens {
                out.push(')');
            }
            let _ = write!(out, " {} ", op.symbol());
            if rhs_parens {
                out.push('(');
            }
            write_expr_d(out, rhs, vars, c99);
            if rhs_parens {
                out.push(')');
            }
        }
        Expr::Call { intrinsic, args, .. } => {
            if c99 {
                let float = expr_is_float(e, vars);
                out.push_str(match (intrinsic, float) {
                    (Intrinsic::Sqrt, _) => "sqrt",
                    (Intrinsic::Fabs, _) => "fabs",
                    (Intrinsic::Min, false) => "omp2dm_imin",
                    (Intrinsic::Min, true) => "omp2dm_fmin",
                    (Intrinsic::Max, false) => "omp2dm_imax",
                    (Intrinsic::Max, true) => "omp2dm_fmax",
                });
            } else {
                out.push_str(intrinsic.name());
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr_d(out, a, vars, c99);
            }
            out.push(')');
        }
    }
}

pub fn escape_c_string(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\0' => out.push_str("\\0"),
            other => out.push(other),
        }
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

/// Render the declaration line for a variable (no indentation, no newline).
pub fn print_decl(decl: &VarDecl, vars: &[VarDecl]) -> String {
    let mut s = format!("{} {}", decl.kind.c_name(), decl.name);
    for d in &decl.dims {
        let _ = write!(s, "[{d}]");
    }
    if let Some(init) = &decl.init {
        let _ = write!(s, " = {}", print_expr(init, vars));
    }
    s.push(';');
    s
}

/// Reconstruct the pragma line for a directive in canonical clause order.
pub fn print_pragma(d: &OmpDirective) -> String {
    let mut s = String::from("#pragma omp parallel for");
    if let Some(sc) = &d.schedule {
        let kind = match sc.kind {
            ScheduleKind::Static => "static",
            ScheduleKind::Dynamic => "dynamic",
            ScheduleKind::Guided => "guided",
        };
        match sc.chunk {
            Some(c) => {
                let _ = write!(s, " schedule({kind}, {c})");
            }
            None => {
                let _ = write!(s, " schedule({kind})");
            }
        }
    }
    if let Some(r) = &d.reduction {
        let _ = write!(s, " reduction({}: {})", r.op.symbol(), r.vars.join(", "));
    }
    if !d.private_list.is_empty() {
        let _ = write!(s, " private({})", d.private_list.join(", "));
    }
    if !d.shared_list.is_empty() {
        let _ = write!(s, " shared({})", d.shared_list.join(", "));
    }
    if let Some(dev) = &d.target_device {
        let _ = write!(s, " target device({dev})");
    }
    s
}

pub fn print_for_header(f: &ForStmt, vars: &[VarDecl]) -> String {
    let iter = f.iterator();
    let init = match &f.init {
        ForInit::Assign { var, value } => {
            format!("{} = {}", vars[*var].name, print_expr(value, vars))
        }
        ForInit::Decl { var } => {
            let d = &vars[*var];
            let init = d.init.as_ref().expect("loop decl always has an initializer");
            format!("{} {} = {}", d.kind.c_name(), d.name, print_expr(init, vars))
        }
    };
    let step = print_step(&f.step, &vars[iter].name, vars);
    format!("for ({init}; {cond}; {step})", cond = print_expr(&f.cond, vars))
}

fn print_step(step: &ForStep, iter_name: &str, vars: &[VarDecl]) -> String {
    match (&step.op, &step.value) {
        (AssignOp::Add, Expr::IntLit { value: 1, .. }) => format!("{iter_name}++"),
        (AssignOp::Sub, Expr::IntLit { value: 1, .. }) => format!("{iter_name}--"),
        (AssignOp::Set, e) => format!("{iter_name} = {}", print_expr(e, vars)),
        (op, e) => format!("{iter_name} {} {}", op.symbol(), print_expr(e, vars)),
    }
}

pub fn write_stmt(out: &mut String, s: &Stmt, vars: &[VarDecl], level: usize) {
    match s {
        Stmt::Decl { var, .. } => {
            indent(out, level);
            out.push_str(&print_decl(&vars[*var], vars));
            out.push('\n');
        }
        Stmt::Assign { target, op, value, .. } => {
            indent(out, level);
            let mut lhs = vars[target.var].name.clone();
            for ix in &target.indices {
                let _ = write!(lhs, "[{}]", print_expr(ix, vars));
            }
            let _ = writeln!(out, "{lhs} {} {};", op.symbol(), print_expr(value, vars));
        }
        Stmt::If { cond, then_body, else_body, .. } => {
            indent(out, level);
            let _ = writeln!(out, "if ({}) {{", print_expr(cond, vars));
            for st in then_body {
                write_stmt(out, st, vars, level + 1);
            }
            if else_body.is_empty() {
                indent(out, level);
                out.push_str("}\n");
            } else {
                indent(out, level);
                out.push_str("} else {\n");
                for st in else_body {
                    write_stmt(out, st, vars, level + 1);
                }
                indent(out, level);
                out.push_str("}\n");
            }
        }
        Stmt::While { cond, body, .. } => {
            indent(out, level);
            let _ = writeln!(out, "while ({}) {{", print_expr(cond, vars));
            for st in body {
                write_stmt(out, st, vars, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::For(f) => {
            indent(out, level);
            let _ = writeln!(out, "{} {{", print_for_header(f, vars));
            for st in &f.body {
                write_stmt(out, st, vars, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::Block { body, .. } => {
            indent(out, level);
            out.push_str("{\n");
            for st in body {
                write_stmt(out, st, vars, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        Stmt::Print { format, args, .. } => {
            indent(out, level);
            let mut line = format!("printf(\"{}\"", escape_c_string(format));
            for a in args {
                let _ = write!(line, ", {}", print_expr(a, vars));
            }
            let _ = writeln!(out, "{line});");
        }
        Stmt::CallStmt { call, .. } => {
            indent(out, level);
            let _ = writeln!(out, "{};", print_expr(call, vars));
        }
        Stmt::Return { value, .. } => {
            indent(out, level);
            match value {
                Some(e) => {
                    let _ = writeln!(out, "return {};", print_expr(e, vars));
                }
                None => out.push_str("return;\n"),
            }
        }
        Stmt::Pragma(p) => {
            indent(out, level);
            out.push_str(&print_pragma(&p.directive));
            out.push('\n');
            write_stmt(out, &Stmt::For(Box::new(p.for_stmt.clone())), vars, level);
        }
    }
}

/// Render a whole program as normalized subset C.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for &g in &p.globals {
        out.push_str(&print_decl(&p.vars[g], &p.vars));
        out.push('\n');
    }
    if !p.globals.is_empty() {
        out.push('\n');
    }
    for f in &p.functions {
        let ret = if f.ret_void { "void" } else { "int" };
        let _ = writeln!(out, "{ret} {}(void) {{", f.name);
        for s in &f.body {
            write_stmt(&mut out, s, &p.vars, 1);
        }
        out.push_str("}\n");
    }
    out
}
