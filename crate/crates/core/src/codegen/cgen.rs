//! C99 emission for lowered programs.
//!
//! The output is a single self-contained translation unit: globals keep
//! their file-scope declarations, every local (user and synthetic) is
//! hoisted to the top of `main` with a zero initializer, and the lowered
//! master/worker bodies are selected by rank at runtime. Emission is a pure
//! function of the lowered program, so the same input always produces
//! byte-identical output.

use std::fmt::Write as _;

use crate::ast::*;
use crate::codegen::ir::*;
use crate::printer;

/// Render a lowered program as a complete C99 translation unit.
pub fn emit_c(mp: &MpiProgram) -> String {
    Cgen::new(mp).emit()
}

/// Which of the emitted helper functions / headers the program needs.
#[derive(Default)]
struct Needs {
    imin: bool,
    imax: bool,
    fmin: bool,
    fmax: bool,
    math: bool,
}

struct Cgen<'a> {
    mp: &'a MpiProgram,
    vars: &'a [VarDecl],
    /// Locals (by id) that actually appear in the emitted bodies.
    used: Vec<bool>,
    needs: Needs,
    /// Name of the `MPI_Status` local (kept clear of program identifiers).
    status: String,
    /// Prefix for generated zero-fill loop counters.
    zero_ctr: String,
}

impl<'a> Cgen<'a> {
    fn new(mp: &'a MpiProgram) -> Self {
        let vars = &mp.program.vars;
        let mut cg = Cgen {
            mp,
            vars,
            used: vec![false; vars.len()],
            needs: Needs::default(),
            status: unique_name("_dm_status", vars),
            zero_ctr: unique_name("_dm_z", vars),
        };
        cg.scan();
        cg
    }

    // ---------------------------------------------------------------- scan

    /// Record every variable and intrinsic the emitted code will mention, so
    /// declarations and helpers can be limited to what is actually used
    /// (the output compiles cleanly under -Wall -Wextra).
    fn scan(&mut self) {
        let rt = self.mp.rt;
        for v in [rt.rank, rt.size, rt.header, rt.ret] {
            self.used[v] = true;
        }
        let mut exprs: Vec<&Expr> = Vec::new();
        let mut stmts: Vec<&Stmt> = Vec::new();
        for body in [&self.mp.master, &self.mp.worker] {
            visit_stmts(body, &mut |s| match s {
                MpiStmt::Plain(st) => stmts.push(st),
                MpiStmt::If { cond, .. } | MpiStmt::While { cond, .. } => exprs.push(cond),
                MpiStmt::Send { to, payload, .. } => {
                    exprs.push(to);
                    scan_payload(payload, &mut exprs, &mut self.used);
                }
                MpiStmt::Recv { from, payload, save_source, save_tag, .. } => {
                    if let Source::Rank(e) = from {
                        exprs.push(e);
                    }
                    scan_payload(payload, &mut exprs, &mut self.used);
                    for v in [save_source, save_tag].into_iter().flatten() {
                        self.used[*v] = true;
                    }
                }
                MpiStmt::Break | MpiStmt::Comment(_) => {}
            });
        }
        for st in stmts {
            self.scan_stmt(st);
        }
        for e in exprs {
            self.scan_expr(e);
        }
        // Global initializers are folded to literals, but scan them anyway so
        // a surprise non-constant initializer still pulls in its helpers.
        for &g in &self.mp.program.globals {
            if let Some(init) = &self.vars[g].init {
                self.scan_expr(init);
            }
        }
    }

    fn scan_stmt(&mut self, root: &Stmt) {
        let mut exprs: Vec<Expr> = Vec::new();
        root.visit(&mut |s| match s {
            Stmt::Decl { var, .. } => {
                self.used[*var] = true;
                if let Some(init) = &self.vars[*var].init {
                    exprs.push(init.clone());
                }
            }
            Stmt::Assign { target, value, .. } => {
                self.used[target.var] = true;
                exprs.extend(target.indices.iter().cloned());
                exprs.push(value.clone());
            }
            Stmt::If { cond, .. } => exprs.push(cond.clone()),
            Stmt::While { cond, .. } => exprs.push(cond.clone()),
            Stmt::For(fs) => {
                match &fs.init {
                    ForInit::Assign { var, value } => {
                        self.used[*var] = true;
                        exprs.push(value.clone());
                    }
                    ForInit::Decl { var } => {
                        self.used[*var] = true;
                        if let Some(init) = &self.vars[*var].init {
                            exprs.push(init.clone());
                        }
                    }
                }
                exprs.push(fs.cond.clone());
                self.used[fs.step.var] = true;
                exprs.push(fs.step.value.clone());
            }
            Stmt::Print { args, .. } => exprs.extend(args.iter().cloned()),
            Stmt::CallStmt { call, .. } => exprs.push(call.clone()),
            Stmt::Return { value, .. } => exprs.extend(value.iter().cloned()),
            Stmt::Pragma(p) => {
                // Clause lists name variables even when the body does not.
                for (v, _) in &p.reductions {
                    self.used[*v] = true;
                }
                for v in p.private_vars.iter().chain(&p.shared_vars) {
                    self.used[*v] = true;
                }
            }
            Stmt::Block { .. } => {}
        });
        for e in &exprs {
            self.scan_expr(e);
        }
    }

    fn scan_expr(&mut self, root: &Expr) {
        root.visit(&mut |e| match e {
            Expr::Var { id, .. } => self.used[*id] = true,
            Expr::Index { base, .. } => self.used[*base] = true,
            Expr::Call { intrinsic, .. } => match intrinsic {
                Intrinsic::Sqrt | Intrinsic::Fabs => self.needs.math = true,
                Intrinsic::Min => {
                    if printer::expr_is_float(e, self.vars) {
                        self.needs.fmin = true;
                    } else {
                        self.needs.imin = true;
                    }
                }
                Intrinsic::Max => {
                    if printer::expr_is_float(e, self.vars) {
                        self.needs.fmax = true;
                    } else {
                        self.needs.imax = true;
                    }
                }
            },
            _ => {}
        });
    }

    // ---------------------------------------------------------------- emit

    fn emit(&self) -> String {
        let mut out = String::new();
        let rt = self.mp.rt;
        let _ = writeln!(
            out,
            "/* Master/worker MPI translation of {} (generated; do not edit). */",
            self.mp.program.file
        );
        out.push_str("#include <stdio.h>\n");
        if self.needs.math {
            out.push_str("#include <math.h>\n");
        }
        out.push_str("#include <mpi.h>\n");

        let helpers = [
            (self.needs.imin, "static long omp2dm_imin(long a, long b) { return a < b ? a : b; }"),
            (self.needs.imax, "static long omp2dm_imax(long a, long b) { return a > b ? a : b; }"),
            (
                self.needs.fmin,
                "static double omp2dm_fmin(double a, double b) { return a < b ? a : b; }",
            ),
            (
                self.needs.fmax,
                "static double omp2dm_fmax(double a, double b) { return a > b ? a : b; }",
            ),
        ];
        if helpers.iter().any(|(on, _)| *on) {
            out.push('\n');
            for (on, text) in helpers {
                if on {
                    out.push_str(text);
                    out.push('\n');
                }
            }
        }

        if !self.mp.program.globals.is_empty() {
            out.push('\n');
            for &g in &self.mp.program.globals {
                out.push_str(&self.global_decl(g));
                out.push('\n');
            }
        }

        out.push_str("\nint main(int argc, char **argv)\n{\n");
        for (id, d) in self.vars.iter().enumerate() {
            if d.scope == VarScope::Local && self.used[id] {
                let _ = writeln!(out, "    {}", self.local_decl(d));
            }
        }
        let _ = writeln!(out, "    MPI_Status {};", self.status);
        out.push('\n');
        out.push_str("    MPI_Init(&argc, &argv);\n");
        let _ = writeln!(out, "    MPI_Comm_rank(MPI_COMM_WORLD, &{});", self.name(rt.rank));
        let _ = writeln!(out, "    MPI_Comm_size(MPI_COMM_WORLD, &{});", self.name(rt.size));
        let _ = writeln!(out, "    if ({} < 2) {{", self.name(rt.size));
        out.push_str(
            "        fprintf(stderr, \"this program needs at least 2 MPI processes\\n\");\n",
        );
        out.push_str("        MPI_Finalize();\n        return 1;\n    }\n\n");
        let _ = writeln!(out, "    if ({} == 0) {{", self.name(rt.rank));
        self.write_mpi_body(&mut out, &self.mp.master, 2, true);
        out.push_str("    } else {\n");
        self.write_mpi_body(&mut out, &self.mp.worker, 2, false);
        out.push_str("    }\n\n");
        out.push_str("    MPI_Finalize();\n");
        let _ = writeln!(out, "    return {};", self.name(rt.ret));
        out.push_str("}\n");
        out
    }

    fn name(&self, v: VarId) -> &str {
        &self.vars[v].name
    }

    fn expr(&self, e: &Expr) -> String {
        printer::print_expr_c99(e, self.vars)
    }

    /// File-scope declaration; initializers are folded to literals because C
    /// requires constant expressions here.
    fn global_decl(&self, id: VarId) -> String {
        let d = &self.vars[id];
        let mut s = format!("{} {}", d.kind.c_name(), d.name);
        for dim in &d.dims {
            let _ = write!(s, "[{dim}]");
        }
        if let Some(init) = &d.init {
            let text = match crate::runtime::interp::eval_const(init) {
                Some(v) => value_literal(&v),
                None => self.expr(init),
            };
            let _ = write!(s, " = {text}");
        }
        s.push(';');
        s
    }

    /// Hoisted zero-initialized declaration for one local.
    fn local_decl(&self, d: &VarDecl) -> String {
        let mut s = format!("{} {}", d.kind.c_name(), d.name);
        for dim in &d.dims {
            let _ = write!(s, "[{dim}]");
        }
        match d.dims.len() {
            0 => s.push_str(" = 0;"),
            1 => s.push_str(" = {0};"),
            _ => s.push_str(" = {{0}};"),
        }
        s
    }

    // ------------------------------------------------------ lowered bodies

    fn write_mpi_body(&self, out: &mut String, body: &[MpiStmt], level: usize, top: bool) {
        let pad = "    ".repeat(level);
        for s in body {
            match s {
                MpiStmt::Plain(st) => self.write_stmt(out, st, level, top),
                MpiStmt::If { cond, then_body, else_body } => {
                    let _ = writeln!(out, "{pad}if ({}) {{", self.expr(cond));
                    self.write_mpi_body(out, then_body, level + 1, false);
                    if !else_body.is_empty() {
                        let _ = writeln!(out, "{pad}}} else {{");
                        self.write_mpi_body(out, else_body, level + 1, false);
                    }
                    let _ = writeln!(out, "{pad}}}");
                }
                MpiStmt::While { cond, body } => {
                    let _ = writeln!(out, "{pad}while ({}) {{", self.expr(cond));
                    self.write_mpi_body(out, body, level + 1, false);
                    let _ = writeln!(out, "{pad}}}");
                }
                MpiStmt::Break => {
                    let _ = writeln!(out, "{pad}break;");
                }
                MpiStmt::Send { to, tag, payload } => {
                    let (buf, count, dtype) = self.payload_args(payload);
                    let _ = writeln!(
                        out,
                        "{pad}MPI_Send({buf}, {count}, {dtype}, {}, {tag}, MPI_COMM_WORLD);{}",
                        self.expr(to),
                        self.tag_comment(*tag),
                    );
                }
                MpiStmt::Recv { from, tag, payload, save_source, save_tag } => {
                    let (buf, count, dtype) = self.payload_args(payload);
                    let src = match from {
                        Source::Rank(e) => self.expr(e),
                        Source::Any => "MPI_ANY_SOURCE".to_string(),
                    };
                    let (tg, comment) = match tag {
                        RecvTag::Exact(t) => (t.to_string(), self.tag_comment(*t)),
                        RecvTag::Any => ("MPI_ANY_TAG".to_string(), String::new()),
                    };
                    let _ = writeln!(
                        out,
                        "{pad}MPI_Recv({buf}, {count}, {dtype}, {src}, {tg}, MPI_COMM_WORLD, \
                         &{});{comment}",
                        self.status,
                    );
                    if let Some(v) = save_source {
                        let _ = writeln!(out, "{pad}{} = {}.MPI_SOURCE;", self.name(*v), self.status);
                    }
                    if let Some(v) = save_tag {
                        let _ = writeln!(out, "{pad}{} = {}.MPI_TAG;", self.name(*v), self.status);
                    }
                }
                MpiStmt::Comment(text) => {
                    let _ = writeln!(out, "{pad}/* {text} */");
                }
            }
        }
    }

    fn tag_comment(&self, tag: i64) -> String {
        match MessageTag::decode(tag) {
            Some(t) => format!(" /* {} */", t.describe(&self.mp.program)),
            None => String::new(),
        }
    }

    /// `(buffer, count, datatype)` arguments for a payload.
    fn payload_args(&self, p: &Payload) -> (String, String, &'static str) {
        match p {
            Payload::Header(v) => (self.name(*v).to_string(), "2".to_string(), "MPI_INT"),
            Payload::Scalar(v) => {
                (format!("&{}", self.name(*v)), "1".to_string(), self.vars[*v].kind.mpi_name())
            }
            Payload::Whole(v) => {
                let d = &self.vars[*v];
                let buf = match d.dims.len() {
                    1 => d.name.clone(),
                    _ => format!("&{}[0][0]", d.name),
                };
                (buf, d.elems().to_string(), d.kind.mpi_name())
            }
            Payload::Rows { var, row_start, row_count } => {
                let d = &self.vars[*var];
                let rs = self.expr(row_start);
                let rc = match row_count {
                    Expr::Var { .. } | Expr::IntLit { .. } => self.expr(row_count),
                    other => format!("({})", self.expr(other)),
                };
                match d.dims.len() {
                    1 => (format!("&{}[{rs}]", d.name), rc, d.kind.mpi_name()),
                    _ => {
                        let cols = d.dims[1];
                        (format!("&{}[{rs}][0]", d.name), format!("{rc} * {cols}"), d.kind.mpi_name())
                    }
                }
            }
        }
    }

    // ------------------------------------------------------- source stmts

    /// Emit one statement of the source language. `top` is true only for
    /// statements at the top level of the master body, where declarations
    /// are covered by the hoisted zero initializer.
    fn write_stmt(&self, out: &mut String, s: &Stmt, level: usize, top: bool) {
        let pad = "    ".repeat(level);
        match s {
            Stmt::Decl { var, .. } => {
                let d = &self.vars[*var];
                if d.is_array() {
                    if !top {
                        self.write_zero_fill(out, d, level);
                    }
                } else if let Some(init) = &d.init {
                    let _ = writeln!(out, "{pad}{} = {};", d.name, self.expr(init));
                } else if !top {
                    let _ = writeln!(out, "{pad}{} = 0;", d.name);
                }
            }
            Stmt::Assign { target, op, value, .. } => {
                let _ = writeln!(
                    out,
                    "{pad}{} {} {};",
                    self.lvalue(target),
                    op.symbol(),
                    self.expr(value)
                );
            }
            Stmt::If { cond, then_body, else_body, .. } => {
                let _ = writeln!(out, "{pad}if ({}) {{", self.expr(cond));
                self.write_stmts(out, then_body, level + 1);
                if !else_body.is_empty() {
                    let _ = writeln!(out, "{pad}}} else {{");
                    self.write_stmts(out, else_body, level + 1);
                }
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::While { cond, body, .. } => {
                let _ = writeln!(out, "{pad}while ({}) {{", self.expr(cond));
                self.write_stmts(out, body, level + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::For(fs) => self.write_for(out, fs, level),
            Stmt::Block { body, .. } => {
                let _ = writeln!(out, "{pad}{{");
                self.write_stmts(out, body, level + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::Print { format, args, .. } => {
                let mut line = format!("{pad}printf(\"{}\"", printer::escape_c_string(format));
                for a in args {
                    let _ = write!(line, ", {}", self.expr(a));
                }
                let _ = writeln!(out, "{line});");
            }
            Stmt::CallStmt { call, .. } => {
                let _ = writeln!(out, "{pad}{};", self.expr(call));
            }
            Stmt::Return { value, .. } => {
                // The entry function's result becomes the exit status; real
                // control flow falls through to MPI_Finalize.
                if let Some(v) = value {
                    let _ = writeln!(out, "{pad}{} = {};", self.name(self.mp.rt.ret), self.expr(v));
                }
            }
            Stmt::Pragma(p) => {
                if self.mp.keep_omp_fallback {
                    let _ = writeln!(out, "{pad}{}", printer::print_pragma(&p.directive));
                }
                self.write_for(out, &p.for_stmt, level);
            }
        }
    }

    fn write_stmts(&self, out: &mut String, body: &[Stmt], level: usize) {
        for s in body {
            self.write_stmt(out, s, level, false);
        }
    }

    fn write_for(&self, out: &mut String, fs: &ForStmt, level: usize) {
        let pad = "    ".repeat(level);
        // Declaration initializers become plain assignments: every local is
        // already hoisted, and a fresh C declaration here would shadow it.
        let init = match &fs.init {
            ForInit::Assign { var, value } => {
                format!("{} = {}", self.name(*var), self.expr(value))
            }
            ForInit::Decl { var } => {
                let d = &self.vars[*var];
                let init = d.init.as_ref().expect("loop decl always has an initializer");
                format!("{} = {}", d.name, self.expr(init))
            }
        };
        let iter = self.name(fs.iterator());
        let step = match (&fs.step.op, &fs.step.value) {
            (AssignOp::Add, Expr::IntLit { value: 1, .. }) => format!("{iter}++"),
            (AssignOp::Sub, Expr::IntLit { value: 1, .. }) => format!("{iter}--"),
            (AssignOp::Set, e) => format!("{iter} = {}", self.expr(e)),
            (op, e) => format!("{iter} {} {}", op.symbol(), self.expr(e)),
        };
        let _ = writeln!(out, "{pad}for ({init}; {}; {step}) {{", self.expr(&fs.cond));
        self.write_stmts(out, &fs.body, level + 1);
        let _ = writeln!(out, "{pad}}}");
    }

    /// Re-zero an array declared in a nested scope (each execution of the
    /// declaration resets the contents, matching the unhoisted semantics).
    fn write_zero_fill(&self, out: &mut String, d: &VarDecl, level: usize) {
        let pad = "    ".repeat(level);
        let i = format!("{}i", self.zero_ctr);
        match d.dims.len() {
            1 => {
                let _ = writeln!(
                    out,
                    "{pad}for (int {i} = 0; {i} < {n}; {i}++) {{ {name}[{i}] = 0; }}",
                    n = d.dims[0],
                    name = d.name
                );
            }
            _ => {
                let j = format!("{}j", self.zero_ctr);
                let _ = writeln!(out, "{pad}for (int {i} = 0; {i} < {r}; {i}++) {{", r = d.dims[0]);
                let _ = writeln!(
                    out,
                    "{pad}    for (int {j} = 0; {j} < {c}; {j}++) {{ {name}[{i}][{j}] = 0; }}",
                    c = d.dims[1],
                    name = d.name
                );
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }

    fn lvalue(&self, lv: &LValue) -> String {
        let mut s = self.name(lv.var).to_string();
        for ix in &lv.indices {
            let _ = write!(s, "[{}]", self.expr(ix));
        }
        s
    }
}

fn scan_payload<'a>(p: &'a Payload, exprs: &mut Vec<&'a Expr>, used: &mut [bool]) {
    used[p.var()] = true;
    if let Payload::Rows { row_start, row_count, .. } = p {
        exprs.push(row_start);
        exprs.push(row_count);
    }
}

/// Render a folded constant as a C literal.
fn value_literal(v: &crate::runtime::value::Value) -> String {
    use crate::runtime::value::Value;
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(f) => format!("{f:?}"),
        _ => unreachable!("array initializers are rejected by the parser"),
    }
}

/// `base`, or `base` with underscores appended until it collides with no
/// program variable.
fn unique_name(base: &str, vars: &[VarDecl]) -> String {
    let mut name = base.to_string();
    while vars.iter().any(|v| v.name == name) {
        name.push('_');
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::build::{build_mpi, BuildOptions};
    use crate::parser::parse;

    fn lower(src: &str) -> MpiProgram {
        let program = parse(src, "test.c").expect("parse").program;
        build_mpi(&program, &BuildOptions::default()).expect("build")
    }

    const REDUCE_SRC: &str = r#"
double a[64];
double s;
int n = 64;

int main() {
    int i;
    for (i = 0; i < n; i++) {
        a[i] = i * 0.5;
    }
    s = 0.0;
    #pragma omp parallel for reduction(+: s)
    for (i = 0; i < n; i++) {
        s += a[i] * a[i];
    }
    printf("%f\n", s);
    return 0;
}
"#;

    #[test]
    fn emission_is_deterministic() {
        let mp = lower(REDUCE_SRC);
        let one = emit_c(&mp);
        let two = emit_c(&lower(REDUCE_SRC));
        assert_eq!(one, two);
        assert!(!one.is_empty());
    }

    #[test]
    fn output_has_the_expected_structure() {
        let mp = lower(REDUCE_SRC);
        let c = emit_c(&mp);
        for landmark in [
            "#include <mpi.h>",
            "int main(int argc, char **argv)",
            "MPI_Init(&argc, &argv);",
            "MPI_Comm_rank(MPI_COMM_WORLD,",
            "MPI_Comm_size(MPI_COMM_WORLD,",
            "if (_dm_rank == 0) {",
            "MPI_Recv(",
            "MPI_Send(",
            "MPI_ANY_SOURCE",
            "MPI_Finalize();",
            "return _dm_ret;",
            "double a[64];",
        ] {
            assert!(c.contains(landmark), "missing {landmark:?} in:\n{c}");
        }
        // the scalar reduction travels as a double
        assert!(c.contains("MPI_DOUBLE"));
        // exactly one shutdown broadcast loop (tag 5)
        assert!(c.contains(", 5, MPI_COMM_WORLD); /* terminate_all */"));
    }

    #[test]
    fn no_min_max_helpers_unless_used() {
        let c = emit_c(&lower(REDUCE_SRC));
        // the lowering itself uses integer min/max for chunk sizing
        assert!(c.contains("omp2dm_imin"));
        // but no float variants: the program never calls min/max on floats
        assert!(!c.contains("omp2dm_fmin"));
        assert!(!c.contains("#include <math.h>"));
    }

    #[test]
    fn intrinsics_map_to_c_names() {
        let src = r#"
double a[16];
double m;

int main() {
    int i;
    m = 0.0;
    for (i = 0; i < 16; i++) {
        a[i] = sqrt(i * 1.0);
        m = max(m, fabs(a[i]));
    }
    #pragma omp parallel for
    for (i = 0; i < 16; i++) {
        a[i] = a[i] * 2.0;
    }
    printf("%f\n", m);
    return 0;
}
"#;
        let c = emit_c(&lower(src));
        assert!(c.contains("#include <math.h>"));
        assert!(c.contains("sqrt("));
        assert!(c.contains("fabs("));
        assert!(c.contains("omp2dm_fmax("));
        assert!(!c.contains(" max("), "subset intrinsic name leaked:\n{c}");
    }

    #[test]
    fn fallback_keeps_or_strips_the_pragma() {
        // seidel-style same-row dependence forces a fallback
        let src = r#"
double a[16][16];

int main() {
    int i;
    int j;
    #pragma omp parallel for private(j)
    for (i = 1; i < 15; i++) {
        for (j = 1; j < 15; j++) {
            a[i][j] = (a[i - 1][j] + a[i][j]) * 0.5;
        }
    }
    printf("%f\n", a[8][8]);
    return 0;
}
"#;
        let program = parse(src, "test.c").expect("parse").program;
        let stripped = emit_c(
            &build_mpi(&program, &BuildOptions::default()).expect("build"),
        );
        let kept = emit_c(
            &build_mpi(
                &program,
                &BuildOptions {
                    fallback: crate::codegen::build::FallbackStyle::KeepOmp,
                    ..BuildOptions::default()
                },
            )
            .expect("build"),
        );
        assert!(!stripped.contains("#pragma"));
        assert!(kept.contains("#pragma omp parallel for"));
        for c in [&stripped, &kept] {
            assert!(c.contains("for (i = 1; i < 15; i++)"), "loop body lost:\n{c}");
        }
    }
}
