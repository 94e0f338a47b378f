//! Message-passing IR shared by the C emitter and the simulator.
//!
//! Every communicating statement is explicit; plain computation is carried
//! as untouched AST statements. Message tags fit in one integer so they can
//! be switched on in generated C: tag = kind + 6 * index, where the index
//! is a block id (work/terminate) or a variable id (data traffic).

use serde::Serialize;

use crate::analysis::plan::ProgramPlan;
use crate::ast::{Expr, Program, Stmt, VarId};

/// Tag of the one broadcast-style message: "all blocks done, shut down".
pub const TAG_TERMINATE_ALL: i64 = 5;

const KIND_WORK: i64 = 0;
const KIND_DATA_IN: i64 = 1;
const KIND_RESULT: i64 = 2;
const KIND_REDUCE: i64 = 3;
const KIND_TERMINATE: i64 = 4;

/// Decoded form of a message tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MessageTag {
    /// Master -> worker chunk header for one block, echoed back by the
    /// worker as a completion header.
    Work { block: usize },
    /// Master -> worker value of one variable before a chunk runs.
    DataIn { var: VarId },
    /// Worker -> master contents of one output variable after a chunk.
    Result { var: VarId },
    /// Worker -> master partial reduction value for one chunk.
    Reduce { var: VarId },
    /// Master -> worker "no more chunks for this block" (reserved; the
    /// service loop is purely reactive, so the emitter never sends it).
    Terminate { block: usize },
    /// Master -> worker final shutdown.
    TerminateAll,
}

impl MessageTag {
    pub fn encode(self) -> i64 {
        match self {
            MessageTag::Work { block } => 6 * block as i64 + KIND_WORK,
            MessageTag::DataIn { var } => 6 * var as i64 + KIND_DATA_IN,
            MessageTag::Result { var } => 6 * var as i64 + KIND_RESULT,
            MessageTag::Reduce { var } => 6 * var as i64 + KIND_REDUCE,
            MessageTag::Terminate { block } => 6 * block as i64 + KIND_TERMINATE,
            MessageTag::TerminateAll => TAG_TERMINATE_ALL,
        }
    }

    pub fn decode(tag: i64) -> Option<MessageTag> {
        if tag < 0 {
            return None;
        }
        if tag == TAG_TERMINATE_ALL {
            return Some(MessageTag::TerminateAll);
        }
        let (kind, index) = (tag % 6, (tag / 6) as usize);
        match kind {
            KIND_WORK => Some(MessageTag::Work { block: index }),
            KIND_DATA_IN => Some(MessageTag::DataIn { var: index }),
            KIND_RESULT => Some(MessageTag::Result { var: index }),
            KIND_REDUCE => Some(MessageTag::Reduce { var: index }),
            KIND_TERMINATE => Some(MessageTag::Terminate { block: index }),
            _ => None, // only tag 5 carries kind 5
        }
    }

    /// Human-readable form used in traces and reports.
    pub fn describe(self, program: &Program) -> String {
        let name = |v: VarId| {
            program
                .vars
                .get(v)
                .map(|d| d.name.clone())
                .unwrap_or_else(|| format!("var{v}"))
        };
        match self {
            MessageTag::Work { block } => format!("work(block {block})"),
            MessageTag::DataIn { var } => format!("data_in({})", name(var)),
            MessageTag::Result { var } => format!("result({})", name(var)),
            MessageTag::Reduce { var } => format!("reduce({})", name(var)),
            MessageTag::Terminate { block } => format!("terminate(block {block})"),
            MessageTag::TerminateAll => "terminate_all".to_string(),
        }
    }
}

/// What a send/recv moves. Counts and placement are computed independently
/// by both sides from the chunk header, so payloads carry no size prefix.
#[derive(Debug, Clone, Serialize)]
pub enum Payload {
    /// The two-slot integer header array `(first iterator value, count)`.
    Header(VarId),
    /// One scalar variable.
    Scalar(VarId),
    /// `row_count` whole rows of an array starting at `row_start`
    /// (for 1-D arrays a "row" is a single element).
    Rows { var: VarId, row_start: Expr, row_count: Expr },
    /// Every element of an array.
    Whole(VarId),
}

impl Payload {
    /// The variable whose storage backs the payload.
    pub fn var(&self) -> VarId {
        match self {
            Payload::Header(v) | Payload::Scalar(v) | Payload::Whole(v) => *v,
            Payload::Rows { var, .. } => *var,
        }
    }
}

/// Where a receive accepts messages from.
#[derive(Debug, Clone, Serialize)]
pub enum Source {
    Rank(Expr),
    /// Any rank; the simulator resolves races with its seeded choice policy
    /// (`MPI_ANY_SOURCE` in emitted C).
    Any,
}

/// Which tags a receive accepts.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum RecvTag {
    Exact(i64),
    /// Any tag (`MPI_ANY_TAG`); the worker dispatch loop uses this.
    Any,
}

/// One statement of the lowered master or worker body.
#[derive(Debug, Clone, Serialize)]
pub enum MpiStmt {
    /// Unmodified computation; the simulator charges its interpreter steps
    /// as busy time, so one `Plain` is the unit of overlap.
    Plain(Stmt),
    If { cond: Expr, then_body: Vec<MpiStmt>, else_body: Vec<MpiStmt> },
    While { cond: Expr, body: Vec<MpiStmt> },
    /// Exit the innermost enclosing [`MpiStmt::While`].
    Break,
    Send { to: Expr, tag: i64, payload: Payload },
    Recv {
        from: Source,
        tag: RecvTag,
        payload: Payload,
        /// Scalar int variable that receives the sender's rank.
        save_source: Option<VarId>,
        /// Scalar int variable that receives the message tag.
        save_tag: Option<VarId>,
    },
    /// Emitted as a C comment; ignored by the simulator.
    Comment(String),
}

/// Distinguished synthetic variables the emitter and simulator must know.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RuntimeVars {
    /// Process rank (preset per process by the simulator, filled by
    /// `MPI_Comm_rank` in C).
    pub rank: VarId,
    /// Communicator size (number of processes).
    pub size: VarId,
    /// Two-slot int array staging every chunk header.
    pub header: VarId,
    /// Exit status produced by the original entry function's `return`.
    pub ret: VarId,
}

/// A lowered program: the (variable-extended) source program plus the
/// master and worker bodies.
#[derive(Debug, Clone, Serialize)]
pub struct MpiProgram {
    pub program: Program,
    pub plan: ProgramPlan,
    pub master: Vec<MpiStmt>,
    pub worker: Vec<MpiStmt>,
    pub rt: RuntimeVars,
    /// How fallback blocks are rendered in C ("seq" strips the pragma,
    /// "keep-omp" preserves it so the output still parallelizes locally).
    pub keep_omp_fallback: bool,
}

/// Walk a lowered body, visiting every statement list (used by the
/// mutation hooks and the variable-usage scan).
pub fn visit_bodies_mut(body: &mut Vec<MpiStmt>, f: &mut impl FnMut(&mut Vec<MpiStmt>)) {
    f(body);
    for s in body.iter_mut() {
        match s {
            MpiStmt::If { then_body, else_body, .. } => {
                visit_bodies_mut(then_body, f);
                visit_bodies_mut(else_body, f);
            }
            MpiStmt::While { body, .. } => visit_bodies_mut(body, f),
            _ => {}
        }
    }
}

/// Walk a lowered body immutably, visiting every statement.
pub fn visit_stmts<'a>(body: &'a [MpiStmt], f: &mut impl FnMut(&'a MpiStmt)) {
    for s in body {
        f(s);
        match s {
            MpiStmt::If { then_body, else_body, .. } => {
                visit_stmts(then_body, f);
                visit_stmts(else_body, f);
            }
            MpiStmt::While { body, .. } => visit_stmts(body, f),
            _ => {}
        }
    }
}

/// Indented textual rendering of a lowered body (debugging aid and the
/// `--emit-ir` output).
pub fn render_ir(program: &Program, body: &[MpiStmt]) -> String {
    let mut out = String::new();
    render_into(&mut out, program, body, 0);
    out
}

fn render_into(out: &mut String, program: &Program, body: &[MpiStmt], level: usize) {
    use std::fmt::Write;
    let pad = "  ".repeat(level);
    let vars = &program.vars;
    for s in body {
        match s {
            MpiStmt::Plain(stmt) => {
                let mut text = String::new();
                crate::printer::write_stmt(&mut text, stmt, vars, 0);
                for line in text.lines() {
                    let _ = writeln!(out, "{pad}{line}");
                }
            }
            MpiStmt::If { cond, then_body, else_body } => {
                let _ = writeln!(out, "{pad}if {} {{", crate::printer::print_expr(cond, vars));
                render_into(out, program, then_body, level + 1);
                if !else_body.is_empty() {
                    let _ = writeln!(out, "{pad}}} else {{");
                    render_into(out, program, else_body, level + 1);
                }
                let _ = writeln!(out, "{pad}}}");
            }
            MpiStmt::While { cond, body } => {
                let _ = writeln!(out, "{pad}while {} {{", crate::printer::print_expr(cond, vars));
                render_into(out, program, body, level + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            MpiStmt::Break => {
                let _ = writeln!(out, "{pad}break");
            }
            MpiStmt::Send { to, tag, payload } => {
                let _ = writeln!(
                    out,
                    "{pad}send {} -> rank {} tag {}",
                    describe_payload(payload, program),
                    crate::printer::print_expr(to, vars),
                    describe_tag(*tag, program),
                );
            }
            MpiStmt::Recv { from, tag, payload, save_source, save_tag } => {
                let src = match from {
                    Source::Rank(e) => format!("rank {}", crate::printer::print_expr(e, vars)),
                    Source::Any => "any rank".to_string(),
                };
                let tg = match tag {
                    RecvTag::Exact(t) => describe_tag(*t, program),
                    RecvTag::Any => "any".to_string(),
                };
                let mut extra = String::new();
                if let Some(v) = save_source {
                    let _ = write!(extra, " source->{}", vars[*v].name);
                }
                if let Some(v) = save_tag {
                    let _ = write!(extra, " tag->{}", vars[*v].name);
                }
                let _ = writeln!(
                    out,
                    "{pad}recv {} <- {} tag {}{}",
                    describe_payload(payload, program),
                    src,
                    tg,
                    extra
                );
            }
            MpiStmt::Comment(text) => {
                let _ = writeln!(out, "{pad}// {text}");
            }
        }
    }
}

fn describe_tag(tag: i64, program: &Program) -> String {
    match MessageTag::decode(tag) {
        Some(t) => format!("{tag} [{}]", t.describe(program)),
        None => tag.to_string(),
    }
}

fn describe_payload(p: &Payload, program: &Program) -> String {
    let vars = &program.vars;
    match p {
        Payload::Header(v) => format!("header {}", vars[*v].name),
        Payload::Scalar(v) => format!("scalar {}", vars[*v].name),
        Payload::Rows { var, row_start, row_count } => format!(
            "rows {}[{} .. +{}]",
            vars[*var].name,
            crate::printer::print_expr(row_start, vars),
            crate::printer::print_expr(row_count, vars)
        ),
        Payload::Whole(v) => format!("whole {}", vars[*v].name),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_round_trip_is_lossless() {
        for block in 0..64 {
            for t in [MessageTag::Work { block }, MessageTag::Terminate { block }] {
                assert_eq!(MessageTag::decode(t.encode()), Some(t));
            }
        }
        for var in 0..64 {
            for t in [
                MessageTag::DataIn { var },
                MessageTag::Result { var },
                MessageTag::Reduce { var },
            ] {
                assert_eq!(MessageTag::decode(t.encode()), Some(t));
            }
        }
        assert_eq!(
            MessageTag::decode(MessageTag::TerminateAll.encode()),
            Some(MessageTag::TerminateAll)
        );
    }

    #[test]
    fn tags_are_distinct_per_index() {
        use std::collections::BTreeSet;
        let mut seen = BTreeSet::new();
        for i in 0..32usize {
            seen.insert(MessageTag::Work { block: i }.encode());
            seen.insert(MessageTag::DataIn { var: i }.encode());
            seen.insert(MessageTag::Result { var: i }.encode());
            seen.insert(MessageTag::Reduce { var: i }.encode());
            seen.insert(MessageTag::Terminate { block: i }.encode());
        }
        seen.insert(MessageTag::TerminateAll.encode());
        assert_eq!(seen.len(), 32 * 5 + 1);
    }

    #[test]
    fn nonnegative_and_shutdown_reserved() {
        assert_eq!(MessageTag::TerminateAll.encode(), TAG_TERMINATE_ALL);
        assert_eq!(MessageTag::decode(-1), None);
        // kind slot 5 is reserved for the single shutdown tag
        assert_eq!(MessageTag::decode(11), None);
        assert_eq!(MessageTag::decode(17), None);
    }
}
