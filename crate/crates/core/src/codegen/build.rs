//! Lowers an analyzed program into master and worker bodies.
//!
//! Shape of the output program (one SPMD translation unit):
//!
//! * rank 0 replays the entry function's statements in order; each
//!   parallelized loop becomes a chunk-distribution protocol, each
//!   fallback block stays a sequential loop.
//! * every other rank runs a service loop: receive a header with any tag,
//!   dispatch on the tag (one arm per parallelized block), exit on the
//!   shutdown tag.
//!
//! Chunk transaction, in message order:
//!
//! ```text
//! master -> w : work(b)      header = (first iterator value, count)
//! master -> w : data_in(v)   every in-scalar, then every in-array
//! w -> master : work(b)      header echoed back on completion
//! w -> master : result(v)    every out-array (row slice or whole)
//! w -> master : reduce(v)    one partial per reduction variable
//! ```
//!
//! Row spans are recomputed from the header independently on both sides,
//! so data payloads never need size prefixes.

use std::collections::BTreeMap;

use crate::analysis::loops::CmpKind;
use crate::analysis::plan::{
    plan_program_with, BlockPlan, InMode, OutMode, ProgramPlan, Schedule,
};
use crate::ast::{
    AssignOp, BinOp, Expr, ForInit, Intrinsic, LValue, PragmaBlock, Program, ReductionOp,
    ScalarKind, Stmt, VarDecl, VarId, VarScope,
};
use crate::errors::CompileError;
use crate::span::SourceSpan;

use super::ir::{MessageTag, MpiProgram, MpiStmt, Payload, RecvTag, RuntimeVars, Source};

/// How blocks that could not be parallelized appear in emitted C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackStyle {
    /// Plain sequential loop on the master.
    #[default]
    Seq,
    /// Sequential loop with its original pragma line preserved.
    KeepOmp,
}

/// Knobs threaded through from the command line.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Reject (rather than warn about) whole-array write-backs.
    pub strict: bool,
    /// Schedule for blocks without a `schedule(...)` clause.
    pub default_schedule: Option<Schedule>,
    pub fallback: FallbackStyle,
}

/// Analyze and lower a program in one step.
pub fn build_mpi(program: &Program, opts: &BuildOptions) -> Result<MpiProgram, CompileError> {
    let plan = plan_program_with(
        program,
        opts.strict,
        opts.default_schedule.unwrap_or(Schedule::Dynamic),
    )?;
    Ok(build_from_plan(program, plan, opts))
}

/// Lower a program against an existing plan.
pub fn build_from_plan(program: &Program, plan: ProgramPlan, opts: &BuildOptions) -> MpiProgram {
    let mut b = Builder::new(program.clone());
    let blocks = program.pragma_blocks();
    for block in &blocks {
        if let Some(p) = plan.decision(block.block_id).plan() {
            b.prepare_reduction_temps(p);
        }
    }

    let entry_body = program.entry().body.clone();
    let mut master = b.map_body(&entry_body, &plan);

    // Release the workers before the entry function returns.
    let mut epilogue = vec![
        MpiStmt::Comment("all parallel work done; release the workers".to_string()),
        MpiStmt::Plain(assign(b.t.w, iv(1))),
        MpiStmt::While {
            cond: bin(BinOp::Lt, ev(b.t.w), ev(b.t.size)),
            body: vec![
                MpiStmt::Send {
                    to: ev(b.t.w),
                    tag: MessageTag::TerminateAll.encode(),
                    payload: Payload::Header(b.t.header),
                },
                MpiStmt::Plain(add_assign(b.t.w, iv(1))),
            ],
        },
    ];
    let tail_return = matches!(master.last(), Some(MpiStmt::Plain(Stmt::Return { .. })));
    let at = if tail_return { master.len() - 1 } else { master.len() };
    master.splice(at..at, epilogue.drain(..));

    // Worker dispatch loop: receive any header from the master, switch on
    // the tag.
    let mut dispatch = vec![
        MpiStmt::Recv {
            from: Source::Rank(iv(0)),
            tag: RecvTag::Any,
            payload: Payload::Header(b.t.header),
            save_source: None,
            save_tag: Some(b.t.tag),
        },
        MpiStmt::If {
            cond: bin(BinOp::Eq, ev(b.t.tag), iv(MessageTag::TerminateAll.encode())),
            then_body: vec![MpiStmt::Break],
            else_body: vec![],
        },
    ];
    for block in &blocks {
        if let Some(p) = plan.decision(block.block_id).plan() {
            dispatch.push(MpiStmt::If {
                cond: bin(
                    BinOp::Eq,
                    ev(b.t.tag),
                    iv(MessageTag::Work { block: p.block_id }.encode()),
                ),
                then_body: b.worker_arm(block, p),
                else_body: vec![],
            });
        }
    }
    let worker = vec![MpiStmt::While { cond: iv(1), body: dispatch }];

    let rt = RuntimeVars { rank: b.t.rank, size: b.t.size, header: b.t.header, ret: b.t.ret };
    MpiProgram {
        program: b.program,
        plan,
        master,
        worker,
        rt,
        keep_omp_fallback: opts.fallback == FallbackStyle::KeepOmp,
    }
}

/// Synthetic scalar/array variables threaded through the lowered bodies.
struct Tmps {
    rank: VarId,
    size: VarId,
    /// Two-slot int array: header[0] = first iterator value, header[1] = count.
    header: VarId,
    ret: VarId,
    tag: VarId,
    src: VarId,
    i0: VarId,
    bnd: VarId,
    trip: VarId,
    cs: VarId,
    nch: VarId,
    next: VarId,
    done: VarId,
    w: VarId,
    sent: VarId,
    vl: VarId,
    r0: VarId,
    rn: VarId,
    k: VarId,
    /// Per reduction variable: (running accumulator, received partial).
    red: BTreeMap<VarId, (VarId, VarId)>,
}

struct Builder {
    program: Program,
    t: Tmps,
}

impl Builder {
    fn new(program: Program) -> Builder {
        let mut b = Builder {
            program,
            t: Tmps {
                rank: 0,
                size: 0,
                header: 0,
                ret: 0,
                tag: 0,
                src: 0,
                i0: 0,
                bnd: 0,
                trip: 0,
                cs: 0,
                nch: 0,
                next: 0,
                done: 0,
                w: 0,
                sent: 0,
                vl: 0,
                r0: 0,
                rn: 0,
                k: 0,
                red: BTreeMap::new(),
            },
        };
        b.t.rank = b.fresh("_dm_rank", ScalarKind::Int, vec![]);
        b.t.size = b.fresh("_dm_size", ScalarKind::Int, vec![]);
        b.t.header = b.fresh("_dm_hdr", ScalarKind::Int, vec![2]);
        b.t.ret = b.fresh("_dm_ret", ScalarKind::Int, vec![]);
        b.t.tag = b.fresh("_dm_tag", ScalarKind::Int, vec![]);
        b.t.src = b.fresh("_dm_src", ScalarKind::Int, vec![]);
        b.t.i0 = b.fresh("_dm_first", ScalarKind::Int, vec![]);
        b.t.bnd = b.fresh("_dm_bound", ScalarKind::Int, vec![]);
        b.t.trip = b.fresh("_dm_trip", ScalarKind::Int, vec![]);
        b.t.cs = b.fresh("_dm_chunk", ScalarKind::Int, vec![]);
        b.t.nch = b.fresh("_dm_nchunks", ScalarKind::Int, vec![]);
        b.t.next = b.fresh("_dm_next", ScalarKind::Int, vec![]);
        b.t.done = b.fresh("_dm_done", ScalarKind::Int, vec![]);
        b.t.w = b.fresh("_dm_w", ScalarKind::Int, vec![]);
        b.t.sent = b.fresh("_dm_sent", ScalarKind::Int, vec![]);
        b.t.vl = b.fresh("_dm_last", ScalarKind::Int, vec![]);
        b.t.r0 = b.fresh("_dm_row0", ScalarKind::Int, vec![]);
        b.t.rn = b.fresh("_dm_rows", ScalarKind::Int, vec![]);
        b.t.k = b.fresh("_dm_k", ScalarKind::Int, vec![]);
        b
    }

    /// Add a synthetic local, renaming on (unlikely) collision with user code.
    fn fresh(&mut self, base: &str, kind: ScalarKind, dims: Vec<i64>) -> VarId {
        let mut name = base.to_string();
        let mut n = 1;
        while self.program.vars.iter().any(|d| d.name == name) {
            n += 1;
            name = format!("{base}{n}");
        }
        let id = self.program.vars.len();
        self.program.vars.push(VarDecl {
            name,
            kind,
            dims,
            init: None,
            scope: VarScope::Local,
            span: sp(),
            synthetic: true,
        });
        id
    }

    fn prepare_reduction_temps(&mut self, plan: &BlockPlan) {
        for r in &plan.reductions {
            if self.t.red.contains_key(&r.var) {
                continue;
            }
            let kind = self.program.vars[r.var].kind;
            let name = self.program.vars[r.var].name.clone();
            let acc = self.fresh(&format!("_dm_acc_{name}"), kind, vec![]);
            let part = self.fresh(&format!("_dm_part_{name}"), kind, vec![]);
            self.t.red.insert(r.var, (acc, part));
        }
    }

    /// Map original statements to the master body, lifting any control flow
    /// that contains a parallel block so its protocol statements stay at
    /// the IR level.
    fn map_body(&self, stmts: &[Stmt], plan: &ProgramPlan) -> Vec<MpiStmt> {
        let mut out = Vec::new();
        for s in stmts {
            if !contains_pragma(s) {
                out.push(MpiStmt::Plain(s.clone()));
                continue;
            }
            match s {
                Stmt::Pragma(block) => match plan.decision(block.block_id).plan() {
                    Some(p) => out.extend(self.lower_parallel(p)),
                    None => {
                        let reason = plan
                            .decisions
                            .iter()
                            .find_map(|d| match d {
                                crate::analysis::plan::BlockDecision::Fallback {
                                    block_id,
                                    reason,
                                } if *block_id == block.block_id => Some(reason.to_string()),
                                _ => None,
                            })
                            .unwrap_or_else(|| "not parallelized".to_string());
                        out.push(MpiStmt::Comment(format!(
                            "block {} runs sequentially on the master: {}",
                            block.block_id, reason
                        )));
                        out.push(MpiStmt::Plain(Stmt::Pragma(block.clone())));
                    }
                },
                Stmt::If { cond, then_body, else_body, .. } => out.push(MpiStmt::If {
                    cond: cond.clone(),
                    then_body: self.map_body(then_body, plan),
                    else_body: self.map_body(else_body, plan),
                }),
                Stmt::While { cond, body, .. } => out.push(MpiStmt::While {
                    cond: cond.clone(),
                    body: self.map_body(body, plan),
                }),
                Stmt::Block { body, .. } => out.extend(self.map_body(body, plan)),
                Stmt::For(f) => {
                    // De-sugar so the body's parallel blocks stay lifted.
                    match &f.init {
                        ForInit::Assign { var, value } => {
                            out.push(MpiStmt::Plain(assign(*var, value.clone())))
                        }
                        ForInit::Decl { var } => {
                            out.push(MpiStmt::Plain(Stmt::Decl { var: *var, span: f.span.clone() }))
                        }
                    }
                    let mut body = self.map_body(&f.body, plan);
                    body.push(MpiStmt::Plain(Stmt::Assign {
                        target: lv(f.step.var),
                        op: f.step.op,
                        value: f.step.value.clone(),
                        span: f.step.span.clone(),
                    }));
                    out.push(MpiStmt::While { cond: f.cond.clone(), body });
                }
                // The parser only allows pragmas under structured control
                // flow, all handled above.
                _ => out.push(MpiStmt::Plain(s.clone())),
            }
        }
        out
    }

    /// Master-side protocol for one parallelized block.
    fn lower_parallel(&self, plan: &BlockPlan) -> Vec<MpiStmt> {
        let t = &self.t;
        let loop_ = &plan.loop_;
        let iter_name = self.program.vars[loop_.iterator].name.clone();
        let stride = loop_.stride;
        let s_abs = stride.abs();

        let mut out = vec![MpiStmt::Comment(format!(
            "block {}: distribute `for ({iter_name} ...)` ({} schedule)",
            plan.block_id,
            plan.schedule.name()
        ))];

        // Loop extent, evaluated once: first value, bound, trip count.
        out.push(MpiStmt::Plain(assign(t.i0, loop_.initial.clone())));
        out.push(MpiStmt::Plain(assign(t.bnd, loop_.bound.clone())));
        let (enter, numer) = match loop_.cmp {
            CmpKind::Lt => (
                bin(BinOp::Gt, ev(t.bnd), ev(t.i0)),
                add(sub(ev(t.bnd), ev(t.i0)), iv(s_abs - 1)),
            ),
            CmpKind::Le => (
                bin(BinOp::Ge, ev(t.bnd), ev(t.i0)),
                add(sub(ev(t.bnd), ev(t.i0)), iv(s_abs)),
            ),
            CmpKind::Gt => (
                bin(BinOp::Gt, ev(t.i0), ev(t.bnd)),
                add(sub(ev(t.i0), ev(t.bnd)), iv(s_abs - 1)),
            ),
            CmpKind::Ge => (
                bin(BinOp::Ge, ev(t.i0), ev(t.bnd)),
                add(sub(ev(t.i0), ev(t.bnd)), iv(s_abs)),
            ),
        };
        out.push(MpiStmt::Plain(Stmt::If {
            cond: enter,
            then_body: vec![assign(t.trip, div(numer, iv(s_abs)))],
            else_body: vec![assign(t.trip, iv(0))],
            span: sp(),
        }));

        let mut inner = Vec::new();

        // Chunk size: explicit from the pragma, or trip/(workers*10),
        // clamped to at least 1.
        match plan.chunk {
            Some(c) => inner.push(MpiStmt::Plain(assign(t.cs, iv(c.max(1))))),
            None => {
                let denom = mul(sub(ev(t.size), iv(1)), iv(10));
                inner.push(MpiStmt::Plain(assign(
                    t.cs,
                    div(sub(add(ev(t.trip), denom.clone()), iv(1)), denom),
                )));
                inner.push(MpiStmt::Plain(Stmt::If {
                    cond: bin(BinOp::Lt, ev(t.cs), iv(1)),
                    then_body: vec![assign(t.cs, iv(1))],
                    else_body: vec![],
                    span: sp(),
                }));
            }
        }
        inner.push(MpiStmt::Plain(assign(
            t.nch,
            div(sub(add(ev(t.trip), ev(t.cs)), iv(1)), ev(t.cs)),
        )));

        // Reduction accumulators start at the operation's identity.
        for r in &plan.reductions {
            let (acc, _) = self.t.red[&r.var];
            let kind = self.program.vars[r.var].kind;
            inner.push(MpiStmt::Plain(assign(acc, identity_lit(r.op, kind))));
        }

        match plan.schedule {
            Schedule::Dynamic => inner.extend(self.lower_dynamic(plan)),
            Schedule::Static => inner.extend(self.lower_static(plan)),
        }

        // Fold each accumulator into the live variable exactly once.
        for r in &plan.reductions {
            let (acc, _) = self.t.red[&r.var];
            inner.push(MpiStmt::Plain(Stmt::Assign {
                target: lv(r.var),
                op: fold_op(r.op),
                value: ev(acc),
                span: sp(),
            }));
        }

        let t = &self.t;
        out.push(MpiStmt::If {
            cond: bin(BinOp::Gt, ev(t.trip), iv(0)),
            then_body: inner,
            else_body: vec![],
        });

        // The sequential loop leaves its iterator one step past the last
        // iteration; reproduce that (trip is 0 when the loop never runs).
        out.push(MpiStmt::Plain(assign(
            loop_.iterator,
            add(ev(t.i0), mul(ev(t.trip), iv(stride))),
        )));
        out
    }

    /// Master loop for the on-demand schedule: seed one chunk per worker,
    /// then hand the next chunk to whichever worker finishes first.
    fn lower_dynamic(&self, plan: &BlockPlan) -> Vec<MpiStmt> {
        let t = &self.t;
        let work_tag = MessageTag::Work { block: plan.block_id }.encode();
        let mut out = vec![MpiStmt::Plain(assign(t.next, iv(0)))];

        let seed_cond = bin(
            BinOp::And,
            bin(BinOp::Lt, ev(t.next), ev(t.nch)),
            bin(BinOp::Lt, ev(t.next), sub(ev(t.size), iv(1))),
        );
        let mut seed_body = self.send_chunk(plan, add(ev(self.t.next), iv(1)), ev(self.t.next));
        seed_body.push(MpiStmt::Plain(add_assign(self.t.next, iv(1))));
        out.push(MpiStmt::While { cond: seed_cond, body: seed_body });

        let t = &self.t;
        out.push(MpiStmt::Plain(assign(t.done, iv(0))));
        let mut serve = vec![MpiStmt::Recv {
            from: Source::Any,
            tag: RecvTag::Exact(work_tag),
            payload: Payload::Header(t.header),
            save_source: Some(t.src),
            save_tag: None,
        }];
        serve.extend(self.recv_results(plan, ev(self.t.src)));
        serve.push(MpiStmt::Plain(add_assign(self.t.done, iv(1))));
        let mut resend = self.send_chunk(plan, ev(self.t.src), ev(self.t.next));
        resend.push(MpiStmt::Plain(add_assign(self.t.next, iv(1))));
        let t = &self.t;
        serve.push(MpiStmt::If {
            cond: bin(BinOp::Lt, ev(t.next), ev(t.nch)),
            then_body: resend,
            else_body: vec![],
        });
        out.push(MpiStmt::While {
            cond: bin(BinOp::Lt, ev(t.done), ev(t.nch)),
            body: serve,
        });
        out
    }

    /// Master loop for the fixed round-robin schedule: chunk k always goes
    /// to worker (k mod workers) + 1, in synchronous rounds.
    fn lower_static(&self, plan: &BlockPlan) -> Vec<MpiStmt> {
        let t = &self.t;
        let work_tag = MessageTag::Work { block: plan.block_id }.encode();
        let mut round = vec![
            MpiStmt::Plain(assign(
                t.sent,
                imin(sub(ev(t.nch), ev(t.next)), sub(ev(t.size), iv(1))),
            )),
            MpiStmt::Plain(assign(t.w, iv(1))),
        ];
        let k = add(ev(self.t.next), sub(ev(self.t.w), iv(1)));
        let mut send_body = self.send_chunk(plan, ev(self.t.w), k);
        send_body.push(MpiStmt::Plain(add_assign(self.t.w, iv(1))));
        let t = &self.t;
        round.push(MpiStmt::While {
            cond: bin(BinOp::Le, ev(t.w), ev(t.sent)),
            body: send_body,
        });

        round.push(MpiStmt::Plain(assign(t.w, iv(1))));
        let mut recv_body = vec![MpiStmt::Recv {
            from: Source::Rank(ev(t.w)),
            tag: RecvTag::Exact(work_tag),
            payload: Payload::Header(t.header),
            save_source: None,
            save_tag: None,
        }];
        recv_body.extend(self.recv_results(plan, ev(self.t.w)));
        recv_body.push(MpiStmt::Plain(add_assign(self.t.w, iv(1))));
        let t = &self.t;
        round.push(MpiStmt::While {
            cond: bin(BinOp::Le, ev(t.w), ev(t.sent)),
            body: recv_body,
        });
        round.push(MpiStmt::Plain(add_assign(t.next, ev(t.sent))));

        vec![
            MpiStmt::Plain(assign(t.next, iv(0))),
            MpiStmt::While { cond: bin(BinOp::Lt, ev(t.next), ev(t.nch)), body: round },
        ]
    }

    /// Header + data_in sends for chunk `k` (an int expression), addressed
    /// to rank `to`.
    fn send_chunk(&self, plan: &BlockPlan, to: Expr, k: Expr) -> Vec<MpiStmt> {
        let t = &self.t;
        let stride = plan.loop_.stride;
        let mut out = vec![
            // header[0] = first iterator value of the chunk
            MpiStmt::Plain(assign_idx(
                t.header,
                0,
                add(ev(t.i0), mul(mul(k.clone(), ev(t.cs)), iv(stride))),
            )),
            // header[1] = iterations in the chunk (the last one may be short)
            MpiStmt::Plain(assign_idx(
                t.header,
                1,
                imin(ev(t.cs), sub(ev(t.trip), mul(k, ev(t.cs)))),
            )),
            MpiStmt::Send {
                to: to.clone(),
                tag: MessageTag::Work { block: plan.block_id }.encode(),
                payload: Payload::Header(t.header),
            },
        ];
        for &s in &plan.scalars_in {
            out.push(MpiStmt::Send {
                to: to.clone(),
                tag: MessageTag::DataIn { var: s }.encode(),
                payload: Payload::Scalar(s),
            });
        }
        if plan.arrays.iter().any(|a| matches!(a.in_mode, Some(InMode::SliceRows { .. }))) {
            out.push(MpiStmt::Plain(self.last_value_stmt(stride)));
        }
        for a in &plan.arrays {
            match &a.in_mode {
                None => {}
                Some(InMode::FullArray) => out.push(MpiStmt::Send {
                    to: to.clone(),
                    tag: MessageTag::DataIn { var: a.var }.encode(),
                    payload: Payload::Whole(a.var),
                }),
                Some(InMode::SliceRows { scale, lo, hi }) => {
                    let rows = self.program.vars[a.var].dims[0];
                    out.extend(self.span_stmts(*scale, *lo, *hi, stride, rows).map(MpiStmt::Plain));
                    out.push(MpiStmt::Send {
                        to: to.clone(),
                        tag: MessageTag::DataIn { var: a.var }.encode(),
                        payload: Payload::Rows {
                            var: a.var,
                            row_start: ev(self.t.r0),
                            row_count: ev(self.t.rn),
                        },
                    });
                }
            }
        }
        out
    }

    /// Result + reduce receives mirroring one completed chunk, placed by
    /// the header the worker echoed back.
    fn recv_results(&self, plan: &BlockPlan, from: Expr) -> Vec<MpiStmt> {
        let stride = plan.loop_.stride;
        let mut out = Vec::new();
        if plan.arrays.iter().any(|a| matches!(a.out_mode, Some(OutMode::SliceRows { .. }))) {
            out.push(MpiStmt::Plain(self.last_value_stmt(stride)));
        }
        for a in &plan.arrays {
            match &a.out_mode {
                None => {}
                Some(OutMode::FullArrayLastWorker) => out.push(MpiStmt::Recv {
                    from: Source::Rank(from.clone()),
                    tag: RecvTag::Exact(MessageTag::Result { var: a.var }.encode()),
                    payload: Payload::Whole(a.var),
                    save_source: None,
                    save_tag: None,
                }),
                Some(OutMode::SliceRows { scale, offset }) => {
                    let rows = self.program.vars[a.var].dims[0];
                    out.extend(
                        self.span_stmts(*scale, *offset, *offset, stride, rows).map(MpiStmt::Plain),
                    );
                    out.push(MpiStmt::Recv {
                        from: Source::Rank(from.clone()),
                        tag: RecvTag::Exact(MessageTag::Result { var: a.var }.encode()),
                        payload: Payload::Rows {
                            var: a.var,
                            row_start: ev(self.t.r0),
                            row_count: ev(self.t.rn),
                        },
                        save_source: None,
                        save_tag: None,
                    });
                }
            }
        }
        for r in &plan.reductions {
            let (acc, part) = self.t.red[&r.var];
            out.push(MpiStmt::Recv {
                from: Source::Rank(from.clone()),
                tag: RecvTag::Exact(MessageTag::Reduce { var: r.var }.encode()),
                payload: Payload::Scalar(part),
                save_source: None,
                save_tag: None,
            });
            out.push(MpiStmt::Plain(Stmt::Assign {
                target: lv(acc),
                op: fold_op(r.op),
                value: ev(part),
                span: sp(),
            }));
        }
        out
    }

    /// `_dm_last = hdr[0] + (hdr[1] - 1) * stride` — the chunk's final
    /// iterator value.
    fn last_value_stmt(&self, stride: i64) -> Stmt {
        let t = &self.t;
        assign(
            t.vl,
            add(hdr(t.header, 0), mul(sub(hdr(t.header, 1), iv(1)), iv(stride))),
        )
    }

    /// Clamped row span `[r0, r0 + rn)` touched by rows `scale*it + lo ..
    /// scale*it + hi` over the chunk. Relies on `_dm_last` being current.
    fn span_stmts(
        &self,
        scale: i64,
        lo: i64,
        hi: i64,
        stride: i64,
        rows: i64,
    ) -> impl Iterator<Item = Stmt> {
        let t = &self.t;
        // With the sign of scale*stride known at compile time, the extreme
        // iterator rows are known without min/max over expressions.
        let (first_base, last_base) = if scale * stride >= 0 {
            (mul(hdr(t.header, 0), iv(scale)), mul(ev(t.vl), iv(scale)))
        } else {
            (mul(ev(t.vl), iv(scale)), mul(hdr(t.header, 0), iv(scale)))
        };
        let lo_row = imax(iv(0), imin(iv(rows - 1), add(first_base, iv(lo))));
        let hi_row = imax(iv(0), imin(iv(rows - 1), add(last_base, iv(hi))));
        [
            assign(t.r0, lo_row),
            assign(t.rn, imax(iv(0), add(sub(hi_row, ev(t.r0)), iv(1)))),
        ]
        .into_iter()
    }

    /// One service-loop arm: run one chunk of one block.
    fn worker_arm(&self, block: &PragmaBlock, plan: &BlockPlan) -> Vec<MpiStmt> {
        let stride = plan.loop_.stride;
        let iterator = plan.loop_.iterator;
        let mut out = Vec::new();

        for &s in &plan.scalars_in {
            out.push(MpiStmt::Recv {
                from: Source::Rank(iv(0)),
                tag: RecvTag::Exact(MessageTag::DataIn { var: s }.encode()),
                payload: Payload::Scalar(s),
                save_source: None,
                save_tag: None,
            });
        }
        let any_slice = plan.arrays.iter().any(|a| {
            matches!(a.in_mode, Some(InMode::SliceRows { .. }))
                || matches!(a.out_mode, Some(OutMode::SliceRows { .. }))
        });
        if any_slice {
            out.push(MpiStmt::Plain(self.last_value_stmt(stride)));
        }
        for a in &plan.arrays {
            match &a.in_mode {
                None => {}
                Some(InMode::FullArray) => out.push(MpiStmt::Recv {
                    from: Source::Rank(iv(0)),
                    tag: RecvTag::Exact(MessageTag::DataIn { var: a.var }.encode()),
                    payload: Payload::Whole(a.var),
                    save_source: None,
                    save_tag: None,
                }),
                Some(InMode::SliceRows { scale, lo, hi }) => {
                    let rows = self.program.vars[a.var].dims[0];
                    out.extend(self.span_stmts(*scale, *lo, *hi, stride, rows).map(MpiStmt::Plain));
                    out.push(MpiStmt::Recv {
                        from: Source::Rank(iv(0)),
                        tag: RecvTag::Exact(MessageTag::DataIn { var: a.var }.encode()),
                        payload: Payload::Rows {
                            var: a.var,
                            row_start: ev(self.t.r0),
                            row_count: ev(self.t.rn),
                        },
                        save_source: None,
                        save_tag: None,
                    });
                }
            }
        }

        // Partials accumulate from the identity, not the master's value.
        for r in &plan.reductions {
            let kind = self.program.vars[r.var].kind;
            out.push(MpiStmt::Plain(assign(r.var, identity_lit(r.op, kind))));
        }

        // The chunk itself: `count` iterations from the header's first
        // value. One Plain statement so the simulator charges it as one
        // busy period.
        let t = &self.t;
        let step = Stmt::Assign {
            target: lv(iterator),
            op: AssignOp::Add,
            value: iv(stride),
            span: sp(),
        };
        let mut loop_body = block.for_stmt.body.clone();
        loop_body.push(step);
        loop_body.push(add_assign(t.k, iv(1)));
        out.push(MpiStmt::Plain(Stmt::Block {
            body: vec![
                assign(iterator, hdr(t.header, 0)),
                assign(t.k, iv(0)),
                Stmt::While {
                    cond: bin(BinOp::Lt, ev(t.k), hdr(t.header, 1)),
                    body: loop_body,
                    span: sp(),
                },
            ],
            span: sp(),
        }));

        // Completion: echo the header, then stream results in plan order.
        out.push(MpiStmt::Send {
            to: iv(0),
            tag: MessageTag::Work { block: plan.block_id }.encode(),
            payload: Payload::Header(t.header),
        });
        for a in &plan.arrays {
            match &a.out_mode {
                None => {}
                Some(OutMode::FullArrayLastWorker) => out.push(MpiStmt::Send {
                    to: iv(0),
                    tag: MessageTag::Result { var: a.var }.encode(),
                    payload: Payload::Whole(a.var),
                }),
                Some(OutMode::SliceRows { scale, offset }) => {
                    let rows = self.program.vars[a.var].dims[0];
                    out.extend(
                        self.span_stmts(*scale, *offset, *offset, stride, rows).map(MpiStmt::Plain),
                    );
                    out.push(MpiStmt::Send {
                        to: iv(0),
                        tag: MessageTag::Result { var: a.var }.encode(),
                        payload: Payload::Rows {
                            var: a.var,
                            row_start: ev(self.t.r0),
                            row_count: ev(self.t.rn),
                        },
                    });
                }
            }
        }
        for r in &plan.reductions {
            out.push(MpiStmt::Send {
                to: iv(0),
                tag: MessageTag::Reduce { var: r.var }.encode(),
                payload: Payload::Scalar(r.var),
            });
        }
        out
    }
}

/// True if a parallel block occurs anywhere under this statement.
fn contains_pragma(s: &Stmt) -> bool {
    match s {
        Stmt::Pragma(_) => true,
        Stmt::If { then_body, else_body, .. } => {
            then_body.iter().any(contains_pragma) || else_body.iter().any(contains_pragma)
        }
        Stmt::While { body, .. } | Stmt::Block { body, .. } => body.iter().any(contains_pragma),
        Stmt::For(f) => f.body.iter().any(contains_pragma),
        _ => false,
    }
}

/// The value a reduction accumulator starts from.
pub(crate) fn identity_lit(op: ReductionOp, kind: ScalarKind) -> Expr {
    let v = match op {
        ReductionOp::Add | ReductionOp::Sub => 0,
        ReductionOp::Mul | ReductionOp::Div => 1,
    };
    if kind.is_float() {
        Expr::FloatLit { value: v as f64, span: sp() }
    } else {
        iv(v)
    }
}

/// How partials fold into the accumulator (and the accumulator into the
/// original variable).
pub(crate) fn fold_op(op: ReductionOp) -> AssignOp {
    match op {
        ReductionOp::Add => AssignOp::Add,
        ReductionOp::Sub => AssignOp::Sub,
        ReductionOp::Mul => AssignOp::Mul,
        ReductionOp::Div => AssignOp::Div,
    }
}

// --- small expression builders (constant-folding where trivial) ---

pub(crate) fn sp() -> SourceSpan {
    SourceSpan::synthetic()
}

pub(crate) fn iv(n: i64) -> Expr {
    Expr::IntLit { value: n, span: sp() }
}

pub(crate) fn ev(id: VarId) -> Expr {
    Expr::Var { id, span: sp() }
}

pub(crate) fn hdr(header: VarId, slot: i64) -> Expr {
    Expr::Index { base: header, indices: vec![iv(slot)], span: sp() }
}

fn lv(var: VarId) -> LValue {
    LValue { var, indices: vec![], span: sp() }
}

pub(crate) fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span: sp() }
}

pub(crate) fn as_const(e: &Expr) -> Option<i64> {
    match e {
        Expr::IntLit { value, .. } => Some(*value),
        _ => None,
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => iv(x + y),
        (_, Some(0)) => a,
        (Some(0), _) => b,
        // render `x + -c` as the subtraction it is
        (_, Some(y)) if y < 0 => bin(BinOp::Sub, a, iv(-y)),
        _ => bin(BinOp::Add, a, b),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => iv(x - y),
        (_, Some(0)) => a,
        _ => bin(BinOp::Sub, a, b),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => iv(x * y),
        (_, Some(1)) => a,
        (Some(1), _) => b,
        _ => bin(BinOp::Mul, a, b),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if y != 0 => iv(x / y),
        (_, Some(1)) => a,
        _ => bin(BinOp::Div, a, b),
    }
}

pub(crate) fn imin(a: Expr, b: Expr) -> Expr {
    Expr::Call { intrinsic: Intrinsic::Min, args: vec![a, b], span: sp() }
}

pub(crate) fn imax(a: Expr, b: Expr) -> Expr {
    Expr::Call { intrinsic: Intrinsic::Max, args: vec![a, b], span: sp() }
}

pub(crate) fn assign(var: VarId, e: Expr) -> Stmt {
    Stmt::Assign { target: lv(var), op: AssignOp::Set, value: e, span: sp() }
}

pub(crate) fn assign_idx(var: VarId, slot: i64, e: Expr) -> Stmt {
    Stmt::Assign {
        target: LValue { var, indices: vec![iv(slot)], span: sp() },
        op: AssignOp::Set,
        value: e,
        span: sp(),
    }
}

pub(crate) fn add_assign(var: VarId, e: Expr) -> Stmt {
    Stmt::Assign { target: lv(var), op: AssignOp::Add, value: e, span: sp() }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::codegen::ir::{visit_stmts, TAG_TERMINATE_ALL};
    use crate::parser::parse;

    fn lower(src: &str) -> MpiProgram {
        let p = parse(src, "t.c").unwrap().program;
        build_mpi(&p, &BuildOptions::default()).unwrap()
    }

    const DYN: &str = r#"
        double a[24];
        double b[24];
        double s;
        int n = 24;
        int main() {
            int i;
            for (i = 0; i < n; i++) { a[i] = i * 0.5; }
            s = 0.0;
            #pragma omp parallel for reduction(+: s) schedule(dynamic, 2)
            for (i = 1; i < n - 1; i++) {
                b[i] = a[i - 1] + a[i + 1];
                s += b[i];
            }
            printf("%f\n", s);
            return 0;
        }
    "#;

    const STATIC: &str = r#"
        double x[24];
        double y[24];
        int n = 24;
        int main() {
            int i;
            for (i = 0; i < n; i++) { x[i] = i * 0.25; y[i] = 1.0; }
            #pragma omp parallel for schedule(static)
            for (i = 0; i < n; i++) {
                y[i] = y[i] + x[i];
            }
            printf("%f\n", y[3]);
            return 0;
        }
    "#;

    fn send_tags(body: &[MpiStmt]) -> Vec<i64> {
        let mut tags = Vec::new();
        visit_stmts(body, &mut |s| {
            if let MpiStmt::Send { tag, .. } = s {
                tags.push(*tag);
            }
        });
        tags
    }

    fn recv_exact_tags(body: &[MpiStmt]) -> Vec<i64> {
        let mut tags = Vec::new();
        visit_stmts(body, &mut |s| {
            if let MpiStmt::Recv { tag: RecvTag::Exact(t), .. } = s {
                tags.push(*t);
            }
        });
        tags
    }

    fn kind_set(tags: &[i64], pick: impl Fn(MessageTag) -> bool) -> BTreeSet<i64> {
        tags.iter()
            .copied()
            .filter(|t| MessageTag::decode(*t).is_some_and(&pick))
            .collect()
    }

    #[test]
    fn workers_talk_only_to_the_master() {
        for src in [DYN, STATIC] {
            let mp = lower(src);
            visit_stmts(&mp.worker, &mut |s| {
                if let MpiStmt::Send { to, .. } = s {
                    assert!(
                        matches!(to, Expr::IntLit { value: 0, .. }),
                        "worker send addressed to {to:?}"
                    );
                }
                if let MpiStmt::Recv { from, .. } = s {
                    assert!(
                        matches!(from, Source::Rank(Expr::IntLit { value: 0, .. })),
                        "worker recv listening to {from:?}"
                    );
                }
            });
        }
    }

    #[test]
    fn shutdown_is_broadcast_and_per_block_terminate_is_never_sent() {
        for src in [DYN, STATIC] {
            let mp = lower(src);
            let master = send_tags(&mp.master);
            assert!(master.contains(&TAG_TERMINATE_ALL), "master never shuts workers down");
            for tags in [&master, &send_tags(&mp.worker)] {
                assert!(
                    !tags.iter().any(|t| matches!(
                        MessageTag::decode(*t),
                        Some(MessageTag::Terminate { .. })
                    )),
                    "per-block terminate is reserved and must not be emitted"
                );
            }
        }
    }

    #[test]
    fn every_transfer_has_a_matching_receive() {
        for src in [DYN, STATIC] {
            let mp = lower(src);
            let m_send = send_tags(&mp.master);
            let m_recv = recv_exact_tags(&mp.master);
            let w_send = send_tags(&mp.worker);
            let w_recv = recv_exact_tags(&mp.worker);

            // Master-to-worker data: the worker waits for exactly the
            // variables the master stages.
            let is_data_in = |t: MessageTag| matches!(t, MessageTag::DataIn { .. });
            assert_eq!(kind_set(&m_send, is_data_in), kind_set(&w_recv, is_data_in));

            // Worker-to-master completion traffic, mirrored the other way.
            let is_result = |t: MessageTag| matches!(t, MessageTag::Result { .. });
            let is_reduce = |t: MessageTag| matches!(t, MessageTag::Reduce { .. });
            assert_eq!(kind_set(&w_send, is_result), kind_set(&m_recv, is_result));
            assert_eq!(kind_set(&w_send, is_reduce), kind_set(&m_recv, is_reduce));

            // Chunk headers go out and come back under the same tag.
            let is_work = |t: MessageTag| matches!(t, MessageTag::Work { .. });
            assert_eq!(kind_set(&m_send, is_work), kind_set(&w_send, is_work));
            assert_eq!(kind_set(&m_send, is_work), kind_set(&m_recv, is_work));
        }
    }

    #[test]
    fn only_the_dynamic_master_uses_wildcard_receives() {
        let any_source = |mp: &MpiProgram| {
            let mut n = 0;
            visit_stmts(&mp.master, &mut |s| {
                if matches!(s, MpiStmt::Recv { from: Source::Any, .. }) {
                    n += 1;
                }
            });
            n
        };
        assert_eq!(any_source(&lower(STATIC)), 0, "round-robin receives are fully determined");
        assert!(any_source(&lower(DYN)) > 0, "on-demand serving needs a wildcard receive");
    }

    #[test]
    fn master_restores_each_block_iterator() {
        for src in [DYN, STATIC] {
            let mp = lower(src);
            for plan in mp.plan.decisions.iter().filter_map(|d| d.plan()) {
                let mut restored = false;
                visit_stmts(&mp.master, &mut |s| {
                    if let MpiStmt::Plain(Stmt::Assign { target, op: AssignOp::Set, .. }) = s {
                        if target.var == plan.loop_.iterator && target.indices.is_empty() {
                            restored = true;
                        }
                    }
                });
                assert!(restored, "iterator of block {} never restored", plan.block_id);
            }
        }
    }

    #[test]
    fn small_expression_folds_hold() {
        // The builders fold the degenerate shapes that would otherwise
        // clutter every generated program.
        assert_eq!(as_const(&div(iv(7), iv(2))), Some(3));
        assert_eq!(as_const(&div(sub(iv(3), iv(8)), iv(1))), Some(-5));
        assert_eq!(as_const(&add(iv(4), iv(-6))), Some(-2));
        let x = ev(0);
        assert!(matches!(div(x.clone(), iv(1)), Expr::Var { id: 0, .. }));
        // x + -3 renders as x - 3 (no consecutive-operator C output)
        match add(x, iv(-3)) {
            Expr::Binary { op: BinOp::Sub, rhs, .. } => {
                assert!(matches!(*rhs, Expr::IntLit { value: 3, .. }));
            }
            other => panic!("expected subtraction, got {other:?}"),
        }
    }
}
