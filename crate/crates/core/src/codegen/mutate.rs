//! Seeded defects for the lowered message-passing programs.
//!
//! Each mutation makes one precise, realistic mistake in the lowered IR —
//! a wrong fold operator, an off-by-one chunk bound, a dropped transfer.
//! They exist to demonstrate that the differential harness has teeth: a
//! mutation that neither trips the simulator nor perturbs the final state
//! would mean verification has a blind spot.

use serde::Serialize;

use crate::ast::{AssignOp, BinOp, Expr, LValue, Stmt, VarId};
use crate::codegen::build::{assign_idx, bin, iv, sp};
use crate::codegen::ir::*;

/// One deliberate defect. Every variant changes exactly one aspect of the
/// protocol or the bookkeeping around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mutation {
    /// Master folds reduction partials with the wrong operator.
    WrongFoldOp,
    /// Worker starts its partial from the wrong identity (0 <-> 1).
    WrongIdentity,
    /// Master plans one chunk fewer than the trip count needs.
    SkipLastChunk,
    /// Chunk headers understate the iteration count by one.
    OffByOneCount,
    /// Chunk headers start one iterator value too high.
    WrongStart,
    /// Worker sends results under a neighboring variable's tag.
    SwapResultTag,
    /// Master skips one of the data_in transfers the worker waits for.
    DropDataIn,
    /// Master reads result rows from a window shifted by one row.
    StaleRowOffset,
    /// Static distribution addresses worker w's chunk to worker w+1.
    ShiftStaticTarget,
    /// Worker echoes a zeroed header instead of the chunk it ran.
    NoEchoUpdate,
    /// Worker ignores the shutdown message and keeps serving.
    TerminateSkipsBreak,
    /// Master folds every reduction partial twice.
    DoubleFold,
    /// Master forgets to restore the loop iterator's final value.
    IteratorNotRestored,
    /// Master sends one row fewer than the worker's input span.
    NarrowInSlice,
    /// A scalar input is neither sent nor received (consistently dropped).
    ScalarInDropped,
    /// Dynamic master never hands out chunks beyond the initial seeding.
    DynamicNoResend,
    /// Worker skips the chunk computation and returns its buffers as-is.
    WorkerComputeSkipped,
    /// Master never folds the accumulated reduction into the variable.
    MasterFoldSkipped,
    /// Header fields are swapped: (count, first) instead of (first, count).
    HeaderSwapped,
    /// Worker steps its iterator in the wrong direction.
    StrideSignFlip,
}

pub const ALL_MUTATIONS: [Mutation; 20] = [
    Mutation::WrongFoldOp,
    Mutation::WrongIdentity,
    Mutation::SkipLastChunk,
    Mutation::OffByOneCount,
    Mutation::WrongStart,
    Mutation::SwapResultTag,
    Mutation::DropDataIn,
    Mutation::StaleRowOffset,
    Mutation::ShiftStaticTarget,
    Mutation::NoEchoUpdate,
    Mutation::TerminateSkipsBreak,
    Mutation::DoubleFold,
    Mutation::IteratorNotRestored,
    Mutation::NarrowInSlice,
    Mutation::ScalarInDropped,
    Mutation::DynamicNoResend,
    Mutation::WorkerComputeSkipped,
    Mutation::MasterFoldSkipped,
    Mutation::HeaderSwapped,
    Mutation::StrideSignFlip,
];

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Mutation::WrongFoldOp => "wrong-fold-op",
            Mutation::WrongIdentity => "wrong-identity",
            Mutation::SkipLastChunk => "skip-last-chunk",
            Mutation::OffByOneCount => "off-by-one-count",
            Mutation::WrongStart => "wrong-start",
            Mutation::SwapResultTag => "swap-result-tag",
            Mutation::DropDataIn => "drop-data-in",
            Mutation::StaleRowOffset => "stale-row-offset",
            Mutation::ShiftStaticTarget => "shift-static-target",
            Mutation::NoEchoUpdate => "no-echo-update",
            Mutation::TerminateSkipsBreak => "terminate-skips-break",
            Mutation::DoubleFold => "double-fold",
            Mutation::IteratorNotRestored => "iterator-not-restored",
            Mutation::NarrowInSlice => "narrow-in-slice",
            Mutation::ScalarInDropped => "scalar-in-dropped",
            Mutation::DynamicNoResend => "dynamic-no-resend",
            Mutation::WorkerComputeSkipped => "worker-compute-skipped",
            Mutation::MasterFoldSkipped => "master-fold-skipped",
            Mutation::HeaderSwapped => "header-swapped",
            Mutation::StrideSignFlip => "stride-sign-flip",
        }
    }
}

/// Apply one mutation in place. Returns false when the program has no site
/// for it (no reduction, no static block, ...); the program is unchanged in
/// that case.
pub fn apply_mutation(mp: &mut MpiProgram, m: Mutation) -> bool {
    let ctx = Ctx::of(mp);
    match m {
        Mutation::WrongFoldOp => mutate_first(&mut mp.master, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, op, value, .. })
                if ctx.is_acc(target) && is_part_var(&ctx, value) =>
            {
                *op = match *op {
                    AssignOp::Add => AssignOp::Mul,
                    AssignOp::Sub => AssignOp::Add,
                    AssignOp::Mul => AssignOp::Add,
                    AssignOp::Div => AssignOp::Mul,
                    other => other,
                };
                true
            }
            _ => false,
        }),
        Mutation::WrongIdentity => mutate_first(&mut mp.worker, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, op: AssignOp::Set, value, .. })
                if ctx.reductions.contains(&target.var) && target.indices.is_empty() =>
            {
                *value = match value {
                    Expr::IntLit { value: 0, .. } => iv(1),
                    Expr::IntLit { value: 1, .. } => iv(0),
                    Expr::FloatLit { value: v, .. } if *v == 0.0 => {
                        Expr::FloatLit { value: 1.0, span: sp() }
                    }
                    Expr::FloatLit { value: v, .. } if *v == 1.0 => {
                        Expr::FloatLit { value: 0.0, span: sp() }
                    }
                    _ => return false,
                };
                true
            }
            _ => false,
        }),
        Mutation::SkipLastChunk => mutate_first(&mut mp.master, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, value, .. })
                if ctx.is_synth(target.var, "_dm_nchunks") =>
            {
                *value = bin(BinOp::Sub, value.clone(), iv(1));
                true
            }
            _ => false,
        }),
        Mutation::OffByOneCount => mutate_first(&mut mp.master, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, value, .. }) if ctx.is_header_slot(target, 1) => {
                *value = bin(BinOp::Sub, value.clone(), iv(1));
                true
            }
            _ => false,
        }),
        Mutation::WrongStart => mutate_first(&mut mp.master, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, value, .. }) if ctx.is_header_slot(target, 0) => {
                *value = bin(BinOp::Add, value.clone(), iv(1));
                true
            }
            _ => false,
        }),
        Mutation::SwapResultTag => mutate_first(&mut mp.worker, |s| match s {
            MpiStmt::Send { tag, .. }
                if matches!(MessageTag::decode(*tag), Some(MessageTag::Result { .. })) =>
            {
                *tag += 6; // the same kind for the next variable id
                true
            }
            _ => false,
        }),
        Mutation::DropDataIn => remove_first(&mut mp.master, |s| {
            matches!(s, MpiStmt::Send { tag, .. }
                if matches!(MessageTag::decode(*tag), Some(MessageTag::DataIn { .. })))
        }),
        Mutation::StaleRowOffset => {
            // Shift the start-row computation feeding a result receive; it
            // shares a statement list with the receive it places.
            let mut done = false;
            visit_bodies_mut(&mut mp.master, &mut |stmts| {
                if done {
                    return;
                }
                let recv_at = stmts.iter().position(|s| {
                    matches!(s, MpiStmt::Recv {
                        tag: RecvTag::Exact(t),
                        payload: Payload::Rows { row_start: Expr::Var { .. }, .. },
                        ..
                    } if matches!(MessageTag::decode(*t), Some(MessageTag::Result { .. })))
                });
                let Some(j) = recv_at else { return };
                let MpiStmt::Recv {
                    payload: Payload::Rows { row_start: Expr::Var { id: r0, .. }, .. },
                    ..
                } = &stmts[j]
                else {
                    return;
                };
                let r0 = *r0;
                for i in (0..j).rev() {
                    if let MpiStmt::Plain(Stmt::Assign { target, value, .. }) = &mut stmts[i] {
                        if target.var == r0 && target.indices.is_empty() {
                            *value = bin(BinOp::Add, value.clone(), iv(1));
                            done = true;
                            return;
                        }
                    }
                }
            });
            done
        }
        Mutation::ShiftStaticTarget => mutate_first(&mut mp.master, |s| match s {
            MpiStmt::Send { to, tag, .. }
                if matches!(MessageTag::decode(*tag), Some(MessageTag::Work { .. })) =>
            {
                if !matches!(&*to, Expr::Var { id, .. } if ctx.is_synth(*id, "_dm_w")) {
                    return false;
                }
                *to = bin(BinOp::Add, to.clone(), iv(1));
                true
            }
            _ => false,
        }),
        Mutation::NoEchoUpdate => {
            let header = ctx.header;
            insert_before_first(&mut mp.worker, |s| {
                matches!(s, MpiStmt::Send { to: Expr::IntLit { value: 0, .. }, tag, .. }
                    if matches!(MessageTag::decode(*tag), Some(MessageTag::Work { .. })))
            }, vec![
                MpiStmt::Plain(assign_idx(header, 0, iv(0))),
                MpiStmt::Plain(assign_idx(header, 1, iv(0))),
            ])
        }
        Mutation::TerminateSkipsBreak => {
            let mut done = false;
            visit_bodies_mut(&mut mp.worker, &mut |stmts| {
                if done {
                    return;
                }
                for s in stmts.iter_mut() {
                    if let MpiStmt::If { then_body, .. } = s {
                        if matches!(then_body.as_slice(), [MpiStmt::Break]) {
                            then_body.clear();
                            done = true;
                            return;
                        }
                    }
                }
            });
            done
        }
        Mutation::DoubleFold => {
            let mut done = false;
            visit_bodies_mut(&mut mp.master, &mut |stmts| {
                if done {
                    return;
                }
                let hit = stmts.iter().position(|s| match s {
                    MpiStmt::Plain(Stmt::Assign { target, value, .. }) => {
                        ctx.is_acc(target) && is_part_var(&ctx, value)
                    }
                    _ => false,
                });
                if let Some(i) = hit {
                    let dup = stmts[i].clone();
                    stmts.insert(i + 1, dup);
                    done = true;
                }
            });
            done
        }
        Mutation::IteratorNotRestored => remove_first(&mut mp.master, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, op: AssignOp::Set, value, .. }) => {
                ctx.iterators.contains(&target.var)
                    && mentions_synth(value, &ctx, "_dm_first")
                    && mentions_synth(value, &ctx, "_dm_trip")
            }
            _ => false,
        }),
        Mutation::NarrowInSlice => mutate_first(&mut mp.master, |s| match s {
            MpiStmt::Send { tag, payload: Payload::Rows { row_count, .. }, .. }
                if matches!(MessageTag::decode(*tag), Some(MessageTag::DataIn { .. })) =>
            {
                *row_count = bin(BinOp::Sub, row_count.clone(), iv(1));
                true
            }
            _ => false,
        }),
        Mutation::ScalarInDropped => {
            let mut dropped_tag = None;
            let mut removed = false;
            visit_bodies_mut(&mut mp.master, &mut |stmts| {
                if removed {
                    return;
                }
                let hit = stmts.iter().position(|s| {
                    matches!(s, MpiStmt::Send { tag, payload: Payload::Scalar(_), .. }
                        if matches!(MessageTag::decode(*tag), Some(MessageTag::DataIn { .. })))
                });
                if let Some(i) = hit {
                    if let MpiStmt::Send { tag, .. } = &stmts[i] {
                        dropped_tag = Some(*tag);
                    }
                    stmts.remove(i);
                    removed = true;
                }
            });
            let Some(tag) = dropped_tag else { return false };
            // Both sides must agree the transfer is gone, or this would be a
            // plain deadlock instead of a stale value.
            remove_all(&mut mp.master, |s| {
                matches!(s, MpiStmt::Send { tag: t, payload: Payload::Scalar(_), .. } if *t == tag)
            });
            remove_all(&mut mp.worker, |s| {
                matches!(s, MpiStmt::Recv { tag: RecvTag::Exact(t), .. } if *t == tag)
            })
        }
        Mutation::DynamicNoResend => {
            let mut done = false;
            visit_bodies_mut(&mut mp.master, &mut |stmts| {
                if done {
                    return;
                }
                let hit = stmts.iter().position(|s| match s {
                    MpiStmt::If { cond, then_body, .. } => {
                        is_lt_of_synth(cond, &ctx, "_dm_next", "_dm_nchunks")
                            && then_body.iter().any(|b| matches!(b, MpiStmt::Send { .. }))
                    }
                    _ => false,
                });
                if let Some(i) = hit {
                    stmts.remove(i);
                    done = true;
                }
            });
            done
        }
        Mutation::WorkerComputeSkipped => remove_first(&mut mp.worker, |s| {
            matches!(s, MpiStmt::Plain(Stmt::Block { .. }))
        }),
        Mutation::MasterFoldSkipped => remove_first(&mut mp.master, |s| match s {
            MpiStmt::Plain(Stmt::Assign { target, op, value, .. }) => {
                ctx.reductions.contains(&target.var)
                    && *op != AssignOp::Set
                    && matches!(value, Expr::Var { id, .. } if ctx.is_synth(*id, "_dm_acc_"))
            }
            _ => false,
        }),
        Mutation::HeaderSwapped => {
            let mut done = false;
            visit_bodies_mut(&mut mp.master, &mut |stmts| {
                if done {
                    return;
                }
                for i in 0..stmts.len().saturating_sub(1) {
                    let slot0 = matches!(&stmts[i], MpiStmt::Plain(Stmt::Assign { target, .. })
                        if ctx.is_header_slot(target, 0));
                    let slot1 = matches!(&stmts[i + 1], MpiStmt::Plain(Stmt::Assign { target, .. })
                        if ctx.is_header_slot(target, 1));
                    if slot0 && slot1 {
                        let (a, b) = stmts.split_at_mut(i + 1);
                        if let (
                            MpiStmt::Plain(Stmt::Assign { value: v0, .. }),
                            MpiStmt::Plain(Stmt::Assign { value: v1, .. }),
                        ) = (&mut a[i], &mut b[0])
                        {
                            std::mem::swap(v0, v1);
                            done = true;
                            return;
                        }
                    }
                }
            });
            done
        }
        Mutation::StrideSignFlip => {
            let mut done = false;
            let iterators = ctx.iterators.clone();
            visit_bodies_mut(&mut mp.worker, &mut |stmts| {
                if done {
                    return;
                }
                for s in stmts.iter_mut() {
                    if let MpiStmt::Plain(block @ Stmt::Block { .. }) = s {
                        if flip_step_in(block, &iterators) {
                            done = true;
                            return;
                        }
                    }
                }
            });
            done
        }
    }
}

/// Flip the `iterator += stride` statement inside the worker's chunk loop.
fn flip_step_in(block: &mut Stmt, iterators: &[VarId]) -> bool {
    let Stmt::Block { body, .. } = block else { return false };
    for s in body.iter_mut() {
        if let Stmt::While { body: wb, .. } = s {
            for ws in wb.iter_mut() {
                if let Stmt::Assign { target, op, value: Expr::IntLit { .. }, .. } = ws {
                    if iterators.contains(&target.var)
                        && target.indices.is_empty()
                        && matches!(op, AssignOp::Add | AssignOp::Sub)
                    {
                        *op = if *op == AssignOp::Add { AssignOp::Sub } else { AssignOp::Add };
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Facts about the lowered program that matchers need.
struct Ctx {
    header: VarId,
    /// Variables reduced by any parallel block.
    reductions: Vec<VarId>,
    /// Iterators of all parallel blocks.
    iterators: Vec<VarId>,
    synth: Vec<(VarId, String)>,
}

impl Ctx {
    fn of(mp: &MpiProgram) -> Ctx {
        let mut reductions = Vec::new();
        let mut iterators = Vec::new();
        for d in &mp.plan.decisions {
            if let Some(plan) = d.plan() {
                iterators.push(plan.loop_.iterator);
                for r in &plan.reductions {
                    reductions.push(r.var);
                }
            }
        }
        let synth = mp
            .program
            .vars
            .iter()
            .enumerate()
            .filter(|(_, d)| d.synthetic)
            .map(|(i, d)| (i, d.name.clone()))
            .collect();
        Ctx { header: mp.rt.header, reductions, iterators, synth }
    }

    fn is_synth(&self, var: VarId, prefix: &str) -> bool {
        self.synth.iter().any(|(v, n)| *v == var && n.starts_with(prefix))
    }

    fn is_acc(&self, target: &LValue) -> bool {
        target.indices.is_empty() && self.is_synth(target.var, "_dm_acc_")
    }

    fn is_header_slot(&self, target: &LValue, slot: i64) -> bool {
        target.var == self.header
            && matches!(target.indices.as_slice(), [Expr::IntLit { value, .. }] if *value == slot)
    }
}

fn is_part_var(ctx: &Ctx, e: &Expr) -> bool {
    matches!(e, Expr::Var { id, .. } if ctx.is_synth(*id, "_dm_part_"))
}

fn mentions_synth(e: &Expr, ctx: &Ctx, prefix: &str) -> bool {
    let mut found = false;
    e.visit(&mut |x| {
        if let Expr::Var { id, .. } = x {
            if ctx.is_synth(*id, prefix) {
                found = true;
            }
        }
    });
    found
}

fn is_lt_of_synth(cond: &Expr, ctx: &Ctx, lhs_prefix: &str, rhs_prefix: &str) -> bool {
    match cond {
        Expr::Binary { op: BinOp::Lt, lhs, rhs, .. } => {
            matches!(&**lhs, Expr::Var { id, .. } if ctx.is_synth(*id, lhs_prefix))
                && matches!(&**rhs, Expr::Var { id, .. } if ctx.is_synth(*id, rhs_prefix))
        }
        _ => false,
    }
}

/// Apply `f` to the first statement it accepts; `f` edits in place and
/// returns whether it fired.
fn mutate_first(body: &mut Vec<MpiStmt>, mut f: impl FnMut(&mut MpiStmt) -> bool) -> bool {
    let mut done = false;
    visit_bodies_mut(body, &mut |stmts| {
        if done {
            return;
        }
        for s in stmts.iter_mut() {
            if f(s) {
                done = true;
                return;
            }
        }
    });
    done
}

fn remove_first(body: &mut Vec<MpiStmt>, mut pred: impl FnMut(&MpiStmt) -> bool) -> bool {
    let mut done = false;
    visit_bodies_mut(body, &mut |stmts| {
        if done {
            return;
        }
        if let Some(i) = stmts.iter().position(&mut pred) {
            stmts.remove(i);
            done = true;
        }
    });
    done
}

fn remove_all(body: &mut Vec<MpiStmt>, mut pred: impl FnMut(&MpiStmt) -> bool) -> bool {
    let mut any = false;
    visit_bodies_mut(body, &mut |stmts| {
        let before = stmts.len();
        stmts.retain(|s| !pred(s));
        any |= stmts.len() != before;
    });
    any
}

fn insert_before_first(
    body: &mut Vec<MpiStmt>,
    mut pred: impl FnMut(&MpiStmt) -> bool,
    insert: Vec<MpiStmt>,
) -> bool {
    let mut done = false;
    visit_bodies_mut(body, &mut |stmts| {
        if done {
            return;
        }
        if let Some(i) = stmts.iter().position(&mut pred) {
            for (off, s) in insert.iter().enumerate() {
                stmts.insert(i + off, s.clone());
            }
            done = true;
        }
    });
    done
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::build::{build_mpi, BuildOptions};
    use crate::parser::parse;
    use crate::runtime::diff::differential_check;
    use crate::runtime::Inputs;

    fn lower(src: &str) -> MpiProgram {
        let p = parse(src, "t.c").unwrap().program;
        build_mpi(&p, &BuildOptions::default()).unwrap()
    }

    /// A kernel with every mutation site: reduction, sliced array input and
    /// output, a runtime-assigned scalar input, and a printed iterator.
    const RICH_DYN: &str = r#"
        double a[40];
        double b[40];
        double s;
        double scale;
        int n = 40;
        int main() {
            int i;
            scale = 2.5;
            for (i = 0; i < n; i++) { a[i] = i * 0.125; }
            s = 0.0;
            #pragma omp parallel for reduction(+: s) schedule(dynamic, 2)
            for (i = 1; i < n - 1; i++) {
                b[i] = (a[i - 1] + a[i + 1]) * scale;
                s += b[i];
            }
            printf("%d %f\n", i, s);
            return 0;
        }
    "#;

    const RICH_STATIC: &str = r#"
        double a[40];
        double b[40];
        double s;
        double scale;
        int n = 40;
        int main() {
            int i;
            scale = 2.5;
            for (i = 0; i < n; i++) { a[i] = i * 0.125; }
            s = 0.0;
            #pragma omp parallel for reduction(+: s) schedule(static)
            for (i = 1; i < n - 1; i++) {
                b[i] = (a[i - 1] + a[i + 1]) * scale;
                s += b[i];
            }
            printf("%d %f\n", i, s);
            return 0;
        }
    "#;

    #[test]
    fn every_mutation_has_a_site() {
        for m in ALL_MUTATIONS {
            let src = if m == Mutation::ShiftStaticTarget { RICH_STATIC } else { RICH_DYN };
            let mut mp = lower(src);
            assert!(apply_mutation(&mut mp, m), "{} found no site", m.name());
        }
    }

    #[test]
    fn mutations_change_the_program() {
        for m in ALL_MUTATIONS {
            let src = if m == Mutation::ShiftStaticTarget { RICH_STATIC } else { RICH_DYN };
            let clean = lower(src);
            let mut mutated = lower(src);
            apply_mutation(&mut mutated, m);
            let a = serde_json::to_string(&(&clean.master, &clean.worker)).unwrap();
            let b = serde_json::to_string(&(&mutated.master, &mutated.worker)).unwrap();
            assert_ne!(a, b, "{} left the program identical", m.name());
        }
    }

    #[test]
    fn spot_check_state_corruptions_are_caught() {
        for m in [Mutation::WrongFoldOp, Mutation::WorkerComputeSkipped, Mutation::WrongStart] {
            let mut mp = lower(RICH_DYN);
            assert!(apply_mutation(&mut mp, m));
            let rep = differential_check(&mp, &Inputs::new(), 3, 1, 1e-6).unwrap();
            assert!(!rep.ok, "{} was not caught", m.name());
        }
    }

    #[test]
    fn spot_check_protocol_breaks_are_caught() {
        for m in [Mutation::SwapResultTag, Mutation::DropDataIn, Mutation::DynamicNoResend] {
            let mut mp = lower(RICH_DYN);
            assert!(apply_mutation(&mut mp, m));
            let rep = differential_check(&mp, &Inputs::new(), 3, 1, 1e-6).unwrap();
            assert!(
                rep.sim_error.is_some(),
                "{} did not trip the simulator: {rep:?}",
                m.name()
            );
        }
    }
}
