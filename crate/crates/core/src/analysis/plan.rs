//! Parallelization planning.
//!
//! Combines loop canonicalization, variable classification, and subscript
//! analysis into a per-block decision: either a [`BlockPlan`] describing how
//! to distribute the loop (schedule, chunking, and per-variable transfers),
//! or a fallback with the reason the block must stay sequential.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::accesses::{collect_accesses, ArrayAccess, SubscriptForm};
use crate::analysis::classify::{classify_block, BlockClasses, VarClass};
use crate::analysis::loops::{canonicalize_loop, CanonicalLoop};
use crate::ast::*;
use crate::errors::{CompileError, Warning};

/// How chunks are handed to workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Schedule {
    /// Fixed round-robin assignment, synchronous rounds.
    Static,
    /// First-come, first-served: the master answers whichever worker
    /// finishes next.
    Dynamic,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::Static => "static",
            Schedule::Dynamic => "dynamic",
        }
    }
}

/// Master-to-worker transfer of one array before a chunk runs.
#[derive(Debug, Clone, Serialize)]
pub enum InMode {
    /// Send rows `scale*it + lo ..= scale*it + hi` over the chunk's
    /// iterator range, clamped to the array.
    SliceRows { scale: i64, lo: i64, hi: i64 },
    /// Send the whole array (subscripts are not sliceable).
    FullArray,
}

/// Worker-to-master transfer of one array after a chunk runs.
#[derive(Debug, Clone, Serialize)]
pub enum OutMode {
    /// Return exactly the rows the chunk wrote: `scale*it + offset`.
    SliceRows { scale: i64, offset: i64 },
    /// Return the whole array; the master keeps the version from the last
    /// chunk to complete. Unsound when chunks write different locations —
    /// emitted with a warning, rejected in strict mode.
    FullArrayLastWorker,
}

/// Transfer plan for one array variable.
#[derive(Debug, Clone, Serialize)]
pub struct ArrayPlan {
    pub var: VarId,
    pub in_mode: Option<InMode>,
    pub out_mode: Option<OutMode>,
}

/// One reduction: the master folds worker partials with `op`.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionPlan {
    pub var: VarId,
    pub op: ReductionOp,
}

/// Everything codegen needs to distribute one block.
#[derive(Debug, Clone, Serialize)]
pub struct BlockPlan {
    pub block_id: usize,
    pub loop_: CanonicalLoop,
    pub schedule: Schedule,
    /// Explicit chunk size from the schedule clause, if any.
    pub chunk: Option<i64>,
    pub classes: BlockClasses,
    /// Scalars sent to the worker with each chunk, in id order.
    pub scalars_in: Vec<VarId>,
    /// Arrays with data movement, in id order.
    pub arrays: Vec<ArrayPlan>,
    pub reductions: Vec<ReductionPlan>,
    /// Arrays whose write-back uses the whole-array mode.
    pub unsafe_writebacks: Vec<VarId>,
}

/// Why a block stays sequential.
#[derive(Debug, Clone, Serialize)]
pub enum FallbackReason {
    NonCanonicalLoop { message: String },
    ConcurrentSharedWrite { var: String, detail: String },
}

impl std::fmt::Display for FallbackReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FallbackReason::NonCanonicalLoop { message } => {
                write!(f, "loop is not distributable: {message}")
            }
            FallbackReason::ConcurrentSharedWrite { var, detail } => {
                write!(f, "iterations share writes to `{var}`: {detail}")
            }
        }
    }
}

/// Outcome of planning one block.
#[derive(Debug, Clone, Serialize)]
pub enum BlockDecision {
    Parallel(Box<BlockPlan>),
    Fallback { block_id: usize, reason: FallbackReason },
}

impl BlockDecision {
    pub fn block_id(&self) -> usize {
        match self {
            BlockDecision::Parallel(p) => p.block_id,
            BlockDecision::Fallback { block_id, .. } => *block_id,
        }
    }

    pub fn plan(&self) -> Option<&BlockPlan> {
        match self {
            BlockDecision::Parallel(p) => Some(p),
            BlockDecision::Fallback { .. } => None,
        }
    }
}

/// Plans for every block of a program, in block order.
#[derive(Debug, Clone, Serialize)]
pub struct ProgramPlan {
    pub decisions: Vec<BlockDecision>,
    pub warnings: Vec<Warning>,
}

impl ProgramPlan {
    pub fn decision(&self, block_id: usize) -> &BlockDecision {
        &self.decisions[block_id]
    }
}

/// Chunk size used when the schedule clause does not fix one: the iteration
/// count split so each worker sees about ten chunks.
pub fn default_chunk_size(trip: i64, workers: i64) -> i64 {
    if trip <= 0 || workers <= 0 {
        return 1;
    }
    let denom = workers * 10;
    ((trip + denom - 1) / denom).max(1)
}

/// Split `trip` iterations into `(first_index, count)` chunks of `size`
/// (the last chunk may be short). Indices are 0-based iteration numbers.
pub fn chunks(trip: i64, size: i64) -> Vec<(i64, i64)> {
    assert!(size >= 1, "chunk size must be positive");
    let mut out = Vec::new();
    let mut k = 0;
    while k < trip {
        out.push((k, size.min(trip - k)));
        k += size;
    }
    out
}

/// Static assignment: chunk `k` runs on worker `(k mod workers) + 1`
/// (ranks 1..=workers; rank 0 is the master).
pub fn worker_for_chunk(k: usize, workers: usize) -> usize {
    (k % workers) + 1
}

/// Inclusive row span an affine access family touches over one chunk.
///
/// `v_first`/`v_last` are the iterator values of the chunk's first and last
/// iterations; `lo`/`hi` are the extreme constant offsets.
pub fn row_span(scale: i64, lo: i64, hi: i64, v_first: i64, v_last: i64) -> (i64, i64) {
    let a = scale * v_first;
    let b = scale * v_last;
    (a.min(b) + lo, a.max(b) + hi)
}

/// Plan one block. `strict` turns whole-array write-backs into errors.
pub fn plan_block(
    program: &Program,
    block: &PragmaBlock,
    strict: bool,
) -> Result<(BlockDecision, Vec<Warning>), CompileError> {
    plan_block_with(program, block, strict, Schedule::Dynamic)
}

/// Like [`plan_block`], but with a configurable default for blocks whose
/// pragma has no `schedule(...)` clause (an explicit clause always wins).
pub fn plan_block_with(
    program: &Program,
    block: &PragmaBlock,
    strict: bool,
    default_schedule: Schedule,
) -> Result<(BlockDecision, Vec<Warning>), CompileError> {
    let mut warnings = Vec::new();

    let loop_ = match canonicalize_loop(program, &block.for_stmt) {
        Ok(l) => l,
        Err(nc) => {
            return Ok((
                BlockDecision::Fallback {
                    block_id: block.block_id,
                    reason: FallbackReason::NonCanonicalLoop { message: nc.message },
                },
                warnings,
            ))
        }
    };

    let (classes, class_warnings) = classify_block(program, block);
    warnings.extend(class_warnings);

    // Schedule selection.
    let (schedule, chunk) = match &block.directive.schedule {
        Some(c) => {
            let sched = match c.kind {
                ScheduleKind::Static => Schedule::Static,
                ScheduleKind::Dynamic => Schedule::Dynamic,
                ScheduleKind::Guided => {
                    warnings.push(Warning {
                        span: block.span.clone(),
                        message: "guided schedule is approximated by the static distribution"
                            .to_string(),
                    });
                    Schedule::Static
                }
            };
            (sched, c.chunk)
        }
        None => (default_schedule, None),
    };

    // Shared scalars written by iterations cannot be merged.
    for cv in &classes.vars {
        let decl = &program.vars[cv.id];
        if decl.is_array() {
            continue;
        }
        if matches!(cv.class, VarClass::Out | VarClass::InOut) {
            return Ok((
                BlockDecision::Fallback {
                    block_id: block.block_id,
                    reason: FallbackReason::ConcurrentSharedWrite {
                        var: decl.name.clone(),
                        detail: "every iteration writes this scalar and it is not a reduction"
                            .to_string(),
                    },
                },
                warnings,
            ));
        }
    }

    let accesses = collect_accesses(program, block);
    let mut by_var: BTreeMap<VarId, Vec<&ArrayAccess>> = BTreeMap::new();
    for a in &accesses {
        by_var.entry(a.var).or_default().push(a);
    }

    let mut arrays = Vec::new();
    let mut unsafe_writebacks = Vec::new();
    for (&var, accs) in &by_var {
        let class = match classes.class_of(var) {
            Some(c) => c,
            None => continue,
        };
        if !program.vars[var].is_array() {
            continue;
        }
        if matches!(class, VarClass::Private) {
            continue;
        }
        let decl = &program.vars[var];
        let writes: Vec<&&ArrayAccess> = accs.iter().filter(|a| a.write).collect();
        let reads: Vec<&&ArrayAccess> = accs.iter().filter(|a| !a.write).collect();

        let mut out_mode = None;
        if !writes.is_empty() {
            // Writes that land on the same cells in every iteration are
            // plain races, not distributable work.
            if let Some(w) = writes.iter().find(|a| !a.mentions_iterator()) {
                return Ok((
                    BlockDecision::Fallback {
                        block_id: block.block_id,
                        reason: FallbackReason::ConcurrentSharedWrite {
                            var: decl.name.clone(),
                            detail: format!(
                                "the write at {} does not depend on the iterator",
                                w.span
                            ),
                        },
                    },
                    warnings,
                ));
            }

            out_mode = Some(slice_out_mode(&writes));

            // Reading cells that other iterations write makes the result
            // depend on iteration order; distribution would change it.
            if let Some(OutMode::SliceRows { .. }) = out_mode {
                let w_form = writes[0].row_form();
                if let Some(r) =
                    reads.iter().find(|r| !r.row_form().same_shape(w_form, &program.vars))
                {
                    return Ok((
                        BlockDecision::Fallback {
                            block_id: block.block_id,
                            reason: FallbackReason::ConcurrentSharedWrite {
                                var: decl.name.clone(),
                                detail: format!(
                                    "the read at {} touches rows other iterations write",
                                    r.span
                                ),
                            },
                        },
                        warnings,
                    ));
                }
            }

            if matches!(out_mode, Some(OutMode::FullArrayLastWorker)) {
                if strict {
                    return Err(CompileError::Analysis {
                        span: writes[0].span.clone(),
                        message: format!(
                            "cannot return `{}` by rows: the iterator does not select \
                             whole rows with unit progress; the whole-array fallback is \
                             disabled in strict mode",
                            decl.name
                        ),
                    });
                }
                warnings.push(Warning {
                    span: writes[0].span.clone(),
                    message: format!(
                        "`{}` is returned whole and the last finished chunk wins; \
                         results differ from sequential execution unless every chunk \
                         writes the same data",
                        decl.name
                    ),
                });
                unsafe_writebacks.push(var);
            }
        }

        let in_mode = plan_in_mode(decl, accs, &out_mode, class, &loop_);
        arrays.push(ArrayPlan { var, in_mode, out_mode });
    }

    let scalars_in = classes.ids_in_class(|c| matches!(c, VarClass::In));
    let scalars_in: Vec<VarId> =
        scalars_in.into_iter().filter(|&v| !program.vars[v].is_array()).collect();

    let reductions: Vec<ReductionPlan> =
        block.reductions.iter().map(|&(var, op)| ReductionPlan { var, op }).collect();

    Ok((
        BlockDecision::Parallel(Box::new(BlockPlan {
            block_id: block.block_id,
            loop_,
            schedule,
            chunk,
            classes,
            scalars_in,
            arrays,
            reductions,
            unsafe_writebacks,
        })),
        warnings,
    ))
}

/// Decide the write-back mode from the write accesses.
fn slice_out_mode(writes: &[&&ArrayAccess]) -> OutMode {
    let mut form: Option<(i64, i64)> = None;
    for w in writes {
        match w.row_form() {
            SubscriptForm::Affine { scale, offset: _ } => {
                let off = match w.row_form().const_offset() {
                    Some(c) => c,
                    None => return OutMode::FullArrayLastWorker,
                };
                match form {
                    None => form = Some((*scale, off)),
                    Some(f) if f == (*scale, off) => {}
                    Some(_) => return OutMode::FullArrayLastWorker,
                }
            }
            _ => return OutMode::FullArrayLastWorker,
        }
    }
    // A chunk's writes stay inside its contiguous row span, and the spans of
    // distinct chunks never overlap (consecutive chunks are |scale * stride|
    // rows apart), so any uniform iterator-scaled row is safe to write back
    // by span. Scale zero would put every chunk on the same rows.
    match form {
        Some((scale, offset)) if scale != 0 => OutMode::SliceRows { scale, offset },
        _ => OutMode::FullArrayLastWorker,
    }
}

/// Decide what (if anything) the master sends for an array before a chunk.
fn plan_in_mode(
    decl: &VarDecl,
    accs: &[&ArrayAccess],
    out_mode: &Option<OutMode>,
    class: VarClass,
    loop_: &CanonicalLoop,
) -> Option<InMode> {
    // The whole-array write-back needs the worker to start from the
    // master's current copy, whatever the read pattern.
    if matches!(out_mode, Some(OutMode::FullArrayLastWorker)) {
        return Some(InMode::FullArray);
    }
    let reads_exist = accs.iter().any(|a| !a.write);
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    let mut scale: Option<i64> = None;
    let mut sliceable = true;
    for a in accs.iter() {
        match a.row_form() {
            SubscriptForm::Affine { scale: s, .. } => match a.row_form().const_offset() {
                Some(off) => {
                    if *scale.get_or_insert(*s) != *s {
                        sliceable = false;
                    }
                    lo = lo.min(off);
                    hi = hi.max(off);
                }
                None => sliceable = false,
            },
            _ => sliceable = false,
        }
    }

    match class {
        VarClass::In | VarClass::InOut => {
            if sliceable {
                Some(InMode::SliceRows { scale: scale.unwrap(), lo, hi })
            } else {
                Some(InMode::FullArray)
            }
        }
        VarClass::Out => {
            debug_assert!(!reads_exist, "out-class array with reads");
            // A chunk may rewrite its row span only partially: matrix rows
            // can have untouched columns, and a non-unit step skips rows
            // inside the span. Whatever the worker does not rewrite must
            // round-trip through it, so those spans are also sent in. A
            // one-dimensional unit-step span is rewritten completely and
            // needs nothing.
            let partial_rows = decl.dims.len() == 2;
            let gapped = matches!(
                out_mode,
                Some(OutMode::SliceRows { scale, .. }) if (scale * loop_.stride).abs() != 1
            );
            if partial_rows || gapped {
                match out_mode {
                    Some(OutMode::SliceRows { scale, offset }) => {
                        Some(InMode::SliceRows { scale: *scale, lo: *offset, hi: *offset })
                    }
                    _ => Some(InMode::FullArray),
                }
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Plan every block of the program.
pub fn plan_program(program: &Program, strict: bool) -> Result<ProgramPlan, CompileError> {
    plan_program_with(program, strict, Schedule::Dynamic)
}

/// Like [`plan_program`], with a configurable clause-less schedule default.
pub fn plan_program_with(
    program: &Program,
    strict: bool,
    default_schedule: Schedule,
) -> Result<ProgramPlan, CompileError> {
    let mut decisions = Vec::new();
    let mut warnings = Vec::new();
    for block in program.pragma_blocks() {
        let (d, w) = plan_block_with(program, block, strict, default_schedule)?;
        decisions.push(d);
        warnings.extend(w);
    }
    Ok(ProgramPlan { decisions, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn plan_first(src: &str) -> (Program, BlockDecision, Vec<Warning>) {
        let p = parse(src, "t.c").unwrap().program;
        let (d, w) = {
            let blocks = p.pragma_blocks();
            plan_block(&p, blocks[0], false).unwrap()
        };
        (p, d, w)
    }

    fn kernel(pragma: &str, header: &str, body: &str) -> String {
        format!(
            "int n;\nint s;\ndouble a[16][16];\ndouble b[16][16];\ndouble c[16][16];\ndouble v[16];\ndouble w[16];\nint main() {{ int i; int j;\n{pragma}\nfor ({header}) {{ {body} }} return 0; }}"
        )
    }

    #[test]
    fn chunk_size_formula() {
        assert_eq!(default_chunk_size(1000, 4), 25);
        assert_eq!(default_chunk_size(1001, 4), 26);
        assert_eq!(default_chunk_size(5, 8), 1);
        assert_eq!(default_chunk_size(0, 8), 1);
    }

    #[test]
    fn chunks_partition_the_iteration_space() {
        let cs = chunks(10, 3);
        assert_eq!(cs, vec![(0, 3), (3, 3), (6, 3), (9, 1)]);
        assert_eq!(chunks(0, 3), vec![]);
    }

    #[test]
    fn vector_scale_plan() {
        let (p, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 0; i < n; i++",
            "w[i] = 2.0 * v[i];",
        ));
        let plan = d.plan().expect("parallel");
        assert_eq!(plan.schedule, Schedule::Dynamic);
        let w = plan.arrays.iter().find(|a| a.var == p.var_id("w").unwrap()).unwrap();
        assert!(matches!(w.out_mode, Some(OutMode::SliceRows { scale: 1, offset: 0 })));
        assert!(w.in_mode.is_none(), "1-d out array needs no incoming data");
        let v = plan.arrays.iter().find(|a| a.var == p.var_id("v").unwrap()).unwrap();
        assert!(matches!(v.in_mode, Some(InMode::SliceRows { scale: 1, lo: 0, hi: 0 })));
        assert!(v.out_mode.is_none());
        assert!(plan.scalars_in.contains(&p.var_id("n").unwrap()));
    }

    #[test]
    fn matrix_out_rows_round_trip() {
        let (p, d, _) = plan_first(&kernel(
            "#pragma omp parallel for private(j)",
            "i = 0; i < n; i++",
            "for (j = 0; j < n; j++) { c[i][j] = 1.0; }",
        ));
        let plan = d.plan().expect("parallel");
        let c = plan.arrays.iter().find(|a| a.var == p.var_id("c").unwrap()).unwrap();
        assert!(matches!(c.out_mode, Some(OutMode::SliceRows { scale: 1, offset: 0 })));
        // Partial row writes are possible, so current rows are sent first.
        assert!(matches!(c.in_mode, Some(InMode::SliceRows { scale: 1, lo: 0, hi: 0 })));
    }

    #[test]
    fn stencil_reads_widen_the_incoming_slice() {
        let (p, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 1; i < 15; i++",
            "w[i] = v[i - 1] + v[i] + v[i + 1];",
        ));
        let plan = d.plan().expect("parallel");
        let v = plan.arrays.iter().find(|a| a.var == p.var_id("v").unwrap()).unwrap();
        assert!(matches!(v.in_mode, Some(InMode::SliceRows { scale: 1, lo: -1, hi: 1 })));
    }

    #[test]
    fn same_array_stencil_falls_back() {
        let (_, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 1; i < 15; i++",
            "v[i] = v[i - 1] + v[i + 1];",
        ));
        match d {
            BlockDecision::Fallback {
                reason: FallbackReason::ConcurrentSharedWrite { var, .. },
                ..
            } => assert_eq!(var, "v"),
            other => panic!("expected fallback, got {other:?}"),
        }
    }

    #[test]
    fn shared_scalar_write_falls_back() {
        let (_, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 0; i < n; i++",
            "s = s + i;",
        ));
        match d {
            BlockDecision::Fallback {
                reason: FallbackReason::ConcurrentSharedWrite { var, .. },
                ..
            } => assert_eq!(var, "s"),
            other => panic!("expected fallback, got {other:?}"),
        }
    }

    #[test]
    fn reduction_clause_keeps_the_block_parallel() {
        let (p, d, _) = plan_first(&kernel(
            "#pragma omp parallel for reduction(+: s)",
            "i = 0; i < n; i++",
            "s = s + i;",
        ));
        let plan = d.plan().expect("parallel");
        assert_eq!(plan.reductions.len(), 1);
        assert_eq!(plan.reductions[0].var, p.var_id("s").unwrap());
        assert_eq!(plan.reductions[0].op, ReductionOp::Add);
    }

    #[test]
    fn non_canonical_loop_falls_back() {
        let (_, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 0; i < n; i--",
            "w[0] = 1.0;",
        ));
        assert!(matches!(
            d,
            BlockDecision::Fallback { reason: FallbackReason::NonCanonicalLoop { .. }, .. }
        ));
    }

    #[test]
    fn iterator_free_write_falls_back() {
        let (_, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 0; i < n; i++",
            "w[3] = 1.0;",
        ));
        assert!(matches!(
            d,
            BlockDecision::Fallback {
                reason: FallbackReason::ConcurrentSharedWrite { .. },
                ..
            }
        ));
    }

    #[test]
    fn column_write_uses_whole_array_with_warning() {
        let (p, d, w) = plan_first(&kernel(
            "#pragma omp parallel for private(j)",
            "i = 0; i < n; i++",
            "for (j = 0; j < n; j++) { b[j][i] = a[j][i]; }",
        ));
        let plan = d.plan().expect("parallel");
        let b = plan.arrays.iter().find(|a| a.var == p.var_id("b").unwrap()).unwrap();
        assert!(matches!(b.out_mode, Some(OutMode::FullArrayLastWorker)));
        assert!(matches!(b.in_mode, Some(InMode::FullArray)));
        assert!(plan.unsafe_writebacks.contains(&p.var_id("b").unwrap()));
        assert!(w.iter().any(|x| x.message.contains("last finished chunk")), "{w:?}");
    }

    #[test]
    fn strict_mode_rejects_whole_array_writeback() {
        let src = kernel(
            "#pragma omp parallel for private(j)",
            "i = 0; i < n; i++",
            "for (j = 0; j < n; j++) { b[j][i] = a[j][i]; }",
        );
        let p = parse(&src, "t.c").unwrap().program;
        let blocks = p.pragma_blocks();
        let err = plan_block(&p, blocks[0], true).unwrap_err();
        assert!(matches!(err, CompileError::Analysis { .. }), "{err}");
    }

    #[test]
    fn full_array_read_with_sliced_write() {
        // Reads index rows by both the iterator and an inner variable, so
        // the incoming copy is the whole array; writes stay sliced.
        let (p, d, _) = plan_first(&kernel(
            "#pragma omp parallel for private(j)",
            "i = 0; i < n; i++",
            "for (j = 0; j < n; j++) { c[i][j] = a[i][j] + a[j][i]; }",
        ));
        let plan = d.plan().expect("parallel");
        let a = plan.arrays.iter().find(|x| x.var == p.var_id("a").unwrap()).unwrap();
        assert!(matches!(a.in_mode, Some(InMode::FullArray)));
        assert!(a.out_mode.is_none());
        let c = plan.arrays.iter().find(|x| x.var == p.var_id("c").unwrap()).unwrap();
        assert!(matches!(c.out_mode, Some(OutMode::SliceRows { scale: 1, offset: 0 })));
    }

    #[test]
    fn strided_writes_slice_with_gap_rows_round_tripping() {
        // step 2 leaves every other element inside a chunk's span untouched;
        // the span is still safe to write back because the untouched cells
        // round-trip through the worker via the incoming copy
        let (p, d, w) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 0; i < n; i += 2",
            "w[i] = 1.0;",
        ));
        let plan = d.plan().expect("parallel");
        let wv = plan.arrays.iter().find(|a| a.var == p.var_id("w").unwrap()).unwrap();
        assert!(matches!(wv.out_mode, Some(OutMode::SliceRows { scale: 1, offset: 0 })));
        assert!(
            matches!(wv.in_mode, Some(InMode::SliceRows { scale: 1, lo: 0, hi: 0 })),
            "gapped write-only span must be sent in: {:?}",
            wv.in_mode
        );
        assert!(plan.unsafe_writebacks.is_empty());
        assert!(w.is_empty(), "{w:?}");

        // with unit step the span is fully rewritten and nothing is sent in
        let (p, d, _) = plan_first(&kernel(
            "#pragma omp parallel for",
            "i = 0; i < n; i++",
            "w[i] = 1.0;",
        ));
        let plan = d.plan().expect("parallel");
        let wv = plan.arrays.iter().find(|a| a.var == p.var_id("w").unwrap()).unwrap();
        assert!(wv.in_mode.is_none());
    }

    #[test]
    fn schedule_clauses_pick_distribution() {
        let (_, d, _) = plan_first(&kernel(
            "#pragma omp parallel for schedule(static)",
            "i = 0; i < n; i++",
            "w[i] = 1.0;",
        ));
        assert_eq!(d.plan().unwrap().schedule, Schedule::Static);
        let (_, d, _) = plan_first(&kernel(
            "#pragma omp parallel for schedule(dynamic, 4)",
            "i = 0; i < n; i++",
            "w[i] = 1.0;",
        ));
        let plan = d.plan().unwrap();
        assert_eq!(plan.schedule, Schedule::Dynamic);
        assert_eq!(plan.chunk, Some(4));
        let (_, d, w) = plan_first(&kernel(
            "#pragma omp parallel for schedule(guided)",
            "i = 0; i < n; i++",
            "w[i] = 1.0;",
        ));
        assert_eq!(d.plan().unwrap().schedule, Schedule::Static);
        assert!(w.iter().any(|x| x.message.contains("guided")));
    }

    #[test]
    fn row_span_covers_both_directions() {
        // it in {2,3,4}, rows it-1..it+1 → 1..=5
        assert_eq!(row_span(1, -1, 1, 2, 4), (1, 5));
        // descending iterator: it in {9..5}, scale -1 → rows -9..=-5 → plus 0 off
        assert_eq!(row_span(-1, 0, 0, 9, 5), (-9, -5));
        assert_eq!(row_span(2, 0, 0, 1, 3), (2, 6));
    }
}
