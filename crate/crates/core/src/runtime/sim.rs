//! Deterministic message-passing simulator for lowered programs.
//!
//! Every rank is a cooperatively scheduled process executing its lowered
//! body with the sequential interpreter. A process runs until it blocks on
//! an empty mailbox or exhausts its per-turn step budget; computation is
//! charged at interpreter-step granularity, so a worker stuck on a large
//! chunk genuinely occupies simulated time while others overlap.
//!
//! Determinism: mailboxes are FIFO per (source, tag) with a global send
//! sequence; a wildcard-source receive picks among ready sources through a
//! [`ChoicePolicy`] — seeded for reproducible randomness, scripted for
//! exhaustive exploration. A wildcard-tag receive always takes the oldest
//! matching message (send order between one pair of ranks is never
//! reordered, mirroring MPI's non-overtaking rule).

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ast::{Expr, VarId};
use crate::codegen::ir::{MessageTag, MpiProgram, MpiStmt, Payload, RecvTag, Source};
use crate::runtime::interp::{Env, Flow, Interp};
use crate::runtime::value::Value;
use crate::runtime::{Inputs, PrintEvent, RuntimeError};

/// Picks which ready source a wildcard receive takes.
pub trait ChoicePolicy {
    /// Called with the number of distinct ready sources (always >= 2);
    /// returns an index below it.
    fn choose(&mut self, n: usize) -> usize;
}

/// Reproducible pseudo-random arbitration.
pub struct SeededChoice(ChaCha8Rng);

impl SeededChoice {
    pub fn new(seed: u64) -> SeededChoice {
        SeededChoice(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl ChoicePolicy for SeededChoice {
    fn choose(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}

/// Replays a fixed decision prefix (then first-choice), recording every
/// decision point — the engine for exhaustive order exploration.
#[derive(Default)]
pub struct ScriptedChoice {
    script: Vec<usize>,
    pos: usize,
    /// Every decision made: (index chosen, candidates available).
    pub taken: Vec<(usize, usize)>,
}

impl ScriptedChoice {
    pub fn new(script: Vec<usize>) -> ScriptedChoice {
        ScriptedChoice { script, pos: 0, taken: Vec::new() }
    }
}

impl ChoicePolicy for ScriptedChoice {
    fn choose(&mut self, n: usize) -> usize {
        let want = self.script.get(self.pos).copied().unwrap_or(0);
        let c = want.min(n - 1);
        self.taken.push((c, n));
        self.pos += 1;
        c
    }
}

/// Raw contents of one message.
#[derive(Debug, Clone, PartialEq)]
pub enum MsgData {
    Ints(Vec<i64>),
    Floats(Vec<f64>),
}

impl MsgData {
    fn len(&self) -> usize {
        match self {
            MsgData::Ints(v) => v.len(),
            MsgData::Floats(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone)]
struct Message {
    seq: u64,
    from: usize,
    tag: i64,
    data: MsgData,
}

/// One scheduler-visible event; serialized as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum TraceEvent {
    Send { seq: u64, from: usize, to: usize, tag: i64, what: String, count: usize },
    Recv { seq: u64, by: usize, from: usize, tag: i64, what: String },
}

/// Render a trace as JSON lines.
pub fn trace_jsonl(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for ev in trace {
        out.push_str(&serde_json::to_string(ev).expect("trace event serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("rank {rank}: {err}")]
    Runtime { rank: usize, err: RuntimeError },
    #[error("deadlock: no process can make progress; blocked: {blocked:?}")]
    Deadlock { blocked: Vec<String> },
    #[error("{count} message(s) were never received (first: {first})")]
    UnreceivedMessages { count: usize, first: String },
    #[error("rank {rank}: message payload mismatch: {detail}")]
    ProtocolMismatch { rank: usize, detail: String },
    #[error("simulation exceeded {0} scheduler rounds")]
    RoundLimit(u64),
    #[error("send to rank {to} out of range (size {size})")]
    BadRank { to: i64, size: usize },
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub nprocs: usize,
    /// Interpreter steps granted per scheduler turn.
    pub turn_budget: u64,
    pub collect_trace: bool,
    /// Safety valve on scheduler rounds.
    pub max_rounds: u64,
}

impl SimOptions {
    pub fn new(nprocs: usize) -> SimOptions {
        SimOptions { nprocs, turn_budget: 500, collect_trace: true, max_rounds: 20_000_000 }
    }
}

/// Final state of one simulation.
pub struct SimResult {
    /// Rank 0's variable state (the authoritative program state).
    pub master_env: Env,
    /// Rank 0's output, in order.
    pub printed: Vec<PrintEvent>,
    /// Output printed by nonzero ranks (normally empty; a program that
    /// prints inside a distributed loop loses its output ordering).
    pub worker_printed: Vec<Vec<PrintEvent>>,
    /// Interpreter steps burned per rank — the work-balance measure.
    pub steps: Vec<u64>,
    pub trace: Vec<TraceEvent>,
    pub messages_sent: u64,
    pub error: Option<SimError>,
}

impl SimResult {
    /// Total chunks executed per rank, read off the completion echoes.
    pub fn chunks_by_rank(&self) -> Vec<u64> {
        let mut by = vec![0u64; self.steps.len()];
        for ev in &self.trace {
            if let TraceEvent::Send { from, to: 0, tag, .. } = ev {
                if *from != 0 && MessageTag::decode(*tag).is_some_and(|t| matches!(t, MessageTag::Work { .. })) {
                    by[*from] += 1;
                }
            }
        }
        by
    }
}

enum Frame<'a> {
    Body { stmts: &'a [MpiStmt], idx: usize },
    Loop { cond: &'a Expr, body: &'a [MpiStmt], idx: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProcState {
    Running,
    Done,
}

struct Proc<'a> {
    rank: usize,
    interp: Interp<'a>,
    frames: Vec<Frame<'a>>,
    state: ProcState,
    /// Interpreter steps owed from oversized turns.
    debt: u64,
}

impl<'a> Proc<'a> {
    /// The statement the process is currently stopped at, if any.
    fn current(&self) -> Option<&'a MpiStmt> {
        for f in self.frames.iter().rev() {
            match f {
                Frame::Body { stmts, idx } if *idx < stmts.len() => return Some(&stmts[*idx]),
                Frame::Loop { body, idx, .. } if *idx < body.len() => return Some(&body[*idx]),
                _ => return None, // positioned at a frame boundary
            }
        }
        None
    }

    fn describe_position(&self, program: &crate::ast::Program) -> String {
        match self.current() {
            Some(MpiStmt::Recv { from, tag, .. }) => {
                let src = match from {
                    Source::Rank(e) => format!("rank {}", crate::printer::print_expr(e, &program.vars)),
                    Source::Any => "any rank".to_string(),
                };
                let tg = match tag {
                    RecvTag::Exact(t) => MessageTag::decode(*t)
                        .map(|m| m.describe(program))
                        .unwrap_or_else(|| t.to_string()),
                    RecvTag::Any => "any tag".to_string(),
                };
                format!("rank {} waiting on {} ({})", self.rank, src, tg)
            }
            _ => format!("rank {} (not at a receive)", self.rank),
        }
    }
}

struct Mailboxes {
    /// queues[dst][(src, tag)] — FIFO per channel, seq-stamped globally.
    queues: Vec<BTreeMap<(usize, i64), VecDeque<Message>>>,
    next_seq: u64,
}

impl Mailboxes {
    fn push(&mut self, to: usize, msg: Message) {
        self.queues[to].entry((msg.from, msg.tag)).or_default().push_back(msg);
    }

    /// Distinct ready sources for a receive filter, ascending.
    fn ready_sources(&self, dst: usize, src: Option<usize>, tag: Option<i64>) -> Vec<usize> {
        let mut out = Vec::new();
        for ((s, t), q) in &self.queues[dst] {
            if q.is_empty() {
                continue;
            }
            if src.is_some_and(|want| want != *s) || tag.is_some_and(|want| want != *t) {
                continue;
            }
            if out.last() != Some(s) {
                out.push(*s);
            }
        }
        out
    }

    /// Pop the oldest message from `src` matching the tag filter.
    fn pop(&mut self, dst: usize, src: usize, tag: Option<i64>) -> Option<Message> {
        match tag {
            Some(t) => self.queues[dst].get_mut(&(src, t))?.pop_front(),
            None => {
                // wildcard tag: oldest message from this source
                let key = self.queues[dst]
                    .iter()
                    .filter(|((s, _), q)| *s == src && !q.is_empty())
                    .min_by_key(|(_, q)| q.front().map(|m| m.seq).unwrap_or(u64::MAX))
                    .map(|(k, _)| *k)?;
                self.queues[dst].get_mut(&key)?.pop_front()
            }
        }
    }

    fn undelivered(&self) -> Vec<&Message> {
        let mut out = Vec::new();
        for per_dst in &self.queues {
            for q in per_dst.values() {
                out.extend(q.iter());
            }
        }
        out.sort_by_key(|m| m.seq);
        out
    }
}

/// Run a lowered program on `nprocs` simulated ranks.
pub fn simulate(
    mp: &MpiProgram,
    inputs: &Inputs,
    opts: &SimOptions,
    policy: &mut dyn ChoicePolicy,
) -> Result<SimResult, RuntimeError> {
    assert!(opts.nprocs >= 2, "master/worker execution needs at least 2 ranks");
    let program = &mp.program;

    let mut procs = Vec::with_capacity(opts.nprocs);
    for rank in 0..opts.nprocs {
        let mut env = Env::new(program, inputs)?;
        env.slots[mp.rt.rank] = Value::Int(rank as i64);
        env.slots[mp.rt.size] = Value::Int(opts.nprocs as i64);
        let body: &[MpiStmt] = if rank == 0 { &mp.master } else { &mp.worker };
        procs.push(Proc {
            rank,
            interp: Interp::new(program, env),
            frames: vec![Frame::Body { stmts: body, idx: 0 }],
            state: ProcState::Running,
            debt: 0,
        });
    }

    let mut mail = Mailboxes { queues: vec![BTreeMap::new(); opts.nprocs], next_seq: 0 };
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut messages_sent = 0u64;
    let mut error: Option<SimError> = None;

    let mut rounds = 0u64;
    'sched: loop {
        rounds += 1;
        if rounds > opts.max_rounds {
            error = Some(SimError::RoundLimit(opts.max_rounds));
            break;
        }
        let mut any_progress = false;
        let mut all_done = true;
        for r in 0..opts.nprocs {
            let outcome = turn(
                r,
                &mut procs,
                &mut mail,
                &mut trace,
                &mut messages_sent,
                policy,
                mp,
                opts,
            );
            match outcome {
                Ok(progressed) => any_progress |= progressed,
                Err(e) => {
                    error = Some(e);
                    break 'sched;
                }
            }
            if procs[r].state != ProcState::Done {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
        if !any_progress {
            let blocked = procs
                .iter()
                .filter(|p| p.state == ProcState::Running)
                .map(|p| p.describe_position(program))
                .collect();
            error = Some(SimError::Deadlock { blocked });
            break;
        }
    }

    if error.is_none() {
        let undelivered = mail.undelivered();
        if !undelivered.is_empty() {
            let first = &undelivered[0];
            error = Some(SimError::UnreceivedMessages {
                count: undelivered.len(),
                first: format!(
                    "seq {} from rank {} tag {}",
                    first.seq,
                    first.from,
                    MessageTag::decode(first.tag)
                        .map(|t| t.describe(program))
                        .unwrap_or_else(|| first.tag.to_string())
                ),
            });
        }
    }

    let steps = procs.iter().map(|p| p.interp.steps).collect();
    let mut worker_printed = Vec::new();
    let mut master_env = None;
    let mut printed = Vec::new();
    for p in procs.into_iter() {
        if p.rank == 0 {
            master_env = Some(p.interp.env);
            printed = p.interp.printed;
        } else {
            worker_printed.push(p.interp.printed);
        }
    }

    Ok(SimResult {
        master_env: master_env.expect("rank 0 exists"),
        printed,
        worker_printed,
        steps,
        trace,
        messages_sent,
        error,
    })
}

/// Give one process one scheduler turn. Returns whether it made progress.
#[allow(clippy::too_many_arguments)]
fn turn<'a>(
    r: usize,
    procs: &mut [Proc<'a>],
    mail: &mut Mailboxes,
    trace: &mut Vec<TraceEvent>,
    messages_sent: &mut u64,
    policy: &mut dyn ChoicePolicy,
    mp: &'a MpiProgram,
    opts: &SimOptions,
) -> Result<bool, SimError> {
    let proc = &mut procs[r];
    if proc.state == ProcState::Done {
        return Ok(false);
    }
    let mut budget = opts.turn_budget;
    if proc.debt >= budget {
        proc.debt -= budget;
        return Ok(true); // still paying for earlier computation
    }
    budget -= proc.debt;
    proc.debt = 0;

    let mut progressed = false;
    while budget > 0 {
        // Find the next statement, unwinding finished frames.
        let stmt = loop {
            match proc.frames.last_mut() {
                None => {
                    proc.state = ProcState::Done;
                    return Ok(true);
                }
                Some(Frame::Body { stmts, idx }) => {
                    if *idx < stmts.len() {
                        break &stmts[*idx];
                    }
                    proc.frames.pop();
                }
                Some(Frame::Loop { cond, body, idx }) => {
                    if *idx < body.len() {
                        break &body[*idx];
                    }
                    // end of iteration: re-test the condition
                    let c = proc
                        .interp
                        .eval(cond)
                        .map_err(|err| SimError::Runtime { rank: r, err })?;
                    budget = budget.saturating_sub(1);
                    progressed = true;
                    if c.truthy() {
                        *idx = 0;
                        if budget == 0 {
                            return Ok(true);
                        }
                    } else {
                        proc.frames.pop();
                    }
                }
            }
        };

        match stmt {
            MpiStmt::Plain(s) => {
                let before = proc.interp.steps;
                let flow = proc
                    .interp
                    .exec_stmt(s)
                    .map_err(|err| SimError::Runtime { rank: r, err })?;
                let cost = proc.interp.steps - before;
                advance(proc);
                if flow == Flow::Return {
                    proc.frames.clear();
                    proc.state = ProcState::Done;
                    return Ok(true);
                }
                if cost >= budget {
                    proc.debt = cost - budget;
                    budget = 0;
                } else {
                    budget -= cost.max(1);
                }
                progressed = true;
            }
            MpiStmt::Comment(_) => {
                advance(proc);
            }
            MpiStmt::If { cond, then_body, else_body } => {
                let c = proc
                    .interp
                    .eval(cond)
                    .map_err(|err| SimError::Runtime { rank: r, err })?;
                advance(proc);
                let body = if c.truthy() { then_body } else { else_body };
                proc.frames.push(Frame::Body { stmts: body, idx: 0 });
                budget = budget.saturating_sub(1);
                progressed = true;
            }
            MpiStmt::While { cond, body } => {
                let c = proc
                    .interp
                    .eval(cond)
                    .map_err(|err| SimError::Runtime { rank: r, err })?;
                advance(proc);
                if c.truthy() {
                    proc.frames.push(Frame::Loop { cond, body, idx: 0 });
                }
                budget = budget.saturating_sub(1);
                progressed = true;
            }
            MpiStmt::Break => {
                while let Some(f) = proc.frames.pop() {
                    if matches!(f, Frame::Loop { .. }) {
                        break;
                    }
                }
                // The loop's frame carried the resume point; the frame
                // below it is already positioned after the While.
                budget = budget.saturating_sub(1);
                progressed = true;
            }
            MpiStmt::Send { to, tag, payload } => {
                let to_val = proc
                    .interp
                    .eval(to)
                    .map_err(|err| SimError::Runtime { rank: r, err })?
                    .as_int();
                if to_val < 0 || to_val as usize >= opts.nprocs {
                    return Err(SimError::BadRank { to: to_val, size: opts.nprocs });
                }
                let data = extract_payload(proc, payload).map_err(|e| lift(r, e))?;
                let seq = mail.next_seq;
                mail.next_seq += 1;
                *messages_sent += 1;
                if opts.collect_trace {
                    trace.push(TraceEvent::Send {
                        seq,
                        from: r,
                        to: to_val as usize,
                        tag: *tag,
                        what: MessageTag::decode(*tag)
                            .map(|t| t.describe(&mp.program))
                            .unwrap_or_else(|| tag.to_string()),
                        count: data.len(),
                    });
                }
                mail.push(to_val as usize, Message { seq, from: r, tag: *tag, data });
                advance(proc);
                budget = budget.saturating_sub(1);
                progressed = true;
            }
            MpiStmt::Recv { from, tag, payload, save_source, save_tag } => {
                let want_src = match from {
                    Source::Any => None,
                    Source::Rank(e) => Some(
                        proc.interp
                            .eval(e)
                            .map_err(|err| SimError::Runtime { rank: r, err })?
                            .as_int() as usize,
                    ),
                };
                let want_tag = match tag {
                    RecvTag::Any => None,
                    RecvTag::Exact(t) => Some(*t),
                };
                let ready = mail.ready_sources(r, want_src, want_tag);
                if ready.is_empty() {
                    // blocked: re-attempt on a later turn without advancing
                    return Ok(progressed);
                }
                let src = if ready.len() == 1 { ready[0] } else { ready[policy.choose(ready.len())] };
                let msg = mail.pop(r, src, want_tag).expect("ready source has a message");
                if opts.collect_trace {
                    trace.push(TraceEvent::Recv {
                        seq: msg.seq,
                        by: r,
                        from: msg.from,
                        tag: msg.tag,
                        what: MessageTag::decode(msg.tag)
                            .map(|t| t.describe(&mp.program))
                            .unwrap_or_else(|| msg.tag.to_string()),
                    });
                }
                place_payload(proc, payload, &msg).map_err(|e| lift(r, e))?;
                if let Some(v) = save_source {
                    proc.interp.env.slots[*v] = Value::Int(msg.from as i64);
                }
                if let Some(v) = save_tag {
                    proc.interp.env.slots[*v] = Value::Int(msg.tag);
                }
                advance(proc);
                budget = budget.saturating_sub(1);
                progressed = true;
            }
        }
    }
    Ok(progressed)
}

/// Move the instruction pointer past the statement just executed.
fn advance(proc: &mut Proc<'_>) {
    match proc.frames.last_mut() {
        Some(Frame::Body { idx, .. }) | Some(Frame::Loop { idx, .. }) => *idx += 1,
        None => {}
    }
}

enum PayloadErr {
    Runtime(RuntimeError),
    Mismatch(String),
}

fn lift(rank: usize, e: PayloadErr) -> SimError {
    match e {
        PayloadErr::Runtime(err) => SimError::Runtime { rank, err },
        PayloadErr::Mismatch(detail) => SimError::ProtocolMismatch { rank, detail },
    }
}

/// Evaluate a row window: (first row, row count, elements per row).
fn row_window(
    proc: &mut Proc<'_>,
    var: VarId,
    row_start: &Expr,
    row_count: &Expr,
) -> Result<(usize, usize, usize), PayloadErr> {
    let r0 = proc.interp.eval(row_start).map_err(PayloadErr::Runtime)?.as_int();
    let rn = proc.interp.eval(row_count).map_err(PayloadErr::Runtime)?.as_int();
    let (rows, cols) = match &proc.interp.env.slots[var] {
        Value::IntArray(a) => (a.rows, a.cols),
        Value::FloatArray(a) => (a.rows, a.cols),
        _ => return Err(PayloadErr::Mismatch("row transfer of a scalar variable".into())),
    };
    if r0 < 0 || rn < 0 || (r0 as usize) + (rn as usize) > rows {
        return Err(PayloadErr::Mismatch(format!(
            "row window [{r0}, {r0}+{rn}) outside array of {rows} rows"
        )));
    }
    Ok((r0 as usize, rn as usize, cols))
}

fn extract_payload(proc: &mut Proc<'_>, payload: &Payload) -> Result<MsgData, PayloadErr> {
    match payload {
        Payload::Header(v) => match &proc.interp.env.slots[*v] {
            Value::IntArray(a) if a.data.len() == 2 => Ok(MsgData::Ints(a.data.clone())),
            _ => Err(PayloadErr::Mismatch("header variable is not a 2-slot int array".into())),
        },
        Payload::Scalar(v) => match &proc.interp.env.slots[*v] {
            Value::Int(x) => Ok(MsgData::Ints(vec![*x])),
            Value::Float(x) => Ok(MsgData::Floats(vec![*x])),
            _ => Err(PayloadErr::Mismatch("scalar transfer of an array variable".into())),
        },
        Payload::Whole(v) => match &proc.interp.env.slots[*v] {
            Value::IntArray(a) => Ok(MsgData::Ints(a.data.clone())),
            Value::FloatArray(a) => Ok(MsgData::Floats(a.data.clone())),
            _ => Err(PayloadErr::Mismatch("whole-array transfer of a scalar".into())),
        },
        Payload::Rows { var, row_start, row_count } => {
            let (r0, rn, cols) = row_window(proc, *var, row_start, row_count)?;
            match &proc.interp.env.slots[*var] {
                Value::IntArray(a) => Ok(MsgData::Ints(a.data[r0 * cols..(r0 + rn) * cols].to_vec())),
                Value::FloatArray(a) => {
                    Ok(MsgData::Floats(a.data[r0 * cols..(r0 + rn) * cols].to_vec()))
                }
                _ => unreachable!("row_window checked the variable is an array"),
            }
        }
    }
}

fn place_payload(proc: &mut Proc<'_>, payload: &Payload, msg: &Message) -> Result<(), PayloadErr> {
    let expect = |have: usize, got: usize| {
        if have != got {
            Err(PayloadErr::Mismatch(format!("expected {have} element(s), message has {got}")))
        } else {
            Ok(())
        }
    };
    match payload {
        Payload::Header(v) => {
            let vals = match &msg.data {
                MsgData::Ints(v) => v,
                MsgData::Floats(_) => {
                    return Err(PayloadErr::Mismatch("header carries float data".into()))
                }
            };
            expect(2, vals.len())?;
            match &mut proc.interp.env.slots[*v] {
                Value::IntArray(a) if a.data.len() == 2 => {
                    a.data.copy_from_slice(vals);
                    Ok(())
                }
                _ => Err(PayloadErr::Mismatch("header variable is not a 2-slot int array".into())),
            }
        }
        Payload::Scalar(v) => {
            expect(1, msg.data.len())?;
            let slot = &mut proc.interp.env.slots[*v];
            match (&msg.data, &slot) {
                (MsgData::Ints(d), Value::Int(_)) => {
                    *slot = Value::Int(d[0]);
                    Ok(())
                }
                (MsgData::Floats(d), Value::Float(_)) => {
                    *slot = Value::Float(d[0]);
                    Ok(())
                }
                _ => Err(PayloadErr::Mismatch("scalar payload type mismatch".into())),
            }
        }
        Payload::Whole(v) => {
            let slot = &mut proc.interp.env.slots[*v];
            match (&msg.data, slot) {
                (MsgData::Ints(d), Value::IntArray(a)) => {
                    expect(a.data.len(), d.len())?;
                    a.data.copy_from_slice(d);
                    Ok(())
                }
                (MsgData::Floats(d), Value::FloatArray(a)) => {
                    expect(a.data.len(), d.len())?;
                    a.data.copy_from_slice(d);
                    Ok(())
                }
                _ => Err(PayloadErr::Mismatch("whole-array payload type mismatch".into())),
            }
        }
        Payload::Rows { var, row_start, row_count } => {
            let (r0, rn, cols) = row_window(proc, *var, row_start, row_count)?;
            let slot = &mut proc.interp.env.slots[*var];
            match (&msg.data, slot) {
                (MsgData::Ints(d), Value::IntArray(a)) => {
                    expect(rn * cols, d.len())?;
                    a.data[r0 * cols..(r0 + rn) * cols].copy_from_slice(d);
                    Ok(())
                }
                (MsgData::Floats(d), Value::FloatArray(a)) => {
                    expect(rn * cols, d.len())?;
                    a.data[r0 * cols..(r0 + rn) * cols].copy_from_slice(d);
                    Ok(())
                }
                _ => Err(PayloadErr::Mismatch("row payload type mismatch".into())),
            }
        }
    }
}

/// Exhaustively explore every wildcard-receive arbitration of a program,
/// depth-first, up to `max_runs` runs. Returns one result per distinct
/// schedule.
pub fn explore_all_orders(
    mp: &MpiProgram,
    inputs: &Inputs,
    nprocs: usize,
    max_runs: usize,
) -> Result<Vec<SimResult>, String> {
    let mut results = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(script) = stack.pop() {
        if results.len() >= max_runs {
            return Err(format!("more than {max_runs} distinct schedules"));
        }
        let mut policy = ScriptedChoice::new(script.clone());
        let mut opts = SimOptions::new(nprocs);
        opts.collect_trace = true;
        let res = simulate(mp, inputs, &opts, &mut policy).map_err(|e| e.to_string())?;
        // Branch on every undetermined decision point past the forced prefix.
        for p in script.len()..policy.taken.len() {
            let (chosen, n) = policy.taken[p];
            for alt in (chosen + 1)..n {
                let mut s2: Vec<usize> =
                    policy.taken[..p].iter().map(|(c, _)| *c).collect();
                s2.push(alt);
                stack.push(s2);
            }
        }
        results.push(res);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::build::{build_mpi, BuildOptions};
    use crate::parser::parse;
    use crate::runtime::interp::interpret_sequential;

    fn lower(src: &str) -> MpiProgram {
        let p = parse(src, "t.c").unwrap().program;
        build_mpi(&p, &BuildOptions::default()).unwrap()
    }

    const SUM_SRC: &str = r#"
        int n = 40;
        int x[40];
        long total = 0;
        int main() {
            int i;
            for (i = 0; i < n; i++) { x[i] = i * 3 - 7; }
            total = 5;
            #pragma omp parallel for reduction(+:total)
            for (i = 0; i < n; i++) {
                total += x[i] * x[i] - i;
            }
            printf("%ld\n", total);
            return 0;
        }
    "#;

    fn check_against_sequential(src: &str, nprocs: usize, seed: u64) {
        let mp = lower(src);
        let seq = interpret_sequential(&mp.program, &Inputs::new()).unwrap();
        let mut policy = SeededChoice::new(seed);
        let res = simulate(&mp, &Inputs::new(), &SimOptions::new(nprocs), &mut policy).unwrap();
        assert_eq!(res.error, None, "simulation error: {:?}", res.error);
        for (id, decl) in mp.program.vars.iter().enumerate() {
            if decl.synthetic || decl.scope != crate::ast::VarScope::Global {
                continue;
            }
            assert_eq!(
                seq.env.slots[id], res.master_env.slots[id],
                "global `{}` differs from the sequential run",
                decl.name
            );
        }
        assert_eq!(seq.printed.len(), res.printed.len());
        for (a, b) in seq.printed.iter().zip(res.printed.iter()) {
            assert_eq!(a.render(), b.render());
        }
    }

    #[test]
    fn reduction_matches_sequential_across_ranks_and_seeds() {
        for nprocs in [2, 3, 5] {
            for seed in [0, 1, 9] {
                check_against_sequential(SUM_SRC, nprocs, seed);
            }
        }
    }

    #[test]
    fn row_slice_output_matches_sequential() {
        let src = r#"
            int n = 24;
            double a[24][16];
            double b[24][16];
            int main() {
                int i;
                int j;
                for (i = 0; i < 24; i++) {
                    for (j = 0; j < 16; j++) { a[i][j] = i * 0.5 + j; }
                }
                #pragma omp parallel for private(j)
                for (i = 0; i < n; i++) {
                    for (j = 0; j < 16; j++) {
                        b[i][j] = a[i][j] * 2.0 + 1.0;
                    }
                }
                printf("%f %f\n", b[0][0], b[23][15]);
                return 0;
            }
        "#;
        for nprocs in [2, 4] {
            check_against_sequential(src, nprocs, 7);
        }
    }

    #[test]
    fn stencil_with_halo_rows_matches_sequential() {
        let src = r#"
            int n = 30;
            double v[30];
            double out[30];
            int main() {
                int i;
                for (i = 0; i < n; i++) { v[i] = i * i * 0.25; }
                #pragma omp parallel for schedule(static)
                for (i = 1; i < n - 1; i++) {
                    out[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
                }
                printf("%f %f %f\n", out[1], out[15], out[28]);
                return 0;
            }
        "#;
        for nprocs in [2, 3, 8] {
            check_against_sequential(src, nprocs, 3);
        }
    }

    #[test]
    fn same_seed_reproduces_the_same_trace() {
        let mp = lower(SUM_SRC);
        let run = |seed| {
            let mut policy = SeededChoice::new(seed);
            simulate(&mp, &Inputs::new(), &SimOptions::new(4), &mut policy).unwrap()
        };
        let (a, b) = (run(11), run(11));
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.messages_sent, b.messages_sent);
        let c = run(12);
        for (id, decl) in mp.program.vars.iter().enumerate() {
            // bookkeeping temps (e.g. the last reporting rank) may differ
            if decl.synthetic {
                continue;
            }
            assert_eq!(
                a.master_env.slots[id], c.master_env.slots[id],
                "program state for `{}` is schedule-independent",
                decl.name
            );
        }
    }

    #[test]
    fn every_arbitration_order_reaches_the_same_state() {
        let src = r#"
            int n = 12;
            int x[12];
            int total = 0;
            int main() {
                int i;
                for (i = 0; i < n; i++) { x[i] = i + 1; }
                #pragma omp parallel for reduction(+:total) schedule(dynamic, 3)
                for (i = 0; i < n; i++) { total += x[i]; }
                printf("%d\n", total);
                return 0;
            }
        "#;
        let mp = lower(src);
        let results = explore_all_orders(&mp, &Inputs::new(), 3, 5000).unwrap();
        assert!(results.len() > 1, "expected several distinct schedules");
        let seq = interpret_sequential(&mp.program, &Inputs::new()).unwrap();
        let want = seq.env.by_name(&mp.program, "total").unwrap().clone();
        for r in &results {
            assert_eq!(r.error, None);
            assert_eq!(r.master_env.by_name(&mp.program, "total"), Some(&want));
        }
    }

    #[test]
    fn unreceived_messages_are_reported() {
        // A worker that exits immediately leaves the master's sends queued.
        let mut mp = lower(SUM_SRC);
        mp.worker = vec![];
        let mut policy = SeededChoice::new(0);
        let res = simulate(&mp, &Inputs::new(), &SimOptions::new(2), &mut policy).unwrap();
        match res.error {
            Some(SimError::Deadlock { .. }) | Some(SimError::UnreceivedMessages { .. }) => {}
            other => panic!("expected a hygiene failure, got {other:?}"),
        }
    }

    #[test]
    fn deadlock_is_detected_not_hung() {
        // Master waits for an echo no worker will ever send.
        let src = SUM_SRC;
        let mut mp = lower(src);
        // Strip every worker send: the master blocks in its service loop.
        fn strip_sends(body: &mut Vec<MpiStmt>) {
            crate::codegen::ir::visit_bodies_mut(body, &mut |stmts| {
                stmts.retain(|s| !matches!(s, MpiStmt::Send { .. }));
            });
        }
        strip_sends(&mut mp.worker);
        let mut policy = SeededChoice::new(0);
        let res = simulate(&mp, &Inputs::new(), &SimOptions::new(3), &mut policy).unwrap();
        assert!(
            matches!(res.error, Some(SimError::Deadlock { .. })),
            "expected deadlock, got {:?}",
            res.error
        );
    }
}
