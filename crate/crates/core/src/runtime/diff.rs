//! Differential verification: the lowered program, executed on the
//! simulator, must leave the same observable state as the sequential
//! interpreter on the same inputs.
//!
//! Observable state is every non-synthetic global variable plus everything
//! printed. Variables a parallel block treats as private (other than the
//! loop iterator, whose post-loop value the master restores) are undefined
//! after the block in the source model and are excluded. Integers must
//! match exactly; floating-point values compare within a relative
//! tolerance, since distributing a reduction reassociates it.

use std::collections::BTreeSet;

use crate::analysis::classify::VarClass;
use crate::ast::VarScope;
use crate::codegen::ir::MpiProgram;
use crate::runtime::interp::interpret_sequential;
use crate::runtime::sim::{simulate, ChoicePolicy, SeededChoice, SimOptions, SimResult};
use crate::runtime::value::Value;
use crate::runtime::{Inputs, RuntimeError};

/// Outcome of one sequential-vs-distributed comparison.
#[derive(Debug, Clone)]
pub struct DiffReport {
    pub ok: bool,
    /// Human-readable description of each difference found.
    pub mismatches: Vec<String>,
    /// Simulation failure (deadlock, protocol error, ...), if any.
    pub sim_error: Option<String>,
    /// Interpreter steps of the sequential reference run.
    pub seq_steps: u64,
    /// Interpreter steps per simulated rank.
    pub rank_steps: Vec<u64>,
    /// Loop chunks completed per simulated rank.
    pub chunks_by_rank: Vec<u64>,
    pub messages: u64,
}

/// Relative tolerance appropriate for a program: tight by default, loosened
/// when a floating-point reduction reorders arithmetic.
pub fn suggested_tolerance(mp: &MpiProgram) -> f64 {
    let float_reduction = mp.plan.decisions.iter().filter_map(|d| d.plan()).any(|p| {
        p.reductions.iter().any(|r| mp.program.vars[r.var].kind.is_float())
    });
    if float_reduction {
        1e-6
    } else {
        1e-9
    }
}

/// Compare one seeded simulation against the sequential interpreter.
pub fn differential_check(
    mp: &MpiProgram,
    inputs: &Inputs,
    nprocs: usize,
    seed: u64,
    tolerance: f64,
) -> Result<DiffReport, RuntimeError> {
    let mut policy = SeededChoice::new(seed);
    differential_check_with(mp, inputs, &SimOptions::new(nprocs), &mut policy, tolerance)
}

/// [`differential_check`] with full control over simulation options and
/// arbitration policy.
pub fn differential_check_with(
    mp: &MpiProgram,
    inputs: &Inputs,
    opts: &SimOptions,
    policy: &mut dyn ChoicePolicy,
    tolerance: f64,
) -> Result<DiffReport, RuntimeError> {
    let seq = interpret_sequential(&mp.program, inputs)?;
    let sim = simulate(mp, inputs, opts, policy)?;
    Ok(compare(mp, &seq.env.slots, &seq.printed, seq.steps, &sim, tolerance))
}

fn compare(
    mp: &MpiProgram,
    seq_slots: &[Value],
    seq_printed: &[crate::runtime::PrintEvent],
    seq_steps: u64,
    sim: &SimResult,
    tolerance: f64,
) -> DiffReport {
    let mut mismatches = Vec::new();
    let sim_error = sim.error.as_ref().map(|e| e.to_string());

    if sim_error.is_none() {
        // Variables a parallel block privatizes have no defined value after
        // it — except the iterator, which the master restores.
        let mut skip: BTreeSet<usize> = BTreeSet::new();
        for p in mp.plan.decisions.iter().filter_map(|d| d.plan()) {
            for cv in &p.classes.vars {
                if cv.class == VarClass::Private && cv.id != p.loop_.iterator {
                    skip.insert(cv.id);
                }
            }
        }

        for (id, decl) in mp.program.vars.iter().enumerate() {
            if decl.synthetic || decl.scope != VarScope::Global || skip.contains(&id) {
                continue;
            }
            if let Some(m) =
                value_diff(&decl.name, &seq_slots[id], &sim.master_env.slots[id], tolerance)
            {
                mismatches.push(m);
            }
        }

        if seq_printed.len() != sim.printed.len() {
            mismatches.push(format!(
                "printed {} line(s) sequentially but {} under distribution",
                seq_printed.len(),
                sim.printed.len()
            ));
        }
        for (k, (a, b)) in seq_printed.iter().zip(sim.printed.iter()).enumerate() {
            if a.format != b.format {
                mismatches.push(format!(
                    "print #{k}: format {:?} vs {:?}",
                    a.format, b.format
                ));
                continue;
            }
            if a.values.len() != b.values.len() {
                mismatches.push(format!("print #{k}: argument count differs"));
                continue;
            }
            for (x, y) in a.values.iter().zip(b.values.iter()) {
                if let Some(m) = value_diff(&format!("print #{k}"), x, y, tolerance) {
                    mismatches.push(m);
                }
            }
        }

        let stray: usize = sim.worker_printed.iter().map(|p| p.len()).sum();
        if stray > 0 {
            mismatches.push(format!(
                "{stray} line(s) printed by worker ranks; output inside a distributed loop has no defined order"
            ));
        }
    }

    DiffReport {
        ok: sim_error.is_none() && mismatches.is_empty(),
        mismatches,
        sim_error,
        seq_steps,
        rank_steps: sim.steps.clone(),
        chunks_by_rank: sim.chunks_by_rank(),
        messages: sim.messages_sent,
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true; // covers infinities and exact zeros
    }
    let scale = 1.0_f64.max(a.abs()).max(b.abs());
    (a - b).abs() <= tol * scale || (a.is_nan() && b.is_nan())
}

/// Describe the first difference between two values, if any.
fn value_diff(what: &str, a: &Value, b: &Value, tol: f64) -> Option<String> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            (x != y).then(|| format!("{what}: sequential {x} vs distributed {y}"))
        }
        (Value::Float(x), Value::Float(y)) => (!close(*x, *y, tol))
            .then(|| format!("{what}: sequential {x} vs distributed {y}")),
        (Value::IntArray(x), Value::IntArray(y)) => {
            for (i, (p, q)) in x.data.iter().zip(y.data.iter()).enumerate() {
                if p != q {
                    return Some(format!(
                        "{what}[{}]: sequential {p} vs distributed {q}",
                        index_of(i, x.cols, x.rank)
                    ));
                }
            }
            None
        }
        (Value::FloatArray(x), Value::FloatArray(y)) => {
            for (i, (p, q)) in x.data.iter().zip(y.data.iter()).enumerate() {
                if !close(*p, *q, tol) {
                    return Some(format!(
                        "{what}[{}]: sequential {p} vs distributed {q}",
                        index_of(i, x.cols, x.rank)
                    ));
                }
            }
            None
        }
        _ => Some(format!("{what}: value kinds differ")),
    }
}

fn index_of(flat: usize, cols: usize, rank: u8) -> String {
    if rank <= 1 {
        flat.to_string()
    } else {
        format!("{}][{}", flat / cols, flat % cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::build::{build_mpi, BuildOptions};
    use crate::parser::parse;

    fn lower(src: &str) -> MpiProgram {
        let p = parse(src, "t.c").unwrap().program;
        build_mpi(&p, &BuildOptions::default()).unwrap()
    }

    const FLOAT_RED: &str = r#"
        int n = 50;
        double x[50];
        double sum = 0.0;
        int main() {
            int i;
            for (i = 0; i < n; i++) { x[i] = 0.1 * i + 0.01; }
            #pragma omp parallel for reduction(+:sum)
            for (i = 0; i < n; i++) { sum += x[i] * x[i]; }
            printf("%f\n", sum);
            return 0;
        }
    "#;

    #[test]
    fn float_reduction_passes_within_tolerance() {
        let mp = lower(FLOAT_RED);
        assert_eq!(suggested_tolerance(&mp), 1e-6);
        for nprocs in [2, 4, 8] {
            for seed in 0..5 {
                let rep =
                    differential_check(&mp, &Inputs::new(), nprocs, seed, 1e-6).unwrap();
                assert!(rep.ok, "nprocs={nprocs} seed={seed}: {:?}", rep.mismatches);
            }
        }
    }

    #[test]
    fn integer_state_is_bit_exact() {
        let src = r#"
            int n = 33;
            int a[33];
            int b[33];
            int main() {
                int i;
                for (i = 0; i < n; i++) { a[i] = 7 * i - 11; }
                #pragma omp parallel for
                for (i = 0; i < n; i++) { b[i] = a[i] * a[i] + 3; }
                return 0;
            }
        "#;
        let mp = lower(src);
        assert_eq!(suggested_tolerance(&mp), 1e-9);
        let rep = differential_check(&mp, &Inputs::new(), 3, 42, 0.0).unwrap();
        assert!(rep.ok, "{:?}", rep.mismatches);
        assert!(rep.messages > 0);
    }

    #[test]
    fn strided_loops_keep_skipped_elements_intact() {
        // step 2 updates every other element; the ones in between must keep
        // their sequential values through the span write-back on both
        // schedules, across worker counts that split the span mid-gap
        for schedule in ["schedule(static)", "schedule(dynamic, 2)"] {
            let src = format!(
                r#"
                int n = 37;
                int v[37];
                int main() {{
                    int i;
                    for (i = 0; i < n; i++) {{ v[i] = 100 + i; }}
                    #pragma omp parallel for {schedule}
                    for (i = 1; i < n; i += 2) {{ v[i] = v[i] * 3 - 1; }}
                    return 0;
                }}
            "#
            );
            let mp = lower(&src);
            for nprocs in [2, 3, 5] {
                let rep = differential_check(&mp, &Inputs::new(), nprocs, 7, 0.0).unwrap();
                assert!(rep.ok, "{schedule} nprocs={nprocs}: {:?}", rep.mismatches);
            }
        }
    }

    #[test]
    fn a_broken_worker_is_caught() {
        let mut mp = lower(FLOAT_RED);
        // Drop the chunk computation from every worker arm: results become
        // identity partials and the sums drift.
        crate::codegen::ir::visit_bodies_mut(&mut mp.worker, &mut |stmts| {
            stmts.retain(|s| !matches!(s, crate::codegen::ir::MpiStmt::Plain(
                crate::ast::Stmt::Block { .. }
            )));
        });
        let rep = differential_check(&mp, &Inputs::new(), 3, 0, 1e-6).unwrap();
        assert!(!rep.ok);
        assert!(!rep.mismatches.is_empty());
    }

    #[test]
    fn inputs_flow_into_both_sides() {
        let src = r#"
            int n = 16;
            int scale = 1;
            int v[16];
            int out[16];
            int main() {
                int i;
                for (i = 0; i < n; i++) { v[i] = i; }
                #pragma omp parallel for
                for (i = 0; i < n; i++) { out[i] = v[i] * scale; }
                printf("%d\n", out[15]);
                return 0;
            }
        "#;
        let mp = lower(src);
        let mut inputs = Inputs::new();
        inputs.insert("scale".to_string(), Value::Int(5));
        let rep = differential_check(&mp, &inputs, 2, 1, 0.0).unwrap();
        assert!(rep.ok, "{:?}", rep.mismatches);
    }
}
