//! Command-line driver: transpile C-with-OpenMP sources into master/worker
//! message-passing C, inspect the per-block analysis, and differentially
//! verify the translation on the built-in deterministic simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use omp2dm::analysis::plan::Schedule;
use omp2dm::analysis::report::{build_report, AnalysisReport};
use omp2dm::codegen::cgen::emit_c;
use omp2dm::codegen::ir::render_ir;
use omp2dm::codegen::{build_mpi, BuildOptions, FallbackStyle, MpiProgram};
use omp2dm::errors::CompileError;
use omp2dm::parser::parse;
use omp2dm::runtime::diff::{differential_check, suggested_tolerance, DiffReport};
use omp2dm::runtime::Inputs;

/// Exit statuses: 0 success, 1 verification found differences, 2 usage or
/// compile error, 3 strict-mode rejection.
const EXIT_MISMATCH: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_STRICT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "omp2dm",
    version,
    about = "Translate OpenMP `parallel for` C programs into master/worker \
             message-passing programs, and check the translation against the \
             sequential meaning on a deterministic simulator."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum FallbackArg {
    /// Lower non-distributable blocks to plain sequential loops.
    #[default]
    Seq,
    /// Keep the original pragma on non-distributable blocks.
    KeepOmp,
}

impl From<FallbackArg> for FallbackStyle {
    fn from(v: FallbackArg) -> FallbackStyle {
        match v {
            FallbackArg::Seq => FallbackStyle::Seq,
            FallbackArg::KeepOmp => FallbackStyle::KeepOmp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Static,
    Dynamic,
}

impl From<ScheduleArg> for Schedule {
    fn from(v: ScheduleArg) -> Schedule {
        match v {
            ScheduleArg::Static => Schedule::Static,
            ScheduleArg::Dynamic => Schedule::Dynamic,
        }
    }
}

#[derive(Args)]
struct AnalysisOpts {
    /// Reject programs that would need the unsound whole-array write-back
    /// instead of emitting them with a warning.
    #[arg(long)]
    strict: bool,

    /// Chunk-dispatch schedule for blocks without a schedule(...) clause
    /// (default: dynamic).
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate a source file into a self-contained message-passing C program.
    Transpile {
        /// Input C file.
        input: PathBuf,

        /// Output file (default: <input>.mpi.c next to the input; "-" for stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,

        /// How blocks that cannot be distributed appear in the output.
        #[arg(long, value_enum, default_value_t)]
        fallback: FallbackArg,

        /// Also write the per-block analysis as JSON to this file.
        #[arg(long, value_name = "FILE")]
        dump_analysis: Option<PathBuf>,

        /// Print the lowered message-passing form instead of C (for debugging).
        #[arg(long)]
        emit_ir: bool,

        #[command(flatten)]
        analysis: AnalysisOpts,
    },

    /// Run the translation and the original side by side and compare all
    /// observable state, across process counts and arbitration seeds.
    Verify {
        /// Input C file.
        input: PathBuf,

        /// Process counts to simulate, comma-separated; each needs at least 2
        /// (one master plus one worker).
        #[arg(long, value_delimiter = ',', default_value = "2,4")]
        nprocs: Vec<usize>,

        /// Arbitration seeds for the simulator, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,

        /// Relative tolerance for floating-point comparisons (default: picked
        /// from the program — loose only when a float reduction reorders sums).
        #[arg(long)]
        tolerance: Option<f64>,

        #[command(flatten)]
        analysis: AnalysisOpts,
    },

    /// Print the per-block analysis (classes, loop shape, transfers) as JSON.
    DumpAnalysis {
        /// Input C file.
        input: PathBuf,

        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,

        #[command(flatten)]
        analysis: AnalysisOpts,
    },

    /// Transpile and verify every kernel in a directory; print an aligned
    /// table and optionally write a JSON report.
    Corpus {
        /// Directory of .c kernels.
        #[arg(default_value = "corpus")]
        dir: PathBuf,

        /// Process counts, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        nprocs: Vec<usize>,

        /// Arbitration seeds, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,

        /// Write the JSON report here.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,

        /// Relative tolerance (default: per kernel, as in `verify`).
        #[arg(long)]
        tolerance: Option<f64>,

        #[command(flatten)]
        analysis: AnalysisOpts,
    },
}

/// A failure that ends the run: carries the exit status and a message for
/// stderr (empty when everything worth saying was already printed).
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_ERROR, message: message.into() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Transpile { input, output, fallback, dump_analysis, emit_ir, analysis } => {
            cmd_transpile(&input, output, fallback, dump_analysis, emit_ir, &analysis)
        }
        Cmd::Verify { input, nprocs, seeds, tolerance, analysis } => {
            cmd_verify(&input, &nprocs, &seeds, tolerance, &analysis)
        }
        Cmd::DumpAnalysis { input, output, analysis } => {
            cmd_dump_analysis(&input, output, &analysis)
        }
        Cmd::Corpus { dir, nprocs, seeds, output, tolerance, analysis } => {
            cmd_corpus(&dir, &nprocs, &seeds, output, tolerance, &analysis)
        }
    }
}

/// Parse + analyze + lower one input file, mapping compile errors to exit
/// statuses: strict rejections to 3, everything else to 2.
fn compile(input: &Path, a: &AnalysisOpts, fallback: FallbackStyle) -> CliResult<MpiProgram> {
    let source = fs::read_to_string(input)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", input.display())))?;
    let parsed = parse(&source, &input.to_string_lossy())
        .map_err(|e| Failure::usage(e.to_string()))?;
    for w in &parsed.warnings {
        eprintln!("{w}");
    }
    let opts = BuildOptions {
        strict: a.strict,
        default_schedule: a.schedule.map(Into::into),
        fallback,
    };
    let mp = build_mpi(&parsed.program, &opts).map_err(|e| {
        let code = if a.strict && matches!(e, CompileError::Analysis { .. }) {
            EXIT_STRICT
        } else {
            EXIT_ERROR
        };
        Failure { code, message: e.to_string() }
    })?;
    for w in &mp.plan.warnings {
        eprintln!("{w}");
    }
    Ok(mp)
}

fn report_of(mp: &MpiProgram) -> AnalysisReport {
    build_report(&mp.program, &mp.plan)
}

/// One line per pragma block, on stderr: what the analysis decided.
fn print_block_summary(rep: &AnalysisReport) {
    for b in &rep.blocks {
        if b.parallelized {
            eprintln!(
                "block {} (line {}): distributed over `{}`, {} schedule, chunk {}",
                b.block,
                b.line,
                b.iterator,
                b.schedule.unwrap_or("?"),
                b.chunk_size.as_deref().unwrap_or("auto"),
            );
            for t in &b.transfers {
                let mut parts = Vec::new();
                if let Some(w) = &t.to_worker {
                    parts.push(format!("to workers: {w}"));
                }
                if let Some(m) = &t.to_master {
                    parts.push(format!("back to master: {m}"));
                }
                eprintln!("  {} — {}", t.var, parts.join("; "));
            }
            for r in &b.reductions {
                eprintln!("  {} — reduction ({}), identity {}", r.var, r.op, r.identity);
            }
        } else {
            eprintln!(
                "block {} (line {}): kept sequential — {}",
                b.block,
                b.line,
                b.fallback_reason.as_deref().unwrap_or("not distributable"),
            );
        }
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if path.as_os_str() == "-" {
        print!("{text}");
        return Ok(());
    }
    fs::write(path, text)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_transpile(
    input: &Path,
    output: Option<PathBuf>,
    fallback: FallbackArg,
    dump_analysis: Option<PathBuf>,
    emit_ir: bool,
    a: &AnalysisOpts,
) -> CliResult<()> {
    let mp = compile(input, a, fallback.into())?;
    let rep = report_of(&mp);
    print_block_summary(&rep);

    let text = if emit_ir {
        let mut s = String::from("== master (rank 0) ==\n");
        s.push_str(&render_ir(&mp.program, &mp.master));
        s.push_str("\n== worker (ranks 1..size-1) ==\n");
        s.push_str(&render_ir(&mp.program, &mp.worker));
        s
    } else {
        emit_c(&mp)
    };

    let out_path = output.unwrap_or_else(|| {
        input.with_extension(if emit_ir { "ir.txt" } else { "mpi.c" })
    });
    write_text(&out_path, &text)?;

    if let Some(p) = dump_analysis {
        let json = serde_json::to_string_pretty(&rep).expect("analysis serializes");
        write_text(&p, &(json + "\n"))?;
    }
    Ok(())
}

fn cmd_dump_analysis(input: &Path, output: Option<PathBuf>, a: &AnalysisOpts) -> CliResult<()> {
    let mp = compile(input, a, FallbackStyle::Seq)?;
    let rep = report_of(&mp);
    let json = serde_json::to_string_pretty(&rep).expect("analysis serializes");
    match output {
        Some(p) => write_text(&p, &(json + "\n"))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn check_matrix_args(nprocs: &[usize], seeds: &[u64], tolerance: Option<f64>) -> CliResult<()> {
    if nprocs.is_empty() {
        return Err(Failure::usage("--nprocs needs at least one value"));
    }
    if let Some(&bad) = nprocs.iter().find(|&&p| p < 2) {
        return Err(Failure::usage(format!(
            "--nprocs {bad}: needs at least 2 processes (one master plus one worker)"
        )));
    }
    if seeds.is_empty() {
        return Err(Failure::usage("--seeds needs at least one value"));
    }
    if let Some(t) = tolerance {
        if !(t > 0.0) {
            return Err(Failure::usage(format!("--tolerance {t}: must be positive")));
        }
    }
    Ok(())
}

fn list64(v: &[u64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_verify(
    input: &Path,
    nprocs: &[usize],
    seeds: &[u64],
    tolerance: Option<f64>,
    a: &AnalysisOpts,
) -> CliResult<()> {
    check_matrix_args(nprocs, seeds, tolerance)?;
    let mp = compile(input, a, FallbackStyle::Seq)?;
    print_block_summary(&report_of(&mp));

    let tol = tolerance.unwrap_or_else(|| suggested_tolerance(&mp));
    let inputs = Inputs::new();
    let mut failed = 0usize;
    let mut total = 0usize;
    for &np in nprocs {
        for &seed in seeds {
            total += 1;
            let rep = differential_check(&mp, &inputs, np, seed, tol)
                .map_err(|e| Failure::usage(format!("sequential reference run failed: {e}")))?;
            print_cell(np, seed, &rep);
            if !rep.ok {
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(Failure {
            code: EXIT_MISMATCH,
            message: format!("{failed} of {total} verification cells differ"),
        });
    }
    println!("{total}/{total} cells equivalent (tolerance {tol:e})");
    Ok(())
}

fn print_cell(np: usize, seed: u64, rep: &DiffReport) {
    if rep.ok {
        println!(
            "nprocs={np} seed={seed}: equivalent ({} messages, worker chunks [{}])",
            rep.messages,
            list64(&rep.chunks_by_rank[1..]),
        );
        return;
    }
    println!("nprocs={np} seed={seed}: MISMATCH");
    if let Some(e) = &rep.sim_error {
        println!("    simulation failed: {e}");
    }
    for m in rep.mismatches.iter().take(8) {
        println!("    {m}");
    }
    if rep.mismatches.len() > 8 {
        println!("    ... and {} more", rep.mismatches.len() - 8);
    }
}

fn corpus_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let rd = fs::read_dir(dir)
        .map_err(|e| Failure::usage(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        // Skip our own transpiler output if it landed next to the kernels.
        .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".mpi.c")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::usage(format!("no .c kernels in {}", dir.display())));
    }
    Ok(files)
}

fn cmd_corpus(
    dir: &Path,
    nprocs: &[usize],
    seeds: &[u64],
    output: Option<PathBuf>,
    tolerance: Option<f64>,
    a: &AnalysisOpts,
) -> CliResult<()> {
    check_matrix_args(nprocs, seeds, tolerance)?;
    let files = corpus_files(dir)?;

    let mut rows: Vec<serde_json::Value> = Vec::new();
    let mut table: Vec<[String; 6]> = Vec::new();
    table.push([
        "kernel".into(),
        "nprocs".into(),
        "blocks".into(),
        "verdict".into(),
        "messages".into(),
        "chunks/worker".into(),
    ]);
    let mut failed = 0usize;

    for path in &files {
        let kernel = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let mp = match compile(path, a, FallbackStyle::Seq) {
            Ok(mp) => mp,
            Err(f) => {
                failed += nprocs.len();
                for &np in nprocs {
                    let verdict = format!("compile error: {}", f.message);
                    table.push([
                        kernel.clone(),
                        np.to_string(),
                        "-".into(),
                        verdict.clone(),
                        "-".into(),
                        "-".into(),
                    ]);
                    rows.push(serde_json::json!({
                        "kernel": kernel, "nprocs": np, "ok": false, "verdict": verdict,
                    }));
                }
                continue;
            }
        };
        let rep = report_of(&mp);
        let distributed = rep.blocks.iter().filter(|b| b.parallelized).count();
        let fallbacks = rep.blocks.len() - distributed;
        let blocks_txt = if fallbacks == 0 {
            format!("{distributed} dist")
        } else {
            format!("{distributed} dist + {fallbacks} seq")
        };
        let schedules: Vec<String> = rep
            .blocks
            .iter()
            .filter_map(|b| b.schedule.map(|s| s.to_string()))
            .collect();
        let tol = tolerance.unwrap_or_else(|| suggested_tolerance(&mp));
        let inputs = Inputs::new();

        for &np in nprocs {
            let mut verdict = format!("ok ({} seeds)", seeds.len());
            let mut ok = true;
            let mut messages = 0u64;
            let mut chunks: Vec<u64> = Vec::new();
            let mut steps: Vec<u64> = Vec::new();
            for &seed in seeds {
                match differential_check(&mp, &inputs, np, seed, tol) {
                    Ok(r) => {
                        messages = r.messages;
                        chunks = r.chunks_by_rank[1..].to_vec();
                        steps = r.rank_steps.clone();
                        if !r.ok {
                            ok = false;
                            let detail = r
                                .sim_error
                                .clone()
                                .or_else(|| r.mismatches.first().cloned())
                                .unwrap_or_else(|| "state differs".into());
                            verdict = format!("MISMATCH seed={seed}: {detail}");
                            break;
                        }
                    }
                    Err(e) => {
                        ok = false;
                        verdict = format!("reference run failed: {e}");
                        break;
                    }
                }
            }
            if !ok {
                failed += 1;
            }
            table.push([
                kernel.clone(),
                np.to_string(),
                blocks_txt.clone(),
                verdict.clone(),
                messages.to_string(),
                if chunks.iter().all(|&c| c == 0) { "-".into() } else { list64(&chunks) },
            ]);
            rows.push(serde_json::json!({
                "kernel": kernel,
                "nprocs": np,
                "distributed_blocks": distributed,
                "fallback_blocks": fallbacks,
                "schedules": schedules,
                "tolerance": tol,
                "seeds": seeds,
                "ok": ok,
                "verdict": verdict,
                "messages": messages,
                "chunks_by_worker": chunks,
                "steps_by_rank": steps,
            }));
        }
    }

    print_table(&table);

    if let Some(p) = output {
        let doc = serde_json::json!({
            "kernels": files.len(),
            "rows": rows,
        });
        let json = serde_json::to_string_pretty(&doc).expect("report serializes");
        write_text(&p, &(json + "\n"))?;
    }

    if failed > 0 {
        return Err(Failure {
            code: EXIT_MISMATCH,
            message: format!("{failed} corpus row(s) failed"),
        });
    }
    Ok(())
}

fn print_table(rows: &[[String; 6]]) {
    let mut width = [0usize; 6];
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < row.len() {
                for _ in cell.len()..width[i] {
                    line.push(' ');
                }
            }
        }
        println!("{}", line.trim_end());
    }
}
