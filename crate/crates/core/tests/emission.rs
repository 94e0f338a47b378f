//! End-to-end checks on the emitted C: golden translations stay stable, and
//! every emitted translation unit compiles warning-free as C99.

use std::path::{Path, PathBuf};
use std::process::Command;

use omp2dm::codegen::build::{build_mpi, BuildOptions, FallbackStyle};
use omp2dm::codegen::cgen::emit_c;
use omp2dm::parser::parse;

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn translate(src: &str, file: &str, opts: &BuildOptions) -> String {
    let program = parse(src, file).expect("parse").program;
    let mp = build_mpi(&program, opts).expect("build");
    emit_c(&mp)
}

fn translate_file(input: &Path, opts: &BuildOptions) -> String {
    let src = std::fs::read_to_string(input).expect("read input");
    let name = input.file_name().unwrap().to_string_lossy().into_owned();
    translate(&src, &name, opts)
}

#[test]
fn golden_translations_are_stable() {
    for stem in ["stencil", "axpy"] {
        let input = manifest_path(&format!("tests/golden/{stem}_in.c"));
        let expected_path = manifest_path(&format!("tests/golden/{stem}_out.c"));
        let got = translate_file(&input, &BuildOptions::default());
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&expected_path, &got).expect("update golden");
            continue;
        }
        let expected = std::fs::read_to_string(&expected_path).expect("read golden");
        if got != expected {
            let line = got
                .lines()
                .zip(expected.lines())
                .position(|(a, b)| a != b)
                .map(|i| i + 1)
                .unwrap_or_else(|| got.lines().count().min(expected.lines().count()) + 1);
            panic!(
                "{stem}: translation differs from {} starting at line {line}\n\
                 (rerun with UPDATE_GOLDEN=1 to accept the new output)\n--- got ---\n{got}",
                expected_path.display()
            );
        }
    }
}

/// Compile one translation unit with the stub MPI header; returns stderr on
/// failure. `-Werror` keeps the bar at "not a single warning".
fn compile(dir: &Path, name: &str, code: &str, extra: &[&str]) -> Result<(), String> {
    let src = dir.join(name);
    std::fs::write(&src, code).expect("write generated C");
    let include = manifest_path("tests/support");
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Wextra")
        .arg("-Werror")
        .args(extra)
        .arg("-I")
        .arg(&include)
        .arg("-c")
        .arg(&src)
        .arg("-o")
        .arg(src.with_extension("o"))
        .output()
        .expect("run cc");
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

#[test]
fn generated_c_compiles_without_warnings() {
    let dir = tempfile::tempdir().expect("tempdir");
    for stem in ["stencil", "axpy"] {
        let input = manifest_path(&format!("tests/golden/{stem}_in.c"));
        let code = translate_file(&input, &BuildOptions::default());
        if let Err(err) = compile(dir.path(), &format!("{stem}.c"), &code, &[]) {
            panic!("{stem}: generated C does not compile cleanly:\n{err}\n{code}");
        }
    }
}

const INTRINSICS_SRC: &str = r#"
double a[16];
long hits;
int cap = 12;

int main() {
    int i;
    hits = 0;
    for (i = 0; i < 16; i++) {
        a[i] = sqrt(fabs(i - 7.5));
    }
    #pragma omp parallel for reduction(+: hits)
    for (i = 0; i < 16; i++) {
        a[i] = min(a[i], 2.0) + max(a[i], 0.5);
        hits += min(i, cap) - max(i - cap, 0);
    }
    printf("%ld %f\n", hits, a[3]);
    return 0;
}
"#;

const TWO_BLOCK_SRC: &str = r#"
int u[40];
int v[40];
int total;

int main() {
    int i;
    for (i = 0; i < 40; i++) { u[i] = i * i - 3; }
    #pragma omp parallel for schedule(static)
    for (i = 0; i < 40; i++) { v[i] = u[i] * 2; }
    total = 0;
    #pragma omp parallel for reduction(+: total) schedule(dynamic, 4)
    for (i = 0; i < 40; i++) { total += v[i]; }
    printf("%d\n", total);
    return 0;
}
"#;

const NO_PRAGMA_SRC: &str = r#"
int acc;

int main() {
    int i;
    acc = 1;
    for (i = 1; i < 6; i++) { acc *= i; }
    printf("%d\n", acc);
    return 0;
}
"#;

const FALLBACK_SRC: &str = r#"
double g[16][16];

int main() {
    int i;
    int j;
    #pragma omp parallel for private(j)
    for (i = 1; i < 15; i++) {
        for (j = 1; j < 15; j++) {
            g[i][j] = (g[i - 1][j] + g[i][j]) * 0.5;
        }
    }
    printf("%f\n", g[8][8]);
    return 0;
}
"#;

#[test]
fn every_code_path_compiles_without_warnings() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cases: &[(&str, &str, BuildOptions, &[&str])] = &[
        ("intrinsics.c", INTRINSICS_SRC, BuildOptions::default(), &[]),
        ("two_block.c", TWO_BLOCK_SRC, BuildOptions::default(), &[]),
        ("no_pragma.c", NO_PRAGMA_SRC, BuildOptions::default(), &[]),
        ("fallback_seq.c", FALLBACK_SRC, BuildOptions::default(), &[]),
        (
            "fallback_omp.c",
            FALLBACK_SRC,
            BuildOptions { fallback: FallbackStyle::KeepOmp, ..BuildOptions::default() },
            // the preserved pragma is real OpenMP; compile it as such
            &["-fopenmp"],
        ),
    ];
    for (name, src, opts, extra) in cases {
        let code = translate(src, name, opts);
        if let Err(err) = compile(dir.path(), name, &code, extra) {
            panic!("{name}: generated C does not compile cleanly:\n{err}\n{code}");
        }
    }
}
