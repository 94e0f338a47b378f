//! Human- and machine-readable analysis reports.
//!
//! Serializes, per block: the distribution decision, variable classes with
//! their justification, planned data movement, and reductions. The CLI
//! prints this as JSON.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::classify::classify_block;
use crate::analysis::plan::{
    BlockDecision, BlockPlan, InMode, OutMode, ProgramPlan,
};
use crate::ast::*;

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub file: String,
    pub blocks: Vec<BlockReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub block: usize,
    pub line: u32,
    pub parallelized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunk_size: Option<String>,
    pub iterator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_device: Option<String>,
    pub variables: BTreeMap<String, VarReport>,
    pub transfers: Vec<TransferReport>,
    pub reductions: Vec<ReductionReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarReport {
    pub class: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub var: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_worker: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_master: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub var: String,
    pub op: String,
    pub identity: i64,
}

fn describe_rows(scale: i64, lo: i64, hi: i64, it: &str) -> String {
    let base = match scale {
        1 => it.to_string(),
        -1 => format!("-{it}"),
        k => format!("{k}*{it}"),
    };
    let end = |off: i64| match off {
        0 => base.clone(),
        o if o > 0 => format!("{base}+{o}"),
        o => format!("{base}{o}"),
    };
    if lo == hi {
        format!("row {}", end(lo))
    } else {
        format!("rows {}..{}", end(lo), end(hi))
    }
}

fn transfers_of(program: &Program, plan: &BlockPlan) -> Vec<TransferReport> {
    let it = &program.vars[plan.loop_.iterator].name;
    let mut out = Vec::new();
    for &v in &plan.scalars_in {
        out.push(TransferReport {
            var: program.vars[v].name.clone(),
            to_worker: Some("value".to_string()),
            to_master: None,
        });
    }
    for a in &plan.arrays {
        out.push(TransferReport {
            var: program.vars[a.var].name.clone(),
            to_worker: a.in_mode.as_ref().map(|m| match m {
                InMode::SliceRows { scale, lo, hi } => describe_rows(*scale, *lo, *hi, it),
                InMode::FullArray => "whole array".to_string(),
            }),
            to_master: a.out_mode.as_ref().map(|m| match m {
                OutMode::SliceRows { scale, offset } => {
                    describe_rows(*scale, *offset, *offset, it)
                }
                OutMode::FullArrayLastWorker => "whole array (last chunk wins)".to_string(),
            }),
        });
    }
    out
}

/// Build the report for a planned program.
pub fn build_report(program: &Program, plan: &ProgramPlan) -> AnalysisReport {
    let mut blocks = Vec::new();
    for block in program.pragma_blocks() {
        let decision = plan.decision(block.block_id);
        let (classes, _) = classify_block(program, block);
        let variables: BTreeMap<String, VarReport> = classes
            .vars
            .iter()
            .map(|cv| {
                (
                    program.vars[cv.id].name.clone(),
                    VarReport { class: cv.class.name(), reason: cv.reason.clone() },
                )
            })
            .collect();
        let iterator = program.vars[block.for_stmt.iterator()].name.clone();
        let report = match decision {
            BlockDecision::Parallel(p) => BlockReport {
                block: block.block_id,
                line: block.span.line,
                parallelized: true,
                fallback_reason: None,
                schedule: Some(p.schedule.name()),
                chunk_size: Some(match p.chunk {
                    Some(c) => c.to_string(),
                    None => "auto".to_string(),
                }),
                iterator,
                stride: Some(p.loop_.stride),
                target_device: block.directive.target_device.clone(),
                variables,
                transfers: transfers_of(program, p),
                reductions: p
                    .reductions
                    .iter()
                    .map(|r| ReductionReport {
                        var: program.vars[r.var].name.clone(),
                        op: r.op.symbol().to_string(),
                        identity: r.op.identity() as i64,
                    })
                    .collect(),
            },
            BlockDecision::Fallback { reason, .. } => BlockReport {
                block: block.block_id,
                line: block.span.line,
                parallelized: false,
                fallback_reason: Some(reason.to_string()),
                schedule: None,
                chunk_size: None,
                iterator,
                stride: None,
                target_device: block.directive.target_device.clone(),
                variables,
                transfers: Vec::new(),
                reductions: Vec::new(),
            },
        };
        blocks.push(report);
    }
    AnalysisReport {
        file: program.file.clone(),
        blocks,
        warnings: plan.warnings.iter().map(|w| w.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::plan::plan_program;
    use crate::parser::parse;

    #[test]
    fn report_serializes_to_json() {
        let src = r#"
int n;
int x;
int sum;
double v[16];
double w[16];
int main() {
    int i;
    #pragma omp parallel for reduction(+: sum)
    for (i = 0; i < n; i++) {
        sum = sum + x * i;
    }
    #pragma omp parallel for schedule(static)
    for (i = 1; i < 15; i++) {
        w[i] = v[i - 1] + v[i + 1];
    }
    printf("%d\n", sum);
    return 0;
}
"#;
        let p = parse(src, "t.c").unwrap().program;
        let plan = plan_program(&p, false).unwrap();
        let report = build_report(&p, &plan);
        assert_eq!(report.blocks.len(), 2);
        assert!(report.blocks[0].parallelized);
        assert_eq!(report.blocks[0].schedule, Some("dynamic"));
        assert_eq!(report.blocks[0].reductions[0].op, "+");
        assert_eq!(report.blocks[0].reductions[0].identity, 0);
        assert_eq!(report.blocks[1].schedule, Some("static"));
        let json = serde_json::to_string_pretty(&report).unwrap();
        assert!(json.contains("\"class\": \"reduction(+)\""), "{json}");
        let b1 = &report.blocks[1];
        let v = b1.transfers.iter().find(|t| t.var == "v").unwrap();
        assert_eq!(v.to_worker.as_deref(), Some("rows i-1..i+1"));
        let w = b1.transfers.iter().find(|t| t.var == "w").unwrap();
        assert_eq!(w.to_master.as_deref(), Some("row i"));
    }
}
