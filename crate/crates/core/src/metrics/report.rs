use std::fmt::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::MetricsReport;

/// Pooled protocol: every attack species in one score set.
pub const PROTOCOL: &str = "grandtest";
pub const NO_OCCLUSION: &str = "none";
/// Column families of the markdown grid, in display order.
pub const OCCLUSION_COLUMNS: [&str; 7] = ["no-occlusion", "low", "medium", "high", "round", "mask3d", "glasses"];
pub const REPORT_COLUMNS: [&str; 14] = [
    "protocol",
    "occlusion",
    "extractor",
    "threshold",
    "far",
    "frr",
    "hter",
    "apcer",
    "bpcer",
    "acer",
    "n_bonafide",
    "n_attack",
    "dev_eer",
    "unoccluded_fallback",
];
const EXTRACTOR_ORDER: [&str; 3] = ["lbp", "iqm", "motion"];

/// One pipeline evaluated under one occlusion.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<T> {
    pub protocol: String,
    pub occlusion: String,
    pub extractor: String,
    pub metrics: MetricsReport<T>,
    pub dev_eer: T,
    pub unoccluded_fallback: usize,
}

/// Column family of an occlusion name (`none` -> `no-occlusion`, `mask3d:x` -> `mask3d`).
pub fn occlusion_column(occlusion: &str) -> &str {
    if occlusion == NO_OCCLUSION {
        return OCCLUSION_COLUMNS[0];
    }
    occlusion.split(':').next().unwrap_or(occlusion)
}

fn rank<'a>(order: &[&str], key: &'a str) -> (usize, &'a str) {
    (order.iter().position(|&k| k == key).unwrap_or(order.len()), key)
}

fn occlusion_rank(occlusion: &str) -> (usize, &str) {
    (rank(&OCCLUSION_COLUMNS, occlusion_column(occlusion)).0, occlusion)
}

fn sorted<T>(rows: &[ReportRow<T>]) -> Vec<&ReportRow<T>> {
    let mut v: Vec<&ReportRow<T>> = rows.iter().collect();
    v.sort_by(|a, b| {
        (
            a.protocol.as_str(),
            rank(&EXTRACTOR_ORDER, &a.extractor),
            occlusion_rank(&a.occlusion),
        )
            .cmp(&(
                b.protocol.as_str(),
                rank(&EXTRACTOR_ORDER, &b.extractor),
                occlusion_rank(&b.occlusion),
            ))
    });
    v
}

fn rate<T: Scalar>(v: T) -> String {
    format!("{:.2}", v.to_f64_lossy())
}

/// CSV with [`REPORT_COLUMNS`]; rates in percent with two decimals.
pub fn report_csv<T: Scalar>(rows: &[ReportRow<T>]) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for r in sorted(rows) {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{},{},{},{},{},{},{},{},{}",
            r.protocol,
            r.occlusion,
            r.extractor,
            m.threshold.to_f64_lossy(),
            rate(m.far),
            rate(m.frr),
            rate(m.hter),
            rate(m.apcer),
            rate(m.bpcer),
            rate(m.acer),
            m.n_bonafide,
            m.n_attack,
            rate(r.dev_eer),
            r.unoccluded_fallback
        );
    }
    out
}

/// Inverse of [`report_csv`] (rates come back rounded to two decimals).
pub fn parse_report_csv<T: Scalar>(text: &str) -> Result<Vec<ReportRow<T>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPORT_COLUMNS.join(",") => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "unexpected report header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != REPORT_COLUMNS.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                REPORT_COLUMNS.len(),
                f.len()
            )));
        }
        let num = |k: usize| -> Result<T> {
            f[k].parse::<f64>()
                .map(T::lit)
                .map_err(|e| bad(format!("{}: {e}", REPORT_COLUMNS[k])))
        };
        let count =
            |k: usize| -> Result<usize> { f[k].parse().map_err(|e| bad(format!("{}: {e}", REPORT_COLUMNS[k]))) };
        rows.push(ReportRow {
            protocol: f[0].to_string(),
            occlusion: f[1].to_string(),
            extractor: f[2].to_string(),
            metrics: MetricsReport {
                threshold: num(3)?,
                far: num(4)?,
                frr: num(5)?,
                hter: num(6)?,
                apcer: num(7)?,
                bpcer: num(8)?,
                acer: num(9)?,
                n_bonafide: count(10)?,
                n_attack: count(11)?,
            },
            dev_eer: num(12)?,
            unoccluded_fallback: count(13)?,
        });
    }
    Ok(rows)
}

fn pipeline_name(extractor: &str) -> String {
    format!("{}+SVM", extractor.to_uppercase())
}

fn grid<T: Scalar>(
    out: &mut String,
    title: &str,
    rows: &[&ReportRow<T>],
    columns: &[String],
    cell: impl Fn(&MetricsReport<T>) -> String,
) {
    let _ = writeln!(out, "### {title}\n");
    let _ = writeln!(out, "| Pipeline | {} |", columns.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(columns.len()));
    let mut extractors: Vec<&str> = rows.iter().map(|r| r.extractor.as_str()).collect();
    extractors.dedup();
    for ex in extractors {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| {
                rows.iter()
                    .find(|r| r.extractor == ex && display_column(&r.occlusion) == *c)
                    .map_or_else(|| "-".to_string(), |r| cell(&r.metrics))
            })
            .collect();
        let _ = writeln!(out, "| {} | {} |", pipeline_name(ex), cells.join(" | "));
    }
    out.push('\n');
}

fn display_column(occlusion: &str) -> String {
    if occlusion == NO_OCCLUSION {
        OCCLUSION_COLUMNS[0].to_string()
    } else {
        occlusion.to_string()
    }
}

/// Markdown grids shaped like the usual robustness tables: pipelines as rows,
/// occlusions as columns, one grid for FAR/FRR/HTER and one for
/// APCER/BPCER/ACER, followed by per-run metadata.
pub fn render_markdown<T: Scalar>(rows: &[ReportRow<T>]) -> String {
    let rows = sorted(rows);
    let mut out = String::from("# Occlusion robustness report\n\n");
    let mut protocols: Vec<&str> = rows.iter().map(|r| r.protocol.as_str()).collect();
    protocols.dedup();
    for protocol in protocols {
        let group: Vec<&ReportRow<T>> = rows.iter().copied().filter(|r| r.protocol == protocol).collect();
        let mut columns: Vec<String> = OCCLUSION_COLUMNS.iter().map(|c| c.to_string()).collect();
        for r in &group {
            let c = display_column(&r.occlusion);
            if !columns.contains(&c) {
                columns.push(c);
            }
        }
        // families that were run only with explicit asset ids show those ids instead
        columns.retain(|c| {
            group.iter().any(|r| display_column(&r.occlusion) == *c)
                || !group.iter().any(|r| occlusion_column(&r.occlusion) == c.as_str())
        });
        let mut keyed: Vec<(usize, String)> = columns
            .into_iter()
            .map(|c| {
                (
                    rank(
                        &OCCLUSION_COLUMNS,
                        occlusion_column(if c == OCCLUSION_COLUMNS[0] { NO_OCCLUSION } else { &c }),
                    )
                    .0,
                    c,
                )
            })
            .collect();
        keyed.sort();
        let columns: Vec<String> = keyed.into_iter().map(|(_, c)| c).collect();

        let _ = writeln!(out, "## Protocol `{protocol}`\n");
        grid(&mut out, "FAR / FRR / HTER (%)", &group, &columns, |m| {
            format!("{} / {} / {}", rate(m.far), rate(m.frr), rate(m.hter))
        });
        grid(&mut out, "APCER / BPCER / ACER (%)", &group, &columns, |m| {
            format!("{} / {} / {}", rate(m.apcer), rate(m.bpcer), rate(m.acer))
        });
        let _ = writeln!(out, "### Run metadata\n");
        let _ = writeln!(
            out,
            "| Pipeline | Occlusion | Threshold | Dev EER (%) | Bona fide | Attack | Unoccluded fallback |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for r in &group {
            let _ = writeln!(
                out,
                "| {} | {} | {:.6} | {} | {} | {} | {} |",
                pipeline_name(&r.extractor),
                display_column(&r.occlusion),
                r.metrics.threshold.to_f64_lossy(),
                rate(r.dev_eer),
                r.metrics.n_bonafide,
                r.metrics.n_attack,
                r.unoccluded_fallback
            );
        }
        out.push('\n');
    }
    out
}
