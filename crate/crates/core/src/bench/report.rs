//! Result files: results.csv, summary.csv, summary.txt and stats.json.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::instance::DepotMode;
use crate::solution::format_gap;

use super::experiment::{size_band, ResultTable, RunRecord};
use super::wilcoxon::{wilcoxon_one_tailed, Method, WilcoxonResult};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub variant: String,
    pub pairs: usize,
    pub result: WilcoxonResult,
}

impl Comparison {
    pub fn decision(&self) -> &'static str {
        match self.result.p_value() {
            None => "insufficient data",
            Some(p) if p <= ALPHA => "reject H0",
            Some(_) => "retain H0",
        }
    }
}

/// Wilcoxon test of `variant` against `baseline` over per-instance scores.
pub fn compare(table: &ResultTable, baseline: &str, variant: &str) -> Comparison {
    let pairs = table.paired_scores(baseline, variant);
    Comparison {
        baseline: baseline.into(),
        variant: variant.into(),
        pairs: pairs.len(),
        result: wilcoxon_one_tailed(&pairs),
    }
}

/// Every non-baseline variant against `baseline`, if present.
pub fn compare_all(table: &ResultTable, baseline: &str) -> Vec<Comparison> {
    let variants = table.variants();
    if !variants.contains(&baseline) {
        return Vec::new();
    }
    variants
        .into_iter()
        .filter(|v| *v != baseline)
        .map(|v| compare(table, baseline, v))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    instance: String,
    variant: String,
    run: u32,
    seed: u64,
    cost: i64,
    gap: String,
    time_s: String,
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    instance: &'a str,
    variant: &'a str,
    customers: usize,
    depot: String,
    runs: usize,
    avg_cost: String,
    best_cost: i64,
    avg_gap: String,
    best_gap: String,
    avg_time_s: String,
}

#[derive(Debug, Serialize)]
struct StatsEntry<'a> {
    baseline: &'a str,
    variant: &'a str,
    pairs: usize,
    n: Option<usize>,
    statistic: Option<f64>,
    p_value: Option<f64>,
    method: Option<Method>,
    alpha: f64,
    decision: &'a str,
}

fn opt_gap(g: Option<f64>) -> String {
    g.map(format_gap).unwrap_or_default()
}

pub fn results_csv(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(["instance", "variant", "run", "seed", "cost", "gap", "time_s"])
            .expect("in-memory write");
    }
    for r in records {
        w.serialize(ResultRow {
            instance: r.instance.clone(),
            variant: r.variant.clone(),
            run: r.run,
            seed: r.seed,
            cost: r.cost,
            gap: opt_gap(r.gap),
            time_s: format!("{:.3}", r.time_s),
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Reads records back from a results.csv. Customer counts and depot modes
/// are not stored there and come back as zero / unknown.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, csv::Error> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rd.deserialize::<ResultRow>() {
        let row = row?;
        out.push(RunRecord {
            instance: row.instance,
            variant: row.variant,
            run: row.run,
            seed: row.seed,
            cost: row.cost,
            gap: row.gap.parse().ok(),
            time_s: row.time_s.parse().unwrap_or(0.0),
            customers: 0,
            depot_mode: None,
        });
    }
    Ok(out)
}

pub fn summary_csv(table: &ResultTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if table.cells.is_empty() {
        w.write_record([
            "instance",
            "variant",
            "customers",
            "depot",
            "runs",
            "avg_cost",
            "best_cost",
            "avg_gap",
            "best_gap",
            "avg_time_s",
        ])
        .expect("in-memory write");
    }
    for c in &table.cells {
        w.serialize(SummaryRow {
            instance: &c.instance,
            variant: &c.variant,
            customers: c.customers,
            depot: c.depot_mode.map(|d| d.letter().to_string()).unwrap_or_default(),
            runs: c.runs,
            avg_cost: format!("{:.1}", c.avg_cost),
            best_cost: c.best_cost,
            avg_gap: opt_gap(c.avg_gap),
            best_gap: opt_gap(c.best_gap),
            avg_time_s: format!("{:.2}", c.avg_time_s),
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn depot_label(d: DepotMode) -> &'static str {
    match d {
        DepotMode::Central => "Central (C)",
        DepotMode::Edge => "Edge (E)",
        DepotMode::Random => "Random (R)",
    }
}

/// Human-readable tables.
pub fn summary_text(table: &ResultTable, tests: &[Comparison]) -> String {
    let mut s = String::new();
    let name_w = table.instances().iter().map(|i| i.len()).max().unwrap_or(8).max(8);
    let var_w = table.variants().iter().map(|v| v.len()).max().unwrap_or(7).max(7);
    let _ = writeln!(
        s,
        "{:<name_w$}  {:<var_w$}  {:>12}  {:>10}  {:>8}  {:>8}  {:>9}",
        "Instance", "Variant", "Avg Cost", "Best Cost", "Avg Gap", "Best Gap", "Time (s)"
    );
    for c in &table.cells {
        let _ = writeln!(
            s,
            "{:<name_w$}  {:<var_w$}  {:>12.1}  {:>10}  {:>8}  {:>8}  {:>9.2}",
            c.instance,
            c.variant,
            c.avg_cost,
            c.best_cost,
            opt_gap(c.avg_gap),
            opt_gap(c.best_gap),
            c.avg_time_s
        );
    }

    let score = if table.has_gaps() {
        "mean gap (%)"
    } else {
        "mean excess over best found (%)"
    };
    let variants = table.variants();
    let mut grouped = |title: &str, groups: Vec<(String, Vec<(String, f64, usize)>)>| {
        let groups: Vec<_> = groups.into_iter().filter(|(_, g)| !g.is_empty()).collect();
        if groups.is_empty() {
            return;
        }
        let _ = writeln!(s, "\n{title}, {score}");
        let _ = write!(s, "{:<14}", "");
        for v in &variants {
            let _ = write!(s, "  {v:>var_w$}");
        }
        let _ = writeln!(s);
        for (label, rows) in groups {
            let _ = write!(s, "{label:<14}");
            for v in &variants {
                let cell = rows
                    .iter()
                    .find(|(name, _, _)| name == v)
                    .map(|(_, m, _)| format_gap(*m))
                    .unwrap_or_default();
                let _ = write!(s, "  {cell:>var_w$}");
            }
            let _ = writeln!(s);
        }
    };

    let mut sizes: Vec<usize> = table.cells.iter().map(|c| c.customers).collect();
    sizes.sort_unstable();
    let mut bands: Vec<&'static str> = sizes.into_iter().map(size_band).collect();
    bands.dedup();
    let by_band = bands
        .iter()
        .map(|b| (b.to_string(), table.grouped_scores(|c| size_band(c.customers) == *b)))
        .collect();
    grouped("By problem size", by_band);

    let by_depot = [DepotMode::Central, DepotMode::Edge, DepotMode::Random]
        .into_iter()
        .map(|d| {
            (
                depot_label(d).to_string(),
                table.grouped_scores(|c| c.depot_mode == Some(d)),
            )
        })
        .collect();
    grouped("By depot position", by_depot);

    if !tests.is_empty() {
        let _ = writeln!(s, "\nOne-tailed Wilcoxon signed-rank, alpha = {ALPHA}");
        for t in tests {
            match &t.result {
                WilcoxonResult::Test(r) => {
                    let _ = writeln!(
                        s,
                        "{} vs {}: n = {}, W+ = {}, p = {:.4} ({:?}) -> {}",
                        t.variant,
                        t.baseline,
                        r.n,
                        r.w_plus,
                        r.p_value,
                        r.method,
                        t.decision()
                    );
                }
                WilcoxonResult::InsufficientData { nonzero } => {
                    let _ = writeln!(
                        s,
                        "{} vs {}: {} non-zero differences -> {}",
                        t.variant,
                        t.baseline,
                        nonzero,
                        t.decision()
                    );
                }
            }
        }
    }
    if !table.failures.is_empty() {
        let _ = writeln!(s, "\nFailures");
        for f in &table.failures {
            let _ = writeln!(
                s,
                "{} {}: {}",
                f.instance,
                f.variant.as_deref().unwrap_or("-"),
                f.message
            );
        }
    }
    s
}

pub fn stats_json(tests: &[Comparison]) -> String {
    let entries: Vec<StatsEntry<'_>> = tests
        .iter()
        .map(|t| {
            let r = match &t.result {
                WilcoxonResult::Test(r) => Some(r),
                WilcoxonResult::InsufficientData { .. } => None,
            };
            StatsEntry {
                baseline: &t.baseline,
                variant: &t.variant,
                pairs: t.pairs,
                n: r.map(|r| r.n),
                statistic: r.map(|r| r.w_plus),
                p_value: r.map(|r| r.p_value),
                method: r.map(|r| r.method),
                alpha: ALPHA,
                decision: t.decision(),
            }
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("plain data serializes")
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub results_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub summary_txt: PathBuf,
    pub stats_json: PathBuf,
}

pub fn emit_report(table: &ResultTable, tests: &[Comparison], out_dir: impl AsRef<Path>) -> io::Result<ReportFiles> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = ReportFiles {
        results_csv: dir.join("results.csv"),
        summary_csv: dir.join("summary.csv"),
        summary_txt: dir.join("summary.txt"),
        stats_json: dir.join("stats.json"),
    };
    std::fs::write(&files.results_csv, results_csv(&table.records))?;
    std::fs::write(&files.summary_csv, summary_csv(table))?;
    std::fs::write(&files.summary_txt, summary_text(table, tests))?;
    std::fs::write(&files.stats_json, stats_json(tests))?;
    Ok(files)
}
