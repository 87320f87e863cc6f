//! `report.json`, `summary.csv` and `estimates.json`.
//!
//! Records are sorted by (check, n, ℓ, seed) and then by their serialized
//! form, so the report depends only on the config. The timestamp sits on a
//! line of its own.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rellich_core::sharp::ConstantEstimate;
use rellich_core::verify::CheckRecord;
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const ESTIMATES_FILE: &str = "estimates.json";

#[derive(Clone, Debug, Serialize)]
pub struct Totals {
    pub records: usize,
    pub asserted: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub generated_at_unix: u64,
    pub passed: bool,
    pub totals: Totals,
    pub config: RunConfig,
    pub records: Vec<CheckRecord>,
}

#[derive(Serialize)]
struct Estimates<'a> {
    schema: u32,
    estimates: &'a [ConstantEstimate],
}

impl Report {
    pub fn new(config: RunConfig, records: Vec<CheckRecord>) -> Self {
        let mut keyed: Vec<(String, CheckRecord)> = records
            .into_iter()
            .map(|r| (serde_json::to_string(&r).unwrap_or_default(), r))
            .collect();
        keyed.sort_by(|(sa, a), (sb, b)| canonical(a, b).then_with(|| sa.cmp(sb)));
        let records: Vec<CheckRecord> = keyed.into_iter().map(|(_, r)| r).collect();
        let totals = Totals {
            records: records.len(),
            asserted: records.iter().filter(|r| r.asserted).count(),
            failed: records.iter().filter(|r| !r.pass).count(),
        };
        Self {
            schema: SCHEMA,
            generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            passed: totals.failed == 0,
            totals,
            config,
            records,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn write(&self, dir: &Path, estimates: &[ConstantEstimate]) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(dir.join(REPORT_FILE), json)?;
        let mut est = serde_json::to_string_pretty(&Estimates {
            schema: SCHEMA,
            estimates,
        })?;
        est.push('\n');
        fs::write(dir.join(ESTIMATES_FILE), est)?;
        write_summary(&dir.join(SUMMARY_FILE), &self.records)
    }
}

fn canonical(a: &CheckRecord, b: &CheckRecord) -> Ordering {
    (&a.check, a.n, a.ell, a.seed).cmp(&(&b.check, b.n, b.ell, b.seed))
}

/// The value each check is judged by, shown as min/max in the summary.
pub fn headline(check: &str) -> &'static str {
    match check {
        "identity" => "relative_residual",
        "cross_term_sign" | "cross_term_witness" => "cross_over_radial",
        "cross_term_closed_form" | "sharp_constant" => "relative_gap",
        "decomposition" => "slack_over_lhs",
        "dissipativity_first" | "dissipativity_second" => "discrepancy",
        "rellich" => "ratio",
        "zonal_ode" => "residual",
        "sharp_lower_bound" => "eigen",
        "sharp_widening" => "wide",
        "angle" => "cosine",
        "spherical_constant" => "min_ratio",
        "oracle_reduction" => "max_deviation",
        "oracle_order" => "min_order",
        _ => "",
    }
}

/// One row per (check, n, ℓ). `detail` lists every value of the first
/// failing record, or of the only record when there is just one.
fn write_summary(path: &Path, records: &[CheckRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "n", "ell", "records", "asserted", "failed", "pass", "metric", "min", "max", "detail"])?;
    let mut start = 0;
    while start < records.len() {
        let head = &records[start];
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.check == head.check && r.n == head.n && r.ell == head.ell)
                .count();
        let group = &records[start..end];
        let metric = headline(&head.check);
        let vals: Vec<f64> = group.iter().filter_map(|r| r.values.get(metric).copied()).collect();
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let failed = group.iter().filter(|r| !r.pass).count();
        let shown = group.iter().find(|r| !r.pass).or(if group.len() == 1 { group.first() } else { None });
        let detail = shown
            .map(|r| r.values.iter().map(|(k, v)| format!("{k}={v:e}")).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        let fmt = |v: f64| if vals.is_empty() { String::new() } else { format!("{v:e}") };
        w.write_record([
            head.check.clone(),
            head.n.to_string(),
            head.ell.map(|l| l.to_string()).unwrap_or_default(),
            group.len().to_string(),
            group.iter().filter(|r| r.asserted).count().to_string(),
            failed.to_string(),
            (failed == 0).to_string(),
            metric.to_string(),
            fmt(min),
            fmt(max),
            detail,
        ])?;
        start = end;
    }
    w.flush()?;
    Ok(())
}
