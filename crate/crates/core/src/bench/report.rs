use super::{io_err, MetricsReport, RankTable, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const HEADER: [&str; 11] = [
    "method", "category", "re", "sp", "fpr", "fnr", "wcr", "ccr", "pr", "f1", "r",
];

/// One line of the metrics CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub category: String,
    pub re: f64,
    pub sp: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub wcr: f64,
    pub ccr: f64,
    pub pr: f64,
    pub f1: f64,
    pub r: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub arc: BTreeMap<String, f64>,
    pub fps: BTreeMap<String, f64>,
}

/// Writes `metrics.csv` and `summary.json` into `dir`, rows ordered by
/// method then category.
pub fn emit_report(
    dir: &Path,
    table: &RankTable,
    reports: &[MetricsReport],
    fps: &BTreeMap<String, f64>,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut rows: Vec<ReportRow> = reports
        .iter()
        .map(|m| ReportRow {
            method: m.method.clone(),
            category: m.category.clone(),
            re: m.re,
            sp: m.sp,
            fpr: m.fpr,
            fnr: m.fnr,
            wcr: m.wcr,
            ccr: m.ccr,
            pr: m.pr,
            f1: m.f1,
            r: table.r_of(&m.method, &m.category).unwrap_or(f64::NAN),
        })
        .collect();
    rows.sort_by(|a, b| (&a.method, &a.category).cmp(&(&b.method, &b.category)));

    let csv_path = dir.join("metrics.csv");
    let file = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(HEADER)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let summary = ReportSummary {
        arc: table.arc.clone(),
        fps: fps.clone(),
    };
    let json_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
    Ok((csv_path, json_path))
}

pub fn parse_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()?;
    Ok(rows)
}
