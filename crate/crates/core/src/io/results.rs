use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::ZoneCostModel;
use crate::opf::DispatchResult;
use crate::scenario::{Indicators, RunConfig, RunSummary, StepStatus};

pub const RESULTS_FORMAT: &str = "zonal-opf-results/1";
pub const RESULT_FILES: [&str; 5] = ["prices.csv", "curtailment.csv", "pn.csv", "flows.csv", "summary.json"];
pub const FITTED_HEADER: [&str; 8] = ["zone", "timestep", "status", "alpha", "beta", "rho_eq", "pn_min", "pn_max"];

/// Renders `v` with 6 significant digits in the shortest form that parses
/// back to the rounded value. Non-finite values render empty.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("own formatting parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

/// A result table: one row per timestep with a status and numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub timestep: i64,
    pub status: String,
    pub cells: Vec<Option<f64>>,
}

impl ResultTable {
    fn new(columns: Vec<String>) -> Self {
        ResultTable { columns, rows: Vec::new() }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("timestep,status");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.timestep.to_string());
            out.push(',');
            out.push_str(&r.status);
            for c in &r.cells {
                out.push(',');
                if let Some(v) = c {
                    out.push_str(&format_number(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn read_result_table(path: impl AsRef<Path>) -> Result<ResultTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_result_table(&path.display().to_string(), &text)
}

pub fn parse_result_table(name: &str, text: &str) -> Result<ResultTable> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::row(name, 1, e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "timestep" || &headers[1] != "status" {
        return Err(Error::row(name, 1, "expected header starting with timestep,status"));
    }
    let mut table = ResultTable::new(headers.iter().skip(2).map(str::to_string).collect());
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::row(name, row, e.to_string()))?;
        let timestep =
            record[0].parse().map_err(|_| Error::row(name, row, format!("bad timestep {:?}", &record[0])))?;
        let cells = record
            .iter()
            .skip(2)
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse().map(Some).map_err(|_| Error::row(name, row, format!("bad number {c:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        table.rows.push(ResultRow { timestep, status: record[1].to_string(), cells });
    }
    Ok(table)
}

fn table<F>(summary: &RunSummary, columns: Vec<String>, cells: F) -> ResultTable
where
    F: Fn(&DispatchResult) -> Vec<f64>,
{
    let mut t = ResultTable::new(columns);
    let width = t.columns.len();
    let mut steps: Vec<_> = summary.steps.iter().collect();
    steps.sort_by_key(|s| s.timestep);
    for s in steps {
        let cells = match &s.dispatch {
            Some(d) => cells(d).into_iter().map(Some).collect(),
            None => vec![None; width],
        };
        t.rows.push(ResultRow { timestep: s.timestep, status: s.status.as_str().to_string(), cells });
    }
    t
}

pub fn prices_table(s: &RunSummary) -> ResultTable {
    table(s, s.elements.zones.clone(), |d| d.zones.iter().map(|z| z.price).collect())
}

/// Curtailment per renewable unit in percent.
pub fn curtailment_table(s: &RunSummary) -> ResultTable {
    table(s, s.elements.renewables.clone(), |d| d.curtailment.iter().map(|c| 100.0 * c).collect())
}

pub fn pn_table(s: &RunSummary) -> ResultTable {
    let cols = s
        .elements
        .zones
        .iter()
        .flat_map(|z| [format!("{z}:pn"), format!("{z}:pn_min"), format!("{z}:pn_max")])
        .collect();
    table(s, cols, |d| d.zones.iter().flat_map(|z| [z.p_n, z.pn_min, z.pn_max]).collect())
}

/// Active power at the from end of AC branches and DC lines, and AC-side
/// converter injection.
pub fn flows_table(s: &RunSummary) -> ResultTable {
    let e = &s.elements;
    let cols = e
        .ac_branches
        .iter()
        .map(|id| format!("branch:{id}"))
        .chain(e.dc_lines.iter().map(|id| format!("dc_line:{id}")))
        .chain(e.converters.iter().map(|id| format!("converter:{id}")))
        .collect();
    table(s, cols, |d| d.branch_p_from.iter().chain(&d.dc_line_p_from).chain(&d.converter_p_ac).copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub timestep: i64,
    pub status: StepStatus,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub warm_started: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub format: String,
    pub generated_at: String,
    pub scenario: String,
    pub t_from: i64,
    pub t_to: i64,
    pub indicators: Indicators,
    pub steps: Vec<StepRecord>,
    pub config: Option<RunConfig>,
}

impl SummaryFile {
    pub fn of(summary: &RunSummary, generated_at: &str) -> Self {
        let mut steps: Vec<StepRecord> = summary
            .steps
            .iter()
            .map(|s| StepRecord {
                timestep: s.timestep,
                status: s.status,
                iterations: s.iterations,
                wall_time_s: s.wall_time_s,
                warm_started: s.warm_started,
                message: s.message.clone(),
            })
            .collect();
        steps.sort_by_key(|s| s.timestep);
        SummaryFile {
            format: RESULTS_FORMAT.into(),
            generated_at: generated_at.into(),
            scenario: summary.scenario.to_string(),
            t_from: summary.t_from,
            t_to: summary.t_to,
            indicators: summary.indicators.clone(),
            steps,
            config: summary.config.clone(),
        }
    }
}

/// Reads summary.json, rejecting other major format versions.
pub fn read_summary(path: impl AsRef<Path>) -> Result<SummaryFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })?;
    let found = value.get("format").and_then(|v| v.as_str()).unwrap_or("").to_string();
    if found.split('.').next() != Some(RESULTS_FORMAT) {
        return Err(Error::FormatVersion { expected: RESULTS_FORMAT.into(), found });
    }
    serde_json::from_value(value).map_err(|e| Error::Json { path: path.into(), source: e })
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &target).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(&target, e)
    })?;
    Ok(target)
}

fn write_all(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut done = Vec::new();
    for (name, bytes) in files {
        match write_atomic(dir, name, &bytes) {
            Ok(p) => done.push(p),
            Err(e) => {
                let listed: Vec<String> = done.iter().map(|p: &PathBuf| p.display().to_string()).collect();
                log::warn!("partial output in {}: completed [{}]; failed on {name}", dir.display(), listed.join(", "));
                return Err(e);
            }
        }
    }
    Ok(done)
}

/// Writes the four result tables and summary.json into `out_dir`, stamping
/// the summary with the current UTC time.
pub fn emit_results(summary: &RunSummary, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    emit_results_at(summary, out_dir, &now)
}

/// [`emit_results`] with a caller-chosen timestamp.
pub fn emit_results_at(summary: &RunSummary, out_dir: impl AsRef<Path>, generated_at: &str) -> Result<Vec<PathBuf>> {
    let mut json = serde_json::to_vec_pretty(&SummaryFile::of(summary, generated_at)).expect("summary serializes");
    json.push(b'\n');
    let files = vec![
        (RESULT_FILES[0], prices_table(summary).to_csv_string().into_bytes()),
        (RESULT_FILES[1], curtailment_table(summary).to_csv_string().into_bytes()),
        (RESULT_FILES[2], pn_table(summary).to_csv_string().into_bytes()),
        (RESULT_FILES[3], flows_table(summary).to_csv_string().into_bytes()),
        (RESULT_FILES[4], json),
    ];
    write_all(out_dir.as_ref(), files)
}

/// One fitted zone-hour, or the reason fitting failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedRow {
    pub zone: String,
    pub timestep: i64,
    pub model: std::result::Result<ZoneCostModel, String>,
}

pub fn fitted_models_csv(rows: &[FittedRow]) -> String {
    let mut out = FITTED_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},", r.zone, r.timestep));
        match &r.model {
            Ok(m) => {
                out.push_str("ok");
                for v in [m.alpha, m.beta, m.rho_eq, m.pn_min, m.pn_max] {
                    out.push(',');
                    out.push_str(&format_number(v));
                }
            }
            Err(msg) => {
                let msg = msg.replace([',', '\n', '"'], " ");
                out.push_str(&format!("failed: {msg},,,,,"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_fitted_models(rows: &[FittedRow], out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(dir, "fitted_models.csv", fitted_models_csv(rows).as_bytes())
}
