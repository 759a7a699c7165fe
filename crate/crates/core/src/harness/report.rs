use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elasticity::LamePair;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::stats::TrendStatistics;
use crate::iim::RelativeError;
use crate::imaging::ScalarImage;
use crate::optimizer::StepKind;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACE_DIR: &str = "traces";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const REFERENCE_IMAGE: &str = "reference.pgm";
pub const DEFORMED_IMAGE: &str = "deformed.pgm";

/// Simplex best vertex after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub step: StepKind,
    pub objective: f64,
    pub residual: f64,
    pub penalty: f64,
    pub diameter: f64,
    pub params: Vec<LamePair<f64>>,
    pub error: RelativeError<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub delta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub reference_noise_seed: u64,
    pub deformed_noise_seed: u64,
    pub final_params: Vec<LamePair<f64>>,
    pub final_error: RelativeError<f64>,
    pub final_residual: f64,
    pub final_objective: f64,
    /// 0 when the trace is empty and the best iterate is the start point.
    pub best_iteration: usize,
    pub best_params: Vec<LamePair<f64>>,
    pub best_error: RelativeError<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub degenerate: bool,
    /// False when every in-box evaluation returned the same residual.
    pub identifiable: bool,
    /// One entry per executed iteration.
    pub trace: Vec<TracePoint>,
    /// 0 unless wall time recording is enabled.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportImages {
    pub reference: ScalarImage<f64>,
    pub deformed: ScalarImage<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub truth: Vec<LamePair<f64>>,
    pub region_areas: Vec<f64>,
    pub interpolation_floor: f64,
    pub runs: Vec<RunRecord>,
    pub statistics: Option<TrendStatistics>,
    #[serde(skip)]
    pub images: Option<ReportImages>,
}

impl ExperimentReport {
    pub fn region_count(&self) -> usize {
        self.truth.len()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    truth: &'a [LamePair<f64>],
    region_areas: &'a [f64],
    interpolation_floor: f64,
    statistics: Option<TrendStatistics>,
    runs: Vec<&'a str>,
    files: Vec<String>,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format { kind: "CSV", detail: format!("{}: {other:?}", path.display()) },
    }
}

fn to_json<S: Serialize + ?Sized>(value: &S) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Format { kind: "JSON", detail: e.to_string() })?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.into_inner().map_err(|e| Error::io(path, e.into_error()))
}

fn param_header(k: usize) -> Vec<String> {
    (0..k).flat_map(|i| [format!("lambda_{i}"), format!("mu_{i}")]).collect()
}

fn param_cells(params: &[LamePair<f64>]) -> impl Iterator<Item = String> + '_ {
    params.iter().flat_map(|p| [p.lambda.to_string(), p.mu.to_string()])
}

fn error_cells(e: &RelativeError<f64>) -> [String; 3] {
    [e.lambda.to_string(), e.mu.to_string(), e.joint.to_string()]
}

pub fn summary_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let path = Path::new(SUMMARY_FILE);
    let mut header: Vec<String> = ["run_id", "delta", "alpha", "seed"].map(String::from).to_vec();
    header.extend(param_header(report.region_count()));
    header.extend(
        ["delta_lambda", "delta_mu", "delta_joint", "best_delta_lambda", "best_delta_mu", "best_delta_joint", "wall_ms"]
            .map(String::from),
    );
    let rows = report.runs.iter().map(|r| {
        let mut row = vec![r.run_id.clone(), r.delta.to_string(), r.alpha.to_string(), r.seed.to_string()];
        row.extend(param_cells(&r.final_params));
        row.extend(error_cells(&r.final_error));
        row.extend(error_cells(&r.best_error));
        row.push(r.wall_ms.to_string());
        row
    });
    csv_bytes(path, header, rows)
}

pub fn trace_csv(run: &RunRecord, regions: usize) -> Result<Vec<u8>> {
    let path = Path::new(&run.run_id);
    let mut header: Vec<String> =
        ["iteration", "step", "objective", "residual", "penalty", "diameter"].map(String::from).to_vec();
    header.extend(param_header(regions));
    header.extend(["delta_lambda", "delta_mu", "delta_joint"].map(String::from));
    let rows = run.trace.iter().map(|t| {
        let step = serde_json::to_value(t.step).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let mut row = vec![
            t.iteration.to_string(),
            step,
            t.objective.to_string(),
            t.residual.to_string(),
            t.penalty.to_string(),
            t.diameter.to_string(),
        ];
        row.extend(param_cells(&t.params));
        row.extend(error_cells(&t.error));
        row
    });
    csv_bytes(path, header, rows)
}

pub fn trace_file_name(run_id: &str) -> String {
    format!("{run_id}.csv")
}

/// Writes summary, traces, images, manifest and the full report under `dir`; returns the written paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(String, Vec<u8>)> = vec![(SUMMARY_FILE.into(), summary_csv(report)?)];
    for run in &report.runs {
        let bytes = trace_csv(run, report.region_count()).map_err(|e| e.in_run(run.run_id.clone()))?;
        files.push((format!("{TRACE_DIR}/{}", trace_file_name(&run.run_id)), bytes));
    }
    if let Some(images) = &report.images {
        for (name, img) in [(REFERENCE_IMAGE, &images.reference), (DEFORMED_IMAGE, &images.deformed)] {
            let mut buf = Vec::new();
            img.write_pgm(&mut buf).map_err(|e| Error::io(dir.join(name), e))?;
            files.push((name.into(), buf));
        }
    }
    files.push((REPORT_FILE.into(), to_json(report)?));
    let mut names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
    names.push(MANIFEST_FILE.into());
    let manifest = Manifest {
        config: &report.config,
        truth: &report.truth,
        region_areas: &report.region_areas,
        interpolation_floor: report.interpolation_floor,
        statistics: report.statistics,
        runs: report.runs.iter().map(|r| r.run_id.as_str()).collect(),
        files: names,
    };
    files.push((MANIFEST_FILE.into(), to_json(&manifest)?));

    let traces = dir.join(TRACE_DIR);
    fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (rel, bytes) in files {
        let path = dir.join(rel);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads the `report.json` written by [`emit_report`]; images are not restored.
pub fn load_report(dir: &Path) -> Result<ExperimentReport> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::Format { kind: "JSON", detail: format!("{}: {e}", path.display()) })
}
