//! Result files: per-agent CSV traces, metrics summary, convergence gains
//! and a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{ErrorMetrics, RunResult};
use crate::lti::Signal;
use crate::reference::ReferenceTrajectory;
use crate::scalar::Scalar;

pub const TRACE_HEADER: [&str; 13] = [
    "t", "rx", "ry", "rz", "x", "y", "z", "hx", "hy", "hz", "sx", "sy", "sz",
];

/// Error statistics of one flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub name: String,
    /// `target`, `baseline` or `trainer`.
    pub role: String,
    /// Trace file the numbers are computed from.
    pub file: String,
    /// Leading rows of `file` the statistics cover.
    pub samples: usize,
    pub rms: [f64; 3],
    /// RMS over all three axes together.
    pub rms_total: f64,
    pub max: [f64; 3],
    pub max_total: f64,
    /// `rms_total` over the baseline's `rms_total`.
    pub ratio_vs_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub margin: f64,
    pub bound_strict: f64,
    pub bound_unified: f64,
    pub satisfied_strict: bool,
    pub satisfied_unified: bool,
    pub per_block_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub trainer: usize,
    pub taps: usize,
    pub lead: usize,
    pub design_residual: f64,
    pub map_fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub sample_period: f64,
    pub agents: Vec<AgentMetrics>,
    pub convergence: Option<ConvergenceSummary>,
    pub filters: Vec<FilterSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    /// Data rows, header excluded; absent for non-tabular files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn num<S: Scalar>(v: S) -> String {
    format!("{}", v.to_f64_lossy())
}

fn agent_metrics<S: Scalar>(
    name: &str,
    role: &str,
    file: &str,
    samples: usize,
    m: &ErrorMetrics<S>,
    baseline_rms: S,
) -> AgentMetrics {
    let ratio = if baseline_rms > S::zero() {
        (m.rms_total / baseline_rms).to_f64_lossy()
    } else {
        0.0
    };
    AgentMetrics {
        name: name.into(),
        role: role.into(),
        file: file.into(),
        samples,
        rms: m.rms.map(|v| v.to_f64_lossy()),
        rms_total: m.rms_total.to_f64_lossy(),
        max: m.max.map(|v| v.to_f64_lossy()),
        max_total: m.max_total.to_f64_lossy(),
        ratio_vs_baseline: ratio,
    }
}

/// Summary of a run; trainer statistics cover the target's horizon.
pub fn metrics_summary<S: Scalar>(run: &RunResult<S>, target_name: &str) -> MetricsSummary {
    let n = run.target_h.len();
    let base = run.metrics.baseline.rms_total;
    let mut agents = vec![
        agent_metrics(target_name, "target", "target.csv", n, &run.metrics.target, base),
        agent_metrics(
            target_name,
            "baseline",
            "baseline.csv",
            n,
            &run.metrics.baseline,
            base,
        ),
    ];
    for (k, (rec, m)) in run.per_trainer.iter().zip(&run.metrics.trainers).enumerate() {
        agents.push(agent_metrics(
            &rec.trainer,
            "trainer",
            &trainer_file(k),
            n,
            m,
            base,
        ));
    }
    let convergence = run.convergence.as_ref().map(|c| ConvergenceSummary {
        margin: c.margin.to_f64_lossy(),
        bound_strict: c.bound_strict.to_f64_lossy(),
        bound_unified: c.bound_unified.to_f64_lossy(),
        satisfied_strict: c.satisfied_strict,
        satisfied_unified: c.satisfied_unified,
        per_block_norms: c.per_block_norms.iter().map(|v| v.to_f64_lossy()).collect(),
    });
    let filters = run
        .filters
        .filters
        .iter()
        .zip(&run.maps)
        .enumerate()
        .map(|(k, (f, m))| FilterSummary {
            trainer: k + 1,
            taps: f.taps,
            lead: f.lead,
            design_residual: f.design_residual.to_f64_lossy(),
            map_fit_residual: m.fit_residual.to_f64_lossy(),
        })
        .collect();
    MetricsSummary {
        sample_period: run.target_h.sample_period().to_f64_lossy(),
        agents,
        convergence,
        filters,
    }
}

/// `trainer_<k>.csv`, `k` counted from 1.
pub fn trainer_file(index: usize) -> String {
    format!("trainer_{}.csv", index + 1)
}

/// One row per sample: time, reference, realized position, error, learning
/// signal.
pub fn write_trace<S: Scalar>(
    path: &Path,
    reference: &ReferenceTrajectory<S>,
    h: &Signal<S>,
    s: &Signal<S>,
) -> Result<usize> {
    let r = &reference.signal;
    if h.len() != r.len() || s.len() != r.len() {
        return Err(Error::DimensionMismatch(format!(
            "trace for {} mixes lengths {}, {} and {}",
            path.display(),
            r.len(),
            h.len(),
            s.len()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(TRACE_HEADER).map_err(|e| io_err(path, e))?;
    let ts = r.sample_period();
    let mut row = Vec::with_capacity(TRACE_HEADER.len());
    for i in 0..r.len() {
        row.clear();
        row.push(num(ts * S::from_usize_lossy(i)));
        let (rr, hh, ss) = (r.sample(i), h.sample(i), s.sample(i));
        row.extend(rr.iter().map(|&v| num(v)));
        row.extend(rr.iter().zip(hh).map(|(&a, &b)| num(a - b)));
        row.extend(hh.iter().map(|&v| num(v)));
        row.extend(ss.iter().map(|&v| num(v)));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(r.len())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_convergence<S: Scalar>(path: &Path, run: &RunResult<S>) -> Result<usize> {
    let Some(c) = &run.convergence else {
        return Ok(0);
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["omega".to_string(), "stacked".to_string()];
    header.extend((1..=c.blocks()).map(|k| format!("block_{k}")));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (i, &omega) in c.omegas.iter().enumerate() {
        let mut row = vec![num(omega), num(c.stacked_gains[i])];
        row.extend(c.block_gains.iter().map(|g| num(g[i])));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(c.omegas.len())
}

/// Writes every result file into `dir` (created if needed) and returns the
/// manifest, which is also written as `manifest.json`.
pub fn export_results<S: Scalar>(
    run: &RunResult<S>,
    target_name: &str,
    dir: &Path,
    with_convergence: bool,
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    let mut add = |file: String, rows: Option<usize>| files.push(ManifestEntry { file, rows });

    let rows = write_trace(
        &dir.join("target.csv"),
        &run.reference,
        &run.target_h,
        &run.composed_s,
    )?;
    add("target.csv".into(), Some(rows));
    let zeros = run.composed_s.scaled(S::zero());
    let rows = write_trace(&dir.join("baseline.csv"), &run.reference, &run.baseline_h, &zeros)?;
    add("baseline.csv".into(), Some(rows));
    for (k, rec) in run.per_trainer.iter().enumerate() {
        let name = trainer_file(k);
        let rows = write_trace(&dir.join(&name), &rec.reference, &rec.h_k, &rec.s_k)?;
        add(name, Some(rows));
    }
    if with_convergence && run.convergence.is_some() {
        let rows = write_convergence(&dir.join("convergence.csv"), run)?;
        add("convergence.csv".into(), Some(rows));
    }
    write_json(&dir.join("metrics.json"), &metrics_summary(run, target_name))?;
    add("metrics.json".into(), None);

    let manifest = Manifest { files };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Every file a manifest lists, as paths under `dir`.
pub fn manifest_paths(dir: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    manifest.files.iter().map(|f| dir.join(&f.file)).collect()
}
