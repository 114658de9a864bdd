//! CSV and manifest writers. Numbers are printed in shortest round-trip
//! form so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use flavors::flavor::Trajectory;
use flavors::problems::Benchmark;
use serde::Serialize;

use crate::error::{CliError, CliResult, ErrorReport};

pub fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes a header and rows to `path` with RFC 4180 quoting.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    w.write_record(header).map_err(|e| CliError::format(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Observable columns appended to trajectory files: slow observables whose
/// names do not clash with state labels.
fn extra_observables(bench: &Benchmark) -> Vec<&flavors::system::SlowObservable> {
    bench.slow_observables.iter().filter(|o| !bench.state_labels.contains(&o.name)).collect()
}

/// `t, fast_clock, <state>, [energy], [slow observables]`.
pub fn write_trajectory(path: &Path, traj: &Trajectory, bench: &Benchmark) -> CliResult<()> {
    let extras = extra_observables(bench);
    let mut header = vec!["t".to_string(), "fast_clock".to_string()];
    header.extend(bench.state_labels.iter().cloned());
    if traj.energies.is_some() {
        header.push("energy".into());
    }
    header.extend(extras.iter().map(|o| o.name.clone()));
    let rows = (0..traj.len()).map(|k| {
        let mut row = vec![num(traj.times[k]), num(traj.fast_clock[k])];
        row.extend(traj.states[k].iter().map(|&x| num(x)));
        if let Some(e) = &traj.energies {
            row.push(num(e[k]));
        }
        row.extend(extras.iter().map(|o| num(o.eval(&traj.states[k])[0])));
        row
    });
    write_csv(path, &header, rows)
}

/// Long-format diagnostics: one `(quantity, t, value)` row per entry;
/// scalar quantities leave `t` empty.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Diagnostics {
    pub rows: Vec<(String, Option<f64>, f64)>,
}

impl Diagnostics {
    pub fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.rows.push((name.into(), None, value));
    }

    pub fn series(&mut self, name: &str, times: &[f64], values: &[f64]) {
        self.rows.extend(times.iter().zip(values).map(|(&t, &v)| (name.to_string(), Some(t), v)));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|(n, t, _)| n == name && t.is_none()).map(|r| r.2)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let header = ["quantity", "t", "value"].map(String::from);
        write_csv(path, &header, self.rows.iter().map(|(n, t, v)| vec![n.clone(), opt_num(*t), num(*v)]))
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Some ensemble members failed; outputs cover the rest.
    Partial,
    Failed,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Counts {
    pub mesosteps: u64,
    pub legacy_calls: u64,
    pub stiff_calls: u64,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MemberFailure {
    pub index: usize,
    pub seed: u64,
    pub mesosteps_completed: u64,
    pub time: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedInfo>,
    pub counts: Counts,
    pub failures: Vec<MemberFailure>,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool: "flavors",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            status: Status::Ok,
            error: None,
            config,
            benchmark: None,
            seeds: None,
            counts: Counts::default(),
            failures: Vec::new(),
            files: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn fail(&mut self, e: &CliError) {
        self.status = Status::Failed;
        self.error = Some(e.report());
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        create_dir(dir)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::format(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkInfo {
    pub name: String,
    pub description: String,
    pub family: &'static str,
    pub epsilon: f64,
    pub params: std::collections::BTreeMap<String, f64>,
    pub initial_state: Vec<f64>,
    pub state_labels: Vec<String>,
}

impl BenchmarkInfo {
    pub fn of(b: &Benchmark) -> Self {
        Self {
            name: b.name.clone(),
            description: b.anchor.clone(),
            family: b.model.family(),
            epsilon: b.epsilon(),
            params: b.params.iter().cloned().collect(),
            initial_state: b.initial_state.clone(),
            state_labels: b.state_labels.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedInfo {
    pub base: u64,
    pub derivation: &'static str,
    pub trajectory_seeds: Vec<u64>,
}

pub const SEED_DERIVATION: &str =
    "trajectory i: first u64 of ChaCha8 seeded from the base seed on stream i; mesostep k: ChaCha8 seeded from the trajectory seed on stream k";
