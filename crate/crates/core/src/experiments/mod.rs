//! Scripted studies with CSV and JSON output.
//!
//! Each experiment turns an [`ExperimentSpec`] into an [`ExperimentResult`]:
//! a table of rows, a list of named checks with their thresholds, and an
//! overall verdict. The CSV carries the parameters, the seed and every check as
//! `#` lines ahead of the header, so a file is self-describing. Replica
//! streams depend only on the master seed and the cell (one `N`, `k` or
//! `gamma`), never on the worker count, so reruns are byte-identical.

mod concentration;
mod exponentiality;
mod races;
mod scan;
pub mod validation;

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::Workers;
use crate::error::{Error, Result};
use crate::output::{fmt_f64, CsvTable};

pub use concentration::lattice_concentration;
pub use exponentiality::complete_exponentiality;
pub use races::{ek, survival_bound};
pub use scan::gamma_scan;
pub use validation::{validation_suite, ValidationReport, ValidationRow};

/// Smallest replica count accepted by the statistical experiments.
pub const MIN_REPLICAS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    LatticeConcentration,
    CompleteExponentiality,
    SurvivalBound,
    Ek,
    GammaScan,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::LatticeConcentration,
        ExperimentName::CompleteExponentiality,
        ExperimentName::SurvivalBound,
        ExperimentName::Ek,
        ExperimentName::GammaScan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::LatticeConcentration => "lattice_concentration",
            ExperimentName::CompleteExponentiality => "complete_exponentiality",
            ExperimentName::SurvivalBound => "survival_bound",
            ExperimentName::Ek => "ek",
            ExperimentName::GammaScan => "gamma_scan",
        }
    }

    pub fn topology(self) -> &'static str {
        match self {
            ExperimentName::CompleteExponentiality | ExperimentName::Ek => "complete",
            _ => "lattice",
        }
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentName::ALL.iter().map(|e| e.as_str()).collect();
                Error::InvalidParameter(format!("unknown experiment `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one experiment run. Fields an experiment does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    /// System sizes: the lattice half-width or the complete-graph size.
    pub ns: Vec<usize>,
    pub gamma: f64,
    /// Leak rates of `gamma_scan`.
    pub gammas: Vec<f64>,
    /// Initial active counts of `ek`.
    pub ks: Vec<usize>,
    /// Probe times of `survival_bound`.
    pub times: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// `None` runs every replica to extinction.
    pub horizon: Option<f64>,
    /// Largest coefficient of variation accepted at the top of the lattice ladder.
    pub cv_threshold: f64,
}

impl ExperimentSpec {
    /// The desk-scale defaults of each experiment.
    pub fn defaults(name: ExperimentName) -> ExperimentSpec {
        let base = ExperimentSpec {
            name,
            ns: vec![],
            gamma: 2.0,
            gammas: vec![],
            ks: vec![],
            times: vec![],
            replicas: 2000,
            seed: DEFAULT_SEED,
            horizon: None,
            cv_threshold: 0.15,
        };
        match name {
            ExperimentName::LatticeConcentration => ExperimentSpec { ns: vec![50, 100, 200, 400], ..base },
            ExperimentName::CompleteExponentiality => {
                ExperimentSpec { ns: vec![10, 50, 200], gamma: 1.0, replicas: 20_000, ..base }
            }
            ExperimentName::SurvivalBound => {
                ExperimentSpec { ns: vec![50], times: vec![0.5, 1.0, 2.0, 3.0], replicas: 100_000, ..base }
            }
            ExperimentName::Ek => {
                ExperimentSpec { ns: vec![10], gamma: 1.0, ks: vec![1, 2, 5], replicas: 100_000, ..base }
            }
            ExperimentName::GammaScan => ExperimentSpec {
                ns: vec![50],
                gammas: vec![0.1, 0.5, 1.0, 1.5, 2.0, 3.0],
                replicas: 200,
                horizon: Some(1e3),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.replicas < MIN_REPLICAS {
            return bad(format!("{} needs at least {MIN_REPLICAS} replicas, got {}", self.name, self.replicas));
        }
        if self.ns.is_empty() {
            return bad(format!("{} needs at least one system size", self.name));
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h > 0.0) {
                return bad(format!("horizon must be finite and positive, got {h}"));
            }
        }
        let gammas: &[f64] = if self.name == ExperimentName::GammaScan { &self.gammas } else { std::slice::from_ref(&self.gamma) };
        if gammas.is_empty() {
            return bad("gamma_scan needs at least one gamma".into());
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return bad(format!("experiments need a finite gamma > 0, got {g}"));
        }
        match self.name {
            ExperimentName::LatticeConcentration | ExperimentName::SurvivalBound if self.gamma <= 1.0 => bad(format!(
                "{} needs gamma > 1: concentration and the branching bound hold only in the supercritical-leak regime, got {}",
                self.name, self.gamma
            )),
            ExperimentName::CompleteExponentiality if self.ns.contains(&0) => bad("complete graphs need n >= 1".into()),
            ExperimentName::Ek => {
                let n = self.ns[0];
                if self.ns.len() != 1 {
                    return bad("ek takes a single n".into());
                }
                if self.ks.is_empty() {
                    return bad("ek needs at least one k".into());
                }
                match self.ks.iter().find(|k| !(1..=n).contains(*k)) {
                    Some(k) => bad(format!("ek needs 1 <= k <= n = {n}, got k = {k}")),
                    None => Ok(()),
                }
            }
            ExperimentName::SurvivalBound if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) => {
                bad("survival_bound times must be finite and non-negative".into())
            }
            ExperimentName::SurvivalBound if self.times.is_empty() => bad("survival_bound needs probe times".into()),
            ExperimentName::GammaScan if self.horizon.is_none() => {
                bad("gamma_scan needs a finite horizon: small gamma runs may not end in reasonable time".into())
            }
            _ => Ok(()),
        }
    }
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // Non-finite floats have no JSON form; keep the CSV spelling.
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(fmt_f64(*v)),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A named pass/fail condition and the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Check {
        Check { name: name.to_string(), detail, pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    /// Extra provenance lines (sampler choices, caveats).
    pub notes: Vec<(String, String)>,
    /// `None` for descriptive experiments.
    pub pass: Option<bool>,
    pub runtime_s: f64,
}

impl ExperimentResult {
    fn new(spec: &ExperimentSpec, header: Vec<&'static str>) -> ExperimentResult {
        ExperimentResult {
            spec: spec.clone(),
            header,
            rows: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            pass: None,
            runtime_s: 0.0,
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    fn conclude(&mut self) {
        self.pass = Some(self.checks.iter().all(|c| c.pass));
    }

    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    /// Column `name` as floats (integers are widened).
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|c| match c {
                Cell::Float(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect()
    }

    pub fn params(&self) -> Value {
        let mut v = serde_json::to_value(&self.spec).expect("spec serializes");
        v["topology"] = json!(self.spec.name.topology());
        v
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(self.header.iter().copied());
        t.comment("experiment", self.spec.name);
        t.comment("version", env!("CARGO_PKG_VERSION"));
        t.comment("seed", self.spec.seed);
        t.comment("params", self.params());
        for (k, v) in &self.notes {
            t.comment(k.clone(), v);
        }
        for c in &self.checks {
            t.comment(format!("check.{}", c.name), format!("{} ({})", if c.pass { "PASS" } else { "FAIL" }, c.detail));
        }
        t.comment("pass", self.pass.map_or("n/a".to_string(), |p| p.to_string()));
        for r in &self.rows {
            t.push(r.iter().map(Cell::csv).collect());
        }
        t
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: serde_json::Map<String, Value> =
                    self.header.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect();
                Value::Object(m)
            })
            .collect();
        json!({
            "name": self.spec.name.as_str(),
            "params": self.params(),
            "seed": self.spec.seed,
            "rows": rows,
            "pass": self.pass,
            "checks": self.checks,
            "notes": self.notes.iter().map(|(k, v)| json!({"key": k, "value": v})).collect::<Vec<_>>(),
            "version": env!("CARGO_PKG_VERSION"),
            "runtime_s": self.runtime_s,
        })
    }

    /// Writes `path` (CSV) and the JSON summary next to it with extension `.json`.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        self.to_csv().save(path)?;
        let json_path = path.with_extension("json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&self.to_json())? + "\n")?;
        Ok(json_path)
    }
}

/// Validates `spec` and runs the experiment it names.
pub fn run_experiment(spec: &ExperimentSpec, workers: Workers) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut result = match spec.name {
        ExperimentName::LatticeConcentration => lattice_concentration(spec, workers)?,
        ExperimentName::CompleteExponentiality => complete_exponentiality(spec, workers)?,
        ExperimentName::SurvivalBound => survival_bound(spec, workers)?,
        ExperimentName::Ek => ek(spec, workers)?,
        ExperimentName::GammaScan => gamma_scan(spec, workers)?,
    };
    result.runtime_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// `|a - b| <= k * se` with the thresholds spelled out.
fn within(name: &str, value: f64, target: f64, se: f64, k: f64) -> Check {
    let pass = (value - target).abs() <= k * se;
    Check::new(name, pass, format!("|{} - {}| <= {k} * {}", fmt_f64(value), fmt_f64(target), fmt_f64(se)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        let err = "nope".parse::<ExperimentName>().unwrap_err().to_string();
        assert!(err.contains("lattice_concentration"));
    }

    #[test]
    fn guards_run_before_any_simulation() {
        for name in ExperimentName::ALL {
            let mut spec = ExperimentSpec::defaults(name);
            spec.gamma = 0.0;
            spec.gammas = vec![0.0];
            assert!(run_experiment(&spec, Workers::default()).is_err(), "{name}");
        }
        let mut spec = ExperimentSpec::defaults(ExperimentName::LatticeConcentration);
        spec.gamma = 1.0;
        assert!(spec.validate().unwrap_err().to_string().contains("gamma > 1"));
        let mut spec = ExperimentSpec::defaults(ExperimentName::Ek);
        spec.ks = vec![11];
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::defaults(ExperimentName::GammaScan);
        spec.horizon = None;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::defaults(ExperimentName::Ek);
        spec.replicas = 99;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        for name in ExperimentName::ALL {
            ExperimentSpec::defaults(name).validate().unwrap();
        }
    }
}
