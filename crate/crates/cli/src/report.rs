//! Report JSON and series CSV.

use std::collections::BTreeMap;
use std::path::Path;

use backflow::certify::Certificate;
use backflow::dynamics::MapKind;
use backflow::witness::Witness;
use backflow::{DynamicalMap, TimeGrid, Tolerances, Verdict};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub map: MapInfo,
    pub grid: TimeGrid,
    pub interval: TimeGrid,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct MapInfo {
    pub label: String,
    pub dim: usize,
    pub kind: &'static str,
    pub source: String,
}

impl MapInfo {
    pub fn of(map: &DynamicalMap, source: impl Into<String>) -> MapInfo {
        MapInfo {
            label: map.label().to_string(),
            dim: map.dim(),
            kind: match map.kind() {
                MapKind::Analytic => "analytic",
                MapKind::Tabulated => "tabulated",
            },
            source: source.into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WitnessSummary {
    pub x_max: f64,
    pub time: f64,
    pub refuted: bool,
    pub witness: Witness,
}

/// One requested check. Grid checks carry a verdict, certificate checks a
/// certificate; multi-basis checks list their parts.
#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    /// Set when the check ran on a sub-interval of the report grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<TimeGrid>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl CheckResult {
    pub fn verdict(name: impl Into<String>, verdict: Verdict) -> CheckResult {
        CheckResult {
            name: name.into(),
            basis: None,
            interval: None,
            verdict: Some(verdict),
            certificate: None,
            witness: None,
            parts: vec![],
            wall_time_s: None,
        }
    }

    pub fn certificate(name: impl Into<String>, certificate: Certificate) -> CheckResult {
        CheckResult {
            verdict: None,
            certificate: Some(certificate),
            ..CheckResult::verdict(name, placeholder())
        }
    }

    pub fn on(mut self, interval: TimeGrid) -> CheckResult {
        self.interval = Some(interval);
        self
    }

    pub fn with_basis(mut self, basis: impl Into<String>) -> CheckResult {
        self.basis = Some(basis.into());
        self
    }
}

fn placeholder() -> Verdict {
    Verdict::single(0.0, 0.0, None)
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Columns aligned to a grid; missing cells stay empty.
pub struct Series {
    times: Vec<f64>,
    columns: Vec<(String, Vec<Option<f64>>)>,
}

impl Series {
    pub fn new(grid: &TimeGrid) -> Series {
        Series {
            times: grid.times(),
            columns: vec![],
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) {
        debug_assert_eq!(values.len(), self.times.len());
        self.columns.push((name.into(), values));
    }

    /// Per-point margins of a verdict, matched to grid times.
    pub fn push_verdict(&mut self, name: &str, v: &Verdict) {
        let mut col = vec![None; self.times.len()];
        for p in &v.points {
            if let Some(i) = self.times.iter().position(|&t| t == p.time) {
                col[i] = Some(p.margin);
            }
        }
        self.push(format!("{name}_margin (dimensionless)"), col);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Io {
            path: path.display().to_string(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header = vec!["t (time)".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header).map_err(io)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(
                self.columns
                    .iter()
                    .map(|(_, v)| v[i].map_or(String::new(), |x| x.to_string())),
            );
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}
