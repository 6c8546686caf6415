//! Built-in scenarios, their configuration and report files.
//!
//! A scenario is a fixed experiment with a list of checks. Running it writes
//! `<scenario>.json` (floats rounded to 12 significant digits) plus optional
//! CSV tables and SVG charts into the output directory.

mod runners;
pub mod svg;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ambient::ModelKind;
use crate::error::{Error, Result};
use crate::transport::DecomposeOptions;

pub const DEFAULT_OUT_DIR: &str = "maslov-out";
pub const OUT_DIR_ENV: &str = "MASLOV_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(Error::NotApplicable(format!("unknown format {other:?} (json, csv, svg)"))),
        }
    }
}

/// Everything that determines a run. Unset fields fall back to scenario defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub model: Option<ModelKind>,
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub ladder: Option<Vec<usize>>,
    pub theta: Option<f64>,
    /// Flow step size.
    pub epsilon: Option<f64>,
    pub steps: Option<usize>,
    /// Football amplitude or potential strength.
    pub amplitude: Option<f64>,
    /// Number of random Hamiltonians.
    pub functions: Option<usize>,
    pub degree: Option<u32>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    /// Scenario measured by `convergence`.
    pub target: Option<String>,
    pub tolerances: Option<DecomposeOptions>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub threads: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `overrides` replace ours.
    pub fn merged(mut self, overrides: ScenarioConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(if overrides.$f.is_some() { self.$f = overrides.$f; })*};
        }
        take!(
            scenario,
            model,
            n,
            n1,
            n2,
            ladder,
            theta,
            epsilon,
            steps,
            amplitude,
            functions,
            degree,
            max_iterations,
            seed,
            target,
            tolerances,
            out,
            formats,
            threads
        );
        self
    }

    pub fn formats(&self) -> Vec<Format> {
        self.formats.clone().unwrap_or_else(|| vec![Format::Json])
    }

    /// `--out`, then the config file, then `MASLOV_OUT`, then the default.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn tolerances(&self) -> DecomposeOptions {
        self.tolerances.unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const CATALOG: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "flat-circle",
        description:
            "unit circle in C: Maslov 1 (2 for the squared bundle), curvature cross-check, collapse under descent",
    },
    ScenarioInfo {
        name: "flat-product-torus",
        description: "product of circles in C^2: Maslov (1,1) and (2,2), trivial Ricci identity",
    },
    ScenarioInfo {
        name: "elliptic-line",
        description: "closed straight line on the square elliptic curve: special, Bohr-Sommerfeld, Maslov 0",
    },
    ScenarioInfo {
        name: "elliptic-invariance",
        description: "random Hamiltonian flows of the elliptic line: Maslov integers stay constant",
    },
    ScenarioInfo {
        name: "sphere-latitude",
        description: "latitude circles on the round sphere: Bohr-Sommerfeld defects and minimality classes",
    },
    ScenarioInfo {
        name: "sphere-descent",
        description: "isodrastic volume descent from a perturbed great circle to a geodesic",
    },
    ScenarioInfo {
        name: "football-descent",
        description: "isodrastic volume descent on a conformally deformed sphere",
    },
    ScenarioInfo {
        name: "potential-torus-ricci",
        description: "Lagrangian torus in a potential-deformed flat torus: d alpha_H against the Ricci form",
    },
    ScenarioInfo {
        name: "halfweight-demo",
        description: "phase-weighted half densities on elliptic lines, normalized to total mass r",
    },
    ScenarioInfo {
        name: "convergence",
        description: "refinement ladder for another scenario: residual table and observed order",
    },
];

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    CATALOG
}

pub fn scenario_names() -> Vec<&'static str> {
    CATALOG.iter().map(|s| s.name).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    /// `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check::new(name, value < bound, format!("{value:.3e} < {bound:.1e}"))
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check::new(name, (lo..=hi).contains(&value), format!("{value:.4} in [{lo}, {hi}]"))
    }

    pub fn equal<T: PartialEq + fmt::Debug>(name: impl Into<String>, got: &T, want: &T) -> Self {
        Check::new(name, got == want, format!("{got:?} == {want:?}"))
    }
}

/// Everything a scenario produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub data: serde_json::Map<String, Value>,
    pub tables: Vec<(String, String)>,
    pub charts: Vec<(String, String)>,
}

impl Outcome {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn put<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.data.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub config: ScenarioConfig,
    pub results: serde_json::Map<String, Value>,
}

impl ScenarioReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Pretty JSON with floats rounded to 12 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        round_floats(&mut value);
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }
}

pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            if let Some(r) = serde_json::Number::from_f64(rounded) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Run a scenario without writing anything. Unknown names are a configuration error.
pub fn run_scenario(name: &str, config: &ScenarioConfig) -> Result<ScenarioReport> {
    let outcome = runners::dispatch(name, config)?;
    Ok(report(name, config, outcome))
}

fn report(name: &str, config: &ScenarioConfig, outcome: Outcome) -> ScenarioReport {
    ScenarioReport {
        scenario: name.to_string(),
        passed: outcome.checks.iter().all(|c| c.passed),
        checks: outcome.checks,
        config: config.clone(),
        results: outcome.data,
    }
}

/// Run and write the requested formats; returns the report and written paths.
pub fn run_and_write(name: &str, config: &ScenarioConfig) -> Result<(ScenarioReport, Vec<PathBuf>)> {
    let outcome = runners::dispatch(name, config)?;
    let tables = outcome.tables.clone();
    let charts = outcome.charts.clone();
    let report = report(name, config, outcome);
    let dir = config.out_dir();
    std::fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    let formats = config.formats();
    if formats.contains(&Format::Json) {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, report.to_json()?)?;
        written.push(path);
    }
    if formats.contains(&Format::Csv) {
        for (stem, body) in &tables {
            let path = dir.join(format!("{name}-{stem}.csv"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    if formats.contains(&Format::Svg) {
        for (stem, body) in &charts {
            let path = dir.join(format!("{name}-{stem}.svg"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok((report, written))
}

/// Least-squares slope of `log r` against `log(1/N)`.
pub fn observed_order(resolutions: &[usize], residuals: &[f64]) -> f64 {
    let xs: Vec<f64> = resolutions.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests;
