//! Run configurations, figure presets and result files.
//!
//! Config files are TOML (or JSON with the same shape):
//!
//! ```toml
//! kind = "sweep"
//!
//! [experiment]
//! field_sweep = [0.01, 0.1, 1.0]
//! epsilon_list = [0.0, 0.2]
//!
//! [experiment.reservoir]
//! n_qubits = 5
//! ```
//!
//! Missing keys take their defaults and unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    default_delta_t_grid, default_field_grid, mean_and_stderr, run_generalization, run_sweep_detailed,
    ExperimentConfig, SweepResult,
};
use crate::reservoir::ShotPlan;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QELM_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    /// Averaged test MSE per axis point and family.
    Sweep,
    /// Test predictions of the first realization, plus the averaged MSE.
    Scatter,
    /// Cross-domain training with single-point calibration.
    Generalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: RunKind,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig1Scatter,
    Fig2HSweep,
    Fig3DtSweep,
    Fig4Shots,
    Fig5Generalization,
    FigA1Extended,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Self::Fig1Scatter,
        Self::Fig2HSweep,
        Self::Fig3DtSweep,
        Self::Fig4Shots,
        Self::Fig5Generalization,
        Self::FigA1Extended,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1Scatter => "fig1-scatter",
            Self::Fig2HSweep => "fig2-h-sweep",
            Self::Fig3DtSweep => "fig3-dt-sweep",
            Self::Fig4Shots => "fig4-shots",
            Self::Fig5Generalization => "fig5-generalization",
            Self::FigA1Extended => "figA1-extended",
        }
    }

    pub fn config(self) -> RunConfig {
        let base = ExperimentConfig::default();
        let (kind, experiment) = match self {
            Self::Fig1Scatter => (RunKind::Scatter, base),
            Self::Fig2HSweep => (
                RunKind::Sweep,
                ExperimentConfig { field_sweep: default_field_grid(), epsilon_list: vec![0.0, 0.2, 0.5], ..base },
            ),
            Self::Fig3DtSweep => (
                RunKind::Sweep,
                ExperimentConfig { delta_t: default_delta_t_grid(), epsilon_list: vec![0.0, 0.5, 0.9], ..base },
            ),
            Self::Fig4Shots => (
                RunKind::Sweep,
                ExperimentConfig {
                    delta_t: default_delta_t_grid(),
                    epsilon_list: vec![0.2],
                    shots: vec![
                        ShotPlan::Finite(1000),
                        ShotPlan::Finite(5000),
                        ShotPlan::Finite(15000),
                        ShotPlan::Exact,
                    ],
                    ..base
                },
            ),
            Self::Fig5Generalization => {
                let mut e = ExperimentConfig { input_qubits_train: 2, input_qubits_test: 3, ..base };
                e.reservoir.n_qubits = 7;
                (RunKind::Generalization, e)
            }
            Self::FigA1Extended => (
                RunKind::Sweep,
                ExperimentConfig {
                    field_sweep: default_field_grid(),
                    epsilon_list: vec![0.2, 0.5, 0.9],
                    compare_correlation_orders: true,
                    ..base
                },
            ),
        };
        RunConfig { kind, experiment }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::MalformedConfig(format!("unknown preset {s:?}")))
    }
}

impl RunConfig {
    /// CI-sized variant: 3 realizations, 40 train and 40 test states.
    pub fn quick(&mut self) {
        self.experiment.realizations = 3;
        self.experiment.n_train = 40;
        self.experiment.n_test = 40;
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if self.kind == RunKind::Generalization && self.experiment.input_qubits_test < self.experiment.input_qubits_train {
            return Err(Error::InvalidConfig {
                path: "experiment.input_qubits_test".into(),
                reason: "must be at least input_qubits_train".into(),
            });
        }
        Ok(())
    }

    /// Applies `key=value`, where `key` is a dotted path relative to
    /// `experiment` (or `kind`) and `value` is a TOML literal.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::MalformedConfig(format!("expected key=value, got {assignment:?}")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let mut path: Vec<&str> = key.split('.').collect();
        if path.first() != Some(&"kind") && path.first() != Some(&"experiment") {
            path.insert(0, "experiment");
        }
        let value = parse_literal(raw);

        let mut tree = toml::Value::try_from(&*self).map_err(|e| Error::MalformedConfig(e.to_string()))?;
        let mut slot = &mut tree;
        for (depth, segment) in path.iter().enumerate() {
            let table = slot.as_table_mut().ok_or_else(|| Error::InvalidConfig {
                path: path[..depth].join("."),
                reason: "not a table".into(),
            })?;
            slot = table.get_mut(*segment).ok_or_else(|| Error::InvalidConfig {
                path: path[..=depth].join("."),
                reason: "unknown key".into(),
            })?;
        }
        *slot = value;
        *self = tree.try_into().map_err(|e: toml::de::Error| Error::InvalidConfig {
            path: path.join("."),
            reason: e.message().to_string(),
        })?;
        Ok(())
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn parse_config_str(text: &str, json: bool) -> Result<RunConfig> {
    let cfg: RunConfig = if json {
        serde_json::from_str(text).map_err(|e| Error::MalformedConfig(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| Error::MalformedConfig(e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let json = path.extension().is_some_and(|e| e == "json");
    parse_config_str(&text, json)
}

/// Command-line overrides, applied in this order: quick, sets, seed.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub quick: bool,
    pub sets: Vec<String>,
}

/// Resolves a preset name or config path plus overrides into a validated config.
pub fn parse_config(source: &str, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match Preset::from_str(source) {
        Ok(preset) => preset.config(),
        Err(_) if Path::new(source).exists() => {
            let path = Path::new(source);
            let text = fs::read_to_string(path)?;
            let json = path.extension().is_some_and(|e| e == "json");
            if json {
                serde_json::from_str(&text).map_err(|e| Error::MalformedConfig(e.to_string()))?
            } else {
                toml::from_str(&text).map_err(|e| Error::MalformedConfig(e.to_string()))?
            }
        }
        Err(e) => return Err(e),
    };
    if overrides.quick {
        cfg.quick();
    }
    for s in &overrides.sets {
        cfg.set(s)?;
    }
    if let Some(seed) = overrides.seed {
        cfg.experiment.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub axis: f64,
    pub family: String,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub family: String,
    pub target: f64,
    pub prediction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dressed: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub config_echo: RunConfig,
    /// Name of the swept parameter the `axis` column refers to.
    pub axis: String,
    pub series: Vec<SeriesRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_points: Option<Vec<RawPoint>>,
}

impl ResultRecord {
    pub fn from_sweep(config: &RunConfig, sweep: &SweepResult) -> Self {
        let mut series = Vec::new();
        for curve in &sweep.curves {
            for (i, &axis) in sweep.axis_values.iter().enumerate() {
                series.push(SeriesRow {
                    axis,
                    family: curve.family.clone(),
                    mean: curve.mean_test_mse[i],
                    stderr: curve.stderr_test_mse[i],
                });
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            config_echo: config.clone(),
            axis: sweep.axis.clone(),
            series,
            raw_points: None,
        }
    }
}

/// Runs a resolved configuration to completion.
pub fn execute(config: &RunConfig) -> Result<ResultRecord> {
    config.validate()?;
    match config.kind {
        RunKind::Sweep => Ok(ResultRecord::from_sweep(config, &run_sweep_detailed(&config.experiment, false)?)),
        RunKind::Scatter => {
            let sweep = run_sweep_detailed(&config.experiment, true)?;
            let points = sweep
                .per_realization
                .iter()
                .flatten()
                .filter(|r| r.realization == 0 && r.axis_index == 0)
                .flat_map(|r| {
                    r.result.targets.iter().zip(&r.result.predictions).map(|(&target, &prediction)| RawPoint {
                        family: r.family.clone(),
                        target,
                        prediction,
                        dressed: None,
                    })
                })
                .collect();
            let mut record = ResultRecord::from_sweep(config, &sweep);
            record.raw_points = Some(points);
            Ok(record)
        }
        RunKind::Generalization => {
            let g = run_generalization(&config.experiment)?;
            let axis = g.input_qubits_test as f64;
            let raw: Vec<f64> = g.runs.iter().map(|r| r.raw_mse).collect();
            let dressed: Vec<f64> = g.runs.iter().map(|r| r.dressed_mse).collect();
            let mut series = Vec::new();
            for (family, values) in [("raw", raw), ("dressed", dressed)] {
                let (mean, stderr) = mean_and_stderr(&values);
                series.push(SeriesRow { axis, family: family.into(), mean, stderr });
            }
            let first = &g.runs[0];
            let raw_points = (0..first.targets.len())
                .map(|k| RawPoint {
                    family: format!("n={}", g.input_qubits_test),
                    target: first.targets[k],
                    prediction: first.raw[k],
                    dressed: Some(first.dressed[k]),
                })
                .collect();
            Ok(ResultRecord {
                schema_version: SCHEMA_VERSION,
                config_echo: config.clone(),
                axis: "input_qubits_test".into(),
                series,
                raw_points: Some(raw_points),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::MalformedConfig(format!("unknown format {other:?}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV text: `axis,family,mean_mse,stderr_mse` for sweeps, or
/// `target,prediction[,dressed]` rows when the record carries raw points
/// (led by a `family` column if several families are present).
pub fn render_csv(record: &ResultRecord) -> String {
    let mut out = String::new();
    match &record.raw_points {
        Some(points) => {
            let dressed = points.iter().any(|p| p.dressed.is_some());
            let multi = points.iter().any(|p| p.family != points[0].family);
            if multi {
                out.push_str("family,");
            }
            out.push_str(if dressed { "target,prediction,dressed\n" } else { "target,prediction\n" });
            for p in points {
                if multi {
                    write!(out, "{},", csv_field(&p.family)).unwrap();
                }
                write!(out, "{},{}", p.target, p.prediction).unwrap();
                if dressed {
                    write!(out, ",{}", p.dressed.unwrap_or(f64::NAN)).unwrap();
                }
                out.push('\n');
            }
        }
        None => {
            out.push_str("axis,family,mean_mse,stderr_mse\n");
            for row in &record.series {
                writeln!(out, "{},{},{},{}", row.axis, csv_field(&row.family), row.mean, row.stderr).unwrap();
            }
        }
    }
    out
}

pub fn render_json(record: &ResultRecord) -> Result<String> {
    let mut s = serde_json::to_string_pretty(record)?;
    s.push('\n');
    Ok(s)
}

pub fn render(record: &ResultRecord, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(render_csv(record)),
        Format::Json => render_json(record),
    }
}

/// Writes through a sibling temp file and a rename, so a failed run never
/// leaves a partial file at `path`.
pub fn emit_results(record: &ResultRecord, format: Format, path: &Path) -> Result<PathBuf> {
    let text = render(record, format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".partial-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text.as_bytes()).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(path.to_path_buf())
}

pub fn read_record_json(text: &str) -> Result<ResultRecord> {
    Ok(serde_json::from_str(text)?)
}
