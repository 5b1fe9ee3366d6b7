//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export runs a small experiment synchronously and returns a JSON
//! string, so the page needs no generated type glue beyond plain strings.

use qelm::harness::{run_generalization, run_sweep, run_sweep_detailed, ExperimentConfig};
use qelm::reservoir::ReservoirSpec;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Scatter {
    targets: Vec<f64>,
    predictions: Vec<f64>,
    test_mse: f64,
    train_mse: f64,
}

#[derive(Serialize)]
struct Sweep {
    h: Vec<f64>,
    mean: Vec<f64>,
    stderr: Vec<f64>,
}

#[derive(Serialize)]
struct Generalization {
    targets: Vec<f64>,
    raw: Vec<f64>,
    dressed: Vec<f64>,
    raw_mse: f64,
    dressed_mse: f64,
}

fn to_js<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

fn js_err(e: qelm::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn base(seed: u64, realizations: usize) -> ExperimentConfig {
    ExperimentConfig { master_seed: seed, realizations, ..ExperimentConfig::default() }
}

/// One trained reservoir: test predictions against their targets.
#[wasm_bindgen]
pub fn scatter(epsilon: f64, field_strength: f64, delta_t: f64, seed: u64) -> Result<String, JsError> {
    let cfg = ExperimentConfig {
        reservoir: ReservoirSpec { field_strength, ..ReservoirSpec::default() },
        delta_t: vec![delta_t],
        epsilon_list: vec![epsilon],
        ..base(seed, 1)
    };
    let sweep = run_sweep_detailed(&cfg, true).map_err(js_err)?;
    let rec = sweep.per_realization.and_then(|mut v| v.pop()).ok_or_else(|| JsError::new("empty run"))?;
    to_js(&Scatter {
        targets: rec.result.targets,
        predictions: rec.result.predictions,
        test_mse: rec.result.test_mse,
        train_mse: rec.result.train_mse,
    })
}

/// Mean test MSE over a log-spaced field grid.
#[wasm_bindgen]
pub fn field_sweep(epsilon: f64, points: usize, realizations: usize, seed: u64) -> Result<String, JsError> {
    let cfg = ExperimentConfig {
        field_sweep: qelm::harness::log_grid(0.01, 2.0, points.max(2)),
        epsilon_list: vec![epsilon],
        ..base(seed, realizations.max(2))
    };
    let sweep = run_sweep(&cfg).map_err(js_err)?;
    let curve = &sweep.curves[0];
    to_js(&Sweep { h: sweep.axis_values.clone(), mean: curve.mean_test_mse.clone(), stderr: curve.stderr_test_mse.clone() })
}

/// Train on two-qubit Werner states, test on larger ones, dress with the first test point.
#[wasm_bindgen]
pub fn generalization(test_qubits: usize, seed: u64) -> Result<String, JsError> {
    let mut cfg = ExperimentConfig { input_qubits_test: test_qubits, ..base(seed, 1) };
    cfg.reservoir.n_qubits = 7;
    let g = run_generalization(&cfg).map_err(js_err)?;
    let run = g.runs.into_iter().next().ok_or_else(|| JsError::new("empty run"))?;
    to_js(&Generalization {
        targets: run.targets,
        raw: run.raw,
        dressed: run.dressed,
        raw_mse: run.raw_mse,
        dressed_mse: run.dressed_mse,
    })
}
