//! Train/test pipelines over reservoir realizations and parameter sweeps.
//!
//! Every random draw comes from a stream addressed by its coordinates:
//!
//! | draw                           | label path                               |
//! |--------------------------------|------------------------------------------|
//! | couplings of realization `r`   | `[r, 0]`                                 |
//! | train input `k`                | `[r, 1, k]` (target, noise, reservoir)   |
//! | test input `k`                 | `[r, 2, k]`                              |
//! | shared reservoir state         | `[r, 3]` (fixed-reservoir ablation only) |
//! | shots                          | `[r, 4, phase, k, point, shot_plan]`     |
//!
//! so results do not depend on scheduling, and every axis point and family
//! of a sweep sees the same couplings and the same inputs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{normalize_probabilities, product_state_diagonals, DensityMatrix};
use crate::readout::{
    dress_predictions, fit_readout_ridge, mean_squared_error, predict_all, CalibrationPoint, DesignMatrix,
};
use crate::reservoir::{
    estimate_features_from_shots, features_from_probabilities, sample_from_probabilities, CorrelationOrder,
    CouplingMatrix, FeatureSpec, Reservoir, ReservoirSpec, ShotPlan,
};
use crate::states::{apply_input_noise, make_werner, random_density, EnsembleKind, NoiseParams, RandomStateEnsemble, WernerParams};
use crate::stream::{derive_substream, Stream};

const TAG_COUPLINGS: u64 = 0;
const TAG_TRAIN: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_FIXED_RESERVOIR: u64 = 3;
const TAG_SHOTS: u64 = 4;

/// 20 log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

pub fn default_field_grid() -> Vec<f64> {
    log_grid(0.01, 2.0, 20)
}

pub fn default_delta_t_grid() -> Vec<f64> {
    log_grid(0.1, 50.0, 20)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub reservoir: ReservoirSpec,
    /// One value, or the swept Δt axis.
    pub delta_t: Vec<f64>,
    /// Swept `h` values; empty means `reservoir.field_strength` alone.
    pub field_sweep: Vec<f64>,
    pub epsilon_list: Vec<f64>,
    pub shots: Vec<ShotPlan>,
    pub n_train: usize,
    pub n_test: usize,
    pub realizations: usize,
    pub feature_spec: FeatureSpec,
    /// Also fit the other correlation order on the same measurements.
    pub compare_correlation_orders: bool,
    pub input_qubits_train: usize,
    pub input_qubits_test: usize,
    pub master_seed: u64,
    /// Ensemble of the reservoir states `R_k`.
    pub reservoir_ensemble: EnsembleKind,
    /// Ensemble of the input noise states `r_k`.
    pub noise_ensemble: EnsembleKind,
    /// Draw a new reservoir state for every input (off: one per realization).
    pub fresh_reservoir_states: bool,
    pub ridge: f64,
    pub allow_underdetermined: bool,
    /// Test element whose target is revealed for dressing.
    pub calibration_index: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            reservoir: ReservoirSpec::default(),
            delta_t: vec![10.0],
            field_sweep: Vec::new(),
            epsilon_list: vec![0.0],
            shots: vec![ShotPlan::Exact],
            n_train: 100,
            n_test: 100,
            realizations: 20,
            feature_spec: FeatureSpec::default(),
            compare_correlation_orders: false,
            input_qubits_train: 2,
            input_qubits_test: 2,
            master_seed: 2024,
            reservoir_ensemble: EnsembleKind::HilbertSchmidtMixed,
            noise_ensemble: EnsembleKind::HilbertSchmidtMixed,
            fresh_reservoir_states: true,
            ridge: 0.0,
            allow_underdetermined: false,
            calibration_index: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    FieldStrength,
    DeltaT,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::FieldStrength => "h",
            Self::DeltaT => "delta_t",
        }
    }
}

/// One curve of a sweep: a noise level, a shot plan and a feature set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Family {
    pub epsilon: f64,
    pub shots: ShotPlan,
    pub shots_index: usize,
    pub order: CorrelationOrder,
}

impl Family {
    pub fn label(&self) -> String {
        format!("eps={}/shots={}/features={}", self.epsilon, self.shots.label(), self.order.label())
    }
}

fn invalid(path: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { path: path.to_string(), reason: reason.into() }
}

impl ExperimentConfig {
    pub fn field_points(&self) -> Vec<f64> {
        if self.field_sweep.is_empty() {
            vec![self.reservoir.field_strength]
        } else {
            self.field_sweep.clone()
        }
    }

    pub fn axis(&self) -> Result<SweepAxis> {
        match (self.field_points().len() > 1, self.delta_t.len() > 1) {
            (true, true) => Err(Error::InvalidSweep("both h and delta_t are swept".into())),
            (false, true) => Ok(SweepAxis::DeltaT),
            _ => Ok(SweepAxis::FieldStrength),
        }
    }

    pub fn axis_values(&self) -> Result<Vec<f64>> {
        Ok(match self.axis()? {
            SweepAxis::FieldStrength => self.field_points(),
            SweepAxis::DeltaT => self.delta_t.clone(),
        })
    }

    pub fn orders(&self) -> Vec<CorrelationOrder> {
        if self.compare_correlation_orders {
            vec![CorrelationOrder::LocalZ, CorrelationOrder::LocalPlusZz]
        } else {
            vec![self.feature_spec.correlation_order]
        }
    }

    /// Families in output order: ε outermost, then shots, then feature order.
    pub fn families(&self) -> Vec<Family> {
        let mut out = Vec::new();
        for &epsilon in &self.epsilon_list {
            for (shots_index, &shots) in self.shots.iter().enumerate() {
                for order in self.orders() {
                    out.push(Family { epsilon, shots, shots_index, order });
                }
            }
        }
        out
    }

    /// Largest feature count any family fits.
    pub fn max_feature_count(&self) -> usize {
        self.orders()
            .into_iter()
            .map(|order| FeatureSpec { correlation_order: order, ..self.feature_spec }.len(self.reservoir.n_qubits))
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.reservoir.n_qubits;
        self.reservoir.validate().map_err(|e| invalid("reservoir", e.to_string()))?;
        if self.delta_t.is_empty() {
            return Err(invalid("delta_t", "at least one value is required"));
        }
        if let Some(bad) = self.delta_t.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(invalid("delta_t", format!("{bad} is not a finite non-negative time")));
        }
        if let Some(bad) = self.field_sweep.iter().find(|h| !h.is_finite()) {
            return Err(invalid("field_sweep", format!("{bad} is not finite")));
        }
        if self.epsilon_list.is_empty() {
            return Err(invalid("epsilon_list", "at least one value is required"));
        }
        if let Some(bad) = self.epsilon_list.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(invalid("epsilon_list", format!("{bad} is outside [0, 1]")));
        }
        if self.shots.is_empty() {
            return Err(invalid("shots", "at least one shot plan is required"));
        }
        for (path, v) in [("n_train", self.n_train), ("n_test", self.n_test), ("realizations", self.realizations)] {
            if v == 0 {
                return Err(invalid(path, "must be at least 1"));
            }
        }
        for (path, q) in [("input_qubits_train", self.input_qubits_train), ("input_qubits_test", self.input_qubits_test)] {
            if q < 2 {
                return Err(invalid(path, "input register needs at least 2 qubits"));
            }
            if q >= n {
                return Err(invalid(path, format!("{q} input qubits leave no reservoir qubit out of {n}")));
            }
        }
        let features = self.max_feature_count();
        if self.n_train < features && !self.allow_underdetermined {
            return Err(invalid(
                "n_train",
                format!(
                    "{} training states for {features} features is an under-determined regression \
                     (set allow_underdetermined = true to override)",
                    self.n_train
                ),
            ));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(invalid("ridge", "must be finite and non-negative"));
        }
        if self.calibration_index >= self.n_test {
            return Err(invalid("calibration_index", format!("must be below n_test = {}", self.n_test)));
        }
        self.axis().map_err(|e| invalid("field_sweep", e.to_string()))?;
        Ok(())
    }
}

/// Draws `count` noisy Werner inputs from one stream: per item the target
/// `p ~ U[0, 1]`, then a Hilbert-Schmidt noise state.
pub fn generate_dataset<R: Rng + ?Sized>(
    count: usize,
    input_qubits: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<(DensityMatrix, f64)>> {
    let noise = NoiseParams::new(epsilon)?;
    let ensemble = RandomStateEnsemble::new(EnsembleKind::HilbertSchmidtMixed, 1 << input_qubits)?;
    (0..count)
        .map(|_| {
            let p: f64 = rng.random();
            let clean = make_werner(WernerParams::new(p, input_qubits)?);
            let r = random_density(&ensemble, rng);
            Ok((apply_input_noise(&clean, noise, &r)?, p))
        })
        .collect()
}

/// One input with everything it needs for any ε.
struct InputSample {
    target: f64,
    clean: DensityMatrix,
    noise: DensityMatrix,
    reservoir_state: Option<DensityMatrix>,
}

fn draw_input(cfg: &ExperimentConfig, stream: &mut Stream, input_qubits: usize) -> Result<InputSample> {
    let n = cfg.reservoir.n_qubits;
    let target: f64 = stream.random();
    let clean = make_werner(WernerParams::new(target, input_qubits)?);
    let noise = random_density(&RandomStateEnsemble::new(cfg.noise_ensemble, 1 << input_qubits)?, stream);
    let reservoir_state = if cfg.fresh_reservoir_states {
        let ens = RandomStateEnsemble::new(cfg.reservoir_ensemble, 1 << (n - input_qubits))?;
        Some(random_density(&ens, stream))
    } else {
        None
    };
    Ok(InputSample { target, clean, noise, reservoir_state })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Train,
    Test,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Self::Train => TAG_TRAIN,
            Self::Test => TAG_TEST,
        }
    }
}

struct PhaseData {
    phase: Phase,
    inputs: Vec<InputSample>,
    fixed_reservoir: Option<DensityMatrix>,
}

impl PhaseData {
    fn draw(cfg: &ExperimentConfig, realization: u64, phase: Phase, count: usize, input_qubits: usize) -> Result<Self> {
        let inputs = (0..count)
            .map(|k| {
                let mut s = derive_substream(cfg.master_seed, &[realization, phase.tag(), k as u64]);
                draw_input(cfg, &mut s, input_qubits)
            })
            .collect::<Result<Vec<_>>>()?;
        let fixed_reservoir = if cfg.fresh_reservoir_states {
            None
        } else {
            let mut s = derive_substream(cfg.master_seed, &[realization, TAG_FIXED_RESERVOIR, input_qubits as u64]);
            let ens = RandomStateEnsemble::new(cfg.reservoir_ensemble, 1 << (cfg.reservoir.n_qubits - input_qubits))?;
            Some(random_density(&ens, &mut s))
        };
        Ok(Self { phase, inputs, fixed_reservoir })
    }

    fn targets(&self) -> Vec<f64> {
        self.inputs.iter().map(|i| i.target).collect()
    }

    /// Evolved outcome distributions `(clean, noise)` for every input.
    fn evolved(&self, u: &crate::quantum::CMatrix, need_clean: bool, need_noise: bool) -> Result<Vec<[Vec<f64>; 2]>> {
        self.inputs
            .iter()
            .map(|input| {
                let r = input.reservoir_state.as_ref().or(self.fixed_reservoir.as_ref()).expect("reservoir state");
                let mut which = Vec::with_capacity(2);
                if need_clean {
                    which.push(input.clean.matrix());
                }
                if need_noise {
                    which.push(input.noise.matrix());
                }
                let mut diags = product_state_diagonals(u, &which, r.matrix())?.into_iter();
                let clean = if need_clean { diags.next().unwrap() } else { Vec::new() };
                let noise = if need_noise { diags.next().unwrap() } else { Vec::new() };
                Ok([clean, noise])
            })
            .collect()
    }
}

/// Features for every input of a phase under one family's ε and shot plan.
#[allow(clippy::too_many_arguments)]
fn phase_features(
    cfg: &ExperimentConfig,
    realization: u64,
    point: usize,
    data: &PhaseData,
    evolved: &[[Vec<f64>; 2]],
    epsilon: f64,
    shots: ShotPlan,
    shots_index: usize,
    spec: &FeatureSpec,
) -> Result<Vec<Vec<f64>>> {
    let n = cfg.reservoir.n_qubits;
    evolved
        .iter()
        .enumerate()
        .map(|(k, [clean, noise])| {
            let probs: Vec<f64> = if epsilon == 0.0 {
                clean.clone()
            } else if epsilon == 1.0 {
                noise.clone()
            } else {
                clean.iter().zip(noise).map(|(c, r)| (1.0 - epsilon) * c + epsilon * r).collect()
            };
            let probs = normalize_probabilities(probs)?;
            match shots {
                ShotPlan::Exact => Ok(features_from_probabilities(&probs, n, spec)),
                ShotPlan::Finite(m) => {
                    let mut s = derive_substream(
                        cfg.master_seed,
                        &[realization, TAG_SHOTS, data.phase.tag(), k as u64, point as u64, shots_index as u64],
                    );
                    let counts = sample_from_probabilities(&probs, n, m, &mut s);
                    estimate_features_from_shots(&counts, spec)
                }
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationResult {
    pub coupling_matrix: CouplingMatrix,
    pub train_mse: f64,
    pub test_mse: f64,
    pub predictions: Vec<f64>,
    pub targets: Vec<f64>,
}

fn fit_and_score(
    cfg: &ExperimentConfig,
    train_x: &[Vec<f64>],
    train_y: &[f64],
    test_x: &[Vec<f64>],
    test_y: &[f64],
    cols: usize,
) -> Result<(f64, f64, Vec<f64>)> {
    let train = DesignMatrix::from_rows(train_x, train_y)?.leading_columns(cols);
    let test = DesignMatrix::from_rows(test_x, test_y)?.leading_columns(cols);
    let w = fit_readout_ridge(&train, cfg.ridge)?;
    let train_pred = predict_all(&w, &train)?;
    let test_pred = predict_all(&w, &test)?;
    Ok((mean_squared_error(&train_pred, train_y)?, mean_squared_error(&test_pred, test_y)?, test_pred))
}

/// All axis points and families of one realization, indexed `[point][family]`.
pub fn run_realization_grid(cfg: &ExperimentConfig, realization: usize) -> Result<Vec<Vec<RealizationResult>>> {
    cfg.validate()?;
    let r = realization as u64;
    let n = cfg.reservoir.n_qubits;
    let couplings = CouplingMatrix::draw(
        n,
        cfg.reservoir.coupling_scale,
        &mut derive_substream(cfg.master_seed, &[r, TAG_COUPLINGS]),
    );
    let train = PhaseData::draw(cfg, r, Phase::Train, cfg.n_train, cfg.input_qubits_train)?;
    let test = PhaseData::draw(cfg, r, Phase::Test, cfg.n_test, cfg.input_qubits_test)?;
    let (train_y, test_y) = (train.targets(), test.targets());

    let need_clean = cfg.epsilon_list.iter().any(|&e| e < 1.0);
    let need_noise = cfg.epsilon_list.iter().any(|&e| e > 0.0);
    let families = cfg.families();
    // Local-z columns are a prefix of the extended layout, so one measurement
    // serves both orders.
    let widest = FeatureSpec {
        include_bias: cfg.feature_spec.include_bias,
        correlation_order: if cfg.orders().contains(&CorrelationOrder::LocalPlusZz) {
            CorrelationOrder::LocalPlusZz
        } else {
            CorrelationOrder::LocalZ
        },
    };

    let axis = cfg.axis()?;
    let mut grid = Vec::new();
    let mut reservoir: Option<Reservoir> = None;
    for (point, &value) in cfg.axis_values()?.iter().enumerate() {
        let (h, dt) = match axis {
            SweepAxis::FieldStrength => (value, cfg.delta_t[0]),
            SweepAxis::DeltaT => (cfg.field_points()[0], value),
        };
        if reservoir.as_ref().map_or(true, |res| res.field_strength() != h) {
            reservoir = Some(Reservoir::new(couplings.clone(), h)?);
        }
        let u = reservoir.as_ref().unwrap().propagator(dt)?;
        let train_ev = train.evolved(u.matrix(), need_clean, need_noise)?;
        let test_ev = test.evolved(u.matrix(), need_clean, need_noise)?;

        let mut row = Vec::with_capacity(families.len());
        let mut cache: Option<(f64, usize, Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
        for fam in &families {
            let fresh = !matches!(&cache, Some((e, s, _, _)) if *e == fam.epsilon && *s == fam.shots_index);
            if fresh {
                let tx = phase_features(cfg, r, point, &train, &train_ev, fam.epsilon, fam.shots, fam.shots_index, &widest)?;
                let sx = phase_features(cfg, r, point, &test, &test_ev, fam.epsilon, fam.shots, fam.shots_index, &widest)?;
                cache = Some((fam.epsilon, fam.shots_index, tx, sx));
            }
            let (_, _, tx, sx) = cache.as_ref().unwrap();
            let cols = FeatureSpec { correlation_order: fam.order, ..widest }.len(n);
            let (train_mse, test_mse, predictions) = fit_and_score(cfg, tx, &train_y, sx, &test_y, cols)?;
            row.push(RealizationResult {
                coupling_matrix: couplings.clone(),
                train_mse,
                test_mse,
                predictions,
                targets: test_y.clone(),
            });
        }
        grid.push(row);
    }
    Ok(grid)
}

/// One realization of a single-point, single-family configuration.
pub fn run_realization(cfg: &ExperimentConfig, realization: usize) -> Result<RealizationResult> {
    if cfg.axis_values()?.len() != 1 || cfg.families().len() != 1 {
        return Err(Error::InvalidSweep(
            "run_realization needs exactly one axis point and one family".into(),
        ));
    }
    Ok(run_realization_grid(cfg, realization)?.remove(0).remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub family: String,
    pub mean_test_mse: Vec<f64>,
    pub stderr_test_mse: Vec<f64>,
    pub mean_train_mse: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub realization: usize,
    pub axis_index: usize,
    pub family: String,
    pub result: RealizationResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub axis_values: Vec<f64>,
    pub curves: Vec<Curve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_realization: Option<Vec<RealizationRecord>>,
}

impl SweepResult {
    pub fn curve(&self, family: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.family == family)
    }
}

/// Mean and standard error of the mean (sample standard deviation over `√n`).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(feature = "parallel")]
fn map_realizations<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_realizations<T>(count: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..count).map(f).collect()
}

/// Runs `f` on a dedicated pool of `threads` workers (0: rayon's default).
#[cfg(feature = "parallel")]
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(f)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_detailed(cfg, false)
}

/// Like [`run_sweep`], optionally keeping every realization's record.
pub fn run_sweep_detailed(cfg: &ExperimentConfig, keep_records: bool) -> Result<SweepResult> {
    cfg.validate()?;
    let axis = cfg.axis()?;
    let axis_values = cfg.axis_values()?;
    let families = cfg.families();
    let grids = map_realizations(cfg.realizations, |r| run_realization_grid(cfg, r))?;

    let mut curves = Vec::with_capacity(families.len());
    for (f, fam) in families.iter().enumerate() {
        let mut curve = Curve {
            family: fam.label(),
            mean_test_mse: Vec::new(),
            stderr_test_mse: Vec::new(),
            mean_train_mse: Vec::new(),
        };
        for point in 0..axis_values.len() {
            let test: Vec<f64> = grids.iter().map(|g| g[point][f].test_mse).collect();
            let train: Vec<f64> = grids.iter().map(|g| g[point][f].train_mse).collect();
            let (mean, se) = mean_and_stderr(&test);
            curve.mean_test_mse.push(mean);
            curve.stderr_test_mse.push(se);
            curve.mean_train_mse.push(mean_and_stderr(&train).0);
        }
        curves.push(curve);
    }

    let per_realization = keep_records.then(|| {
        let mut records = Vec::new();
        for (r, grid) in grids.into_iter().enumerate() {
            for (point, row) in grid.into_iter().enumerate() {
                for (fam, result) in families.iter().zip(row) {
                    records.push(RealizationRecord { realization: r, axis_index: point, family: fam.label(), result });
                }
            }
        }
        records
    });

    Ok(SweepResult { axis: axis.name().to_string(), axis_values, curves, per_realization })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRun {
    pub realization: usize,
    pub coupling_matrix: CouplingMatrix,
    pub targets: Vec<f64>,
    pub raw: Vec<f64>,
    pub dressed: Vec<f64>,
    pub raw_mse: f64,
    pub dressed_mse: f64,
    pub train_mse: f64,
    /// Pearson correlation of raw predictions with targets.
    pub raw_correlation: f64,
    pub calibration_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationResult {
    pub input_qubits_train: usize,
    pub input_qubits_test: usize,
    pub mean_raw_mse: f64,
    pub mean_dressed_mse: f64,
    pub stderr_dressed_mse: f64,
    pub mean_raw_correlation: f64,
    pub runs: Vec<GeneralizationRun>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Trains on `input_qubits_train`-qubit Werner states and tests on
/// `input_qubits_test`-qubit GHZ-Werner states with the same couplings,
/// dressing the raw outputs with the calibration element's known target.
pub fn run_generalization(cfg: &ExperimentConfig) -> Result<GeneralizationResult> {
    cfg.validate()?;
    if cfg.input_qubits_test < cfg.input_qubits_train {
        return Err(invalid("input_qubits_test", "must be at least input_qubits_train"));
    }
    let single = ExperimentConfig {
        field_sweep: vec![cfg.field_points()[0]],
        delta_t: vec![cfg.delta_t[0]],
        epsilon_list: vec![cfg.epsilon_list[0]],
        shots: vec![cfg.shots[0]],
        compare_correlation_orders: false,
        ..cfg.clone()
    };
    let runs = map_realizations(cfg.realizations, |r| {
        let res = run_realization(&single, r)?;
        let cal = CalibrationPoint::new(res.predictions[cfg.calibration_index], res.targets[cfg.calibration_index])?;
        let dressed = dress_predictions(&res.predictions, cal);
        Ok(GeneralizationRun {
            realization: r,
            raw_mse: res.test_mse,
            dressed_mse: mean_squared_error(&dressed, &res.targets)?,
            train_mse: res.train_mse,
            raw_correlation: pearson(&res.predictions, &res.targets),
            calibration_scale: cal.scale(),
            coupling_matrix: res.coupling_matrix,
            targets: res.targets,
            raw: res.predictions,
            dressed,
        })
    })?;
    let raw: Vec<f64> = runs.iter().map(|r| r.raw_mse).collect();
    let dressed: Vec<f64> = runs.iter().map(|r| r.dressed_mse).collect();
    let corr: Vec<f64> = runs.iter().map(|r| r.raw_correlation).collect();
    let (mean_dressed_mse, stderr_dressed_mse) = mean_and_stderr(&dressed);
    Ok(GeneralizationResult {
        input_qubits_train: cfg.input_qubits_train,
        input_qubits_test: cfg.input_qubits_test,
        mean_raw_mse: mean_and_stderr(&raw).0,
        mean_dressed_mse,
        stderr_dressed_mse,
        mean_raw_correlation: mean_and_stderr(&corr).0,
        runs,
    })
}
