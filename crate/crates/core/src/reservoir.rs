//! Random transverse-field Ising reservoir, its dynamics and its read-out.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    diagonal_probabilities, hermitian_eigendecomposition, z_sign, CMatrix, DensityMatrix, HermitianOperator,
    Spectrum, UnitaryPropagator, C64, MAX_QUBITS,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirSpec {
    /// Total qubits `N`, input register included.
    pub n_qubits: usize,
    /// Transverse field `h`, in units of the coupling scale.
    pub field_strength: f64,
    /// `J_s`; couplings are drawn from `[−J_s/2, J_s/2]`.
    pub coupling_scale: f64,
}

impl Default for ReservoirSpec {
    fn default() -> Self {
        Self { n_qubits: 5, field_strength: 0.1, coupling_scale: 1.0 }
    }
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 || self.n_qubits > MAX_QUBITS {
            return Err(Error::InvalidParameter { name: "n_qubits", value: self.n_qubits as f64 });
        }
        if !(self.coupling_scale > 0.0) || !self.coupling_scale.is_finite() {
            return Err(Error::InvalidParameter { name: "coupling_scale", value: self.coupling_scale });
        }
        if !self.field_strength.is_finite() {
            return Err(Error::InvalidParameter { name: "field_strength", value: self.field_strength });
        }
        Ok(())
    }
}

/// Symmetric, zero-diagonal `J_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CouplingRecord", try_from = "CouplingRecord")]
pub struct CouplingMatrix {
    values: DMatrix<f64>,
}

/// Serialized form: the upper triangle in draw order.
#[derive(Serialize, Deserialize)]
struct CouplingRecord {
    n_qubits: usize,
    upper: Vec<f64>,
}

impl From<CouplingMatrix> for CouplingRecord {
    fn from(j: CouplingMatrix) -> Self {
        Self { n_qubits: j.n_qubits(), upper: j.upper() }
    }
}

impl TryFrom<CouplingRecord> for CouplingMatrix {
    type Error = Error;

    fn try_from(r: CouplingRecord) -> Result<Self> {
        Self::from_upper(r.n_qubits, &r.upper)
    }
}

impl CouplingMatrix {
    /// Draws `J_ij ~ U[−J_s/2, J_s/2]` for `i < j` in row-major order.
    pub fn draw<R: Rng + ?Sized>(n_qubits: usize, coupling_scale: f64, rng: &mut R) -> Self {
        let mut values = DMatrix::zeros(n_qubits, n_qubits);
        for i in 0..n_qubits {
            for j in (i + 1)..n_qubits {
                let u: f64 = rng.random();
                let v = coupling_scale * (u - 0.5);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Self { values }
    }

    /// Builds from explicit upper-triangle values; the lower triangle is mirrored.
    pub fn from_upper(n_qubits: usize, upper: &[f64]) -> Result<Self> {
        let expected = n_qubits * (n_qubits.saturating_sub(1)) / 2;
        if upper.len() != expected {
            return Err(Error::LengthMismatch { expected, found: upper.len() });
        }
        let mut values = DMatrix::zeros(n_qubits, n_qubits);
        let mut it = upper.iter();
        for i in 0..n_qubits {
            for j in (i + 1)..n_qubits {
                let v = *it.next().unwrap();
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Ok(Self { values })
    }

    pub fn n_qubits(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Upper-triangle values in draw order.
    pub fn upper(&self) -> Vec<f64> {
        let n = self.n_qubits();
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| self.values[(i, j)]).collect()
    }
}

/// `H = Σ_{i<j} J_ij σˣᵢσˣⱼ + h Σ_i σᶻᵢ`.
pub fn ising_hamiltonian(couplings: &CouplingMatrix, field_strength: f64) -> HermitianOperator {
    let n = couplings.n_qubits();
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for b in 0..dim {
        let field: f64 = (0..n).map(|i| z_sign(b, i, n)).sum();
        m[(b, b)] = C64::new(field_strength * field, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                // σˣᵢσˣⱼ flips both bits.
                let mask = (1usize << (n - 1 - i)) | (1usize << (n - 1 - j));
                m[(b ^ mask, b)] += C64::new(couplings.get(i, j), 0.0);
            }
        }
    }
    HermitianOperator::from_matrix_unchecked(m)
}

pub fn build_hamiltonian<R: Rng + ?Sized>(
    spec: &ReservoirSpec,
    rng: &mut R,
) -> Result<(HermitianOperator, CouplingMatrix)> {
    spec.validate()?;
    let couplings = CouplingMatrix::draw(spec.n_qubits, spec.coupling_scale, rng);
    Ok((ising_hamiltonian(&couplings, spec.field_strength), couplings))
}

/// One diagonalized reservoir; propagators for any Δt come from the same spectrum.
#[derive(Clone, Debug)]
pub struct Reservoir {
    couplings: CouplingMatrix,
    field_strength: f64,
    hamiltonian: HermitianOperator,
    spectrum: Spectrum,
}

impl Reservoir {
    pub fn new(couplings: CouplingMatrix, field_strength: f64) -> Result<Self> {
        let hamiltonian = ising_hamiltonian(&couplings, field_strength);
        let spectrum = hermitian_eigendecomposition(&hamiltonian)?;
        Ok(Self { couplings, field_strength, hamiltonian, spectrum })
    }

    pub fn couplings(&self) -> &CouplingMatrix {
        &self.couplings
    }

    pub fn field_strength(&self) -> f64 {
        self.field_strength
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn n_qubits(&self) -> usize {
        self.couplings.n_qubits()
    }

    pub fn propagator(&self, delta_t: f64) -> Result<UnitaryPropagator> {
        self.spectrum.propagator(delta_t)
    }
}

/// `e^{−iHΔt} ρ₀ e^{iHΔt}`.
pub fn evolve(rho0: &DensityMatrix, hamiltonian: &HermitianOperator, delta_t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != hamiltonian.dim() {
        return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: rho0.dim() });
    }
    let u = hermitian_eigendecomposition(hamiltonian)?.propagator(delta_t)?;
    u.conjugate(rho0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationOrder {
    /// `⟨σᶻᵢ⟩` only.
    LocalZ,
    /// `⟨σᶻᵢ⟩` followed by every `⟨σᶻᵢσᶻⱼ⟩`, `i < j`.
    LocalPlusZz,
}

impl CorrelationOrder {
    pub fn label(self) -> &'static str {
        match self {
            Self::LocalZ => "local-z",
            Self::LocalPlusZz => "local-plus-zz",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub include_bias: bool,
    pub correlation_order: CorrelationOrder,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self { include_bias: true, correlation_order: CorrelationOrder::LocalZ }
    }
}

impl FeatureSpec {
    /// Number of features for an `n_qubits` register, bias included.
    pub fn len(&self, n_qubits: usize) -> usize {
        let pairs = match self.correlation_order {
            CorrelationOrder::LocalZ => 0,
            CorrelationOrder::LocalPlusZz => n_qubits * n_qubits.saturating_sub(1) / 2,
        };
        usize::from(self.include_bias) + n_qubits + pairs
    }
}

/// Feature vector from a computational-basis distribution (exact, or empirical).
pub fn features_from_probabilities(probs: &[f64], n_qubits: usize, spec: &FeatureSpec) -> Vec<f64> {
    debug_assert_eq!(probs.len(), 1 << n_qubits);
    let mut out = Vec::with_capacity(spec.len(n_qubits));
    if spec.include_bias {
        out.push(1.0);
    }
    for i in 0..n_qubits {
        out.push(probs.iter().enumerate().map(|(b, p)| p * z_sign(b, i, n_qubits)).sum());
    }
    if spec.correlation_order == CorrelationOrder::LocalPlusZz {
        for i in 0..n_qubits {
            for j in (i + 1)..n_qubits {
                out.push(
                    probs
                        .iter()
                        .enumerate()
                        .map(|(b, p)| p * z_sign(b, i, n_qubits) * z_sign(b, j, n_qubits))
                        .sum(),
                );
            }
        }
    }
    out
}

pub fn measure_features_exact(rho: &DensityMatrix, features: &FeatureSpec) -> Result<Vec<f64>> {
    let probs = diagonal_probabilities(rho)?;
    Ok(features_from_probabilities(&probs, rho.n_qubits(), features))
}

/// How observables are read out: exactly, or from `N_m` projective shots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShotPlan {
    Exact,
    Finite(u64),
}

impl ShotPlan {
    pub fn finite(n_measurements: u64) -> Result<Self> {
        if n_measurements == 0 {
            return Err(Error::InvalidParameter { name: "n_measurements", value: 0.0 });
        }
        Ok(Self::Finite(n_measurements))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Exact => "exact".to_string(),
            Self::Finite(n) => n.to_string(),
        }
    }
}

impl Serialize for ShotPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Exact => s.serialize_str("exact"),
            Self::Finite(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for ShotPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = ShotPlan;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"exact\" or a positive number of measurements")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<ShotPlan, E> {
                match v {
                    "exact" => Ok(ShotPlan::Exact),
                    other => other
                        .parse::<u64>()
                        .map_err(|_| E::invalid_value(serde::de::Unexpected::Str(other), &self))
                        .and_then(|n| self.visit_u64(n)),
                }
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<ShotPlan, E> {
                ShotPlan::finite(v).map_err(|_| E::invalid_value(serde::de::Unexpected::Unsigned(v), &self))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<ShotPlan, E> {
                u64::try_from(v)
                    .map_err(|_| E::invalid_value(serde::de::Unexpected::Signed(v), &self))
                    .and_then(|n| self.visit_u64(n))
            }
        }
        d.deserialize_any(Visitor)
    }
}

/// Outcome histogram keyed by basis index (qubit 0 is the most significant bit).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShotCounts {
    n_qubits: usize,
    counts: BTreeMap<usize, u64>,
}

impl ShotCounts {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, counts: BTreeMap::new() }
    }

    pub fn record(&mut self, outcome: usize, count: u64) {
        if count > 0 {
            *self.counts.entry(outcome).or_insert(0) += count;
        }
    }

    /// Parses `{"01": 50, "10": 50}`-style bitstring keys.
    pub fn from_bitstrings<'a>(entries: impl IntoIterator<Item = (&'a str, u64)>) -> Result<Self> {
        let mut n_qubits = None;
        let mut out = Self::default();
        for (bits, count) in entries {
            if *n_qubits.get_or_insert(bits.len()) != bits.len() {
                return Err(Error::LengthMismatch { expected: n_qubits.unwrap(), found: bits.len() });
            }
            let index = usize::from_str_radix(bits, 2)
                .map_err(|_| Error::MalformedConfig(format!("bad bitstring {bits:?}")))?;
            out.record(index, count);
        }
        out.n_qubits = n_qubits.unwrap_or(0);
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn get(&self, outcome: usize) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn bitstring(&self, outcome: usize) -> String {
        format!("{outcome:0width$b}", width = self.n_qubits)
    }
}

/// Draws `shots` full-register outcomes from `probs`.
///
/// The histogram is sampled as a multinomial through successive conditional
/// binomials, which has the same law as recording the shots one at a time.
pub fn sample_from_probabilities<R: Rng + ?Sized>(
    probs: &[f64],
    n_qubits: usize,
    shots: u64,
    rng: &mut R,
) -> ShotCounts {
    let mut counts = ShotCounts::new(n_qubits);
    let mut remaining = shots;
    let mut mass_left = 1.0_f64;
    for (outcome, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let drawn = if outcome + 1 == probs.len() || p >= mass_left {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng)
        };
        counts.record(outcome, drawn);
        remaining -= drawn;
        mass_left -= p;
    }
    counts
}

pub fn sample_bitstrings<R: Rng + ?Sized>(rho: &DensityMatrix, plan: ShotPlan, rng: &mut R) -> Result<ShotCounts> {
    let ShotPlan::Finite(shots) = plan else {
        return Err(Error::ExactShotPlan);
    };
    let probs = diagonal_probabilities(rho)?;
    Ok(sample_from_probabilities(&probs, rho.n_qubits(), shots, rng))
}

/// Sample means of `zᵢ` and `zᵢzⱼ` over one shared shot record.
pub fn estimate_features_from_shots(counts: &ShotCounts, features: &FeatureSpec) -> Result<Vec<f64>> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let n = counts.n_qubits();
    let mut out = Vec::with_capacity(features.len(n));
    if features.include_bias {
        out.push(1.0);
    }
    let inv = 1.0 / total as f64;
    let mean = |f: &dyn Fn(usize) -> f64| -> f64 {
        // Integer accumulation keeps the estimate exact until the final division.
        let sum: i64 = counts.iter().map(|(b, c)| f(b) as i64 * c as i64).sum();
        sum as f64 * inv
    };
    for i in 0..n {
        out.push(mean(&|b| z_sign(b, i, n)));
    }
    if features.correlation_order == CorrelationOrder::LocalPlusZz {
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(mean(&|b| z_sign(b, i, n) * z_sign(b, j, n)));
            }
        }
    }
    Ok(out)
}
