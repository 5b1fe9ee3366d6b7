//! Dense complex linear algebra for qubit registers.
//!
//! Every state and operator is a dense `2^n x 2^n` matrix. Qubit 0 is the
//! most significant bit of a computational-basis index, so in `a ⊗ b` the
//! qubits of `a` come first.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Largest register any operation will build (dim 1024).
pub const MAX_QUBITS: usize = 10;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Number of qubits for a power-of-two dimension.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { requested: n, max: MAX_QUBITS });
    }
    Ok(n)
}

/// Value (0 or 1) of `qubit` in basis index `index` of an `n_qubits` register.
#[inline]
pub fn bit(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

/// Eigenvalue of σᶻ on `qubit` for basis index `index`.
#[inline]
pub fn z_sign(index: usize, qubit: usize, n_qubits: usize) -> f64 {
    1.0 - 2.0 * bit(index, qubit, n_qubits) as f64
}

fn max_hermitian_deviation(m: &CMatrix) -> f64 {
    let dim = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..dim {
        for j in i..dim {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square_qubits(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    qubits_for_dim(m.nrows())
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A Hermitian, unit-trace, positive semidefinite matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates all three density-matrix invariants.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n_qubits = check_square_qubits(&matrix)?;
        let rho = Self { n_qubits, matrix };
        rho.check_invariants()?;
        Ok(rho)
    }

    /// Wraps a matrix that is a density matrix by construction.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        let n_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { n_qubits, matrix }
    }

    /// The maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits { requested: n_qubits, max: MAX_QUBITS });
        }
        let dim = 1usize << n_qubits;
        let m = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Projector onto the computational basis state `index`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits { requested: n_qubits, max: MAX_QUBITS });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Projector `|ψ⟩⟨ψ|` onto a normalized copy of `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let dim = psi.len();
        qubits_for_dim(dim)?;
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter { name: "state norm", value: norm });
        }
        let v = psi.unscale(norm);
        Ok(Self::from_matrix_unchecked(&v * v.adjoint()))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρρ) = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues_ascending(&self.matrix)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let herm = max_hermitian_deviation(&self.matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.trace();
        let dev = (tr - C64::new(1.0, 0.0)).norm();
        if dev > TRACE_TOL {
            return Err(Error::TraceNotOne(dev));
        }
        let min = self.eigenvalues()?.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }
}

/// A Hermitian operator on `n` qubits (Hamiltonian or observable).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    n_qubits: usize,
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n_qubits = check_square_qubits(&matrix)?;
        let herm = max_hermitian_deviation(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        Ok(Self { n_qubits, matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        let n_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { n_qubits, matrix }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Diagonal entries, if the operator is diagonal in the computational basis.
    pub fn diagonal_real(&self) -> Option<Vec<f64>> {
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if i != j && self.matrix[(i, j)] != C64::new(0.0, 0.0) {
                    return None;
                }
            }
        }
        Some((0..dim).map(|i| self.matrix[(i, i)].re).collect())
    }
}

/// `e^{-iHt}` for a fixed timestep.
#[derive(Clone, Debug)]
pub struct UnitaryPropagator {
    matrix: CMatrix,
    timestep: f64,
}

impl UnitaryPropagator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn timestep(&self) -> f64 {
        self.timestep
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |(U†U − I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        let id = CMatrix::identity(dim, dim);
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        let out = &self.matrix * rho.matrix() * self.matrix.adjoint();
        Ok(DensityMatrix::from_matrix_unchecked(hermitize(out)))
    }

    /// Diagonal of `U ρ U†` without forming the full product.
    pub fn evolved_diagonal(&self, rho: &CMatrix) -> Vec<f64> {
        let u = &self.matrix;
        let m = u * rho;
        let dim = u.nrows();
        (0..dim)
            .map(|k| {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..dim {
                    acc += m[(k, b)] * u[(k, b)].conj();
                }
                acc.re
            })
            .collect()
    }
}

/// Diagonals of `U (A⊗B) U†` for several `A` sharing one `B`.
///
/// Each row of `U` is folded into a `dA x dB` block so the cost is
/// `dim²·(dA + dB)` instead of `dim³`.
pub fn product_state_diagonals(u: &CMatrix, inputs: &[&CMatrix], b: &CMatrix) -> Result<Vec<Vec<f64>>> {
    let dim = u.nrows();
    let db = b.nrows();
    if db == 0 || dim % db != 0 {
        return Err(Error::DimensionMismatch { expected: dim, found: db });
    }
    let da = dim / db;
    if let Some(bad) = inputs.iter().find(|a| a.nrows() != da) {
        return Err(Error::DimensionMismatch { expected: da, found: bad.nrows() });
    }
    let b_rows: Vec<C64> = (0..db).flat_map(|i| (0..db).map(move |j| (i, j))).map(|(i, j)| b[(i, j)]).collect();
    let a_rows: Vec<Vec<C64>> = inputs
        .iter()
        .map(|a| (0..da).flat_map(|i| (0..da).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect())
        .collect();

    let zero = C64::new(0.0, 0.0);
    let mut row = vec![zero; dim];
    let mut t = vec![zero; dim];
    let mut s = vec![zero; da * da];
    let mut out = vec![vec![0.0; dim]; inputs.len()];
    for k in 0..dim {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = u[(k, j)];
        }
        // T = R_k B
        for a in 0..da {
            let r = &row[a * db..(a + 1) * db];
            let dst = &mut t[a * db..(a + 1) * db];
            dst.fill(zero);
            for (bi, &rv) in r.iter().enumerate() {
                if rv == zero {
                    continue;
                }
                let brow = &b_rows[bi * db..(bi + 1) * db];
                for (d, &bv) in dst.iter_mut().zip(brow) {
                    *d += rv * bv;
                }
            }
        }
        // S = T R_k†
        for a in 0..da {
            let trow = &t[a * db..(a + 1) * db];
            for a2 in 0..da {
                let r2 = &row[a2 * db..(a2 + 1) * db];
                let mut acc = zero;
                for (x, y) in trow.iter().zip(r2) {
                    acc += x * y.conj();
                }
                s[a * da + a2] = acc;
            }
        }
        for (dst, a_m) in out.iter_mut().zip(&a_rows) {
            let mut acc = zero;
            for (x, y) in a_m.iter().zip(&s) {
                acc += x * y;
            }
            dst[k] = acc.re;
        }
    }
    Ok(out)
}

/// Removes round-off anti-Hermitian drift.
fn hermitize(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj).scale(0.5)
}

/// Eigendecomposition `op = V diag(λ) V†` with ascending `λ`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// Reassembles `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lambda);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `U = V e^{−iλt} V†`.
    pub fn propagator(&self, timestep: f64) -> Result<UnitaryPropagator> {
        if !(timestep >= 0.0) || !timestep.is_finite() {
            return Err(Error::InvalidParameter { name: "delta_t", value: timestep });
        }
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * timestep);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
        Ok(UnitaryPropagator { matrix: scaled * self.eigenvectors.adjoint(), timestep })
    }
}

fn eigenvalues_ascending(m: &CMatrix) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenSolver)?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn hermitian_eigendecomposition(op: &HermitianOperator) -> Result<Spectrum> {
    let eig = SymmetricEigen::try_new(op.matrix().clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenSolver)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let dim = op.dim();
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors,
    })
}

pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let requested = a.n_qubits() + b.n_qubits();
    if requested > MAX_QUBITS {
        return Err(Error::TooManyQubits { requested, max: MAX_QUBITS });
    }
    Ok(DensityMatrix::from_matrix_unchecked(kron(a.matrix(), b.matrix())))
}

/// `Π_{i ∈ sites} σᶻᵢ` on an `n_qubits` register. Repeated sites cancel.
pub fn pauli_z_string(sites: &[usize], n_qubits: usize) -> Result<HermitianOperator> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits { requested: n_qubits, max: MAX_QUBITS });
    }
    if let Some(&index) = sites.iter().find(|&&s| s >= n_qubits) {
        return Err(Error::QubitOutOfRange { index, n_qubits });
    }
    let dim = 1usize << n_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for b in 0..dim {
        let sign: f64 = sites.iter().map(|&s| z_sign(b, s, n_qubits)).product();
        m[(b, b)] = C64::new(sign, 0.0);
    }
    Ok(HermitianOperator::from_matrix_unchecked(m))
}

/// `Tr[O ρ]`.
pub fn expectation(obs: &HermitianOperator, rho: &DensityMatrix) -> Result<f64> {
    if obs.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: obs.dim(), found: rho.dim() });
    }
    let (o, r) = (obs.matrix(), rho.matrix());
    let dim = obs.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            acc += o[(i, j)] * r[(j, i)];
        }
    }
    if acc.im.abs() > 1e-10 {
        return Err(Error::NonRealExpectation(acc.im));
    }
    Ok(acc.re)
}

/// Computational-basis outcome distribution of `rho`.
pub fn diagonal_probabilities(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let diag: Vec<f64> = (0..rho.dim()).map(|i| rho.matrix()[(i, i)].re).collect();
    normalize_probabilities(diag)
}

/// Clamps round-off negatives to zero and renormalizes to unit sum.
pub fn normalize_probabilities(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for p in probs.iter_mut() {
        if *p < -PSD_TOL {
            return Err(Error::NotPositive(*p));
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::TraceNotOne(1.0 - total));
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(probs)
}
