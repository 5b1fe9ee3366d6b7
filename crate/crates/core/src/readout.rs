//! Linear readout trained by least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Stacked feature rows and their targets.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    targets: DVector<f64>,
}

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::EmptyInput);
        }
        if targets.len() != n_rows {
            return Err(Error::LengthMismatch { expected: n_rows, found: targets.len() });
        }
        let cols = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch { expected: cols, found: bad.len() });
        }
        let x = DMatrix::from_fn(n_rows, cols, |i, j| rows[i][j]);
        Ok(Self { x, targets: DVector::from_column_slice(targets) })
    }

    pub fn new(x: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if targets.len() != x.nrows() {
            return Err(Error::LengthMismatch { expected: x.nrows(), found: targets.len() });
        }
        Ok(Self { x, targets })
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Keeps only the leading `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> Self {
        Self { x: self.x.columns(0, cols).into_owned(), targets: self.targets.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutWeights(DVector<f64>);

impl ReadoutWeights {
    pub fn new(weights: Vec<f64>) -> Self {
        Self(DVector::from_vec(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }
}

/// Minimum-norm least-squares weights `X⁺ y`, via a truncated SVD.
pub fn fit_readout(train: &DesignMatrix) -> ReadoutWeights {
    let svd = train.x.clone().svd(true, true);
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_RELATIVE_CUTOFF * largest;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut w = DVector::zeros(train.cols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let coeff = u.column(k).dot(&train.targets) / s;
            w.axpy(coeff, &v_t.row(k).transpose(), 1.0);
        }
    }
    ReadoutWeights(w)
}

/// Ridge-regularized fit `(XᵀX + λI)⁻¹ Xᵀ y`; `lambda = 0` falls back to [`fit_readout`].
pub fn fit_readout_ridge(train: &DesignMatrix, lambda: f64) -> Result<ReadoutWeights> {
    if lambda == 0.0 {
        return Ok(fit_readout(train));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter { name: "ridge", value: lambda });
    }
    let xt = train.x.transpose();
    let mut gram = &xt * &train.x;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = &xt * &train.targets;
    let w = gram.cholesky().ok_or(Error::InvalidParameter { name: "ridge", value: lambda })?.solve(&rhs);
    Ok(ReadoutWeights(w))
}

pub fn predict(weights: &ReadoutWeights, features: &[f64]) -> Result<f64> {
    if weights.len() != features.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), found: features.len() });
    }
    Ok(weights.0.iter().zip(features).map(|(w, x)| w * x).sum())
}

pub fn predict_all(weights: &ReadoutWeights, design: &DesignMatrix) -> Result<Vec<f64>> {
    if weights.len() != design.cols() {
        return Err(Error::LengthMismatch { expected: weights.len(), found: design.cols() });
    }
    Ok((&design.x * &weights.0).iter().copied().collect())
}

pub fn mean_squared_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch { expected: targets.len(), found: predictions.len() });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sum / predictions.len() as f64)
}

/// One test element whose target is known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationPoint {
    raw_prediction: f64,
    known_target: f64,
}

impl CalibrationPoint {
    pub fn new(raw_prediction: f64, known_target: f64) -> Result<Self> {
        if raw_prediction == 0.0 || !raw_prediction.is_finite() {
            return Err(Error::DegenerateCalibration);
        }
        Ok(Self { raw_prediction, known_target })
    }

    pub fn scale(&self) -> f64 {
        self.known_target / self.raw_prediction
    }
}

/// Rescales raw outputs so the calibration element lands on its known target.
pub fn dress_predictions(raw: &[f64], cal: CalibrationPoint) -> Vec<f64> {
    let scale = cal.scale();
    raw.iter().map(|r| r * scale).collect()
}
