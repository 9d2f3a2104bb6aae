//! Kernels, Gram matrices and the ridge weight functional.
//!
//! For a fixed output `y`, ridge regression of the observed losses
//! `L_y = [l(y, y_i)]_i` on the inputs has the solution
//! `R(y|x) = L_yᵀ (K + mλI)⁻¹ v(x)`. The vector `w(x) = (K + mλI)⁻¹ v(x)`
//! does not depend on `y`, so one solve per query gives the whole estimated
//! conditional risk function `R(y|x) = sum_i w_i(x) l(y, y_i)`.

use crate::error::{check_dim, EcrmError, Result};
use crate::label::Label;
use crate::linalg::{dot, squared_distance, Cholesky, Matrix};
use crate::losses::LossSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `k(x, x') = exp(-gamma |x - x'|^2)`.
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(EcrmError::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")));
        }
        Ok(KernelSpec::Rbf { gamma })
    }

    pub fn eval(&self, x: &[f64], x_other: &[f64]) -> Result<f64> {
        check_dim(x.len(), x_other.len())?;
        Ok(self.eval_unchecked(x, x_other))
    }

    fn eval_unchecked(&self, x: &[f64], x_other: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, x_other),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(x, x_other)).exp(),
        }
    }

    /// `sup_x k(x, x)` over the given inputs (exactly 1 for RBF).
    pub fn diagonal_sup(&self, inputs: &Matrix) -> f64 {
        match self {
            KernelSpec::Rbf { .. } => 1.0,
            KernelSpec::Linear => inputs.rows_iter().map(|r| dot(r, r)).fold(0.0, f64::max),
        }
    }
}

pub fn eval_kernel(spec: &KernelSpec, x: &[f64], x_other: &[f64]) -> Result<f64> {
    spec.eval(x, x_other)
}

/// Gram matrix over the rows of `inputs`. Only the upper triangle is
/// evaluated; the lower one is mirrored so the result is exactly symmetric.
pub fn gram_matrix(spec: &KernelSpec, inputs: &Matrix) -> Matrix {
    let m = inputs.nrows();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        let xi = inputs.row(i);
        for j in i..m {
            let v = spec.eval_unchecked(xi, inputs.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterceptMode {
    #[default]
    None,
    /// Each loss series is centered at its training mean before the ridge
    /// solve and the mean is added back, i.e. an unpenalized constant.
    Centered,
}

impl InterceptMode {
    pub fn name(self) -> &'static str {
        match self {
            InterceptMode::None => "none",
            InterceptMode::Centered => "centered",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(InterceptMode::None),
            "centered" => Some(InterceptMode::Centered),
            _ => None,
        }
    }
}

/// Weights `w(x)` for one query.
///
/// With [`InterceptMode::Centered`] the stored values already fold in the
/// centering: `w_i + (1 - sum_j w_j) / m`, so that `sum_i w_i L_i` equals
/// `mean(L) + sum_i w_i (L_i - mean(L))` for every loss series.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub query: Vec<f64>,
}

impl WeightVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&w| w >= 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    kernel: KernelSpec,
    lambda: f64,
    inputs: Matrix,
    labels: Vec<Label>,
    factor: Cholesky,
    intercept: InterceptMode,
}

impl TrainedModel {
    /// Factors `K + mλI`. A failed factorization is retried once with a
    /// jitter of `1e-10 trace(K) / m` on the diagonal.
    pub fn fit(
        kernel: KernelSpec,
        lambda: f64,
        inputs: Matrix,
        labels: Vec<Label>,
        intercept: InterceptMode,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(EcrmError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let m = inputs.nrows();
        if m == 0 {
            return Err(EcrmError::InvalidParameter("training set is empty".into()));
        }
        check_dim(m, labels.len())?;
        let mut system = gram_matrix(&kernel, &inputs);
        let trace = system.trace();
        system.add_diagonal(m as f64 * lambda);
        let factor = match Cholesky::factor(&system) {
            Ok(f) => f,
            Err(_) => {
                system.add_diagonal(1e-10 * trace / m as f64);
                Cholesky::factor(&system)?
            }
        };
        Ok(TrainedModel {
            kernel,
            lambda,
            inputs,
            labels,
            factor,
            intercept,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    pub fn intercept(&self) -> InterceptMode {
        self.intercept
    }

    pub fn num_samples(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// `v(x) = [k(x, x_i)]_i`.
    pub fn kernel_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self
            .inputs
            .rows_iter()
            .map(|xi| self.kernel.eval_unchecked(x, xi))
            .collect())
    }

    pub fn weights(&self, x: &[f64]) -> Result<WeightVector> {
        let v = self.kernel_vector(x)?;
        let mut values = self.factor.solve(&v)?;
        if self.intercept == InterceptMode::Centered {
            let m = values.len() as f64;
            let shift = (1.0 - values.iter().sum::<f64>()) / m;
            values.iter_mut().for_each(|w| *w += shift);
        }
        Ok(WeightVector {
            values,
            query: x.to_vec(),
        })
    }

    /// `R(y|x) = sum_i w_i(x) l(y, y_i)`.
    pub fn estimate_conditional_risk(&self, loss: &LossSpec, y: &Label, x: &[f64]) -> Result<f64> {
        let w = self.weights(x)?;
        weighted_risk(loss, &self.labels, &w.values, y)
    }
}

/// `sum_i w_i l(y, y_i)`.
pub fn weighted_risk(loss: &LossSpec, labels: &[Label], weights: &[f64], y: &Label) -> Result<f64> {
    check_dim(labels.len(), weights.len())?;
    let mut total = 0.0;
    for (label, &w) in labels.iter().zip(weights) {
        total += w * loss.eval(y, label)?;
    }
    Ok(total)
}

pub fn estimate_conditional_risk(model: &TrainedModel, loss: &LossSpec, y: &Label, x: &[f64]) -> Result<f64> {
    model.estimate_conditional_risk(loss, y, x)
}
