//! The two flow-prediction baselines: local risk minimization over the
//! nearest neighbors, and kernel ridge regression followed by projection.

use super::Dataset;
use crate::error::{check_dim, EcrmError, Result};
use crate::inference::{minimize_risk, FlowPolytope, InferenceResult, SolverParams};
use crate::kernel::{InterceptMode, KernelSpec, TrainedModel};
use crate::label::Label;
use crate::linalg::squared_distance;
use crate::losses::LossSpec;
use crate::spaces::OutputSpace;

/// Indices of the `k` Euclidean-nearest inputs, ties broken by index.
pub fn nearest_neighbors(data: &Dataset, x: &[f64], k: usize) -> Result<Vec<usize>> {
    check_dim(data.inputs().ncols(), x.len())?;
    if k == 0 || k > data.len() {
        return Err(EcrmError::InvalidParameter(format!("k must be in 1..={}, got {k}", data.len())));
    }
    let mut order: Vec<(f64, usize)> = data
        .inputs()
        .rows_iter()
        .enumerate()
        .map(|(i, xi)| (squared_distance(x, xi), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(order.into_iter().take(k).map(|(_, i)| i).collect())
}

/// `argmin_y sum_{i in N(x)} l(y, y_i)`: the risk minimizer with weight
/// `1/k` on each of the `k` nearest samples and zero elsewhere.
pub fn knn_local_risk_predict(
    data: &Dataset,
    loss: &LossSpec,
    x: &[f64],
    k: usize,
    params: &SolverParams,
) -> Result<InferenceResult> {
    let mut weights = vec![0.0; data.len()];
    for i in nearest_neighbors(data, x, k)? {
        weights[i] = 1.0 / k as f64;
    }
    minimize_risk(&weights, data.labels(), loss, data.space(), params)
}

/// Coordinatewise kernel ridge regression of the flows, projected onto the
/// flow polytope.
#[derive(Debug, Clone)]
pub struct KrrProjector {
    model: TrainedModel,
}

impl KrrProjector {
    pub fn fit(data: &Dataset, kernel: KernelSpec, lambda: f64) -> Result<Self> {
        if !matches!(data.space(), OutputSpace::Flow(_)) {
            return Err(EcrmError::Unsupported("projection baseline needs a flow space".into()));
        }
        let model = TrainedModel::fit(kernel, lambda, data.inputs().clone(), data.labels().to_vec(), InterceptMode::None)?;
        Ok(KrrProjector { model })
    }

    /// The unprojected ridge estimate `sum_i w_i(x) y_i`.
    pub fn raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = self.model.weights(x)?;
        let dim = self.model.labels()[0].len();
        let mut y = vec![0.0; dim];
        for (wi, label) in w.values.iter().zip(self.model.labels()) {
            for (a, b) in y.iter_mut().zip(label.as_vector()?) {
                *a += wi * b;
            }
        }
        Ok(y)
    }

    /// Projection of the ridge estimate, to a duality gap of `1e-6` or better.
    pub fn predict(&self, space: &OutputSpace, x: &[f64]) -> Result<(Label, f64)> {
        let net = match space {
            OutputSpace::Flow(net) => net,
            _ => return Err(EcrmError::Unsupported("projection baseline needs a flow space".into())),
        };
        let raw = self.raw(x)?;
        let poly = FlowPolytope::new(net)?;
        let proj = poly.project(&raw, 1e-8, 200_000, None)?;
        if proj.gap > 1e-6 {
            return Err(EcrmError::Singular(format!("projection stalled at gap {}", proj.gap)));
        }
        Ok((Label::Vector(proj.point), proj.gap))
    }
}

pub fn krr_project_predict(data: &Dataset, kernel: KernelSpec, lambda: f64, x: &[f64]) -> Result<Label> {
    let fitted = KrrProjector::fit(data, kernel, lambda)?;
    Ok(fitted.predict(data.space(), x)?.0)
}
