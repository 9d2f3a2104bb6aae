//! Datasets, file formats, the synthetic flow generator and the flow
//! baselines.

mod baselines;
mod formats;
mod generator;

pub use baselines::{knn_local_risk_predict, krr_project_predict, nearest_neighbors, KrrProjector};
pub use formats::*;
pub use generator::{simulate_flow_data, simulate_hierarchy_data, FlowGeneratorSpec, DEFAULT_INPUT_DIM};

use crate::error::{check_dim, EcrmError, Result};
use crate::label::Label;
use crate::linalg::Matrix;
use crate::spaces::{OutputSpace, FLOW_TOLERANCE};

/// Inputs, outputs and the space the outputs live in.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Matrix,
    labels: Vec<Label>,
    space: OutputSpace,
}

impl Dataset {
    /// Checks that every output is feasible. Flows are checked to `1e-9`.
    pub fn new(inputs: Matrix, labels: Vec<Label>, space: OutputSpace) -> Result<Self> {
        if labels.is_empty() {
            return Err(EcrmError::InvalidParameter("dataset is empty".into()));
        }
        check_dim(inputs.nrows(), labels.len())?;
        for (i, y) in labels.iter().enumerate() {
            if !space.is_feasible(y, FLOW_TOLERANCE)? {
                return Err(EcrmError::InvalidLabel(format!("sample {i} is not in the {} space", space.kind_name())));
            }
        }
        Ok(Dataset { inputs, labels, space })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn space(&self) -> &OutputSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
