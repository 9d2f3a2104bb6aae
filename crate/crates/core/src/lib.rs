//! Estimated conditional risk minimization for structured prediction.
//!
//! Training fits one kernel ridge regression shared by every candidate
//! output: the estimated risk of `y` at `x` is `sum_i w_i(x) l(y, y_i)` with
//! `w(x) = (K + m lambda I)^-1 v(x)`. Prediction minimizes that estimate
//! over the output space, exactly for additive losses on hierarchies and
//! assignments, and by convex or first-order methods on flow polytopes.

pub mod additive;
pub mod data;
pub mod error;
pub mod hierarchy;
pub mod inference;
pub mod kernel;
pub mod label;
pub mod linalg;
pub mod losses;
pub mod model_io;
pub mod risk;
pub mod spaces;

pub use additive::{additive_risk, fit_additive, infer_additive, AdditiveModel, Neighborhood};
pub use data::{Dataset, FlowGeneratorSpec};
pub use error::{EcrmError, ParseError, Result};
pub use hierarchy::HierarchyDag;
pub use inference::{
    brute_force_argmin, infer, minimize_risk, solve_assignment, solve_hierarchy, Certificate, InferenceResult,
    SolverParams,
};
pub use kernel::{eval_kernel, gram_matrix, InterceptMode, KernelSpec, TrainedModel, WeightVector};
pub use label::{Label, LabelKind};
pub use linalg::Matrix;
pub use losses::{LossKind, LossSpec};
pub use model_io::SavedModel;
pub use risk::{generalization_bound, BoundInputs, BoundTerms, SurrogateConfig};
pub use spaces::{FlowNetwork, OutputSpace, TuVerdict};
