//! Loss families over structured outputs and their additive decompositions.
//!
//! An additive loss splits as `l(y, y') = sum_j l_j(y_j, y')` over a binary
//! encoding of `y`. For such losses the weighted risk
//! `sum_i w_i l(y, y_i)` is affine in the encoding, and
//! [`additive_coefficients`] returns its slope and offset.

use crate::error::{check_dim, EcrmError, Result};
use crate::hierarchy::HierarchyDag;
use crate::label::{validate_ranking, Label};
use crate::spaces::OutputSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    ZeroOne,
    Hamming,
    Hierarchical,
    Footrule,
    Absolute,
    Square,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::ZeroOne => "zero-one",
            LossKind::Hamming => "hamming",
            LossKind::Hierarchical => "hierarchical",
            LossKind::Footrule => "footrule",
            LossKind::Absolute => "absolute",
            LossKind::Square => "square",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    ZeroOne,
    Hamming,
    /// Hierarchical loss on an arborescence with per-node penalties.
    Hierarchical { dag: HierarchyDag, penalties: Vec<f64> },
    Footrule,
    Absolute,
    Square,
}

impl LossSpec {
    /// Sibling-weighted hierarchical loss.
    pub fn hierarchical(dag: &HierarchyDag) -> Result<Self> {
        let penalties = sibling_weights(dag)?;
        Ok(LossSpec::Hierarchical {
            dag: dag.clone(),
            penalties,
        })
    }

    pub fn hierarchical_with_penalties(dag: &HierarchyDag, penalties: Vec<f64>) -> Result<Self> {
        dag.require_arborescence()?;
        check_dim(dag.len(), penalties.len())?;
        Ok(LossSpec::Hierarchical {
            dag: dag.clone(),
            penalties,
        })
    }

    pub fn kind(&self) -> LossKind {
        match self {
            LossSpec::ZeroOne => LossKind::ZeroOne,
            LossSpec::Hamming => LossKind::Hamming,
            LossSpec::Hierarchical { .. } => LossKind::Hierarchical,
            LossSpec::Footrule => LossKind::Footrule,
            LossSpec::Absolute => LossKind::Absolute,
            LossSpec::Square => LossKind::Square,
        }
    }

    /// True when [`additive_coefficients`] applies.
    pub fn is_additive(&self) -> bool {
        matches!(
            self,
            LossSpec::Hamming | LossSpec::Hierarchical { .. } | LossSpec::Footrule
        )
    }

    /// `l(y, y_other)`.
    pub fn eval(&self, y: &Label, y_other: &Label) -> Result<f64> {
        match self {
            LossSpec::ZeroOne => {
                check_dim(y.len(), y_other.len())?;
                Ok(if y == y_other { 0.0 } else { 1.0 })
            }
            LossSpec::Hamming => hamming(&y.to_bits()?, &y_other.to_bits()?),
            LossSpec::Hierarchical { dag, penalties } => {
                hierarchical_loss_closed(dag, penalties, y.as_bits()?, y_other.as_bits()?)
            }
            LossSpec::Footrule => footrule(y.as_ranking()?, y_other.as_ranking()?),
            LossSpec::Absolute => vector_loss(VectorLoss::Absolute, y.as_vector()?, y_other.as_vector()?),
            LossSpec::Square => vector_loss(VectorLoss::Square, y.as_vector()?, y_other.as_vector()?),
        }
    }

    /// `sup l(y, y')` over pairs of outputs in `space`.
    ///
    /// Exact for every supported pair; the hierarchical case is the
    /// heaviest antichain of the tree, which is where the loss peaks.
    pub fn upper_bound(&self, space: &OutputSpace) -> Result<f64> {
        match (self, space) {
            (_, OutputSpace::Explicit(items)) => {
                let mut best: f64 = 0.0;
                for a in items {
                    for b in items {
                        best = best.max(self.eval(a, b)?);
                    }
                }
                Ok(best)
            }
            (LossSpec::ZeroOne, _) => Ok(1.0),
            (LossSpec::Hamming, OutputSpace::Hierarchy(dag)) => Ok(dag.len() as f64),
            (LossSpec::Hamming, OutputSpace::Assignment { d }) => {
                Ok(if *d >= 2 { 2.0 * *d as f64 } else { 0.0 })
            }
            (LossSpec::Hierarchical { dag, penalties }, OutputSpace::Hierarchy(_)) => {
                Ok(heaviest_antichain(dag, penalties))
            }
            (LossSpec::Footrule, OutputSpace::Assignment { d }) => Ok((d * d / 2) as f64),
            (LossSpec::Absolute | LossSpec::Square, OutputSpace::Flow(net)) => {
                let amount = net.unit_source_sink()?.2;
                let paths = net.enumerate_paths(1_000_000)?;
                let mut widest = 0usize;
                for a in &paths {
                    for b in &paths {
                        let sym = a.iter().filter(|x| !b.contains(x)).count()
                            + b.iter().filter(|x| !a.contains(x)).count();
                        widest = widest.max(sym);
                    }
                }
                let per_arc = if self.kind() == LossKind::Absolute {
                    amount
                } else {
                    amount * amount
                };
                Ok(widest as f64 * per_arc)
            }
            (loss, space) => Err(EcrmError::Unsupported(format!(
                "{} loss on a {} space",
                loss.kind().name(),
                space.kind_name()
            ))),
        }
    }
}

fn heaviest_antichain(dag: &HierarchyDag, penalties: &[f64]) -> f64 {
    let mut best = vec![0.0; dag.len()];
    for &j in dag.topological_order().iter().rev() {
        let below: f64 = dag.children(j).iter().map(|&c| best[c]).sum();
        best[j] = penalties[j].max(below);
    }
    dag.roots().iter().map(|&r| best[r]).sum()
}

pub fn hamming(y: &[u8], y_other: &[u8]) -> Result<f64> {
    check_dim(y.len(), y_other.len())?;
    Ok(y.iter().zip(y_other).filter(|(a, b)| a != b).count() as f64)
}

/// Penalties `c_root = 1`, `c_j = c_parent(j) / |siblings(j)|` where the
/// sibling set includes `j`.
pub fn sibling_weights(dag: &HierarchyDag) -> Result<Vec<f64>> {
    dag.require_arborescence()?;
    let mut c = vec![0.0; dag.len()];
    for &j in dag.topological_order() {
        c[j] = match dag.parents(j).first() {
            None => 1.0,
            Some(&p) => c[p] / dag.children(p).len() as f64,
        };
    }
    Ok(c)
}

fn check_hierarchy_pair(dag: &HierarchyDag, penalties: &[f64], y: &[u8], y_other: &[u8]) -> Result<()> {
    check_dim(dag.len(), penalties.len())?;
    check_dim(dag.len(), y.len())?;
    check_dim(dag.len(), y_other.len())?;
    for v in [y, y_other] {
        if !dag.is_consistent(v) {
            return Err(EcrmError::InvalidLabel(format!("{v:?} violates the hierarchy")));
        }
    }
    Ok(())
}

/// Hierarchical loss by its definition: node `j` costs `c_j` when it is
/// mislabeled while all of its ancestors are labeled correctly.
pub fn hierarchical_loss(dag: &HierarchyDag, penalties: &[f64], y: &[u8], y_other: &[u8]) -> Result<f64> {
    check_hierarchy_pair(dag, penalties, y, y_other)?;
    let mut total = 0.0;
    for j in 0..dag.len() {
        if y[j] != y_other[j] && dag.ancestors(j).iter().all(|&k| y[k] == y_other[k]) {
            total += penalties[j];
        }
    }
    Ok(total)
}

/// Closed form of the hierarchical loss on an arborescence with root `s`:
/// `c_s (y_s + y'_s - 2 y'_s y_s)` plus, for each arc `(j, k)` with `j` the
/// parent, `c_k (y'_k y_j + (y'_j - y'_j y'_k - y'_k) y_k)`.
pub fn hierarchical_loss_closed(
    dag: &HierarchyDag,
    penalties: &[f64],
    y: &[u8],
    y_other: &[u8],
) -> Result<f64> {
    let root = dag.require_arborescence()?;
    check_hierarchy_pair(dag, penalties, y, y_other)?;
    let f = |v: u8| f64::from(v);
    let (ys, yps) = (f(y[root]), f(y_other[root]));
    let mut total = penalties[root] * (ys + yps - 2.0 * yps * ys);
    for &(j, k) in dag.arcs() {
        let (yj, yk, ypj, ypk) = (f(y[j]), f(y[k]), f(y_other[j]), f(y_other[k]));
        total += penalties[k] * (ypk * yj + (ypj - ypj * ypk - ypk) * yk);
    }
    Ok(total)
}

/// Spearman's footrule between two rankings.
pub fn footrule(sigma: &[usize], sigma_other: &[usize]) -> Result<f64> {
    check_dim(sigma.len(), sigma_other.len())?;
    validate_ranking(sigma)?;
    validate_ranking(sigma_other)?;
    Ok(sigma
        .iter()
        .zip(sigma_other)
        .map(|(&a, &b)| a.abs_diff(b))
        .sum::<usize>() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorLoss {
    Absolute,
    Square,
}

pub fn vector_loss(kind: VectorLoss, y: &[f64], y_other: &[f64]) -> Result<f64> {
    check_dim(y.len(), y_other.len())?;
    let diffs = y.iter().zip(y_other).map(|(a, b)| a - b);
    Ok(match kind {
        VectorLoss::Absolute => diffs.map(f64::abs).sum(),
        VectorLoss::Square => diffs.map(|t| t * t).sum(),
    })
}

/// `sum_i w_i l(y, y_i) = offset + coefficients . bits(y)` for an additive loss.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveObjective {
    pub coefficients: Vec<f64>,
    pub offset: f64,
}

impl AdditiveObjective {
    pub fn evaluate(&self, bits: &[u8]) -> f64 {
        self.offset + linear_value(&self.coefficients, bits)
    }

    /// `self + scale * other`, for composing surrogate objectives.
    pub fn add_scaled(&self, other: &AdditiveObjective, scale: f64) -> Result<AdditiveObjective> {
        check_dim(self.coefficients.len(), other.coefficients.len())?;
        Ok(AdditiveObjective {
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a + scale * b)
                .collect(),
            offset: self.offset + scale * other.offset,
        })
    }

    pub fn negated(&self) -> AdditiveObjective {
        AdditiveObjective {
            coefficients: self.coefficients.iter().map(|c| -c).collect(),
            offset: -self.offset,
        }
    }
}

/// `sum_j c_j b_j`, summed in index order.
pub fn linear_value(coefficients: &[f64], bits: &[u8]) -> f64 {
    coefficients
        .iter()
        .zip(bits)
        .filter(|(_, &b)| b == 1)
        .map(|(c, _)| *c)
        .sum()
}

/// Per-coordinate costs `sum_i w_i (l_j(1, y_i) - l_j(0, y_i))` and the
/// constant `sum_i w_i sum_j l_j(0, y_i)`.
pub fn additive_coefficients(loss: &LossSpec, labels: &[Label], weights: &[f64]) -> Result<AdditiveObjective> {
    check_dim(labels.len(), weights.len())?;
    let first = labels
        .first()
        .ok_or_else(|| EcrmError::InvalidParameter("no training labels".into()))?;
    match loss {
        LossSpec::Hamming => {
            let dim = first.to_bits()?.len();
            let mut coefficients = vec![0.0; dim];
            let mut offset = 0.0;
            for (label, &w) in labels.iter().zip(weights) {
                let bits = label.to_bits()?;
                check_dim(dim, bits.len())?;
                for (c, &b) in coefficients.iter_mut().zip(&bits) {
                    *c += w * (1.0 - 2.0 * f64::from(b));
                }
                offset += w * bits.iter().map(|&b| f64::from(b)).sum::<f64>();
            }
            Ok(AdditiveObjective { coefficients, offset })
        }
        LossSpec::Hierarchical { dag, penalties } => {
            let root = dag.require_arborescence()?;
            let mut coefficients = vec![0.0; dag.len()];
            let mut offset = 0.0;
            for (label, &w) in labels.iter().zip(weights) {
                let yp = label.as_bits()?;
                check_dim(dag.len(), yp.len())?;
                let f = |j: usize| f64::from(yp[j]);
                coefficients[root] += w * penalties[root] * (1.0 - 2.0 * f(root));
                offset += w * penalties[root] * f(root);
                for &(j, k) in dag.arcs() {
                    coefficients[j] += w * penalties[k] * f(k);
                    coefficients[k] += w * penalties[k] * (f(j) - f(j) * f(k) - f(k));
                }
            }
            Ok(AdditiveObjective { coefficients, offset })
        }
        LossSpec::Footrule => {
            let d = first.as_ranking()?.len();
            let mut coefficients = vec![0.0; d * d];
            for (label, &w) in labels.iter().zip(weights) {
                let sigma = label.as_ranking()?;
                check_dim(d, sigma.len())?;
                for (j, &rank) in sigma.iter().enumerate() {
                    for k in 0..d {
                        coefficients[j * d + k] += w * (k + 1).abs_diff(rank) as f64;
                    }
                }
            }
            Ok(AdditiveObjective {
                coefficients,
                offset: 0.0,
            })
        }
        other => Err(EcrmError::Unsupported(format!(
            "{} loss is not additive over a binary encoding",
            other.kind().name()
        ))),
    }
}
