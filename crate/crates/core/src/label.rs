use std::cmp::Ordering;
use std::fmt;

use crate::error::{EcrmError, Result};

/// A structured output.
#[derive(Debug, Clone, PartialEq)]
pub enum Label {
    /// Binary indicator vector, e.g. a label subset of a hierarchy.
    Bits(Vec<u8>),
    /// Permutation given as 1-based ranks: entry `j` is the rank of item `j`.
    Ranking(Vec<usize>),
    /// Real vector, e.g. arc flows or a scalar class in `{-1, 1}`.
    Vector(Vec<f64>),
}

impl Label {
    pub fn len(&self) -> usize {
        match self {
            Label::Bits(b) => b.len(),
            Label::Ranking(r) => r.len(),
            Label::Vector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> LabelKind {
        match self {
            Label::Bits(_) => LabelKind::Bits,
            Label::Ranking(_) => LabelKind::Ranking,
            Label::Vector(_) => LabelKind::Vector,
        }
    }

    pub fn as_bits(&self) -> Result<&[u8]> {
        match self {
            Label::Bits(b) => Ok(b),
            other => Err(EcrmError::InvalidLabel(format!("expected bits, got {}", other.kind()))),
        }
    }

    pub fn as_ranking(&self) -> Result<&[usize]> {
        match self {
            Label::Ranking(r) => Ok(r),
            other => Err(EcrmError::InvalidLabel(format!("expected ranking, got {}", other.kind()))),
        }
    }

    pub fn as_vector(&self) -> Result<&[f64]> {
        match self {
            Label::Vector(v) => Ok(v),
            other => Err(EcrmError::InvalidLabel(format!("expected vector, got {}", other.kind()))),
        }
    }

    /// Binary encoding used by additive losses. A ranking over `d` items
    /// becomes the row-major `d x d` assignment indicator `y[j*d + k] = 1`
    /// iff item `j` has rank `k + 1`.
    pub fn to_bits(&self) -> Result<Vec<u8>> {
        match self {
            Label::Bits(b) => Ok(b.clone()),
            Label::Ranking(r) => {
                let d = r.len();
                let mut bits = vec![0u8; d * d];
                for (j, &rank) in r.iter().enumerate() {
                    if rank == 0 || rank > d {
                        return Err(EcrmError::InvalidLabel(format!("rank {rank} outside 1..={d}")));
                    }
                    bits[j * d + rank - 1] = 1;
                }
                Ok(bits)
            }
            Label::Vector(_) => Err(EcrmError::InvalidLabel("real vectors have no binary encoding".into())),
        }
    }

    /// Lexicographic order on the encoding; used to break ties between
    /// equally good outputs.
    pub fn lex_cmp(&self, other: &Label) -> Ordering {
        match (self, other) {
            (Label::Bits(a), Label::Bits(b)) => a.cmp(b),
            (Label::Ranking(a), Label::Ranking(b)) => a.cmp(b),
            (Label::Vector(a), Label::Vector(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.total_cmp(y) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                a.len().cmp(&b.len())
            }
            (a, b) => a.kind().cmp(&b.kind()),
        }
    }
}

impl fmt::Display for Label {
    /// Space-separated, the same encoding the label files use.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
        match self {
            Label::Bits(b) => join(f, b),
            Label::Ranking(r) => join(f, r),
            Label::Vector(v) => join(f, v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LabelKind {
    Bits,
    Ranking,
    Vector,
}

impl LabelKind {
    pub fn name(self) -> &'static str {
        match self {
            LabelKind::Bits => "bits",
            LabelKind::Ranking => "ranks",
            LabelKind::Vector => "real",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "bits" => Some(LabelKind::Bits),
            "ranks" => Some(LabelKind::Ranking),
            "real" => Some(LabelKind::Vector),
            _ => None,
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Checks that `ranks` is a permutation of `1..=d`.
pub fn validate_ranking(ranks: &[usize]) -> Result<()> {
    let d = ranks.len();
    let mut seen = vec![false; d];
    for &r in ranks {
        if r == 0 || r > d || seen[r - 1] {
            return Err(EcrmError::InvalidLabel(format!(
                "{ranks:?} is not a permutation of 1..={d}"
            )));
        }
        seen[r - 1] = true;
    }
    Ok(())
}
