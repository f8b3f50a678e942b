use super::{dot, DenseVector};
use crate::error::{check_dim, Error, Result};

/// The closed half-space `{x : ⟨x − anchor, normal⟩ + offset ≤ 0}`.
///
/// This is the supporting half-space of a convex function `g` linearized at
/// `anchor`, with `normal` a subgradient and `offset = g(anchor)`. A positive
/// offset means the anchor itself violates the constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: DenseVector,
    pub offset: f64,
    pub anchor: DenseVector,
}

impl HalfSpace {
    pub fn new(normal: DenseVector, offset: f64, anchor: DenseVector) -> Result<Self> {
        check_dim(normal.len(), anchor.len())?;
        if !offset.is_finite() {
            return Err(Error::NonFinite(0));
        }
        Ok(Self {
            normal,
            offset,
            anchor,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `⟨x − anchor, normal⟩ + offset`; nonpositive inside.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let shift: f64 = x
            .iter()
            .zip(self.anchor.iter())
            .zip(self.normal.iter())
            .map(|((xi, ai), ni)| (xi - ai) * ni)
            .sum();
        shift + self.offset
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Right-hand side `b` of the equivalent form `⟨x, normal⟩ ≤ b`.
    pub fn rhs(&self) -> f64 {
        dot(&self.normal, &self.anchor) - self.offset
    }
}
