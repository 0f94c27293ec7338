use crate::galois::{FieldTower, Symbol};
use crate::rmcode::RMCode;

use super::RepairError;

/// `scale · Tr(z(x_j − a)) / (x_j − a)`, held in its expanded form
/// `Σ_i scale·z^(q^i) (x_j − a)^(q^i − 1)` so it can be evaluated at the
/// anchor, where the fraction is `0/0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryPoly {
    z: Symbol,
    anchor: Symbol,
    axis: usize,
    scale: Symbol,
    terms: Vec<(Symbol, u64)>,
}

impl RecoveryPoly {
    pub fn new(
        f: &FieldTower,
        z: Symbol,
        anchor: Symbol,
        axis: usize,
        scale: Symbol,
    ) -> Result<Self, RepairError> {
        if z.is_zero() || scale.is_zero() {
            return Err(RepairError::ZeroRecoveryParameter);
        }
        let q = f.q() as u64;
        let terms = (0..f.t())
            .map(|i| {
                let power = q.pow(i);
                (f.mul(scale, f.frobenius(z, i)), power - 1)
            })
            .collect();
        Ok(Self {
            z,
            anchor,
            axis,
            scale,
            terms,
        })
    }

    pub fn z(&self) -> Symbol {
        self.z
    }

    pub fn anchor(&self) -> Symbol {
        self.anchor
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn scale(&self) -> Symbol {
        self.scale
    }

    /// `(coefficient, exponent of (x_j − a))` pairs.
    pub fn expanded_terms(&self) -> &[(Symbol, u64)] {
        &self.terms
    }

    pub fn degree(&self) -> u64 {
        self.terms.last().map_or(0, |&(_, e)| e)
    }

    /// Value as a function of the axis coordinate alone.
    pub fn eval_coord(&self, f: &FieldTower, x: Symbol) -> Symbol {
        let shifted = f.sub(x, self.anchor);
        f.sum(self.terms.iter().map(|&(c, e)| f.mul(c, f.pow(shifted, e))))
    }

    pub fn eval(&self, f: &FieldTower, point: &[Symbol]) -> Symbol {
        self.eval_coord(f, point[self.axis])
    }

    /// Evaluations at every point of the code, in point order.
    pub fn evaluation_vector(&self, code: &RMCode) -> Vec<Symbol> {
        let f = code.tower();
        code.points().iter().map(|pt| self.eval(f, pt)).collect()
    }
}
