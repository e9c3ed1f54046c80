//! Exact span-membership oracle over the prime field `Z_M`.
//!
//! A coalition's knowledge is a list of linear equations over the segment
//! (and mask) unknowns. A target functional is determined exactly when it
//! lies in the row span of the equation matrix; Gaussian elimination
//! decides membership and produces the forced value.

use crate::modular::{Modulus, Residue};

use super::{AdversaryError, CoalitionView};

/// One linear equation `sum(coeffs[i] * var_i) = rhs` over `Z_M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub coeffs: Vec<u64>,
    pub rhs: u64,
}

impl Equation {
    /// `var_col = rhs`.
    pub fn unit(num_vars: usize, col: usize, rhs: u64) -> Self {
        let mut coeffs = vec![0; num_vars];
        coeffs[col] = 1;
        Equation { coeffs, rhs }
    }
}

struct Row {
    pivot: usize,
    coeffs: Vec<u64>,
    rhs: u64,
}

/// Row-echelon basis of a coalition view, ready to answer span queries.
pub struct SpanSolver {
    m: Modulus,
    rows: Vec<Row>,
}

impl SpanSolver {
    pub fn new(view: &CoalitionView) -> Result<Self, AdversaryError> {
        let m = view.modulus.require_prime()?;
        let mut solver = SpanSolver { m, rows: Vec::new() };
        for eq in &view.equations {
            solver.insert(eq.coeffs.clone(), eq.rhs)?;
        }
        Ok(solver)
    }

    fn insert(&mut self, mut coeffs: Vec<u64>, mut rhs: u64) -> Result<(), AdversaryError> {
        let m = self.m;
        for row in &self.rows {
            let f = coeffs[row.pivot];
            if f != 0 {
                for (c, &r) in coeffs.iter_mut().zip(&row.coeffs) {
                    *c = m.sub(*c, m.mul(f, r));
                }
                rhs = m.sub(rhs, m.mul(f, row.rhs));
            }
        }
        match coeffs.iter().position(|&c| c != 0) {
            Some(pivot) => {
                let inv = m.inv(coeffs[pivot]).expect("prime modulus");
                for c in coeffs.iter_mut() {
                    *c = m.mul(*c, inv);
                }
                rhs = m.mul(rhs, inv);
                self.rows.push(Row { pivot, coeffs, rhs });
                Ok(())
            }
            // equations come from a real transcript, so a vanishing row
            // must have a vanishing right-hand side
            None if rhs != 0 => Err(AdversaryError::InconsistentView),
            None => Ok(()),
        }
    }

    /// `Some(value)` when the target functional lies in the row span of
    /// the view, `None` otherwise.
    pub fn determine(&self, target: &[u64]) -> Option<Residue> {
        let m = self.m;
        let mut t = target.to_vec();
        let mut value = 0u64;
        for row in &self.rows {
            let f = t[row.pivot];
            if f != 0 {
                for (c, &r) in t.iter_mut().zip(&row.coeffs) {
                    *c = m.sub(*c, m.mul(f, r));
                }
                value = m.add(value, m.mul(f, row.rhs));
            }
        }
        if t.iter().all(|&c| c == 0) {
            Some(value)
        } else {
            None
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// One-shot convenience wrapper around [`SpanSolver`].
pub fn linear_oracle(
    view: &CoalitionView,
    target: &[u64],
) -> Result<Option<Residue>, AdversaryError> {
    Ok(SpanSolver::new(view)?.determine(target))
}
