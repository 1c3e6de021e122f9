use std::sync::Arc;

use super::cholesky::SpdOperator;
use super::ordering::Symbolic;
use crate::error::Result;
use crate::netmodel::ReducedIncidence;

/// Least-squares angle recovery `theta = (A_r A_r^T)^{-1} A_r d`.
#[derive(Debug, Clone)]
pub struct AngleRecovery {
    incidence: ReducedIncidence,
    op: SpdOperator,
}

impl AngleRecovery {
    pub fn new(incidence: &ReducedIncidence) -> Result<Self> {
        let m = incidence.weighted_laplacian(&vec![1.0; incidence.edges()])?;
        let op = SpdOperator::factorize(&m)?;
        Ok(Self {
            incidence: incidence.clone(),
            op,
        })
    }

    /// Builds the operator on an existing analysis of the same pattern.
    pub fn with_symbolic(incidence: &ReducedIncidence, symbolic: Arc<Symbolic>) -> Result<Self> {
        let m = incidence.weighted_laplacian(&vec![1.0; incidence.edges()])?;
        let op = SpdOperator::factorize_with(symbolic, &m)?;
        Ok(Self {
            incidence: incidence.clone(),
            op,
        })
    }

    /// Angles minimizing `|A_r^T theta - d|_2`; exact when `d` is consistent.
    pub fn recover(&self, d: &[f64]) -> Result<Vec<f64>> {
        self.op.solve(&self.incidence.apply(d)?)
    }

    pub fn operator(&self) -> &SpdOperator {
        &self.op
    }
}

/// One-shot form of [`AngleRecovery::recover`].
pub fn recover_angles(incidence: &ReducedIncidence, d: &[f64]) -> Result<Vec<f64>> {
    AngleRecovery::new(incidence)?.recover(d)
}
