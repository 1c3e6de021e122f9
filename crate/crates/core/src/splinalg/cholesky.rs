use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::ordering::Symbolic;
use super::sparse::{norm_inf, CscMatrix};
use crate::error::{Error, Result};

/// Relative residual accepted by [`SpdOperator::solve`] before refinement kicks in.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Factor-once / solve-many sparse Cholesky operator `P M P^T = L L^T`.
#[derive(Debug)]
pub struct SpdOperator {
    matrix: CscMatrix,
    symbolic: Arc<Symbolic>,
    diag: Vec<f64>,
    /// Below-diagonal values of each column, aligned with `symbolic.col_pattern(j)`.
    lower: Vec<Vec<f64>>,
    solves: AtomicUsize,
}

impl Clone for SpdOperator {
    fn clone(&self) -> Self {
        Self {
            matrix: self.matrix.clone(),
            symbolic: Arc::clone(&self.symbolic),
            diag: self.diag.clone(),
            lower: self.lower.clone(),
            solves: AtomicUsize::new(self.solves.load(Ordering::Relaxed)),
        }
    }
}

impl SpdOperator {
    /// Orders, analyses and factorizes a symmetric matrix.
    pub fn factorize(m: &CscMatrix) -> Result<Self> {
        m.check_symmetric(1e-12)?;
        let symbolic = Arc::new(Symbolic::analyze(m));
        Self::factorize_with(symbolic, m)
    }

    /// Numeric factorization reusing an existing analysis.
    pub fn factorize_with(symbolic: Arc<Symbolic>, m: &CscMatrix) -> Result<Self> {
        let n = m.dim();
        if symbolic.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: symbolic.dim(),
                got: n,
            });
        }
        if !symbolic.covers(m) {
            return Err(Error::LinearFailure(
                "matrix pattern is not covered by the symbolic analysis".into(),
            ));
        }
        let perm = symbolic.perm();
        let iperm = symbolic.iperm();
        let mut diag = vec![0.0; n];
        let mut lower: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut work = vec![0.0; n];

        for j in 0..n {
            let pattern = symbolic.col_pattern(j);
            let mut ajj = 0.0;
            for (r, v) in m.column(perm[j]) {
                let i = iperm[r];
                if i >= j {
                    work[i] = v;
                    if i == j {
                        ajj = v;
                    }
                }
            }
            for &k in symbolic.row_list(j) {
                let kpat = symbolic.col_pattern(k);
                let pos = kpat.binary_search(&j).expect("row list consistent with pattern");
                let ljk = lower[k][pos];
                for (&i, &lik) in kpat[pos..].iter().zip(&lower[k][pos..]) {
                    work[i] -= lik * ljk;
                }
            }
            let d = work[j];
            work[j] = 0.0;
            if !(d > 1e-14 * ajj.abs()) || !d.is_finite() {
                for &i in pattern {
                    work[i] = 0.0;
                }
                return Err(Error::Indefinite {
                    column: perm[j],
                    pivot: d,
                });
            }
            let ljj = d.sqrt();
            diag[j] = ljj;
            let col: Vec<f64> = pattern
                .iter()
                .map(|&i| {
                    let v = work[i] / ljj;
                    work[i] = 0.0;
                    v
                })
                .collect();
            lower.push(col);
        }
        Ok(Self {
            matrix: m.clone(),
            symbolic,
            diag,
            lower,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn symbolic(&self) -> &Arc<Symbolic> {
        &self.symbolic
    }

    /// Number of right-hand sides solved so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn substitute(&self, b: &[f64]) -> Vec<f64> {
        let perm = self.symbolic.perm();
        let n = self.dim();
        let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            y[j] /= self.diag[j];
            let yj = y[j];
            for (&i, &l) in self.symbolic.col_pattern(j).iter().zip(&self.lower[j]) {
                y[i] -= l * yj;
            }
        }
        for j in (0..n).rev() {
            let mut s = y[j];
            for (&i, &l) in self.symbolic.col_pattern(j).iter().zip(&self.lower[j]) {
                s -= l * y[i];
            }
            y[j] = s / self.diag[j];
        }
        let mut x = vec![0.0; n];
        for (j, &p) in perm.iter().enumerate() {
            x[p] = y[j];
        }
        x
    }

    /// Solves `M x = b` by forward/backward substitution.
    ///
    /// One step of iterative refinement is taken when the residual exceeds
    /// `1e-10 * max(1, |b|_inf)`; if it still does, the solve fails.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        self.solves.fetch_add(1, Ordering::Relaxed);
        let mut x = self.substitute(b);
        let bound = SOLVE_RESIDUAL_TOL * norm_inf(b).max(1.0);
        let mut r = self.residual(&x, b);
        if norm_inf(&r) > bound {
            let dx = self.substitute(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
            r = self.residual(&x, b);
        }
        let rn = norm_inf(&r);
        if !rn.is_finite() || rn > bound {
            return Err(Error::LinearFailure(format!(
                "residual {rn:e} exceeds {bound:e} after refinement"
            )));
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mx = self.matrix.matvec(x);
        b.iter().zip(mx).map(|(bi, mi)| bi - mi).collect()
    }
}
