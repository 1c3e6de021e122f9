use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ordering::Symbolic;
use super::sparse::{norm_inf, CscMatrix};
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest column entry trigger the dense fallback.
const PIVOT_TOL: f64 = 1e-12;

/// LU factorization of a structurally symmetric sparse matrix.
///
/// The factorization uses the fill-reducing ordering without row pivoting.
/// When a pivot is tiny it falls back to dense partial pivoting.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    matrix: CscMatrix,
    backend: Backend,
}

#[derive(Debug, Clone)]
enum Backend {
    Sparse {
        symbolic: Arc<Symbolic>,
        /// Unit lower factor, values aligned with `col_pattern(j)`.
        lower: Vec<Vec<f64>>,
        /// Strictly upper part of column `j`, aligned with `row_list(j)`.
        upper: Vec<Vec<f64>>,
        diag: Vec<f64>,
    },
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SparseLu {
    pub fn factorize(m: &CscMatrix) -> Result<Self> {
        Self::factorize_with(Arc::new(Symbolic::analyze(m)), m)
    }

    /// Numeric factorization reusing a symbolic analysis that covers `m`.
    pub fn factorize_with(symbolic: Arc<Symbolic>, m: &CscMatrix) -> Result<Self> {
        let n = m.dim();
        if symbolic.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: symbolic.dim(),
                got: n,
            });
        }
        let symbolic = if symbolic.covers(m) {
            symbolic
        } else {
            Arc::new(Symbolic::analyze(m))
        };
        let backend = match sparse_factor(&symbolic, m) {
            Some((lower, upper, diag)) => Backend::Sparse {
                symbolic,
                lower,
                upper,
                diag,
            },
            None => dense_factor(m)?,
        };
        Ok(Self {
            n,
            matrix: m.clone(),
            backend,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// True when the static-pivot factorization was abandoned for dense LU.
    pub fn used_dense_fallback(&self) -> bool {
        matches!(self.backend, Backend::Dense(_))
    }

    /// Solves `M x = b` with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = self.substitute(b);
        let mx = self.matrix.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
        if norm_inf(&r) > 1e-14 * norm_inf(b) {
            let dx = self.substitute(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearFailure("non-finite solution".into()));
        }
        Ok(x)
    }

    fn substitute(&self, b: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Dense(lu) => {
                let rhs = DVector::from_column_slice(b);
                lu.solve(&rhs)
                    .map(|v| v.as_slice().to_vec())
                    .unwrap_or_else(|| vec![f64::NAN; self.n])
            }
            Backend::Sparse {
                symbolic,
                lower,
                upper,
                diag,
            } => {
                let perm = symbolic.perm();
                let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
                for j in 0..self.n {
                    let yj = y[j];
                    for (&i, &l) in symbolic.col_pattern(j).iter().zip(&lower[j]) {
                        y[i] -= l * yj;
                    }
                }
                for j in (0..self.n).rev() {
                    y[j] /= diag[j];
                    let xj = y[j];
                    for (&p, &u) in symbolic.row_list(j).iter().zip(&upper[j]) {
                        y[p] -= u * xj;
                    }
                }
                let mut x = vec![0.0; self.n];
                for (j, &p) in perm.iter().enumerate() {
                    x[p] = y[j];
                }
                x
            }
        }
    }
}

type SparseFactors = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

/// Left-looking LU on the symmetric filled pattern; `None` on a tiny pivot.
fn sparse_factor(symbolic: &Symbolic, m: &CscMatrix) -> Option<SparseFactors> {
    let n = m.dim();
    let perm = symbolic.perm();
    let iperm = symbolic.iperm();
    let mut lower: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut upper: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut diag = vec![0.0; n];
    let mut work = vec![0.0; n];

    for j in 0..n {
        let mut col_max = 0.0_f64;
        for (r, v) in m.column(perm[j]) {
            work[iperm[r]] = v;
            col_max = col_max.max(v.abs());
        }
        let rows_above = symbolic.row_list(j);
        for &p in rows_above {
            let upj = work[p];
            if upj == 0.0 {
                continue;
            }
            for (&i, &l) in symbolic.col_pattern(p).iter().zip(&lower[p]) {
                work[i] -= l * upj;
            }
        }
        let ujj = work[j];
        if !ujj.is_finite() || ujj.abs() <= PIVOT_TOL * col_max {
            return None;
        }
        diag[j] = ujj;
        work[j] = 0.0;
        upper.push(
            rows_above
                .iter()
                .map(|&p| std::mem::replace(&mut work[p], 0.0))
                .collect(),
        );
        lower.push(
            symbolic
                .col_pattern(j)
                .iter()
                .map(|&i| std::mem::replace(&mut work[i], 0.0) / ujj)
                .collect(),
        );
    }
    Some((lower, upper, diag))
}

fn dense_factor(m: &CscMatrix) -> Result<Backend> {
    let n = m.dim();
    let dense = DMatrix::from_row_slice(n, n, &m.to_dense());
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let lu = dense.lu();
    let u = lu.u();
    for k in 0..n {
        if !(u[(k, k)].abs() > 1e-14 * scale) {
            return Err(Error::Singular { column: k });
        }
    }
    Ok(Backend::Dense(lu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonsymmetric_solve() {
        let m = CscMatrix::from_dense(3, &[4.0, 1.0, 0.0, -2.0, 5.0, 1.0, 0.0, 3.0, 6.0]).unwrap();
        let lu = SparseLu::factorize(&m).unwrap();
        assert!(!lu.used_dense_fallback());
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b).unwrap();
        let r = m.matvec(&x);
        for (ri, bi) in r.iter().zip(b) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_falls_back_to_dense() {
        let m = CscMatrix::from_dense(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let lu = SparseLu::factorize(&m).unwrap();
        assert!(lu.used_dense_fallback());
        assert_eq!(lu.solve(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let m = CscMatrix::from_dense(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            SparseLu::factorize(&m),
            Err(Error::Singular { .. })
        ));
    }
}
