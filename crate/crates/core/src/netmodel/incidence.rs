use crate::error::{Error, Result};
use crate::splinalg::CscMatrix;

/// Signed node-edge incidence with the slack row removed.
///
/// Edge `e` oriented `from -> to` has `+1` in the `from` row and `-1` in the
/// `to` row. Endpoints are stored in reduced coordinates, `None` for the slack.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedIncidence {
    rows: usize,
    ends: Vec<(Option<usize>, Option<usize>)>,
}

impl ReducedIncidence {
    /// Builds `A_r` from bus-index edge endpoints, removing `slack`.
    pub fn new(buses: usize, slack: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if slack >= buses {
            return Err(Error::InvalidNetwork(format!(
                "slack index {slack} out of range for {buses} buses"
            )));
        }
        let reduce = |b: usize| -> Result<Option<usize>> {
            match b {
                _ if b >= buses => Err(Error::InvalidNetwork(format!("bus index {b} out of range"))),
                _ if b == slack => Ok(None),
                _ if b > slack => Ok(Some(b - 1)),
                _ => Ok(Some(b)),
            }
        };
        let ends = edges
            .iter()
            .map(|&(f, t)| Ok((reduce(f)?, reduce(t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows: buses - 1,
            ends,
        })
    }

    /// Number of non-slack buses `n`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of branches `m`.
    pub fn edges(&self) -> usize {
        self.ends.len()
    }

    /// Reduced endpoints of edge `e`.
    pub fn ends(&self, e: usize) -> (Option<usize>, Option<usize>) {
        self.ends[e]
    }

    /// Branch angle differences `A_r^T theta_r`.
    pub fn diffs(&self, theta: &[f64]) -> Vec<f64> {
        let at = |b: Option<usize>| b.map_or(0.0, |i| theta[i]);
        self.ends.iter().map(|&(f, t)| at(f) - at(t)).collect()
    }

    /// `A_r w` for a branch vector `w`.
    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_edges(w.len())?;
        let mut out = vec![0.0; self.rows];
        for (&(f, t), &we) in self.ends.iter().zip(w) {
            if let Some(i) = f {
                out[i] += we;
            }
            if let Some(j) = t {
                out[j] -= we;
            }
        }
        Ok(out)
    }

    /// `|A|_r w` for a branch vector `w`.
    pub fn apply_abs(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_edges(w.len())?;
        let mut out = vec![0.0; self.rows];
        for (&(f, t), &we) in self.ends.iter().zip(w) {
            for b in [f, t].into_iter().flatten() {
                out[b] += we;
            }
        }
        Ok(out)
    }

    /// `A_r diag(w) A_r^T`.
    pub fn weighted_laplacian(&self, w: &[f64]) -> Result<CscMatrix> {
        self.check_edges(w.len())?;
        let mut trip = Vec::with_capacity(4 * self.ends.len());
        for (&(f, t), &we) in self.ends.iter().zip(w) {
            if let Some(i) = f {
                trip.push((i, i, we));
            }
            if let Some(j) = t {
                trip.push((j, j, we));
            }
            if let (Some(i), Some(j)) = (f, t) {
                trip.push((i, j, -we));
                trip.push((j, i, -we));
            }
        }
        CscMatrix::from_triplets(self.rows, &trip)
    }

    /// Dense row-major `n x m` copy for tests and small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.ends.len();
        let mut d = vec![0.0; self.rows * m];
        for (e, &(f, t)) in self.ends.iter().enumerate() {
            if let Some(i) = f {
                d[i * m + e] += 1.0;
            }
            if let Some(j) = t {
                d[j * m + e] -= 1.0;
            }
        }
        d
    }

    fn check_edges(&self, len: usize) -> Result<()> {
        if len == self.ends.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.ends.len(),
                got: len,
            })
        }
    }
}
