use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::splinalg::CscMatrix;

/// Injections drawn by angles `theta_r`:
/// `A_r D_B sin(A_r^T theta) + G_diag V_r^2 - |A|_r D_G cos(A_r^T theta)`.
pub fn active_injections(cache: &TopologyCache, theta_r: &[f64]) -> Result<Vec<f64>> {
    if theta_r.len() != cache.n() {
        return Err(Error::DimensionMismatch {
            expected: cache.n(),
            got: theta_r.len(),
        });
    }
    let d = cache.incidence().diffs(theta_r);
    let sin_part: Vec<f64> = d.iter().zip(cache.d_b()).map(|(d, w)| w * d.sin()).collect();
    let cos_part: Vec<f64> = d.iter().zip(cache.d_g()).map(|(d, w)| w * d.cos()).collect();
    let a = cache.incidence().apply(&sin_part)?;
    let b = cache.incidence().apply_abs(&cos_part)?;
    Ok(a.iter()
        .zip(&b)
        .zip(cache.g_diag_v2())
        .map(|((a, b), s)| a + s - b)
        .collect())
}

/// `P_r` minus [`active_injections`]; zero exactly at a power flow solution.
pub fn active_residual(net: &Network, cache: &TopologyCache, theta_r: &[f64]) -> Result<Vec<f64>> {
    let p = super::check_injections(net, cache)?;
    let f = active_injections(cache, theta_r)?;
    Ok(p.iter().zip(f).map(|(p, f)| p - f).collect())
}

/// Jacobian of [`active_injections`]:
/// `A_r diag(D_B cos d) A_r^T + |A|_r diag(D_G sin d) A_r^T`.
pub fn jacobian(cache: &TopologyCache, theta_r: &[f64]) -> Result<CscMatrix> {
    let inc = cache.incidence();
    let d = inc.diffs(theta_r);
    let mut trip = Vec::with_capacity(4 * d.len());
    for (e, de) in d.iter().enumerate() {
        let a = cache.d_b()[e] * de.cos();
        let s = cache.d_g()[e] * de.sin();
        let (f, t) = inc.ends(e);
        if let Some(i) = f {
            trip.push((i, i, a + s));
        }
        if let Some(j) = t {
            trip.push((j, j, a - s));
        }
        if let (Some(i), Some(j)) = (f, t) {
            trip.push((i, j, -a - s));
            trip.push((j, i, -a + s));
        }
    }
    CscMatrix::from_triplets(cache.n(), &trip)
}
