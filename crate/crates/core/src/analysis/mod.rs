//! Existence, uniqueness and convergence certificates for radial networks.
//!
//! For a radial network with equal voltage magnitudes, no taps and no shunt
//! conductance, the lossy iteration is the map
//! `f(psi) = psi_mdc - H (1 - sqrt(1 - psi^2))` with
//! `H = D_B^{-1} A_r^{-1} |A|_r D_G`. Two scalars summarize it:
//! `rho = |H|_inf` measures the R/X ratio and `gamma = |psi_mdc|_inf` the
//! loading. When `gamma^2 + 2 gamma rho < 1` the map contracts on
//! `{|psi|_inf <= beta_minus}`.

mod probe;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::splinalg::norm_inf;

pub use probe::{contraction_probe, FixedPointMap, ProbeReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub rho: f64,
    pub gamma: f64,
    /// `gamma^2 + 2 gamma rho`.
    pub condition_value: f64,
    pub feasible: bool,
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    pub contraction_c: Option<f64>,
    /// `arcsin(beta_minus)`: bound on every branch angle difference, radians.
    pub angle_bound: Option<f64>,
}

impl Certificate {
    /// Certificate for given `rho` and `gamma`.
    pub fn from_scalars(rho: f64, gamma: f64) -> Self {
        let condition_value = gamma * gamma + 2.0 * gamma * rho;
        let feasible = condition_value < 1.0;
        let betas = if feasible { beta_pair(rho, gamma) } else { None };
        let c = betas.map(|(bm, _)| contraction_constant(rho, bm));
        Self {
            rho,
            gamma,
            condition_value,
            feasible,
            beta_minus: betas.map(|b| b.0),
            beta_plus: betas.map(|b| b.1),
            contraction_c: c,
            angle_bound: betas.map(|b| b.0.asin()),
        }
    }

    /// `gamma / (1 - c) * c^k`, the bound on `|psi[k] - psi*|_inf`.
    pub fn error_bound(&self, k: usize) -> Option<f64> {
        let c = self.contraction_c?;
        let k = i32::try_from(k).unwrap_or(i32::MAX);
        Some(self.gamma / (1.0 - c) * c.powi(k))
    }
}

/// Roots `beta_-`, `beta_+` of `(1 + rho^2) b^2 - 2 (gamma + rho) b + (gamma + rho)^2 - rho^2`.
///
/// `None` when `gamma^2 + 2 gamma rho > 1` beyond round-off.
pub fn beta_pair(rho: f64, gamma: f64) -> Option<(f64, f64)> {
    let mut disc = 1.0 - gamma * gamma - 2.0 * gamma * rho;
    if disc < 0.0 && disc > -4.0 * f64::EPSILON {
        disc = 0.0;
    }
    if disc < 0.0 {
        return None;
    }
    let s = 1.0 + rho * rho;
    let mid = (gamma + rho) / s;
    let half = rho * disc.sqrt() / s;
    Some((mid - half, mid + half))
}

/// `rho beta / sqrt(1 - beta^2)`.
pub fn contraction_constant(rho: f64, beta: f64) -> f64 {
    rho * beta / (1.0 - beta * beta).sqrt()
}

/// Largest `gamma` with `gamma^2 + 2 gamma rho <= 1`.
pub fn gamma_critical(rho: f64) -> f64 {
    -rho + (1.0 + rho * rho).sqrt()
}

/// Open interval of branch angle differences that admit no solution.
pub fn no_solution_band(cert: &Certificate) -> Result<(f64, f64)> {
    match (cert.feasible, cert.beta_minus, cert.beta_plus) {
        (true, Some(bm), Some(bp)) => Ok((bm.asin(), bp.asin())),
        _ => Err(Error::InfeasibleCertificate(cert.condition_value)),
    }
}

/// Checks the radial, equal-voltage, tap-free, shunt-free hypotheses.
pub fn check_hypotheses(net: &Network, cache: &TopologyCache) -> Result<()> {
    if !cache.is_radial() {
        return Err(Error::Hypothesis(format!("network has {} independent cycles", cache.c())));
    }
    let v0 = net.buses()[0].voltage;
    if let Some(b) = net.buses().iter().find(|b| (b.voltage - v0).abs() > 1e-12 * v0) {
        return Err(Error::Hypothesis(format!(
            "voltage magnitudes differ (bus {} has {}, bus {} has {v0})",
            b.id,
            b.voltage,
            net.buses()[0].id
        )));
    }
    if net.has_taps() {
        return Err(Error::Hypothesis("off-nominal taps present".into()));
    }
    if let Some(b) = net.buses().iter().find(|b| b.shunt_conductance != 0.0) {
        return Err(Error::Hypothesis(format!("bus {} has shunt conductance", b.id)));
    }
    Ok(())
}

/// Certificate for a radial network.
pub fn certify_radial(net: &Network, cache: &TopologyCache) -> Result<Certificate> {
    check_hypotheses(net, cache)?;
    let (rho, _) = rho_two_ways(cache)?;
    Ok(Certificate::from_scalars(rho, norm_inf(&psi_mdc(net, cache)?)))
}

/// `psi_mdc = A_r^T L_B^{-1} P_r`.
pub fn psi_mdc(net: &Network, cache: &TopologyCache) -> Result<Vec<f64>> {
    let th = cache.laplacian().solve(&net.injections_reduced())?;
    Ok(cache.incidence().diffs(&th))
}

/// Solves `A_r y = r` on a spanning tree by accumulating subtree sums.
pub fn tree_solve(cache: &TopologyCache, r: &[f64]) -> Result<Vec<f64>> {
    if !cache.is_radial() {
        return Err(Error::Hypothesis("A_r is square only for radial networks".into()));
    }
    if r.len() != cache.n() {
        return Err(Error::DimensionMismatch {
            expected: cache.n(),
            got: r.len(),
        });
    }
    let slack = cache.slack();
    let reduced = |pos: usize| if pos < slack { pos } else { pos - 1 };
    let tree = cache.tree();
    let mut sub = vec![0.0; cache.n() + 1];
    let mut y = vec![0.0; cache.m()];
    for &w in tree.order().iter().rev() {
        let (Some(pe), Some(p)) = (tree.parent_edge(w), tree.parent(w)) else {
            continue;
        };
        let s = sub[w] + r[reduced(w)];
        y[pe] = if cache.edges()[pe].0 == w { s } else { -s };
        sub[p] += s;
    }
    Ok(y)
}

/// Columns of `H` by tree solves (`D_B^{-1} A_r^{-1}`), dense row-major.
pub fn h_matrix(cache: &TopologyCache) -> Result<Vec<f64>> {
    h_columns(cache, |r| {
        let y = tree_solve(cache, r)?;
        Ok(y.iter().zip(cache.d_b()).map(|(y, w)| y / w).collect())
    })
}

/// Columns of `H` by Laplacian solves (`A_r^T L_B^{-1}`), dense row-major.
pub fn h_matrix_laplacian(cache: &TopologyCache) -> Result<Vec<f64>> {
    h_columns(cache, |r| Ok(cache.incidence().diffs(&cache.laplacian().solve(r)?)))
}

fn h_columns(cache: &TopologyCache, mut inv: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let m = cache.m();
    let mut h = vec![0.0; m * m];
    let mut w = vec![0.0; m];
    for e in 0..m {
        w[e] = cache.d_g()[e];
        let col = inv(&cache.incidence().apply_abs(&w)?)?;
        w[e] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            h[i * m + e] = v;
        }
    }
    Ok(h)
}

fn row_norm(m: usize, h: &[f64]) -> f64 {
    h.chunks(m.max(1))
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `rho` from tree column solves and from Laplacian solves.
pub fn rho_two_ways(cache: &TopologyCache) -> Result<(f64, f64)> {
    let m = cache.m();
    Ok((row_norm(m, &h_matrix(cache)?), row_norm(m, &h_matrix_laplacian(cache)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bus_certificate() {
        let net = Network::two_bus(0.5, 1.0, 1.0, 1.0, 0.3).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        let cert = certify_radial(&net, &cache).unwrap();
        assert!((cert.rho - 0.5).abs() < 1e-15);
        assert!((cert.gamma - 0.3).abs() < 1e-15);
        assert!((cert.condition_value - 0.39).abs() < 1e-15);
        assert!(cert.feasible);
    }

    #[test]
    fn lossless_has_zero_contraction() {
        let cert = Certificate::from_scalars(0.0, 0.4);
        assert_eq!(cert.beta_minus, Some(0.4));
        assert_eq!(cert.beta_plus, Some(0.4));
        assert_eq!(cert.contraction_c, Some(0.0));
        assert_eq!(cert.error_bound(1), Some(0.0));
        let (lo, hi) = no_solution_band(&cert).unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn critical_loading() {
        let gc = gamma_critical(0.5);
        assert!((gc - 0.618_033_988_749_895).abs() < 1e-15);
        let cert = Certificate::from_scalars(0.5, gc);
        assert!((cert.condition_value - 1.0).abs() < 1e-15);
        assert!(!cert.feasible || cert.condition_value < 1.0);
        let (bm, bp) = beta_pair(0.5, gc).unwrap();
        assert!((bm - bp).abs() < 1e-7);
        assert!((contraction_constant(0.5, bm) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_band_is_an_error() {
        let cert = Certificate::from_scalars(0.5, 0.9);
        assert!(!cert.feasible);
        assert_eq!(cert.beta_minus, None);
        assert!(matches!(no_solution_band(&cert), Err(Error::InfeasibleCertificate(_))));
    }

    #[test]
    fn loading_scales_gamma() {
        let net = Network::two_bus(0.0, 1.0, 1.0, 1.0, 0.4).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        let cert = certify_radial(&net.scaled(2.0), &cache).unwrap();
        assert!((cert.gamma - 0.8).abs() < 1e-15);
        assert!(cert.feasible);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let unequal = Network::two_bus(0.5, 1.0, 1.0, 1.05, 0.3).unwrap();
        let cache = TopologyCache::build(&unequal).unwrap();
        assert!(matches!(certify_radial(&unequal, &cache), Err(Error::Hypothesis(_))));
    }
}
