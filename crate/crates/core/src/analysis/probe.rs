use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_hypotheses, h_matrix, psi_mdc, Certificate};
use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::splinalg::norm_inf;

/// `f(psi) = psi_mdc - H (1 - sqrt(1 - psi^2))` on a radial network.
#[derive(Debug, Clone)]
pub struct FixedPointMap {
    psi_mdc: Vec<f64>,
    h: Vec<f64>,
}

impl FixedPointMap {
    pub fn new(net: &Network, cache: &TopologyCache) -> Result<Self> {
        check_hypotheses(net, cache)?;
        Ok(Self {
            psi_mdc: psi_mdc(net, cache)?,
            h: h_matrix(cache)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.psi_mdc.len()
    }

    pub fn psi_mdc(&self) -> &[f64] {
        &self.psi_mdc
    }

    /// `H`, dense row-major.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    fn check(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        if let Some((e, v)) = psi.iter().enumerate().find(|(_, v)| !(v.abs() < 1.0)) {
            return Err(Error::PsiOutOfRange {
                iteration: 0,
                branch: e,
                value: *v,
            });
        }
        Ok(())
    }

    pub fn eval(&self, psi: &[f64]) -> Result<Vec<f64>> {
        self.check(psi)?;
        let m = self.dim();
        let loss: Vec<f64> = psi.iter().map(|p| 1.0 - (1.0 - p * p).sqrt()).collect();
        Ok(self
            .h
            .chunks(m)
            .zip(&self.psi_mdc)
            .map(|(row, p0)| p0 - row.iter().zip(&loss).map(|(h, l)| h * l).sum::<f64>())
            .collect())
    }

    /// `-H diag(psi / sqrt(1 - psi^2))`, dense row-major.
    pub fn jacobian(&self, psi: &[f64]) -> Result<Vec<f64>> {
        self.check(psi)?;
        let m = self.dim();
        let d: Vec<f64> = psi.iter().map(|p| p / (1.0 - p * p).sqrt()).collect();
        Ok(self
            .h
            .iter()
            .enumerate()
            .map(|(i, h)| -h * d[i % m])
            .collect())
    }

    /// Picard iteration from `psi0` until the step is below `tol`.
    pub fn iterate(&self, psi0: &[f64], tol: f64, max_iterations: usize) -> Result<(Vec<f64>, usize)> {
        let mut psi = psi0.to_vec();
        for k in 1..=max_iterations {
            let next = self.eval(&psi)?;
            let step = next
                .iter()
                .zip(&psi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            psi = next;
            if step <= tol {
                return Ok((psi, k));
            }
        }
        Err(Error::MaxIterations(max_iterations))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub contraction_c: f64,
    pub beta_minus: f64,
    pub max_quotient: f64,
    pub invariance_violations: usize,
    pub lipschitz_violations: usize,
    pub max_jacobian_error: f64,
    /// First sample pair whose quotient exceeded `c`.
    pub counterexample: Option<(Vec<f64>, Vec<f64>)>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.invariance_violations == 0 && self.lipschitz_violations == 0 && self.max_jacobian_error <= 1e-6
    }
}

const INVARIANCE_SLACK: f64 = 1e-12;
const LIPSCHITZ_SLACK: f64 = 1e-9;
const JACOBIAN_SAMPLES: usize = 20;
const FD_STEP: f64 = 1e-6;

struct Sample {
    index: usize,
    quotient: f64,
    invariant: bool,
    pair: (Vec<f64>, Vec<f64>),
    jacobian_error: f64,
}

/// Samples pairs in `{|psi|_inf <= beta_minus}` and checks invariance,
/// the Lipschitz bound `c` and the analytic Jacobian.
///
/// Sample `i` draws from ChaCha8 stream `i` of `seed`, so the report does
/// not depend on the thread count.
pub fn contraction_probe(
    net: &Network,
    cache: &TopologyCache,
    cert: &Certificate,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let (Some(beta), Some(c), true) = (cert.beta_minus, cert.contraction_c, cert.feasible) else {
        return Err(Error::InfeasibleCertificate(cert.condition_value));
    };
    let map = FixedPointMap::new(net, cache)?;
    let m = map.dim();
    let results: Vec<Sample> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut draw = || -> Vec<f64> { (0..m).map(|_| rng.gen_range(-beta..=beta)).collect() };
            let (a, b) = (draw(), draw());
            let (fa, fb) = (map.eval(&a)?, map.eval(&b)?);
            let den = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let num = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let quotient = if den > 0.0 { num / den } else { 0.0 };
            let invariant = norm_inf(&fa) <= beta + INVARIANCE_SLACK && norm_inf(&fb) <= beta + INVARIANCE_SLACK;
            let jacobian_error = if i < JACOBIAN_SAMPLES {
                jacobian_error(&map, &a)?
            } else {
                0.0
            };
            Ok(Sample {
                index: i,
                quotient,
                invariant,
                pair: (a, b),
                jacobian_error,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = ProbeReport {
        samples,
        contraction_c: c,
        beta_minus: beta,
        max_quotient: 0.0,
        invariance_violations: 0,
        lipschitz_violations: 0,
        max_jacobian_error: 0.0,
        counterexample: None,
    };
    for s in results {
        debug_assert!(s.index < samples);
        report.max_quotient = report.max_quotient.max(s.quotient);
        report.max_jacobian_error = report.max_jacobian_error.max(s.jacobian_error);
        if !s.invariant {
            report.invariance_violations += 1;
        }
        if s.quotient > c + LIPSCHITZ_SLACK {
            report.lipschitz_violations += 1;
            report.counterexample.get_or_insert(s.pair);
        }
    }
    Ok(report)
}

/// Largest entry of the analytic minus the central-difference Jacobian.
fn jacobian_error(map: &FixedPointMap, psi: &[f64]) -> Result<f64> {
    let m = map.dim();
    let jac = map.jacobian(psi)?;
    let mut worst = 0.0f64;
    let mut p = psi.to_vec();
    for j in 0..m {
        let h = FD_STEP.min((1.0 - psi[j].abs()) / 2.0);
        p[j] = psi[j] + h;
        let up = map.eval(&p)?;
        p[j] = psi[j] - h;
        let down = map.eval(&p)?;
        p[j] = psi[j];
        for i in 0..m {
            let fd = (up[i] - down[i]) / (2.0 * h);
            worst = worst.max((fd - jac[i * m + j]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::certify_radial;

    fn two_bus(p: f64) -> (Network, TopologyCache) {
        let net = Network::two_bus(0.5, 1.0, 1.0, 1.0, p).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        (net, cache)
    }

    #[test]
    fn scalar_map() {
        let (net, cache) = two_bus(0.3);
        let map = FixedPointMap::new(&net, &cache).unwrap();
        assert!((map.h()[0] - 0.5).abs() < 1e-15);
        let f = map.eval(&[0.6]).unwrap();
        assert!((f[0] - (0.3 - 0.5 * 0.2)).abs() < 1e-15);
        let j = map.jacobian(&[0.6]).unwrap();
        assert!((j[0] + 0.5 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_solves_two_bus() {
        let (net, cache) = two_bus(0.3);
        let map = FixedPointMap::new(&net, &cache).unwrap();
        let (psi, _) = map.iterate(&[0.0], 1e-15, 200).unwrap();
        let th = psi[0].asin();
        let p = 0.5 - 0.5 * th.cos() + th.sin();
        assert!((p - 0.3).abs() < 1e-14);
    }

    #[test]
    fn probe_is_deterministic_and_passes() {
        let (net, cache) = two_bus(0.3);
        let cert = certify_radial(&net, &cache).unwrap();
        let a = contraction_probe(&net, &cache, &cert, 500, 7).unwrap();
        let b = contraction_probe(&net, &cache, &cert, 500, 7).unwrap();
        assert!(a.passed(), "{a:?}");
        assert_eq!(a.max_quotient, b.max_quotient);
        assert!(a.max_quotient <= a.contraction_c + 1e-9);
    }

    #[test]
    fn probe_needs_a_feasible_certificate() {
        let (net, cache) = two_bus(0.3);
        let cert = Certificate::from_scalars(0.5, 0.9);
        assert!(matches!(
            contraction_probe(&net, &cache, &cert, 10, 1),
            Err(Error::InfeasibleCertificate(_))
        ));
    }

    #[test]
    fn rejects_out_of_range() {
        let (net, cache) = two_bus(0.3);
        let map = FixedPointMap::new(&net, &cache).unwrap();
        assert!(map.eval(&[1.0]).is_err());
        assert!(map.eval(&[0.1, 0.2]).is_err());
    }
}
