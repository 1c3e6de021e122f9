use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::solvers::{angle_error_deg, newton_raphson, reference_angles, solve, Method, PsiGuard, SolveOptions, SolveReport, Termination};

/// Bisection resolution for the loadability limit.
pub const LAMBDA_RESOLUTION: f64 = 1e-3;

/// Distance to the reference that counts as success in robustness runs, degrees.
pub const SUCCESS_TOLERANCE_DEG: f64 = 1e-6;

const LAMBDA_CEILING: f64 = 1e6;

/// Whether Newton-Raphson from flat start converges at loading `lambda`.
pub fn nr_solvable(net: &Network, cache: &TopologyCache, lambda: f64) -> Result<bool> {
    let scaled = net.scaled(lambda);
    let rep = newton_raphson(&scaled, cache, &vec![0.0; cache.n()], &SolveOptions::default())?;
    Ok(rep.converged() && rep.state.injection_residual <= 1e-8)
}

/// Largest `lambda` with a Newton-Raphson solution from flat start, to [`LAMBDA_RESOLUTION`].
///
/// Injections of every non-slack bus are scaled uniformly. This approximates
/// the continuation power flow nose point of the fixed-voltage model.
pub fn loadability_limit(net: &Network, cache: &TopologyCache) -> Result<f64> {
    if !nr_solvable(net, cache, 1.0)? {
        return Err(Error::BaseCaseInfeasible);
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while nr_solvable(net, cache, hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > LAMBDA_CEILING {
            return Err(Error::InvalidNetwork(format!(
                "loading remains solvable beyond lambda = {LAMBDA_CEILING}"
            )));
        }
    }
    while hi - lo > LAMBDA_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if nr_solvable(net, cache, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Runs each method with errors measured against the flat-start Newton reference.
pub fn compare(net: &Network, cache: &TopologyCache, methods: &[Method], opts: &SolveOptions) -> Result<Vec<SolveReport>> {
    let reference = reference_angles(net, cache)?;
    let opts = opts.clone().with_reference(reference);
    methods.iter().map(|&m| solve(m, net, cache, &opts)).collect()
}

/// Frozen-cycle L-MDCPF errors in degrees at each `k`, hot or cold as given by `net`.
///
/// If the iteration converges before `k`, the last error is repeated. If it
/// fails before `k` (a branch variable leaves `(-1, 1)`), the entry is `None`.
pub fn error_table(net: &Network, cache: &TopologyCache, ks: &[usize], tolerance: f64) -> Result<Vec<(usize, Option<f64>)>> {
    let reference = reference_angles(net, cache)?;
    let kmax = ks.iter().copied().max().unwrap_or(0).max(1);
    let opts = SolveOptions::default()
        .with_reference(reference)
        .with_max_iterations(kmax)
        .with_tolerance(tolerance)
        .frozen_cycles();
    let rep = solve(Method::Lmdcpf, net, cache, &opts)?;
    let errs: Vec<f64> = rep.trace.records.iter().filter_map(|r| r.theta_err_deg).collect();
    let stopped_early = matches!(rep.trace.termination, Termination::Converged);
    Ok(ks
        .iter()
        .map(|&k| match errs.get(k) {
            Some(&e) => (k, Some(e)),
            None if stopped_early => (k, errs.last().copied()),
            None => (k, None),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRate {
    pub phi_deg: f64,
    pub method: Method,
    pub successes: usize,
    pub trials: usize,
}

impl SuccessRate {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Initial angles for trial `trial` at spread index `phi_index`, uniform on `[-phi, phi]`.
pub fn random_start(n: usize, phi_deg: f64, seed: u64, phi_index: usize, trial: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((phi_index as u64) << 32) | trial as u64);
    let phi = phi_deg.to_radians();
    (0..n)
        .map(|_| if phi > 0.0 { rng.gen_range(-phi..=phi) } else { 0.0 })
        .collect()
}

/// Fraction of random starts from which each method reaches the flat-start reference.
///
/// Iterative methods only; one-shot methods ignore the start. The lossy
/// iterations use [`PsiGuard::Clamp`] so that wild starts are not rejected
/// outright. Results are ordered by `(phi, method)` regardless of scheduling.
pub fn robustness(
    net: &Network,
    cache: &TopologyCache,
    methods: &[Method],
    phis_deg: &[f64],
    trials: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<Vec<SuccessRate>> {
    let reference = reference_angles(net, cache)?;
    let jobs: Vec<(usize, usize)> = (0..phis_deg.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Vec<bool>> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let theta0 = random_start(cache.n(), phis_deg[p], seed, p, t);
            methods
                .iter()
                .map(|&m| {
                    let o = opts
                        .clone()
                        .with_initial_angles(theta0.clone())
                        .with_guard(PsiGuard::Clamp);
                    reached(solve(m, net, cache, &o), &reference)
                })
                .collect()
        })
        .collect();
    let mut rates = Vec::with_capacity(phis_deg.len() * methods.len());
    for (p, &phi) in phis_deg.iter().enumerate() {
        for (j, &method) in methods.iter().enumerate() {
            let successes = outcomes[p * trials..(p + 1) * trials]
                .iter()
                .filter(|o| o[j])
                .count();
            rates.push(SuccessRate {
                phi_deg: phi,
                method,
                successes,
                trials,
            });
        }
    }
    Ok(rates)
}

/// A run succeeds when it stops normally (converged or at the iteration cap)
/// with its final iterate within [`SUCCESS_TOLERANCE_DEG`] of the reference.
fn reached(rep: Result<SolveReport>, reference: &[f64]) -> bool {
    match rep {
        Ok(r) => {
            matches!(r.trace.termination, Termination::Converged | Termination::MaxIterations)
                && angle_error_deg(&r.state.theta_r, reference) <= SUCCESS_TOLERANCE_DEG
        }
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_two_bus_limit() {
        let net = Network::two_bus(0.0, 1.0, 1.0, 1.0, 0.4).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        let l = loadability_limit(&net, &cache).unwrap();
        assert!((l - 2.5).abs() <= LAMBDA_RESOLUTION, "{l}");
    }

    #[test]
    fn infeasible_base_case() {
        let net = Network::two_bus(0.0, 1.0, 1.0, 1.0, 1.4).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        assert!(matches!(loadability_limit(&net, &cache), Err(Error::BaseCaseInfeasible)));
    }

    #[test]
    fn flat_spread_always_succeeds() {
        let net = Network::two_bus(0.2, 1.0, 1.0, 1.0, 0.4).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        let rates = robustness(&net, &cache, &[Method::Nr, Method::Lmdcpf], &[0.0], 5, 3, &SolveOptions::default()).unwrap();
        assert!(rates.iter().all(|r| r.rate() == 1.0), "{rates:?}");
    }

    #[test]
    fn random_start_is_reproducible() {
        assert_eq!(random_start(4, 10.0, 9, 1, 2), random_start(4, 10.0, 9, 1, 2));
        assert_ne!(random_start(4, 10.0, 9, 1, 2), random_start(4, 10.0, 9, 1, 3));
        assert!(random_start(4, 10.0, 9, 0, 0).iter().all(|t| t.abs() <= 10f64.to_radians()));
    }
}
