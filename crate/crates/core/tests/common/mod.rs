#![allow(dead_code)]

use std::path::PathBuf;

use lossy_dcpf::analysis::{certify_radial, gamma_critical, Certificate};
use lossy_dcpf::caseio::{read_case, to_network, StartPolicy};
use lossy_dcpf::netmodel::{Branch, Bus, Network, TopologyCache};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MESHED: [&str; 6] = ["case9", "case14", "case24_ieee_rts", "case39", "case57", "case118"];

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{name}.m"))
}

pub fn fixture(name: &str, start: StartPolicy) -> (Network, TopologyCache) {
    let net = to_network(&read_case(data(name)).unwrap(), start).unwrap();
    let cache = TopologyCache::build(&net).unwrap();
    (net, cache)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree with `n_buses` buses, unit voltages, `g/b` per branch in `[0, max_ratio]`
/// and random injections. The slack is a random bus.
pub fn random_tree(rng: &mut ChaCha8Rng, n_buses: usize, max_ratio: f64) -> Network {
    let buses = (1..=n_buses)
        .map(|id| Bus {
            id,
            voltage: 1.0,
            injection: rng.gen_range(-1.0..=1.0),
            shunt_conductance: 0.0,
        })
        .collect();
    let branches = (2..=n_buses)
        .map(|id| {
            let parent = rng.gen_range(1..id);
            let b = rng.gen_range(0.5..20.0);
            let (from, to) = if rng.gen_bool(0.5) { (id, parent) } else { (parent, id) };
            Branch {
                from,
                to,
                conductance: b * rng.gen_range(0.0..=max_ratio),
                susceptance: b,
                tap: 1.0,
            }
        })
        .collect();
    let slack = rng.gen_range(1..=n_buses);
    Network::new(buses, branches, slack, 100.0).unwrap()
}

pub struct Certified {
    pub net: Network,
    pub cache: TopologyCache,
    pub cert: Certificate,
}

/// Random radial network whose injections are scaled so that
/// `gamma = u * gamma_crit(rho)` with `u` drawn from `margin`.
pub fn random_certified(seed: u64, max_buses: usize, margin: std::ops::Range<f64>) -> Certified {
    let mut rng = rng(seed);
    let n = rng.gen_range(2..=max_buses);
    let raw = random_tree(&mut rng, n, 1.0);
    let cache = TopologyCache::build(&raw).unwrap();
    let c0 = certify_radial(&raw, &cache).unwrap();
    let u = rng.gen_range(margin);
    let net = raw.scaled(u * gamma_critical(c0.rho) / c0.gamma);
    let cert = certify_radial(&net, &cache).unwrap();
    assert!(cert.feasible, "seed {seed}: {cert:?}");
    Certified { net, cache, cert }
}

/// Root of an increasing function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Random connected network: a random tree plus `extra` random edges
/// (parallel edges allowed), with lossy branches and unequal voltages.
pub fn random_meshed(rng: &mut ChaCha8Rng, n_buses: usize, extra: usize) -> Network {
    let tree = random_tree(rng, n_buses, 0.5);
    let mut branches = tree.branches().to_vec();
    for _ in 0..extra {
        let f = rng.gen_range(1..=n_buses);
        let t = rng.gen_range(1..=n_buses);
        if f == t {
            continue;
        }
        let b = rng.gen_range(0.5..20.0);
        branches.push(Branch {
            from: f,
            to: t,
            conductance: b * rng.gen_range(0.0..0.5),
            susceptance: b,
            tap: 1.0,
        });
    }
    let buses = tree
        .buses()
        .iter()
        .map(|b| Bus {
            voltage: rng.gen_range(0.95..1.05),
            injection: 0.2 * b.injection,
            ..b.clone()
        })
        .collect();
    Network::new(buses, branches, tree.slack(), 100.0).unwrap()
}

/// `lmdcpf` iterates `psi[1..=k]`, one run per `k`.
pub fn psi_iterates(net: &Network, cache: &TopologyCache, kmax: usize) -> Vec<Vec<f64>> {
    use lossy_dcpf::solvers::{lmdcpf, SolveOptions};
    (1..=kmax)
        .map(|k| {
            let opts = SolveOptions::default().with_tolerance(1e-300).with_max_iterations(k);
            lmdcpf(net, cache, &opts).unwrap().state.psi
        })
        .collect()
}
