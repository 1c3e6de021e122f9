//! Loadability limit and success rates from random initial angles.
//!
//! `cargo run --release --example stress_and_robustness -- [case.m] [trials] [fraction] [max iterations]`

use lossy_dcpf::caseio::{read_case, to_network, StartPolicy};
use lossy_dcpf::cli::experiments::{loadability_limit, robustness};
use lossy_dcpf::netmodel::TopologyCache;
use lossy_dcpf::solvers::{Method, SolveOptions};

fn main() -> lossy_dcpf::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case118.m").into());
    let trials: usize = args.next().map_or(200, |s| s.parse().expect("trials"));
    let fraction: f64 = args.next().map_or(0.9, |s| s.parse().expect("fraction"));
    let max_iterations: usize = args.next().map_or(50, |s| s.parse().expect("max iterations"));

    let base = to_network(&read_case(&path)?, StartPolicy::Hot)?;
    let cache = TopologyCache::build(&base)?;
    let star = loadability_limit(&base, &cache)?;
    let net = base.scaled(fraction * star);
    println!("lambda* = {star:.3}; {trials} trials per spread at {fraction} lambda*, at most {max_iterations} iterations");

    let methods = [Method::Nr, Method::Cnr, Method::Lmdcpf];
    let phis = [0.0, 15.0, 20.0, 25.0, 30.0, 40.0, 80.0];
    let rates = robustness(&net, &cache, &methods, &phis, trials, 1, &SolveOptions::default().with_max_iterations(max_iterations))?;
    println!("{:>6} {:>6} {:>6} {:>8}", "phi", "nr", "cnr", "lmdcpf");
    for row in rates.chunks(methods.len()) {
        println!("{:>6} {:>6.3} {:>6.3} {:>8.3}", row[0].phi_deg, row[0].rate(), row[1].rate(), row[2].rate());
    }
    Ok(())
}
