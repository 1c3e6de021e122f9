//! Per-iteration angle error of every method on a meshed case.
//!
//! `cargo run --release --example compare_methods -- [case.m] [stress fraction]`

use lossy_dcpf::caseio::{read_case, to_network, StartPolicy};
use lossy_dcpf::cli::experiments::{compare, loadability_limit};
use lossy_dcpf::netmodel::TopologyCache;
use lossy_dcpf::solvers::{Method, SolveOptions};

fn main() -> lossy_dcpf::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case118.m").into());
    let fraction: f64 = args.next().map_or(0.9, |s| s.parse().expect("fraction"));

    let base = to_network(&read_case(&path)?, StartPolicy::Hot)?;
    let cache = TopologyCache::build(&base)?;
    let star = loadability_limit(&base, &cache)?;
    let net = base.scaled(fraction * star);
    println!("lambda* = {star:.3}, running at {fraction} of it");

    let opts = SolveOptions::default().with_tolerance(1e-13).with_max_iterations(100);
    for rep in compare(&net, &cache, &Method::ALL, &opts)? {
        let last = rep.trace.records.last().and_then(|r| r.theta_err_deg).unwrap_or(f64::NAN);
        println!(
            "{:>6}: {:>3} iterations, final error {last:.2e} deg, 1e-8 deg reached at k = {:?}",
            rep.trace.method.name(),
            rep.iterations(),
            rep.iterations_to(1e-8)
        );
    }
    Ok(())
}
