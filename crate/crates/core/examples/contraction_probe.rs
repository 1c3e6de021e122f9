//! Samples the radial fixed-point map and checks the contraction claims.

use lossy_dcpf::analysis::{certify_radial, contraction_probe, FixedPointMap};
use lossy_dcpf::caseio::{read_case, to_network, StartPolicy};
use lossy_dcpf::netmodel::TopologyCache;

fn main() -> lossy_dcpf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/case33bw.m");
    let net = to_network(&read_case(path)?, StartPolicy::Cold)?.scaled(0.1);
    let cache = TopologyCache::build(&net)?;
    let cert = certify_radial(&net, &cache)?;
    let report = contraction_probe(&net, &cache, &cert, 10_000, 42)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));

    let map = FixedPointMap::new(&net, &cache)?;
    let (psi, k) = map.iterate(&vec![0.0; map.dim()], 1e-14, 500)?;
    let worst = psi.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    println!("fixed point after {k} iterations, |psi*|_inf = {worst:.6} <= beta_- = {:.6}", report.beta_minus);
    Ok(())
}
