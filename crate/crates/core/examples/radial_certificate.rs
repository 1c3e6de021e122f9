//! Convergence certificate for a radial feeder as the loading grows.

use lossy_dcpf::analysis::{certify_radial, gamma_critical};
use lossy_dcpf::caseio::{read_case, to_network, StartPolicy};
use lossy_dcpf::netmodel::TopologyCache;
use lossy_dcpf::solvers::{lmdcpf, SolveOptions};

fn main() -> lossy_dcpf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/case33bw.m");
    let net = to_network(&read_case(path)?, StartPolicy::Cold)?;
    let cache = TopologyCache::build(&net)?;
    let base = certify_radial(&net, &cache)?;
    println!("rho = {:.4}, gamma = {:.4}, critical gamma = {:.4}", base.rho, base.gamma, gamma_critical(base.rho));

    for lambda in [0.05, 0.1, 0.2, 0.5, 1.0, 4.0] {
        let scaled = net.scaled(lambda);
        let cert = certify_radial(&scaled, &cache)?;
        let rep = lmdcpf(&scaled, &cache, &SolveOptions::default())?;
        match (cert.contraction_c, cert.angle_bound) {
            (Some(c), Some(bound)) => println!(
                "lambda {lambda:>5}: certified, c = {c:.4}, |theta_i - theta_j| <= {:.3} deg, error bound at k=5 {:.1e}; solver {:?} in {}",
                bound.to_degrees(),
                cert.error_bound(5).unwrap_or(f64::NAN),
                rep.trace.termination,
                rep.iterations()
            ),
            _ => println!(
                "lambda {lambda:>5}: condition {:.3} >= 1, no certificate; solver {:?} in {}",
                cert.condition_value,
                rep.trace.termination,
                rep.iterations()
            ),
        }
    }
    Ok(())
}
