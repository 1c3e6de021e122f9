//! Two buses joined by one lossy line: closed form, L-MDCPF, Newton and the certificate.

use lossy_dcpf::analysis::{certify_radial, no_solution_band};
use lossy_dcpf::netmodel::{Network, TopologyCache};
use lossy_dcpf::solvers::{lmdcpf, newton_raphson, two_bus_closed_form, SolveOptions};

fn main() -> lossy_dcpf::Result<()> {
    let (g, b, p1) = (0.5, 1.0, 0.3);
    let net = Network::two_bus(g, b, 1.0, 1.0, p1)?;
    let cache = TopologyCache::build(&net)?;

    let exact = two_bus_closed_form(g, b, 1.0, 1.0, p1)?;
    println!("closed form roots (deg): {:?}", exact.iter().map(|t| t.to_degrees()).collect::<Vec<_>>());

    let opts = SolveOptions::default().with_tolerance(1e-14);
    let rep = lmdcpf(&net, &cache, &opts)?;
    println!("L-MDCPF: {:.12} deg after {} iterations", rep.state.theta_r[0].to_degrees(), rep.iterations());
    for r in &rep.trace.records {
        println!("  k={:2} step={:?}", r.k, r.psi_step);
    }

    let nr = newton_raphson(&net, &cache, &[0.0], &opts)?;
    println!("Newton:  {:.12} deg after {} iterations", nr.state.theta_r[0].to_degrees(), nr.iterations());

    let cert = certify_radial(&net, &cache)?;
    println!("rho = {}, gamma = {}, condition = {}", cert.rho, cert.gamma, cert.condition_value);
    let (lo, hi) = no_solution_band(&cert)?;
    println!("no solution with |theta| in ({:.3}, {:.3}) deg", lo.to_degrees(), hi.to_degrees());
    Ok(())
}
