//! Converts a MATPOWER case to the canonical JSON schema and back.

use lossy_dcpf::caseio::{case_to_json, parse_case, read_case, to_network, StartPolicy};
use lossy_dcpf::netmodel::TopologyCache;
use lossy_dcpf::solvers::dcpf;

fn main() -> lossy_dcpf::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case9.m").into());
    let case = read_case(&path)?;
    let json = case_to_json(&case)?;
    println!("{json}");

    let back = parse_case(&json)?;
    let (a, b) = (to_network(&case, StartPolicy::Hot)?, to_network(&back, StartPolicy::Hot)?);
    let (ca, cb) = (TopologyCache::build(&a)?, TopologyCache::build(&b)?);
    let gap = dcpf(&a, &ca)?
        .iter()
        .zip(dcpf(&b, &cb)?)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    eprintln!("round trip DC angle difference: {gap:e} rad");
    Ok(())
}
