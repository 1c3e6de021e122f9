//! Frozen-cycle L-MDCPF error after one, two and three iterations on the bundled cases,
//! at base load and at 0.9 of the loadability limit. `-` marks a run that left the
//! domain of `arcsin` before that iteration.

use lossy_dcpf::caseio::{read_case, to_network, StartPolicy};
use lossy_dcpf::cli::experiments::{error_table, loadability_limit};
use lossy_dcpf::netmodel::TopologyCache;

fn main() -> lossy_dcpf::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    println!("{:<16} {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8}", "case", "k=1", "k=2", "k=3", "high k=1", "k=2", "k=3");
    for name in ["case9", "case14", "case24_ieee_rts", "case39", "case57", "case118"] {
        let net = to_network(&read_case(format!("{dir}/{name}.m"))?, StartPolicy::Hot)?;
        let cache = TopologyCache::build(&net)?;
        let base = error_table(&net, &cache, &[1, 2, 3], 1e-10)?;
        let high = net.scaled(0.9 * loadability_limit(&net, &cache)?);
        let high = error_table(&high, &cache, &[1, 2, 3], 1e-10)?;
        let cells: Vec<String> = base
            .iter()
            .chain(&high)
            .map(|(_, e)| e.map_or("-".into(), |e| format!("{e:.2}")))
            .collect();
        println!(
            "{name:<16} {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8}",
            cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]
        );
    }
    Ok(())
}
