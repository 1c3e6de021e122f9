mod common;

use std::collections::HashMap;

use lossy_dcpf::caseio::{case_to_json, network_to_case, parse_case, read_case, scale_loading, to_network, StartPolicy};
use lossy_dcpf::netmodel::Network;
use proptest::prelude::*;

/// Numeric rows of `mpc.<name>` read straight from the file text.
fn raw_table(text: &str, name: &str) -> Vec<Vec<f64>> {
    let start = text.find(&format!("mpc.{name} = [")).unwrap();
    let body = &text[start..];
    let body = &body[body.find('[').unwrap() + 1..body.find("];").unwrap()];
    body.lines()
        .map(|l| l.split('%').next().unwrap())
        .flat_map(|l| l.split(';'))
        .map(|r| r.split_whitespace().map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .filter(|r| !r.is_empty())
        .collect()
}

#[test]
fn per_unit_injections_match_raw_tables() {
    for name in common::MESHED.iter().chain(&["case33bw"]) {
        let text = std::fs::read_to_string(common::data(name)).unwrap();
        let buses = raw_table(&text, "bus");
        let mut net_mw: HashMap<i64, f64> = buses
            .iter()
            .filter(|r| r[1] != 4.0)
            .map(|r| (r[0] as i64, -r[2]))
            .collect();
        for g in raw_table(&text, "gen").iter().filter(|g| g[7] > 0.0) {
            if let Some(p) = net_mw.get_mut(&(g[0] as i64)) {
                *p += g[1];
            }
        }
        let slack = buses.iter().find(|r| r[1] == 3.0).unwrap()[0] as i64;
        let expected: f64 = net_mw.iter().filter(|(id, _)| **id != slack).map(|(_, p)| p).sum();

        let case = read_case(common::data(name)).unwrap();
        let net = to_network(&case, StartPolicy::Hot).unwrap();
        let got: f64 = net.injections_reduced().iter().sum::<f64>() * net.base_mva();
        assert!((got - expected).abs() <= 1e-9, "{name}: {got} vs {expected}");
    }
}

#[test]
fn fixture_json_round_trip() {
    for name in common::MESHED.iter().chain(&["case33bw"]) {
        let case = read_case(common::data(name)).unwrap();
        let once = parse_case(&case_to_json(&case).unwrap()).unwrap();
        let twice = parse_case(&case_to_json(&once).unwrap()).unwrap();
        assert_eq!(once, twice, "{name}");
        assert_eq!(
            to_network(&case, StartPolicy::Hot).unwrap().injections_reduced(),
            to_network(&once, StartPolicy::Hot).unwrap().injections_reduced()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn json_round_trip_is_identity(n in 2usize..=20, extra in 0usize..8, seed in any::<u64>()) {
        let net = common::random_meshed(&mut common::rng(seed), n, extra);
        let text = case_to_json(&network_to_case(&net)).unwrap();
        let parsed = parse_case(&text).unwrap();
        prop_assert_eq!(&text, &case_to_json(&parsed).unwrap());
        prop_assert_eq!(parse_case(&case_to_json(&parsed).unwrap()).unwrap(), parsed);
    }

    #[test]
    fn unit_scaling_is_identity(n in 2usize..=20, extra in 0usize..8, seed in any::<u64>()) {
        let net: Network = common::random_meshed(&mut common::rng(seed), n, extra);
        prop_assert_eq!(scale_loading(&net, 1.0), net);
    }
}
