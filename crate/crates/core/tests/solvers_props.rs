mod common;

use lossy_dcpf::analysis::psi_mdc;
use lossy_dcpf::caseio::StartPolicy;
use lossy_dcpf::netmodel::{Network, TopologyCache};
use lossy_dcpf::solvers::{
    active_residual, dcpf, ldcpf, lmdcpf, mdcpf, newton_raphson, two_bus_closed_form, wrap_angle, SolveOptions,
};
use proptest::prelude::*;

/// `P_i` from per-branch pi-model flows, independent of the matrix assembly.
fn branch_flow_injections(net: &Network, theta_r: &[f64]) -> Vec<f64> {
    let s = net.slack_index();
    let mut theta = theta_r.to_vec();
    theta.insert(s, 0.0);
    let v: Vec<f64> = net.buses().iter().map(|b| b.voltage).collect();
    let mut p: Vec<f64> = net.buses().iter().map(|b| b.shunt_conductance * b.voltage * b.voltage).collect();
    for br in net.branches() {
        let (f, t) = (net.bus_index(br.from).unwrap(), net.bus_index(br.to).unwrap());
        let d = theta[f] - theta[t];
        let k = v[f] * v[t] / br.tap;
        p[f] += br.conductance * v[f] * v[f] / (br.tap * br.tap) - k * (br.conductance * d.cos() - br.susceptance * d.sin());
        p[t] += br.conductance * v[t] * v[t] - k * (br.conductance * d.cos() + br.susceptance * d.sin());
    }
    p.remove(s);
    p
}

fn check_consistency(net: &Network, cache: &TopologyCache) -> Result<bool, TestCaseError> {
    let rep = lmdcpf(net, cache, &SolveOptions::default().with_max_iterations(200)).unwrap();
    if !rep.converged() {
        return Ok(false);
    }
    let f = branch_flow_injections(net, &rep.state.theta_r);
    let resid = f.iter().zip(net.injections_reduced()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    prop_assert!(resid <= 1e-8, "independent residual {}", resid);
    prop_assert!(rep.state.injection_residual <= 1e-8);
    prop_assert!(rep.state.kvl_residual <= 1e-8);
    let angles: Vec<f64> = rep.state.psi.iter().map(|p| p.asin()).collect();
    let kvl = cache.cycles().apply_t(&angles).into_iter().fold(0.0f64, |m, x| m.max(wrap_angle(x).abs()));
    prop_assert!(kvl <= 1e-8);
    Ok(true)
}

#[test]
fn fixtures_are_consistent() {
    for name in common::MESHED.iter().chain(&["case33bw"]) {
        for start in [StartPolicy::Hot, StartPolicy::Cold] {
            let (net, cache) = common::fixture(name, start);
            assert!(check_consistency(&net, &cache).unwrap(), "{name} {start}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn converged_runs_solve_the_power_flow(n in 2usize..=30, extra in 0usize..10, seed in any::<u64>()) {
        let net = common::random_meshed(&mut common::rng(seed), n, extra);
        let cache = TopologyCache::build(&net).unwrap();
        check_consistency(&net, &cache)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radial_lmdcpf_matches_newton(seed in any::<u64>()) {
        let c = common::random_certified(seed, 30, 0.05..0.95);
        let opts = SolveOptions::default().with_tolerance(1e-14).with_max_iterations(10_000);
        let lm = lmdcpf(&c.net, &c.cache, &opts).unwrap();
        let nr = newton_raphson(&c.net, &c.cache, &vec![0.0; c.cache.n()], &opts).unwrap();
        prop_assert!(lm.converged() && nr.converged());
        prop_assert!(common::max_abs_diff(&lm.state.theta_r, &nr.state.theta_r) <= 1e-8);
    }

    #[test]
    fn first_iterate_is_mdcpf_with_equal_voltages(n in 2usize..=25, extra in 0usize..8, seed in any::<u64>()) {
        let net = common::random_meshed(&mut common::rng(seed), n, extra).with_flat_voltage(1.02).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        let exact = psi_mdc(&net, &cache).unwrap();
        prop_assume!(exact.iter().all(|p| p.abs() < 1.0));
        let rep = lmdcpf(&net, &cache, &SolveOptions::default().with_max_iterations(1)).unwrap();
        prop_assert_eq!(rep.state.k, 1);
        let d = common::max_abs_diff(&rep.state.psi, &exact);
        prop_assert!(d <= 1e-12, "diff {}", d);
    }

    #[test]
    fn lossless_radial_degenerates(n in 2usize..=25, k in 1usize..5, seed in any::<u64>()) {
        let net = common::random_tree(&mut common::rng(seed), n, 0.0).scaled(0.01);
        let cache = TopologyCache::build(&net).unwrap();
        let opts = SolveOptions::default().with_max_iterations(k);
        let lm = lmdcpf(&net, &cache, &opts).unwrap();
        let ld = ldcpf(&net, &cache, &opts).unwrap();
        let (md, _) = mdcpf(&net, &cache).unwrap();
        prop_assert!(common::max_abs_diff(&lm.state.theta_r, &md) <= 1e-12);
        prop_assert!(common::max_abs_diff(&ld.state.theta_r, &dcpf(&net, &cache).unwrap()) <= 1e-12);
    }

    #[test]
    fn closed_form_solves_the_network(ratio in 0.0f64..2.0, b in 0.1f64..20.0, v1 in 0.9f64..1.1, v2 in 0.9f64..1.1, p in -1.0f64..1.0) {
        let g = ratio * b;
        let p1 = p * b * v1 * v2;
        let net = Network::two_bus(g, b, v1, v2, p1).unwrap();
        let cache = TopologyCache::build(&net).unwrap();
        for th in two_bus_closed_form(g, b, v1, v2, p1).unwrap() {
            let r = active_residual(&net, &cache, &[th]).unwrap();
            prop_assert!(r[0].abs() <= 1e-12 * b.max(1.0), "{:?}", r);
        }
    }

    #[test]
    fn small_angles_agree(n in 2usize..=25, seed in any::<u64>()) {
        let net = common::random_tree(&mut common::rng(seed), n, 1.0);
        let cache = TopologyCache::build(&net).unwrap();
        let gamma = psi_mdc(&net, &cache).unwrap().iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let net = net.scaled(0.05 / gamma);
        let dc = dcpf(&net, &cache).unwrap();
        let (md, _) = mdcpf(&net, &cache).unwrap();
        let gap: Vec<f64> = md.iter().zip(&dc).map(|(a, b)| a - b).collect();
        prop_assert!(cache.incidence().diffs(&gap).iter().all(|d| d.abs() <= 2.1e-5));
    }
}

#[test]
fn two_bus_small_angle_bus_gap() {
    let net = Network::two_bus(0.3, 1.0, 1.0, 1.0, 0.05).unwrap();
    let cache = TopologyCache::build(&net).unwrap();
    let gap = (mdcpf(&net, &cache).unwrap().0[0] - dcpf(&net, &cache).unwrap()[0]).abs();
    assert!(gap <= 2.1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobian_matches_branch_flow_differences(n in 2usize..=15, extra in 0usize..6, seed in any::<u64>()) {
        let net = common::random_meshed(&mut common::rng(seed), n, extra);
        let cache = TopologyCache::build(&net).unwrap();
        let theta: Vec<f64> = (0..cache.n()).map(|i| 0.3 * ((i as f64) * 1.7 + seed as f64 * 1e-19).sin()).collect();
        let j = lossy_dcpf::solvers::jacobian(&cache, &theta).unwrap();
        let h = 1e-6;
        for col in 0..cache.n() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[col] += h;
            tm[col] -= h;
            let (fp, fm) = (branch_flow_injections(&net, &tp), branch_flow_injections(&net, &tm));
            for row in 0..cache.n() {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                prop_assert!((j.get(row, col) - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "({}, {})", row, col);
            }
        }
    }
}
