mod common;

use lossy_dcpf::netmodel::TopologyCache;
use lossy_dcpf::splinalg::{norm_inf, recover_angles, CscMatrix, SpdOperator};
use proptest::prelude::*;
use rand::Rng;

/// Grounded weighted Laplacian of a random connected graph with `n + 1` nodes.
fn grounded_laplacian(n: usize, seed: u64) -> CscMatrix {
    let mut rng = common::rng(seed);
    let mut trip = Vec::new();
    let stamp = |i: usize, j: usize, w: f64, trip: &mut Vec<(usize, usize, f64)>| {
        // node n is ground
        if i < n {
            trip.push((i, i, w));
        }
        if j < n {
            trip.push((j, j, w));
        }
        if i < n && j < n {
            trip.push((i, j, -w));
            trip.push((j, i, -w));
        }
    };
    for v in 1..=n {
        let u = rng.gen_range(0..v);
        stamp(v, u, rng.gen_range(0.1..100.0), &mut trip);
    }
    for _ in 0..n / 2 {
        let (i, j) = (rng.gen_range(0..=n), rng.gen_range(0..=n));
        if i != j {
            stamp(i, j, rng.gen_range(0.1..100.0), &mut trip);
        }
    }
    CscMatrix::from_triplets(n, &trip).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn solve_is_right_inverse(n in 1usize..=200, seed in any::<u64>()) {
        let m = grounded_laplacian(n, seed);
        let op = SpdOperator::factorize(&m).unwrap();
        let mut rng = common::rng(seed ^ 1);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = op.solve(&b).unwrap();
        let r: Vec<f64> = m.matvec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        prop_assert!(norm_inf(&r) <= 1e-10 * norm_inf(&b).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recovery_is_idempotent(n in 2usize..=25, extra in 0usize..10, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = common::random_meshed(&mut rng, n, extra);
        let cache = TopologyCache::build(&net).unwrap();
        let d: Vec<f64> = (0..cache.m()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let theta = recover_angles(cache.incidence(), &d).unwrap();
        let again = recover_angles(cache.incidence(), &cache.incidence().diffs(&theta)).unwrap();
        prop_assert!(common::max_abs_diff(&theta, &again) <= 1e-10);
    }

    #[test]
    fn one_factorization_per_solve_sequence(n in 2usize..=30, k in 1usize..20, seed in any::<u64>()) {
        let op = SpdOperator::factorize(&grounded_laplacian(n - 1, seed)).unwrap();
        for i in 0..k {
            op.solve(&vec![i as f64; n - 1]).unwrap();
        }
        prop_assert_eq!(op.solve_count(), k);
    }
}

#[test]
fn lossy_iteration_reuses_the_laplacian_factor() {
    use lossy_dcpf::solvers::{lmdcpf, SolveOptions};
    let (net, cache) = common::fixture("case14", lossy_dcpf::caseio::StartPolicy::Hot);
    let before = cache.laplacian().solve_count();
    let rep = lmdcpf(&net, &cache, &SolveOptions::default()).unwrap();
    assert_eq!(cache.laplacian().solve_count() - before, rep.iterations());
}
