mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use wgs_core::exact::{build_state, exact_ggm};
use wgs_core::measures::{block_entropy, ggm_all_cuts, ggm_edge, mutual_information_pair, subsystem_entropy, u_l_bound};
use wgs_core::{ChainSpec, PhaseModel};

fn model(n: usize, d: usize, alpha: f64, t: f64) -> PhaseModel {
    PhaseModel::new(ChainSpec::new(n, d, alpha).unwrap(), t).unwrap()
}

#[test]
fn mutual_information_matches_brute_force() {
    for (n, d, alpha, t, i, j) in [(7, 2, 0.6, 2.2, 2, 6), (6, 3, 1.4, 4.0, 1, 4), (5, 4, 2.5, 1.1, 3, 5)] {
        let psi = naive_state(n, d, alpha, t);
        let want = naive_entropy(&naive_rdm(&psi, n, d, &[i])) + naive_entropy(&naive_rdm(&psi, n, d, &[j]))
            - naive_entropy(&naive_rdm(&psi, n, d, &[i, j]));
        let got = mutual_information_pair(&model(n, d, alpha, t), i, j).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn block_entropy_matches_brute_force() {
    let (n, d, alpha, t) = (7, 2, 1.1, 0.5);
    let psi = naive_state(n, d, alpha, t);
    for l in 1..n {
        let want = naive_entropy(&naive_rdm(&psi, n, d, &(1..=l).collect::<Vec<_>>()));
        assert!((block_entropy(&model(n, d, alpha, t), l).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn ggm_over_all_cuts_matches_brute_force_and_state() {
    for (n, d, alpha, t) in [(6, 2, 0.9, 1.7), (5, 3, 2.0, 2.6), (4, 4, 1.2, 0.9), (7, 2, 3.0, 5.5)] {
        let m = model(n, d, alpha, t);
        let want = naive_ggm(&naive_state(n, d, alpha, t), n, d);
        let analytic = ggm_all_cuts(&m).unwrap();
        let state = exact_ggm(&build_state(&m).unwrap()).unwrap();
        assert!((analytic - want).abs() < 1e-10, "{analytic} vs {want}");
        assert!((state - want).abs() < 1e-10, "{state} vs {want}");
    }
}

#[test]
fn edge_ggm_reaches_its_ceiling_at_two_pi_over_d() {
    for d in [2, 3] {
        for alpha in [0.5, 2.5, 5.0] {
            let g = ggm_edge(&model(1000, d, alpha, 2.0 * PI / d as f64)).unwrap();
            assert!((g - (1.0 - 1.0 / d as f64)).abs() < 1e-3, "d={d} alpha={alpha} g={g}");
        }
    }
}

#[test]
fn ggm_is_bounded_by_local_dimension() {
    for d in 2..=5 {
        for t in [0.3, 1.9, 4.4] {
            let g = ggm_edge(&model(300, d, 1.3, t)).unwrap();
            assert!((0.0..=1.0 - 1.0 / d as f64).contains(&g));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn upper_bound_dominates_block_entropy(
        alpha in 0.0f64..6.0,
        t in 0.0f64..3.0,
        (sub_len, blocks) in prop_oneof![Just((1usize, 6usize)), Just((2, 4)), Just((3, 3)), Just((5, 2))],
    ) {
        let m = model(200, 2, alpha, t);
        let len = sub_len * blocks;
        if len <= 12 {
            let s = block_entropy(&m, len).unwrap();
            let u = u_l_bound(&m, len, sub_len).unwrap();
            prop_assert!(u >= s - 1e-9, "U = {} < S = {}", u, s);
        }
    }

    #[test]
    fn mutual_information_is_symmetric_and_bounded(alpha in 0.0f64..5.0, t in 0.0f64..10.0, i in 1usize..30, j in 1usize..30) {
        prop_assume!(i != j);
        let m = model(30, 3, alpha, t);
        let a = mutual_information_pair(&m, i, j).unwrap();
        let b = mutual_information_pair(&m, j, i).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=2.0 * 3f64.log2()).contains(&a));
        let direct = subsystem_entropy(&m, vec![i]).unwrap() + subsystem_entropy(&m, vec![j]).unwrap()
            - subsystem_entropy(&m, vec![i.min(j), i.max(j)]).unwrap();
        prop_assert!((a - direct.max(0.0)).abs() < 1e-12);
    }
}
