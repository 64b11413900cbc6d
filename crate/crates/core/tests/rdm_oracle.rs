mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgs_core::exact::{build_state, partial_trace, schmidt_spectrum, Bipartition};
use wgs_core::rdm::{build_rdm, rdm_entry, SubsystemSpec};
use wgs_core::spectrum::spectrum;
use wgs_core::{ChainSpec, PhaseModel};

fn model(n: usize, d: usize, alpha: f64, t: f64) -> PhaseModel {
    PhaseModel::new(ChainSpec::new(n, d, alpha).unwrap(), t).unwrap()
}

#[test]
fn closed_form_matches_brute_force_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for case in 0..120 {
        let (d, n_max) = [(2, 8), (3, 6), (4, 5)][case % 3];
        let n = rng.random_range(2..=n_max);
        let alpha = rng.random_range(0.0..5.0);
        let t = rng.random_range(0.0..2.0 * PI);
        let sites = random_subset(&mut rng, n, 4);
        let m = model(n, d, alpha, t);
        let rho = build_rdm(&m, &SubsystemSpec::new(*m.chain(), sites.clone()).unwrap()).unwrap();
        let want = naive_rdm(&naive_state(n, d, alpha, t), n, d, &sites);
        let diff = (rho.matrix() - &want).camax();
        assert!(diff < 1e-10, "case {case}: n={n} d={d} alpha={alpha} t={t} sites={sites:?} diff={diff:e}");
    }
}

#[test]
fn exact_state_matches_brute_force_amplitudes() {
    for (n, d, alpha, t) in [(5, 2, 0.7, 1.9), (4, 3, 2.2, 5.1), (3, 5, 0.0, 0.4)] {
        let s = build_state(&model(n, d, alpha, t)).unwrap();
        let want = naive_state(n, d, alpha, t);
        let diff = s.amplitudes().iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }
}

#[test]
fn single_entries_match_the_table() {
    let m = model(9, 3, 1.3, 2.7);
    let sub = SubsystemSpec::new(*m.chain(), vec![2, 5, 9]).unwrap();
    let rho = build_rdm(&m, &sub).unwrap();
    for (ia, ib) in [(0, 0), (4, 17), (26, 3), (13, 13)] {
        let a = digits(ia, 3, 3);
        let b = digits(ib, 3, 3);
        assert!((rdm_entry(&m, &sub, &a, &b).unwrap() - rho.entry(ia, ib)).norm() < 1e-13);
    }
}

#[test]
fn rdm_spectrum_equals_schmidt_spectrum() {
    let m = model(6, 3, 0.8, 2.1);
    let state = build_state(&m).unwrap();
    for part in [vec![1], vec![1, 2], vec![2, 4, 6], vec![3]] {
        let cut = Bipartition::new(&[1, 2, 3, 4, 5, 6], part.clone()).unwrap();
        let schmidt = schmidt_spectrum(&state, &cut).unwrap();
        let rho = spectrum(&build_rdm(&m, &SubsystemSpec::new(*m.chain(), part).unwrap()).unwrap()).unwrap();
        for (a, b) in schmidt.values().iter().zip(rho.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rdm_is_a_density_matrix(n in 3usize..40, d in 2usize..5, alpha in 0.0f64..5.0, t in 0.0f64..20.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = if d == 2 { 4 } else { 3 };
        let sites = random_subset(&mut rng, n, k);
        let m = model(n, d, alpha, t);
        let rho = build_rdm(&m, &SubsystemSpec::new(*m.chain(), sites).unwrap()).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12 && rho.trace().im.abs() < 1e-12);
        prop_assert!(rho.hermiticity_defect() < 1e-13);
        let sp = spectrum(&rho).unwrap();
        prop_assert!(sp.values().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn complementary_parts_share_entropy(n in 2usize..8, alpha in 0.0f64..4.0, t in 0.0f64..7.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = model(n, 2, alpha, t);
        let part = random_subset(&mut rng, n, n);
        let rest: Vec<usize> = (1..=n).filter(|s| !part.contains(s)).collect();
        let s = |sites: Vec<usize>| {
            spectrum(&build_rdm(&m, &SubsystemSpec::new(*m.chain(), sites).unwrap()).unwrap()).unwrap().entropy()
        };
        prop_assert!((s(part) - s(rest)).abs() < 1e-9);
    }

    #[test]
    fn exact_partial_trace_agrees(n in 2usize..7, alpha in 0.0f64..5.0, t in 0.0f64..7.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = model(n, 3, alpha, t);
        let sites = random_subset(&mut rng, n, 3);
        let exact = partial_trace(&build_state(&m).unwrap(), &sites).unwrap();
        let rho = build_rdm(&m, &SubsystemSpec::new(*m.chain(), sites).unwrap()).unwrap();
        prop_assert!(rho.max_abs_diff(&exact) < 1e-10);
    }
}
