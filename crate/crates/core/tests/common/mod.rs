//! Brute-force references built directly from the state vector.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Amplitudes `d^{-N/2} exp(i sum_{i<j} a_i a_j t / |i-j|^alpha)`, site 1
/// most significant.
pub fn naive_state(n: usize, d: usize, alpha: f64, t: f64) -> Vec<Complex64> {
    let dim = d.pow(n as u32);
    let norm = (dim as f64).sqrt().recip();
    (0..dim)
        .map(|eta| {
            let a = digits(eta, d, n);
            let mut phase = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let g = ((j - i) as f64).powf(-alpha);
                    phase += (a[i] * a[j]) as f64 * g * t;
                }
            }
            Complex64::from_polar(norm, phase)
        })
        .collect()
}

pub fn digits(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

/// `rho_A` of a state on sites `1..=n`; `sites` sorted, entries indexed with
/// the first listed site most significant.
pub fn naive_rdm(psi: &[Complex64], n: usize, d: usize, sites: &[usize]) -> DMatrix<Complex64> {
    let k = sites.len();
    let dim_a = d.pow(k as u32);
    let mut rho = DMatrix::<Complex64>::zeros(dim_a, dim_a);
    let pos: Vec<usize> = sites.iter().map(|s| s - 1).collect();
    let env: Vec<usize> = (0..n).filter(|p| !pos.contains(p)).collect();
    let dim_e = d.pow(env.len() as u32);
    let index = |a: &[usize], e: &[usize]| {
        let mut full = vec![0; n];
        for (slot, &p) in pos.iter().enumerate() {
            full[p] = a[slot];
        }
        for (slot, &p) in env.iter().enumerate() {
            full[p] = e[slot];
        }
        full.iter().fold(0, |acc, &x| acc * d + x)
    };
    for ia in 0..dim_a {
        let a = digits(ia, d, k);
        for ib in 0..dim_a {
            let b = digits(ib, d, k);
            let mut acc = Complex64::new(0.0, 0.0);
            for ie in 0..dim_e {
                let e = digits(ie, d, env.len());
                acc += psi[index(&a, &e)] * psi[index(&b, &e)].conj();
            }
            rho[(ia, ib)] = acc;
        }
    }
    rho
}

pub fn naive_entropy(rho: &DMatrix<Complex64>) -> f64 {
    let ev = rho.clone().symmetric_eigenvalues();
    ev.iter().filter(|&&p| p > 1e-15).map(|&p| -p * p.log2()).sum()
}

pub fn largest_eigenvalue(rho: &DMatrix<Complex64>) -> f64 {
    rho.clone().symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Random non-empty proper subset of `1..=n`, sorted.
pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (1..=n).filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() && s.len() < n && s.len() <= max_len {
            return s;
        }
    }
}

/// GGM by brute force: every bipartition, reduced state of the part holding site 1.
pub fn naive_ggm(psi: &[Complex64], n: usize, d: usize) -> f64 {
    let best = (0..(1usize << (n - 1)) - 1)
        .map(|mask| {
            let part: Vec<usize> = std::iter::once(1)
                .chain((2..=n).filter(|s| mask & (1 << (s - 2)) != 0))
                .collect();
            largest_eigenvalue(&naive_rdm(psi, n, d, &part))
        })
        .fold(0.0f64, f64::max);
    1.0 - best
}
