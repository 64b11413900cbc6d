//! Closed-form reduced density matrices of weighted graph states.
//!
//! For a subsystem `A` with multi-indices `a, b` the reduced state is
//!
//! ```text
//! rho_A(a, b) = d^-|A| * exp(i [P(a) - P(b)]) * prod_{l not in A} f_l(a - b)
//! P(a)        = sum_{k < k' in A} a_k a_k' phi_kk'
//! f_l(D)      = (1/d) sum_{p=0}^{d-1} exp(i p sum_{k in A} D_k phi_kl)
//! ```
//!
//! The environment factor depends on `a - b` only, so it is tabulated once
//! per distinct difference vector. Building `rho_A` costs
//! `O((2d-1)^|A| * N * (|A| + d) + d^(2|A|))` and never touches a state
//! vector.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::{ChainSpec, PhaseModel};
use crate::error::{Result, WgsError};

/// Hard ceiling on `|A|` regardless of the configured cap.
pub const MAX_SUBSYSTEM_SITES: usize = 24;

/// Default largest subsystem for which a dense RDM is built.
pub fn default_l_max(local_dim: usize) -> usize {
    match local_dim {
        2 => 12,
        3 => 7,
        4 => 6,
        5 => 5,
        d => {
            // largest L with d^L <= 2187
            let mut l = 1;
            while (d as u64).pow(l as u32 + 1) <= 2187 {
                l += 1;
            }
            l
        }
    }
}

/// An ordered set of distinct sites of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSpec {
    sites: Vec<usize>,
    chain: ChainSpec,
}

impl SubsystemSpec {
    pub fn new(chain: ChainSpec, sites: Vec<usize>) -> Result<Self> {
        Self::with_l_max(chain, sites, default_l_max(chain.local_dim()))
    }

    pub fn with_l_max(chain: ChainSpec, sites: Vec<usize>, l_max: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(WgsError::domain("subsystem must contain at least one site"));
        }
        for &s in &sites {
            chain.check_site(s)?;
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(WgsError::domain(format!(
                "subsystem sites must be strictly increasing, got {sites:?}"
            )));
        }
        if sites.len() > l_max.min(MAX_SUBSYSTEM_SITES) {
            return Err(WgsError::Resource {
                what: "subsystem size",
                requested: sites.len(),
                cap: l_max.min(MAX_SUBSYSTEM_SITES),
            });
        }
        Ok(Self { sites, chain })
    }

    /// The first `len` sites `{1, ..., len}`.
    pub fn block(chain: ChainSpec, len: usize) -> Result<Self> {
        Self::new(chain, (1..=len).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sites not in the subsystem, increasing.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.chain.n_sites() - self.sites.len());
        let mut it = self.sites.iter().peekable();
        for s in 1..=self.chain.n_sites() {
            if it.peek() == Some(&&s) {
                it.next();
            } else {
                out.push(s);
            }
        }
        out
    }

    /// Hilbert-space dimension `d^|A|`.
    pub fn dim(&self) -> usize {
        self.chain.local_dim().pow(self.sites.len() as u32)
    }
}

/// Reduced density matrix on `|A|` qudits of dimension `d`.
///
/// Rows and columns are multi-indices `a = (a_1, ..., a_|A|)` over the
/// subsystem sites in increasing order, flattened with the first site most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemRdm {
    local_dim: usize,
    n_sites: usize,
    matrix: DMatrix<Complex64>,
}

impl SubsystemRdm {
    pub(crate) fn from_matrix(local_dim: usize, n_sites: usize, matrix: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(matrix.nrows(), local_dim.pow(n_sites as u32));
        Self {
            local_dim,
            n_sites,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.matrix[(a, b)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest `|rho(a,b) - conj(rho(b,a))|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0f64;
        for a in 0..n {
            for b in a..n {
                worst = worst.max((self.matrix[(a, b)] - self.matrix[(b, a)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise distance to another RDM of the same shape.
    pub fn max_abs_diff(&self, other: &SubsystemRdm) -> f64 {
        assert_eq!(self.dim(), other.dim(), "rdm shapes differ");
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise complex conjugate (the state evolved with the opposite phase sign).
    pub fn conjugate(&self) -> SubsystemRdm {
        Self::from_matrix(self.local_dim, self.n_sites, self.matrix.map(|z| z.conj()))
    }
}

/// Flattened multi-index, first component most significant.
#[cfg(test)]
pub(crate) fn flatten(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

pub(crate) fn unflatten(mut idx: usize, d: usize, len: usize, out: &mut [usize]) {
    for slot in out[..len].iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
}

fn check_multi_index(v: &[usize], len: usize, d: usize) -> Result<()> {
    if v.len() != len {
        return Err(WgsError::domain(format!(
            "multi-index has {} components, subsystem has {len} sites",
            v.len()
        )));
    }
    if let Some(bad) = v.iter().find(|&&x| x >= d) {
        return Err(WgsError::domain(format!("component {bad} outside 0..{d}")));
    }
    Ok(())
}

/// `(1/d) * sum_{p=0}^{d-1} z^p`
#[inline]
pub(crate) fn mean_geometric(z: Complex64, d: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 1..d {
        acc = acc * z + 1.0;
    }
    acc / d as f64
}

/// Single entry of `rho_A`, evaluated directly from the product formula.
pub fn rdm_entry(model: &PhaseModel, sub: &SubsystemSpec, a: &[usize], b: &[usize]) -> Result<Complex64> {
    let chain = model.chain();
    let d = chain.local_dim();
    let sites = sub.sites();
    check_multi_index(a, sites.len(), d)?;
    check_multi_index(b, sites.len(), d)?;

    let mut intra = 0.0;
    for x in 0..sites.len() {
        for y in x + 1..sites.len() {
            let w = (a[x] * a[y]) as f64 - (b[x] * b[y]) as f64;
            intra += w * model.phase_at_distance(sites[y] - sites[x]);
        }
    }
    let mut value = Complex64::from_polar(1.0 / (d as f64).powi(sites.len() as i32), intra);
    if a == b {
        return Ok(value);
    }
    for l in sub.complement() {
        let x: f64 = sites
            .iter()
            .enumerate()
            .map(|(k, &s)| (a[k] as f64 - b[k] as f64) * model.phase_at_distance(s.abs_diff(l)))
            .sum();
        value *= mean_geometric(Complex64::cis(x), d);
    }
    Ok(value)
}

/// Environment factors `prod_l f_l(D)` for every difference vector
/// `D in [-(d-1), d-1]^|A|`, indexed base `2d-1` with offset `d-1`.
pub(crate) fn environment_table(model: &PhaseModel, sub: &SubsystemSpec) -> Vec<Complex64> {
    let d = model.chain().local_dim();
    let k = sub.len();
    let radix = 2 * d - 1;
    let size = radix.pow(k as u32);
    let env_sites = sub.complement();

    // weights[l][pos][delta + d - 1] = exp(i delta phi_{site_pos, l})
    let weights: Vec<Complex64> = env_sites
        .iter()
        .flat_map(|&l| {
            sub.sites().iter().flat_map(move |&s| {
                let phi = model.phase_at_distance(s.abs_diff(l));
                (0..radix).map(move |j| Complex64::cis((j as f64 - (d - 1) as f64) * phi))
            })
        })
        .collect();
    let stride_l = k * radix;

    (0..size)
        .into_par_iter()
        .map(|idx| {
            let mut deltas = [0usize; MAX_SUBSYSTEM_SITES];
            unflatten(idx, radix, k, &mut deltas);
            if deltas[..k].iter().all(|&j| j == d - 1) {
                return Complex64::new(1.0, 0.0);
            }
            let mut acc = Complex64::new(1.0, 0.0);
            for w in weights.chunks_exact(stride_l) {
                let mut z = w[deltas[0]];
                for pos in 1..k {
                    z *= w[pos * radix + deltas[pos]];
                }
                acc *= mean_geometric(z, d);
            }
            acc
        })
        .collect()
}

/// Dense `rho_A` of dimension `d^|A|`.
///
/// Only the upper triangle is evaluated; the lower triangle is its exact
/// conjugate and the diagonal is exactly `d^-|A|`.
pub fn build_rdm(model: &PhaseModel, sub: &SubsystemSpec) -> Result<SubsystemRdm> {
    if sub.chain() != model.chain() {
        return Err(WgsError::domain("subsystem and phase model refer to different chains"));
    }
    let d = model.chain().local_dim();
    let k = sub.len();
    let dim = sub.dim();
    let radix = 2 * d - 1;
    let env = environment_table(model, sub);
    let norm = 1.0 / dim as f64;
    let sites = sub.sites();

    // exp(i P(a)) for every multi-index a
    let intra: Vec<Complex64> = (0..dim)
        .map(|a| {
            let mut digits = [0usize; MAX_SUBSYSTEM_SITES];
            unflatten(a, d, k, &mut digits);
            let mut p = 0.0;
            for x in 0..k {
                if digits[x] == 0 {
                    continue;
                }
                for y in x + 1..k {
                    p += (digits[x] * digits[y]) as f64 * model.phase_at_distance(sites[y] - sites[x]);
                }
            }
            Complex64::cis(p)
        })
        .collect();

    let rows: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|a| {
            let mut da = [0usize; MAX_SUBSYSTEM_SITES];
            let mut db = [0usize; MAX_SUBSYSTEM_SITES];
            unflatten(a, d, k, &mut da);
            (a + 1..dim)
                .map(|b| {
                    unflatten(b, d, k, &mut db);
                    let idx = (0..k).fold(0, |acc, p| acc * radix + (da[p] + d - 1 - db[p]));
                    intra[a] * intra[b].conj() * env[idx] * norm
                })
                .collect()
        })
        .collect();

    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (a, row) in rows.into_iter().enumerate() {
        m[(a, a)] = Complex64::new(norm, 0.0);
        for (off, v) in row.into_iter().enumerate() {
            let b = a + 1 + off;
            m[(a, b)] = v;
            m[(b, a)] = v.conj();
        }
    }
    Ok(SubsystemRdm::from_matrix(d, k, m))
}
