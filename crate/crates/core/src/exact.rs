//! Brute-force weighted graph states for small chains.
//!
//! Everything here works on the full amplitude vector and serves as the
//! reference for the closed-form kernels in [`crate::rdm`].

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::PhaseModel;
use crate::error::{Result, WgsError};
use crate::rdm::{unflatten, SubsystemRdm, MAX_SUBSYSTEM_SITES};
use crate::spectrum::{hermitian_eigenvalues, Spectrum};

/// Default cap on the number of stored amplitudes.
pub const DEFAULT_AMPLITUDE_CAP: usize = 2_000_000;

/// Largest chain for which [`exact_ggm`] enumerates all bipartitions by default.
pub fn default_ggm_sites(local_dim: usize) -> usize {
    match local_dim {
        2 => 12,
        3 => 11,
        4 => 7,
        d => {
            let mut n = 2;
            while (d as u64).pow(n as u32 + 1) <= 16_384 {
                n += 1;
            }
            n
        }
    }
}

/// Amplitudes of the weighted graph state on a set of chain sites.
///
/// The basis index is `eta = sum_i a_i d^(n-1-i)` over the stored sites in
/// increasing order. Pair phases use the distances of the parent chain, so a
/// state on a subset of sites is the graph state of the induced subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactState {
    model: PhaseModel,
    sites: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl ExactState {
    pub fn model(&self) -> &PhaseModel {
        &self.model
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn local_dim(&self) -> usize {
        self.model.chain().local_dim()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise distance after rotating both states so that their
    /// first non-negligible amplitude is real and positive.
    pub fn distance_up_to_global_phase(&self, other: &ExactState) -> f64 {
        assert_eq!(self.amplitudes.len(), other.amplitudes.len(), "state sizes differ");
        let gauge = |v: &[Complex64]| {
            v.iter()
                .find(|z| z.norm() > 1e-12)
                .map(|z| z.conj() / z.norm())
                .unwrap_or(Complex64::new(1.0, 0.0))
        };
        let (ga, gb) = (gauge(&self.amplitudes), gauge(&other.amplitudes));
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| (x * ga - y * gb).norm())
            .fold(0.0, f64::max)
    }

    /// Position of each given chain site within `self.sites`.
    fn positions_of(&self, part: &[usize]) -> Result<Vec<usize>> {
        part.iter()
            .map(|s| {
                self.sites
                    .binary_search(s)
                    .map_err(|_| WgsError::domain(format!("site {s} is not part of this state")))
            })
            .collect()
    }

    /// Amplitudes reshaped into a `d^|A| x d^|B|` matrix.
    fn reshape(&self, part_a: &[usize]) -> Result<DMatrix<Complex64>> {
        let d = self.local_dim();
        let n = self.n_sites();
        let pos_a = self.positions_of(part_a)?;
        let pos_b: Vec<usize> = (0..n).filter(|p| !pos_a.contains(p)).collect();
        let rows = d.pow(pos_a.len() as u32);
        let cols = d.pow(pos_b.len() as u32);
        let mut m = DMatrix::<Complex64>::zeros(rows, cols);
        let mut digits = vec![0usize; n];
        for (eta, amp) in self.amplitudes.iter().enumerate() {
            unflatten(eta, d, n, &mut digits);
            let r = pos_a.iter().fold(0, |acc, &p| acc * d + digits[p]);
            let c = pos_b.iter().fold(0, |acc, &p| acc * d + digits[p]);
            m[(r, c)] = *amp;
        }
        Ok(m)
    }
}

/// Full state `d^(-N/2) prod_{i<j} exp(i a_i a_j phi_ij) |eta>` on all sites.
pub fn build_state(model: &PhaseModel) -> Result<ExactState> {
    build_state_on(model, &(1..=model.chain().n_sites()).collect::<Vec<_>>(), DEFAULT_AMPLITUDE_CAP)
}

/// Graph state on a subset of chain sites with an explicit amplitude cap.
pub fn build_state_on(model: &PhaseModel, sites: &[usize], cap: usize) -> Result<ExactState> {
    let chain = model.chain();
    let d = chain.local_dim();
    for &s in sites {
        chain.check_site(s)?;
    }
    if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WgsError::domain(format!("sites must be non-empty and increasing, got {sites:?}")));
    }
    let n = sites.len();
    let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(WgsError::Resource {
            what: "state amplitudes",
            requested: size.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let size = size as usize;
    let mut phases = vec![0.0; n * n];
    for x in 0..n {
        for y in x + 1..n {
            phases[x * n + y] = model.phase_at_distance(sites[y] - sites[x]);
        }
    }
    let scale = (d as f64).powf(-(n as f64) / 2.0);
    let amplitudes = (0..size)
        .into_par_iter()
        .map(|eta| {
            let mut digits = [0usize; 64];
            unflatten(eta, d, n, &mut digits);
            let mut p = 0.0;
            for x in 0..n {
                if digits[x] == 0 {
                    continue;
                }
                for y in x + 1..n {
                    p += (digits[x] * digits[y]) as f64 * phases[x * n + y];
                }
            }
            Complex64::from_polar(scale, p)
        })
        .collect();
    Ok(ExactState {
        model: *model,
        sites: sites.to_vec(),
        amplitudes,
    })
}

/// Two complementary, non-empty sets of sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    part_a: Vec<usize>,
    part_b: Vec<usize>,
}

impl Bipartition {
    /// `part_a` together with its complement in `all_sites`.
    pub fn new(all_sites: &[usize], part_a: Vec<usize>) -> Result<Self> {
        let mut part_a = part_a;
        part_a.sort_unstable();
        part_a.dedup();
        if part_a.iter().any(|s| !all_sites.contains(s)) {
            return Err(WgsError::domain(format!("{part_a:?} is not a subset of {all_sites:?}")));
        }
        let part_b: Vec<usize> = all_sites.iter().copied().filter(|s| !part_a.contains(s)).collect();
        if part_a.is_empty() || part_b.is_empty() {
            return Err(WgsError::domain("both sides of a bipartition must be non-empty"));
        }
        Ok(Self { part_a, part_b })
    }

    pub fn part_a(&self) -> &[usize] {
        &self.part_a
    }

    pub fn part_b(&self) -> &[usize] {
        &self.part_b
    }

    /// The side with fewer sites (`part_a` on ties).
    pub fn smaller(&self) -> &[usize] {
        if self.part_a.len() <= self.part_b.len() {
            &self.part_a
        } else {
            &self.part_b
        }
    }

    /// Every bipartition of `sites`, each listed once with the first site in `part_a`.
    pub fn enumerate(sites: &[usize]) -> Vec<Bipartition> {
        let n = sites.len();
        if n < 2 {
            return Vec::new();
        }
        let rest = &sites[1..];
        let full = (1u64 << (n - 1)) - 1;
        (0..full)
            .map(|mask| {
                let mut a = vec![sites[0]];
                a.extend(rest.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &s)| s));
                let b = rest
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 0)
                    .map(|(_, &s)| s)
                    .collect();
                Bipartition { part_a: a, part_b: b }
            })
            .collect()
    }
}

/// `Tr_{B} |psi><psi|` for the sites `part_a`, by explicit summation over the rest.
pub fn partial_trace(state: &ExactState, part_a: &[usize]) -> Result<SubsystemRdm> {
    if part_a.is_empty() {
        return Err(WgsError::domain("cannot keep an empty subsystem"));
    }
    if part_a.len() > crate::rdm::default_l_max(state.local_dim()).min(MAX_SUBSYSTEM_SITES) {
        return Err(WgsError::Resource {
            what: "subsystem size",
            requested: part_a.len(),
            cap: crate::rdm::default_l_max(state.local_dim()),
        });
    }
    let m = state.reshape(part_a)?;
    let rho = &m * m.adjoint();
    Ok(SubsystemRdm::from_matrix(state.local_dim(), part_a.len(), rho))
}

/// Squared singular values of the amplitude matrix reshaped along `cut`.
pub fn schmidt_spectrum(state: &ExactState, cut: &Bipartition) -> Result<Spectrum> {
    let m = state.reshape(cut.part_a())?;
    let svd = SVD::try_new(m, false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| WgsError::Numerical(format!("SVD did not converge for cut {:?}", cut.part_a())))?;
    Spectrum::from_eigenvalues(svd.singular_values.iter().map(|s| s * s).collect())
}

/// Largest squared Schmidt coefficient over one cut, via the Gram matrix of
/// the smaller side.
fn largest_schmidt(state: &ExactState, cut: &Bipartition) -> Result<f64> {
    let m = state.reshape(cut.smaller())?;
    let gram = &m * m.adjoint();
    let ev = hermitian_eigenvalues(&gram)?;
    Ok(ev.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Largest squared Schmidt coefficient over all bipartitions, with the cut
/// that attains it.
pub fn max_schmidt_over_cuts(state: &ExactState) -> Result<(f64, Bipartition)> {
    let cap = default_ggm_sites(state.local_dim());
    if state.n_sites() > cap {
        return Err(WgsError::Resource {
            what: "sites for bipartition scan",
            requested: state.n_sites(),
            cap,
        });
    }
    let cuts = Bipartition::enumerate(state.sites());
    let values: Vec<f64> = cuts
        .par_iter()
        .map(|c| largest_schmidt(state, c))
        .collect::<Result<_>>()?;
    let (idx, best) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok((best.min(1.0), cuts[idx].clone()))
}

/// Generalized geometric measure `1 - max_cuts lambda_max`.
pub fn exact_ggm(state: &ExactState) -> Result<f64> {
    let (best, _) = max_schmidt_over_cuts(state)?;
    Ok((1.0 - best).max(0.0))
}

/// Outcome of measuring one qudit in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReduction {
    pub measured_site: usize,
    pub outcome: usize,
    pub probability: f64,
    /// Projected, renormalized state on the remaining sites.
    pub residual: ExactState,
    /// For each remaining site (in order), the diagonal phases
    /// `mu -> exp(i mu m phi_{site,k})` imprinted by the measured qudit.
    pub local_phases: Vec<Vec<Complex64>>,
}

impl MeasurementReduction {
    /// Residual with the local phases undone; equals the graph state of the
    /// remaining sites.
    pub fn undo_local_phases(&self) -> ExactState {
        let d = self.residual.local_dim();
        let n = self.residual.n_sites();
        let mut digits = vec![0usize; n];
        let amplitudes = self
            .residual
            .amplitudes
            .iter()
            .enumerate()
            .map(|(eta, amp)| {
                unflatten(eta, d, n, &mut digits);
                digits
                    .iter()
                    .zip(&self.local_phases)
                    .fold(*amp, |acc, (&mu, ph)| acc * ph[mu].conj())
            })
            .collect();
        ExactState {
            amplitudes,
            ..self.residual.clone()
        }
    }
}

const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Project site `k` onto `|m>` and renormalize.
pub fn measure_reduce(state: &ExactState, k: usize, m: usize) -> Result<MeasurementReduction> {
    let d = state.local_dim();
    let n = state.n_sites();
    if m >= d {
        return Err(WgsError::domain(format!("outcome {m} outside 0..{d}")));
    }
    if n < 2 {
        return Err(WgsError::domain("cannot measure the last remaining qudit"));
    }
    let pos = state.positions_of(&[k])?[0];
    let remaining: Vec<usize> = state.sites.iter().copied().filter(|&s| s != k).collect();

    let mut digits = vec![0usize; n];
    let mut projected = Vec::with_capacity(state.amplitudes.len() / d);
    for (eta, amp) in state.amplitudes.iter().enumerate() {
        unflatten(eta, d, n, &mut digits);
        if digits[pos] == m {
            projected.push(*amp);
        }
    }
    let probability: f64 = projected.iter().map(|z| z.norm_sqr()).sum();
    if (probability - 1.0 / d as f64).abs() > PROBABILITY_TOLERANCE {
        return Err(WgsError::Numerical(format!(
            "outcome {m} on site {k} has probability {probability}, expected 1/{d}"
        )));
    }
    let scale = probability.sqrt().recip();
    for z in projected.iter_mut() {
        *z *= scale;
    }
    let model = state.model;
    let local_phases = remaining
        .iter()
        .map(|&s| {
            let phi = model.phase_at_distance(s.abs_diff(k));
            (0..d).map(|mu| Complex64::cis((mu * m) as f64 * phi)).collect()
        })
        .collect();
    Ok(MeasurementReduction {
        measured_site: k,
        outcome: m,
        probability,
        residual: ExactState {
            model,
            sites: remaining,
            amplitudes: projected,
        },
        local_phases,
    })
}
