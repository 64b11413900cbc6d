//! Scalar entanglement measures of the evolved chain and their time averages.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, PhaseModel};
use crate::error::{Result, WgsError};
use crate::exact::{default_ggm_sites, Bipartition};
use crate::rdm::{build_rdm, default_l_max, environment_table, mean_geometric, unflatten, SubsystemSpec};
use crate::spectrum::{entropy, hermitian_eigenvalues, spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureId {
    Entropy,
    MutualInformation,
    Ggm,
}

/// A measure sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub measure: MeasureId,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, measure: MeasureId) -> Result<Self> {
        if times.len() != values.len() {
            return Err(WgsError::domain("times and values differ in length"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(WgsError::domain("times must be non-negative and strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WgsError::Numerical("time series contains non-finite values".into()));
        }
        Ok(Self { times, values, measure })
    }

    /// Evaluates `f` at every time, in parallel, keeping grid order.
    pub fn sample<F>(f: F, times: Vec<f64>, measure: MeasureId) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let values = times.par_iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(times, values, measure)
    }

    /// Location and value of the largest sample.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.values)
            .fold(None, |best: Option<(f64, f64)>, (&t, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((t, v)),
            })
    }
}

/// Half-step deviation above which an average is flagged as unconverged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

/// Trapezoidal time average `(1/t0) int_0^t0 f(t) dt` with a half-step
/// convergence certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedValue {
    pub value: f64,
    pub t0: f64,
    pub quadrature_step: f64,
    /// The same average on the grid with half the step.
    pub half_step_value: f64,
    pub converged: bool,
}

impl AveragedValue {
    pub fn half_step_deviation(&self) -> f64 {
        (self.value - self.half_step_value).abs()
    }
}

/// Default quadrature step `pi / (16 (d-1)^2)`: at least 32 samples per
/// period of the fastest phase `(d-1)^2 t`.
pub fn default_step(local_dim: usize) -> f64 {
    let s = (local_dim - 1) as f64;
    PI / (16.0 * s * s)
}

fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().sum();
    (0.5 * values[0] + inner + 0.5 * values[n]) / n as f64
}

/// Composite trapezoid average of `f` over `[0, t0]`.
///
/// The step is shrunk so that it divides `t0`; the actual step is stored.
/// Grid points are evaluated in parallel and summed in grid order, so the
/// result does not depend on the thread count.
pub fn time_average<F>(f: F, t0: f64, step: f64) -> Result<AveragedValue>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut v = time_average_many(|t| Ok(vec![f(t)?]), 1, t0, step)?;
    Ok(v.pop().expect("one component"))
}

/// [`time_average`] of a vector-valued integrand with `len` components.
pub fn time_average_many<F>(f: F, len: usize, t0: f64, step: f64) -> Result<Vec<AveragedValue>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if !(t0 > 0.0 && t0.is_finite()) || !(step > 0.0 && step.is_finite()) {
        return Err(WgsError::domain(format!("need t0 > 0 and step > 0, got t0 = {t0}, step = {step}")));
    }
    let n = ((t0 / step).ceil() as usize).max(1);
    let fine: Vec<Vec<f64>> = (0..=2 * n)
        .into_par_iter()
        .map(|i| f(t0 * i as f64 / (2 * n) as f64))
        .collect::<Result<_>>()?;
    if fine.iter().any(|row| row.len() != len) {
        return Err(WgsError::domain(format!("integrand must return {len} components")));
    }
    if fine.iter().flatten().any(|v| !v.is_finite()) {
        return Err(WgsError::Numerical("integrand returned a non-finite value".into()));
    }
    Ok((0..len)
        .map(|c| {
            let column: Vec<f64> = fine.iter().map(|row| row[c]).collect();
            let coarse: Vec<f64> = column.iter().step_by(2).copied().collect();
            let value = trapezoid_mean(&coarse);
            let half_step_value = trapezoid_mean(&column);
            AveragedValue {
                value,
                t0,
                quadrature_step: t0 / n as f64,
                half_step_value,
                converged: (value - half_step_value).abs() < CONVERGENCE_TOLERANCE,
            }
        })
        .collect())
}

/// Von Neumann entropy (bits) of an arbitrary subsystem.
pub fn subsystem_entropy(model: &PhaseModel, sites: Vec<usize>) -> Result<f64> {
    let sub = SubsystemSpec::new(*model.chain(), sites)?;
    Ok(entropy(&spectrum(&build_rdm(model, &sub)?)?))
}

/// Entropy of the first `len` sites.
pub fn block_entropy(model: &PhaseModel, len: usize) -> Result<f64> {
    if len == 0 || len > model.chain().n_sites() {
        return Err(WgsError::domain(format!("block length {len} outside 1..={}", model.chain().n_sites())));
    }
    subsystem_entropy(model, (1..=len).collect())
}

/// Strong-subadditivity bound on the entropy of the first `len` sites built
/// from `len / sub_len` contiguous sub-blocks:
/// `sum_j S(B_j u B_j+1) - sum_{j=2}^{n-1} S(B_j)`.
pub fn u_l_bound(model: &PhaseModel, len: usize, sub_len: usize) -> Result<f64> {
    let chain = model.chain();
    if sub_len == 0 || len == 0 || len % sub_len != 0 {
        return Err(WgsError::domain(format!("sub-block length {sub_len} does not divide {len}")));
    }
    if len > chain.n_sites() {
        return Err(WgsError::domain(format!("block length {len} exceeds chain length {}", chain.n_sites())));
    }
    let n_blocks = len / sub_len;
    let l_max = default_l_max(chain.local_dim());
    let widest = if n_blocks == 1 { sub_len } else { 2 * sub_len };
    if widest > l_max {
        return Err(WgsError::domain(format!(
            "sub-block pairs of {widest} sites exceed the cap of {l_max} for d = {}",
            chain.local_dim()
        )));
    }
    if n_blocks == 1 {
        return block_entropy(model, len);
    }
    let block = |j: usize, width: usize| -> Vec<usize> { (j * sub_len + 1..=j * sub_len + width).collect() };
    let pairs: Vec<Vec<usize>> = (0..n_blocks - 1).map(|j| block(j, 2 * sub_len)).collect();
    let inner: Vec<Vec<usize>> = (1..n_blocks - 1).map(|j| block(j, sub_len)).collect();
    let pair_s = pairs
        .into_par_iter()
        .map(|s| subsystem_entropy(model, s))
        .collect::<Result<Vec<_>>>()?;
    let inner_s = inner
        .into_par_iter()
        .map(|s| subsystem_entropy(model, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(pair_s.iter().sum::<f64>() - inner_s.iter().sum::<f64>())
}

/// Left site of the centred pair at separation `r`: `floor((N - r) / 2) + 1`.
pub fn centered_anchor(n_sites: usize, r: usize) -> usize {
    (n_sites - r) / 2 + 1
}

/// `I(i : j) = S(i) + S(j) - S(ij)` in bits.
pub fn mutual_information_pair(model: &PhaseModel, i: usize, j: usize) -> Result<f64> {
    let (lo, hi) = (i.min(j), i.max(j));
    if lo == hi {
        return Err(WgsError::domain(format!("mutual information of site {i} with itself")));
    }
    let s_lo = subsystem_entropy(model, vec![lo])?;
    let s_hi = subsystem_entropy(model, vec![hi])?;
    let s_pair = subsystem_entropy(model, vec![lo, hi])?;
    let d = model.chain().local_dim() as f64;
    Ok((s_lo + s_hi - s_pair).clamp(0.0, 2.0 * d.log2()))
}

/// Mutual information of two sites `r` apart, anchored at `anchor` (the left site).
pub fn mutual_information_at(model: &PhaseModel, anchor: usize, r: usize) -> Result<f64> {
    let n = model.chain().n_sites();
    if r == 0 || r >= n {
        return Err(WgsError::domain(format!("separation {r} outside 1..={}", n - 1)));
    }
    if anchor == 0 || anchor + r > n {
        return Err(WgsError::domain(format!("pair ({anchor}, {}) outside the chain", anchor + r)));
    }
    mutual_information_pair(model, anchor, anchor + r)
}

/// Mutual information of the centred pair at separation `r`.
pub fn mutual_information(model: &PhaseModel, r: usize) -> Result<f64> {
    let n = model.chain().n_sites();
    if r == 0 || r >= n {
        return Err(WgsError::domain(format!("separation {r} outside 1..={}", n - 1)));
    }
    mutual_information_at(model, centered_anchor(n, r), r)
}

/// GGM from the edge cut `{1} : {2..N}` only: `1 - lambda_max(rho_1)`.
pub fn ggm_edge(model: &PhaseModel) -> Result<f64> {
    let sub = SubsystemSpec::new(*model.chain(), vec![1])?;
    let sp = spectrum(&build_rdm(model, &sub)?)?;
    let d = model.chain().local_dim() as f64;
    Ok((1.0 - sp.largest()).clamp(0.0, 1.0 - 1.0 / d))
}

/// Edge-cut GGM at time `t` of every prefix chain of `chain`, lengths
/// `2..=n_max` (entry `k` is the chain of `k + 2` sites).
///
/// `rho_1` of the `n`-site chain is that of the `(n-1)`-site chain with one
/// more environment factor, so the whole series costs one pass.
pub fn ggm_edge_by_length(chain: &ChainSpec, t: f64, n_max: usize) -> Result<Vec<f64>> {
    let chain = chain.with_sites(n_max)?;
    let model = PhaseModel::new(chain, t)?;
    let d = chain.local_dim();
    let mut env = vec![Complex64::new(1.0, 0.0); d];
    let mut out = Vec::with_capacity(n_max - 1);
    for l in 2..=n_max {
        let phi = model.phase_at_distance(l - 1);
        for (delta, e) in env.iter_mut().enumerate().skip(1) {
            *e *= mean_geometric(Complex64::cis(delta as f64 * phi), d);
        }
        let m = DMatrix::from_fn(d, d, |a, b| {
            let z = if a >= b { env[a - b] } else { env[b - a].conj() };
            z / d as f64
        });
        let largest = hermitian_eigenvalues(&m)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        out.push((1.0 - largest).clamp(0.0, 1.0 - 1.0 / d as f64));
    }
    Ok(out)
}

/// Largest eigenvalue of `rho_S` over the difference-vector table only.
///
/// The intra-subsystem phases conjugate `rho_S` by a diagonal unitary, so
/// they are skipped here. Returns `None` when the Gershgorin bound or the
/// purity bound `1/n + sqrt((n-1)/n (tr rho^2 - 1/n))` shows the eigenvalue
/// cannot exceed `floor`.
fn largest_eigenvalue_above(model: &PhaseModel, sub: &SubsystemSpec, floor: f64) -> Result<Option<f64>> {
    let d = model.chain().local_dim();
    let k = sub.len();
    let dim = sub.dim();
    let radix = 2 * d - 1;
    let env = environment_table(model, sub);
    let norm = 1.0 / dim as f64;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut da = vec![0usize; k];
    let mut db = vec![0usize; k];
    let mut row_bound = 0f64;
    let mut purity = 0f64;
    for a in 0..dim {
        unflatten(a, d, k, &mut da);
        let mut row = 0.0;
        for b in 0..dim {
            unflatten(b, d, k, &mut db);
            let idx = (0..k).fold(0, |acc, p| acc * radix + (da[p] + d - 1 - db[p]));
            let z = env[idx] * norm;
            row += z.norm();
            purity += z.norm_sqr();
            m[(a, b)] = z;
        }
        row_bound = row_bound.max(row);
    }
    let n = dim as f64;
    let spread = ((n - 1.0) / n * (purity - 1.0 / n).max(0.0)).sqrt();
    if row_bound.min(1.0 / n + spread) <= floor {
        return Ok(None);
    }
    let ev = hermitian_eigenvalues(&m)?;
    Ok(Some(ev.into_iter().fold(f64::NEG_INFINITY, f64::max)))
}

/// GGM maximised over every bipartition, using closed-form RDMs of the
/// smaller side of each cut.
///
/// Cuts are visited by increasing size of the smaller side and skipped when
/// their Gershgorin bound cannot beat the best eigenvalue found so far.
pub fn ggm_all_cuts(model: &PhaseModel) -> Result<f64> {
    let chain = model.chain();
    let n = chain.n_sites();
    let cap = default_ggm_sites(chain.local_dim());
    if n > cap {
        return Err(WgsError::Resource {
            what: "sites for bipartition scan",
            requested: n,
            cap,
        });
    }
    let sites: Vec<usize> = (1..=n).collect();
    let mut sides: Vec<Vec<usize>> = Bipartition::enumerate(&sites)
        .into_iter()
        .map(|c| c.smaller().to_vec())
        .collect();
    sides.sort_by_key(|s| s.len());

    let mut best = 0.0f64;
    let mut start = 0;
    while start < sides.len() {
        let size = sides[start].len();
        let end = start + sides[start..].iter().take_while(|s| s.len() == size).count();
        let floor = best;
        let found = sides[start..end]
            .par_iter()
            .map(|s| {
                let sub = SubsystemSpec::with_l_max(*chain, s.clone(), n)?;
                largest_eigenvalue_above(model, &sub, floor)
            })
            .collect::<Result<Vec<_>>>()?;
        best = found.into_iter().flatten().fold(best, f64::max);
        start = end;
    }
    let d = chain.local_dim() as f64;
    Ok((1.0 - best.min(1.0)).clamp(0.0, 1.0 - 1.0 / d))
}

/// Chain length from which the edge cut is used for the GGM.
pub fn edge_ggm_threshold(local_dim: usize) -> usize {
    match local_dim {
        2 => 12,
        3 => 9,
        _ => 7,
    }
}

/// GGM of a finite chain: all cuts below [`edge_ggm_threshold`], the edge cut from there on.
pub fn ggm(model: &PhaseModel) -> Result<f64> {
    let chain = model.chain();
    if chain.n_sites() >= edge_ggm_threshold(chain.local_dim()) {
        ggm_edge(model)
    } else {
        ggm_all_cuts(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainSpec, CouplingRange};

    fn model(n: usize, d: usize, alpha: f64, t: f64) -> PhaseModel {
        PhaseModel::new(ChainSpec::new(n, d, alpha).unwrap(), t).unwrap()
    }

    #[test]
    fn everything_vanishes_at_time_zero() {
        let m = model(40, 3, 0.9, 0.0);
        for l in 1..=4 {
            assert!(block_entropy(&m, l).unwrap().abs() < 1e-12);
        }
        assert!(u_l_bound(&m, 6, 2).unwrap().abs() < 1e-12);
        assert!(mutual_information(&m, 3).unwrap().abs() < 1e-12);
        assert!(ggm_edge(&m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn u_l_bound_degenerate_single_block() {
        let m = model(30, 2, 1.2, 0.5);
        assert_eq!(u_l_bound(&m, 6, 6).unwrap(), block_entropy(&m, 6).unwrap());
    }

    #[test]
    fn u_l_bound_errors() {
        let m = model(30, 3, 1.2, 0.5);
        assert!(u_l_bound(&m, 7, 2).is_err());
        assert!(u_l_bound(&m, 12, 4).is_err(), "pairs of 8 qutrits exceed the cap");
        assert!(u_l_bound(&m, 40, 4).is_err());
    }

    #[test]
    fn mutual_information_errors_and_symmetry() {
        let m = model(12, 2, 1.0, 0.7);
        assert!(mutual_information(&m, 0).is_err());
        assert!(mutual_information(&m, 12).is_err());
        assert!(mutual_information_at(&m, 10, 3).is_err());
        assert!(mutual_information_pair(&m, 4, 4).is_err());
        assert_eq!(
            mutual_information_pair(&m, 3, 8).unwrap(),
            mutual_information_pair(&m, 8, 3).unwrap()
        );
        assert_eq!(centered_anchor(1000, 15), 493);
    }

    #[test]
    fn nearest_neighbour_edge_ggm_vanishes_at_two_pi() {
        for d in 2..=5 {
            let chain = ChainSpec::nearest_neighbour(50, d).unwrap();
            let m = PhaseModel::new(chain, 2.0 * PI).unwrap();
            assert!(ggm_edge(&m).unwrap() < 1e-12);
        }
    }

    #[test]
    fn all_cuts_at_least_edge_cut() {
        let m = model(7, 2, 1.5, 1.1);
        assert!(ggm_all_cuts(&m).unwrap() <= ggm_edge(&m).unwrap() + 1e-12);
        let big = model(12, 3, 1.0, 1.0);
        assert!(matches!(ggm_all_cuts(&big), Err(WgsError::Resource { .. })));
    }

    #[test]
    fn ggm_switches_to_edge_cut_at_threshold() {
        let m = model(9, 3, 2.0, 1.3);
        assert_eq!(ggm(&m).unwrap(), ggm_edge(&m).unwrap());
        let m = model(5, 3, 2.0, 1.3);
        assert_eq!(ggm(&m).unwrap(), ggm_all_cuts(&m).unwrap());
    }

    #[test]
    fn time_average_of_constants_and_sine() {
        let v = time_average(|_| Ok(0.375), 3.0 * PI, 0.01).unwrap();
        assert_eq!(v.value, 0.375);
        assert_eq!(v.half_step_value, 0.375);
        assert!(v.converged);
        let v = time_average(|_| Ok(0.1), 2.0, 0.3).unwrap();
        assert!((v.value - 0.1).abs() < 1e-15);
        let v = time_average(|t| Ok(t.sin()), 2.0 * PI, default_step(2)).unwrap();
        assert!(v.value.abs() < 1e-6);
        assert!(time_average(|_| Ok(1.0), 0.0, 0.1).is_err());
        assert!(time_average(|_| Ok(1.0), 1.0, -0.1).is_err());
    }

    #[test]
    fn time_average_flags_unresolved_integrand() {
        let v = time_average(|t| Ok((40.0 * t).cos()), 1.0, 0.2).unwrap();
        assert!(!v.converged);
    }

    #[test]
    fn time_average_over_a_short_window_tends_to_zero() {
        let chain = ChainSpec::new(200, 3, 2.0).unwrap();
        let g = |t: f64| ggm_edge(&PhaseModel::new(chain, t)?);
        let v = time_average(g, 1e-3, 1e-4).unwrap();
        assert!(v.value < 1e-5);
    }

    #[test]
    fn truncated_edge_ggm_is_two_pi_periodic() {
        let chain = ChainSpec::new(30, 3, 1.0)
            .unwrap()
            .with_range(CouplingRange::Truncated(1))
            .unwrap();
        for t in [0.4, 1.7, 3.0] {
            let a = ggm_edge(&PhaseModel::new(chain, t).unwrap()).unwrap();
            let b = ggm_edge(&PhaseModel::new(chain, t + 2.0 * PI).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_series_matches_individual_chains() {
        let chain = ChainSpec::new(2, 3, 1.7).unwrap();
        let series = ggm_edge_by_length(&chain, 2.3, 14).unwrap();
        assert_eq!(series.len(), 13);
        for n in [2, 5, 14] {
            let m = PhaseModel::new(chain.with_sites(n).unwrap(), 2.3).unwrap();
            assert!((series[n - 2] - ggm_edge(&m).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn time_series_validation() {
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 1.0], MeasureId::Ggm).is_err());
        assert!(TimeSeries::new(vec![0.0], vec![1.0, 1.0], MeasureId::Ggm).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0, f64::NAN], MeasureId::Ggm).is_err());
        let s = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.5, 0.2], MeasureId::Ggm).unwrap();
        assert_eq!(s.argmax(), Some((1.0, 0.5)));
    }
}
