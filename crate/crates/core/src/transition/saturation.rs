//! Time-averaged GGM against `alpha` and `N`, the saturation size `N_sat`,
//! and the error of the edge-cut approximation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AlphaGrid;
use crate::chain::{ChainSpec, PhaseModel};
use crate::error::{Result, WgsError};
use crate::measures::{default_step, ggm_all_cuts, ggm_edge, ggm_edge_by_length, time_average, time_average_many, AveragedValue};

/// Successive `<G>` differences below this mark the plateau in `alpha`.
pub const PLATEAU_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationConfig {
    pub t0: f64,
    /// Quadrature step; `None` selects [`default_step`].
    pub step: Option<f64>,
    /// Chain length for the `<G>(alpha)` curve.
    pub n_sites: usize,
    pub epsilons: Vec<f64>,
    /// Number of consecutive sub-epsilon increments required.
    pub window: usize,
    pub n_min: usize,
    /// Largest `N` scanned for `N_sat`.
    pub n_cap: usize,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        Self {
            t0: 3.0 * PI,
            step: None,
            n_sites: 1000,
            epsilons: vec![1e-2, 1e-3, 1e-4, 1e-5],
            window: 5,
            n_min: 10,
            n_cap: 1000,
        }
    }
}

impl SaturationConfig {
    fn validate(&self) -> Result<()> {
        if self.window == 0 || self.n_min < 2 || self.n_cap < self.n_min + self.window {
            return Err(WgsError::domain(format!(
                "need window >= 1, n_min >= 2 and n_cap >= n_min + window, got {}, {}, {}",
                self.window, self.n_min, self.n_cap
            )));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(WgsError::domain("epsilons must be non-empty and positive"));
        }
        if !(self.t0 > 0.0) {
            return Err(WgsError::domain(format!("t0 must be positive, got {}", self.t0)));
        }
        Ok(())
    }

    fn step_for(&self, local_dim: usize) -> f64 {
        self.step.unwrap_or_else(|| default_step(local_dim))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NSat {
    Saturated(usize),
    /// No qualifying `N` up to `cap`.
    Unsaturated { cap: usize },
}

impl NSat {
    pub fn value(&self) -> Option<usize> {
        match self {
            NSat::Saturated(n) => Some(*n),
            NSat::Unsaturated { .. } => None,
        }
    }
}

/// `N_sat` from a `<G>` series, `g[k]` belonging to `N = n_first + k`.
///
/// Returns the smallest `N >= n_first` with
/// `|<G>(M+1) - <G>(M)| < epsilon` for `M = N..N+window`.
/// `window = 1` is the bare minimum-`N` definition.
pub fn n_sat_from_values(g: &[f64], n_first: usize, epsilon: f64, window: usize) -> NSat {
    let small: Vec<bool> = g.windows(2).map(|w| (w[1] - w[0]).abs() < epsilon).collect();
    let found = small
        .windows(window.max(1))
        .position(|w| w.iter().all(|&b| b));
    match found {
        Some(k) => NSat::Saturated(n_first + k),
        None => NSat::Unsaturated { cap: n_first + g.len().saturating_sub(1) },
    }
}

/// `<G>_t0` of the edge cut for every chain length `2..=n_max`.
pub fn time_averaged_ggm_by_length(chain: &ChainSpec, t0: f64, step: f64, n_max: usize) -> Result<Vec<AveragedValue>> {
    time_average_many(|t| ggm_edge_by_length(chain, t, n_max), n_max - 1, t0, step)
}

/// `<G>_t0` of the edge cut for one chain.
pub fn time_averaged_ggm(chain: &ChainSpec, t0: f64, step: f64) -> Result<AveragedValue> {
    time_average(|t| ggm_edge(&PhaseModel::new(*chain, t)?), t0, step)
}

/// `N_sat` for the `alpha` and `d` of `chain`. Every length uses the edge cut.
pub fn n_sat(chain: &ChainSpec, cfg: &SaturationConfig, epsilon: f64) -> Result<NSat> {
    cfg.validate()?;
    let series = time_averaged_ggm_by_length(chain, cfg.t0, cfg.step_for(chain.local_dim()), cfg.n_cap)?;
    let g: Vec<f64> = series[cfg.n_min - 2..].iter().map(|v| v.value).collect();
    Ok(n_sat_from_values(&g, cfg.n_min, epsilon, cfg.window))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSatEntry {
    pub alpha: f64,
    pub epsilon: f64,
    pub n_sat: NSat,
    /// The bare minimum-`N` statistic, for comparison.
    pub n_sat_literal: NSat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub local_dim: usize,
    pub alphas: Vec<f64>,
    /// `<G>_t0` at `cfg.n_sites` for every `alpha`.
    pub g_avg: Vec<AveragedValue>,
    /// `<G>` at the largest scanned `alpha`.
    pub plateau_value: f64,
    /// Smallest `alpha` from which successive `<G>` differences stay below
    /// [`PLATEAU_TOLERANCE`].
    pub alpha_plateau: Option<f64>,
    pub n_sat_table: Vec<NSatEntry>,
    /// Smallest `alpha` from which on `N_sat` is finite and the same for
    /// every epsilon.
    pub alpha_sat_estimate: Option<f64>,
}

pub fn saturation_report(local_dim: usize, grid: &AlphaGrid, cfg: &SaturationConfig) -> Result<SaturationReport> {
    cfg.validate()?;
    let step = cfg.step_for(local_dim);
    let n_max = cfg.n_cap.max(cfg.n_sites);
    let alphas = grid.points();
    let mut g_avg = Vec::with_capacity(alphas.len());
    let mut n_sat_table = Vec::with_capacity(alphas.len() * cfg.epsilons.len());
    let mut eps_independent = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let chain = ChainSpec::new(n_max, local_dim, alpha)?;
        let series = time_averaged_ggm_by_length(&chain, cfg.t0, step, n_max)?;
        g_avg.push(series[cfg.n_sites - 2]);
        let g: Vec<f64> = series[cfg.n_min - 2..cfg.n_cap - 1].iter().map(|v| v.value).collect();
        let mut row = Vec::with_capacity(cfg.epsilons.len());
        for &epsilon in &cfg.epsilons {
            let entry = NSatEntry {
                alpha,
                epsilon,
                n_sat: n_sat_from_values(&g, cfg.n_min, epsilon, cfg.window),
                n_sat_literal: n_sat_from_values(&g, cfg.n_min, epsilon, 1),
            };
            row.push(entry.n_sat);
            n_sat_table.push(entry);
        }
        eps_independent.push(row[0].value().is_some() && row.iter().all(|n| *n == row[0]));
    }

    let values: Vec<f64> = g_avg.iter().map(|v| v.value).collect();
    let flat_from = values
        .windows(2)
        .rposition(|w| (w[1] - w[0]).abs() >= PLATEAU_TOLERANCE)
        .map_or(0, |i| i + 1);
    let alpha_plateau = (flat_from + 1 < alphas.len()).then(|| alphas[flat_from]);
    let sat_from = eps_independent.iter().rposition(|&b| !b).map_or(0, |i| i + 1);
    let alpha_sat_estimate = alphas.get(sat_from).copied();

    Ok(SaturationReport {
        local_dim,
        plateau_value: *values.last().expect("non-empty grid"),
        alphas,
        g_avg,
        alpha_plateau,
        n_sat_table,
        alpha_sat_estimate,
    })
}

/// `E(N) = <|G(N, t) - G_1(N, t)|>_t` over `[0, t0]`, with `G` maximised
/// over all cuts and `G_1` from the edge cut.
pub fn ggm_approx_error(chain: &ChainSpec, sizes: &[usize], t0: f64, step: f64) -> Result<Vec<(usize, AveragedValue)>> {
    sizes
        .iter()
        .map(|&n| {
            let c = chain.with_sites(n)?;
            let err = |t: f64| {
                let m = PhaseModel::new(c, t)?;
                Ok((ggm_all_cuts(&m)? - ggm_edge(&m)?).abs())
            };
            Ok((n, time_average(err, t0, step)?))
        })
        .collect()
}
