//! Derivatives of the edge GGM at `t = 2 pi` and localisation of their jumps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AlphaGrid, DetectionMethod, TransitionReport};
use crate::chain::{ChainSpec, PhaseModel};
use crate::error::{Result, WgsError};
use crate::measures::ggm_edge;

/// Largest step accepted for either derivative.
pub const MAX_STEP: f64 = 1e-3;

/// Minimum ratio of a jump to the median forward difference.
pub const NOISE_FACTOR: f64 = 5.0;

/// A neighbouring interval carrying at least this fraction of the largest
/// forward difference (same sign) is merged into the jump: a transition
/// sitting on a grid point splits its jump over the two intervals around it.
pub const MERGE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeKind {
    /// `dG(alpha, d, 2 pi) / d alpha`
    AlphaDerivative,
    /// `dG(alpha, d, t) / dt` at `t = 2 pi`
    TimeDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSeries {
    pub local_dim: usize,
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: DerivativeKind,
}

impl DerivativeSeries {
    pub fn new(local_dim: usize, alphas: Vec<f64>, values: Vec<f64>, kind: DerivativeKind) -> Result<Self> {
        if alphas.len() != values.len() {
            return Err(WgsError::domain("alphas and values differ in length"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WgsError::Numerical("derivative series contains non-finite values".into()));
        }
        if alphas.len() >= 2 {
            let h = alphas[1] - alphas[0];
            let scale = alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            if !(h > 0.0) || alphas.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * scale) {
                return Err(WgsError::domain("alpha grid must be uniform and increasing"));
            }
        }
        Ok(Self { local_dim, alphas, values, kind })
    }

    pub fn step(&self) -> f64 {
        self.alphas[1] - self.alphas[0]
    }
}

/// `(f(x + h) - f(x - h)) / 2h`
pub fn central_difference<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(WgsError::domain(format!("difference step must be positive, got {h}")));
    }
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Central-difference derivative of the edge GGM at `t = 2 pi` for every
/// `alpha` on the grid. `chain` fixes `N` and `d`.
pub fn ggm_derivative(kind: DerivativeKind, chain: &ChainSpec, grid: &AlphaGrid, h: f64) -> Result<DerivativeSeries> {
    if !(h > 0.0 && h <= MAX_STEP) {
        return Err(WgsError::domain(format!("difference step must lie in (0, {MAX_STEP}], got {h}")));
    }
    if kind == DerivativeKind::AlphaDerivative && grid.start - h < 0.0 {
        return Err(WgsError::domain(format!("alpha - h < 0 at the grid start {}", grid.start)));
    }
    let t = 2.0 * PI;
    let alphas = grid.points();
    let values = alphas
        .par_iter()
        .map(|&alpha| match kind {
            DerivativeKind::AlphaDerivative => {
                central_difference(|a| ggm_edge(&PhaseModel::new(chain.with_alpha(a)?, t)?), alpha, h)
            }
            DerivativeKind::TimeDerivative => {
                let c = chain.with_alpha(alpha)?;
                central_difference(|s| ggm_edge(&PhaseModel::new(c, s)?), t, h)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DerivativeSeries::new(chain.local_dim(), alphas, values, kind)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Locates the discontinuity of a derivative series.
///
/// The jump is anchored at the interval with the largest absolute forward
/// difference. It must carry the derivative across zero, either within that
/// interval or together with one adjacent same-sign interval (the
/// discontinuity then sits on the grid point between them). A neighbour
/// holding at least [`MERGE_FRACTION`] of the peak is merged even when the
/// peak interval crosses zero by itself. The jump must exceed
/// [`NOISE_FACTOR`] times the median absolute forward difference. The
/// reported location is the midpoint of the jump and `jump_magnitude` its
/// signed size.
pub fn detect_jump(series: &DerivativeSeries) -> Result<TransitionReport> {
    let n = series.values.len();
    if n < 10 {
        return Err(WgsError::domain(format!("series has {n} points, need 10")));
    }
    let v = &series.values;
    let fd: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let noise = median(fd.iter().map(|x| x.abs()).collect());
    let (imax, &peak) = fd
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty");
    let crosses = |lo: usize, hi: usize| v[lo] * v[hi + 1] < 0.0;
    let same_sign = |i: usize| fd[i].signum() == peak.signum();
    // (lo, hi, size of the merged neighbour)
    let mut doubles: Vec<(usize, usize, f64)> = Vec::with_capacity(2);
    if imax > 0 && same_sign(imax - 1) {
        doubles.push((imax - 1, imax, fd[imax - 1].abs()));
    }
    if imax + 1 < fd.len() && same_sign(imax + 1) {
        doubles.push((imax, imax + 1, fd[imax + 1].abs()));
    }
    doubles.retain(|&(lo, hi, _)| crosses(lo, hi));
    doubles.sort_by(|a, b| b.2.total_cmp(&a.2));
    let split = doubles.first().filter(|d| d.2 >= MERGE_FRACTION * peak.abs());
    let (lo, hi) = match (crosses(imax, imax), split, doubles.first()) {
        (_, Some(&(lo, hi, _)), _) => (lo, hi),
        (true, None, _) => (imax, imax),
        (false, None, Some(&(lo, hi, _))) => (lo, hi),
        (false, None, None) => {
            return Err(WgsError::NoTransition(format!(
                "largest change {peak:e} near alpha = {} does not cross zero",
                series.alphas[imax]
            )))
        }
    };
    let jump = v[hi + 1] - v[lo];
    if !(jump.abs() > NOISE_FACTOR * noise) {
        return Err(WgsError::NoTransition(format!(
            "largest jump {jump:e} within {NOISE_FACTOR} x noise floor {noise:e}"
        )));
    }
    let method = match series.kind {
        DerivativeKind::AlphaDerivative => DetectionMethod::AlphaDerivativeJump,
        DerivativeKind::TimeDerivative => DetectionMethod::TimeDerivativeJump,
    };
    Ok(TransitionReport {
        local_dim: series.local_dim,
        alpha_star: 0.5 * (series.alphas[lo] + series.alphas[hi + 1]),
        method,
        jump_magnitude: jump,
        grid_resolution: series.step(),
        curve: series.alphas.iter().copied().zip(v.iter().copied()).collect(),
    })
}

/// Coarse-to-fine search: [`detect_jump`] on `coarse`, then again on a grid
/// of step `fine_step` covering `half_width` either side of the coarse hit.
pub fn locate_jump(
    kind: DerivativeKind,
    chain: &ChainSpec,
    coarse: &AlphaGrid,
    fine_step: f64,
    half_width: f64,
    h: f64,
) -> Result<TransitionReport> {
    let first = detect_jump(&ggm_derivative(kind, chain, coarse, h)?)?;
    let lo = (first.alpha_star - half_width).max(coarse.start);
    let count = ((2.0 * half_width / fine_step).round() as usize) + 1;
    let fine = AlphaGrid::new(lo, fine_step, count)?;
    detect_jump(&ggm_derivative(kind, chain, &fine, h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::CouplingRange;

    fn series(alphas: Vec<f64>, values: Vec<f64>) -> DerivativeSeries {
        DerivativeSeries::new(2, alphas, values, DerivativeKind::AlphaDerivative).unwrap()
    }

    #[test]
    fn central_difference_of_exponential() {
        for x in [0.0, 0.7, 2.5] {
            let g = central_difference(|a: f64| Ok((-a).exp()), x, 1e-3).unwrap();
            assert!((g + (-x).exp()).abs() < 1e-6);
        }
        assert!(central_difference(|a| Ok(a), 0.0, 0.0).is_err());
    }

    #[test]
    fn smooth_monotone_series_has_no_transition() {
        let g = AlphaGrid::new(0.0, 0.01, 100).unwrap();
        let xs = g.points();
        let s = series(xs.clone(), xs.iter().map(|a| a * a - 0.3).collect());
        assert!(matches!(detect_jump(&s), Err(WgsError::NoTransition(_))));
        let s = series(xs.clone(), xs.iter().map(|a| (3.0 * a).exp()).collect());
        assert!(matches!(detect_jump(&s), Err(WgsError::NoTransition(_))));
    }

    #[test]
    fn locates_step_between_grid_points() {
        let g = AlphaGrid::new(0.5, 0.005, 101).unwrap();
        let xs = g.points();
        let vals = xs
            .iter()
            .map(|&a| if a < 0.7525 { -0.1 - 0.01 * (a - 0.5) } else { 0.2 + 0.01 * (a - 0.5) })
            .collect();
        let r = detect_jump(&series(xs, vals)).unwrap();
        assert!((r.alpha_star - 0.7525).abs() < 1e-9);
        assert!(r.jump_magnitude > 0.29);
        assert_eq!(r.method, DetectionMethod::AlphaDerivativeJump);
    }

    #[test]
    fn merges_a_jump_split_by_a_grid_point() {
        let g = AlphaGrid::new(0.9, 0.005, 41).unwrap();
        let xs = g.points();
        let vals = xs
            .iter()
            .enumerate()
            .map(|(i, _)| match i.cmp(&20) {
                std::cmp::Ordering::Less => 0.4,
                std::cmp::Ordering::Equal => 0.01,
                std::cmp::Ordering::Greater => -0.4,
            })
            .collect();
        let r = detect_jump(&series(xs, vals)).unwrap();
        assert!((r.alpha_star - 1.0).abs() < 1e-9);
        assert!((r.jump_magnitude + 0.8).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_cusp_on_a_grid_point() {
        let g = AlphaGrid::new(0.6, 0.05, 20).unwrap();
        let xs = g.points();
        let vals = xs
            .iter()
            .map(|&a| {
                if a < 0.975 {
                    0.02 * (a - 0.5)
                } else if a < 1.025 {
                    -0.0005
                } else {
                    -0.12 - 0.2 * (a - 1.05)
                }
            })
            .collect();
        let r = detect_jump(&series(xs, vals)).unwrap();
        assert!((r.alpha_star - 1.0).abs() < 1e-9);
        assert!(r.jump_magnitude < -0.12);
    }

    #[test]
    fn rejects_short_or_irregular_series() {
        let s = series((0..9).map(|i| i as f64).collect(), vec![0.0; 9]);
        assert!(matches!(detect_jump(&s), Err(WgsError::Domain(_))));
        assert!(DerivativeSeries::new(2, vec![0.0, 0.1, 0.3], vec![0.0; 3], DerivativeKind::TimeDerivative).is_err());
    }

    #[test]
    fn time_derivative_vanishes_at_nearest_neighbour_minimum() {
        let chain = ChainSpec::new(40, 3, 1.0).unwrap().with_range(CouplingRange::Truncated(1)).unwrap();
        let grid = AlphaGrid::new(1.0, 0.5, 3).unwrap();
        let s = ggm_derivative(DerivativeKind::TimeDerivative, &chain, &grid, 1e-4).unwrap();
        assert!(s.values.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn derivative_step_is_validated() {
        let chain = ChainSpec::new(40, 2, 1.0).unwrap();
        let grid = AlphaGrid::new(0.5, 0.1, 3).unwrap();
        assert!(ggm_derivative(DerivativeKind::AlphaDerivative, &chain, &grid, 2e-3).is_err());
        let grid = AlphaGrid::new(0.0, 0.1, 3).unwrap();
        assert!(ggm_derivative(DerivativeKind::AlphaDerivative, &chain, &grid, 1e-3).is_err());
    }
}
