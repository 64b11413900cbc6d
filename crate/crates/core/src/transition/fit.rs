//! Quadratic log-log fit of the time-averaged mutual information and the
//! `log2 d` scaling law of the transition points.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AlphaGrid, DetectionMethod, TransitionReport};
use crate::chain::{ChainSpec, PhaseModel};
use crate::error::{Result, WgsError};
use crate::measures::{centered_anchor, default_step, mutual_information_at, time_average, AveragedValue};

/// `<I>` values at or below this are left out of the log fit.
pub const MI_FLOOR: f64 = 1e-14;

/// Coefficients of `log2 <I> = -A (log2 r)^2 - B log2 r + C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
    pub residual_rms: f64,
    pub r_range: (usize, usize),
    /// Separations dropped because `<I>` was at or below [`MI_FLOOR`].
    pub excluded: Vec<usize>,
}

/// Ordinary least squares through the SVD of the design matrix.
pub(crate) fn least_squares(design: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let cols = design.ncols();
    let svd = design.svd(true, true);
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    if rank < cols {
        return Err(WgsError::domain(format!("design matrix has rank {rank}, need {cols}")));
    }
    svd.solve(y, 0.0).map_err(|e| WgsError::Numerical(e.to_string()))
}

/// Fits `log2 <I>` against `log2 r` over `r_min..=r_max`.
pub fn fit_mi_scaling(points: &[(usize, f64)], r_min: usize, r_max: usize) -> Result<FitResult> {
    if r_min == 0 || r_min > r_max {
        return Err(WgsError::domain(format!("invalid fit range [{r_min}, {r_max}]")));
    }
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(r, v) in points.iter().filter(|(r, _)| (r_min..=r_max).contains(r)) {
        if !v.is_finite() {
            return Err(WgsError::Numerical(format!("non-finite <I> at r = {r}")));
        }
        if v <= MI_FLOOR {
            excluded.push(r);
            continue;
        }
        xs.push((r as f64).log2());
        ys.push(v.log2());
    }
    if xs.len() < 4 {
        return Err(WgsError::domain(format!("{} usable points in [{r_min}, {r_max}], need 4", xs.len())));
    }
    let design = DMatrix::from_fn(xs.len(), 3, |i, j| match j {
        0 => -xs[i] * xs[i],
        1 => -xs[i],
        _ => 1.0,
    });
    let y = DVector::from_vec(ys);
    let coef = least_squares(design.clone(), &y)?;
    let resid = &design * &coef - &y;
    Ok(FitResult {
        a_tilde: coef[0],
        b_tilde: coef[1],
        c_tilde: coef[2],
        residual_rms: (resid.norm_squared() / xs.len() as f64).sqrt(),
        r_range: (r_min, r_max),
        excluded,
    })
}

/// Which pair of sites at separation `r` is used for `I(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MiAnchor {
    /// The pair straddling the chain centre.
    #[default]
    Centered,
    /// Sites `1` and `1 + r`.
    Edge,
}

impl MiAnchor {
    pub fn left_site(self, n_sites: usize, r: usize) -> usize {
        match self {
            MiAnchor::Centered => centered_anchor(n_sites, r),
            MiAnchor::Edge => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiFitConfig {
    pub t0: f64,
    /// Quadrature step; `None` selects [`default_step`].
    pub step: Option<f64>,
    pub r_min: usize,
    pub r_max: usize,
    pub anchor: MiAnchor,
    /// Departure threshold on `|A|`.
    pub theta: f64,
    /// Bisection stops once the bracket is this narrow.
    pub refine_to: f64,
}

impl Default for MiFitConfig {
    fn default() -> Self {
        Self {
            t0: 15.0 * PI,
            step: None,
            r_min: 1,
            r_max: 15,
            anchor: MiAnchor::Centered,
            theta: 0.02,
            refine_to: 0.05,
        }
    }
}

/// `<I>_t0(r)` for `r` in the fit range.
pub fn averaged_mi_profile(chain: &ChainSpec, cfg: &MiFitConfig) -> Result<Vec<(usize, AveragedValue)>> {
    let n = chain.n_sites();
    if cfg.r_max >= n {
        return Err(WgsError::domain(format!("r_max = {} needs more than {n} sites", cfg.r_max)));
    }
    let step = cfg.step.unwrap_or_else(|| default_step(chain.local_dim()));
    (cfg.r_min..=cfg.r_max)
        .into_par_iter()
        .map(|r| {
            let left = cfg.anchor.left_site(n, r);
            let f = |t: f64| mutual_information_at(&PhaseModel::new(*chain, t)?, left, r);
            Ok((r, time_average(f, cfg.t0, step)?))
        })
        .collect()
}

/// The fit of `<I>_t0` for one chain.
pub fn a_tilde(chain: &ChainSpec, cfg: &MiFitConfig) -> Result<FitResult> {
    let profile = averaged_mi_profile(chain, cfg)?;
    let points: Vec<(usize, f64)> = profile.iter().map(|(r, v)| (*r, v.value)).collect();
    fit_mi_scaling(&points, cfg.r_min, cfg.r_max)
}

/// Estimates the transition as the largest `alpha` with `|A| < theta`
/// before `A` first reaches `theta`.
///
/// The departure is bracketed on `grid` and then bisected down to
/// `cfg.refine_to`. The reported curve holds the grid points and every
/// bisection point, sorted by `alpha`.
pub fn alpha_star_from_fit(chain: &ChainSpec, grid: &AlphaGrid, cfg: &MiFitConfig) -> Result<TransitionReport> {
    let eval = |alpha: f64| -> Result<f64> { Ok(a_tilde(&chain.with_alpha(alpha)?, cfg)?.a_tilde) };
    let alphas = grid.points();
    let values = alphas.iter().map(|&a| eval(a)).collect::<Result<Vec<_>>>()?;
    let mut curve: Vec<(f64, f64)> = alphas.iter().copied().zip(values.iter().copied()).collect();

    let first_out = values.iter().position(|&v| v >= cfg.theta).ok_or_else(|| {
        WgsError::NoTransition(format!("A stays below {} on [{}, {}]", cfg.theta, grid.start, grid.last()))
    })?;
    if first_out == 0 {
        return Err(WgsError::NoTransition(format!(
            "A already exceeds {} at the first grid point {}",
            cfg.theta, grid.start
        )));
    }
    let (mut lo, mut hi) = (alphas[first_out - 1], alphas[first_out]);
    while hi - lo > cfg.refine_to {
        let mid = 0.5 * (lo + hi);
        let v = eval(mid)?;
        curve.push((mid, v));
        if v >= cfg.theta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(TransitionReport {
        local_dim: chain.local_dim(),
        alpha_star: lo,
        method: DetectionMethod::FitCoefficient,
        jump_magnitude: cfg.theta,
        grid_resolution: (hi - lo).min(grid.step),
        curve,
    })
}

/// Straight-line fit `alpha* = slope * log2 d + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

pub fn scaling_law_fit(points: &[(usize, f64)]) -> Result<LawFit> {
    if points.len() < 4 {
        return Err(WgsError::domain(format!("{} transition points, need 4", points.len())));
    }
    if let Some(&(d, a)) = points.iter().find(|(d, a)| *d < 2 || !a.is_finite()) {
        return Err(WgsError::domain(format!("invalid point (d = {d}, alpha* = {a})")));
    }
    let x: Vec<f64> = points.iter().map(|&(d, _)| (d as f64).log2()).collect();
    let design = DMatrix::from_fn(points.len(), 2, |i, j| if j == 0 { x[i] } else { 1.0 });
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coef = least_squares(design.clone(), &y)?;
    let resid = &design * &coef - &y;
    Ok(LawFit {
        slope: coef[0],
        intercept: coef[1],
        residual_rms: (resid.norm_squared() / points.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(a: f64, b: f64, c: f64) -> Vec<(usize, f64)> {
        (1..=15)
            .map(|r| {
                let x = (r as f64).log2();
                (r, (-a * x * x - b * x + c).exp2())
            })
            .collect()
    }

    #[test]
    fn recovers_quadratic_coefficients() {
        let f = fit_mi_scaling(&synthetic(0.3, 1.1, 0.2), 1, 15).unwrap();
        assert!((f.a_tilde - 0.3).abs() < 1e-9);
        assert!((f.b_tilde - 1.1).abs() < 1e-9);
        assert!((f.c_tilde - 0.2).abs() < 1e-9);
        assert!(f.residual_rms < 1e-9);
    }

    #[test]
    fn pure_power_law_has_no_curvature() {
        let f = fit_mi_scaling(&synthetic(0.0, 2.0, 0.0), 1, 15).unwrap();
        assert!(f.a_tilde.abs() < 1e-9);
    }

    #[test]
    fn tiny_values_are_excluded_not_clamped() {
        let mut pts = synthetic(0.2, 0.5, -1.0);
        pts[14].1 = 0.0;
        pts[13].1 = 1e-15;
        let f = fit_mi_scaling(&pts, 1, 15).unwrap();
        assert_eq!(f.excluded, vec![14, 15]);
        assert!((f.a_tilde - 0.2).abs() < 1e-9);
        for p in pts.iter_mut().skip(3) {
            p.1 = 0.0;
        }
        assert!(matches!(fit_mi_scaling(&pts, 1, 15), Err(WgsError::Domain(_))));
    }

    #[test]
    fn scaling_law_examples() {
        let exact: Vec<_> = (2..=5).map(|d| (d, (d as f64).log2())).collect();
        let f = scaling_law_fit(&exact).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.intercept.abs() < 1e-12 && f.residual_rms < 1e-12);
        let shifted: Vec<_> = (2..=5).map(|d| (d, 2.0 * (d as f64).log2() + 1.0)).collect();
        let f = scaling_law_fit(&shifted).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(scaling_law_fit(&exact[..3]).is_err());
        assert!(scaling_law_fit(&[(3, 1.0), (3, 1.1), (3, 1.2), (3, 1.3)]).is_err());
    }
}
