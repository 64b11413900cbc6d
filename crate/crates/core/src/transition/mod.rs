//! Locating the fall-off rates at which the measures change character.
//!
//! * [`fit`]: the quadratic coefficient of `log <I>` against `log r` and the
//!   `log2 d` scaling of the detected transition points.
//! * [`derivative`]: finite-difference derivatives of the edge GGM at
//!   `t = 2 pi` and jump localisation.
//! * [`saturation`]: time-averaged GGM against `alpha` and `N`, the
//!   saturation size `N_sat`, and the error of the edge-cut GGM.

pub mod derivative;
pub mod fit;
pub mod saturation;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgsError};

pub use derivative::{
    central_difference, detect_jump, ggm_derivative, locate_jump, DerivativeKind, DerivativeSeries,
};
pub use fit::{
    a_tilde, alpha_star_from_fit, averaged_mi_profile, fit_mi_scaling, scaling_law_fit, FitResult, LawFit, MiAnchor,
    MiFitConfig,
};
pub use saturation::{
    ggm_approx_error, n_sat, n_sat_from_values, saturation_report, time_averaged_ggm, time_averaged_ggm_by_length,
    NSat, NSatEntry, SaturationConfig, SaturationReport,
};

/// A uniform grid `start + i * step`, `i = 0..count`.
///
/// Points are computed from the index, never by accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl AlphaGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !step.is_finite() || (count > 1 && step <= 0.0) {
            return Err(WgsError::domain(format!("invalid grid {start}:{step}:{count}")));
        }
        Ok(Self { start, step, count })
    }

    /// Grid covering `[lo, hi]` with the given step (both ends included when
    /// `hi - lo` is a multiple of `step`).
    pub fn spanning(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new(lo, step, count)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    pub fn last(&self) -> f64 {
        self.point(self.count - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionMethod {
    FitCoefficient,
    AlphaDerivativeJump,
    TimeDerivativeJump,
}

/// A detected non-local to quasi-local transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub local_dim: usize,
    pub alpha_star: f64,
    pub method: DetectionMethod,
    /// Signed size of the jump (derivative methods) or the departure
    /// threshold crossed (fit method).
    pub jump_magnitude: f64,
    pub grid_resolution: f64,
    /// The scanned curve, `(alpha, value)`.
    pub curve: Vec<(f64, f64)>,
}
