//! Sweep configuration: TOML file, command-line overrides and per-experiment
//! defaults.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use wgs_core::transition::MiAnchor;
use wgs_core::AlphaGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Block entropy S_L and its sub-block bound U_L.
    Entropy,
    /// Two-site mutual information against time.
    MiTime,
    /// Time-averaged mutual information and its quadratic log-log fit.
    MiAverage,
    /// GGM against time.
    GgmTime,
    /// Transition from the departure of the fit curvature.
    AlphaStarFit,
    /// Transition from the jump of the GGM derivatives.
    AlphaStarJump,
    /// Time-averaged GGM against alpha.
    Saturation,
    /// Saturation size N_sat.
    NSat,
    /// Error of the edge-cut GGM against the all-cut GGM.
    ApproxError,
    /// Cross-checks of closed-form results against full state vectors.
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Entropy => "entropy",
            Experiment::MiTime => "mi-time",
            Experiment::MiAverage => "mi-average",
            Experiment::GgmTime => "ggm-time",
            Experiment::AlphaStarFit => "alpha-star-fit",
            Experiment::AlphaStarJump => "alpha-star-jump",
            Experiment::Saturation => "saturation",
            Experiment::NSat => "n-sat",
            Experiment::ApproxError => "approx-error",
            Experiment::Validate => "validate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `count` equally spaced times from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.count)
            .map(|i| self.start + span * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Parses `start:step:count`.
pub fn parse_alpha_grid(s: &str) -> Result<AlphaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:step:count, got {s:?}"));
    }
    let start = f64::from_str(parts[0]).map_err(|e| format!("start {:?}: {e}", parts[0]))?;
    let step = f64::from_str(parts[1]).map_err(|e| format!("step {:?}: {e}", parts[1]))?;
    let count = usize::from_str(parts[2]).map_err(|e| format!("count {:?}: {e}", parts[2]))?;
    AlphaGrid::new(start, step, count).map_err(|e| e.to_string())
}

/// Everything needed to reproduce one run. Unset options are filled with
/// experiment defaults by [`SweepConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: Experiment,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::d")]
    pub d: usize,
    /// Several local dimensions (transition and saturation scans).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
    /// Single evaluation time (entropy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Averaging horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Quadrature step; the default depends on `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default = "defaults::r_min")]
    pub r_min: usize,
    #[serde(default = "defaults::r_max")]
    pub r_max: usize,
    #[serde(default)]
    pub anchor: MiAnchor,
    #[serde(default = "defaults::theta")]
    pub theta: f64,
    #[serde(default = "defaults::refine_to")]
    pub refine_to: f64,
    #[serde(default = "defaults::block_max")]
    pub block_max: usize,
    #[serde(default = "defaults::sub_lens")]
    pub sub_lens: Vec<usize>,
    #[serde(default = "defaults::h_alpha")]
    pub h_alpha: f64,
    #[serde(default = "defaults::h_time")]
    pub h_time: f64,
    #[serde(default = "defaults::fine_step")]
    pub fine_step: f64,
    #[serde(default = "defaults::half_width")]
    pub half_width: f64,
    #[serde(default = "defaults::epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "defaults::window")]
    pub window: usize,
    #[serde(default = "defaults::n_min")]
    pub n_min: usize,
    #[serde(default = "defaults::n_cap")]
    pub n_cap: usize,
    /// Inclusive chain-length range for the approximation error.
    #[serde(default = "defaults::sizes")]
    pub sizes: (usize, usize),
    #[serde(default = "defaults::cases")]
    pub cases: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

mod defaults {
    use std::path::PathBuf;

    pub fn n() -> usize {
        1000
    }
    pub fn d() -> usize {
        2
    }
    pub fn r_min() -> usize {
        1
    }
    pub fn r_max() -> usize {
        15
    }
    pub fn theta() -> f64 {
        0.02
    }
    pub fn refine_to() -> f64 {
        0.05
    }
    pub fn block_max() -> usize {
        10
    }
    pub fn sub_lens() -> Vec<usize> {
        vec![5, 3, 2]
    }
    pub fn h_alpha() -> f64 {
        1e-3
    }
    pub fn h_time() -> f64 {
        1e-4
    }
    pub fn fine_step() -> f64 {
        0.005
    }
    pub fn half_width() -> f64 {
        0.1
    }
    pub fn epsilons() -> Vec<f64> {
        vec![1e-2, 1e-3, 1e-4, 1e-5]
    }
    pub fn window() -> usize {
        5
    }
    pub fn n_min() -> usize {
        10
    }
    pub fn n_cap() -> usize {
        1000
    }
    pub fn sizes() -> (usize, usize) {
        (2, 11)
    }
    pub fn cases() -> usize {
        200
    }
    pub fn out() -> PathBuf {
        PathBuf::from("results")
    }
}

/// One invalid field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl SweepConfig {
    pub fn new(experiment: Experiment) -> Self {
        let mut cfg: SweepConfig =
            toml::from_str(&format!("experiment = \"{experiment}\"")).expect("defaults deserialize");
        cfg.experiment = experiment;
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dims(&self) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| vec![self.d])
    }

    /// Fills unset grids and horizons with the experiment defaults, then
    /// validates every field.
    pub fn resolve(mut self) -> Result<Self, Vec<FieldError>> {
        use Experiment::*;
        let e = self.experiment;
        if self.alpha.is_none() {
            self.alpha = Some(match e {
                Entropy => AlphaGrid::new(0.5, 0.5, 10),
                MiTime | MiAverage | GgmTime => AlphaGrid::new(0.5, 2.0, 3),
                AlphaStarFit => AlphaGrid::new(0.1, 0.05, 36),
                AlphaStarJump => AlphaGrid::new(0.1, 0.05, 70),
                Saturation | NSat => AlphaGrid::new(0.1, 0.1, 60),
                ApproxError => AlphaGrid::new(2.0, 1.0, 1),
                Validate => AlphaGrid::new(0.0, 5.0, 2),
            }
            .expect("default grid"));
        }
        if self.t.is_none() && e == Entropy {
            self.t = Some(0.5);
        }
        if self.times.is_none() {
            self.times = match e {
                MiTime => Some(TimeGrid { start: 0.0, stop: 4.0 * PI, count: 401 }),
                GgmTime => Some(TimeGrid { start: 0.0, stop: 2.5 * PI, count: 401 }),
                _ => None,
            };
        }
        if self.t0.is_none() {
            self.t0 = match e {
                MiAverage | AlphaStarFit => Some(15.0 * PI),
                Saturation | NSat | ApproxError => Some(3.0 * PI),
                _ => None,
            };
        }
        let errors = self.validate();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(errors)
        }
    }

    fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut bad = |field: &'static str, message: String| errs.push(FieldError { field, message });
        if self.n < 2 {
            bad("n", format!("need at least 2 sites, got {}", self.n));
        }
        for d in self.dims() {
            if d < 2 {
                bad("d", format!("local dimension must be >= 2, got {d}"));
            }
        }
        if let Some(g) = &self.alpha {
            if g.start < 0.0 || g.count == 0 {
                bad("alpha", format!("grid must be non-empty with start >= 0, got {g:?}"));
            }
        }
        if let Some(tg) = &self.times {
            if tg.count == 0 || tg.start < 0.0 || tg.stop < tg.start {
                bad("times", format!("need 0 <= start <= stop and count >= 1, got {tg:?}"));
            }
        }
        if let Some(t) = self.t {
            if !(t >= 0.0 && t.is_finite()) {
                bad("t", format!("must be finite and >= 0, got {t}"));
            }
        }
        if let Some(t0) = self.t0 {
            if !(t0 > 0.0 && t0.is_finite()) {
                bad("t0", format!("must be finite and > 0, got {t0}"));
            }
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                bad("step", format!("must be > 0, got {s}"));
            }
        }
        if self.r_min == 0 || self.r_min > self.r_max || self.r_max >= self.n {
            bad("r_max", format!("need 1 <= r_min <= r_max < n, got [{}, {}] with n = {}", self.r_min, self.r_max, self.n));
        }
        if self.block_max == 0 || self.block_max > self.n {
            bad("block_max", format!("need 1 <= block_max <= n, got {}", self.block_max));
        }
        if self.sub_lens.iter().any(|&l| l == 0) {
            bad("sub_lens", "sub-block lengths must be >= 1".into());
        }
        if !(self.theta > 0.0) || !(self.refine_to > 0.0) {
            bad("theta", "theta and refine_to must be > 0".into());
        }
        if !(self.h_alpha > 0.0 && self.h_alpha <= 1e-3) || !(self.h_time > 0.0 && self.h_time <= 1e-3) {
            bad("h_alpha", "difference steps must lie in (0, 1e-3]".into());
        }
        if !(self.fine_step > 0.0) || !(self.half_width > 0.0) {
            bad("fine_step", "fine_step and half_width must be > 0".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0)) {
            bad("epsilons", "need at least one positive tolerance".into());
        }
        if self.window == 0 || self.n_min < 2 || self.n_cap < self.n_min + self.window {
            bad("n_cap", format!("need window >= 1, n_min >= 2, n_cap >= n_min + window; got {}, {}, {}", self.window, self.n_min, self.n_cap));
        }
        if self.sizes.0 < 2 || self.sizes.0 > self.sizes.1 {
            bad("sizes", format!("need 2 <= first <= last, got {:?}", self.sizes));
        }
        if self.cases == 0 {
            bad("cases", "need at least one case".into());
        }
        if self.jobs == Some(0) {
            bad("jobs", "need at least one thread".into());
        }
        errs
    }
}
