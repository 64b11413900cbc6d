//! Chain configuration and the pairwise interaction phases of the Ising
//! evolution.
//!
//! Sites are numbered `1..=N`. Every pair `(i, j)` accumulates the phase
//! `g_ij * t` with `g_ij = 1 / |i - j|^alpha`. Couplings are evaluated on
//! demand from the distance, so nothing of size `N x N` is ever stored.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WgsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Boundary {
    #[default]
    Open,
}

/// Which pairs interact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CouplingRange {
    /// Every pair interacts with strength `1 / r^alpha`.
    #[default]
    Full,
    /// Only pairs with `r <= R` interact. `Truncated(1)` is the
    /// nearest-neighbour chain, where every active coupling equals one.
    Truncated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_sites: usize,
    local_dim: usize,
    alpha: f64,
    boundary: Boundary,
    range: CouplingRange,
}

impl ChainSpec {
    pub fn new(n_sites: usize, local_dim: usize, alpha: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(WgsError::domain(format!("n_sites must be >= 2, got {n_sites}")));
        }
        if local_dim < 2 {
            return Err(WgsError::domain(format!("local_dim must be >= 2, got {local_dim}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(WgsError::domain(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self {
            n_sites,
            local_dim,
            alpha,
            boundary: Boundary::Open,
            range: CouplingRange::Full,
        })
    }

    /// Nearest-neighbour chain (`Truncated(1)`); alpha is irrelevant there.
    pub fn nearest_neighbour(n_sites: usize, local_dim: usize) -> Result<Self> {
        Self::new(n_sites, local_dim, 1.0)?.with_range(CouplingRange::Truncated(1))
    }

    pub fn with_range(mut self, range: CouplingRange) -> Result<Self> {
        if range == CouplingRange::Truncated(0) {
            return Err(WgsError::domain("truncation range must be >= 1"));
        }
        self.range = range;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(WgsError::domain(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_sites(self, n_sites: usize) -> Result<Self> {
        Self::new(n_sites, self.local_dim, self.alpha)?.with_range(self.range)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn range(&self) -> CouplingRange {
        self.range
    }

    pub(crate) fn check_site(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n_sites {
            return Err(WgsError::domain(format!(
                "site {i} outside 1..={}",
                self.n_sites
            )));
        }
        Ok(())
    }

    /// Coupling strength as a function of the distance `r >= 1`.
    #[inline]
    pub fn coupling_at_distance(&self, r: usize) -> f64 {
        debug_assert!(r >= 1);
        match self.range {
            CouplingRange::Truncated(max) if r > max => 0.0,
            _ if self.alpha == 0.0 => 1.0,
            _ => (r as f64).powf(-self.alpha),
        }
    }

    /// `g_ij = 1 / |i - j|^alpha` for distinct sites in `1..=N`.
    pub fn coupling(&self, i: usize, j: usize) -> Result<f64> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(WgsError::domain(format!("coupling of site {i} with itself")));
        }
        Ok(self.coupling_at_distance(i.abs_diff(j)))
    }
}

/// A chain evolved for a dimensionless time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseModel {
    chain: ChainSpec,
    time: f64,
}

impl PhaseModel {
    pub fn new(chain: ChainSpec, time: f64) -> Result<Self> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(WgsError::domain(format!("time must be finite and >= 0, got {time}")));
        }
        Ok(Self { chain, time })
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn at_time(&self, time: f64) -> Result<Self> {
        Self::new(self.chain, time)
    }

    #[inline]
    pub(crate) fn phase_at_distance(&self, r: usize) -> f64 {
        self.chain.coupling_at_distance(r) * self.time
    }

    /// Accumulated pair phase `g_ij * t`.
    pub fn phase(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.chain.coupling(i, j)? * self.time)
    }
}
