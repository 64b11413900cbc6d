//! Weighted graph states generated by a variable-range spin-s Ising chain.
//!
//! The crate builds reduced density matrices of the evolved chain in closed
//! form, evaluates block entropy, two-site mutual information and the
//! generalized geometric measure, and locates the fall-off rates at which
//! these measures change character.

pub mod chain;
pub mod error;
pub mod exact;
pub mod measures;
pub mod rdm;
pub mod spectrum;
pub mod transition;

pub use chain::{Boundary, ChainSpec, CouplingRange, PhaseModel};
pub use error::{Result, WgsError};
pub use exact::{build_state, exact_ggm, measure_reduce, partial_trace, schmidt_spectrum, Bipartition, ExactState};
pub use rdm::{build_rdm, rdm_entry, SubsystemRdm, SubsystemSpec};
pub use spectrum::{entropy, spectrum, Spectrum};
pub use measures::{
    block_entropy, ggm, ggm_all_cuts, ggm_edge, mutual_information, mutual_information_at, time_average, u_l_bound,
    AveragedValue, MeasureId, TimeSeries,
};
pub use transition::{AlphaGrid, DetectionMethod, TransitionReport};
