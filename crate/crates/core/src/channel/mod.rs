//! Cascaded multi-IRS channels and the effective end-to-end gain.
//!
//! Two representations are provided. [`CascadedChannelTensor`] stores every
//! cascaded coefficient `h_{n1,…,nL}` explicitly and is only practical for a
//! handful of IRSs. [`LinkChannelGraph`] stores the per-link channels and
//! composes cascades on the fly, which keeps evaluation at `O(L²N²)`.
//!
//! Both implement [`CascadedChannel`]. The effective channel is multilinear in
//! the per-element phasors, so everything the algorithms need can be phrased
//! through weighted evaluations: a weight of `e^{jθ}` applies a phase, a
//! weight of 0 switches an element off.

mod graph;
mod power;
mod tensor;

pub use graph::{eval_effective_chain, expand_links_to_tensor, CMatrix, LinkChannelGraph};
pub use power::{dbm_to_watts, received_power, snr_boost, watts_to_dbm, Boost, NoiseMode, RadioParams};
pub(crate) use power::boost_of;
pub use tensor::{eval_effective_dense, CascadedChannelTensor, TupleIter, DENSE_ENTRY_LIMIT};

use num_complex::Complex64;
use thiserror::Error;

use crate::phase::PhaseAssignment;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dense tensor would need {entries} entries, limit is {limit}")]
    TooLarge { entries: u128, limit: u128 },
    #[error("non-finite channel coefficient at {0}")]
    NonFinite(String),
    #[error("invalid radio parameters: {0}")]
    InvalidParams(String),
}

/// Per-stage decomposition of the effective channel around one IRS.
///
/// With all other elements held at their weights, the effective channel is
/// `base + Σ_n per_element[n] · x_n` where `x_n` is the phasor of element `n`
/// of the chosen IRS. `base` collects the channels that bypass that IRS;
/// `per_element[n]` collects every channel that passes through element `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageAggregates {
    pub base: Complex64,
    pub per_element: Vec<Complex64>,
}

impl StageAggregates {
    pub fn effective(&self, phasors: &[Complex64]) -> Complex64 {
        self.base
            + self
                .per_element
                .iter()
                .zip(phasors)
                .map(|(b, x)| b * x)
                .sum::<Complex64>()
    }
}

pub trait CascadedChannel: Send + Sync {
    fn num_irs(&self) -> usize;

    fn num_elements(&self) -> usize;

    /// The direct transmitter-to-receiver coefficient `h_{0,…,0}`.
    fn direct(&self) -> Complex64;

    /// Effective channel for arbitrary per-element complex weights.
    fn effective_weighted(&self, weights: &[Vec<Complex64>]) -> Result<Complex64, ChannelError>;

    fn stage_aggregates(
        &self,
        weights: &[Vec<Complex64>],
        irs: usize,
    ) -> Result<StageAggregates, ChannelError>;

    fn effective(&self, phases: &PhaseAssignment) -> Result<Complex64, ChannelError> {
        self.check_assignment(phases)?;
        self.effective_weighted(&phases.phasors())
    }

    fn check_assignment(&self, phases: &PhaseAssignment) -> Result<(), ChannelError> {
        if phases.num_irs() != self.num_irs() || phases.num_elements() != self.num_elements() {
            return Err(ChannelError::DimensionMismatch(format!(
                "channel has L={} N={}, phases have L={} N={}",
                self.num_irs(),
                self.num_elements(),
                phases.num_irs(),
                phases.num_elements()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_weights(
    weights: &[Vec<Complex64>],
    num_irs: usize,
    num_elements: usize,
) -> Result<(), ChannelError> {
    if weights.len() != num_irs || weights.iter().any(|w| w.len() != num_elements) {
        return Err(ChannelError::DimensionMismatch(format!(
            "expected {num_irs} weight vectors of length {num_elements}"
        )));
    }
    Ok(())
}
