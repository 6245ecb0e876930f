//! Blind (CSI-free) beamforming by conditional sample means, the perfect-CSI
//! CPP oracle, and the usual baselines.
//!
//! Every method returns a [`BeamformingResult`]. Measured powers go through a
//! [`PowerMeter`], which applies the noise model and counts how many received
//! powers were observed.

mod csm;
mod methods;

pub use csm::{
    conditional_sample_mean, cpp_decide, cpp_target, csm_decide, generate_samples, CsmAccumulator, CsmTable, SampleBatch,
};
pub use methods::{
    cpp_agreement, exact_csm_small, random_beamforming, sequential_cpp_oracle, sequential_csm, virtual_single_irs,
    zero_phase_baseline, EXACT_ENUMERATION_LIMIT,
};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{received_power, Boost, ChannelError, NoiseMode, RadioParams};
use crate::phase::{PhaseAssignment, PhaseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformingError {
    #[error("no sample hit phase index {index} of element {element} (IRS {irs:?}); raise T or resample")]
    EmptyGroup {
        irs: Option<usize>,
        element: usize,
        index: usize,
    },
    #[error("exhaustive enumeration needs {configs} configurations per stage, limit is {limit}")]
    TooLarge { configs: u128, limit: u128 },
    #[error("virtual single-IRS needs identical phase grids on every IRS")]
    HeterogeneousGrids,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

/// Turns effective channels into observed received powers and counts them.
#[derive(Debug, Clone)]
pub struct PowerMeter {
    params: RadioParams,
    mode: NoiseMode,
    evaluations: u64,
}

impl PowerMeter {
    pub fn new(params: RadioParams, mode: NoiseMode) -> Self {
        Self {
            params,
            mode,
            evaluations: 0,
        }
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, g: Complex64, rng: &mut R) -> f64 {
        self.evaluations += 1;
        received_power(g, &self.params, self.mode, rng)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformingResult {
    pub method: String,
    pub assignment: PhaseAssignment,
    /// Noiseless received power `|g|²·P` after each stage.
    pub stage_power: Vec<f64>,
    /// Final effective channel.
    pub gain: Complex64,
    pub boost: Boost,
    /// Average-reflection-to-direct ratio seen by each stage, `None` when
    /// that stage's direct aggregate is zero.
    pub rho: Vec<Option<f64>>,
    /// Average factor magnitudes, filled in when rank-one factors are known.
    pub delta: Option<Vec<f64>>,
    pub samples_per_stage: Vec<usize>,
    /// Number of received-power observations the method made.
    pub evaluations: u64,
    /// Continuous phase targets (CPP oracle only), radians in `(−π, π]`.
    pub continuous_target: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
    /// Every sample batch, when tracing was requested.
    pub trace: Option<Vec<SampleBatch>>,
}

impl BeamformingResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialises")
    }
}
