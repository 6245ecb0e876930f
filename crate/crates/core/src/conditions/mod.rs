//! Checkers for the conditions under which sequential blind beamforming
//! reaches an `N^{2L}` boost, plus the worst-case examples and synthetic
//! instances used to exercise them.
//!
//! Conventions: IRS indices are zero-based; element indices inside channel
//! tuples are 1-based with 0 meaning "path skips this IRS".

mod checks;
mod instances;
mod lemma;
mod rank_one;
mod sets;

pub use checks::{
    a_set_abs_sums, c3_upper_bound, check_c3, check_c_conditions, check_cprime, check_d2, check_d_conditions,
    d3_upper_bound, gamma_min_double, ConditionFamily, ConditionReport, GammaMin, SubCondition, GAMMA_GRID_POINTS,
};
pub use instances::{
    build_example, make_d_instance, make_single_instance, DInstance, ExampleFixture, ExampleVariant, LowerOrderScale,
};
pub use lemma::{lemma1_verify, theta_hat_star, IrsDeviation, Lemma1Report};
pub use rank_one::{check_rank_one, factorize_full_paths, RankOneFactors, RankOneFailure, RANK_ONE_TOL};
pub use sets::{IndexSetKind, IndexSetSpec};

use thiserror::Error;

use crate::channel::ChannelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("expected {expected} IRSs, got {got}")]
    WrongIrsCount { expected: &'static str, got: usize },
    #[error("{grids} phase grids for {irs} IRSs")]
    GridCount { grids: usize, irs: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("full-path aggregate through element {element} of IRS {irs} is zero; the approximate phase is undefined")]
    ZeroAggregate { irs: usize, element: usize },
    #[error("phase grids violate D2 (need K_L >= 3 and sum of 1/K_l over l < L below 1/2)")]
    GridsViolateD2,
    #[error("lower-order scale {requested} is infeasible; largest feasible is {largest}")]
    InfeasibleScale { requested: f64, largest: f64 },
    #[error("invalid example: {0}")]
    InvalidExample(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}
