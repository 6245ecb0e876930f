//! Geometric channel generation: pathloss, ULA steering, random LoS/NLoS
//! propagation and random IRS placement.

mod config;
mod geometry;
mod links;
mod propagation;

pub use config::{Placement, PropagationSpec, Scenario};
pub use geometry::{irs_square, place_random, AngleKind, AngleTable, Geometry, DEFAULT_SPACING, DEFAULT_WAVELENGTH};
pub use links::{
    build_link_graph, complex_gaussian, los_link_channels, nlos_link_channels, pathloss, LinkBlock,
};
pub use propagation::{chain_edges, PropagationMap};

use thiserror::Error;

use crate::channel::ChannelError;
use crate::kv::KvError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("no {kind} angle for node pair ({from}, {to})")]
    MissingAngle { kind: AngleKind, from: usize, to: usize },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid propagation map: {0}")]
    InvalidPropagation(String),
    #[error(transparent)]
    Config(#[from] KvError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// The 10-node LoS adjacency matrix of the 8-IRS deployment (transmitter,
/// eight candidate sites, receiver).
pub const ADJACENCY_10_NODE: &str = include_str!("../../fixtures/adjacency_10node.txt");

/// Candidate IRS sites of the 8-IRS deployment, in node order 1..=8.
pub const EIGHT_IRS_SITES: [[f64; 2]; 8] = [
    [19.5, 77.3],
    [25.8, 15.8],
    [29.9, 11.5],
    [34.1, 60.7],
    [43.8, 15.0],
    [61.5, 84.1],
    [71.8, 35.5],
    [73.6, 76.2],
];
