//! Blind beamforming for systems of several intelligent reflecting surfaces.
//!
//! The crate is split into:
//!
//! * [`phase`]: discrete phase grids and per-element choices,
//! * [`channel`]: cascaded channels, effective gain and received power,
//! * [`scenario`]: geometric channel generation,
//! * [`beamforming`]: conditional-sample-mean beamforming and baselines,
//! * [`conditions`]: checkers for the conditions under which the blind
//!   method reaches the full `N^{2L}` boost,
//! * [`experiment`]: sweeps that drive everything and write CSV.

// per-IRS loops index several parallel arrays at once
#![allow(clippy::needless_range_loop)]

pub mod beamforming;
pub mod channel;
pub mod conditions;
pub mod experiment;
pub mod phase;
pub mod kv;
pub mod rng;
pub mod scenario;
