use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CascadedChannel, ChannelError};
use crate::phase::PhaseAssignment;

/// Transmit and noise power, both in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    transmit_power: f64,
    noise_power: f64,
}

impl RadioParams {
    pub fn new(transmit_power: f64, noise_power: f64) -> Result<Self, ChannelError> {
        if !(transmit_power.is_finite() && transmit_power > 0.0) {
            return Err(ChannelError::InvalidParams(format!(
                "transmit power must be positive, got {transmit_power}"
            )));
        }
        if !(noise_power.is_finite() && noise_power >= 0.0) {
            return Err(ChannelError::InvalidParams(format!(
                "noise power must be nonnegative, got {noise_power}"
            )));
        }
        Ok(Self {
            transmit_power,
            noise_power,
        })
    }

    pub fn from_dbm(transmit_dbm: f64, noise_dbm: f64) -> Result<Self, ChannelError> {
        Self::new(dbm_to_watts(transmit_dbm), dbm_to_watts(noise_dbm))
    }

    /// Unit transmit power, no noise.
    pub fn unit() -> Self {
        Self {
            transmit_power: 1.0,
            noise_power: 0.0,
        }
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Noiseless,
    OneDraw,
    Averaged(usize),
}

impl std::str::FromStr for NoiseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "noiseless" => Ok(Self::Noiseless),
            "one_draw" | "one-draw" => Ok(Self::OneDraw),
            _ => {
                let m = s
                    .strip_prefix("averaged(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| s.strip_prefix("averaged:"))
                    .ok_or_else(|| format!("unknown noise mode '{s}'"))?;
                let m: usize = m.trim().parse().map_err(|_| format!("bad sample count in '{s}'"))?;
                if m == 0 {
                    return Err("averaged noise mode needs at least one draw".into());
                }
                Ok(Self::Averaged(m))
            }
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Noiseless => f.write_str("noiseless"),
            Self::OneDraw => f.write_str("one_draw"),
            Self::Averaged(m) => write!(f, "averaged({m})"),
        }
    }
}

/// Received power `|Y|²` for effective channel `g`.
///
/// The transmitted symbol is taken as `√P` (any unit-modulus symbol gives the
/// same statistics since the noise is circular).
pub fn received_power<R: Rng + ?Sized>(
    g: Complex64,
    params: &RadioParams,
    mode: NoiseMode,
    rng: &mut R,
) -> f64 {
    let clean = g * params.transmit_power.sqrt();
    let mut draw = || {
        let s = (params.noise_power / 2.0).sqrt();
        let z = Complex64::new(
            s * rng.sample::<f64, _>(StandardNormal),
            s * rng.sample::<f64, _>(StandardNormal),
        );
        (clean + z).norm_sqr()
    };
    match mode {
        NoiseMode::Noiseless => clean.norm_sqr(),
        NoiseMode::OneDraw => draw(),
        NoiseMode::Averaged(m) => (0..m).map(|_| draw()).sum::<f64>() / m as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Boost {
    /// `|g|² / |h_0|²`.
    Ratio(f64),
    /// `|g|²·P` in watts, used when the direct channel is exactly zero.
    AbsolutePower(f64),
}

impl Boost {
    pub fn value(&self) -> f64 {
        match *self {
            Boost::Ratio(v) | Boost::AbsolutePower(v) => v,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Boost::Ratio(_) => "boost_linear",
            Boost::AbsolutePower(_) => "power_watts",
        }
    }
}

pub fn snr_boost(
    channel: &dyn CascadedChannel,
    phases: &PhaseAssignment,
    params: &RadioParams,
) -> Result<Boost, ChannelError> {
    let g = channel.effective(phases)?;
    Ok(boost_of(g, channel.direct(), params))
}

pub(crate) fn boost_of(g: Complex64, direct: Complex64, params: &RadioParams) -> Boost {
    if direct.norm_sqr() > 0.0 {
        Boost::Ratio(g.norm_sqr() / direct.norm_sqr())
    } else {
        Boost::AbsolutePower(g.norm_sqr() * params.transmit_power)
    }
}
