use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rank_one::RankOneFactors;
use super::ConditionError;
use crate::channel::CascadedChannel;
use crate::phase::{arg, wrap_angle, PhaseAssignment};

/// Approximate continuous solution `θ̂*` for element `element` (1-based) of
/// IRS `irs` (0-based).
///
/// It is the angle of the aggregate of channels that bypass IRS `irs` (earlier
/// IRSs at their decided phases, later ones at zero), minus `∠u^{(irs)}_n`,
/// minus the angle of the full-path aggregate through element `n` with
/// `u^{(irs)}_n` divided out. That last aggregate factorises as
/// `Π_{i<irs}(Σ_m u^{(i)}_m e^{jθ'_m}) · Π_{i>irs}(Σ_m u^{(i)}_m)`.
///
/// The bypass aggregate may vanish; its angle is then taken as 0. A vanishing
/// full-path aggregate leaves `θ̂*` undefined and is reported as an error.
pub fn theta_hat_star(
    channel: &dyn CascadedChannel,
    factors: &RankOneFactors,
    decided: &PhaseAssignment,
    irs: usize,
    element: usize,
) -> Result<f64, ConditionError> {
    let (l, n) = (channel.num_irs(), channel.num_elements());
    if factors.num_irs() != l || factors.num_elements() != n || decided.num_irs() != l || decided.num_elements() != n {
        return Err(ConditionError::Dimension("channel, factors and phases disagree on L or N".into()));
    }
    if irs >= l || element == 0 || element > n {
        return Err(ConditionError::Dimension(format!("no element {element} on IRS {irs}")));
    }
    let phasors = decided.phasors();
    let one = Complex64::new(1.0, 0.0);
    let weights: Vec<Vec<Complex64>> = (0..l)
        .map(|i| if i < irs { phasors[i].clone() } else { vec![one; n] })
        .collect();
    let bypass = channel.stage_aggregates(&weights, irs)?.base;
    let mut rest = one;
    for i in 0..l {
        if i == irs {
            continue;
        }
        let s: Complex64 = if i < irs {
            factors.u[i].iter().zip(&phasors[i]).map(|(u, x)| u * x).sum()
        } else {
            factors.u[i].iter().sum()
        };
        rest *= s;
    }
    if rest == Complex64::new(0.0, 0.0) {
        return Err(ConditionError::ZeroAggregate { irs, element });
    }
    Ok(wrap_angle(arg(bypass) - arg(factors.u[irs][element - 1]) - arg(rest)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsDeviation {
    pub irs: usize,
    /// `max_n |θ̂*_n − θ'_n|`, wrapped.
    pub max_deviation: f64,
    /// `γ + π/K_l`.
    pub bound: f64,
    pub within_bound: bool,
    /// Whether the conditions guarantee the bound for this IRS (true for
    /// every IRS but the last).
    pub guaranteed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub gamma: f64,
    pub per_irs: Vec<IrsDeviation>,
    pub max_deviation: f64,
    /// Every guaranteed IRS stays within its bound.
    pub holds: bool,
}

/// Compares the decisions in `result` with `θ̂*`, IRS by IRS.
pub fn lemma1_verify(
    channel: &dyn CascadedChannel,
    factors: &RankOneFactors,
    decided: &PhaseAssignment,
    gamma: f64,
) -> Result<Lemma1Report, ConditionError> {
    let (l, n) = (channel.num_irs(), channel.num_elements());
    let mut per_irs = Vec::with_capacity(l);
    for irs in 0..l {
        let mut worst = 0.0f64;
        for e in 1..=n {
            let hat = theta_hat_star(channel, factors, decided, irs, e)?;
            worst = worst.max(wrap_angle(hat - decided.phase(irs, e - 1)).abs());
        }
        let bound = gamma + PI / decided.grids()[irs].levels() as f64;
        per_irs.push(IrsDeviation {
            irs,
            max_deviation: worst,
            bound,
            within_bound: worst <= bound + 1e-9,
            guaranteed: irs + 1 < l,
        });
    }
    Ok(Lemma1Report {
        gamma,
        max_deviation: per_irs.iter().map(|d| d.max_deviation).fold(0.0, f64::max),
        holds: per_irs.iter().all(|d| !d.guaranteed || d.within_bound),
        per_irs,
    })
}
