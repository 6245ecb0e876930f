use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::checks::{a_set_abs_sums, check_d2, check_d_conditions, d3_search, ConditionReport};
use super::rank_one::{RankOneFactors, RANK_ONE_TOL};
use super::ConditionError;
use crate::channel::{CascadedChannelTensor, TupleIter};
use crate::phase::PhaseGrid;
use crate::scenario::complex_gaussian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleVariant {
    Bad,
    Good,
}

impl std::str::FromStr for ExampleVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bad" => Ok(Self::Bad),
            "good" => Ok(Self::Good),
            _ => Err(format!("unknown variant '{s}'")),
        }
    }
}

impl std::fmt::Display for ExampleVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bad => "bad",
            Self::Good => "good",
        })
    }
}

/// A worst-case double-IRS construction with its expected outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleFixture {
    pub id: u8,
    pub variant: ExampleVariant,
    pub tensor: CascadedChannelTensor,
    pub grids: Vec<PhaseGrid>,
    /// Expected phase indices per IRS.
    pub expected: Vec<Vec<usize>>,
    /// Exponent of the expected growth of `|g|²` in `N` (2 or 4).
    pub growth_order: u32,
}

/// Builds example `id ∈ {1,2,3}` for odd `N` and `β > 0`.
///
/// 1. Two-hop channels `β·e^{j(n₁+n₂)π}`; the bad variant adds `2β` on the
///    diagonal, which breaks the rank-one structure. `K = 4`.
/// 2. `u⁽¹⁾_n = √β·e^{j(n+½)π}`, `u⁽²⁾_n = √β·e^{jnπ}`, one-hop channels
///    `h_{n,0} = β/3·e^{jπ/4}` (odd `n`) and `√β/3·e^{−jπ/4}` (even `n`),
///    taken verbatim including the mixed `β`/`√β`. Bad uses `K = 2`, good
///    `K = 4`.
/// 3. `h_{n,0} = 2β·j`; bad uses `u⁽ˡ⁾_n = √β·e^{jnπ}` so the one-hop
///    channels dominate, good uses `u⁽ˡ⁾_n = √β`. `K = 4`.
///
/// `h_{0,0}` and `h_{0,n₂}` are zero throughout.
pub fn build_example(id: u8, variant: ExampleVariant, n: usize, beta: f64) -> Result<ExampleFixture, ConditionError> {
    if n.is_multiple_of(2) {
        return Err(ConditionError::InvalidExample(format!("N must be odd, got {n}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ConditionError::InvalidExample(format!("beta must be positive, got {beta}")));
    }
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let odd = |k: usize| k % 2 == 1;
    let rb = beta.sqrt();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (tensor, levels, expected, growth_order) = match (id, variant) {
        (1, v) => {
            let t = CascadedChannelTensor::from_fn(2, n, |t| match (t[0], t[1]) {
                (0, _) | (_, 0) => c(0.0, 0.0),
                (a, b) => {
                    let base = beta * sign(a + b);
                    c(if v == ExampleVariant::Bad && a == b { base + 2.0 * beta } else { base }, 0.0)
                }
            })?;
            let exp = match v {
                ExampleVariant::Bad => vec![vec![0; n]; 2],
                ExampleVariant::Good => vec![(1..=n).map(|k| if odd(k) { 0 } else { 2 }).collect(); 2],
            };
            (t, 4, exp, if v == ExampleVariant::Bad { 2 } else { 4 })
        }
        (2, v) => {
            let u1 = |k: usize| Complex64::from_polar(rb, (k as f64 + 0.5) * PI);
            let u2 = |k: usize| Complex64::from_polar(rb, k as f64 * PI);
            let t = CascadedChannelTensor::from_fn(2, n, |t| match (t[0], t[1]) {
                (0, _) => c(0.0, 0.0),
                (a, 0) if odd(a) => Complex64::from_polar(beta / 3.0, FRAC_PI_4),
                (_, 0) => Complex64::from_polar(rb / 3.0, -FRAC_PI_4),
                (a, b) => u1(a) * u2(b),
            })?;
            let (k, exp) = match v {
                ExampleVariant::Bad => (2, vec![vec![0; n], (1..=n).map(|k| if odd(k) { 0 } else { 1 }).collect()]),
                ExampleVariant::Good => (
                    4,
                    vec![
                        (1..=n).map(|k| if odd(k) { 3 } else { 1 }).collect(),
                        (1..=n).map(|k| if odd(k) { 0 } else { 2 }).collect(),
                    ],
                ),
            };
            (t, k, exp, if v == ExampleVariant::Bad { 2 } else { 4 })
        }
        (3, v) => {
            let u = |k: usize| match v {
                ExampleVariant::Bad => c(rb * sign(k), 0.0),
                ExampleVariant::Good => c(rb, 0.0),
            };
            let t = CascadedChannelTensor::from_fn(2, n, |t| match (t[0], t[1]) {
                (0, _) => c(0.0, 0.0),
                (_, 0) => Complex64::from_polar(2.0 * beta, FRAC_PI_2),
                (a, b) => u(a) * u(b),
            })?;
            let exp = match v {
                ExampleVariant::Bad => vec![vec![3; n], (1..=n).map(|k| if odd(k) { 1 } else { 3 }).collect()],
                ExampleVariant::Good => vec![vec![0; n], vec![1; n]],
            };
            (t, 4, exp, if v == ExampleVariant::Bad { 2 } else { 4 })
        }
        _ => return Err(ConditionError::InvalidExample(format!("unknown example {id}"))),
    };
    let grid = PhaseGrid::new(levels).expect("K ≥ 2");
    Ok(ExampleFixture {
        id,
        variant,
        tensor,
        grids: vec![grid; 2],
        expected,
        growth_order,
    })
}

/// Strength of the lower-order (not full-path) channels of a synthetic
/// instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerOrderScale {
    /// Multiply the unit-variance draws by this factor.
    Fixed(f64),
    /// Use this fraction (in `[0, 1)`) of the largest scale for which D3
    /// still holds.
    Auto(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DInstance {
    pub tensor: CascadedChannelTensor,
    pub factors: RankOneFactors,
    pub grids: Vec<PhaseGrid>,
    pub scale: f64,
    pub max_scale: f64,
    pub report: ConditionReport,
}

/// Random instance satisfying D1–D3.
///
/// Factors are unit-modulus with uniform phases (so every `δ_l = 1`) and
/// full paths are their products. The direct channel is a unit-modulus
/// random phasor; every other lower-order channel is a unit complex Gaussian
/// draw times the chosen scale. Draw order: factors (IRS by IRS), direct
/// phase, then lower-order entries in tuple order.
pub fn make_d_instance<R: Rng + ?Sized>(
    num_irs: usize,
    num_elements: usize,
    grids: &[PhaseGrid],
    scale: LowerOrderScale,
    rng: &mut R,
) -> Result<DInstance, ConditionError> {
    if num_irs < 2 || grids.len() != num_irs || num_elements == 0 {
        return Err(ConditionError::Dimension(format!(
            "need L ≥ 2 with one grid per IRS, got L = {num_irs}, {} grids",
            grids.len()
        )));
    }
    if !check_d2(grids) {
        return Err(ConditionError::GridsViolateD2);
    }
    let u: Vec<Vec<Complex64>> = (0..num_irs)
        .map(|_| {
            (0..num_elements)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect();
    let direct = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let raw = RankOneFactors { u };
    let mut tensor = CascadedChannelTensor::zeros(num_irs, num_elements)?;
    let mut lower = Vec::new();
    let mut it = TupleIter::new(num_irs, num_elements);
    while let Some(t) = it.next_tuple() {
        if t.iter().all(|&x| x == 0) {
            tensor.set(t, direct);
        } else if t.iter().all(|&x| x > 0) {
            let h = raw.product(t);
            tensor.set(t, h);
        } else {
            let t = t.to_vec();
            lower.push((t, complex_gaussian(rng)));
        }
    }
    let mut unit = tensor.clone();
    for (t, z) in &lower {
        unit.set(t, *z);
    }
    let max_scale = d3_search(&raw, &a_set_abs_sums(&unit), grids).max_scale;
    let s = match scale {
        LowerOrderScale::Fixed(s) => {
            if s.is_nan() || s < 0.0 || s > max_scale {
                return Err(ConditionError::InfeasibleScale { requested: s, largest: max_scale });
            }
            s
        }
        LowerOrderScale::Auto(f) => {
            if !(0.0..1.0).contains(&f) {
                return Err(ConditionError::InfeasibleScale { requested: f, largest: 1.0 });
            }
            f * max_scale
        }
    };
    for (t, z) in &lower {
        tensor.set(t, z * s);
    }
    let report = check_d_conditions(&tensor, Some(&raw), grids, RANK_ONE_TOL)?;
    if !report.passed {
        return Err(ConditionError::InfeasibleScale { requested: s, largest: max_scale });
    }
    Ok(DInstance {
        tensor,
        factors: raw,
        grids: grids.to_vec(),
        scale: s,
        max_scale,
        report,
    })
}

/// Random single-IRS channel: unit-modulus direct channel and unit complex
/// Gaussian reflected channels.
pub fn make_single_instance<R: Rng + ?Sized>(num_elements: usize, rng: &mut R) -> Result<CascadedChannelTensor, ConditionError> {
    let direct = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let mut entries = vec![direct];
    entries.extend((0..num_elements).map(|_| complex_gaussian(rng)));
    Ok(CascadedChannelTensor::from_entries(1, num_elements, entries)?)
}
