use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rank_one::{check_rank_one, factorize_full_paths, RankOneFactors};
use super::ConditionError;
use crate::channel::{CascadedChannel, CascadedChannelTensor, TupleIter};
use crate::phase::PhaseGrid;

/// Number of γ grid points searched for D3.
pub const GAMMA_GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionFamily {
    C,
    CPrime,
    D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCondition {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Smallest admissible condition angle, or a marker that none exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMin {
    Radians(f64),
    Infeasible,
}

impl GammaMin {
    pub fn radians(&self) -> Option<f64> {
        match *self {
            GammaMin::Radians(g) => Some(g),
            GammaMin::Infeasible => None,
        }
    }
}

impl Serialize for GammaMin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GammaMin::Radians(g) => s.serialize_f64(*g),
            GammaMin::Infeasible => s.serialize_str("infeasible"),
        }
    }
}

impl<'de> Deserialize<'de> for GammaMin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(g) => Ok(GammaMin::Radians(g)),
            Raw::Str(s) if s == "infeasible" => Ok(GammaMin::Infeasible),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected gamma '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub family: ConditionFamily,
    pub conditions: Vec<SubCondition>,
    pub gamma_min: Option<GammaMin>,
    pub gamma_upper_bound: Option<f64>,
    pub delta: Vec<f64>,
    /// Slack of every γ inequality at `gamma_min` (or at the best γ tried
    /// when infeasible); negative entries are violations.
    pub margins: Vec<f64>,
    pub passed: bool,
    #[serde(skip)]
    pub factors: Option<RankOneFactors>,
}

impl ConditionReport {
    fn new(family: ConditionFamily) -> Self {
        Self {
            family,
            conditions: Vec::new(),
            gamma_min: None,
            gamma_upper_bound: None,
            delta: Vec::new(),
            margins: Vec::new(),
            passed: false,
            factors: None,
        }
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.conditions.push(SubCondition {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
        self.passed = self.conditions.iter().all(|c| c.passed);
    }

    pub fn condition(&self, name: &str) -> Option<&SubCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Plain-text table, one sub-condition per line.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for c in &self.conditions {
            s.push_str(&format!("{:<4} {:<5} {}\n", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail));
        }
        match self.gamma_min {
            Some(GammaMin::Radians(g)) => s.push_str(&format!("gamma_min = {g:.6} rad\n")),
            Some(GammaMin::Infeasible) => s.push_str("gamma_min = infeasible\n"),
            None => {}
        }
        if let Some(u) = self.gamma_upper_bound {
            s.push_str(&format!("gamma_upper_bound = {u:.6} rad\n"));
        }
        if !self.margins.is_empty() {
            let worst = self.margins.iter().copied().fold(f64::INFINITY, f64::min);
            s.push_str(&format!("worst margin = {worst:.6e}\n"));
        }
        s.push_str(&format!("overall: {}\n", if self.passed { "pass" } else { "FAIL" }));
        s
    }
}

fn require_double(tensor: &CascadedChannelTensor) -> Result<(), ConditionError> {
    if tensor.num_irs() != 2 {
        return Err(ConditionError::WrongIrsCount { expected: "2", got: tensor.num_irs() });
    }
    Ok(())
}

/// `γ_min = max_{n_1} arcsin(|h_{n_1,0}| / |Σ_{n_2} h_{n_1,n_2}|)` for a
/// double-IRS tensor; infeasible when any ratio exceeds one.
pub fn gamma_min_double(tensor: &CascadedChannelTensor) -> Result<GammaMin, ConditionError> {
    require_double(tensor)?;
    let n = tensor.num_elements();
    let mut worst = 0.0f64;
    for n1 in 1..=n {
        let one_hop = tensor.get(&[n1, 0]).norm();
        let row: Complex64 = (1..=n).map(|n2| tensor.get(&[n1, n2])).sum();
        let row = row.norm();
        if one_hop == 0.0 {
            continue;
        }
        if row == 0.0 || one_hop > row {
            return Ok(GammaMin::Infeasible);
        }
        worst = worst.max((one_hop / row).asin());
    }
    Ok(GammaMin::Radians(worst))
}

/// C3 holds when `γ_min < π/2 − π/K_1`.
pub fn check_c3(gamma_min: GammaMin, k1: PhaseGrid) -> bool {
    match gamma_min {
        GammaMin::Radians(g) => g < c3_upper_bound(k1),
        GammaMin::Infeasible => false,
    }
}

pub fn c3_upper_bound(k1: PhaseGrid) -> f64 {
    FRAC_PI_2 - PI / k1.levels() as f64
}

fn check_grids(tensor: &CascadedChannelTensor, grids: &[PhaseGrid]) -> Result<(), ConditionError> {
    if grids.len() != tensor.num_irs() {
        return Err(ConditionError::GridCount { grids: grids.len(), irs: tensor.num_irs() });
    }
    Ok(())
}

/// Conditions C1–C3 for a double-IRS tensor.
pub fn check_c_conditions(
    tensor: &CascadedChannelTensor,
    grids: &[PhaseGrid],
    tol: f64,
) -> Result<ConditionReport, ConditionError> {
    require_double(tensor)?;
    check_grids(tensor, grids)?;
    let mut r = ConditionReport::new(ConditionFamily::C);
    match check_rank_one(&tensor.two_hop_block().expect("L = 2"), tol) {
        Ok(f) => {
            r.delta = f.delta();
            r.factors = Some(f);
            r.push("C1", true, "two-hop block is rank one with nonzero factors");
        }
        Err(e) => r.push("C1", false, e.to_string()),
    }
    let (k1, k2) = (grids[0].levels(), grids[1].levels());
    r.push("C2", k1 >= 3 && k2 >= 3, format!("K1 = {k1}, K2 = {k2}"));
    let gamma = gamma_min_double(tensor)?;
    let upper = c3_upper_bound(grids[0]);
    r.gamma_min = Some(gamma);
    r.gamma_upper_bound = Some(upper);
    let c3 = check_c3(gamma, grids[0]);
    let detail = match gamma {
        GammaMin::Radians(g) => {
            r.margins = vec![upper - g];
            format!("gamma_min = {g:.6} vs bound {upper:.6}")
        }
        GammaMin::Infeasible => "some one-hop channel outweighs its two-hop row sum".into(),
    };
    r.push("C3", c3, detail);
    Ok(r)
}

/// Conditions C′1–C′3. `continuous` marks the phase shifts as continuous.
pub fn check_cprime(
    tensor: &CascadedChannelTensor,
    continuous: bool,
    tol: f64,
    zero_tol: f64,
) -> Result<ConditionReport, ConditionError> {
    require_double(tensor)?;
    let mut r = ConditionReport::new(ConditionFamily::CPrime);
    match check_rank_one(&tensor.two_hop_block().expect("L = 2"), tol) {
        Ok(f) => {
            r.delta = f.delta();
            r.factors = Some(f);
            r.push("C'1", true, "two-hop block is rank one with nonzero factors");
        }
        Err(e) => r.push("C'1", false, e.to_string()),
    }
    r.push(
        "C'2",
        continuous,
        if continuous { "continuous phase shifts" } else { "discrete phase grids" },
    );
    let n = tensor.num_elements();
    let worst = (1..=n)
        .flat_map(|k| [tensor.get(&[k, 0]).norm(), tensor.get(&[0, k]).norm()])
        .fold(tensor.get(&[0, 0]).norm(), f64::max);
    r.push(
        "C'3",
        worst <= zero_tol,
        format!("largest direct/one-hop magnitude {worst:.3e} (tolerance {zero_tol:.1e})"),
    );
    Ok(r)
}

/// Upper end of the γ range for D3, `(π/(L−1))·(1/2 − Σ_{l<L} 1/K_l)`.
pub fn d3_upper_bound(grids: &[PhaseGrid]) -> f64 {
    let l = grids.len();
    let s: f64 = grids[..l - 1].iter().map(|g| 1.0 / g.levels() as f64).sum();
    PI / (l - 1) as f64 * (0.5 - s)
}

/// D2: `K_L ≥ 3` and `Σ_{l<L} 1/K_l < 1/2`.
pub fn check_d2(grids: &[PhaseGrid]) -> bool {
    let l = grids.len();
    let s: f64 = grids[..l - 1].iter().map(|g| 1.0 / g.levels() as f64).sum();
    grids[l - 1].levels() >= 3 && s < 0.5
}

/// `Σ_{A^{(l)}_m} |h|` for every `l < L` and `m ∈ [1:N]`, laid out `[l][m−1]`.
pub fn a_set_abs_sums(tensor: &CascadedChannelTensor) -> Vec<Vec<f64>> {
    let (l, n) = (tensor.num_irs(), tensor.num_elements());
    let mut sums = vec![vec![0.0; n]; l.saturating_sub(1)];
    let mut it = TupleIter::new(l, n);
    while let Some(t) = it.next_tuple() {
        let zeros = t.iter().filter(|&&x| x == 0).count();
        if zeros == 0 {
            continue;
        }
        let h = tensor.get(t).norm();
        for (i, &m) in t.iter().enumerate().take(l - 1) {
            // A^{(i)}_m needs n_i = m > 0 and some other coordinate zero
            if m > 0 {
                sums[i][m - 1] += h;
            }
        }
    }
    sums
}

/// Evaluates the D3 inequalities over the γ grid.
pub(crate) struct D3Search {
    pub gamma_min: GammaMin,
    pub margins: Vec<f64>,
    /// `max_γ min_{(l,m)} |u_m|·sinγ·den(γ) / S_A(l,m)`: the largest factor
    /// by which every lower-order channel could be scaled with D3 still
    /// holding somewhere on the grid.
    pub max_scale: f64,
}

pub(crate) fn d3_search(factors: &RankOneFactors, a_sums: &[Vec<f64>], grids: &[PhaseGrid]) -> D3Search {
    let l = grids.len();
    let upper = d3_upper_bound(grids);
    let coherent: Vec<f64> = factors.u.iter().map(|v| v.iter().sum::<Complex64>().norm()).collect();
    let magnitude: Vec<f64> = factors.u.iter().map(|v| v.iter().map(|z| z.norm()).sum()).collect();
    // suffix products of coherent sums over i > l
    let mut later = vec![1.0; l];
    for i in (0..l - 1).rev() {
        later[i] = later[i + 1] * coherent[i + 1];
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut first_feasible: Option<(f64, Vec<f64>)> = None;
    let mut max_scale = 0.0f64;
    if upper > 0.0 {
        for step in 0..GAMMA_GRID_POINTS {
            let gamma = upper * step as f64 / GAMMA_GRID_POINTS as f64;
            let (sin_g, mut earlier) = (gamma.sin(), 1.0);
            let mut slack = Vec::with_capacity((l - 1) * factors.num_elements());
            let mut scale = f64::INFINITY;
            for ll in 0..l - 1 {
                let den = later[ll] * earlier;
                for (m, &s) in a_sums[ll].iter().enumerate() {
                    let rhs = factors.u[ll][m].norm() * sin_g;
                    let lhs = if s == 0.0 {
                        0.0
                    } else if den > 0.0 {
                        s / den
                    } else {
                        f64::INFINITY
                    };
                    slack.push(rhs - lhs);
                    if s > 0.0 {
                        scale = scale.min(if den > 0.0 { rhs * den / s } else { 0.0 });
                    }
                }
                let c = (gamma + PI / grids[ll].levels() as f64).cos();
                earlier *= if c > 0.0 { magnitude[ll] * c } else { 0.0 };
            }
            max_scale = max_scale.max(scale);
            let worst = slack.iter().copied().fold(f64::INFINITY, f64::min);
            if first_feasible.is_none() && worst >= 0.0 {
                first_feasible = Some((gamma, slack.clone()));
            }
            if best.as_ref().is_none_or(|(w, _)| worst > *w) {
                best = Some((worst, slack));
            }
        }
    }
    match first_feasible {
        Some((g, slack)) => D3Search {
            gamma_min: GammaMin::Radians(g),
            margins: slack,
            max_scale,
        },
        None => D3Search {
            gamma_min: GammaMin::Infeasible,
            margins: best.map(|(_, s)| s).unwrap_or_default(),
            max_scale,
        },
    }
}

/// Conditions D1–D3 for an `L`-IRS tensor. Factors are computed when not
/// supplied.
pub fn check_d_conditions(
    tensor: &CascadedChannelTensor,
    factors: Option<&RankOneFactors>,
    grids: &[PhaseGrid],
    tol: f64,
) -> Result<ConditionReport, ConditionError> {
    if tensor.num_irs() < 2 {
        return Err(ConditionError::WrongIrsCount { expected: "at least 2", got: tensor.num_irs() });
    }
    check_grids(tensor, grids)?;
    let mut r = ConditionReport::new(ConditionFamily::D);
    let factors = match factors {
        Some(f) => {
            let scale = TupleIter::new(tensor.num_irs(), tensor.num_elements())
                .filter(|t| t.iter().all(|&x| x > 0))
                .map(|t| tensor.get(&t).norm())
                .fold(0.0f64, f64::max);
            let residual = TupleIter::new(tensor.num_irs(), tensor.num_elements())
                .filter(|t| t.iter().all(|&x| x > 0))
                .map(|t| (tensor.get(&t) - f.product(&t)).norm())
                .fold(0.0f64, f64::max);
            let zero = f.u.iter().flatten().any(|z| z.norm() == 0.0);
            if residual <= tol * scale && !zero {
                r.push("D1", true, format!("supplied factors reproduce full paths (residual {residual:.3e})"));
                Some(f.clone())
            } else {
                r.push("D1", false, format!("supplied factors do not fit (residual {residual:.3e})"));
                None
            }
        }
        None => match factorize_full_paths(tensor, tol) {
            Ok(f) => {
                r.push("D1", true, "full-path channels factorise with nonzero factors");
                Some(f)
            }
            Err(e) => {
                r.push("D1", false, e.to_string());
                None
            }
        },
    };
    let d2 = check_d2(grids);
    let ks: Vec<String> = grids.iter().map(|g| g.levels().to_string()).collect();
    r.push("D2", d2, format!("K = [{}]", ks.join(", ")));
    let upper = d3_upper_bound(grids);
    r.gamma_upper_bound = Some(upper);
    match &factors {
        Some(f) => {
            let search = d3_search(f, &a_set_abs_sums(tensor), grids);
            r.gamma_min = Some(search.gamma_min);
            r.margins = search.margins;
            r.delta = f.delta();
            let detail = match search.gamma_min {
                GammaMin::Radians(g) => format!("feasible from gamma = {g:.6} (range [0, {upper:.6}))"),
                GammaMin::Infeasible => format!("no gamma in [0, {upper:.6}) satisfies every inequality"),
            };
            r.push("D3", matches!(search.gamma_min, GammaMin::Radians(_)), detail);
        }
        None => r.push("D3", false, "needs the D1 factors"),
    }
    r.factors = factors;
    Ok(r)
}
