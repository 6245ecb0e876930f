use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ChannelSource, ExperimentConfig, ExperimentKind, Method};
use super::record::{fit_rows, render_csv, sort_records, wilson_interval, RunRecord};
use super::ExperimentError;
use crate::beamforming::{
    cpp_agreement, random_beamforming, sequential_cpp_oracle, sequential_csm, virtual_single_irs,
    zero_phase_baseline, BeamformingResult,
};
use crate::channel::{expand_links_to_tensor, CascadedChannel, CascadedChannelTensor, RadioParams};
use crate::conditions::{
    build_example, check_c_conditions, check_cprime, check_d_conditions, lemma1_verify, make_d_instance,
    make_single_instance, ExampleVariant, LowerOrderScale, RANK_ONE_TOL,
};
use crate::phase::PhaseGrid;
use crate::rng::{stream, sub_stream, StreamTag};
use crate::scenario::{chain_edges, Placement, PropagationSpec, Scenario, DEFAULT_SPACING, DEFAULT_WAVELENGTH};

/// Relative tolerance on the per-doubling growth of the example fixtures.
const GROWTH_TOL: f64 = 0.2;

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    /// Lines written after the rows as `# ...` comments.
    pub summary: Vec<String>,
    /// Failed assertions (examples and lemma checks only).
    pub failures: Vec<String>,
    /// Per-trial JSON details, filled when `json` is set.
    pub details: Vec<Value>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        render_csv(&self.records, &self.summary)
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs the configured experiment on the configured number of threads.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let go = || match cfg.kind {
        ExperimentKind::Scaling => run_scaling(cfg),
        ExperimentKind::Compare => run_compare(cfg),
        ExperimentKind::Conditions => run_conditions_probability(cfg),
        ExperimentKind::Examples => run_examples(cfg),
        ExperimentKind::LemmaCheck => run_lemma_check(cfg),
    };
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| ExperimentError::Io(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// What one trial contributes.
#[derive(Default)]
struct TrialOut {
    records: Vec<RunRecord>,
    details: Vec<Value>,
    failures: Vec<String>,
}

fn par_trials<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<TrialOut>, ExperimentError>
where
    F: Fn(u64) -> Result<TrialOut, ExperimentError> + Sync,
{
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            f(trial).map_err(|e| ExperimentError::Trial {
                trial,
                source: Box::new(e),
            })
        })
        .collect()
}

fn merge(cfg: &ExperimentConfig, parts: Vec<TrialOut>) -> ExperimentOutput {
    let mut out = ExperimentOutput::default();
    for p in parts {
        out.records.extend(p.records);
        out.failures.extend(p.failures);
        if cfg.json {
            out.details.extend(p.details);
        }
    }
    sort_records(&mut out.records);
    out
}

fn record(cfg: &ExperimentConfig, trial: u64, method: &str, n: usize, t: usize, kind: &str, value: f64) -> RunRecord {
    RunRecord {
        experiment: cfg.kind.name().to_string(),
        seed: cfg.seed,
        trial,
        method: method.to_string(),
        num_irs: cfg.num_irs,
        n,
        k: cfg.levels_label(),
        t,
        metric_kind: kind.to_string(),
        metric_value: value,
        wall_s: None,
    }
}

/// A channel realisation for one (trial, N).
enum Realised {
    Tensor(CascadedChannelTensor),
    Graph(crate::channel::LinkChannelGraph),
}

impl Realised {
    fn channel(&self) -> &dyn CascadedChannel {
        match self {
            Realised::Tensor(t) => t,
            Realised::Graph(g) => g,
        }
    }
}

fn realise(
    cfg: &ExperimentConfig,
    grids: &[PhaseGrid],
    trial: u64,
    n_index: usize,
    n: usize,
) -> Result<(Realised, RadioParams), ExperimentError> {
    match &cfg.source {
        ChannelSource::Synthetic => {
            let mut rng = sub_stream(cfg.seed, trial, StreamTag::Instance, n_index as u64);
            let t = if cfg.num_irs == 1 {
                make_single_instance(n, &mut rng)?
            } else {
                make_d_instance(cfg.num_irs, n, grids, LowerOrderScale::Auto(cfg.lower_fraction), &mut rng)?.tensor
            };
            Ok((Realised::Tensor(t), RadioParams::unit()))
        }
        ChannelSource::Scenario { scenario, .. } => {
            let mut rng = sub_stream(cfg.seed, trial, StreamTag::Scenario, n_index as u64);
            let (_, _, graph) = scenario.realize(n, &mut rng)?;
            Ok((Realised::Graph(graph), scenario.radio))
        }
    }
}

/// Runs one method; returns the result and the `T` column value.
#[allow(clippy::too_many_arguments)]
fn run_method(
    cfg: &ExperimentConfig,
    method: Method,
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    params: &RadioParams,
    samples: usize,
    trial: u64,
    n_index: usize,
) -> Result<(BeamformingResult, usize), ExperimentError> {
    let l = grids.len();
    let rng = |tag| sub_stream(cfg.seed, trial, tag, n_index as u64);
    let mode = cfg.noise_mode;
    Ok(match method {
        Method::Zero => (zero_phase_baseline(channel, grids, params)?, 0),
        Method::Cpp => (sequential_cpp_oracle(channel, grids, params)?, 0),
        Method::Csm => (
            sequential_csm(channel, grids, samples, params, mode, cfg.json && cfg.trace, &mut rng(StreamTag::Sampling))?,
            samples,
        ),
        Method::Random => (
            random_beamforming(channel, grids, l * samples, params, mode, &mut rng(StreamTag::Random))?,
            l * samples,
        ),
        Method::VirtualSingle => (
            virtual_single_irs(channel, grids, l * samples, params, mode, &mut rng(StreamTag::VirtualSingle))?,
            l * samples,
        ),
    })
}

/// Shared body of the scaling and compare sweeps.
fn method_sweep(cfg: &ExperimentConfig, agreement: bool) -> Result<ExperimentOutput, ExperimentError> {
    let grids = cfg.grids();
    let parts = par_trials(cfg, |trial| {
        let mut out = TrialOut::default();
        for (ni, &n) in cfg.n_sweep.iter().enumerate() {
            let (real, params) = realise(cfg, &grids, trial, ni, n)?;
            let channel = real.channel();
            let samples = cfg.t_rule.resolve(n)?;
            for &m in &cfg.methods {
                let start = Instant::now();
                let (res, t) = run_method(cfg, m, channel, &grids, &params, samples, trial, ni)?;
                let wall = start.elapsed().as_secs_f64();
                let mut rec = record(cfg, trial, m.name(), n, t, res.boost.kind(), res.boost.value());
                rec.wall_s = cfg.timing.then_some(wall);
                out.records.push(rec);
                if agreement && m == Method::Csm {
                    let f = cpp_agreement(channel, &res.assignment)?;
                    out.records.push(record(cfg, trial, "csm-vs-cpp", n, t, "match_fraction", f));
                }
                if cfg.json {
                    out.details.push(json!({ "trial": trial, "N": n, "method": m.name(), "result": res }));
                }
            }
        }
        Ok(out)
    })?;
    Ok(merge(cfg, parts))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn values<'a>(rows: &'a [RunRecord], method: &'a str, n: usize) -> impl Iterator<Item = f64> + 'a {
    rows.iter().filter(move |r| r.method == method && r.n == n).map(|r| r.metric_value)
}

/// Boost-versus-`N` sweep with a log-log slope per method.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let mut out = method_sweep(cfg, false)?;
    out.summary.push(format!(
        "source={} L={} K={} T={} trials={}",
        cfg.source.name(),
        cfg.num_irs,
        cfg.levels_label(),
        cfg.t_rule,
        cfg.trials
    ));
    for m in &cfg.methods {
        match fit_rows(&out.records, m.name()) {
            Ok(f) => out.summary.push(format!(
                "slope method={} slope={:.4} intercept={:.4} r2={:.4} points={}",
                m, f.slope, f.intercept, f.r_squared, f.points
            )),
            Err(e) => out.summary.push(format!("slope method={m} unavailable: {e}")),
        }
    }
    Ok(out)
}

/// All methods on the same realisations of a scenario.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let mut out = method_sweep(cfg, cfg.methods.contains(&Method::Csm))?;
    for &n in &cfg.n_sweep {
        let mut line = format!("mean N={n}");
        for m in &cfg.methods {
            let v: Vec<f64> = values(&out.records, m.name(), n).collect();
            line.push_str(&format!(" {}={:.6e}", m, mean(&v)));
        }
        out.summary.push(line);
        let agree: Vec<f64> = values(&out.records, "csm-vs-cpp", n).collect();
        if !agree.is_empty() {
            out.summary.push(format!(
                "csm-vs-cpp N={n} median_match={:.4} mean_match={:.4}",
                median(agree.clone()),
                mean(&agree)
            ));
        }
    }
    Ok(out)
}

/// Scenario for the condition study: IRS `l` uniform in its diagonal
/// square, the chain tx → IRS 1 → … → IRS L → rx always LoS, every other
/// link LoS with probability `eta`, NLoS links zero.
fn condition_scenario(cfg: &ExperimentConfig, n: usize, eta: f64) -> Scenario {
    let (placement, zero_nlos, radio) = match &cfg.source {
        ChannelSource::Scenario { scenario, .. } => (scenario.placement.clone(), scenario.zero_nlos, scenario.radio),
        ChannelSource::Synthetic => (
            Placement::Random {
                num_irs: cfg.num_irs,
                spacing: DEFAULT_SPACING,
                wavelength: DEFAULT_WAVELENGTH,
            },
            true,
            RadioParams::unit(),
        ),
    };
    let forced = match &cfg.source {
        ChannelSource::Scenario { scenario, .. } => match &scenario.propagation {
            PropagationSpec::Random { forced, .. } => forced.clone(),
            PropagationSpec::Fixed(_) => chain_edges(cfg.num_irs),
        },
        ChannelSource::Synthetic => chain_edges(cfg.num_irs),
    };
    Scenario {
        placement,
        propagation: PropagationSpec::Random { eta, forced },
        num_elements: n,
        levels: cfg.levels.clone(),
        zero_nlos,
        angle_overrides: Vec::new(),
        radio,
        seed: None,
    }
}

/// Label for the condition family at one `eta`, e.g. `c123@eta=0.40`.
fn family_label(family: &str, eta: f64) -> String {
    format!("{family}@eta={eta:.2}")
}

/// Fraction of random deployments meeting each condition family, per `eta`.
///
/// Within a trial every `eta` reuses the same random stream, so placements
/// and the uniforms deciding LoS are shared across `eta` and the LoS sets
/// are nested.
pub fn run_conditions_probability(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let grids = cfg.grids();
    let parts = par_trials(cfg, |trial| {
        let mut out = TrialOut::default();
        for &n in &cfg.n_sweep {
            for &eta in &cfg.eta {
                let scenario = condition_scenario(cfg, n, eta);
                let mut rng = stream(cfg.seed, trial, StreamTag::Propagation);
                let (_, prop, graph) = scenario.realize(n, &mut rng)?;
                let tensor = expand_links_to_tensor(&graph)?;
                let mut families = Vec::new();
                if cfg.num_irs == 2 {
                    families.push(("c123", check_c_conditions(&tensor, &grids, RANK_ONE_TOL)?));
                    families.push(("cprime123", check_cprime(&tensor, true, RANK_ONE_TOL, 0.0)?));
                }
                families.push(("d123", check_d_conditions(&tensor, None, &grids, RANK_ONE_TOL)?));
                for (name, rep) in families {
                    let v = if rep.passed { 1.0 } else { 0.0 };
                    out.records.push(record(cfg, trial, &family_label(name, eta), n, 0, "satisfied", v));
                    if cfg.json {
                        out.details.push(json!({
                            "trial": trial, "N": n, "eta": eta, "family": name,
                            "los_edges": (0..prop.num_nodes())
                                .flat_map(|i| (i + 1..prop.num_nodes()).map(move |j| (i, j)))
                                .filter(|&(i, j)| prop.is_los(i, j))
                                .collect::<Vec<_>>(),
                            "report": rep,
                        }));
                    }
                }
            }
        }
        Ok(out)
    })?;
    let mut out = merge(cfg, parts);
    let families: &[&str] = if cfg.num_irs == 2 { &["c123", "cprime123", "d123"] } else { &["d123"] };
    for &n in &cfg.n_sweep {
        for &eta in &cfg.eta {
            for fam in families {
                let label = family_label(fam, eta);
                let hits = values(&out.records, &label, n).filter(|&v| v > 0.5).count();
                let (lo, hi) = wilson_interval(hits, cfg.trials);
                out.summary.push(format!(
                    "fraction family={fam} eta={eta:.2} N={n} satisfied={hits}/{} p={:.4} ci95=[{lo:.4},{hi:.4}]",
                    cfg.trials,
                    hits as f64 / cfg.trials as f64
                ));
            }
        }
    }
    Ok(out)
}

/// Expected growth of `|g|²` per doubling of `N` for a growth order.
fn doubling_factor(order: u32) -> f64 {
    2f64.powi(order as i32)
}

/// Runs every example fixture with the CPP oracle, checks the stated
/// decisions and the growth of the received power between consecutive `N`.
pub fn run_examples(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let mut out = ExperimentOutput::default();
    let params = RadioParams::unit();
    for &id in &cfg.examples {
        for variant in [ExampleVariant::Bad, ExampleVariant::Good] {
            let label = format!("ex{id}-{variant}");
            let mut powers: Vec<(usize, f64)> = Vec::new();
            let mut order = 0;
            for &n in &cfg.n_sweep {
                let ex = build_example(id, variant, n, 1.0)?;
                order = ex.growth_order;
                let res = sequential_cpp_oracle(&ex.tensor, &ex.grids, &params)?;
                let ok = res.assignment.indices() == &ex.expected[..];
                let power = res.gain.norm_sqr() * params.transmit_power();
                let k = ex.grids.iter().map(|g| g.levels().to_string()).collect::<Vec<_>>();
                let k = if k[0] == k[1] { k[0].clone() } else { k.join("/") };
                let mut r = record(cfg, 0, &label, n, 0, res.boost.kind(), res.boost.value());
                r.num_irs = 2;
                r.k = k.clone();
                out.records.push(r);
                let mut r = record(cfg, 0, &format!("{label}/decisions"), n, 0, "satisfied", if ok { 1.0 } else { 0.0 });
                r.num_irs = 2;
                r.k = k;
                out.records.push(r);
                if !ok {
                    out.failures.push(format!("{label} N={n}: decisions differ from the stated ones"));
                }
                powers.push((n, power));
                if cfg.json {
                    out.details.push(json!({ "example": id, "variant": variant, "N": n, "result": res }));
                }
            }
            let want = doubling_factor(order);
            let mut line = format!("{label} growth_order={order} per_doubling_expected={want}");
            for w in powers.windows(2) {
                let ((n1, p1), (n2, p2)) = (w[0], w[1]);
                let per_doubling = (p2 / p1).powf(2f64.ln() / (n2 as f64 / n1 as f64).ln());
                let ok = per_doubling.is_finite() && (per_doubling / want - 1.0).abs() <= GROWTH_TOL;
                line.push_str(&format!(" N={n1}->{n2}:{per_doubling:.3}{}", if ok { "" } else { "(FAIL)" }));
                if !ok {
                    out.failures.push(format!(
                        "{label} N={n1}->{n2}: growth per doubling {per_doubling:.3}, expected {want} ± {:.0}%",
                        GROWTH_TOL * 100.0
                    ));
                }
            }
            out.summary.push(line);
        }
    }
    sort_records(&mut out.records);
    out.summary.push(format!(
        "examples {}",
        if out.failures.is_empty() { "PASS" } else { "FAIL" }
    ));
    Ok(out)
}

/// Checks the bound `|θ̂* − θ'| ≤ γ + π/K` on random D-instances, with the
/// CPP oracle standing in for the `T → ∞` blind decisions.
pub fn run_lemma_check(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let grids = cfg.grids();
    let params = RadioParams::unit();
    let parts = par_trials(cfg, |trial| {
        let mut out = TrialOut::default();
        for (ni, &n) in cfg.n_sweep.iter().enumerate() {
            let mut rng = sub_stream(cfg.seed, trial, StreamTag::Instance, ni as u64);
            let inst = make_d_instance(cfg.num_irs, n, &grids, LowerOrderScale::Auto(cfg.lower_fraction), &mut rng)?;
            let gamma = inst.report.gamma_min.and_then(|g| g.radians()).ok_or_else(|| {
                ExperimentError::Config("generated instance has no feasible gamma".into())
            })?;
            let res = sequential_cpp_oracle(&inst.tensor, &grids, &params)?;
            let rep = lemma1_verify(&inst.tensor, &inst.factors, &res.assignment, gamma)?;
            let worst_ratio = rep
                .per_irs
                .iter()
                .filter(|d| d.guaranteed)
                .map(|d| d.max_deviation / d.bound)
                .fold(0.0f64, f64::max);
            out.records.push(record(cfg, trial, "lemma", n, 0, "deviation_rad", rep.max_deviation));
            out.records.push(record(cfg, trial, "lemma/bound_ratio", n, 0, "deviation_ratio", worst_ratio));
            out.records.push(record(cfg, trial, "lemma/holds", n, 0, "satisfied", if rep.holds { 1.0 } else { 0.0 }));
            if !rep.holds {
                out.failures.push(format!("trial {trial} N={n}: deviation exceeds gamma + pi/K"));
            }
            if cfg.json {
                out.details.push(json!({ "trial": trial, "N": n, "scale": inst.scale, "report": rep }));
            }
        }
        Ok(out)
    })?;
    let mut out = merge(cfg, parts);
    for &n in &cfg.n_sweep {
        let held = values(&out.records, "lemma/holds", n).filter(|&v| v > 0.5).count();
        let worst = values(&out.records, "lemma/bound_ratio", n).fold(0.0f64, f64::max);
        out.summary.push(format!(
            "lemma N={n} L={} held={held}/{} worst_deviation_over_bound={worst:.4}",
            cfg.num_irs, cfg.trials
        ));
    }
    Ok(out)
}
