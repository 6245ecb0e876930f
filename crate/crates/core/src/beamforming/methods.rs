use num_complex::Complex64;
use rand::Rng;

use super::csm::{
    conditional_sample_mean, cpp_decide, cpp_target, csm_decide, generate_samples, CsmAccumulator, CsmTable, SampleBatch,
};
use super::{BeamformingError, BeamformingResult, PowerMeter};
use crate::channel::{boost_of, CascadedChannel, NoiseMode, RadioParams, StageAggregates};
use crate::phase::{PhaseAssignment, PhaseGrid};

/// Largest `K^N` that [`exact_csm_small`] enumerates per stage.
pub const EXACT_ENUMERATION_LIMIT: u128 = 1_000_000;

fn check_grids(channel: &dyn CascadedChannel, grids: &[PhaseGrid]) -> Result<(), BeamformingError> {
    if grids.len() != channel.num_irs() {
        return Err(BeamformingError::InvalidInput(format!(
            "{} phase grids for {} IRSs",
            grids.len(),
            channel.num_irs()
        )));
    }
    Ok(())
}

fn rho_of(agg: &StageAggregates) -> Option<f64> {
    let d = agg.base.norm_sqr();
    (d > 0.0).then(|| agg.per_element.iter().map(|b| b.norm_sqr()).sum::<f64>() / agg.per_element.len() as f64 / d)
}

fn stage_phasors(grid: PhaseGrid, row: &[usize]) -> Vec<Complex64> {
    row.iter().map(|&k| grid.phasor(k)).collect()
}

fn finish(
    method: &str,
    channel: &dyn CascadedChannel,
    assignment: PhaseAssignment,
    params: &RadioParams,
) -> Result<BeamformingResult, BeamformingError> {
    let gain = channel.effective(&assignment)?;
    Ok(BeamformingResult {
        method: method.to_string(),
        assignment,
        stage_power: Vec::new(),
        gain,
        boost: boost_of(gain, channel.direct(), params),
        rho: Vec::new(),
        delta: None,
        samples_per_stage: Vec::new(),
        evaluations: 0,
        continuous_target: None,
        seed: None,
        trace: None,
    })
}

/// Sequential conditional-sample-mean beamforming.
///
/// All phases start at zero. IRS `l` is then optimised on its own: `T`
/// uniform configurations are drawn for it while every other IRS stays at its
/// current phases, their powers are measured, and each element takes the
/// phase with the largest conditional mean.
#[allow(clippy::too_many_arguments)]
pub fn sequential_csm<R: Rng + ?Sized>(
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    samples_per_irs: usize,
    params: &RadioParams,
    mode: NoiseMode,
    trace: bool,
    rng: &mut R,
) -> Result<BeamformingResult, BeamformingError> {
    check_grids(channel, grids)?;
    if samples_per_irs == 0 {
        return Err(BeamformingError::InvalidInput("T must be at least 1".into()));
    }
    let n = channel.num_elements();
    let mut meter = PowerMeter::new(*params, mode);
    let mut assignment = PhaseAssignment::zeros(grids.to_vec(), n);
    let mut stage_power = Vec::with_capacity(grids.len());
    let mut rho = Vec::with_capacity(grids.len());
    let mut batches = Vec::new();
    let mut row = vec![0usize; n];
    for (l, &grid) in grids.iter().enumerate() {
        let agg = channel.stage_aggregates(&assignment.phasors(), l)?;
        rho.push(rho_of(&agg));
        let phasors: Vec<Complex64> = (0..grid.levels()).map(|k| grid.phasor(k)).collect();
        let mut acc = CsmAccumulator::new(n, grid);
        let mut batch = SampleBatch {
            irs: Some(l),
            levels: grid.levels(),
            indices: Vec::new(),
            powers: Vec::new(),
        };
        for _ in 0..samples_per_irs {
            row.iter_mut().for_each(|k| *k = rng.random_range(0..grid.levels()));
            let g = agg.base + agg.per_element.iter().zip(&row).map(|(b, &k)| b * phasors[k]).sum::<Complex64>();
            let p = meter.measure(g, rng);
            acc.add(&row, p)?;
            if trace {
                batch.indices.push(row.clone());
                batch.powers.push(p);
            }
        }
        let decision = csm_decide(&acc.finish(Some(l))?);
        stage_power.push(agg.effective(&stage_phasors(grid, &decision)).norm_sqr() * params.transmit_power());
        assignment.set_irs(l, decision)?;
        if trace {
            batches.push(batch);
        }
    }
    let mut out = finish("csm", channel, assignment, params)?;
    out.stage_power = stage_power;
    out.rho = rho;
    out.samples_per_stage = vec![samples_per_irs; grids.len()];
    out.evaluations = meter.evaluations();
    out.trace = trace.then_some(batches);
    Ok(out)
}

/// The `T → ∞`, noiseless limit of [`sequential_csm`]: each stage's
/// conditional means are computed over all `K^N` configurations of that IRS.
pub fn exact_csm_small(
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    params: &RadioParams,
) -> Result<BeamformingResult, BeamformingError> {
    check_grids(channel, grids)?;
    let n = channel.num_elements();
    for g in grids {
        let configs = (g.levels() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if configs > EXACT_ENUMERATION_LIMIT {
            return Err(BeamformingError::TooLarge {
                configs,
                limit: EXACT_ENUMERATION_LIMIT,
            });
        }
    }
    let mut assignment = PhaseAssignment::zeros(grids.to_vec(), n);
    let mut stage_power = Vec::new();
    let mut rho = Vec::new();
    let mut samples = Vec::new();
    for (l, &grid) in grids.iter().enumerate() {
        let agg = channel.stage_aggregates(&assignment.phasors(), l)?;
        rho.push(rho_of(&agg));
        let k = grid.levels();
        let mut row = vec![0usize; n];
        let mut sums = vec![0.0; n * k];
        let mut total = 0usize;
        loop {
            let p = agg.effective(&stage_phasors(grid, &row)).norm_sqr() * params.transmit_power();
            for (e, &idx) in row.iter().enumerate() {
                sums[e * k + idx] += p;
            }
            total += 1;
            if !advance(&mut row, k) {
                break;
            }
        }
        let per_group = total / k;
        let table = table_from_sums(n, k, &sums, per_group);
        let decision = csm_decide(&table);
        stage_power.push(agg.effective(&stage_phasors(grid, &decision)).norm_sqr() * params.transmit_power());
        assignment.set_irs(l, decision)?;
        samples.push(total);
    }
    let mut out = finish("csm-exact", channel, assignment, params)?;
    out.stage_power = stage_power;
    out.rho = rho;
    out.samples_per_stage = samples;
    Ok(out)
}

/// Steps `row` to the next configuration of `grid^N`; false after the last.
fn advance(row: &mut [usize], k: usize) -> bool {
    for slot in row.iter_mut().rev() {
        *slot += 1;
        if *slot < k {
            return true;
        }
        *slot = 0;
    }
    false
}

fn table_from_sums(n: usize, k: usize, sums: &[f64], per_group: usize) -> CsmTable {
    // every (element, index) group holds exactly K^{N−1} configurations
    let batch_means: Vec<f64> = sums.iter().map(|s| s / per_group as f64).collect();
    CsmTable::from_parts(n, k, batch_means, vec![per_group; n * k])
}

/// Sequential closest-point projection with perfect channel knowledge.
///
/// Stage `l` rotates each element's aggregate reflected channel towards the
/// aggregate of all channels that bypass IRS `l`, with earlier IRSs at their
/// decided phases and later IRSs at zero, then rounds to the grid.
pub fn sequential_cpp_oracle(
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    params: &RadioParams,
) -> Result<BeamformingResult, BeamformingError> {
    check_grids(channel, grids)?;
    let n = channel.num_elements();
    let mut assignment = PhaseAssignment::zeros(grids.to_vec(), n);
    let mut targets = Vec::with_capacity(grids.len());
    let mut stage_power = Vec::new();
    let mut rho = Vec::new();
    for (l, &grid) in grids.iter().enumerate() {
        let agg = channel.stage_aggregates(&assignment.phasors(), l)?;
        rho.push(rho_of(&agg));
        let zero = Complex64::new(0.0, 0.0);
        let target: Vec<f64> = agg
            .per_element
            .iter()
            .map(|&b| if b == zero { 0.0 } else { cpp_target(agg.base, b) })
            .collect();
        let decision: Vec<usize> = agg.per_element.iter().map(|&b| cpp_decide(agg.base, b, grid)).collect();
        stage_power.push(agg.effective(&stage_phasors(grid, &decision)).norm_sqr() * params.transmit_power());
        assignment.set_irs(l, decision)?;
        targets.push(target);
    }
    let mut out = finish("cpp", channel, assignment, params)?;
    out.stage_power = stage_power;
    out.rho = rho;
    out.samples_per_stage = vec![0; grids.len()];
    out.continuous_target = Some(targets);
    Ok(out)
}

/// Fraction of elements on which `assignment` agrees with the CPP decision
/// taken under the same conditions: stage `l` is judged against the CPP
/// choice given the assignment's own phases on IRSs `< l` and zeros after.
pub fn cpp_agreement(channel: &dyn CascadedChannel, assignment: &PhaseAssignment) -> Result<f64, BeamformingError> {
    let grids = assignment.grids().to_vec();
    check_grids(channel, &grids)?;
    let n = channel.num_elements();
    let mut state = PhaseAssignment::zeros(grids.clone(), n);
    let mut hits = 0usize;
    for (l, &grid) in grids.iter().enumerate() {
        let agg = channel.stage_aggregates(&state.phasors(), l)?;
        hits += agg
            .per_element
            .iter()
            .zip(assignment.irs(l))
            .filter(|(&b, &k)| cpp_decide(agg.base, b, grid) == k)
            .count();
        state.set_irs(l, assignment.irs(l).to_vec())?;
    }
    Ok(hits as f64 / (grids.len() * n) as f64)
}

/// Best of `budget` uniformly random joint configurations of all IRSs.
pub fn random_beamforming<R: Rng + ?Sized>(
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    budget: usize,
    params: &RadioParams,
    mode: NoiseMode,
    rng: &mut R,
) -> Result<BeamformingResult, BeamformingError> {
    check_grids(channel, grids)?;
    if budget == 0 {
        return Err(BeamformingError::InvalidInput("budget must be at least 1".into()));
    }
    let n = channel.num_elements();
    let mut meter = PowerMeter::new(*params, mode);
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for _ in 0..budget {
        let indices: Vec<Vec<usize>> = grids
            .iter()
            .map(|g| (0..n).map(|_| rng.random_range(0..g.levels())).collect())
            .collect();
        let weights: Vec<Vec<Complex64>> = grids.iter().zip(&indices).map(|(g, r)| stage_phasors(*g, r)).collect();
        let p = meter.measure(channel.effective_weighted(&weights)?, rng);
        if best.as_ref().is_none_or(|(b, _)| p > *b) {
            best = Some((p, indices));
        }
    }
    let (_, indices) = best.expect("budget is positive");
    let assignment = PhaseAssignment::new(grids.to_vec(), indices)?;
    let mut out = finish("random", channel, assignment, params)?;
    out.stage_power = vec![out.gain.norm_sqr() * params.transmit_power()];
    out.samples_per_stage = vec![budget];
    out.evaluations = meter.evaluations();
    Ok(out)
}

/// Every phase at zero.
pub fn zero_phase_baseline(
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    params: &RadioParams,
) -> Result<BeamformingResult, BeamformingError> {
    check_grids(channel, grids)?;
    let assignment = PhaseAssignment::zeros(grids.to_vec(), channel.num_elements());
    let mut out = finish("zero", channel, assignment, params)?;
    out.stage_power = vec![out.gain.norm_sqr() * params.transmit_power()];
    Ok(out)
}

/// One CSM stage over all `L·N` elements at once, ignoring that the IRSs
/// interact through multi-hop paths. Powers are still measured on the true
/// channel.
pub fn virtual_single_irs<R: Rng + ?Sized>(
    channel: &dyn CascadedChannel,
    grids: &[PhaseGrid],
    samples: usize,
    params: &RadioParams,
    mode: NoiseMode,
    rng: &mut R,
) -> Result<BeamformingResult, BeamformingError> {
    check_grids(channel, grids)?;
    let grid = grids[0];
    if grids.iter().any(|g| *g != grid) {
        return Err(BeamformingError::HeterogeneousGrids);
    }
    if samples == 0 {
        return Err(BeamformingError::InvalidInput("T must be at least 1".into()));
    }
    let (l, n) = (channel.num_irs(), channel.num_elements());
    let mut meter = PowerMeter::new(*params, mode);
    let indices = generate_samples(l * n, grid, samples, rng);
    let powers = indices
        .iter()
        .map(|row| {
            let weights: Vec<Vec<Complex64>> = row.chunks(n).map(|c| stage_phasors(grid, c)).collect();
            channel.effective_weighted(&weights).map(|g| meter.measure(g, rng))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let batch = SampleBatch {
        irs: None,
        levels: grid.levels(),
        indices,
        powers,
    };
    let decision = csm_decide(&conditional_sample_mean(&batch, grid)?);
    let assignment = PhaseAssignment::new(grids.to_vec(), decision.chunks(n).map(<[usize]>::to_vec).collect())?;
    let mut out = finish("virtual-single", channel, assignment, params)?;
    out.stage_power = vec![out.gain.norm_sqr() * params.transmit_power()];
    out.samples_per_stage = vec![samples];
    out.evaluations = meter.evaluations();
    Ok(out)
}
