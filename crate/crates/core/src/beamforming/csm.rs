use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BeamformingError;
use crate::phase::{arg, PhaseGrid};

/// `T` random phase configurations of one IRS with their measured powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    /// Zero-based IRS the batch was drawn for (`None` when the batch spans
    /// every element of every IRS).
    pub irs: Option<usize>,
    pub levels: usize,
    pub indices: Vec<Vec<usize>>,
    pub powers: Vec<f64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }
}

/// `T` independent uniform draws over `grid^N`, drawn sample by sample.
pub fn generate_samples<R: Rng + ?Sized>(
    num_elements: usize,
    grid: PhaseGrid,
    samples: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    (0..samples)
        .map(|_| (0..num_elements).map(|_| rng.random_range(0..grid.levels())).collect())
        .collect()
}

/// Conditional sample means `Ê[|Y|² | θ_n = kω]` with their group sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsmTable {
    num_elements: usize,
    levels: usize,
    means: Vec<f64>,
    counts: Vec<usize>,
}

impl CsmTable {
    pub(crate) fn from_parts(num_elements: usize, levels: usize, means: Vec<f64>, counts: Vec<usize>) -> Self {
        Self {
            num_elements,
            levels,
            means,
            counts,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn mean(&self, element: usize, index: usize) -> f64 {
        self.means[element * self.levels + index]
    }

    pub fn count(&self, element: usize, index: usize) -> usize {
        self.counts[element * self.levels + index]
    }

    pub fn row(&self, element: usize) -> &[f64] {
        &self.means[element * self.levels..(element + 1) * self.levels]
    }
}

/// Running sums behind a [`CsmTable`], filled one sample at a time.
#[derive(Debug, Clone)]
pub struct CsmAccumulator {
    num_elements: usize,
    levels: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl CsmAccumulator {
    pub fn new(num_elements: usize, grid: PhaseGrid) -> Self {
        let k = grid.levels();
        Self {
            num_elements,
            levels: k,
            sums: vec![0.0; num_elements * k],
            counts: vec![0; num_elements * k],
        }
    }

    pub fn add(&mut self, row: &[usize], power: f64) -> Result<(), BeamformingError> {
        if row.len() != self.num_elements {
            return Err(BeamformingError::InvalidInput("ragged sample batch".into()));
        }
        let k = self.levels;
        for (e, &idx) in row.iter().enumerate() {
            if idx >= k {
                return Err(BeamformingError::InvalidInput(format!("phase index {idx} out of range for K={k}")));
            }
            self.sums[e * k + idx] += power;
            self.counts[e * k + idx] += 1;
        }
        Ok(())
    }

    /// Fails with [`BeamformingError::EmptyGroup`] if some phase of some
    /// element was never sampled; `irs` only labels that error.
    pub fn finish(self, irs: Option<usize>) -> Result<CsmTable, BeamformingError> {
        let k = self.levels;
        if let Some(pos) = self.counts.iter().position(|&c| c == 0) {
            return Err(BeamformingError::EmptyGroup {
                irs,
                element: pos / k,
                index: pos % k,
            });
        }
        let means = self.sums.iter().zip(&self.counts).map(|(s, &c)| s / c as f64).collect();
        Ok(CsmTable {
            num_elements: self.num_elements,
            levels: k,
            means,
            counts: self.counts,
        })
    }
}

pub fn conditional_sample_mean(batch: &SampleBatch, grid: PhaseGrid) -> Result<CsmTable, BeamformingError> {
    let n = batch.indices.first().map_or(0, Vec::len);
    if batch.indices.len() != batch.powers.len() {
        return Err(BeamformingError::InvalidInput(format!(
            "{} assignments but {} powers",
            batch.indices.len(),
            batch.powers.len()
        )));
    }
    let mut acc = CsmAccumulator::new(n, grid);
    for (row, &p) in batch.indices.iter().zip(&batch.powers) {
        acc.add(row, p)?;
    }
    acc.finish(batch.irs)
}

/// Relative gap below which two conditional means count as tied.
const MEAN_TIE_REL: f64 = 1e-12;

/// Per element, the phase index with the largest conditional mean; ties go to
/// the smallest index.
pub fn csm_decide(table: &CsmTable) -> Vec<usize> {
    (0..table.num_elements)
        .map(|e| {
            let row = table.row(e);
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] + MEAN_TIE_REL * scale {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Grid phase that rotates `reflected` closest to `direct`.
pub fn cpp_decide(direct: Complex64, reflected: Complex64, grid: PhaseGrid) -> usize {
    if reflected == Complex64::new(0.0, 0.0) {
        return 0;
    }
    grid.nearest(cpp_target(direct, reflected))
}

/// Continuous CPP solution `∠direct − ∠reflected`.
pub fn cpp_target(direct: Complex64, reflected: Complex64) -> f64 {
    crate::phase::wrap_angle(arg(direct) - arg(reflected))
}
