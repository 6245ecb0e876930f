//! Discrete phase alphabets and per-element phase choices.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("a phase grid needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("IRS {irs}: expected {expected} elements, got {got}")]
    WrongLength { irs: usize, expected: usize, got: usize },
    #[error("IRS {irs}, element {element}: phase index {index} out of range for K={levels}")]
    IndexOutOfRange {
        irs: usize,
        element: usize,
        index: usize,
        levels: usize,
    },
    #[error("got {grids} phase grids for {irs} IRSs")]
    GridCountMismatch { grids: usize, irs: usize },
}

/// Uniform grid of `K` phase shifts `{0, ω, …, (K−1)ω}` with `ω = 2π/K`.
///
/// Index `k` stands for the phase `k·ω`; the alias `K·ω ≡ 0` is folded into
/// index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct PhaseGrid {
    levels: usize,
}

impl PhaseGrid {
    pub fn new(levels: usize) -> Result<Self, PhaseError> {
        if levels < 2 {
            return Err(PhaseError::TooFewLevels(levels));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.levels as f64
    }

    pub fn phase(&self, index: usize) -> f64 {
        index as f64 * self.spacing()
    }

    /// `e^{j·k·ω}`.
    pub fn phasor(&self, index: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(index))
    }

    /// Grid index closest to `angle` in wrapped distance; ties go to the
    /// smaller index.
    pub fn nearest(&self, angle: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for k in 0..self.levels {
            let d = wrap_angle(angle - self.phase(k)).abs();
            // strict comparison keeps the first minimiser
            if d < best_dist - TIE_EPS {
                best = k;
                best_dist = d;
            }
        }
        best
    }
}

/// Slack used to treat two angular distances as tied.
pub(crate) const TIE_EPS: f64 = 1e-12;

impl TryFrom<usize> for PhaseGrid {
    type Error = PhaseError;
    fn try_from(levels: usize) -> Result<Self, Self::Error> {
        PhaseGrid::new(levels)
    }
}

impl From<PhaseGrid> for usize {
    fn from(g: PhaseGrid) -> usize {
        g.levels
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Argument of a complex number, with `∠0 = 0`.
pub fn arg(z: Complex64) -> f64 {
    z.im.atan2(z.re)
}

/// Phase indices for every reflecting element of every IRS.
///
/// Element `n` of IRS `l` (both zero-based here) carries the phase
/// `indices[l][n] · ω_l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseAssignment {
    grids: Vec<PhaseGrid>,
    indices: Vec<Vec<usize>>,
}

impl PhaseAssignment {
    pub fn new(grids: Vec<PhaseGrid>, indices: Vec<Vec<usize>>) -> Result<Self, PhaseError> {
        if grids.len() != indices.len() {
            return Err(PhaseError::GridCountMismatch {
                grids: grids.len(),
                irs: indices.len(),
            });
        }
        let n = indices.first().map_or(0, Vec::len);
        for (l, (grid, row)) in grids.iter().zip(&indices).enumerate() {
            if row.len() != n {
                return Err(PhaseError::WrongLength {
                    irs: l,
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some((e, &k)) = row.iter().enumerate().find(|(_, &k)| k >= grid.levels()) {
                return Err(PhaseError::IndexOutOfRange {
                    irs: l,
                    element: e,
                    index: k,
                    levels: grid.levels(),
                });
            }
        }
        Ok(Self { grids, indices })
    }

    pub fn zeros(grids: Vec<PhaseGrid>, num_elements: usize) -> Self {
        let indices = vec![vec![0; num_elements]; grids.len()];
        Self { grids, indices }
    }

    pub fn num_irs(&self) -> usize {
        self.indices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }

    pub fn grids(&self) -> &[PhaseGrid] {
        &self.grids
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn irs(&self, irs: usize) -> &[usize] {
        &self.indices[irs]
    }

    pub fn phase(&self, irs: usize, element: usize) -> f64 {
        self.grids[irs].phase(self.indices[irs][element])
    }

    pub fn set_irs(&mut self, irs: usize, row: Vec<usize>) -> Result<(), PhaseError> {
        if row.len() != self.num_elements() {
            return Err(PhaseError::WrongLength {
                irs,
                expected: self.num_elements(),
                got: row.len(),
            });
        }
        let levels = self.grids[irs].levels();
        if let Some((e, &k)) = row.iter().enumerate().find(|(_, &k)| k >= levels) {
            return Err(PhaseError::IndexOutOfRange {
                irs,
                element: e,
                index: k,
                levels,
            });
        }
        self.indices[irs] = row;
        Ok(())
    }

    /// Unit phasors `e^{jθ}` laid out like `indices`.
    pub fn phasors(&self) -> Vec<Vec<Complex64>> {
        self.grids
            .iter()
            .zip(&self.indices)
            .map(|(g, row)| row.iter().map(|&k| g.phasor(k)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_rejects_single_level() {
        assert_eq!(PhaseGrid::new(1), Err(PhaseError::TooFewLevels(1)));
        assert!(PhaseGrid::new(2).is_ok());
    }

    #[test]
    fn spacing_times_levels_is_full_turn() {
        for k in 2..17 {
            let g = PhaseGrid::new(k).unwrap();
            assert_abs_diff_eq!(g.spacing() * k as f64, TAU, epsilon = 1e-15);
            assert_abs_diff_eq!(g.phase(1), g.spacing());
        }
    }

    #[test]
    fn wrap_lands_in_half_open_interval() {
        assert_abs_diff_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn nearest_prefers_smaller_index_on_tie() {
        let g = PhaseGrid::new(4).unwrap();
        // -π/4 is equidistant from 0 and 3π/2
        assert_eq!(g.nearest(-PI / 4.0), 0);
        assert_eq!(g.nearest(PI / 4.0), 0);
        assert_eq!(g.nearest(PI), 2);
        assert_eq!(g.nearest(-PI / 2.0), 3);
    }

    #[test]
    fn assignment_validates_indices() {
        let g = PhaseGrid::new(2).unwrap();
        let err = PhaseAssignment::new(vec![g], vec![vec![0, 2]]).unwrap_err();
        assert!(matches!(err, PhaseError::IndexOutOfRange { index: 2, .. }));
        let err = PhaseAssignment::new(vec![g, g], vec![vec![0, 1], vec![0]]).unwrap_err();
        assert!(matches!(err, PhaseError::WrongLength { irs: 1, .. }));
    }

    #[test]
    fn arg_of_zero_is_zero() {
        assert_eq!(arg(Complex64::new(0.0, 0.0)), 0.0);
    }
}
