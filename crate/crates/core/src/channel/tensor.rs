use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_weights, CascadedChannel, ChannelError, StageAggregates};
use crate::phase::PhaseAssignment;

/// Upper bound on `(N+1)^L` for dense tensors.
pub const DENSE_ENTRY_LIMIT: u128 = 10_000_000;

pub(crate) fn dense_len(num_irs: usize, num_elements: usize) -> u128 {
    (num_elements as u128 + 1).saturating_pow(num_irs as u32)
}

/// Every cascaded coefficient `h_{n1,…,nL}` over `[0:N]^L`.
///
/// Entries are stored row-major with `n1` varying slowest. Index 0 of a
/// coordinate means the path skips that IRS, so the all-zero tuple is the
/// direct link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct CascadedChannelTensor {
    num_irs: usize,
    num_elements: usize,
    entries: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor {
    num_irs: usize,
    num_elements: usize,
    entries: Vec<Complex64>,
}

impl TryFrom<RawTensor> for CascadedChannelTensor {
    type Error = ChannelError;
    fn try_from(raw: RawTensor) -> Result<Self, Self::Error> {
        CascadedChannelTensor::from_entries(raw.num_irs, raw.num_elements, raw.entries)
    }
}

impl From<CascadedChannelTensor> for RawTensor {
    fn from(t: CascadedChannelTensor) -> Self {
        RawTensor {
            num_irs: t.num_irs,
            num_elements: t.num_elements,
            entries: t.entries,
        }
    }
}

impl CascadedChannelTensor {
    pub fn zeros(num_irs: usize, num_elements: usize) -> Result<Self, ChannelError> {
        let len = dense_len(num_irs, num_elements);
        if len > DENSE_ENTRY_LIMIT {
            return Err(ChannelError::TooLarge {
                entries: len,
                limit: DENSE_ENTRY_LIMIT,
            });
        }
        if num_irs == 0 || num_elements == 0 {
            return Err(ChannelError::DimensionMismatch(
                "need at least one IRS with at least one element".into(),
            ));
        }
        Ok(Self {
            num_irs,
            num_elements,
            entries: vec![Complex64::new(0.0, 0.0); len as usize],
        })
    }

    pub fn from_entries(
        num_irs: usize,
        num_elements: usize,
        entries: Vec<Complex64>,
    ) -> Result<Self, ChannelError> {
        let mut t = Self::zeros(num_irs, num_elements)?;
        if entries.len() != t.entries.len() {
            return Err(ChannelError::DimensionMismatch(format!(
                "expected {} entries, got {}",
                t.entries.len(),
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(ChannelError::NonFinite(format!("{:?}", t.tuple_of(i))));
        }
        t.entries = entries;
        Ok(t)
    }

    /// Builds a tensor by evaluating `f` on every index tuple.
    pub fn from_fn(
        num_irs: usize,
        num_elements: usize,
        mut f: impl FnMut(&[usize]) -> Complex64,
    ) -> Result<Self, ChannelError> {
        let mut t = Self::zeros(num_irs, num_elements)?;
        let mut it = TupleIter::new(num_irs, num_elements);
        let mut i = 0;
        while let Some(tuple) = it.next_tuple() {
            t.entries[i] = f(tuple);
            i += 1;
        }
        if let Some(i) = t.entries.iter().position(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(ChannelError::NonFinite(format!("{:?}", t.tuple_of(i))));
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn linear_index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.num_irs);
        let base = self.num_elements + 1;
        tuple.iter().fold(0, |acc, &n| acc * base + n)
    }

    pub fn tuple_of(&self, mut index: usize) -> Vec<usize> {
        let base = self.num_elements + 1;
        let mut tuple = vec![0; self.num_irs];
        for slot in tuple.iter_mut().rev() {
            *slot = index % base;
            index /= base;
        }
        tuple
    }

    pub fn get(&self, tuple: &[usize]) -> Complex64 {
        self.entries[self.linear_index(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], value: Complex64) {
        let i = self.linear_index(tuple);
        self.entries[i] = value;
    }

    pub fn tuples(&self) -> TupleIter {
        TupleIter::new(self.num_irs, self.num_elements)
    }

    /// The `N×N` block `h_{n1,n2}` with both indices nonzero (L = 2 only).
    pub fn two_hop_block(&self) -> Option<super::CMatrix> {
        if self.num_irs != 2 {
            return None;
        }
        let n = self.num_elements;
        Some(super::CMatrix::from_fn(n, n, |i, j| self.get(&[i + 1, j + 1])))
    }

    /// Sum of `|h|` over all entries (the triangle-inequality bound on `|g|`).
    pub fn abs_sum(&self) -> f64 {
        self.entries.iter().map(|h| h.norm()).sum()
    }
}

/// Odometer over `[0:N]^L` in storage order.
#[derive(Debug, Clone)]
pub struct TupleIter {
    current: Vec<usize>,
    max: usize,
    started: bool,
    done: bool,
}

impl TupleIter {
    pub fn new(num_irs: usize, num_elements: usize) -> Self {
        Self {
            current: vec![0; num_irs],
            max: num_elements,
            started: false,
            done: num_irs == 0,
        }
    }

    pub fn next_tuple(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        for slot in self.current.iter_mut().rev() {
            if *slot < self.max {
                *slot += 1;
                return Some(&self.current);
            }
            *slot = 0;
        }
        self.done = true;
        None
    }
}

impl Iterator for TupleIter {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_tuple().map(<[usize]>::to_vec)
    }
}

impl CascadedChannel for CascadedChannelTensor {
    fn num_irs(&self) -> usize {
        self.num_irs
    }

    fn num_elements(&self) -> usize {
        self.num_elements
    }

    fn direct(&self) -> Complex64 {
        self.entries[0]
    }

    fn effective_weighted(&self, weights: &[Vec<Complex64>]) -> Result<Complex64, ChannelError> {
        check_weights(weights, self.num_irs, self.num_elements)?;
        let mut it = self.tuples();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut i = 0;
        while let Some(tuple) = it.next_tuple() {
            let h = self.entries[i];
            i += 1;
            if h.re == 0.0 && h.im == 0.0 {
                continue;
            }
            let w: Complex64 = tuple
                .iter()
                .zip(weights)
                .filter(|(&n, _)| n > 0)
                .map(|(&n, row)| row[n - 1])
                .product();
            sum += h * w;
        }
        Ok(sum)
    }

    fn stage_aggregates(
        &self,
        weights: &[Vec<Complex64>],
        irs: usize,
    ) -> Result<StageAggregates, ChannelError> {
        check_weights(weights, self.num_irs, self.num_elements)?;
        if irs >= self.num_irs {
            return Err(ChannelError::DimensionMismatch(format!(
                "IRS index {irs} out of range for L={}",
                self.num_irs
            )));
        }
        let mut base = Complex64::new(0.0, 0.0);
        let mut per_element = vec![Complex64::new(0.0, 0.0); self.num_elements];
        let mut it = self.tuples();
        let mut i = 0;
        while let Some(tuple) = it.next_tuple() {
            let h = self.entries[i];
            i += 1;
            let w: Complex64 = tuple
                .iter()
                .zip(weights)
                .enumerate()
                .filter(|&(l, (&n, _))| l != irs && n > 0)
                .map(|(_, (&n, row))| row[n - 1])
                .product();
            match tuple[irs] {
                0 => base += h * w,
                n => per_element[n - 1] += h * w,
            }
        }
        Ok(StageAggregates { base, per_element })
    }
}

/// Effective channel `Σ h_{n1,…,nL} e^{jΣθ}` of a dense tensor.
pub fn eval_effective_dense(
    tensor: &CascadedChannelTensor,
    phases: &PhaseAssignment,
) -> Result<Complex64, ChannelError> {
    tensor.effective(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseGrid;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tuple_order_and_index_roundtrip() {
        let t = CascadedChannelTensor::zeros(3, 2).unwrap();
        assert_eq!(t.len(), 27);
        for (i, tuple) in t.tuples().enumerate() {
            assert_eq!(t.linear_index(&tuple), i);
            assert_eq!(t.tuple_of(i), tuple);
        }
        assert_eq!(t.tuple_of(1), vec![0, 0, 1]);
    }

    #[test]
    fn direct_only_tensor_ignores_phases() {
        let mut t = CascadedChannelTensor::zeros(2, 3).unwrap();
        t.set(&[0, 0], c(1.0, 0.0));
        let g4 = PhaseGrid::new(4).unwrap();
        let phases = PhaseAssignment::new(vec![g4, g4], vec![vec![1, 2, 3], vec![3, 0, 1]]).unwrap();
        assert_eq!(eval_effective_dense(&t, &phases).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn two_irs_single_element_cancellation() {
        let t = CascadedChannelTensor::from_entries(2, 1, vec![c(1.0, 0.0); 4]).unwrap();
        let g2 = PhaseGrid::new(2).unwrap();
        // IRS 1 at π, IRS 2 at 0: 1 + 1 - 1 - 1
        let phases = PhaseAssignment::new(vec![g2, g2], vec![vec![1], vec![0]]).unwrap();
        let g = eval_effective_dense(&t, &phases).unwrap();
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn parity_pattern_makes_every_two_hop_term_positive() {
        // h_{n1,n2} = (-1)^{n1+n2} with one-based indices, N = 3
        let n = 3;
        let t = CascadedChannelTensor::from_fn(2, n, |tu| {
            if tu[0] > 0 && tu[1] > 0 {
                c(if (tu[0] + tu[1]) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let g4 = PhaseGrid::new(4).unwrap();
        // one-based odd -> 0, even -> π (index 2)
        let row: Vec<usize> = (1..=n).map(|i| if i % 2 == 1 { 0 } else { 2 }).collect();
        let phases = PhaseAssignment::new(vec![g4, g4], vec![row.clone(), row]).unwrap();
        let g = eval_effective_dense(&t, &phases).unwrap();
        assert!((g - c(9.0, 0.0)).norm() < 1e-12);
        assert!((g.norm_sqr() - 81.0).abs() < 1e-10);
    }

    #[test]
    fn stage_aggregates_rebuild_effective_channel() {
        let t = CascadedChannelTensor::from_fn(2, 2, |tu| {
            c(tu[0] as f64 + 0.5, tu[1] as f64 - 0.25 * tu[0] as f64)
        })
        .unwrap();
        let w = vec![
            vec![Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, PI)],
            vec![Complex64::from_polar(1.0, -1.1), Complex64::from_polar(1.0, 2.0)],
        ];
        let total = t.effective_weighted(&w).unwrap();
        for irs in 0..2 {
            let agg = t.stage_aggregates(&w, irs).unwrap();
            assert!((agg.effective(&w[irs]) - total).norm() < 1e-12);
        }
    }

    #[test]
    fn guard_rejects_huge_tensor() {
        let err = CascadedChannelTensor::zeros(8, 10).unwrap_err();
        assert!(matches!(err, ChannelError::TooLarge { .. }));
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        assert!(matches!(
            CascadedChannelTensor::from_entries(1, 1, vec![c(0.0, 0.0)]),
            Err(ChannelError::DimensionMismatch(_))
        ));
        assert!(matches!(
            CascadedChannelTensor::from_entries(1, 1, vec![c(0.0, 0.0), c(f64::NAN, 0.0)]),
            Err(ChannelError::NonFinite(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let t = CascadedChannelTensor::zeros(2, 2).unwrap();
        let phases = PhaseAssignment::zeros(vec![PhaseGrid::new(2).unwrap(); 2], 3);
        assert!(matches!(
            eval_effective_dense(&t, &phases),
            Err(ChannelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn json_uses_re_im_pairs() {
        let t = CascadedChannelTensor::from_entries(1, 1, vec![c(1.0, -2.0), c(0.5, 0.0)]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"num_irs":1,"num_elements":1,"entries":[[1.0,-2.0],[0.5,0.0]]}"#);
        let back: CascadedChannelTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"num_irs":1,"num_elements":2,"entries":[[1.0,0.0]]}"#;
        assert!(serde_json::from_str::<CascadedChannelTensor>(bad).is_err());
    }
}
