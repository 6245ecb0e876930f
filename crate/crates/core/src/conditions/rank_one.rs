use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{CMatrix, CascadedChannel, CascadedChannelTensor};
use crate::phase::arg;

/// Default relative reconstruction residual for the rank-one test.
pub const RANK_ONE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum RankOneFailure {
    #[error("not rank one: relative residual {ratio:.3e} exceeds tolerance")]
    NotRankOne { ratio: f64 },
    #[error("factor entry {element} of IRS {irs} is zero")]
    ZeroEntry { irs: usize, element: usize },
    #[error("need at least two IRSs and one element")]
    Degenerate,
}

/// Factors `u^{(l)}` with `h_{n_1,…,n_L} = Π_l u^{(l)}_{n_l}` on full paths.
///
/// Gauge: all factors have equal Euclidean norm, and the first entry of every
/// factor but the last is real and positive; the leftover phase lives in the
/// last factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneFactors {
    pub u: Vec<Vec<Complex64>>,
}

impl RankOneFactors {
    pub fn num_irs(&self) -> usize {
        self.u.len()
    }

    pub fn num_elements(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    /// `δ_l = (1/N)·Σ_n |u^{(l)}_n|`.
    pub fn delta(&self) -> Vec<f64> {
        self.u
            .iter()
            .map(|v| v.iter().map(|z| z.norm()).sum::<f64>() / v.len() as f64)
            .collect()
    }

    /// `Π_l u^{(l)}_{n_l}` for a full-path tuple (1-based element indices).
    pub fn product(&self, tuple: &[usize]) -> Complex64 {
        self.u.iter().zip(tuple).map(|(v, &n)| v[n - 1]).product()
    }

    /// Rescales to the canonical gauge.
    pub fn canonicalize(mut self) -> Self {
        let l = self.u.len();
        let norms: Vec<f64> = self.u.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
        if norms.iter().all(|&r| r > 0.0) {
            let log_mean = norms.iter().map(|r| r.ln()).sum::<f64>() / l as f64;
            for (v, r) in self.u.iter_mut().zip(&norms) {
                let s = (log_mean - r.ln()).exp();
                v.iter_mut().for_each(|z| *z *= s);
            }
        }
        let mut carried = 0.0;
        for v in self.u.iter_mut().take(l - 1) {
            let phi = arg(v[0]);
            carried += phi;
            let rot = Complex64::from_polar(1.0, -phi);
            v.iter_mut().for_each(|z| *z *= rot);
        }
        let rot = Complex64::from_polar(1.0, carried);
        self.u[l - 1].iter_mut().for_each(|z| *z *= rot);
        self
    }

    fn first_zero(&self, tol: f64) -> Option<(usize, usize)> {
        for (l, v) in self.u.iter().enumerate() {
            let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if let Some(n) = v.iter().position(|z| z.norm() <= tol * scale || scale == 0.0) {
                return Some((l, n));
            }
        }
        None
    }
}

/// Rank-one test of the two-hop block.
///
/// The factors are read off the row and column through the largest entry and
/// the test passes when the largest reconstruction error, relative to that
/// entry, is at most `tol` and no recovered factor entry vanishes.
pub fn check_rank_one(matrix: &CMatrix, tol: f64) -> Result<RankOneFactors, RankOneFailure> {
    if matrix.rows == 0 || matrix.cols == 0 {
        return Err(RankOneFailure::Degenerate);
    }
    let (mut p, mut q, mut best) = (0, 0, 0.0f64);
    for i in 0..matrix.rows {
        for j in 0..matrix.cols {
            if matrix.get(i, j).norm() > best {
                (p, q, best) = (i, j, matrix.get(i, j).norm());
            }
        }
    }
    if best == 0.0 {
        return Err(RankOneFailure::ZeroEntry { irs: 0, element: 0 });
    }
    let hp = matrix.get(p, q);
    let factors = RankOneFactors {
        u: vec![
            (0..matrix.rows).map(|i| matrix.get(i, q) / hp).collect(),
            (0..matrix.cols).map(|j| matrix.get(p, j)).collect(),
        ],
    }
    .canonicalize();
    let mut residual = 0.0f64;
    for i in 0..matrix.rows {
        for j in 0..matrix.cols {
            residual = residual.max((matrix.get(i, j) - factors.u[0][i] * factors.u[1][j]).norm());
        }
    }
    let residual = residual / best;
    if residual > tol {
        return Err(RankOneFailure::NotRankOne { ratio: residual });
    }
    if let Some((irs, element)) = factors.first_zero(tol) {
        return Err(RankOneFailure::ZeroEntry { irs, element });
    }
    Ok(factors)
}

/// Factorises all full-path coefficients `h_{n_1,…,n_L}` (`n_l ≥ 1`) of a
/// dense tensor.
///
/// Factors are read off the fibres through the largest full-path coefficient
/// and validated by the maximum relative reconstruction residual over every
/// full path.
pub fn factorize_full_paths(tensor: &CascadedChannelTensor, tol: f64) -> Result<RankOneFactors, RankOneFailure> {
    let (l, n) = (tensor.num_irs(), tensor.num_elements());
    if l < 2 || n == 0 {
        return Err(RankOneFailure::Degenerate);
    }
    if l == 2 {
        return check_rank_one(&tensor.two_hop_block().expect("L = 2"), tol);
    }
    let full = || crate::channel::TupleIter::new(l, n).filter(|t| t.iter().all(|&x| x > 0));
    let (pivot, hp, scale) = full().fold((vec![1; l], Complex64::new(0.0, 0.0), 0.0f64), |(bp, bh, m), t| {
        let h = tensor.get(&t);
        if h.norm() > bh.norm() {
            (t, h, m.max(h.norm()))
        } else {
            (bp, bh, m.max(h.norm()))
        }
    });
    if scale == 0.0 {
        return Err(RankOneFailure::ZeroEntry { irs: 0, element: 0 });
    }
    let mut u = Vec::with_capacity(l);
    for i in 0..l {
        let mut t = pivot.clone();
        let fibre: Vec<Complex64> = (1..=n)
            .map(|k| {
                t[i] = k;
                let h = tensor.get(&t);
                if i + 1 < l {
                    h / hp
                } else {
                    h
                }
            })
            .collect();
        u.push(fibre);
    }
    let factors = RankOneFactors { u }.canonicalize();
    let residual = full()
        .map(|t| (tensor.get(&t) - factors.product(&t)).norm())
        .fold(0.0f64, f64::max)
        / scale;
    if residual > tol {
        return Err(RankOneFailure::NotRankOne { ratio: residual });
    }
    if let Some((irs, element)) = factors.first_zero(tol) {
        return Err(RankOneFailure::ZeroEntry { irs, element });
    }
    Ok(factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn outer_product_recovered_in_gauge() {
        let a = [c(1.0, 2.0), c(-0.5, 0.3), c(0.2, -1.1)];
        let b = [c(0.7, 0.1), c(0.0, 1.0), c(-2.0, 0.5)];
        let m = CMatrix::from_fn(3, 3, |i, j| a[i] * b[j]);
        let f = check_rank_one(&m, RANK_ONE_TOL).unwrap();
        assert!(f.u[0][0].im.abs() < 1e-12 && f.u[0][0].re > 0.0);
        let n0: f64 = f.u[0].iter().map(|z| z.norm_sqr()).sum();
        let n1: f64 = f.u[1].iter().map(|z| z.norm_sqr()).sum();
        assert!((n0 - n1).abs() < 1e-10);
        for i in 0..3 {
            for j in 0..3 {
                assert!((f.u[0][i] * f.u[1][j] - m.get(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_row_fails_nonzero_requirement() {
        let a = [c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)];
        let b = [c(1.0, 1.0), c(1.0, 0.0), c(0.5, 0.0)];
        let m = CMatrix::from_fn(3, 3, |i, j| a[i] * b[j]);
        assert_eq!(check_rank_one(&m, RANK_ONE_TOL), Err(RankOneFailure::ZeroEntry { irs: 0, element: 1 }));
    }

    #[test]
    fn full_rank_fails() {
        let m = CMatrix::from_fn(2, 2, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(check_rank_one(&m, RANK_ONE_TOL), Err(RankOneFailure::NotRankOne { .. })));
    }

    #[test]
    fn three_way_factorisation() {
        let u = [
            vec![c(1.0, 1.0), c(0.5, -0.2)],
            vec![c(-1.0, 0.3), c(2.0, 0.0)],
            vec![c(0.1, 0.9), c(-0.4, -0.4)],
        ];
        let mut t = CascadedChannelTensor::from_fn(3, 2, |tuple| {
            if tuple.iter().all(|&x| x > 0) {
                u.iter().zip(tuple).map(|(v, &k)| v[k - 1]).product()
            } else {
                c(0.3, 0.0)
            }
        })
        .unwrap();
        let f = factorize_full_paths(&t, RANK_ONE_TOL).unwrap();
        for tup in crate::channel::TupleIter::new(3, 2).filter(|t| t.iter().all(|&x| x > 0)) {
            assert!((f.product(&tup) - t.get(&tup)).norm() < 1e-12);
        }
        t.set(&[1, 1, 1], c(5.0, 0.0));
        assert!(matches!(factorize_full_paths(&t, RANK_ONE_TOL), Err(RankOneFailure::NotRankOne { .. })));
    }
}
