//! Index sets over `[0:N]^L` used by the conditions and their proofs.

use serde::{Deserialize, Serialize};

use crate::channel::TupleIter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexSetKind {
    /// Every tuple with `n_l = m`.
    D,
    /// Tuples with `n_l = m` and at least one other coordinate zero.
    A,
    /// Tuples with `n_l = m` and every other coordinate nonzero.
    E,
}

/// One of the sets `D^{(l)}_m`, `A^{(l)}_m`, `E^{(l)}_m`.
///
/// `irs` is zero-based; `element` follows the tuple convention where 0 means
/// "skips this IRS", so `D` with `element = 0` is the set of channels that
/// bypass IRS `irs` entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSetSpec {
    pub irs: usize,
    pub element: usize,
    pub kind: IndexSetKind,
}

impl IndexSetSpec {
    pub fn contains(&self, tuple: &[usize]) -> bool {
        if tuple[self.irs] != self.element {
            return false;
        }
        let others_nonzero = tuple
            .iter()
            .enumerate()
            .all(|(i, &n)| i == self.irs || n != 0);
        match self.kind {
            IndexSetKind::D => true,
            IndexSetKind::A => !others_nonzero || self.element == 0,
            IndexSetKind::E => others_nonzero && self.element != 0,
        }
    }

    /// Enumerates the members of the set in row-major order.
    pub fn tuples(&self, num_irs: usize, num_elements: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
        TupleIter::new(num_irs, num_elements).filter(move |t| self.contains(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sizes() {
        for (l_count, n) in [(2usize, 3usize), (3, 2), (3, 3), (4, 2)] {
            for irs in 0..l_count {
                for m in 1..=n {
                    let count = |kind| IndexSetSpec { irs, element: m, kind }.tuples(l_count, n).count();
                    let (d, a, e) = (count(IndexSetKind::D), count(IndexSetKind::A), count(IndexSetKind::E));
                    assert_eq!(d, (n + 1).pow(l_count as u32 - 1));
                    assert_eq!(e, n.pow(l_count as u32 - 1));
                    assert_eq!(a, d - e);
                }
            }
        }
    }

    #[test]
    fn a_and_e_are_disjoint() {
        let (l, n) = (3, 2);
        for t in TupleIter::new(l, n) {
            let a = IndexSetSpec { irs: 1, element: t[1], kind: IndexSetKind::A }.contains(&t);
            let e = IndexSetSpec { irs: 1, element: t[1], kind: IndexSetKind::E }.contains(&t);
            assert!(!(a && e));
        }
    }
}
