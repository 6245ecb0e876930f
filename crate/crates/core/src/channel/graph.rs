use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_weights, CascadedChannel, CascadedChannelTensor, ChannelError, StageAggregates};
use crate::phase::PhaseAssignment;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Per-link channels of an `L`-IRS deployment.
///
/// Signals visit IRSs in ascending index order, so only forward IRS-to-IRS
/// links are stored: `irs_to_irs[l][k]` is the `N×N` matrix from IRS `l` to
/// IRS `l+1+k`, rows indexed by the source element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct LinkChannelGraph {
    num_irs: usize,
    num_elements: usize,
    tx_to_rx: Complex64,
    tx_to_irs: Vec<Vec<Complex64>>,
    irs_to_rx: Vec<Vec<Complex64>>,
    irs_to_irs: Vec<Vec<CMatrix>>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    num_irs: usize,
    num_elements: usize,
    tx_to_rx: Complex64,
    tx_to_irs: Vec<Vec<Complex64>>,
    irs_to_rx: Vec<Vec<Complex64>>,
    irs_to_irs: Vec<Vec<CMatrix>>,
}

impl TryFrom<RawGraph> for LinkChannelGraph {
    type Error = ChannelError;
    fn try_from(r: RawGraph) -> Result<Self, ChannelError> {
        LinkChannelGraph::new(r.tx_to_rx, r.tx_to_irs, r.irs_to_rx, r.irs_to_irs)
    }
}

impl From<LinkChannelGraph> for RawGraph {
    fn from(g: LinkChannelGraph) -> Self {
        RawGraph {
            num_irs: g.num_irs,
            num_elements: g.num_elements,
            tx_to_rx: g.tx_to_rx,
            tx_to_irs: g.tx_to_irs,
            irs_to_rx: g.irs_to_rx,
            irs_to_irs: g.irs_to_irs,
        }
    }
}

impl LinkChannelGraph {
    pub fn new(
        tx_to_rx: Complex64,
        tx_to_irs: Vec<Vec<Complex64>>,
        irs_to_rx: Vec<Vec<Complex64>>,
        irs_to_irs: Vec<Vec<CMatrix>>,
    ) -> Result<Self, ChannelError> {
        let num_irs = tx_to_irs.len();
        let num_elements = tx_to_irs.first().map_or(0, Vec::len);
        let mismatch = |what: String| Err(ChannelError::DimensionMismatch(what));
        if num_irs == 0 || num_elements == 0 {
            return mismatch("need at least one IRS with at least one element".into());
        }
        if irs_to_rx.len() != num_irs || irs_to_irs.len() != num_irs {
            return mismatch(format!("link lists disagree on L={num_irs}"));
        }
        for l in 0..num_irs {
            if tx_to_irs[l].len() != num_elements || irs_to_rx[l].len() != num_elements {
                return mismatch(format!("IRS {l}: link vectors must have N={num_elements}"));
            }
            if irs_to_irs[l].len() != num_irs - 1 - l {
                return mismatch(format!(
                    "IRS {l}: expected {} forward matrices, got {}",
                    num_irs - 1 - l,
                    irs_to_irs[l].len()
                ));
            }
            for m in &irs_to_irs[l] {
                if m.rows != num_elements || m.cols != num_elements || m.data.len() != m.rows * m.cols {
                    return mismatch(format!("IRS {l}: inter-IRS matrices must be {num_elements}x{num_elements}"));
                }
                if !m.is_finite() {
                    return Err(ChannelError::NonFinite(format!("inter-IRS link from IRS {l}")));
                }
            }
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(&tx_to_rx)
            || !tx_to_irs.iter().flatten().all(finite)
            || !irs_to_rx.iter().flatten().all(finite)
        {
            return Err(ChannelError::NonFinite("transmitter/receiver link".into()));
        }
        Ok(Self {
            num_irs,
            num_elements,
            tx_to_rx,
            tx_to_irs,
            irs_to_rx,
            irs_to_irs,
        })
    }

    /// Graph with every link set to zero.
    pub fn zeros(num_irs: usize, num_elements: usize) -> Result<Self, ChannelError> {
        let vecs = vec![vec![ZERO; num_elements]; num_irs];
        let mats = (0..num_irs)
            .map(|l| vec![CMatrix::zeros(num_elements, num_elements); num_irs - 1 - l])
            .collect();
        Self::new(ZERO, vecs.clone(), vecs, mats)
    }

    pub fn tx_to_rx(&self) -> Complex64 {
        self.tx_to_rx
    }

    pub fn tx_to_irs(&self, irs: usize) -> &[Complex64] {
        &self.tx_to_irs[irs]
    }

    pub fn irs_to_rx(&self, irs: usize) -> &[Complex64] {
        &self.irs_to_rx[irs]
    }

    /// Matrix from IRS `from` to IRS `to`; requires `from < to`.
    pub fn irs_to_irs(&self, from: usize, to: usize) -> &CMatrix {
        assert!(from < to, "only forward links are stored");
        &self.irs_to_irs[from][to - from - 1]
    }

    pub fn set_tx_to_rx(&mut self, v: Complex64) {
        self.tx_to_rx = v;
    }

    pub fn tx_to_irs_mut(&mut self, irs: usize) -> &mut [Complex64] {
        &mut self.tx_to_irs[irs]
    }

    pub fn irs_to_rx_mut(&mut self, irs: usize) -> &mut [Complex64] {
        &mut self.irs_to_rx[irs]
    }

    pub fn irs_to_irs_mut(&mut self, from: usize, to: usize) -> &mut CMatrix {
        assert!(from < to, "only forward links are stored");
        &mut self.irs_to_irs[from][to - from - 1]
    }

    /// Signal arriving at each element of IRS `upto` (before its own phase),
    /// plus the post-phase outputs `w_l` of every earlier IRS.
    fn forward(&self, weights: &[Vec<Complex64>], upto: usize) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
        let n = self.num_elements;
        let mut outputs: Vec<Vec<Complex64>> = Vec::with_capacity(upto);
        let mut incoming = Vec::new();
        for l in 0..=upto.min(self.num_irs - 1) {
            let mut arriving = self.tx_to_irs[l].clone();
            for (i, w_i) in outputs.iter().enumerate() {
                let m = self.irs_to_irs(i, l);
                for (src, &w) in w_i.iter().enumerate() {
                    if w == ZERO {
                        continue;
                    }
                    for (dst, a) in m.row(src).iter().zip(arriving.iter_mut()) {
                        *a += w * dst;
                    }
                }
            }
            if l == upto {
                incoming = arriving;
                break;
            }
            let w_l = (0..n).map(|k| arriving[k] * weights[l][k]).collect();
            outputs.push(w_l);
        }
        (outputs, incoming)
    }

    /// Gain from each element of IRS `from` to the receiver through the IRSs
    /// after it (with their weights applied).
    fn backward(&self, weights: &[Vec<Complex64>], from: usize) -> Vec<Complex64> {
        let n = self.num_elements;
        let mut later: Vec<Vec<Complex64>> = vec![Vec::new(); self.num_irs];
        for l in (from..self.num_irs).rev() {
            let mut b = self.irs_to_rx[l].clone();
            for (i, b_i) in later.iter().enumerate().skip(l + 1) {
                let m = self.irs_to_irs(l, i);
                let xb: Vec<Complex64> = (0..n).map(|k| weights[i][k] * b_i[k]).collect();
                for (src, out) in b.iter_mut().enumerate() {
                    *out += m.row(src).iter().zip(&xb).map(|(g, v)| g * v).sum::<Complex64>();
                }
            }
            later[l] = b;
        }
        std::mem::take(&mut later[from])
    }
}

impl CascadedChannel for LinkChannelGraph {
    fn num_irs(&self) -> usize {
        self.num_irs
    }

    fn num_elements(&self) -> usize {
        self.num_elements
    }

    fn direct(&self) -> Complex64 {
        self.tx_to_rx
    }

    fn effective_weighted(&self, weights: &[Vec<Complex64>]) -> Result<Complex64, ChannelError> {
        check_weights(weights, self.num_irs, self.num_elements)?;
        let n = self.num_elements;
        let mut outputs: Vec<Vec<Complex64>> = Vec::with_capacity(self.num_irs);
        let mut g = self.tx_to_rx;
        for l in 0..self.num_irs {
            let mut arriving = self.tx_to_irs[l].clone();
            for (i, w_i) in outputs.iter().enumerate() {
                let m = self.irs_to_irs(i, l);
                for (src, &w) in w_i.iter().enumerate() {
                    if w == ZERO {
                        continue;
                    }
                    for (dst, a) in m.row(src).iter().zip(arriving.iter_mut()) {
                        *a += w * dst;
                    }
                }
            }
            let w_l: Vec<Complex64> = (0..n).map(|k| arriving[k] * weights[l][k]).collect();
            g += w_l.iter().zip(&self.irs_to_rx[l]).map(|(w, r)| w * r).sum::<Complex64>();
            outputs.push(w_l);
        }
        Ok(g)
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
        let (_, incoming) = self.forward(weights, irs);
        let outgoing = self.backward(weights, irs);
        let per_element = incoming.iter().zip(&outgoing).map(|(a, b)| a * b).collect();
        let mut off = weights.to_vec();
        off[irs].iter_mut().for_each(|w| *w = ZERO);
        let base = self.effective_weighted(&off)?;
        Ok(StageAggregates { base, per_element })
    }
}

/// Effective channel of a link graph by forward accumulation, `O(L²N²)`.
pub fn eval_effective_chain(
    graph: &LinkChannelGraph,
    phases: &PhaseAssignment,
) -> Result<Complex64, ChannelError> {
    graph.effective(phases)
}

/// Materialises every cascaded coefficient of a link graph.
///
/// The nonzero coordinates `l1 < … < lk` of a tuple name the path
/// `T → l1 → … → lk → R`; its coefficient is the product of the link gains
/// along that path.
pub fn expand_links_to_tensor(graph: &LinkChannelGraph) -> Result<CascadedChannelTensor, ChannelError> {
    CascadedChannelTensor::from_fn(graph.num_irs, graph.num_elements, |tuple| {
        let mut prev: Option<(usize, usize)> = None;
        let mut h = Complex64::new(1.0, 0.0);
        for (l, &n) in tuple.iter().enumerate() {
            if n == 0 {
                continue;
            }
            h *= match prev {
                None => graph.tx_to_irs[l][n - 1],
                Some((pl, pn)) => graph.irs_to_irs(pl, l).get(pn - 1, n - 1),
            };
            prev = Some((l, n));
        }
        match prev {
            None => graph.tx_to_rx,
            Some((l, n)) => h * graph.irs_to_rx[l][n - 1],
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseGrid;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn unit_graph(l: usize) -> LinkChannelGraph {
        let mut g = LinkChannelGraph::zeros(l, 1).unwrap();
        g.set_tx_to_rx(one());
        for i in 0..l {
            g.tx_to_irs_mut(i)[0] = one();
            g.irs_to_rx_mut(i)[0] = one();
            for j in i + 1..l {
                g.irs_to_irs_mut(i, j).set(0, 0, one());
            }
        }
        g
    }

    #[test]
    fn four_ascending_paths_for_two_single_element_irs() {
        let g = unit_graph(2);
        let phases = PhaseAssignment::zeros(vec![PhaseGrid::new(4).unwrap(); 2], 1);
        assert_eq!(eval_effective_chain(&g, &phases).unwrap(), Complex64::new(4.0, 0.0));
    }

    #[test]
    fn expansion_composes_links() {
        let mut g = LinkChannelGraph::zeros(3, 2).unwrap();
        let c = |a: f64, b: f64| Complex64::new(a, b);
        g.tx_to_irs_mut(0).copy_from_slice(&[c(1.0, 1.0), c(2.0, 0.0)]);
        g.tx_to_irs_mut(1).copy_from_slice(&[c(0.5, 0.0), c(0.0, -1.0)]);
        g.irs_to_rx_mut(2).copy_from_slice(&[c(3.0, 0.0), c(0.0, 2.0)]);
        g.irs_to_rx_mut(1).copy_from_slice(&[c(1.5, 0.0), c(1.0, 1.0)]);
        g.irs_to_irs_mut(0, 2).set(1, 0, c(0.25, 0.5));
        g.irs_to_irs_mut(0, 1).set(0, 1, c(-1.0, 0.0));
        let t = expand_links_to_tensor(&g).unwrap();
        assert_eq!(t.len(), 27);
        // IRS 2 skipped
        assert_eq!(t.get(&[2, 0, 1]), c(2.0, 0.0) * c(0.25, 0.5) * c(3.0, 0.0));
        assert_eq!(t.get(&[1, 2, 0]), c(1.0, 1.0) * c(-1.0, 0.0) * c(1.0, 1.0));
        assert_eq!(t.get(&[0, 1, 0]), c(0.5, 0.0) * c(1.5, 0.0));
        assert_eq!(t.get(&[0, 0, 0]), g.tx_to_rx());
    }

    #[test]
    fn two_by_two_expansion_has_nine_entries() {
        let t = expand_links_to_tensor(&LinkChannelGraph::zeros(2, 2).unwrap()).unwrap();
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn no_inter_irs_links_reduce_to_one_hop_sums() {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let mut g = LinkChannelGraph::zeros(2, 2).unwrap();
        g.set_tx_to_rx(c(0.1, 0.2));
        g.tx_to_irs_mut(0).copy_from_slice(&[c(1.0, 0.0), c(0.0, 1.0)]);
        g.tx_to_irs_mut(1).copy_from_slice(&[c(2.0, 1.0), c(-1.0, 0.0)]);
        g.irs_to_rx_mut(0).copy_from_slice(&[c(0.5, 0.5), c(1.0, 0.0)]);
        g.irs_to_rx_mut(1).copy_from_slice(&[c(0.0, -1.0), c(3.0, 0.0)]);
        let grid = PhaseGrid::new(4).unwrap();
        let phases = PhaseAssignment::new(vec![grid; 2], vec![vec![1, 2], vec![3, 0]]).unwrap();
        let mut expected = g.tx_to_rx();
        for l in 0..2 {
            for n in 0..2 {
                expected += g.tx_to_irs(l)[n] * grid.phasor(phases.irs(l)[n]) * g.irs_to_rx(l)[n];
            }
        }
        let got = eval_effective_chain(&g, &phases).unwrap();
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn rejects_malformed_links() {
        let err = LinkChannelGraph::new(
            one(),
            vec![vec![one(); 2]; 2],
            vec![vec![one(); 2]; 2],
            vec![vec![], vec![]],
        )
        .unwrap_err();
        assert!(matches!(err, ChannelError::DimensionMismatch(_)));
    }

    #[test]
    fn json_roundtrip_preserves_graph() {
        let g = unit_graph(3);
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains(r#""tx_to_rx":[1.0,0.0]"#));
        let back: LinkChannelGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
