use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// Symmetric LoS/NLoS status of every node pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationMap {
    num_nodes: usize,
    los: Vec<bool>,
    los_probability: Option<f64>,
}

impl PropagationMap {
    pub fn from_matrix(rows: Vec<Vec<bool>>) -> Result<Self, ScenarioError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(ScenarioError::InvalidPropagation("adjacency matrix must be square".into()));
        }
        for i in 0..n {
            if rows[i][i] {
                return Err(ScenarioError::InvalidPropagation(format!("diagonal entry {i} must be 0")));
            }
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(ScenarioError::InvalidPropagation(format!(
                        "adjacency matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            num_nodes: n,
            los: rows.into_iter().flatten().collect(),
            los_probability: None,
        })
    }

    /// Parses a whitespace- or comma-separated grid of 0/1 entries.
    pub fn parse_grid(text: &str) -> Result<Self, ScenarioError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| match s {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(ScenarioError::InvalidPropagation(format!(
                        "line {}: expected 0 or 1, got '{other}'",
                        i + 1
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_matrix(rows)
    }

    pub fn all(num_nodes: usize, los: bool) -> Self {
        let mut m = Self {
            num_nodes,
            los: vec![los; num_nodes * num_nodes],
            los_probability: None,
        };
        for i in 0..num_nodes {
            m.los[i * num_nodes + i] = false;
        }
        m
    }

    /// Every non-forced pair LoS independently with probability `eta`.
    ///
    /// Pairs are visited in the order `(i, j)`, `i < j`, row by row, with one
    /// uniform draw per non-forced pair.
    pub fn sample<R: Rng + ?Sized>(
        num_nodes: usize,
        eta: f64,
        forced: &[(usize, usize)],
        rng: &mut R,
    ) -> Result<Self, ScenarioError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(ScenarioError::InvalidPropagation(format!(
                "LoS probability must lie in [0,1], got {eta}"
            )));
        }
        let mut m = Self::all(num_nodes, false);
        for &(i, j) in forced {
            if i == j || i >= num_nodes || j >= num_nodes {
                return Err(ScenarioError::InvalidPropagation(format!("bad forced edge {i}-{j}")));
            }
            m.set(i, j, true);
        }
        for i in 0..num_nodes {
            for j in i + 1..num_nodes {
                if m.is_los(i, j) {
                    continue;
                }
                let u: f64 = rng.random();
                m.set(i, j, u < eta);
            }
        }
        m.los_probability = Some(eta);
        Ok(m)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn los_probability(&self) -> Option<f64> {
        self.los_probability
    }

    pub fn is_los(&self, i: usize, j: usize) -> bool {
        self.los[i * self.num_nodes + j]
    }

    pub fn set(&mut self, i: usize, j: usize, los: bool) {
        self.los[i * self.num_nodes + j] = los;
        self.los[j * self.num_nodes + i] = los;
    }

    /// Keeps only the rows/columns of `nodes`, in that order.
    pub fn select(&self, nodes: &[usize]) -> Self {
        let rows = nodes
            .iter()
            .map(|&i| nodes.iter().map(|&j| i != j && self.is_los(i, j)).collect())
            .collect();
        let mut m = Self::from_matrix(rows).expect("sub-matrix of a valid map");
        m.los_probability = self.los_probability;
        m
    }
}

/// The chain `tx–1, 1–2, …, L–rx` of a system with `num_irs` IRSs.
pub fn chain_edges(num_irs: usize) -> Vec<(usize, usize)> {
    (0..=num_irs).map(|i| (i, i + 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn extremes_of_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let forced = chain_edges(2);
        let full = PropagationMap::sample(4, 1.0, &forced, &mut rng).unwrap();
        let none = PropagationMap::sample(4, 0.0, &forced, &mut rng).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(full.is_los(i, j), i != j);
                let chain = i.abs_diff(j) == 1;
                assert_eq!(none.is_los(i, j), chain);
            }
        }
    }

    #[test]
    fn grid_parser_checks_shape() {
        assert!(PropagationMap::parse_grid("0 1\n1 0\n").is_ok());
        assert!(PropagationMap::parse_grid("0 1\n0 0\n").is_err());
        assert!(PropagationMap::parse_grid("1 0\n0 0\n").is_err());
        assert!(PropagationMap::parse_grid("0 2\n2 0\n").is_err());
    }

    #[test]
    fn select_reorders() {
        let m = PropagationMap::parse_grid("0 1 0\n1 0 1\n0 1 0").unwrap();
        let s = m.select(&[2, 1]);
        assert!(s.is_los(0, 1));
        assert!(!m.select(&[0, 2]).is_los(0, 1));
    }
}
