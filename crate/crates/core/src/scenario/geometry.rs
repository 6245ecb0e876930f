use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// Node positions (meters) plus array parameters.
///
/// Node 0 is the transmitter, nodes `1..=L` the IRSs in visiting order and
/// node `L+1` the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    positions: Vec<[f64; 2]>,
    spacing: f64,
    wavelength: f64,
}

impl Geometry {
    pub fn new(positions: Vec<[f64; 2]>, spacing: f64, wavelength: f64) -> Result<Self, ScenarioError> {
        if positions.len() < 3 {
            return Err(ScenarioError::InvalidGeometry(
                "need a transmitter, at least one IRS and a receiver".into(),
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(ScenarioError::InvalidGeometry(format!(
                "spacing and wavelength must be positive, got {spacing} and {wavelength}"
            )));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(ScenarioError::InvalidGeometry(format!("node {i} has a non-finite coordinate")));
            }
            for (j, q) in positions.iter().enumerate().skip(i + 1) {
                if p == q {
                    return Err(ScenarioError::InvalidGeometry(format!(
                        "nodes {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self {
            positions,
            spacing,
            wavelength,
        })
    }

    /// Transmitter, IRSs and receiver with the default half-wavelength array
    /// (`ξ = 0.03 m`, `λ = 0.06 m`).
    pub fn with_default_array(tx: [f64; 2], irs: &[[f64; 2]], rx: [f64; 2]) -> Result<Self, ScenarioError> {
        let mut positions = vec![tx];
        positions.extend_from_slice(irs);
        positions.push(rx);
        Self::new(positions, DEFAULT_SPACING, DEFAULT_WAVELENGTH)
    }

    pub fn num_irs(&self) -> usize {
        self.positions.len() - 2
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.positions[i], self.positions[j]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    /// Direction from node `i` towards node `j`, in `[0, 2π)`.
    pub fn bearing(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.positions[i], self.positions[j]);
        (q[1] - p[1]).atan2(q[0] - p[0]).rem_euclid(TAU)
    }
}

pub const DEFAULT_SPACING: f64 = 0.03;
pub const DEFAULT_WAVELENGTH: f64 = 0.06;

/// Random placement used for the LoS-probability study: transmitter at
/// (5,5), receiver at (95,95), IRS `l` uniform in the `l`-th diagonal square
/// `[5+90(l−1)/L, 5+90l/L]²`.
pub fn place_random<R: Rng + ?Sized>(num_irs: usize, rng: &mut R) -> Result<Geometry, ScenarioError> {
    if num_irs == 0 {
        return Err(ScenarioError::InvalidGeometry("need at least one IRS".into()));
    }
    let irs: Vec<[f64; 2]> = (1..=num_irs)
        .map(|l| {
            let (lo, hi) = irs_square(l, num_irs);
            [rng.random_range(lo..hi), rng.random_range(lo..hi)]
        })
        .collect();
    Geometry::with_default_array([5.0, 5.0], &irs, [95.0, 95.0])
}

/// Side interval of the square that IRS `l` (1-based) is placed in.
pub fn irs_square(l: usize, num_irs: usize) -> (f64, f64) {
    let w = 90.0 / num_irs as f64;
    (5.0 + w * (l - 1) as f64, 5.0 + w * l as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleKind {
    Departure,
    Arrival,
}

impl std::fmt::Display for AngleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AngleKind::Departure => "departure",
            AngleKind::Arrival => "arrival",
        })
    }
}

/// Departure angles `ϑ_{i,j}` (leaving node `i` towards `j`) and arrival
/// angles `ψ_{i,j}` (arriving at node `i` from `j`), radians in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleTable {
    num_nodes: usize,
    departure: Vec<Option<f64>>,
    arrival: Vec<Option<f64>>,
}

impl AngleTable {
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            departure: vec![None; num_nodes * num_nodes],
            arrival: vec![None; num_nodes * num_nodes],
        }
    }

    /// Both angles of every ordered pair set to the planar bearing from `i`
    /// towards `j`.
    pub fn from_geometry(geometry: &Geometry) -> Self {
        let n = geometry.num_nodes();
        let mut t = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let b = geometry.bearing(i, j);
                    t.departure[i * n + j] = Some(b);
                    t.arrival[i * n + j] = Some(b);
                }
            }
        }
        t
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn set(&mut self, kind: AngleKind, i: usize, j: usize, radians: f64) {
        let v = Some(radians.rem_euclid(TAU));
        let k = i * self.num_nodes + j;
        match kind {
            AngleKind::Departure => self.departure[k] = v,
            AngleKind::Arrival => self.arrival[k] = v,
        }
    }

    pub fn get(&self, kind: AngleKind, i: usize, j: usize) -> Result<f64, ScenarioError> {
        let k = i * self.num_nodes + j;
        let v = match kind {
            AngleKind::Departure => self.departure.get(k),
            AngleKind::Arrival => self.arrival.get(k),
        };
        v.copied().flatten().ok_or(ScenarioError::MissingAngle { kind, from: i, to: j })
    }

    pub fn departure(&self, i: usize, j: usize) -> Result<f64, ScenarioError> {
        self.get(AngleKind::Departure, i, j)
    }

    pub fn arrival(&self, i: usize, j: usize) -> Result<f64, ScenarioError> {
        self.get(AngleKind::Arrival, i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bearing_quadrants() {
        let g = Geometry::with_default_array([0.0, 0.0], &[[1.0, 0.0]], [0.0, -1.0]).unwrap();
        assert_eq!(g.bearing(0, 1), 0.0);
        assert!((g.bearing(1, 0) - std::f64::consts::PI).abs() < 1e-15);
        assert!((g.bearing(0, 2) - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert!((g.distance(1, 2) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coincident_nodes_rejected() {
        assert!(Geometry::with_default_array([0.0, 0.0], &[[0.0, 0.0]], [1.0, 1.0]).is_err());
        assert!(Geometry::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 0.0, 0.06).is_err());
    }

    #[test]
    fn random_placement_stays_in_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for l in 1..=4 {
            for _ in 0..50 {
                let g = place_random(l, &mut rng).unwrap();
                assert_eq!(g.positions()[0], [5.0, 5.0]);
                assert_eq!(g.positions()[l + 1], [95.0, 95.0]);
                for (i, p) in g.positions()[1..=l].iter().enumerate() {
                    let (lo, hi) = irs_square(i + 1, l);
                    assert!(p.iter().all(|&c| c >= lo && c <= hi));
                }
            }
        }
        assert_eq!(irs_square(1, 1), (5.0, 95.0));
        assert_eq!(irs_square(2, 3), (35.0, 65.0));
    }

    #[test]
    fn angles_wrap_and_report_missing() {
        let mut t = AngleTable::empty(3);
        t.set(AngleKind::Arrival, 1, 0, -std::f64::consts::FRAC_PI_2);
        assert!((t.arrival(1, 0).unwrap() - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(
            t.departure(1, 2),
            Err(ScenarioError::MissingAngle { kind: AngleKind::Departure, from: 1, to: 2 })
        );
    }
}
