use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{AngleTable, Geometry, PropagationMap, ScenarioError};
use crate::channel::{CMatrix, LinkChannelGraph};

/// Pathloss `PL = 10^{−dB(d)/20}` with
/// `dB = 30 + 22·log10 d` (LoS) or `32.6 + 36.7·log10 d` (NLoS).
///
/// Link coefficients are scaled by `√PL`.
pub fn pathloss(distance: f64, los: bool) -> Result<f64, ScenarioError> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(ScenarioError::NonPositiveDistance(distance));
    }
    let db = if los {
        30.0 + 22.0 * distance.log10()
    } else {
        32.6 + 36.7 * distance.log10()
    };
    Ok(10f64.powf(-db / 20.0))
}

/// Channel block between two nodes: a scalar for the direct pair, a vector
/// when exactly one end is an IRS, a matrix between two IRSs.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkBlock {
    Scalar(Complex64),
    Vector(Vec<Complex64>),
    Matrix(CMatrix),
}

impl LinkBlock {
    pub fn entries(&self) -> &[Complex64] {
        match self {
            LinkBlock::Scalar(z) => std::slice::from_ref(z),
            LinkBlock::Vector(v) => v,
            LinkBlock::Matrix(m) => &m.data,
        }
    }
}

fn check_pair(geometry: &Geometry, i: usize, j: usize) -> Result<(), ScenarioError> {
    if i >= j || j >= geometry.num_nodes() {
        return Err(ScenarioError::InvalidGeometry(format!(
            "link {i}-{j} must satisfy {i} < {j} < {}",
            geometry.num_nodes()
        )));
    }
    Ok(())
}

/// Steering-vector channel of the LoS link from node `i` to node `j > i`.
pub fn los_link_channels(
    geometry: &Geometry,
    angles: &AngleTable,
    i: usize,
    j: usize,
    num_elements: usize,
) -> Result<LinkBlock, ScenarioError> {
    check_pair(geometry, i, j)?;
    let rx = geometry.num_nodes() - 1;
    let d = geometry.distance(i, j);
    let amp = pathloss(d, true)?.sqrt();
    let k = TAU / geometry.wavelength();
    let common = Complex64::from_polar(amp, -k * d);
    let element = |n: usize, angle: f64| Complex64::from_polar(1.0, -k * geometry.spacing() * n as f64 * angle.cos());
    Ok(match (i == 0, j == rx) {
        (true, true) => LinkBlock::Scalar(common),
        (true, false) => {
            let psi = angles.arrival(j, i)?;
            LinkBlock::Vector((0..num_elements).map(|n| common * element(n, psi)).collect())
        }
        (false, true) => {
            let theta = angles.departure(i, j)?;
            LinkBlock::Vector((0..num_elements).map(|n| common * element(n, theta)).collect())
        }
        (false, false) => {
            let theta = angles.departure(i, j)?;
            let psi = angles.arrival(j, i)?;
            let out: Vec<Complex64> = (0..num_elements).map(|n| element(n, theta)).collect();
            let inc: Vec<Complex64> = (0..num_elements).map(|n| element(n, psi)).collect();
            LinkBlock::Matrix(CMatrix::from_fn(num_elements, num_elements, |a, b| common * out[a] * inc[b]))
        }
    })
}

/// Circularly-symmetric unit-variance complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Rayleigh channel of the NLoS link from node `i` to node `j > i`, i.i.d.
/// per entry.
pub fn nlos_link_channels<R: Rng + ?Sized>(
    geometry: &Geometry,
    i: usize,
    j: usize,
    num_elements: usize,
    rng: &mut R,
) -> Result<LinkBlock, ScenarioError> {
    check_pair(geometry, i, j)?;
    let rx = geometry.num_nodes() - 1;
    let amp = pathloss(geometry.distance(i, j), false)?.sqrt();
    let mut draw = || amp * complex_gaussian(rng);
    Ok(match (i == 0, j == rx) {
        (true, true) => LinkBlock::Scalar(draw()),
        (true, false) | (false, true) => LinkBlock::Vector((0..num_elements).map(|_| draw()).collect()),
        (false, false) => LinkBlock::Matrix(CMatrix::from_fn(num_elements, num_elements, |_, _| draw())),
    })
}

/// Assembles every link of the deployment.
///
/// Pairs are generated in the order `(i, j)`, `i < j`, row by row; NLoS pairs
/// consume random draws unless `zero_nlos` is set, in which case they are
/// exactly zero.
pub fn build_link_graph<R: Rng + ?Sized>(
    geometry: &Geometry,
    angles: &AngleTable,
    propagation: &PropagationMap,
    num_elements: usize,
    zero_nlos: bool,
    rng: &mut R,
) -> Result<LinkChannelGraph, ScenarioError> {
    let nodes = geometry.num_nodes();
    if propagation.num_nodes() != nodes || angles.num_nodes() != nodes {
        return Err(ScenarioError::InvalidPropagation(format!(
            "geometry has {nodes} nodes, propagation map {} and angle table {}",
            propagation.num_nodes(),
            angles.num_nodes()
        )));
    }
    if num_elements == 0 {
        return Err(ScenarioError::InvalidGeometry("N must be positive".into()));
    }
    let num_irs = geometry.num_irs();
    let rx = nodes - 1;
    let mut graph = LinkChannelGraph::zeros(num_irs, num_elements)?;
    for i in 0..nodes {
        for j in i + 1..nodes {
            let block = if propagation.is_los(i, j) {
                los_link_channels(geometry, angles, i, j, num_elements)?
            } else if zero_nlos {
                continue;
            } else {
                nlos_link_channels(geometry, i, j, num_elements, rng)?
            };
            match (i == 0, j == rx, block) {
                (true, true, LinkBlock::Scalar(z)) => graph.set_tx_to_rx(z),
                (true, false, LinkBlock::Vector(v)) => graph.tx_to_irs_mut(j - 1).copy_from_slice(&v),
                (false, true, LinkBlock::Vector(v)) => graph.irs_to_rx_mut(i - 1).copy_from_slice(&v),
                (false, false, LinkBlock::Matrix(m)) => *graph.irs_to_irs_mut(i - 1, j - 1) = m,
                _ => unreachable!("block shape follows the pair"),
            }
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CascadedChannel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn two_irs() -> Geometry {
        Geometry::with_default_array([0.0, 0.0], &[[2.0, 5.0], [48.0, 5.0]], [50.0, 0.0]).unwrap()
    }

    #[test]
    fn pathloss_fixed_points() {
        assert!((pathloss(1.0, true).unwrap() - 10f64.powf(-1.5)).abs() < 1e-15);
        assert!((pathloss(1.0, false).unwrap() - 10f64.powf(-1.63)).abs() < 1e-15);
        assert!((pathloss(10.0, true).unwrap() - 0.002_511_886_431_509_58).abs() < 1e-15);
        assert!(matches!(pathloss(0.0, true), Err(ScenarioError::NonPositiveDistance(_))));
    }

    #[test]
    fn first_element_has_no_offset_and_broadside_is_flat() {
        let g = two_irs();
        let mut angles = AngleTable::from_geometry(&g);
        angles.set(super::super::AngleKind::Arrival, 1, 0, FRAC_PI_2);
        let LinkBlock::Vector(v) = los_link_channels(&g, &angles, 0, 1, 5).unwrap() else {
            panic!("tx to IRS is a vector")
        };
        let d = g.distance(0, 1);
        let expected = Complex64::from_polar(pathloss(d, true).unwrap().sqrt(), -TAU * d / g.wavelength());
        assert!((v[0] - expected).norm() < 1e-12 * expected.norm());
        for z in &v {
            assert!((z - v[0]).norm() < 1e-15);
        }
    }

    #[test]
    fn half_wavelength_endfire_step_is_pi() {
        let g = two_irs();
        let mut angles = AngleTable::from_geometry(&g);
        angles.set(super::super::AngleKind::Departure, 2, 3, 0.0);
        let LinkBlock::Vector(v) = los_link_channels(&g, &angles, 2, 3, 2).unwrap() else {
            panic!()
        };
        let step = (v[1] / v[0]).arg();
        assert!((step.abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn missing_angle_is_an_error() {
        let g = two_irs();
        let angles = AngleTable::empty(4);
        assert!(matches!(
            los_link_channels(&g, &angles, 1, 2, 3),
            Err(ScenarioError::MissingAngle { .. })
        ));
        assert!(los_link_channels(&g, &angles, 0, 3, 3).is_ok());
    }

    #[test]
    fn zero_nlos_without_direct_edge_gives_zero_direct() {
        let g = two_irs();
        let angles = AngleTable::from_geometry(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let prop = PropagationMap::sample(4, 0.0, &super::super::chain_edges(2), &mut rng).unwrap();
        let graph = build_link_graph(&g, &angles, &prop, 3, true, &mut rng).unwrap();
        assert_eq!(graph.direct(), Complex64::new(0.0, 0.0));
        assert!(graph.irs_to_rx(0).iter().all(|z| z.norm() == 0.0));
        assert!(graph.irs_to_irs(0, 1).data.iter().all(|z| z.norm() > 0.0));
    }

    #[test]
    fn nlos_is_deterministic_per_seed() {
        let g = two_irs();
        let a = nlos_link_channels(&g, 1, 2, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = nlos_link_channels(&g, 1, 2, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
