use std::path::Path;

use rand::Rng;

use super::{build_link_graph, place_random, AngleKind, AngleTable, Geometry, PropagationMap, ScenarioError};
use super::{DEFAULT_SPACING, DEFAULT_WAVELENGTH};
use crate::channel::{LinkChannelGraph, RadioParams};
use crate::kv::{parse_bool, split_list, KvError, KvFile};
use crate::phase::PhaseGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Fixed(Geometry),
    Random {
        num_irs: usize,
        spacing: f64,
        wavelength: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagationSpec {
    Fixed(PropagationMap),
    Random { eta: f64, forced: Vec<(usize, usize)> },
}

/// A deployment description from which channel realisations are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub placement: Placement,
    pub propagation: PropagationSpec,
    pub num_elements: usize,
    pub levels: Vec<usize>,
    pub zero_nlos: bool,
    /// `(kind, i, j, radians)` applied on top of the geometric angles.
    pub angle_overrides: Vec<(AngleKind, usize, usize, f64)>,
    pub radio: RadioParams,
    pub seed: Option<u64>,
}

const KEYS: &[&str] = &[
    "tx",
    "rx",
    "irs",
    "placement",
    "L",
    "N",
    "K",
    "wavelength",
    "spacing",
    "eta",
    "forced_los",
    "adjacency",
    "zero_nlos",
    "transmit_dbm",
    "noise_dbm",
    "seed",
    "angle.",
];

/// Two IRSs between a transmitter and a receiver 50 m apart, with only the
/// two-hop chain in LoS.
pub const DOUBLE_IRS_SCENARIO: &str = include_str!("../../fixtures/double_irs.cfg");

/// Eight IRSs at the candidate sites with the fixed 10-node adjacency.
pub const EIGHT_IRS_SCENARIO: &str = include_str!("../../fixtures/eight_irs.cfg");

fn line_err(kv: &KvFile, key: &str, msg: impl Into<String>) -> KvError {
    match kv.get(key) {
        Some(e) => KvError::Line { line: e.line, msg: format!("{key}: {}", msg.into()) },
        None => KvError::Other(format!("{key}: {}", msg.into())),
    }
}

fn parse_point(s: &str) -> Option<[f64; 2]> {
    let v: Vec<f64> = split_list(s).map(|x| x.parse().ok()).collect::<Option<_>>()?;
    (v.len() == 2).then(|| [v[0], v[1]])
}

fn parse_edge(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('-')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl Scenario {
    pub fn double_irs() -> Self {
        Self::parse(DOUBLE_IRS_SCENARIO, None).expect("bundled scenario parses")
    }

    pub fn eight_irs() -> Self {
        Self::parse(EIGHT_IRS_SCENARIO, None).expect("bundled scenario parses")
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| KvError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text, path.parent())
    }

    /// Parses the key-value scenario format; relative `adjacency` paths are
    /// resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let kv = KvFile::parse(text)?;
        kv.reject_unknown(KEYS)?;
        let spacing = kv.parsed::<f64>("spacing")?.unwrap_or(DEFAULT_SPACING);
        let wavelength = kv.parsed::<f64>("wavelength")?.unwrap_or(DEFAULT_WAVELENGTH);
        let placement_kind = kv.get("placement").map_or("fixed", |e| e.value.as_str());
        let placement = match placement_kind {
            "random" => {
                let num_irs = kv
                    .parsed::<usize>("L")?
                    .ok_or_else(|| KvError::Other("random placement needs L".into()))?;
                if num_irs == 0 {
                    return Err(line_err(&kv, "L", "must be positive").into());
                }
                Placement::Random { num_irs, spacing, wavelength }
            }
            "fixed" => {
                let point = |key: &str| -> Result<[f64; 2], KvError> {
                    let e = kv.get(key).ok_or_else(|| KvError::Other(format!("missing '{key}'")))?;
                    parse_point(&e.value).ok_or_else(|| line_err(&kv, key, "expected 'x, y'"))
                };
                let tx = point("tx")?;
                let rx = point("rx")?;
                let irs_entry = kv.get("irs").ok_or_else(|| KvError::Other("missing 'irs'".into()))?;
                let irs = irs_entry
                    .value
                    .split(';')
                    .map(|p| parse_point(p).ok_or_else(|| line_err(&kv, "irs", "expected 'x, y; x, y; …'")))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(l) = kv.parsed::<usize>("L")? {
                    if l != irs.len() {
                        return Err(line_err(&kv, "L", format!("{} IRS positions given", irs.len())).into());
                    }
                }
                let mut positions = vec![tx];
                positions.extend(irs);
                positions.push(rx);
                Placement::Fixed(Geometry::new(positions, spacing, wavelength)?)
            }
            other => return Err(line_err(&kv, "placement", format!("unknown placement '{other}'")).into()),
        };
        let num_irs = match &placement {
            Placement::Fixed(g) => g.num_irs(),
            Placement::Random { num_irs, .. } => *num_irs,
        };
        let nodes = num_irs + 2;

        let forced = match kv.get("forced_los") {
            None => Vec::new(),
            Some(e) => split_list(&e.value)
                .map(|s| {
                    parse_edge(s)
                        .filter(|&(a, b)| a != b && a < nodes && b < nodes)
                        .ok_or_else(|| line_err(&kv, "forced_los", format!("bad edge '{s}'")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let propagation = if let Some(e) = kv.get("adjacency") {
            let map = if e.value == "builtin:adjacency_10node" {
                PropagationMap::parse_grid(super::ADJACENCY_10_NODE)?
            } else {
                let path = match base_dir {
                    Some(dir) => dir.join(&e.value),
                    None => e.value.clone().into(),
                };
                let text = std::fs::read_to_string(&path).map_err(|err| KvError::Line {
                    line: e.line,
                    msg: format!("adjacency: cannot read {}: {err}", path.display()),
                })?;
                PropagationMap::parse_grid(&text)?
            };
            if map.num_nodes() != nodes {
                return Err(line_err(&kv, "adjacency", format!("expected {nodes} nodes, got {}", map.num_nodes())).into());
            }
            PropagationSpec::Fixed(map)
        } else {
            let eta = kv.parsed::<f64>("eta")?.unwrap_or(0.6);
            if !(0.0..=1.0).contains(&eta) {
                return Err(line_err(&kv, "eta", "must lie in [0, 1]").into());
            }
            PropagationSpec::Random { eta, forced }
        };

        let num_elements = kv.parsed::<usize>("N")?.unwrap_or(100);
        if num_elements == 0 {
            return Err(line_err(&kv, "N", "must be positive").into());
        }
        let levels = match kv.list::<usize>("K")? {
            None => vec![4; num_irs],
            Some(v) if v.len() == 1 => vec![v[0]; num_irs],
            Some(v) if v.len() == num_irs => v,
            Some(v) => return Err(line_err(&kv, "K", format!("{} values for {num_irs} IRSs", v.len())).into()),
        };
        if levels.iter().any(|&k| k < 2) {
            return Err(line_err(&kv, "K", "every K must be at least 2").into());
        }
        let zero_nlos = match kv.get("zero_nlos") {
            None => false,
            Some(e) => parse_bool(&e.value).map_err(|m| line_err(&kv, "zero_nlos", m))?,
        };

        let mut angle_overrides = Vec::new();
        for e in kv.entries().iter().filter(|e| e.key.starts_with("angle.")) {
            let bad = || KvError::Line {
                line: e.line,
                msg: format!("expected 'angle.<departure|arrival>.<i>.<j> = degrees', got '{}'", e.key),
            };
            let parts: Vec<&str> = e.key.split('.').collect();
            if parts.len() != 4 {
                return Err(bad().into());
            }
            let kind = match parts[1] {
                "departure" => AngleKind::Departure,
                "arrival" => AngleKind::Arrival,
                _ => return Err(bad().into()),
            };
            let i: usize = parts[2].parse().map_err(|_| bad())?;
            let j: usize = parts[3].parse().map_err(|_| bad())?;
            if i == j || i >= nodes || j >= nodes {
                return Err(bad().into());
            }
            let deg: f64 = e.value.parse().map_err(|_| KvError::Line {
                line: e.line,
                msg: format!("{}: expected degrees", e.key),
            })?;
            angle_overrides.push((kind, i, j, deg.to_radians()));
        }

        let transmit_dbm = kv.parsed::<f64>("transmit_dbm")?.unwrap_or(30.0);
        let noise_dbm = kv.parsed::<f64>("noise_dbm")?.unwrap_or(-98.0);
        let radio = RadioParams::from_dbm(transmit_dbm, noise_dbm)?;
        Ok(Self {
            placement,
            propagation,
            num_elements,
            levels,
            zero_nlos,
            angle_overrides,
            radio,
            seed: kv.parsed::<u64>("seed")?,
        })
    }

    pub fn num_irs(&self) -> usize {
        match &self.placement {
            Placement::Fixed(g) => g.num_irs(),
            Placement::Random { num_irs, .. } => *num_irs,
        }
    }

    pub fn grids(&self) -> Vec<PhaseGrid> {
        self.levels
            .iter()
            .map(|&k| PhaseGrid::new(k).expect("levels validated on parse"))
            .collect()
    }

    /// Draws placement (if random), propagation (if random) and NLoS
    /// coefficients, in that order, from `rng`.
    pub fn realize<R: Rng + ?Sized>(
        &self,
        num_elements: usize,
        rng: &mut R,
    ) -> Result<(Geometry, PropagationMap, LinkChannelGraph), ScenarioError> {
        let geometry = match &self.placement {
            Placement::Fixed(g) => g.clone(),
            Placement::Random { num_irs, spacing, wavelength } => {
                let g = place_random(*num_irs, rng)?;
                Geometry::new(g.positions().to_vec(), *spacing, *wavelength)?
            }
        };
        let propagation = match &self.propagation {
            PropagationSpec::Fixed(m) => m.clone(),
            PropagationSpec::Random { eta, forced } => {
                PropagationMap::sample(geometry.num_nodes(), *eta, forced, rng)?
            }
        };
        let mut angles = AngleTable::from_geometry(&geometry);
        for &(kind, i, j, rad) in &self.angle_overrides {
            angles.set(kind, i, j, rad);
        }
        let graph = build_link_graph(&geometry, &angles, &propagation, num_elements, self.zero_nlos, rng)?;
        Ok((geometry, propagation, graph))
    }
}
