use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::channel::NoiseMode;
use crate::kv::{parse_bool, KvFile};
use crate::phase::PhaseGrid;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Scaling,
    Compare,
    Conditions,
    Examples,
    LemmaCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Scaling => "scaling",
            Self::Compare => "compare",
            Self::Conditions => "conditions",
            Self::Examples => "examples",
            Self::LemmaCheck => "lemma-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "scaling" => Self::Scaling,
            "compare" => Self::Compare,
            "conditions" => Self::Conditions,
            "examples" => Self::Examples,
            "lemma-check" | "lemma_check" => Self::LemmaCheck,
            _ => return Err(format!("unknown experiment '{s}'")),
        })
    }
}

/// How many random samples per IRS the blind method gets at a given `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum TRule {
    Fixed(usize),
    /// `⌈c·N⌉`.
    Linear(f64),
    /// `⌈c·N²·(ln N)³⌉`.
    Theory(f64),
}

impl TRule {
    pub fn resolve(self, n: usize) -> Result<usize, ExperimentError> {
        let t = match self {
            TRule::Fixed(t) => t as f64,
            TRule::Linear(c) => (c * n as f64).ceil(),
            TRule::Theory(c) => {
                let nf = n as f64;
                (c * nf * nf * nf.ln().powi(3)).ceil()
            }
        };
        if !(t.is_finite() && t >= 1.0 && t <= u32::MAX as f64) {
            return Err(ExperimentError::Config(format!("T rule {self} gives no usable T at N = {n}")));
        }
        Ok(t as usize)
    }
}

impl fmt::Display for TRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TRule::Fixed(t) => write!(f, "fixed({t})"),
            TRule::Linear(c) => write!(f, "linear({c})"),
            TRule::Theory(c) => write!(f, "theory({c})"),
        }
    }
}

impl FromStr for TRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (name, arg) = match s.split_once('(') {
            Some((name, rest)) => {
                let arg = rest.strip_suffix(')').ok_or_else(|| format!("unclosed '(' in T rule '{s}'"))?;
                (name.trim(), Some(arg.trim()))
            }
            None => match s.parse::<usize>() {
                Ok(t) => return Ok(TRule::Fixed(t)),
                Err(_) => (s, None),
            },
        };
        let num = |default: f64| -> Result<f64, String> {
            match arg {
                None | Some("") => Ok(default),
                Some(a) => a.parse().map_err(|_| format!("bad number '{a}' in T rule")),
            }
        };
        let rule = match name {
            "fixed" => {
                let a = arg.ok_or("fixed needs a value, e.g. fixed(1000)")?;
                TRule::Fixed(a.parse().map_err(|_| format!("bad sample count '{a}'"))?)
            }
            "linear" => TRule::Linear(num(20.0)?),
            "theory" => TRule::Theory(num(1.0)?),
            _ => return Err(format!("unknown T rule '{s}'")),
        };
        match rule {
            TRule::Fixed(0) => Err("T must be positive".into()),
            TRule::Linear(c) | TRule::Theory(c) if !(c > 0.0 && c.is_finite()) => {
                Err("T rule constant must be positive".into())
            }
            r => Ok(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Zero,
    Random,
    VirtualSingle,
    Csm,
    Cpp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Zero, Method::Random, Method::VirtualSingle, Method::Csm, Method::Cpp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Zero => "zero",
            Method::Random => "random",
            Method::VirtualSingle => "virtual-single",
            Method::Csm => "csm",
            Method::Cpp => "cpp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "zero" => Method::Zero,
            "random" => Method::Random,
            "virtual-single" | "virtual_single" => Method::VirtualSingle,
            "csm" => Method::Csm,
            "cpp" | "cpp-oracle" => Method::Cpp,
            _ => return Err(format!("unknown method '{s}'")),
        })
    }
}

/// Where channels come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    /// Generated instances: single-IRS Gaussian channels for `L = 1`, random
    /// D1–D3 instances otherwise.
    Synthetic,
    Scenario { name: String, scenario: Box<Scenario> },
}

impl ChannelSource {
    /// `synthetic`, `builtin:double_irs`, `builtin:eight_irs` or a path
    /// (relative paths resolve against `base_dir`).
    pub fn parse(spec: &str, base_dir: Option<&Path>) -> Result<Self, ExperimentError> {
        let scenario = match spec {
            "synthetic" => return Ok(ChannelSource::Synthetic),
            "builtin:double_irs" => Scenario::double_irs(),
            "builtin:eight_irs" => Scenario::eight_irs(),
            path => {
                let p = Path::new(path);
                let p = match base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                Scenario::from_file(&p).map_err(|e| ExperimentError::Config(format!("scenario {}: {e}", p.display())))?
            }
        };
        Ok(ChannelSource::Scenario {
            name: spec.to_string(),
            scenario: Box::new(scenario),
        })
    }

    pub fn name(&self) -> &str {
        match self {
            ChannelSource::Synthetic => "synthetic",
            ChannelSource::Scenario { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: ChannelSource,
    pub n_sweep: Vec<usize>,
    pub num_irs: usize,
    /// One entry per IRS.
    pub levels: Vec<usize>,
    pub t_rule: TRule,
    pub trials: usize,
    pub seed: u64,
    pub noise_mode: NoiseMode,
    pub output: Option<PathBuf>,
    pub methods: Vec<Method>,
    /// LoS probabilities for the conditions study.
    pub eta: Vec<f64>,
    /// Lower-order channel scale for synthetic D-instances, as a fraction of
    /// the largest scale that keeps D3 feasible.
    pub lower_fraction: f64,
    /// Which examples to run (1, 2, 3).
    pub examples: Vec<u8>,
    /// Record wall time per row (makes output nondeterministic).
    pub timing: bool,
    /// Collect per-trial JSON details.
    pub json: bool,
    /// Keep every CSM sample batch in the JSON details.
    pub trace: bool,
    pub threads: Option<usize>,
}

const KEYS: &[&str] = &[
    "experiment",
    "scenario",
    "N",
    "L",
    "K",
    "T",
    "trials",
    "seed",
    "noise_mode",
    "output",
    "methods",
    "eta",
    "lower_fraction",
    "examples",
    "timing",
    "json",
    "trace",
    "threads",
];

/// Flag values that override a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub json: Option<bool>,
    pub trace: Option<bool>,
    /// Raw `key=value` pairs using the config file keys.
    pub set: Vec<(String, String)>,
}

fn default_levels(num_irs: usize) -> usize {
    (2 * num_irs).max(4)
}

impl ExperimentConfig {
    /// Defaults for each experiment kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            source: ChannelSource::Synthetic,
            n_sweep: vec![8, 16, 32, 64, 128],
            num_irs: 2,
            levels: vec![4, 4],
            t_rule: TRule::Linear(20.0),
            trials: 10,
            seed: 1,
            noise_mode: NoiseMode::Noiseless,
            output: None,
            methods: vec![Method::Csm, Method::Cpp],
            eta: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            lower_fraction: 0.5,
            examples: vec![1, 2, 3],
            timing: false,
            json: false,
            trace: false,
            threads: None,
        };
        match kind {
            ExperimentKind::Scaling => base,
            ExperimentKind::Compare => {
                let scenario = Scenario::double_irs();
                ExperimentConfig {
                    n_sweep: vec![scenario.num_elements],
                    levels: scenario.levels.clone(),
                    num_irs: scenario.num_irs(),
                    source: ChannelSource::Scenario {
                        name: "builtin:double_irs".into(),
                        scenario: Box::new(scenario),
                    },
                    t_rule: TRule::Fixed(1000),
                    trials: 20,
                    methods: Method::ALL.to_vec(),
                    ..base
                }
            }
            ExperimentKind::Conditions => ExperimentConfig {
                n_sweep: vec![100],
                trials: 200,
                methods: Vec::new(),
                ..base
            },
            ExperimentKind::Examples => ExperimentConfig {
                n_sweep: vec![17, 33, 65],
                trials: 1,
                methods: vec![Method::Cpp],
                ..base
            },
            ExperimentKind::LemmaCheck => ExperimentConfig {
                n_sweep: vec![8],
                trials: 100,
                lower_fraction: 0.9,
                methods: vec![Method::Cpp],
                ..base
            },
        }
    }

    /// Builds a config from an optional key-value file plus overrides; the
    /// overrides win. `kind` (e.g. from a subcommand) wins over the file's
    /// `experiment` key.
    pub fn load(kind: Option<ExperimentKind>, file: Option<&Path>, overrides: &Overrides) -> Result<Self, ExperimentError> {
        let mut kv = match file {
            Some(p) => KvFile::read(p)?,
            None => KvFile::default(),
        };
        for (k, v) in &overrides.set {
            kv.push(k, v);
        }
        let base_dir = file.and_then(Path::parent);
        let mut cfg = Self::from_kv(kind, &kv, base_dir)?;
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(t) = overrides.trials {
            cfg.trials = t;
        }
        if let Some(o) = &overrides.output {
            cfg.output = Some(o.clone());
        }
        if let Some(t) = overrides.threads {
            cfg.threads = Some(t);
        }
        if let Some(j) = overrides.json {
            cfg.json = j;
        }
        if let Some(t) = overrides.trace {
            cfg.trace = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ExperimentError> {
        let cfg = Self::from_kv(None, &KvFile::parse(text)?, base_dir)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_kv(kind: Option<ExperimentKind>, kv: &KvFile, base_dir: Option<&Path>) -> Result<Self, ExperimentError> {
        kv.reject_unknown(KEYS)?;
        let kind = match kind {
            Some(k) => k,
            None => kv
                .parsed::<ExperimentKind>("experiment")?
                .ok_or_else(|| ExperimentError::Config("no experiment kind given".into()))?,
        };
        let mut cfg = Self::defaults(kind);
        if let Some(e) = kv.get("scenario") {
            cfg.source = ChannelSource::parse(e.value.trim(), base_dir)?;
            if let ChannelSource::Scenario { scenario, .. } = &cfg.source {
                cfg.num_irs = scenario.num_irs();
                cfg.levels = scenario.levels.clone();
                cfg.n_sweep = vec![scenario.num_elements];
                if let Some(seed) = scenario.seed {
                    cfg.seed = seed;
                }
            }
        }
        if let Some(l) = kv.parsed::<usize>("L")? {
            if let ChannelSource::Scenario { scenario, .. } = &cfg.source {
                if scenario.num_irs() != l {
                    return Err(ExperimentError::Config(format!(
                        "L = {l} but the scenario has {} IRSs",
                        scenario.num_irs()
                    )));
                }
            }
            cfg.num_irs = l;
            cfg.levels = vec![default_levels(l); l];
        }
        if let Some(ks) = kv.list::<usize>("K")? {
            cfg.levels = match ks.len() {
                1 => vec![ks[0]; cfg.num_irs],
                _ => ks,
            };
        }
        if let Some(ns) = kv.list::<usize>("N")? {
            cfg.n_sweep = ns;
        }
        if let Some(t) = kv.parsed::<TRule>("T")? {
            cfg.t_rule = t;
        }
        if let Some(t) = kv.parsed::<usize>("trials")? {
            cfg.trials = t;
        }
        if let Some(s) = kv.parsed::<u64>("seed")? {
            cfg.seed = s;
        }
        if let Some(m) = kv.parsed::<NoiseMode>("noise_mode")? {
            cfg.noise_mode = m;
        }
        if let Some(e) = kv.get("output") {
            cfg.output = Some(PathBuf::from(e.value.trim()));
        }
        if let Some(m) = kv.list::<Method>("methods")? {
            cfg.methods = m;
        }
        if let Some(e) = kv.list::<f64>("eta")? {
            cfg.eta = e;
        }
        if let Some(f) = kv.parsed::<f64>("lower_fraction")? {
            cfg.lower_fraction = f;
        }
        if let Some(x) = kv.list::<u8>("examples")? {
            cfg.examples = x;
        }
        for (key, slot) in [("timing", &mut cfg.timing), ("json", &mut cfg.json), ("trace", &mut cfg.trace)] {
            if let Some(e) = kv.get(key) {
                *slot = parse_bool(&e.value).map_err(|m| ExperimentError::Config(format!("line {}: {key}: {m}", e.line)))?;
            }
        }
        if let Some(t) = kv.parsed::<usize>("threads")? {
            cfg.threads = Some(t);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.num_irs == 0 {
            return bad("L must be positive".into());
        }
        if self.n_sweep.is_empty() || self.n_sweep.contains(&0) {
            return bad("N sweep must be a nonempty list of positive counts".into());
        }
        if self.levels.len() != self.num_irs {
            return bad(format!("{} phase-level counts for L = {}", self.levels.len(), self.num_irs));
        }
        for &k in &self.levels {
            PhaseGrid::new(k).map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        for &n in &self.n_sweep {
            self.t_rule.resolve(n)?;
        }
        match self.kind {
            ExperimentKind::Compare if matches!(self.source, ChannelSource::Synthetic) => {
                bad("compare needs a scenario".into())
            }
            ExperimentKind::Scaling | ExperimentKind::Compare if self.methods.is_empty() => {
                bad("no methods selected".into())
            }
            ExperimentKind::Conditions if self.eta.iter().any(|e| !(0.0..=1.0).contains(e)) || self.eta.is_empty() => {
                bad("eta values must lie in [0, 1]".into())
            }
            ExperimentKind::Conditions | ExperimentKind::LemmaCheck if self.num_irs < 2 => {
                bad(format!("{} needs L ≥ 2", self.kind))
            }
            ExperimentKind::Examples if self.n_sweep.iter().any(|n| n % 2 == 0) => {
                bad("examples need odd N".into())
            }
            ExperimentKind::Examples if self.examples.is_empty() || self.examples.iter().any(|x| !(1..=3).contains(x)) => {
                bad("examples must be drawn from 1, 2, 3".into())
            }
            ExperimentKind::Scaling | ExperimentKind::LemmaCheck
                if !(self.lower_fraction >= 0.0 && self.lower_fraction < 1.0) =>
            {
                bad("lower_fraction must lie in [0, 1)".into())
            }
            _ => Ok(()),
        }
    }

    pub fn grids(&self) -> Vec<PhaseGrid> {
        self.levels.iter().map(|&k| PhaseGrid::new(k).expect("validated")).collect()
    }

    /// `K` column text: the common value, or values joined by `/`.
    pub fn levels_label(&self) -> String {
        if self.levels.windows(2).all(|w| w[0] == w[1]) {
            self.levels[0].to_string()
        } else {
            self.levels.iter().map(usize::to_string).collect::<Vec<_>>().join("/")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_rules_parse_and_resolve() {
        assert_eq!("fixed(1000)".parse::<TRule>().unwrap().resolve(50).unwrap(), 1000);
        assert_eq!("1000".parse::<TRule>().unwrap(), TRule::Fixed(1000));
        assert_eq!("linear(20)".parse::<TRule>().unwrap().resolve(8).unwrap(), 160);
        assert_eq!("linear".parse::<TRule>().unwrap(), TRule::Linear(20.0));
        let n = 16f64;
        let want = (n * n * n.ln().powi(3)).ceil() as usize;
        assert_eq!("theory(1)".parse::<TRule>().unwrap().resolve(16).unwrap(), want);
        assert!("fixed(0)".parse::<TRule>().is_err());
        assert!("quadratic(2)".parse::<TRule>().is_err());
        assert!("theory(-1)".parse::<TRule>().is_err());
        // ln 1 = 0, so the theory rule has nothing to give at N = 1
        assert!(TRule::Theory(1.0).resolve(1).is_err());
    }

    #[test]
    fn config_file_and_overrides() {
        let text = "experiment = scaling\nN = 8, 16, 32\nL = 3\nT = theory(0.5)\nmethods = cpp\nseed = 9\n";
        let cfg = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(cfg.levels, vec![6, 6, 6]);
        assert_eq!(cfg.methods, vec![Method::Cpp]);
        assert_eq!(cfg.seed, 9);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.cfg");
        std::fs::write(&p, text).unwrap();
        let o = Overrides {
            seed: Some(4),
            set: vec![("K".into(), "8".into())],
            ..Default::default()
        };
        let cfg = ExperimentConfig::load(None, Some(&p), &o).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.levels, vec![8, 8, 8]);
    }

    #[test]
    fn config_errors() {
        for text in [
            "experiment = scaling\ntrials = 0\n",
            "experiment = scaling\nmethods = csm, magic\n",
            "experiment = examples\nN = 8\n",
            "experiment = scaling\nL = 2\nK = 4, 4, 4\n",
            "experiment = conditions\neta = 1.5\n",
            "experiment = scaling\nT = theory(1)\nN = 1, 8\n",
            "experiment = scaling\ncolour = red\n",
            "N = 8\n",
        ] {
            assert!(ExperimentConfig::parse(text, None).is_err(), "{text}");
        }
    }

    #[test]
    fn compare_defaults_follow_the_scenario() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Compare);
        assert_eq!(cfg.n_sweep, vec![100]);
        assert_eq!(cfg.levels, vec![4, 4]);
        assert_eq!(cfg.methods.len(), 5);
        cfg.validate().unwrap();
    }
}
