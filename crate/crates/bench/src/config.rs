//! Run and sweep settings.
//!
//! Settings come from three layers: command-line flags override a TOML
//! config file, which overrides the built-in defaults. Every key is
//! optional:
//!
//! ```toml
//! case = "SC1"               # SC0, SC1, FC0, FC1
//! strategy = "doe"           # max, qua, doe, zsc, iso
//! param = 0.9                # single run; ISO also accepts "auto"
//! params = "0.1:0.9:0.1"     # sweep: start:stop:step, or a list [0.25, 0.5, "auto"]
//! threshold = 0.01
//! max_cycles = 40
//! warm_start = true
//! seed = 42
//! out = "results"
//! workers = 1
//! reference_dir = "references"
//! reference_level = 4
//! mu = 0.01                  # fluid cases only
//! speed = 1.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use amr_core::driver::AmrConfig;
use amr_core::marking::{MarkingConfig, Strategy};
use serde::Deserialize;

use crate::cases::{CaseId, FlowSettings};
use crate::error::{BenchError, Result};

pub const DEFAULT_SEED: u64 = 42;

/// A parameter value as written by the user.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s.trim()),
        }
    }
}

/// A list of marking parameters: `start:stop:step` or comma separated values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParamList {
    Spec(String),
    List(Vec<ParamValue>),
}

impl FromStr for ParamList {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(ParamList::Spec(s.to_string()))
    }
}

impl ParamList {
    pub fn expand(&self) -> Result<Vec<String>> {
        let values = match self {
            ParamList::List(v) => v.iter().map(ToString::to_string).collect(),
            ParamList::Spec(s) if s.contains(':') => expand_range(s)?,
            ParamList::Spec(s) => s
                .split(',')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect(),
        };
        if values.is_empty() {
            return Err(BenchError::Config("empty parameter list".into()));
        }
        Ok(values)
    }
}

fn expand_range(spec: &str) -> Result<Vec<String>> {
    let bad = || {
        BenchError::Config(format!(
            "bad parameter range {spec:?}, expected start:stop:step"
        ))
    };
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let v = ((start + i as f64 * step) * 1e10).round() / 1e10;
            format!("{v}")
        })
        .collect())
}

/// The sweep grid used when no parameters are given.
pub fn default_grid(strategy: Strategy) -> Vec<String> {
    let list: &[&str] = match strategy {
        Strategy::Max | Strategy::Qua | Strategy::Doe => &[
            "0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9",
        ],
        Strategy::Zsc => &["0.25", "0.5", "0.75", "1", "1.5", "2"],
        Strategy::Iso => &["0.1", "0.2", "0.3", "0.4", "0.5", "auto"],
    };
    list.iter().map(|s| s.to_string()).collect()
}

/// Reference level used for a fluid case when none is configured.
pub const DEFAULT_REFERENCE_LEVEL: usize = 4;

/// Settings as read from a file or from flags; absent keys fall through.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub case: Option<String>,
    pub strategy: Option<String>,
    pub param: Option<ParamValue>,
    pub params: Option<ParamList>,
    pub threshold: Option<f64>,
    pub max_cycles: Option<usize>,
    pub warm_start: Option<bool>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub reference_dir: Option<PathBuf>,
    pub reference_level: Option<usize>,
    pub mu: Option<f64>,
    pub speed: Option<f64>,
}

macro_rules! layer {
    ($top:ident, $base:ident; $($f:ident),*) => {
        Overrides { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        toml::from_str(&text).map_err(|source| BenchError::Toml {
            path: path.into(),
            source,
        })
    }

    /// Values from `self` win over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        layer!(self, base; case, strategy, param, params, threshold, max_cycles, warm_start, seed, out,
            workers, reference_dir, reference_level, mu, speed)
    }

    /// Resolves against the defaults. `param` and `params` stay unresolved
    /// because their meaning depends on the subcommand.
    pub fn resolve(self) -> Result<Settings> {
        let case: CaseId = self
            .case
            .as_deref()
            .ok_or_else(|| BenchError::Config("no case given (valid: SC0, SC1, FC0, FC1)".into()))?
            .parse()?;
        let strategy = match self.strategy.as_deref() {
            Some(s) => Some(s.parse::<Strategy>()?),
            None => None,
        };
        let defaults = FlowSettings::default_for(case);
        let settings = Settings {
            case,
            strategy,
            param: self.param.map(|p| p.to_string()),
            params: self.params,
            threshold: self.threshold.unwrap_or(0.01),
            max_cycles: self.max_cycles.unwrap_or(40),
            warm_start: self.warm_start.unwrap_or(true),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            out: self.out.unwrap_or_else(|| PathBuf::from("results")),
            workers: self.workers.unwrap_or(1),
            reference_dir: self
                .reference_dir
                .unwrap_or_else(|| PathBuf::from("references")),
            reference_level: self.reference_level.unwrap_or(DEFAULT_REFERENCE_LEVEL),
            flow: FlowSettings {
                mu: self.mu.unwrap_or(defaults.mu),
                speed: self.speed.unwrap_or(defaults.speed),
            },
        };
        if settings.workers == 0 {
            return Err(BenchError::Config("workers must be at least 1".into()));
        }
        if !(settings.flow.mu > 0.0) || !settings.flow.speed.is_finite() {
            return Err(BenchError::Config(format!(
                "invalid flow settings mu = {}, speed = {}",
                settings.flow.mu, settings.flow.speed
            )));
        }
        Ok(settings)
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub case: CaseId,
    pub strategy: Option<Strategy>,
    pub param: Option<String>,
    pub params: Option<ParamList>,
    pub threshold: f64,
    pub max_cycles: usize,
    pub warm_start: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub reference_dir: PathBuf,
    pub reference_level: usize,
    pub flow: FlowSettings,
}

impl Settings {
    pub fn strategy(&self) -> Result<Strategy> {
        self.strategy.ok_or_else(|| {
            BenchError::Config("no strategy given (valid: max, qua, doe, zsc, iso)".into())
        })
    }

    pub fn amr_config(&self, strategy: Strategy, param: &str) -> Result<AmrConfig> {
        let config = AmrConfig {
            marking: MarkingConfig::parse(strategy, param, self.seed)?,
            threshold: self.threshold,
            max_cycles: self.max_cycles,
            warm_start: self.warm_start,
        };
        config.validate()?;
        Ok(config)
    }

    /// The single-run configuration.
    pub fn run_config(&self) -> Result<AmrConfig> {
        let param = self
            .param
            .as_deref()
            .ok_or_else(|| BenchError::Config("no param given".into()))?;
        self.amr_config(self.strategy()?, param)
    }

    /// One configuration per sweep parameter, validated up front.
    pub fn sweep_configs(&self) -> Result<Vec<AmrConfig>> {
        let strategy = self.strategy()?;
        let params = match (&self.params, &self.param) {
            (Some(list), _) => list.expand()?,
            (None, Some(p)) => vec![p.clone()],
            (None, None) => default_grid(strategy),
        };
        params
            .iter()
            .map(|p| self.amr_config(strategy, p))
            .collect()
    }
}
