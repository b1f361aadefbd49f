//! Marking strategies: maximum, quantile, Dörfler, z-score and isolation forest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::isoforest::{self, Contamination, IsoForestParams};
use crate::stats::{mean, quantile_sorted};
use crate::{Error, Result};

/// Guard applied before taking logarithms in the z-score rule.
pub const EPS_LOG: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Max,
    Qua,
    Doe,
    Zsc,
    Iso,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Doe,
        Strategy::Zsc,
        Strategy::Max,
        Strategy::Qua,
        Strategy::Iso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Max => "max",
            Strategy::Qua => "qua",
            Strategy::Doe => "doe",
            Strategy::Zsc => "zsc",
            Strategy::Iso => "iso",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Strategy::Max),
            "qua" => Ok(Strategy::Qua),
            "doe" => Ok(Strategy::Doe),
            "zsc" => Ok(Strategy::Zsc),
            "iso" => Ok(Strategy::Iso),
            _ => Err(Error::Config(format!(
                "unknown strategy {s:?}; valid: max, qua, doe, zsc, iso"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum MarkingConfig {
    Max { alpha: f64 },
    Qua { gamma: f64 },
    Doe { theta: f64 },
    Zsc { z: f64 },
    Iso { params: IsoForestParams },
}

impl MarkingConfig {
    /// Builds a configuration from a strategy name and a parameter string.
    /// The ISO parameter may be `auto`.
    pub fn parse(strategy: Strategy, param: &str, seed: u64) -> Result<Self> {
        let num = || {
            param
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad {strategy} parameter {param:?}")))
        };
        let cfg = match strategy {
            Strategy::Max => MarkingConfig::Max { alpha: num()? },
            Strategy::Qua => MarkingConfig::Qua { gamma: num()? },
            Strategy::Doe => MarkingConfig::Doe { theta: num()? },
            Strategy::Zsc => MarkingConfig::Zsc { z: num()? },
            Strategy::Iso => {
                let contamination = if param.trim().eq_ignore_ascii_case("auto") {
                    Contamination::Auto
                } else {
                    Contamination::Fraction(num()?)
                };
                MarkingConfig::Iso {
                    params: IsoForestParams {
                        contamination,
                        seed,
                        ..Default::default()
                    },
                }
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn strategy(&self) -> Strategy {
        match self {
            MarkingConfig::Max { .. } => Strategy::Max,
            MarkingConfig::Qua { .. } => Strategy::Qua,
            MarkingConfig::Doe { .. } => Strategy::Doe,
            MarkingConfig::Zsc { .. } => Strategy::Zsc,
            MarkingConfig::Iso { .. } => Strategy::Iso,
        }
    }

    /// The parameter as printed in result paths and tables.
    pub fn param_label(&self) -> String {
        match self {
            MarkingConfig::Max { alpha: p }
            | MarkingConfig::Qua { gamma: p }
            | MarkingConfig::Doe { theta: p } => {
                format!("{p}")
            }
            MarkingConfig::Zsc { z } => format!("{z}"),
            MarkingConfig::Iso { params } => match params.contamination {
                Contamination::Auto => "auto".into(),
                Contamination::Fraction(c) => format!("{c}"),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            MarkingConfig::Max { alpha } => unit("alpha", alpha),
            MarkingConfig::Qua { gamma } => unit("gamma", gamma),
            MarkingConfig::Doe { theta } => unit("theta", theta),
            MarkingConfig::Zsc { z } if z.is_finite() => Ok(()),
            MarkingConfig::Zsc { z } => Err(Error::Config(format!(
                "z threshold must be finite, got {z}"
            ))),
            MarkingConfig::Iso { params } => {
                if params.n_trees == 0 {
                    return Err(Error::Config("n_trees must be at least 1".into()));
                }
                match params.contamination {
                    Contamination::Fraction(c) => unit("contamination", c),
                    Contamination::Auto => Ok(()),
                }
            }
        }
    }

    pub fn mark(&self, eta: &[f64]) -> Result<MarkedSet> {
        self.validate()?;
        let (indices, degenerate) = match *self {
            MarkingConfig::Max { alpha } => (mark_max(eta, alpha)?, false),
            MarkingConfig::Qua { gamma } => (mark_quantile(eta, gamma)?, false),
            MarkingConfig::Doe { theta } => {
                check(eta)?;
                (mark_doerfler(eta, theta)?, eta.iter().all(|&v| v == 0.0))
            }
            MarkingConfig::Zsc { z } => {
                let r = zscore(eta, z)?;
                (r.0, r.1)
            }
            MarkingConfig::Iso { params } => {
                check(eta)?;
                (isoforest::mark_iso(eta, &params)?, false)
            }
        };
        Ok(MarkedSet {
            indices,
            config: *self,
            degenerate,
        })
    }
}

/// Marked element indices, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSet {
    pub indices: Vec<usize>,
    pub config: MarkingConfig,
    /// The indicator vector left the rule undefined (all-zero for Dörfler,
    /// zero spread for z-score).
    pub degenerate: bool,
}

impl MarkedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check(eta: &[f64]) -> Result<()> {
    if eta.is_empty() {
        return Err(Error::Input("empty indicator vector".into()));
    }
    if let Some(v) = eta.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Input(format!(
            "indicator values must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// `{e : eta_e >= alpha max eta}`.
pub fn mark_max(eta: &[f64], alpha: f64) -> Result<Vec<usize>> {
    check(eta)?;
    let max = eta.iter().copied().fold(0.0, f64::max);
    let threshold = alpha * max;
    Ok((0..eta.len()).filter(|&e| eta[e] >= threshold).collect())
}

/// `{e : eta_e >= Q_gamma}` with the interpolated (type 7) quantile.
pub fn mark_quantile(eta: &[f64], gamma: f64) -> Result<Vec<usize>> {
    check(eta)?;
    let mut sorted = eta.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = quantile_sorted(&sorted, gamma);
    Ok((0..eta.len()).filter(|&e| eta[e] >= q).collect())
}

/// Smallest set whose squared indicators reach `theta` of the total, built
/// greedily in descending order with ties broken by lower index.
pub fn mark_doerfler(eta: &[f64], theta: f64) -> Result<Vec<usize>> {
    check(eta)?;
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&e| eta[e] * eta[e]).sum();
    if total == 0.0 {
        return Ok(vec![0]);
    }
    let target = theta * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for e in order {
        sum += eta[e] * eta[e];
        marked.push(e);
        if sum >= target {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

fn zscore(eta: &[f64], z_star: f64) -> Result<(Vec<usize>, bool)> {
    check(eta)?;
    let logs: Vec<f64> = eta.iter().map(|&v| v.max(EPS_LOG).ln()).collect();
    let (lo, hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if lo == hi {
        return Ok((Vec::new(), true));
    }
    let m = mean(&logs);
    let sd = (logs.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / logs.len() as f64).sqrt();
    Ok((
        (0..eta.len())
            .filter(|&e| (logs[e] - m) / sd >= z_star)
            .collect(),
        false,
    ))
}

/// `{e : z_e >= z*}` on log indicators with the population standard
/// deviation. Returns an empty set when all indicators are equal.
pub fn mark_zscore(eta: &[f64], z_star: f64) -> Result<Vec<usize>> {
    zscore(eta, z_star).map(|r| r.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_examples() {
        assert_eq!(mark_max(&[1.0, 5.0, 10.0], 0.5).unwrap(), vec![1, 2]);
        assert_eq!(mark_max(&[1.0, 10.0, 10.0], 1.0).unwrap(), vec![1, 2]);
        assert_eq!(mark_max(&[1.0, 5.0, 10.0], 0.0).unwrap(), vec![0, 1, 2]);
        assert_eq!(mark_max(&[0.0, 0.0], 0.7).unwrap(), vec![0, 1]);
        assert!(matches!(mark_max(&[], 0.5), Err(Error::Input(_))));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(
            mark_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(),
            vec![2, 3]
        );
        assert_eq!(
            mark_quantile(&[4.0, 2.0, 3.0, 1.0], 0.0).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(mark_quantile(&[2.0; 5], 0.9).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn doerfler_examples() {
        let eta = [2.0, 3f64.sqrt(), 2f64.sqrt(), 1.0];
        assert_eq!(mark_doerfler(&eta, 0.5).unwrap(), vec![0, 1]);
        assert_eq!(mark_doerfler(&[1.0, 0.0, 2.0], 1.0).unwrap(), vec![0, 2]);
        assert_eq!(mark_doerfler(&[1.0, 3.0, 2.0], 0.0).unwrap(), vec![1]);
        assert_eq!(mark_doerfler(&[0.0, 0.0], 0.5).unwrap(), vec![0]);
        // ties at the cut go to the lower index
        assert_eq!(mark_doerfler(&[1.0, 1.0, 1.0], 0.5).unwrap(), vec![0, 1]);
    }

    #[test]
    fn zscore_examples() {
        let e1 = 1f64.exp();
        let eta = [e1, e1 * e1, e1 * e1 * e1];
        assert_eq!(mark_zscore(&eta, 1.0).unwrap(), vec![2]);
        assert!(mark_zscore(&[0.3; 4], -5.0).unwrap().is_empty());
        assert_eq!(mark_zscore(&eta, -10.0).unwrap(), vec![0, 1, 2]);
        let m = MarkingConfig::Zsc { z: 0.0 }.mark(&[0.1; 3]).unwrap();
        assert!(m.is_empty() && m.degenerate);
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!(
            MarkingConfig::parse(Strategy::Doe, "0.9", 42).unwrap(),
            MarkingConfig::Doe { theta: 0.9 }
        );
        assert!(MarkingConfig::parse(Strategy::Qua, "1.5", 42).is_err());
        let iso = MarkingConfig::parse(Strategy::Iso, "auto", 7).unwrap();
        assert_eq!(iso.param_label(), "auto");
        assert!("foo".parse::<Strategy>().is_err());
        assert_eq!("ZSC".parse::<Strategy>().unwrap(), Strategy::Zsc);
    }
}
