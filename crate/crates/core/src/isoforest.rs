//! One-dimensional isolation forest used to flag outlying indicators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::mean;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contamination {
    /// Expected outlier fraction in `[0, 1]`.
    Fraction(f64),
    /// Outliers are the points scoring above 0.5.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoForestParams {
    pub n_trees: usize,
    /// Subsample size per tree; `None` means `min(256, n)`.
    pub sample_size: Option<usize>,
    pub contamination: Contamination,
    pub seed: u64,
}

impl Default for IsoForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            sample_size: None,
            contamination: Contamination::Auto,
            seed: 42,
        }
    }
}

impl IsoForestParams {
    pub fn with_contamination(contamination: Contamination) -> Self {
        Self {
            contamination,
            ..Self::default()
        }
    }
}

/// Average path length of an unsuccessful binary-search-tree lookup among
/// `m` points: `2 H(m-1) - 2 (m-1) / m`, with exact harmonic numbers.
pub fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let h: f64 = (1..m).map(|k| 1.0 / k as f64).sum();
    2.0 * h - 2.0 * (m - 1) as f64 / m as f64
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Split { at: f64, left: usize, right: usize },
    Leaf { size: usize },
}

/// A single isolation tree over scalar data.
#[derive(Debug, Clone)]
pub struct IsoTree {
    nodes: Vec<Node>,
}

impl IsoTree {
    pub fn fit(data: &[f64], height_limit: usize, rng: &mut impl Rng) -> Self {
        let mut tree = Self {
            nodes: Vec::with_capacity(2 * data.len()),
        };
        let mut buf = data.to_vec();
        tree.grow(&mut buf, 0, height_limit, rng);
        tree
    }

    fn grow(&mut self, data: &mut [f64], depth: usize, limit: usize, rng: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        let (lo, hi) = data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        if depth >= limit || data.len() <= 1 || lo >= hi {
            self.nodes.push(Node::Leaf { size: data.len() });
            return id;
        }
        let mut at = lo;
        while at <= lo {
            at = lo + rng.gen::<f64>() * (hi - lo);
        }
        self.nodes.push(Node::Leaf { size: 0 });
        // partition in place: [< at | >= at]
        let mut k = 0;
        for i in 0..data.len() {
            if data[i] < at {
                data.swap(i, k);
                k += 1;
            }
        }
        let (l, r) = data.split_at_mut(k);
        let left = self.grow(l, depth + 1, limit, rng);
        let right = self.grow(r, depth + 1, limit, rng);
        self.nodes[id] = Node::Split { at, left, right };
        id
    }

    /// Depth of the leaf reached by `x` plus the leaf-size correction.
    pub fn path_length(&self, x: f64) -> f64 {
        let mut i = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[i] {
                Node::Split { at, left, right } => {
                    i = if x < at { left } else { right };
                    depth += 1.0;
                }
                Node::Leaf { size } => return depth + average_path_length(size),
            }
        }
    }

    /// Split values of all internal nodes, in construction order.
    pub fn splits(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| {
                if let Node::Split { at, .. } = n {
                    Some(*at)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Mean path length of each point over the forest.
pub fn mean_path_lengths(values: &[f64], params: &IsoForestParams) -> Result<(Vec<f64>, usize)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Scoring(format!("need at least 2 values, got {n}")));
    }
    if params.n_trees == 0 {
        return Err(Error::Scoring("n_trees must be at least 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Scoring("non-finite indicator value".into()));
    }
    let psi = params.sample_size.unwrap_or(256).min(n);
    if psi < 2 {
        return Err(Error::Scoring(format!(
            "subsample size must be at least 2, got {psi}"
        )));
    }
    let limit = (psi as f64).log2().ceil() as usize;
    let trees: Vec<IsoTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let sample: Vec<f64> = rand::seq::index::sample(&mut rng, n, psi)
                .into_iter()
                .map(|i| values[i])
                .collect();
            IsoTree::fit(&sample, limit, &mut rng)
        })
        .collect();
    let paths = values
        .par_iter()
        .map(|&x| trees.iter().map(|t| t.path_length(x)).sum::<f64>() / trees.len() as f64)
        .collect();
    Ok((paths, psi))
}

/// Anomaly scores `2^(-E[h(x)] / c(psi))` in `(0, 1]`.
pub fn fit_score(values: &[f64], params: &IsoForestParams) -> Result<Vec<f64>> {
    let (paths, psi) = mean_path_lengths(values, params)?;
    let c = average_path_length(psi);
    Ok(paths.into_iter().map(|h| 2f64.powf(-h / c)).collect())
}

/// `ceil(c n)`, robust to products like `0.3 * 10` landing just above an integer.
pub fn contamination_count(c: f64, n: usize) -> usize {
    let x = c * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * (n as f64).max(1.0) {
        r
    } else {
        x.ceil()
    };
    (k.max(0.0) as usize).min(n)
}

/// Outlier candidates intersected with `{e : eta_e > mean(eta)}`, sorted.
pub fn mark_iso(values: &[f64], params: &IsoForestParams) -> Result<Vec<usize>> {
    let scores = fit_score(values, params)?;
    let candidates: Vec<usize> = match params.contamination {
        Contamination::Fraction(c) => {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Config(format!(
                    "contamination must lie in [0, 1], got {c}"
                )));
            }
            let k = contamination_count(c, values.len());
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            order.truncate(k);
            order
        }
        Contamination::Auto => (0..values.len()).filter(|&i| scores[i] > 0.5).collect(),
    };
    let m = mean(values);
    let mut marked: Vec<usize> = candidates.into_iter().filter(|&i| values[i] > m).collect();
    marked.sort_unstable();
    Ok(marked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_length_normalizer() {
        assert_eq!(average_path_length(1), 0.0);
        assert_eq!(average_path_length(2), 1.0);
        assert!((average_path_length(3) - (2.0 * 1.5 - 4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn equal_values_give_equal_scores() {
        let s = fit_score(&[3.0; 20], &IsoForestParams::default()).unwrap();
        assert!(s.iter().all(|&v| v == s[0]));
        assert!((s[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn extreme_point_scores_highest() {
        let eta = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0];
        let params = IsoForestParams {
            n_trees: 1000,
            ..Default::default()
        };
        let (paths, _) = mean_path_lengths(&eta, &params).unwrap();
        assert!(paths[..7].iter().all(|&p| p > paths[7]));
        let s = fit_score(&eta, &params).unwrap();
        assert!(s[..7].iter().all(|&v| v < s[7]));
        let p = IsoForestParams::with_contamination(Contamination::Fraction(0.125));
        assert_eq!(mark_iso(&eta, &p).unwrap(), vec![7]);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_score(&[1.0], &IsoForestParams::default()),
            Err(Error::Scoring(_))
        ));
    }

    #[test]
    fn splits_lie_inside_routed_range() {
        let data: Vec<f64> = (0..64).map(|i| ((i * 37) % 64) as f64 * 0.5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = IsoTree::fit(&data, 6, &mut rng);
        for s in t.splits() {
            assert!(s > 0.0 && s < 31.5);
        }
    }

    #[test]
    fn contamination_rounding() {
        assert_eq!(contamination_count(0.3, 10), 3);
        assert_eq!(contamination_count(0.125, 8), 1);
        assert_eq!(contamination_count(0.11, 10), 2);
        assert_eq!(contamination_count(1.0, 7), 7);
    }
}
