//! Two-sample Kolmogorov-Smirnov test over exposure distributions.
//!
//! p-values use the asymptotic Kolmogorov distribution at
//! `D * sqrt(n1 n2 / (n1 + n2))`; they are approximate for samples below
//! roughly 20 points.

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Group;
use crate::metrics::ExposureDistribution;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample {0} is empty")]
    EmptySample(&'static str),
    #[error("sample {0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("alpha must be in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("at least 2 distributions are required, got {0}")]
    TooFewGroups(usize),
    #[error("distribution for group {0} is empty")]
    EmptyDistribution(String),
    #[error("group {0} listed more than once")]
    DuplicateGroup(String),
}

pub const DEFAULT_ALPHA: f64 = 0.05;

const SERIES_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

fn sorted(sample: &[f64], name: &'static str) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample(name));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(name));
    }
    let mut v = sample.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// `sup_t |F_x(t) - F_y(t)|` over the empirical CDFs, swept over the merged
/// distinct values so tied observations are stepped over together.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let (xs, ys) = (sorted(x, "x")?, sorted(y, "y")?);
    Ok(sweep(&xs, &ys))
}

fn sweep(xs: &[f64], ys: &[f64]) -> f64 {
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        // Jacobi theta form, fast for small lambda:
        // 1 - sqrt(2 pi)/lambda * sum_j exp(-(2j - 1)^2 pi^2 / (8 lambda^2))
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for j in 1.. {
            let odd = (2 * j - 1) as f64;
            let term = (c * odd * odd).exp();
            sum += term;
            if term < SERIES_EPS {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / lambda * sum
    } else {
        // 2 sum_j (-1)^(j-1) exp(-2 j^2 lambda^2)
        let c = -2.0 * lambda * lambda;
        let mut sum = 0.0;
        let mut sign = 1.0;
        for j in 1.. {
            let jf = j as f64;
            let term = (c * jf * jf).exp();
            sum += sign * term;
            if term < SERIES_EPS {
                break;
            }
            sign = -sign;
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult, StatsError> {
    let statistic = ks_statistic(x, y)?;
    let (n1, n2) = (x.len(), y.len());
    Ok(KsResult {
        statistic,
        p_value: ks_p_value(statistic, n1, n2),
        n1,
        n2,
    })
}

/// Asymptotic p-value for statistic `d` at sample sizes `n1`, `n2`.
pub fn ks_p_value(d: f64, n1: usize, n2: usize) -> f64 {
    let en = (n1 as f64 * n2 as f64 / (n1 + n2) as f64).sqrt();
    kolmogorov_sf(d * en)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: Group,
    pub b: Group,
    #[serde(flatten)]
    pub result: KsResult,
    pub significant: bool,
}

/// Pairwise KS tests between group exposure distributions. No correction
/// for multiple comparisons is applied; `comparisons` records how many
/// tests were run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub alpha: f64,
    pub comparisons: usize,
    pub note: String,
    pub cells: Vec<PairTest>,
}

impl SignificanceMatrix {
    /// Symmetric lookup.
    pub fn get(&self, a: &Group, b: &Group) -> Option<&PairTest> {
        self.cells
            .iter()
            .find(|c| (&c.a == a && &c.b == b) || (&c.a == b && &c.b == a))
    }
}

pub fn significance_matrix(dists: &[ExposureDistribution], alpha: f64) -> Result<SignificanceMatrix, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    if dists.len() < 2 {
        return Err(StatsError::TooFewGroups(dists.len()));
    }
    let mut seen = HashSet::new();
    let mut prepared = Vec::with_capacity(dists.len());
    for d in dists {
        if !seen.insert(&d.group) {
            return Err(StatsError::DuplicateGroup(d.group.to_string()));
        }
        if d.per_ranking_values.is_empty() {
            return Err(StatsError::EmptyDistribution(d.group.to_string()));
        }
        prepared.push(sorted(&d.per_ranking_values, "distribution")?);
    }
    let mut cells = Vec::new();
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            let (xs, ys) = (&prepared[i], &prepared[j]);
            let statistic = sweep(xs, ys);
            let result = KsResult {
                statistic,
                p_value: ks_p_value(statistic, xs.len(), ys.len()),
                n1: xs.len(),
                n2: ys.len(),
            };
            cells.push(PairTest {
                a: dists[i].group.clone(),
                b: dists[j].group.clone(),
                significant: result.p_value < alpha,
                result,
            });
        }
    }
    Ok(SignificanceMatrix {
        alpha,
        comparisons: cells.len(),
        note: comparisons_note(cells.len()),
        cells,
    })
}

pub(crate) fn comparisons_note(n: usize) -> String {
    format!("{n} pairwise tests at the raw alpha; no multiple-comparison correction applied")
}
