//! Group visibility and position-discounted exposure in top-k rankings.
//!
//! For rankings `R_1..R_n` and a demographic group `g`:
//!
//! ```text
//! visibility(g, k) = 1/(n k) * sum_i sum_{pos<=k} [R_i[pos] in g]
//! exposure(g, k)   = 1/(n o) * sum_i sum_{pos<=k} [R_i[pos] in g] / log2(pos + 1)
//! o                = sum_{pos<=k} 1 / log2(pos + 1)
//! ```
//!
//! Disparities are absolute differences between two groups, and the overall
//! disparity is their unweighted mean over all unordered pairs. Rankings
//! shorter than `k` contribute nothing for the missing positions; the
//! denominators always use the nominal `k`.

mod tables;
mod view;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DemographicScheme, Group, IdentityInfo};
use crate::ranker::RankingSet;

pub use tables::{write_distributions_csv, write_hit_ratio_csv, write_matrix_csv};
pub use view::LabeledRankings;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("ranking set is empty")]
    EmptyRankings,
    #[error("k = {k} is outside 1..={max}")]
    InvalidK { k: usize, max: usize },
    #[error("group {0} is not part of the scheme")]
    UnknownGroup(String),
    #[error("group {0} listed more than once")]
    DuplicateGroup(String),
    #[error("identity_id={0} has no demographic label")]
    UnlabeledIdentity(String),
    #[error("at least 2 groups are required, got {0}")]
    TooFewGroups(usize),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Visibility,
    Exposure,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Visibility => "visibility",
            Metric::Exposure => "exposure",
        })
    }
}

/// Identity to demographic group lookup over a fixed, ordered group list.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupIndex {
    groups: Vec<Group>,
    by_identity: HashMap<String, usize>,
}

impl GroupIndex {
    pub fn new<'a, I>(scheme: &DemographicScheme, identities: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a IdentityInfo>,
    {
        let groups = scheme.groups();
        let position: HashMap<&Group, usize> = groups.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let mut by_identity = HashMap::new();
        for info in identities {
            let &gi = position
                .get(&info.group)
                .ok_or_else(|| MetricsError::UnknownGroup(info.group.to_string()))?;
            by_identity.insert(info.identity_id.clone(), gi);
        }
        Ok(GroupIndex { groups, by_identity })
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        GroupIndex::new(&ds.scheme, ds.identities.values()).expect("dataset labels belong to its scheme")
    }

    /// All scheme groups, in scheme order.
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_of(&self, identity_id: &str) -> Option<&Group> {
        self.by_identity.get(identity_id).map(|&i| &self.groups[i])
    }

    pub(crate) fn group_idx(&self, identity_id: &str) -> Option<usize> {
        self.by_identity.get(identity_id).copied()
    }

    pub fn position(&self, group: &Group) -> Result<usize> {
        self.groups
            .iter()
            .position(|g| g == group)
            .ok_or_else(|| MetricsError::UnknownGroup(group.to_string()))
    }
}

/// Discount `1 / log2(pos + 1)` for positions `1..=k`.
pub(crate) fn position_weights(k: usize) -> Vec<f64> {
    (1..=k).map(|pos| 1.0 / ((pos + 1) as f64).log2()).collect()
}

/// Total decay `o` of a ranking of length `k`.
pub fn decay_norm(k: usize) -> f64 {
    position_weights(k).iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: Group,
    pub k: usize,
    pub visibility: f64,
    pub exposure: f64,
}

/// Exposure of one group computed separately for every ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureDistribution {
    pub group: Group,
    pub k: usize,
    pub per_ranking_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairValue {
    pub a: Group,
    pub b: Group,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub k: usize,
    pub groups: Vec<Group>,
    /// One entry per unordered pair, in list order of `groups`.
    pub pairwise_visibility: Vec<PairValue>,
    pub pairwise_exposure: Vec<PairValue>,
    pub overall_visibility: f64,
    pub overall_exposure: f64,
}

impl DisparityReport {
    /// Symmetric lookup; the diagonal is zero.
    pub fn get(&self, metric: Metric, a: &Group, b: &Group) -> Option<f64> {
        if a == b {
            return self.groups.contains(a).then_some(0.0);
        }
        let pairs = match metric {
            Metric::Visibility => &self.pairwise_visibility,
            Metric::Exposure => &self.pairwise_exposure,
        };
        pairs
            .iter()
            .find(|p| (&p.a == a && &p.b == b) || (&p.a == b && &p.b == a))
            .map(|p| p.value)
    }
}

/// Metric per (probe group, gallery group). Rows without probes are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConditionedMatrix {
    pub metric: Metric,
    pub exclude_mates: bool,
    pub k: usize,
    pub groups: Vec<Group>,
    pub probe_counts: Vec<usize>,
    /// `cells[probe_group][gallery_group]`.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl ProbeConditionedMatrix {
    pub fn cell(&self, probe_group: &Group, gallery_group: &Group) -> Option<f64> {
        let p = self.groups.iter().position(|g| g == probe_group)?;
        let q = self.groups.iter().position(|g| g == gallery_group)?;
        self.cells[p][q]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRatioPoint {
    pub k: usize,
    pub hit_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRatioCurve {
    pub points: Vec<HitRatioPoint>,
}

pub fn visibility(rs: &RankingSet, index: &GroupIndex, group: &Group, k: usize) -> Result<f64> {
    LabeledRankings::new(rs, index)?.visibility(group, k)
}

pub fn exposure(rs: &RankingSet, index: &GroupIndex, group: &Group, k: usize) -> Result<f64> {
    LabeledRankings::new(rs, index)?.exposure(group, k)
}

pub fn per_ranking_exposure(
    rs: &RankingSet,
    index: &GroupIndex,
    group: &Group,
    k: usize,
) -> Result<ExposureDistribution> {
    LabeledRankings::new(rs, index)?.per_ranking_exposure(group, k)
}

pub fn disparate(
    rs: &RankingSet,
    index: &GroupIndex,
    a: &Group,
    b: &Group,
    k: usize,
    metric: Metric,
) -> Result<f64> {
    LabeledRankings::new(rs, index)?.disparate(a, b, k, metric)
}

pub fn overall_disparity(rs: &RankingSet, index: &GroupIndex, groups: &[Group], k: usize) -> Result<DisparityReport> {
    LabeledRankings::new(rs, index)?.overall_disparity(groups, k)
}

pub fn probe_conditioned(
    rs: &RankingSet,
    index: &GroupIndex,
    metric: Metric,
    k: usize,
    exclude_mates: bool,
) -> Result<ProbeConditionedMatrix> {
    LabeledRankings::new(rs, index)?.probe_conditioned(metric, k, exclude_mates)
}

/// Share of rankings whose probe identity appears within the first `k'`
/// entries, for `k' = 1..=k`. Needs no demographic labels.
pub fn hit_ratio_curve(rs: &RankingSet, k: usize) -> Result<HitRatioCurve> {
    if rs.is_empty() {
        return Err(MetricsError::EmptyRankings);
    }
    if k == 0 || k > rs.k {
        return Err(MetricsError::InvalidK { k, max: rs.k });
    }
    let mut first_hit_at = vec![0usize; k + 1];
    for r in &rs.rankings {
        if let Some(pos) = r.mate_position().filter(|&p| p <= k) {
            first_hit_at[pos] += 1;
        }
    }
    let n = rs.len() as f64;
    let mut cumulative = 0;
    let points = (1..=k)
        .map(|kp| {
            cumulative += first_hit_at[kp];
            HitRatioPoint {
                k: kp,
                hit_ratio: cumulative as f64 / n,
            }
        })
        .collect();
    Ok(HitRatioCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranker::{RankEntry, Ranking};
    use approx::assert_abs_diff_eq;

    #[test]
    fn decay_norm_values() {
        assert_eq!(decay_norm(1), 1.0);
        // 1 + 1/log2(3) + 1/2, summed independently in Python
        assert_abs_diff_eq!(decay_norm(3), 2.1309297535714578, epsilon = 1e-14);
        assert_abs_diff_eq!(decay_norm(10), 4.543559338088346, epsilon = 1e-14);
        assert_abs_diff_eq!(decay_norm(10), 4.543560, epsilon = 1e-5);
    }

    fn ranking(probe: &str, ids: &[&str]) -> Ranking {
        Ranking {
            probe_image_id: format!("{probe}-img"),
            probe_identity_id: probe.into(),
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| RankEntry {
                    identity_id: (*id).into(),
                    score: 1.0 - i as f64 * 0.1,
                })
                .collect(),
        }
    }

    #[test]
    fn hit_ratio_steps() {
        let rs = RankingSet {
            rankings: vec![ranking("m", &["a", "b", "m", "c"]), ranking("m", &["x", "y", "m", "z"])],
            k: 4,
            gallery_range: None,
        };
        let curve = hit_ratio_curve(&rs, 4).unwrap();
        let ratios: Vec<f64> = curve.points.iter().map(|p| p.hit_ratio).collect();
        assert_eq!(ratios, [0.0, 0.0, 1.0, 1.0]);
        assert_eq!(curve.points[3].k, 4);

        let always_first = RankingSet {
            rankings: vec![ranking("a", &["a", "b"]), ranking("b", &["b", "a"])],
            k: 2,
            gallery_range: None,
        };
        assert!(hit_ratio_curve(&always_first, 2).unwrap().points.iter().all(|p| p.hit_ratio == 1.0));
        assert_eq!(hit_ratio_curve(&always_first, 3), Err(MetricsError::InvalidK { k: 3, max: 2 }));
    }

    #[test]
    fn group_index_rejects_foreign_groups() {
        let scheme = DemographicScheme::diveface();
        let alien = IdentityInfo {
            identity_id: "z".into(),
            group: Group::new(["Men", "Martian"]),
        };
        assert!(matches!(GroupIndex::new(&scheme, [&alien]), Err(MetricsError::UnknownGroup(_))));
    }
}
