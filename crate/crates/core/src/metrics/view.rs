use std::collections::HashSet;

use super::{
    position_weights, DisparityReport, ExposureDistribution, GroupIndex, GroupMetrics, Metric, MetricsError,
    PairValue, ProbeConditionedMatrix, Result,
};
use crate::dataset::Group;
use crate::par::{self, Execution};
use crate::ranker::RankingSet;

#[derive(Debug, Clone, Copy)]
struct Slot {
    group: usize,
    mate: bool,
}

#[derive(Debug, Clone)]
struct Row {
    probe_group: usize,
    slots: Vec<Slot>,
}

/// A ranking set with every slot resolved to its demographic group, ready
/// for repeated metric queries.
#[derive(Debug, Clone)]
pub struct LabeledRankings<'a> {
    rankings: &'a RankingSet,
    index: &'a GroupIndex,
    rows: Vec<Row>,
}

impl<'a> LabeledRankings<'a> {
    /// Fails if any probe or ranked identity lacks a label.
    pub fn new(rankings: &'a RankingSet, index: &'a GroupIndex) -> Result<Self> {
        let label = |id: &str| index.group_idx(id).ok_or_else(|| MetricsError::UnlabeledIdentity(id.to_owned()));
        let rows = rankings
            .rankings
            .iter()
            .map(|r| {
                Ok(Row {
                    probe_group: label(&r.probe_identity_id)?,
                    slots: r
                        .entries
                        .iter()
                        .map(|e| {
                            Ok(Slot {
                                group: label(&e.identity_id)?,
                                mate: e.identity_id == r.probe_identity_id,
                            })
                        })
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(LabeledRankings { rankings, index, rows })
    }

    pub fn rankings(&self) -> &RankingSet {
        self.rankings
    }

    pub fn index(&self) -> &GroupIndex {
        self.index
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.rows.is_empty() {
            return Err(MetricsError::EmptyRankings);
        }
        if k == 0 || k > self.rankings.k {
            return Err(MetricsError::InvalidK { k, max: self.rankings.k });
        }
        Ok(())
    }

    /// Per-position weight for `metric`: 1 for visibility, the log
    /// discount for exposure. The sum of the weights is the per-ranking
    /// denominator.
    fn weights(metric: Metric, k: usize) -> Vec<f64> {
        match metric {
            Metric::Visibility => vec![1.0; k],
            Metric::Exposure => position_weights(k),
        }
    }

    /// Weighted slot counts per gallery group over `rows`.
    fn numerators<'r>(&self, rows: impl Iterator<Item = &'r Row>, weights: &[f64], exclude_mates: bool) -> Vec<f64> {
        let mut acc = vec![0.0; self.index.groups().len()];
        for row in rows {
            for (slot, w) in row.slots.iter().zip(weights) {
                if !(exclude_mates && slot.mate) {
                    acc[slot.group] += w;
                }
            }
        }
        acc
    }

    fn single_group(&self, metric: Metric, group: &Group, k: usize) -> Result<f64> {
        self.check(k)?;
        let g = self.index.position(group)?;
        let weights = Self::weights(metric, k);
        let mut num = 0.0;
        for row in &self.rows {
            for (slot, w) in row.slots.iter().zip(&weights) {
                if slot.group == g {
                    num += w;
                }
            }
        }
        let per_ranking: f64 = weights.iter().sum();
        Ok(num / (self.rows.len() as f64 * per_ranking))
    }

    pub fn visibility(&self, group: &Group, k: usize) -> Result<f64> {
        self.single_group(Metric::Visibility, group, k)
    }

    pub fn exposure(&self, group: &Group, k: usize) -> Result<f64> {
        self.single_group(Metric::Exposure, group, k)
    }

    pub fn metric(&self, metric: Metric, group: &Group, k: usize) -> Result<f64> {
        self.single_group(metric, group, k)
    }

    /// Visibility and exposure for every scheme group.
    pub fn group_metrics(&self, k: usize) -> Result<Vec<GroupMetrics>> {
        self.check(k)?;
        let n = self.rows.len() as f64;
        let vis_w = Self::weights(Metric::Visibility, k);
        let exp_w = Self::weights(Metric::Exposure, k);
        let vis = self.numerators(self.rows.iter(), &vis_w, false);
        let exp = self.numerators(self.rows.iter(), &exp_w, false);
        let (vis_d, exp_d) = (n * vis_w.iter().sum::<f64>(), n * exp_w.iter().sum::<f64>());
        Ok(self
            .index
            .groups()
            .iter()
            .enumerate()
            .map(|(g, group)| GroupMetrics {
                group: group.clone(),
                k,
                visibility: vis[g] / vis_d,
                exposure: exp[g] / exp_d,
            })
            .collect())
    }

    /// Exposure of `group` in each ranking on its own (n = 1).
    pub fn per_ranking_exposure(&self, group: &Group, k: usize) -> Result<ExposureDistribution> {
        self.check(k)?;
        let g = self.index.position(group)?;
        let weights = position_weights(k);
        let o: f64 = weights.iter().sum();
        let values = par::map(&self.rows, Execution::default(), |row| {
            let num: f64 = row
                .slots
                .iter()
                .zip(&weights)
                .filter(|(s, _)| s.group == g)
                .map(|(_, w)| w)
                .sum();
            num / o
        });
        Ok(ExposureDistribution {
            group: group.clone(),
            k,
            per_ranking_values: values,
        })
    }

    pub fn disparate(&self, a: &Group, b: &Group, k: usize, metric: Metric) -> Result<f64> {
        Ok((self.metric(metric, a, k)? - self.metric(metric, b, k)?).abs())
    }

    /// All unordered pairs of `groups`, in list order, and their means.
    pub fn overall_disparity(&self, groups: &[Group], k: usize) -> Result<DisparityReport> {
        if groups.len() < 2 {
            return Err(MetricsError::TooFewGroups(groups.len()));
        }
        let mut seen = HashSet::new();
        for g in groups {
            self.index.position(g)?;
            if !seen.insert(g) {
                return Err(MetricsError::DuplicateGroup(g.to_string()));
            }
        }
        let all = self.group_metrics(k)?;
        let lookup = |g: &Group| &all[self.index.position(g).expect("checked above")];
        let mut vis = Vec::new();
        let mut exp = Vec::new();
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                let (ma, mb) = (lookup(a), lookup(b));
                vis.push(PairValue {
                    a: a.clone(),
                    b: b.clone(),
                    value: (ma.visibility - mb.visibility).abs(),
                });
                exp.push(PairValue {
                    a: a.clone(),
                    b: b.clone(),
                    value: (ma.exposure - mb.exposure).abs(),
                });
            }
        }
        let mean = |v: &[PairValue]| v.iter().map(|p| p.value).sum::<f64>() / v.len() as f64;
        Ok(DisparityReport {
            k,
            groups: groups.to_vec(),
            overall_visibility: mean(&vis),
            overall_exposure: mean(&exp),
            pairwise_visibility: vis,
            pairwise_exposure: exp,
        })
    }

    /// Metric per gallery group, computed separately over the rankings of
    /// each probe group. With `exclude_mates`, slots holding the probe's own
    /// identity count for no group while denominators stay unchanged.
    pub fn probe_conditioned(&self, metric: Metric, k: usize, exclude_mates: bool) -> Result<ProbeConditionedMatrix> {
        self.check(k)?;
        let groups = self.index.groups();
        let weights = Self::weights(metric, k);
        let per_ranking: f64 = weights.iter().sum();
        let probe_groups: Vec<usize> = (0..groups.len()).collect();
        let rows = par::map(&probe_groups, Execution::default(), |&pg| {
            let members = || self.rows.iter().filter(move |r| r.probe_group == pg);
            let count = members().count();
            if count == 0 {
                return (0, vec![None; groups.len()]);
            }
            let denom = count as f64 * per_ranking;
            let cells = self
                .numerators(members(), &weights, exclude_mates)
                .into_iter()
                .map(|num| Some(num / denom))
                .collect();
            (count, cells)
        });
        let (probe_counts, cells) = rows.into_iter().unzip();
        Ok(ProbeConditionedMatrix {
            metric,
            exclude_mates,
            k,
            groups: groups.to_vec(),
            probe_counts,
            cells,
        })
    }
}
