//! One-shot computation of every audit quantity over a ranking set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Group;
use crate::metrics::{
    hit_ratio_curve, DisparityReport, ExposureDistribution, GroupIndex, GroupMetrics, HitRatioCurve,
    LabeledRankings, Metric, MetricsError, ProbeConditionedMatrix,
};
use crate::ranker::{rank1_identification_rate, RankingSet};
use crate::stats::{comparisons_note, significance_matrix, SignificanceMatrix, StatsError, DEFAULT_ALPHA};

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid audit settings: {0}")]
    Settings(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSettings {
    /// Cutoff for visibility, exposure and disparities.
    pub k: usize,
    pub alpha: f64,
    /// Largest cutoff on the hit-ratio curve; must lie in `k..=rankings.k`.
    pub hit_ratio_max_k: usize,
    /// Threshold for the rank-1 identification rate.
    pub tau: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        AuditSettings {
            k: 10,
            alpha: DEFAULT_ALPHA,
            hit_ratio_max_k: 10,
            tau: 0.0,
        }
    }
}

impl AuditSettings {
    pub fn validate(&self) -> Result<(), AuditError> {
        let fail = |m: String| Err(AuditError::Settings(m));
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.hit_ratio_max_k < self.k {
            return fail(format!(
                "hit_ratio_max_k ({}) must be at least k ({})",
                self.hit_ratio_max_k, self.k
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return fail(format!("tau must be in [0, 1], got {}", self.tau));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentificationRate {
    pub tau: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGroupCount {
    pub group: Group,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResults {
    pub n_rankings: usize,
    pub k: usize,
    pub probes_per_group: Vec<ProbeGroupCount>,
    pub group_metrics: Vec<GroupMetrics>,
    /// Empty pairs and zero overall values when the scheme has one group.
    pub disparity: DisparityReport,
    /// Visibility and exposure, each without and with mate exclusion.
    pub probe_conditioned: Vec<ProbeConditionedMatrix>,
    pub hit_ratio: HitRatioCurve,
    pub exposure_distributions: Vec<ExposureDistribution>,
    pub significance: SignificanceMatrix,
    pub rank1_identification: IdentificationRate,
}

impl AuditResults {
    pub fn matrix(&self, metric: Metric, exclude_mates: bool) -> Option<&ProbeConditionedMatrix> {
        self.probe_conditioned
            .iter()
            .find(|m| m.metric == metric && m.exclude_mates == exclude_mates)
    }
}

pub fn run_audit(rs: &RankingSet, index: &GroupIndex, settings: &AuditSettings) -> Result<AuditResults, AuditError> {
    settings.validate()?;
    if settings.hit_ratio_max_k > rs.k {
        return Err(AuditError::Settings(format!(
            "hit_ratio_max_k ({}) exceeds the ranking depth ({})",
            settings.hit_ratio_max_k, rs.k
        )));
    }
    let view = LabeledRankings::new(rs, index)?;
    let k = settings.k;
    let groups = index.groups();

    let group_metrics = view.group_metrics(k)?;
    let disparity = if groups.len() >= 2 {
        view.overall_disparity(groups, k)?
    } else {
        DisparityReport {
            k,
            groups: groups.to_vec(),
            pairwise_visibility: vec![],
            pairwise_exposure: vec![],
            overall_visibility: 0.0,
            overall_exposure: 0.0,
        }
    };
    let mut probe_conditioned = Vec::with_capacity(4);
    for metric in [Metric::Visibility, Metric::Exposure] {
        for exclude_mates in [false, true] {
            probe_conditioned.push(view.probe_conditioned(metric, k, exclude_mates)?);
        }
    }
    let exposure_distributions = groups
        .iter()
        .map(|g| view.per_ranking_exposure(g, k))
        .collect::<Result<Vec<_>, _>>()?;
    let significance = if groups.len() >= 2 {
        significance_matrix(&exposure_distributions, settings.alpha)?
    } else {
        SignificanceMatrix {
            alpha: settings.alpha,
            comparisons: 0,
            note: comparisons_note(0),
            cells: vec![],
        }
    };
    let probes_per_group = probe_conditioned[0]
        .groups
        .iter()
        .zip(&probe_conditioned[0].probe_counts)
        .map(|(group, &probes)| ProbeGroupCount {
            group: group.clone(),
            probes,
        })
        .collect();

    Ok(AuditResults {
        n_rankings: rs.len(),
        k,
        probes_per_group,
        group_metrics,
        disparity,
        probe_conditioned,
        hit_ratio: hit_ratio_curve(rs, settings.hit_ratio_max_k)?,
        exposure_distributions,
        significance,
        rank1_identification: IdentificationRate {
            tau: settings.tau,
            rate: rank1_identification_rate(rs, settings.tau),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, split_probe_gallery, Attribute, DemographicScheme, SplitConfig, SyntheticSpec};
    use crate::ranker::{build_gallery, rank_all};

    fn pipeline(spec: &SyntheticSpec) -> (RankingSet, GroupIndex) {
        let ds = generate_synthetic(spec).unwrap();
        let split = split_probe_gallery(&ds, &SplitConfig::default()).unwrap();
        let gallery = build_gallery(&split.gallery_images).unwrap();
        (rank_all(&split, &gallery, 10).unwrap(), GroupIndex::from_dataset(&ds))
    }

    #[test]
    fn full_audit_shapes() {
        let (rs, idx) = pipeline(&SyntheticSpec::diveface_like(3));
        let r = run_audit(&rs, &idx, &AuditSettings::default()).unwrap();
        assert_eq!(r.n_rankings, 120 * 3);
        assert_eq!(r.group_metrics.len(), 6);
        assert_eq!(r.disparity.pairwise_exposure.len(), 15);
        assert_eq!(r.probe_conditioned.len(), 4);
        assert_eq!(r.hit_ratio.points.len(), 10);
        assert_eq!(r.exposure_distributions.len(), 6);
        assert_eq!(r.significance.cells.len(), 15);
        assert!(r.probes_per_group.iter().all(|p| p.probes == 60));
        assert!(r.matrix(Metric::Exposure, true).unwrap().exclude_mates);
    }

    #[test]
    fn single_group_scheme_is_perfectly_fair() {
        let spec = SyntheticSpec {
            scheme: DemographicScheme::new(vec![Attribute::new("all", ["Everyone"])]).unwrap(),
            identities_per_group: 30,
            ..SyntheticSpec::diveface_like(4)
        };
        let (rs, idx) = pipeline(&spec);
        let r = run_audit(&rs, &idx, &AuditSettings::default()).unwrap();
        assert_eq!(r.group_metrics[0].visibility, 1.0);
        assert!((r.group_metrics[0].exposure - 1.0).abs() < 1e-12);
        assert_eq!(r.disparity.overall_visibility, 0.0);
        assert_eq!(r.disparity.overall_exposure, 0.0);
        assert!(r.significance.cells.is_empty());
    }

    #[test]
    fn settings_are_validated() {
        let (rs, idx) = pipeline(&SyntheticSpec::diveface_like(5));
        let bad = [
            AuditSettings { k: 0, ..Default::default() },
            AuditSettings { hit_ratio_max_k: 5, ..Default::default() },
            AuditSettings { hit_ratio_max_k: 11, ..Default::default() },
            AuditSettings { alpha: 0.0, ..Default::default() },
            AuditSettings { tau: 1.5, ..Default::default() },
        ];
        for s in bad {
            assert!(matches!(run_audit(&rs, &idx, &s), Err(AuditError::Settings(_))), "{s:?}");
        }
    }

    #[test]
    fn results_round_trip_through_json() {
        let (rs, idx) = pipeline(&SyntheticSpec::diveface_like(6));
        let r = run_audit(&rs, &idx, &AuditSettings::default()).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: AuditResults = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
