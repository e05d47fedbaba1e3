use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, EmbeddingRecord, RangeTag, Result};
use crate::rng;

/// Sampling parameters for the probe/gallery protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Images sampled per identity; identities with fewer are skipped.
    pub l: usize,
    pub probe_frac: f64,
    /// Ranking cutoff.
    pub k: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            l: 10,
            probe_frac: 0.3,
            k: 10,
            seed: 0,
        }
    }
}

impl SplitConfig {
    /// `floor(probe_frac * l)`, tolerant of products like `0.3 * 10` that
    /// land a hair under an integer.
    pub fn probes_per_identity(&self) -> usize {
        (self.probe_frac * self.l as f64 + 1e-9).floor() as usize
    }

    pub fn gallery_per_identity(&self) -> usize {
        self.l - self.probes_per_identity()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(DatasetError::InvalidSplitConfig(m));
        if self.l < 2 {
            return fail(format!("l must be at least 2, got {}", self.l));
        }
        if !(self.probe_frac > 0.0 && self.probe_frac < 1.0) {
            return fail(format!("probe_frac must be in (0, 1), got {}", self.probe_frac));
        }
        let p = self.probes_per_identity();
        if p < 1 || p > self.l - 1 {
            return fail(format!(
                "floor(probe_frac * l) = {p} leaves no probe or no gallery image at l = {}",
                self.l
            ));
        }
        if self.k < 1 {
            return fail("k must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Ordered by identity, then by draw order within the identity.
    pub probes: Vec<EmbeddingRecord>,
    pub gallery_images: BTreeMap<String, Vec<EmbeddingRecord>>,
    pub eligible_identities: BTreeSet<String>,
}

impl Split {
    /// Gallery images restricted to one capture range. Identities left
    /// without images are dropped.
    pub fn gallery_in_range(&self, range: Option<RangeTag>) -> BTreeMap<String, Vec<EmbeddingRecord>> {
        self.gallery_images
            .iter()
            .filter_map(|(id, imgs)| {
                let kept: Vec<_> = imgs
                    .iter()
                    .filter(|r| range.is_none_or(|want| r.range == want))
                    .cloned()
                    .collect();
                (!kept.is_empty()).then(|| (id.clone(), kept))
            })
            .collect()
    }
}

/// Samples `l` images per eligible identity and splits them into probes and
/// gallery images.
///
/// Each identity draws from its own ChaCha8 stream keyed by `(seed,
/// identity_id)` over its images sorted by `image_id`, so the outcome for one
/// identity does not depend on record order or on which other identities are
/// present.
pub fn split_probe_gallery(ds: &Dataset, cfg: &SplitConfig) -> Result<Split> {
    cfg.validate()?;
    let n_probes = cfg.probes_per_identity();
    let mut probes = Vec::new();
    let mut gallery_images = BTreeMap::new();
    let mut eligible_identities = BTreeSet::new();

    for (identity, images) in ds.records_by_identity() {
        if images.len() < cfg.l {
            continue;
        }
        let mut stream = rng::keyed_stream(cfg.seed, identity);
        let picks = rng::sample_without_replacement(&mut stream, images.len(), cfg.l);
        probes.extend(picks[..n_probes].iter().map(|&i| images[i].clone()));
        gallery_images.insert(
            identity.to_owned(),
            picks[n_probes..].iter().map(|&i| images[i].clone()).collect(),
        );
        eligible_identities.insert(identity.to_owned());
    }

    if eligible_identities.is_empty() {
        return Err(DatasetError::EmptySplit { l: cfg.l });
    }
    Ok(Split {
        probes,
        gallery_images,
        eligible_identities,
    })
}
