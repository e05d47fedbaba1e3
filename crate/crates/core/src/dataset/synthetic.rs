//! Clustered embeddings on the unit sphere with per-group tightness knobs.
//!
//! Generation is hierarchical:
//!
//! 1. a shared anchor `a` and, per group, an independent direction `u_g`;
//!    the group center is `normalize((1 - w) a + w u_g)` where
//!    `w = group_dispersion` (`w = 1` gives unrelated groups, small `w`
//!    pulls every group toward the anchor);
//! 2. identity center `normalize(group_center + sigma_id * z)`;
//! 3. image vector `normalize(identity_center + sigma_img * z)`;
//!
//! with `z` a standard Gaussian vector. A smaller `sigma_id` for a group
//! makes its identities more alike.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, DemographicScheme, EmbeddingRecord, IdentityInfo, RangeTag, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub scheme: DemographicScheme,
    pub identities_per_group: usize,
    pub images_per_identity: usize,
    pub dim: usize,
    pub seed: u64,
    /// Mixing weight toward each group's own direction, in `(0, 1]`.
    pub group_dispersion: f64,
    /// Default per-identity spread around the group center.
    pub identity_dispersion: f64,
    /// Per-group overrides of `identity_dispersion`, keyed by group label.
    #[serde(default)]
    pub identity_dispersion_overrides: BTreeMap<String, f64>,
    /// Per-image noise around the identity center; zero is allowed.
    pub image_noise: f64,
    /// Share of each identity's images tagged `long`; the rest are `close`.
    #[serde(default)]
    pub long_range_fraction: f64,
}

impl SyntheticSpec {
    /// Six gender-by-ethnicity groups, 20 identities each, 10 images per
    /// identity, 64 dimensions.
    pub fn diveface_like(seed: u64) -> Self {
        SyntheticSpec {
            scheme: DemographicScheme::diveface(),
            identities_per_group: 20,
            images_per_identity: 10,
            dim: 64,
            seed,
            group_dispersion: 0.5,
            identity_dispersion: 0.15,
            identity_dispersion_overrides: BTreeMap::new(),
            image_noise: 0.1,
            long_range_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(DatasetError::InvalidSynthetic(m));
        if self.dim < 2 {
            return fail(format!("dim must be at least 2, got {}", self.dim));
        }
        if self.identities_per_group == 0 || self.images_per_identity == 0 {
            return fail("identities_per_group and images_per_identity must be positive".into());
        }
        if !(self.group_dispersion > 0.0 && self.group_dispersion <= 1.0) {
            return fail(format!("group_dispersion must be in (0, 1], got {}", self.group_dispersion));
        }
        if !(self.identity_dispersion > 0.0 && self.identity_dispersion.is_finite()) {
            return fail(format!("identity_dispersion must be positive, got {}", self.identity_dispersion));
        }
        for (label, &sigma) in &self.identity_dispersion_overrides {
            if self.scheme.parse_group(label).is_none() {
                return fail(format!("override for unknown group {label:?}"));
            }
            if !(sigma > 0.0 && sigma.is_finite()) {
                return fail(format!("identity dispersion for {label} must be positive, got {sigma}"));
            }
        }
        if !(self.image_noise >= 0.0 && self.image_noise.is_finite()) {
            return fail(format!("image_noise must be non-negative, got {}", self.image_noise));
        }
        if !(0.0..=1.0).contains(&self.long_range_fraction) {
            return fail(format!("long_range_fraction must be in [0, 1], got {}", self.long_range_fraction));
        }
        Ok(())
    }

    fn identity_dispersion_for(&self, label: &str) -> f64 {
        self.identity_dispersion_overrides
            .get(label)
            .copied()
            .unwrap_or(self.identity_dispersion)
    }
}

/// Identity ids are `g{group}-id{n:04}` and image ids `{identity}-img{n:03}`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let degenerate = || DatasetError::InvalidSynthetic("degenerate draw (zero vector)".into());

    let anchor = unit_gaussian(&mut rng, spec.dim).ok_or_else(degenerate)?;
    let groups = spec.scheme.groups();
    let w = spec.group_dispersion;
    let centers = groups
        .iter()
        .map(|_| {
            let own = unit_gaussian(&mut rng, spec.dim)?;
            normalized(anchor.iter().zip(&own).map(|(a, u)| (1.0 - w) * a + w * u).collect())
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(degenerate)?;

    let n_long = (spec.long_range_fraction * spec.images_per_identity as f64).round() as usize;
    let mut identities = Vec::with_capacity(groups.len() * spec.identities_per_group);
    let mut records = Vec::with_capacity(identities.capacity() * spec.images_per_identity);
    for (gi, (group, center)) in groups.iter().zip(&centers).enumerate() {
        let sigma_id = spec.identity_dispersion_for(&group.to_string());
        for j in 0..spec.identities_per_group {
            let identity_id = format!("g{gi}-id{j:04}");
            let id_center = perturb(&mut rng, center, sigma_id).ok_or_else(degenerate)?;
            for i in 0..spec.images_per_identity {
                let vector = perturb(&mut rng, &id_center, spec.image_noise).ok_or_else(degenerate)?;
                records.push(EmbeddingRecord {
                    image_id: format!("{identity_id}-img{i:03}"),
                    identity_id: identity_id.clone(),
                    range: if i < n_long { RangeTag::Long } else { RangeTag::Close },
                    vector,
                });
            }
            identities.push(IdentityInfo {
                identity_id,
                group: group.clone(),
            });
        }
    }
    Dataset::from_parts(spec.scheme.clone(), identities, records, true)
}

fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_gaussian(rng: &mut impl Rng, dim: usize) -> Option<Vec<f64>> {
    normalized(gaussian(rng, dim))
}

fn perturb(rng: &mut impl Rng, center: &[f64], sigma: f64) -> Option<Vec<f64>> {
    let z = gaussian(rng, center.len());
    normalized(center.iter().zip(z).map(|(c, z)| c + sigma * z).collect())
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = super::l2_norm(&v);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}
