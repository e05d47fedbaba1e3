//! Demographic exposure audits for face identification rankings.
//!
//! The pipeline mirrors a forensic ranking setup: embeddings labelled with
//! identities and demographic groups are split into probes and a gallery,
//! each gallery identity is enrolled as the normalized mean of its images,
//! and every probe is ranked against the gallery by cosine similarity. The
//! resulting top-k rankings are then audited for how visible and how exposed
//! each demographic group is, overall and conditioned on the probe's group.
//!
//! ```
//! use fairrank_core::dataset::{generate_synthetic, split_probe_gallery, SplitConfig, SyntheticSpec};
//! use fairrank_core::metrics::{GroupIndex, LabeledRankings};
//! use fairrank_core::ranker::{build_gallery, rank_all};
//!
//! let mut spec = SyntheticSpec::diveface_like(7);
//! spec.identities_per_group = 12;
//! let ds = generate_synthetic(&spec).unwrap();
//! let cfg = SplitConfig::default();
//! let split = split_probe_gallery(&ds, &cfg).unwrap();
//! let gallery = build_gallery(&split.gallery_images).unwrap();
//! let rankings = rank_all(&split, &gallery, cfg.k).unwrap();
//!
//! let index = GroupIndex::from_dataset(&ds);
//! let view = LabeledRankings::new(&rankings, &index).unwrap();
//! let total: f64 = index.groups().iter().map(|g| view.exposure(g, 10).unwrap()).sum();
//! assert!((total - 1.0).abs() < 1e-9);
//! ```

pub mod audit;
pub mod dataset;
pub mod metrics;
pub mod par;
pub mod ranker;
mod rng;
pub mod stats;

pub use dataset::{Dataset, DemographicScheme, EmbeddingRecord, Group, RangeTag, Split, SplitConfig};
pub use metrics::{GroupIndex, LabeledRankings, Metric};
pub use ranker::{GalleryEntry, Ranking, RankingSet};
pub use stats::{ks_two_sample, KsResult};
