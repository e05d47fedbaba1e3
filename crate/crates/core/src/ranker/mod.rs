//! Cosine ranking of probes against an averaged-embedding gallery.

mod calibrate;
mod jsonl;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{EmbeddingRecord, RangeTag, Split};
use crate::par::{self, Execution};

pub use calibrate::{calibrate_scores, calibrate_threshold, ThresholdCalibration, VerificationPair, DEFAULT_GRID_SIZE};
pub use jsonl::{format_score, read_rankings, write_rankings};

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("threshold must be in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("calibration needs at least one {0} pair")]
    MissingPairs(&'static str),
    #[error("grid size must be at least 2, got {0}")]
    InvalidGrid(usize),
    #[error("identity_id={0} has no gallery images")]
    EmptyIdentity(String),
    #[error("identity_id={0}: mean embedding is degenerate (norm below 1e-12)")]
    DegenerateMean(String),
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("gallery lists identity_id={0} more than once")]
    DuplicateGalleryIdentity(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("probe image_id={image_id}: {source}")]
    Probe {
        image_id: String,
        #[source]
        source: Box<RankError>,
    },
    #[error("rankings line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = RankError> = std::result::Result<T, E>;

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(RankError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(RankError::ZeroNorm);
    }
    // sqrt(uu * vv) rather than sqrt(uu) * sqrt(vv): exact 1.0 for u == v.
    Ok(clamp_score(dot / (uu * vv).sqrt()))
}

fn clamp_score(s: f64) -> f64 {
    // `+ 0.0` folds -0.0 into 0.0 so total_cmp ordering matches `==`.
    s.clamp(-1.0, 1.0) + 0.0
}

/// Verification decision: accept iff the cosine strictly exceeds `tau`.
pub fn verify(probe: &[f64], reference: &[f64], tau: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(RankError::InvalidThreshold(tau));
    }
    Ok(cosine(probe, reference)? > tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub identity_id: String,
    /// Unit norm.
    pub vector: Vec<f64>,
}

/// Enrolls each identity as the renormalized mean of its unit-normalized
/// images. Output is sorted by `identity_id`.
pub fn build_gallery(gallery_images: &BTreeMap<String, Vec<EmbeddingRecord>>) -> Result<Vec<GalleryEntry>> {
    gallery_images
        .iter()
        .map(|(identity_id, images)| {
            let first = images
                .first()
                .ok_or_else(|| RankError::EmptyIdentity(identity_id.clone()))?;
            let dim = first.vector.len();
            let mut sum = vec![0.0; dim];
            for img in images {
                if img.vector.len() != dim {
                    return Err(RankError::DimensionMismatch {
                        left: dim,
                        right: img.vector.len(),
                    });
                }
                let norm = norm(&img.vector);
                if norm == 0.0 {
                    return Err(RankError::ZeroNorm);
                }
                sum.iter_mut().zip(&img.vector).for_each(|(s, x)| *s += x / norm);
            }
            let count = images.len() as f64;
            sum.iter_mut().for_each(|s| *s /= count);
            let mean_norm = norm(&sum);
            if mean_norm < 1e-12 {
                return Err(RankError::DegenerateMean(identity_id.clone()));
            }
            sum.iter_mut().for_each(|s| *s /= mean_norm);
            Ok(GalleryEntry {
                identity_id: identity_id.clone(),
                vector: sum,
            })
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub identity_id: String,
    pub score: f64,
}

/// Top-k gallery identities for one probe, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub probe_image_id: String,
    pub probe_identity_id: String,
    pub entries: Vec<RankEntry>,
}

impl Ranking {
    /// 1-based position of the probe's own identity, if ranked.
    pub fn mate_position(&self) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.identity_id == self.probe_identity_id)
            .map(|p| p + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSet {
    pub rankings: Vec<Ranking>,
    pub k: usize,
    /// Capture range the gallery was restricted to, if any.
    pub gallery_range: Option<RangeTag>,
}

impl RankingSet {
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }
}

/// Descending score, then ascending identity id.
fn rank_order(a: &(f64, &str), b: &(f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

fn check_gallery(gallery: &[GalleryEntry]) -> Result<()> {
    if gallery.is_empty() {
        return Err(RankError::EmptyGallery);
    }
    let mut seen = HashSet::with_capacity(gallery.len());
    for e in gallery {
        if !seen.insert(e.identity_id.as_str()) {
            return Err(RankError::DuplicateGalleryIdentity(e.identity_id.clone()));
        }
    }
    Ok(())
}

/// Ranks the whole gallery against `probe` by exhaustive scan and keeps the
/// best `min(k, m)` identities.
pub fn rank(probe: &EmbeddingRecord, gallery: &[GalleryEntry], k: usize) -> Result<Ranking> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    check_gallery(gallery)?;
    rank_checked(probe, gallery, k)
}

fn rank_checked(probe: &EmbeddingRecord, gallery: &[GalleryEntry], k: usize) -> Result<Ranking> {
    let wrap = |source| RankError::Probe {
        image_id: probe.image_id.clone(),
        source: Box::new(source),
    };
    let mut scored = gallery
        .iter()
        .map(|g| Ok((cosine(&probe.vector, &g.vector)?, g.identity_id.as_str())))
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;
    let keep = k.min(scored.len());
    if keep < scored.len() {
        scored.select_nth_unstable_by(keep - 1, rank_order);
        scored.truncate(keep);
    }
    scored.sort_unstable_by(rank_order);
    Ok(Ranking {
        probe_image_id: probe.image_id.clone(),
        probe_identity_id: probe.identity_id.clone(),
        entries: scored
            .into_iter()
            .map(|(score, id)| RankEntry {
                identity_id: id.to_owned(),
                score,
            })
            .collect(),
    })
}

/// One ranking per probe in split order, fanned out per [`Execution::default`].
pub fn rank_all(split: &Split, gallery: &[GalleryEntry], k: usize) -> Result<RankingSet> {
    rank_all_with(split, gallery, k, Execution::default())
}

pub fn rank_all_serial(split: &Split, gallery: &[GalleryEntry], k: usize) -> Result<RankingSet> {
    rank_all_with(split, gallery, k, Execution::Serial)
}

pub fn rank_all_with(split: &Split, gallery: &[GalleryEntry], k: usize, exec: Execution) -> Result<RankingSet> {
    rank_probes(&split.probes, gallery, k, exec)
}

/// [`rank_all_with`] over an explicit probe list.
pub fn rank_probes(probes: &[EmbeddingRecord], gallery: &[GalleryEntry], k: usize, exec: Execution) -> Result<RankingSet> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    check_gallery(gallery)?;
    let rankings = par::try_map(probes, exec, |p| rank_checked(p, gallery, k))?;
    Ok(RankingSet {
        rankings,
        k,
        gallery_range: None,
    })
}

/// Share of probes whose top-1 identity is their own and whose top-1 score
/// strictly exceeds `tau`. Returns 0 for an empty set.
pub fn rank1_identification_rate(rs: &RankingSet, tau: f64) -> f64 {
    if rs.is_empty() {
        return 0.0;
    }
    let hits = rs
        .rankings
        .iter()
        .filter(|r| {
            r.entries
                .first()
                .is_some_and(|top| top.identity_id == r.probe_identity_id && top.score > tau)
        })
        .count();
    hits as f64 / rs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rec(id: &str, identity: &str, v: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            image_id: id.into(),
            identity_id: identity.into(),
            range: RangeTag::Close,
            vector: v.to_vec(),
        }
    }

    fn entry(id: &str, v: &[f64]) -> GalleryEntry {
        GalleryEntry {
            identity_id: id.into(),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.7, 2.2, 0.01];
        assert_eq!(cosine(&v, &v).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap(), 8.0 / 9.0, epsilon = 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[-2.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(RankError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), Err(RankError::ZeroNorm));
    }

    #[test]
    fn verify_is_strict() {
        let u = [0.6, 0.8];
        assert!(verify(&u, &u, 0.99).unwrap());
        assert!(!verify(&[1.0, 0.0], &[0.0, 1.0], 0.0).unwrap());
        assert!(!verify(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0], 0.9).unwrap());
        assert!(verify(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0], 0.88).unwrap());
        assert_eq!(verify(&u, &u, 1.5), Err(RankError::InvalidThreshold(1.5)));
    }

    #[test]
    fn gallery_means() {
        let mut imgs = BTreeMap::new();
        imgs.insert("solo".to_owned(), vec![rec("a", "solo", &[0.6, 0.8])]);
        imgs.insert("twin".to_owned(), vec![rec("b", "twin", &[0.0, 1.0]), rec("c", "twin", &[0.0, 1.0])]);
        imgs.insert("mix".to_owned(), vec![rec("d", "mix", &[1.0, 0.0]), rec("e", "mix", &[0.0, 1.0])]);
        let g = build_gallery(&imgs).unwrap();
        assert_eq!(g.iter().map(|e| e.identity_id.as_str()).collect::<Vec<_>>(), ["mix", "solo", "twin"]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(g[0].vector[0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0].vector[1], h, epsilon = 1e-15);
        assert_eq!(g[1].vector, vec![0.6, 0.8]);
        assert_eq!(g[2].vector, vec![0.0, 1.0]);
    }

    #[test]
    fn gallery_mean_normalizes_inputs_first() {
        let mut imgs = BTreeMap::new();
        imgs.insert("x".to_owned(), vec![rec("a", "x", &[100.0, 0.0]), rec("b", "x", &[0.0, 1.0])]);
        let g = build_gallery(&imgs).unwrap();
        assert_abs_diff_eq!(g[0].vector[0], g[0].vector[1], epsilon = 1e-15);
    }

    #[test]
    fn antipodal_mean_is_an_error() {
        let mut imgs = BTreeMap::new();
        imgs.insert("x".to_owned(), vec![rec("a", "x", &[1.0, 0.0]), rec("b", "x", &[-1.0, 0.0])]);
        assert_eq!(build_gallery(&imgs), Err(RankError::DegenerateMean("x".into())));
        imgs.insert("x".to_owned(), vec![]);
        assert_eq!(build_gallery(&imgs), Err(RankError::EmptyIdentity("x".into())));
    }

    #[test]
    fn rank_length_is_min_k_m() {
        let g = [entry("only", &[1.0, 0.0])];
        let r = rank(&rec("p", "only", &[1.0, 1.0]), &g, 10).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.mate_position(), Some(1));
    }

    #[test]
    fn rank_puts_exact_match_first_and_breaks_ties_by_id() {
        let g = [
            entry("c", &[0.0, 1.0]),
            entry("b", &[0.0, 1.0]),
            entry("a", &[1.0, 0.0]),
            entry("d", &[-1.0, 0.0]),
        ];
        let r = rank(&rec("p", "a", &[1.0, 0.0]), &g, 3).unwrap();
        let ids: Vec<_> = r.entries.iter().map(|e| e.identity_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(r.entries[0].score, 1.0);
        assert_eq!(r.entries[1].score, 0.0);
    }

    #[test]
    fn rank_rejects_bad_input() {
        let g = [entry("a", &[1.0, 0.0])];
        assert_eq!(rank(&rec("p", "a", &[1.0, 0.0]), &g, 0), Err(RankError::InvalidK));
        assert_eq!(rank(&rec("p", "a", &[1.0, 0.0]), &[], 1), Err(RankError::EmptyGallery));
        assert!(matches!(
            rank(&rec("p", "a", &[1.0, 0.0, 0.0]), &g, 1),
            Err(RankError::Probe { .. })
        ));
        let dup = [entry("a", &[1.0, 0.0]), entry("a", &[0.0, 1.0])];
        assert_eq!(
            rank(&rec("p", "a", &[1.0, 0.0]), &dup, 1),
            Err(RankError::DuplicateGalleryIdentity("a".into()))
        );
    }

    #[test]
    fn rank1_rate_examples() {
        let mk = |probe: &str, top: &str, score: f64| Ranking {
            probe_image_id: format!("{probe}-img"),
            probe_identity_id: probe.into(),
            entries: vec![RankEntry {
                identity_id: top.into(),
                score,
            }],
        };
        let all_self = RankingSet {
            rankings: vec![mk("a", "a", 1.0), mk("b", "b", 1.0)],
            k: 1,
            gallery_range: None,
        };
        assert_eq!(rank1_identification_rate(&all_self, 0.5), 1.0);
        assert_eq!(rank1_identification_rate(&all_self, 1.0), 0.0);

        let mixed = RankingSet {
            rankings: vec![mk("a", "a", 0.9), mk("b", "c", 0.95), mk("d", "d", 0.4), mk("e", "e", 0.7)],
            k: 1,
            gallery_range: None,
        };
        assert_eq!(rank1_identification_rate(&mixed, 0.5), 0.5);
        assert_eq!(rank1_identification_rate(&mixed, 0.0), 0.75);
        assert_eq!(
            rank1_identification_rate(
                &RankingSet {
                    rankings: vec![],
                    k: 1,
                    gallery_range: None
                },
                0.0
            ),
            0.0
        );
    }
}
