//! Embedding datasets annotated with identities and demographic groups.
//!
//! Everything downstream is cosine-based, so vectors are L2-normalized on
//! ingestion unless the caller opts out. Datasets are immutable once built.

mod io;
mod scheme;
mod split;
mod synthetic;
mod validate;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_dataset, load_from_readers, read_embeddings, read_identities, write_embeddings, write_identities};
pub use scheme::{Attribute, DemographicScheme, Group};
pub use split::{split_probe_gallery, Split, SplitConfig};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use validate::{validate, Violation, ViolationCode};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid scheme: {0}")]
    Scheme(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("empty embedding at image_id={image_id} (line {line})")]
    EmptyVector { image_id: String, line: usize },
    #[error("dimension mismatch at image_id={image_id} (line {line}): expected {expected}, found {found}")]
    DimensionMismatch {
        image_id: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("zero-norm vector at image_id={image_id} (line {line})")]
    ZeroNorm { image_id: String, line: usize },
    #[error("non-finite component {index} at image_id={image_id} (line {line})")]
    NonFinite {
        image_id: String,
        line: usize,
        index: usize,
    },
    #[error("duplicate image_id={image_id} (line {line})")]
    DuplicateImageId { image_id: String, line: usize },
    #[error("identity_id={identity_id} referenced by image_id={image_id} (line {line}) has no metadata row")]
    MissingIdentity {
        identity_id: String,
        image_id: String,
        line: usize,
    },
    #[error("unknown class {class:?} for attribute {attribute:?} at identity_id={identity_id} (row {row})")]
    UnknownClass {
        identity_id: String,
        attribute: String,
        class: String,
        row: usize,
    },
    #[error("duplicate identity_id={identity_id} in metadata (row {row})")]
    DuplicateIdentity { identity_id: String, row: usize },
    #[error("identity metadata: {0}")]
    Metadata(String),
    #[error("invalid split config: {0}")]
    InvalidSplitConfig(String),
    #[error("empty split: no identity has at least {l} images")]
    EmptySplit { l: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

/// Capture distance of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeTag {
    Close,
    Long,
}

impl std::fmt::Display for RangeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RangeTag::Close => "close",
            RangeTag::Long => "long",
        })
    }
}

impl std::str::FromStr for RangeTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "close" => Ok(RangeTag::Close),
            "long" => Ok(RangeTag::Long),
            other => Err(format!("unknown range {other:?}, expected close or long")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityInfo {
    pub identity_id: String,
    pub group: Group,
}

/// One image's embedding. Serializes to the JSONL record layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub image_id: String,
    pub identity_id: String,
    pub range: RangeTag,
    #[serde(rename = "embedding")]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scheme: DemographicScheme,
    pub identities: BTreeMap<String, IdentityInfo>,
    pub records: Vec<EmbeddingRecord>,
    pub dim: usize,
}

impl Dataset {
    /// Builds a dataset from in-memory parts, enforcing the same checks as
    /// [`load_dataset`]. Record locators are 1-based positions in `records`.
    pub fn from_parts(
        scheme: DemographicScheme,
        identities: Vec<IdentityInfo>,
        records: Vec<EmbeddingRecord>,
        normalize: bool,
    ) -> Result<Self> {
        let identities = index_identities(&scheme, identities)?;
        let numbered = records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        ingest(scheme, identities, numbered, normalize)
    }

    pub fn group_of(&self, identity_id: &str) -> Option<&Group> {
        self.identities.get(identity_id).map(|info| &info.group)
    }

    /// Records grouped per identity, each list sorted by `image_id`.
    pub fn records_by_identity(&self) -> BTreeMap<&str, Vec<&EmbeddingRecord>> {
        let mut out: BTreeMap<&str, Vec<&EmbeddingRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.identity_id.as_str()).or_default().push(r);
        }
        for list in out.values_mut() {
            list.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        }
        out
    }
}

fn index_identities(
    scheme: &DemographicScheme,
    identities: Vec<IdentityInfo>,
) -> Result<BTreeMap<String, IdentityInfo>> {
    let mut map = BTreeMap::new();
    for (i, info) in identities.into_iter().enumerate() {
        scheme.check_group(&info.group).map_err(|(attribute, class)| DatasetError::UnknownClass {
            identity_id: info.identity_id.clone(),
            attribute,
            class,
            row: i + 1,
        })?;
        if map.contains_key(&info.identity_id) {
            return Err(DatasetError::DuplicateIdentity {
                identity_id: info.identity_id,
                row: i + 1,
            });
        }
        map.insert(info.identity_id.clone(), info);
    }
    Ok(map)
}

/// Checks and (optionally) normalizes one vector in place.
pub(crate) fn ingest_vector(vector: &mut [f64], normalize: bool, image_id: &str, line: usize) -> Result<()> {
    if vector.is_empty() {
        return Err(DatasetError::EmptyVector {
            image_id: image_id.to_owned(),
            line,
        });
    }
    if let Some(index) = vector.iter().position(|x| !x.is_finite()) {
        return Err(DatasetError::NonFinite {
            image_id: image_id.to_owned(),
            line,
            index,
        });
    }
    let norm = l2_norm(vector);
    if norm == 0.0 {
        return Err(DatasetError::ZeroNorm {
            image_id: image_id.to_owned(),
            line,
        });
    }
    if normalize {
        vector.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn ingest(
    scheme: DemographicScheme,
    identities: BTreeMap<String, IdentityInfo>,
    records: Vec<(usize, EmbeddingRecord)>,
    normalize: bool,
) -> Result<Dataset> {
    let mut dim = None;
    let mut seen = std::collections::HashSet::with_capacity(records.len());
    let mut out = Vec::with_capacity(records.len());
    for (line, mut rec) in records {
        ingest_vector(&mut rec.vector, normalize, &rec.image_id, line)?;
        let expected = *dim.get_or_insert(rec.vector.len());
        if rec.vector.len() != expected {
            return Err(DatasetError::DimensionMismatch {
                image_id: rec.image_id,
                line,
                expected,
                found: rec.vector.len(),
            });
        }
        if !identities.contains_key(&rec.identity_id) {
            return Err(DatasetError::MissingIdentity {
                identity_id: rec.identity_id,
                image_id: rec.image_id,
                line,
            });
        }
        if !seen.insert(rec.image_id.clone()) {
            return Err(DatasetError::DuplicateImageId {
                image_id: rec.image_id,
                line,
            });
        }
        out.push(rec);
    }
    Ok(Dataset {
        scheme,
        identities,
        records: out,
        dim: dim.unwrap_or(0),
    })
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn two_group_scheme() -> DemographicScheme {
        DemographicScheme::new(vec![Attribute::new("group", ["X", "Y"])]).unwrap()
    }

    pub fn record(image_id: &str, identity_id: &str, vector: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            image_id: image_id.into(),
            identity_id: identity_id.into(),
            range: RangeTag::Close,
            vector: vector.to_vec(),
        }
    }

    pub fn identity(id: &str, class: &str) -> IdentityInfo {
        IdentityInfo {
            identity_id: id.into(),
            group: Group::new([class]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn normalizes_three_four_five() {
        let ds = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("i1", "a", &[3.0, 4.0])],
            true,
        )
        .unwrap();
        assert_eq!(ds.records[0].vector, vec![0.6, 0.8]);
        assert_eq!(ds.dim, 2);
    }

    #[test]
    fn keeps_raw_vectors_when_normalization_is_off() {
        let ds = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("i1", "a", &[3.0, 4.0])],
            false,
        )
        .unwrap();
        assert_eq!(ds.records[0].vector, vec![3.0, 4.0]);
    }

    #[test]
    fn rejects_zero_norm_with_locator() {
        let err = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![
                record("i1", "a", &[1.0, 0.0, 0.0, 0.0]),
                record("i2", "a", &[0.0, 0.0, 0.0, 0.0]),
                record("i3", "a", &[0.0, 1.0, 0.0, 0.0]),
            ],
            true,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("zero-norm vector at image_id=i2"), "{err}");
    }

    #[test]
    fn rejects_nan_and_dimension_mismatch() {
        let nan = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("i1", "a", &[1.0, f64::NAN])],
            true,
        )
        .unwrap_err();
        assert!(matches!(nan, DatasetError::NonFinite { index: 1, .. }));

        let dim = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("i1", "a", &[1.0, 0.0]), record("i2", "a", &[1.0, 0.0, 0.0])],
            true,
        )
        .unwrap_err();
        assert!(matches!(dim, DatasetError::DimensionMismatch { expected: 2, found: 3, line: 2, .. }));
    }

    #[test]
    fn rejects_orphans_duplicates_and_unknown_classes() {
        let orphan = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("i1", "b", &[1.0])],
            true,
        )
        .unwrap_err();
        assert!(matches!(orphan, DatasetError::MissingIdentity { .. }));

        let dup = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("i1", "a", &[1.0]), record("i1", "a", &[2.0])],
            true,
        )
        .unwrap_err();
        assert!(matches!(dup, DatasetError::DuplicateImageId { line: 2, .. }));

        let unknown = Dataset::from_parts(two_group_scheme(), vec![identity("a", "Z")], vec![], true).unwrap_err();
        assert!(matches!(unknown, DatasetError::UnknownClass { .. }));
    }

    #[test]
    fn records_by_identity_sorts_by_image_id() {
        let ds = Dataset::from_parts(
            two_group_scheme(),
            vec![identity("a", "X")],
            vec![record("z", "a", &[1.0]), record("b", "a", &[1.0])],
            true,
        )
        .unwrap();
        let by = ds.records_by_identity();
        let ids: Vec<_> = by["a"].iter().map(|r| r.image_id.as_str()).collect();
        assert_eq!(ids, ["b", "z"]);
    }
}
