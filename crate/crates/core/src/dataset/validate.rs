use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    OrphanRecord,
    DuplicateImageId,
    DimensionMismatch,
    EmptyDimension,
    NonFiniteComponent,
    ZeroNorm,
    UnknownClass,
    IdentityKeyMismatch,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::OrphanRecord => "orphan-record",
            ViolationCode::DuplicateImageId => "duplicate-image-id",
            ViolationCode::DimensionMismatch => "dimension-mismatch",
            ViolationCode::EmptyDimension => "empty-dimension",
            ViolationCode::NonFiniteComponent => "non-finite-component",
            ViolationCode::ZeroNorm => "zero-norm",
            ViolationCode::UnknownClass => "unknown-class",
            ViolationCode::IdentityKeyMismatch => "identity-key-mismatch",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub locator: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.code, self.locator)
    }
}

/// Re-checks every dataset invariant. An empty list means the dataset is
/// well formed. Vector norms are only required to be positive; unit norm is
/// not enforced because loading without normalization is legitimate.
pub fn validate(ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, locator: String| out.push(Violation { code, locator });

    if ds.dim == 0 {
        push(ViolationCode::EmptyDimension, "dataset".into());
    }
    for (key, info) in &ds.identities {
        if key != &info.identity_id {
            push(ViolationCode::IdentityKeyMismatch, format!("identity_id={key}"));
        }
        if ds.scheme.check_group(&info.group).is_err() {
            push(ViolationCode::UnknownClass, format!("identity_id={key}"));
        }
    }
    let mut seen = HashSet::with_capacity(ds.records.len());
    for r in &ds.records {
        let at = format!("image_id={}", r.image_id);
        if !ds.identities.contains_key(&r.identity_id) {
            push(ViolationCode::OrphanRecord, at.clone());
        }
        if !seen.insert(r.image_id.as_str()) {
            push(ViolationCode::DuplicateImageId, at.clone());
        }
        if r.vector.len() != ds.dim {
            push(ViolationCode::DimensionMismatch, at.clone());
        }
        if r.vector.iter().any(|x| !x.is_finite()) {
            push(ViolationCode::NonFiniteComponent, at);
        } else if r.vector.iter().all(|&x| x == 0.0) {
            push(ViolationCode::ZeroNorm, at);
        }
    }
    out
}
