//! JSON landmark annotations.
//!
//! ```json
//! {
//!   "records": [
//!     {
//!       "id": "face-0001",
//!       "landmarks": [[120.5, 88.25], [131.0, 90.0]],
//!       "normalization": 256.0,
//!       "status": ["ok", "fallback"]
//!     }
//!   ]
//! }
//! ```
//!
//! Coordinates are image-space `[u, v]` pairs. `normalization` and `status`
//! are optional. A landmark may be `null` only when its status is `failed`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::{Coordinate, LandmarkSet, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandmarkStatus {
    Ok,
    /// Decoded through a fallback path.
    Fallback,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub id: String,
    pub landmarks: Vec<Option<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Vec<LandmarkStatus>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationDocument {
    records: Vec<AnnotationRecord>,
}

impl AnnotationRecord {
    pub fn new(id: impl Into<String>, landmarks: &LandmarkSet, normalization: Option<f64>) -> Self {
        Self {
            id: id.into(),
            landmarks: landmarks.iter().map(|c| Some([c.x, c.y])).collect(),
            normalization,
            status: None,
        }
    }

    pub fn count(&self) -> usize {
        self.landmarks.len()
    }

    /// The landmarks as an image-space set; fails if any is missing.
    pub fn landmark_set(&self) -> Result<LandmarkSet> {
        self.complete_set().ok_or_else(|| {
            Error::Schema(format!("record '{}' has missing landmarks", self.id))
        })
    }

    /// `None` when any landmark is missing (failed to decode).
    pub fn complete_set(&self) -> Option<LandmarkSet> {
        let coords = self
            .landmarks
            .iter()
            .map(|p| p.and_then(|[u, v]| Coordinate::new(u, v, Space::Image).ok()))
            .collect::<Option<Vec<_>>>()?;
        LandmarkSet::new(coords).ok()
    }

    fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::Schema(format!("record '{}': {msg}", self.id));
        if let Some(d) = self.normalization {
            if !(d.is_finite() && d > 0.0) {
                return Err(ctx(format!("normalization must be > 0, got {d}")));
            }
        }
        if let Some(status) = &self.status {
            if status.len() != self.landmarks.len() {
                return Err(ctx(format!(
                    "{} status entries for {} landmarks",
                    status.len(),
                    self.landmarks.len()
                )));
            }
        }
        for (i, p) in self.landmarks.iter().enumerate() {
            let failed = self
                .status
                .as_ref()
                .is_some_and(|s| s[i] == LandmarkStatus::Failed);
            match p {
                Some([u, v]) if !(u.is_finite() && v.is_finite()) => {
                    return Err(ctx(format!("landmark {i} is not finite")));
                }
                None if !failed => {
                    return Err(ctx(format!("landmark {i} is null but not marked failed")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn validate_records(records: &[AnnotationRecord]) -> Result<()> {
    for r in records {
        r.validate()?;
    }
    if let Some(first) = records.first() {
        if let Some(r) = records.iter().find(|r| r.count() != first.count()) {
            return Err(Error::Schema(format!(
                "record '{}' has {} landmarks but '{}' has {}",
                r.id,
                r.count(),
                first.id,
                first.count()
            )));
        }
    }
    Ok(())
}

pub fn write_annotations(records: &[AnnotationRecord], path: impl AsRef<Path>) -> Result<()> {
    validate_records(records)?;
    let doc = AnnotationDocument {
        records: records.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Schema(format!("cannot serialize annotations: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let doc: AnnotationDocument = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    validate_records(&doc.records)?;
    Ok(doc.records)
}
