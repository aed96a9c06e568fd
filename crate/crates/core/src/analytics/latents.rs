use rayon::prelude::*;

use super::AnalyticsError;
use crate::geometry::MultiClassPointCloud;
use crate::network::{Checkpoint, Direction};
use crate::synthheart::ManifestEntry;

/// Latent vectors, one row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDataset {
    pub direction: Direction,
    pub ids: Vec<String>,
    pub latents: Vec<Vec<f64>>,
}

impl LatentDataset {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.latents.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id");
        for k in 0..self.dim() {
            out.push_str(&format!(",z{k}"));
        }
        out.push('\n');
        for (id, z) in self.ids.iter().zip(&self.latents) {
            out.push_str(id);
            for v in z {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Row lookup by subject id.
    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|s| s == id).map(|i| self.latents[i].as_slice())
    }
}

/// Encoder inputs of one subject: both phases in mm.
#[derive(Debug, Clone)]
pub struct SubjectPhases {
    pub id: String,
    pub ed: MultiClassPointCloud,
    pub es: MultiClassPointCloud,
}

fn check_direction(checkpoint: &Checkpoint, direction: Direction) -> Result<(), AnalyticsError> {
    if checkpoint.direction != direction {
        return Err(AnalyticsError::DirectionMismatch {
            checkpoint: checkpoint.direction,
            requested: direction,
        });
    }
    Ok(())
}

/// Encodes each subject's input phase (ED for contraction, ES for
/// relaxation) with the checkpoint's encoder.
pub fn extract_latents(
    subjects: &[SubjectPhases],
    checkpoint: &Checkpoint,
    direction: Direction,
) -> Result<LatentDataset, AnalyticsError> {
    check_direction(checkpoint, direction)?;
    let latents = subjects
        .par_iter()
        .map(|s| {
            let input = match direction {
                Direction::Ed2Es => &s.ed,
                Direction::Es2Ed => &s.es,
            };
            checkpoint.model.encode_mm(input).map_err(|e| AnalyticsError::Subject {
                subject: s.id.clone(),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LatentDataset {
        direction,
        ids: subjects.iter().map(|s| s.id.clone()).collect(),
        latents,
    })
}

/// As [`extract_latents`], reading each subject's input cloud from disk.
pub fn extract_latents_from_manifest(
    entries: &[ManifestEntry],
    checkpoint: &Checkpoint,
    direction: Direction,
) -> Result<LatentDataset, AnalyticsError> {
    check_direction(checkpoint, direction)?;
    let latents = entries
        .par_iter()
        .map(|e| {
            let cloud = match direction {
                Direction::Ed2Es => e.load_ed(),
                Direction::Es2Ed => e.load_es(),
            }
            .map_err(|err| AnalyticsError::Subject {
                subject: e.subject_id.clone(),
                message: err.to_string(),
            })?;
            checkpoint.model.encode_mm(&cloud).map_err(|err| AnalyticsError::Subject {
                subject: e.subject_id.clone(),
                message: err.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LatentDataset {
        direction,
        ids: entries.iter().map(|e| e.subject_id.clone()).collect(),
        latents,
    })
}
