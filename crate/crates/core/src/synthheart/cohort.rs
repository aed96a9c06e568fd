use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    deform_to_es, generate_ed, remodel, sample_mi_deformation, sample_normal_anatomy,
    sample_normal_deformation, sample_severity, DeformationParams, HeartParams, SynthError,
};
use crate::geometry::{ply, MultiClassPointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "prevalent-mi")]
    PrevalentMi,
    #[serde(rename = "incident-mi")]
    IncidentMi,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Normal, Group::PrevalentMi, Group::IncidentMi];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Normal => "normal",
            Group::PrevalentMi => "prevalent-mi",
            Group::IncidentMi => "incident-mi",
        }
    }

    pub fn is_mi(self) -> bool {
        self != Group::Normal
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Group::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| SynthError::Manifest(format!("unknown group '{s}'")))
    }
}

/// One synthetic subject with its paired phases and outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub group: Group,
    pub ed: MultiClassPointCloud,
    pub es: MultiClassPointCloud,
    /// True when `months` is the time to an MI event, false when censored.
    pub event: bool,
    pub months: f64,
    pub heart: HeartParams,
    pub deformation: DeformationParams,
    /// Infarct severity in `[0, 1]`; zero for normal subjects.
    pub severity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortConfig {
    pub n_normal: usize,
    pub n_prevalent_mi: usize,
    pub n_incident_mi: usize,
    pub points_per_class: usize,
    pub study_window_months: f64,
    /// Event rate per month at zero severity.
    pub base_hazard: f64,
    /// Log hazard ratio per unit severity.
    pub severity_log_hazard: f64,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_normal: 500,
            n_prevalent_mi: 60,
            n_incident_mi: 60,
            points_per_class: 1024,
            study_window_months: 120.0,
            base_hazard: 0.006,
            severity_log_hazard: 2.5,
            seed: 0,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.study_window_months > 0.0 && self.study_window_months.is_finite()) {
            return Err(SynthError::InvalidParams("study window must be positive".into()));
        }
        if !(self.base_hazard > 0.0 && self.base_hazard.is_finite()) {
            return Err(SynthError::InvalidParams("base hazard must be positive".into()));
        }
        if !self.severity_log_hazard.is_finite() {
            return Err(SynthError::InvalidParams("severity log hazard must be finite".into()));
        }
        if self.points_per_class < super::MIN_POINTS_PER_CLASS {
            return Err(SynthError::TooFewPoints(self.points_per_class));
        }
        Ok(())
    }
}

/// Event time from a proportional-hazards exponential model truncated to
/// the study window, so every incident subject has its event inside it.
pub fn sample_event_time<R: Rng + ?Sized>(rng: &mut R, hazard: f64, window: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let t = -(1.0 - u * (1.0 - (-hazard * window).exp())).ln() / hazard;
    t.clamp(f64::MIN_POSITIVE, window)
}

fn censoring_time<R: Rng + ?Sized>(rng: &mut R, window: f64) -> f64 {
    window * (1.0 - rng.random::<f64>())
}

fn generate_subject(config: &CohortConfig, group: Group, index: usize, ordinal: usize) -> Result<SubjectRecord, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(ordinal as u64);
    let base = sample_normal_anatomy(&mut rng);
    let (heart, deformation, severity) = if group.is_mi() {
        let s = sample_severity(&mut rng);
        (remodel(base, s), sample_mi_deformation(&mut rng, s), s)
    } else {
        (base, sample_normal_deformation(&mut rng), 0.0)
    };
    let window = config.study_window_months;
    let (event, months) = match group {
        Group::IncidentMi => {
            let hazard = config.base_hazard * (config.severity_log_hazard * severity).exp();
            (true, sample_event_time(&mut rng, hazard, window))
        }
        _ => (false, censoring_time(&mut rng, window)),
    };
    let ed_seed = rng.random::<u64>();
    let es_seed = rng.random::<u64>();
    let ed = generate_ed(&heart, config.points_per_class, ed_seed)?;
    let es = deform_to_es(&ed, &heart, &deformation, es_seed)?;
    Ok(SubjectRecord {
        id: format!("{}-{:04}", group.as_str(), index + 1),
        group,
        ed,
        es,
        event,
        months,
        heart,
        deformation,
        severity,
    })
}

/// Generates normal, prevalent-MI and incident-MI subjects, in that order.
/// Each subject draws from its own random stream, so output does not depend
/// on the worker count.
pub fn generate_cohort(config: &CohortConfig) -> Result<Vec<SubjectRecord>, SynthError> {
    config.validate()?;
    let plan: Vec<(Group, usize)> = [
        (Group::Normal, config.n_normal),
        (Group::PrevalentMi, config.n_prevalent_mi),
        (Group::IncidentMi, config.n_incident_mi),
    ]
    .into_iter()
    .flat_map(|(g, n)| (0..n).map(move |i| (g, i)))
    .collect();
    plan.par_iter()
        .enumerate()
        .map(|(ordinal, &(g, i))| generate_subject(config, g, i, ordinal))
        .collect()
}

/// One row of the cohort manifest; paths are relative to the manifest's
/// directory as written, absolute after [`read_manifest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub ed_path: PathBuf,
    pub es_path: PathBuf,
    pub group: Group,
    pub event: bool,
    pub months: f64,
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const PARAMETERS_FILE: &str = "parameters.json";

#[derive(Serialize)]
struct SubjectParameters<'a> {
    subject_id: &'a str,
    severity: f64,
    heart: &'a HeartParams,
    deformation: &'a DeformationParams,
}

fn io_err(path: &Path, e: impl fmt::Display) -> SynthError {
    SynthError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes each subject's clouds as PLY under `dir/clouds/`, the manifest CSV
/// and a JSON file of generating parameters. Returns the manifest path.
pub fn write_cohort(dir: &Path, subjects: &[SubjectRecord]) -> Result<PathBuf, SynthError> {
    let clouds = dir.join("clouds");
    fs::create_dir_all(&clouds).map_err(|e| io_err(&clouds, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut writer = csv::Writer::from_path(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    for s in subjects {
        let ed_rel = PathBuf::from("clouds").join(format!("{}_ed.ply", s.id));
        let es_rel = PathBuf::from("clouds").join(format!("{}_es.ply", s.id));
        ply::save_ply(&dir.join(&ed_rel), &s.ed)?;
        ply::save_ply(&dir.join(&es_rel), &s.es)?;
        writer
            .serialize(ManifestEntry {
                subject_id: s.id.clone(),
                ed_path: ed_rel,
                es_path: es_rel,
                group: s.group,
                event: s.event,
                months: s.months,
            })
            .map_err(|e| io_err(&manifest_path, e))?;
    }
    writer.flush().map_err(|e| io_err(&manifest_path, e))?;

    let params: Vec<SubjectParameters> = subjects
        .iter()
        .map(|s| SubjectParameters {
            subject_id: &s.id,
            severity: s.severity,
            heart: &s.heart,
            deformation: &s.deformation,
        })
        .collect();
    let params_path = dir.join(PARAMETERS_FILE);
    let json = serde_json::to_string_pretty(&params).map_err(|e| io_err(&params_path, e))?;
    fs::write(&params_path, json + "\n").map_err(|e| io_err(&params_path, e))?;
    Ok(manifest_path)
}

/// Reads a manifest, resolving cloud paths against its directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, SynthError> {
    let root = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    let expected = ["subject_id", "ed_path", "es_path", "group", "event", "months"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(SynthError::Manifest(format!(
            "{}: expected header {}",
            path.display(),
            expected.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<ManifestEntry>().enumerate() {
        let mut entry =
            row.map_err(|e| SynthError::Manifest(format!("{} row {}: {e}", path.display(), i + 2)))?;
        if !(entry.months > 0.0 && entry.months.is_finite()) {
            return Err(SynthError::Manifest(format!(
                "{} row {}: months must be positive",
                path.display(),
                i + 2
            )));
        }
        if entry.group == Group::IncidentMi && !entry.event {
            return Err(SynthError::Manifest(format!(
                "{} row {}: incident-mi subject without event",
                path.display(),
                i + 2
            )));
        }
        entry.ed_path = root.join(&entry.ed_path);
        entry.es_path = root.join(&entry.es_path);
        out.push(entry);
    }
    Ok(out)
}

impl ManifestEntry {
    pub fn load_ed(&self) -> Result<MultiClassPointCloud, SynthError> {
        Ok(ply::load_ply(&self.ed_path)?)
    }

    pub fn load_es(&self) -> Result<MultiClassPointCloud, SynthError> {
        Ok(ply::load_ply(&self.es_path)?)
    }
}
