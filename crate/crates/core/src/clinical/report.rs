use std::fmt::Write as _;

use rayon::prelude::*;

use super::{chamber_volume, ejection_fraction, mass_from_volumes, per_case_difference, ClinicalError};
use crate::geometry::{AnatomicalClass, MultiClassPointCloud};
use crate::network::Direction;

/// Anatomy biomarkers of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnatomyMetrics {
    pub lv_volume: f64,
    pub rv_volume: f64,
    pub lv_mass: f64,
}

/// Function biomarkers of one ED/ES pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionMetrics {
    pub lv_ef: f64,
    pub rv_ef: f64,
}

pub fn anatomy_metrics(cloud: &MultiClassPointCloud, n_slabs: usize) -> Result<AnatomyMetrics, ClinicalError> {
    let [endo, epi, rv] = cloud.split_by_class();
    let lv_volume = chamber_volume(&endo, n_slabs)?;
    let epi_volume = chamber_volume(&epi, n_slabs)?;
    Ok(AnatomyMetrics {
        lv_volume,
        rv_volume: chamber_volume(&rv, n_slabs)?,
        lv_mass: mass_from_volumes(lv_volume, epi_volume)?,
    })
}

pub fn function_metrics(ed: &AnatomyMetrics, es: &AnatomyMetrics) -> Result<FunctionMetrics, ClinicalError> {
    Ok(FunctionMetrics {
        lv_ef: ejection_fraction(ed.lv_volume, es.lv_volume)?,
        rv_ef: ejection_fraction(ed.rv_volume, es.rv_volume)?,
    })
}

/// LV and RV ejection fractions of a gold-standard ED/ES pair.
pub fn cloud_function_metrics(
    ed: &MultiClassPointCloud,
    es: &MultiClassPointCloud,
    n_slabs: usize,
) -> Result<FunctionMetrics, ClinicalError> {
    let cavity = |c: &MultiClassPointCloud, class| chamber_volume(&c.class_points(class), n_slabs);
    Ok(FunctionMetrics {
        lv_ef: ejection_fraction(cavity(ed, AnatomicalClass::LvEndo)?, cavity(es, AnatomicalClass::LvEndo)?)?,
        rv_ef: ejection_fraction(cavity(ed, AnatomicalClass::RvEndo)?, cavity(es, AnatomicalClass::RvEndo)?)?,
    })
}

/// One case: the gold input phase, the gold output phase and the predicted
/// output phase.
#[derive(Debug, Clone)]
pub struct EvaluationCase {
    pub id: String,
    pub input: MultiClassPointCloud,
    pub gold: MultiClassPointCloud,
    pub predicted: MultiClassPointCloud,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseMetrics {
    pub id: String,
    pub gold: AnatomyMetrics,
    pub predicted: AnatomyMetrics,
    pub gold_function: FunctionMetrics,
    pub predicted_function: FunctionMetrics,
    /// Per-case differences in percent for LV volume, RV volume, LV mass.
    pub difference: [f64; 3],
}

/// Population mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub gold: MeanSd,
    pub predicted: MeanSd,
    /// Per-case difference statistics, for anatomy metrics only.
    pub difference: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub direction: Direction,
    pub n_slabs: usize,
    pub cases: Vec<CaseMetrics>,
    pub summary: Vec<MetricSummary>,
}

pub const ANATOMY_METRICS: [&str; 3] = ["lv_volume_ml", "rv_volume_ml", "lv_mass_g"];
pub const FUNCTION_METRICS: [&str; 2] = ["lv_ef_pct", "rv_ef_pct"];

fn anatomy_values(m: &AnatomyMetrics) -> [f64; 3] {
    [m.lv_volume, m.rv_volume, m.lv_mass]
}

fn function_values(m: &FunctionMetrics) -> [f64; 2] {
    [m.lv_ef, m.rv_ef]
}

fn evaluate_case(case: &EvaluationCase, direction: Direction, n_slabs: usize) -> Result<CaseMetrics, ClinicalError> {
    let input = anatomy_metrics(&case.input, n_slabs)?;
    let gold = anatomy_metrics(&case.gold, n_slabs)?;
    let predicted = anatomy_metrics(&case.predicted, n_slabs)?;
    // Only the output phase is predicted; the input phase is always gold.
    let (gold_function, predicted_function) = match direction {
        Direction::Ed2Es => (function_metrics(&input, &gold)?, function_metrics(&input, &predicted)?),
        Direction::Es2Ed => (function_metrics(&gold, &input)?, function_metrics(&predicted, &input)?),
    };
    let g = anatomy_values(&gold);
    let p = anatomy_values(&predicted);
    let mut difference = [0.0; 3];
    for i in 0..3 {
        difference[i] = per_case_difference(p[i], g[i])?;
    }
    Ok(CaseMetrics {
        id: case.id.clone(),
        gold,
        predicted,
        gold_function,
        predicted_function,
        difference,
    })
}

/// Per-case biomarkers of predicted versus gold clouds and their population
/// statistics.
pub fn evaluate_population(
    cases: &[EvaluationCase],
    direction: Direction,
    n_slabs: usize,
) -> Result<EvaluationReport, ClinicalError> {
    if cases.is_empty() {
        return Err(ClinicalError::EmptyPopulation);
    }
    let cases: Vec<CaseMetrics> = cases
        .par_iter()
        .map(|c| evaluate_case(c, direction, n_slabs))
        .collect::<Result<_, _>>()?;
    let column = |f: &dyn Fn(&CaseMetrics) -> f64| cases.iter().map(f).collect::<Vec<f64>>();
    let mut summary = Vec::new();
    for (i, metric) in ANATOMY_METRICS.into_iter().enumerate() {
        summary.push(MetricSummary {
            metric,
            gold: MeanSd::of(&column(&|c| anatomy_values(&c.gold)[i])),
            predicted: MeanSd::of(&column(&|c| anatomy_values(&c.predicted)[i])),
            difference: Some(MeanSd::of(&column(&|c| c.difference[i]))),
        });
    }
    for (i, metric) in FUNCTION_METRICS.into_iter().enumerate() {
        summary.push(MetricSummary {
            metric,
            gold: MeanSd::of(&column(&|c| function_values(&c.gold_function)[i])),
            predicted: MeanSd::of(&column(&|c| function_values(&c.predicted_function)[i])),
            difference: None,
        });
    }
    Ok(EvaluationReport {
        direction,
        n_slabs,
        cases,
        summary,
    })
}

impl EvaluationReport {
    pub fn summary_for(&self, metric: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.metric == metric)
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["subject_id".to_string()];
        for m in ANATOMY_METRICS.iter().chain(&FUNCTION_METRICS) {
            cols.push(format!("gold_{m}"));
            cols.push(format!("pred_{m}"));
        }
        for m in ANATOMY_METRICS {
            cols.push(format!("diff_{m}_pct"));
        }
        cols.join(",")
    }

    /// Per-case table, one row per case.
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        for c in &self.cases {
            let mut row = vec![c.id.clone()];
            let g = anatomy_values(&c.gold);
            let p = anatomy_values(&c.predicted);
            for i in 0..3 {
                row.push(g[i].to_string());
                row.push(p[i].to_string());
            }
            let gf = function_values(&c.gold_function);
            let pf = function_values(&c.predicted_function);
            for i in 0..2 {
                row.push(gf[i].to_string());
                row.push(pf[i].to_string());
            }
            row.extend(c.difference.iter().map(|d| d.to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Mean ± SD block per metric.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "direction: {}", self.direction);
        let _ = writeln!(out, "cases: {}", self.cases.len());
        let _ = writeln!(out, "volume method: principal-axis disc summation, {} slabs, per-slab convex hull", self.n_slabs);
        let _ = writeln!(out, "note: convex hulls overestimate crescent-shaped RV slices");
        let _ = writeln!(out, "per-case difference: |pred - gold| / |gold| * 100 (gold denominator)");
        let _ = writeln!(
            out,
            "ejection fraction: gold {} phase paired with predicted {} phase",
            match self.direction {
                Direction::Ed2Es => "ED",
                Direction::Es2Ed => "ES",
            },
            match self.direction {
                Direction::Ed2Es => "ES",
                Direction::Es2Ed => "ED",
            }
        );
        for s in &self.summary {
            let _ = write!(
                out,
                "{:<14} gold {:.2} ± {:.2}  pred {:.2} ± {:.2}",
                s.metric, s.gold.mean, s.gold.sd, s.predicted.mean, s.predicted.sd
            );
            if let Some(d) = s.difference {
                let _ = write!(out, "  per-case diff {:.2} ± {:.2} %", d.mean, d.sd);
            }
            out.push('\n');
        }
        out
    }
}
