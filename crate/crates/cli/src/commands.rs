use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pcdforge_core::analytics::{
    extract_latents_from_manifest, kfold_cv, ks_two_sample, survival_cv, ClassificationMetrics,
    SURVIVAL_CSV_HEADER,
};
use pcdforge_core::clinical::{
    cloud_function_metrics, evaluate_population, EvaluationCase, FunctionMetrics, MeanSd,
    DEFAULT_SLABS,
};
use pcdforge_core::geometry::ply::{load_ply, save_ply};
use pcdforge_core::geometry::{per_class_chamfer, MultiClassPointCloud};
use pcdforge_core::network::{Checkpoint, Direction, PcdNet};
use pcdforge_core::synthheart::{
    generate_cohort, read_manifest, write_cohort, Group, ManifestEntry, MANIFEST_FILE,
};
use pcdforge_core::training::{
    split_dataset, train, LogRow, TrainObserver, TrainingError, TrainingPair,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::RunDir;

pub const CHECKPOINT_FILE: &str = "model.pcdn";
pub const SPLIT_FILE: &str = "split.csv";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

/// Options shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Context {
    fn out_dir(&self, command: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| self.config.paths.workspace.join(command))
    }

    fn analysis_seed(&self) -> u64 {
        self.seed.unwrap_or(self.config.train.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Ed2es,
    Es2ed,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Ed2es => Direction::Ed2Es,
            DirectionArg::Es2ed => Direction::Es2Ed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Filter {
    All,
    NormalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupSel {
    All,
    Normal,
    Mi,
    PrevalentMi,
    IncidentMi,
}

impl GroupSel {
    fn matches(self, g: Group) -> bool {
        match self {
            GroupSel::All => true,
            GroupSel::Normal => g == Group::Normal,
            GroupSel::Mi => g.is_mi(),
            GroupSel::PrevalentMi => g == Group::PrevalentMi,
            GroupSel::IncidentMi => g == Group::IncidentMi,
        }
    }

    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

/// Benchmark and latent inputs of the outcome models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arm {
    LvEf,
    RvEf,
    LvRvEf,
    LatentEd2es,
    LatentEs2ed,
}

impl Arm {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }

    fn latent_direction(self) -> Option<Direction> {
        match self {
            Arm::LatentEd2es => Some(Direction::Ed2Es),
            Arm::LatentEs2ed => Some(Direction::Es2Ed),
            _ => None,
        }
    }
}

/// Which cohort subjects a command evaluates.
#[derive(Debug, Clone, Args)]
pub struct Selection {
    /// Cohort directory containing manifest.csv.
    #[arg(long)]
    pub cohort: PathBuf,
    /// split.csv from a training run; subjects it assigns to another split are skipped.
    #[arg(long)]
    pub subjects: Option<PathBuf>,
    /// Split kept when --subjects is given.
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, value_enum, default_value_t = Filter::All)]
    pub filter: Filter,
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitRow {
    subject_id: String,
    split: String,
}

fn load_manifest(cohort: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let path = cohort.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(CliError::Io(format!("{}: no cohort manifest", path.display())));
    }
    Ok(read_manifest(&path)?)
}

fn read_split(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut map = HashMap::new();
    for row in reader.deserialize::<SplitRow>() {
        let row = row.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        map.insert(row.subject_id, row.split);
    }
    Ok(map)
}

fn apply_filter(entries: Vec<ManifestEntry>, filter: Filter) -> Vec<ManifestEntry> {
    entries
        .into_iter()
        .filter(|e| filter == Filter::All || e.group == Group::Normal)
        .collect()
}

impl Selection {
    fn entries(&self) -> Result<Vec<ManifestEntry>, CliError> {
        let mut entries = apply_filter(load_manifest(&self.cohort)?, self.filter);
        if let Some(path) = &self.subjects {
            let split = read_split(path)?;
            entries.retain(|e| split.get(&e.subject_id).is_none_or(|s| *s == self.split));
        }
        if entries.is_empty() {
            return Err(CliError::Validation("no subjects selected".into()));
        }
        Ok(entries)
    }
}

struct Loaded {
    entry: ManifestEntry,
    ed: MultiClassPointCloud,
    es: MultiClassPointCloud,
}

impl Loaded {
    /// `(input, target)` for a direction.
    fn phases(&self, d: Direction) -> (&MultiClassPointCloud, &MultiClassPointCloud) {
        match d {
            Direction::Ed2Es => (&self.ed, &self.es),
            Direction::Es2Ed => (&self.es, &self.ed),
        }
    }
}

fn load_all(entries: Vec<ManifestEntry>) -> Result<Vec<Loaded>, CliError> {
    entries
        .into_par_iter()
        .map(|entry| {
            let ed = entry.load_ed()?;
            let es = entry.load_es()?;
            Ok(Loaded { entry, ed, es })
        })
        .collect()
}

fn load_checkpoint(run: &mut RunDir, role: &str, path: &Path) -> Result<Checkpoint, CliError> {
    let ckpt = Checkpoint::load(path)?;
    run.record_checkpoint(role, path)?;
    Ok(ckpt)
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n_normal: Option<usize>,
    #[arg(long)]
    pub n_prevalent: Option<usize>,
    #[arg(long)]
    pub n_incident: Option<usize>,
    #[arg(long)]
    pub points_per_class: Option<usize>,
}

pub fn generate(mut ctx: Context, args: GenerateArgs) -> Result<(), CliError> {
    let data = &mut ctx.config.data;
    if let Some(n) = args.n_normal {
        data.n_normal = n;
    }
    if let Some(n) = args.n_prevalent {
        data.n_prevalent_mi = n;
    }
    if let Some(n) = args.n_incident {
        data.n_incident_mi = n;
    }
    if let Some(n) = args.points_per_class {
        data.points_per_class = n;
    }
    if let Some(s) = ctx.seed {
        data.seed = s;
    }
    data.validate()?;
    let subjects = generate_cohort(&ctx.config.data)?;
    let run = RunDir::open(&ctx.out_dir("cohort"), "generate", &ctx.config)?;
    let manifest = write_cohort(run.path(), &subjects)?;
    println!("wrote {} subjects to {}", subjects.len(), manifest.display());
    run.finish()
}

// ------------------------------------------------------------------- train

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Cohort directory containing manifest.csv.
    #[arg(long)]
    pub cohort: PathBuf,
    /// ed2es predicts ES from ED; es2ed the reverse.
    #[arg(long, value_enum)]
    pub direction: DirectionArg,
    /// normal-only trains on normal subjects and leaves MI for evaluation.
    #[arg(long, value_enum, default_value_t = Filter::All)]
    pub filter: Filter,
    /// Overrides train.max_steps.
    #[arg(long)]
    pub max_steps: Option<u64>,
}

/// Appends log rows as they arrive and checkpoints every improvement.
struct RunObserver {
    log: BufWriter<File>,
    checkpoint: PathBuf,
    direction: Direction,
}

impl TrainObserver for RunObserver {
    fn on_step(&mut self, row: &LogRow) -> Result<(), TrainingError> {
        writeln!(self.log, "{}", row.to_csv())
            .and_then(|_| if row.val_dense_chamfer.is_some() { self.log.flush() } else { Ok(()) })
            .map_err(|e| TrainingError::Observer(format!("training log: {e}")))?;
        if let Some(v) = row.val_dense_chamfer {
            eprintln!("step {:>7}  alpha {:<5}  loss {:.5}  val {:.5}", row.step, row.loss.alpha, row.loss.total, v);
        }
        Ok(())
    }

    fn on_improvement(&mut self, _step: u64, model: &PcdNet) -> Result<(), TrainingError> {
        Checkpoint::new(self.direction, model.clone())
            .save_atomic(&self.checkpoint)
            .map_err(|e| TrainingError::Observer(e.to_string()))
    }
}

pub fn train_cmd(mut ctx: Context, args: TrainArgs) -> Result<(), CliError> {
    if let Some(s) = ctx.seed {
        ctx.config.train.seed = s;
    }
    if let Some(n) = args.max_steps {
        ctx.config.train.max_steps = n;
    }
    ctx.config.validate().map_err(CliError::Validation)?;
    let direction: Direction = args.direction.into();
    let entries = apply_filter(load_manifest(&args.cohort)?, args.filter);
    let (tr, va, te) = split_dataset(&entries, ctx.config.train.split, ctx.config.train.seed)?;

    let mut run = RunDir::open(&ctx.out_dir(&format!("train-{direction}")), "train", &ctx.config)?;
    let mut rows: Vec<(String, &str)> = Vec::with_capacity(entries.len());
    for (set, name) in [(&tr, "train"), (&va, "validation"), (&te, "test")] {
        rows.extend(set.iter().map(|e| (e.subject_id.clone(), name)));
    }
    run.write(SPLIT_FILE, &csv_rows("subject_id,split", rows.iter().map(|(id, s)| format!("{id},{s}"))))?;

    let pairs = |set: Vec<ManifestEntry>| -> Result<Vec<TrainingPair>, CliError> {
        Ok(load_all(set)?
            .into_iter()
            .map(|l| {
                let (input, target) = l.phases(direction);
                TrainingPair { input: input.clone(), target: target.clone() }
            })
            .collect())
    };
    let (train_pairs, val_pairs) = (pairs(tr)?, pairs(va)?);

    let log_path = run.join(TRAIN_LOG_FILE);
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?);
    writeln!(log, "{}", LogRow::CSV_HEADER).map_err(|e| CliError::io(&log_path, e))?;
    let checkpoint = run.join(CHECKPOINT_FILE);
    let mut observer = RunObserver { log, checkpoint: checkpoint.clone(), direction };
    let outcome = train(&train_pairs, &val_pairs, &ctx.config.model, &ctx.config.train, &mut observer)?;
    observer.log.flush().map_err(|e| CliError::io(&log_path, e))?;

    let sha = run.record_checkpoint("output", &checkpoint)?;
    run.write(
        "train_summary.txt",
        &format!(
            "direction: {direction}\ntrain_pairs: {}\nvalidation_pairs: {}\nsteps_run: {}\nstopped_early: {}\nbest_step: {}\nbest_val_dense_chamfer: {}\ncheckpoint_sha256: {sha}\n",
            train_pairs.len(),
            val_pairs.len(),
            outcome.steps_run,
            outcome.stopped_early,
            outcome.best_step,
            outcome.best_validation,
        ),
    )?;
    println!("best validation {:.5} at step {}; checkpoint {}", outcome.best_validation, outcome.best_step, checkpoint.display());
    run.finish()
}

// ----------------------------------------------------------------- predict

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Input cloud (PLY, mm).
    #[arg(long)]
    pub input: PathBuf,
}

pub fn predict(ctx: Context, args: PredictArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("predict"), "predict", &ctx.config)?;
    let ckpt = load_checkpoint(&mut run, "model", &args.checkpoint)?;
    let cloud = load_ply(&args.input)?;
    let pred = ckpt.model.predict_mm(&cloud)?;
    if !pred.is_finite() {
        return Err(CliError::Numerical("prediction contains non-finite coordinates".into()));
    }
    save_ply(&run.join("predicted_dense.ply"), &pred.dense_cloud())?;
    save_ply(&run.join("predicted_coarse.ply"), &pred.coarse_cloud())?;
    run.finish()
}

// ----------------------------------------------------------- eval-geometry

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    /// Slabs for disc-summation volumes.
    #[arg(long, default_value_t = DEFAULT_SLABS)]
    pub n_slabs: usize,
}

pub const GEOMETRY_CSV_HEADER: &str =
    "subject_id,group,chamfer_lvendo_mm,chamfer_lvepi_mm,chamfer_rvendo_mm,chamfer_mean_mm,gold_bbox_diagonal_mm";

pub fn eval_geometry(ctx: Context, args: EvalArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("eval-geometry"), "eval-geometry", &ctx.config)?;
    let ckpt = load_checkpoint(&mut run, "model", &args.checkpoint)?;
    let subjects = load_all(args.selection.entries()?)?;
    let scores = subjects
        .par_iter()
        .map(|s| {
            let (input, gold) = s.phases(ckpt.direction);
            let pred = ckpt.model.predict_mm(input)?;
            let pc = per_class_chamfer(&pred.dense_cloud(), gold)?;
            Ok((pc, gold.bbox_diagonal()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let rows = subjects.iter().zip(&scores).map(|(s, (pc, diag))| {
        format!(
            "{},{},{},{},{},{},{}",
            s.entry.subject_id,
            s.entry.group,
            pc[0],
            pc[1],
            pc[2],
            pc.iter().sum::<f64>() / 3.0,
            diag
        )
    });
    run.write("geometry.csv", &csv_rows(GEOMETRY_CSV_HEADER, rows))?;

    let mean_diag = MeanSd::of(&scores.iter().map(|s| s.1).collect::<Vec<_>>()).mean;
    let summary = ["lvendo", "lvepi", "rvendo"].iter().enumerate().map(|(c, name)| {
        let v: Vec<f64> = scores.iter().map(|s| s.0[c]).collect();
        let m = MeanSd::of(&v);
        format!("{name},{},{},{},{}", v.len(), m.mean, m.sd, 100.0 * m.mean / mean_diag)
    });
    let text = csv_rows("class,cases,mean_mm,sd_mm,pct_of_mean_bbox_diagonal", summary);
    print!("{text}");
    run.write("geometry_summary.csv", &text)?;
    run.finish()
}

// ----------------------------------------------------------- eval-clinical

pub fn eval_clinical(ctx: Context, args: EvalArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("eval-clinical"), "eval-clinical", &ctx.config)?;
    let ckpt = load_checkpoint(&mut run, "model", &args.checkpoint)?;
    let subjects = load_all(args.selection.entries()?)?;
    let cases = subjects
        .par_iter()
        .map(|s| {
            let (input, gold) = s.phases(ckpt.direction);
            let pred = ckpt.model.predict_mm(input)?;
            Ok(EvaluationCase {
                id: s.entry.subject_id.clone(),
                input: input.clone(),
                gold: gold.clone(),
                predicted: pred.dense_cloud(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = evaluate_population(&cases, ckpt.direction, args.n_slabs)?;
    run.write("clinical_cases.csv", &report.to_csv())?;
    let summary = report.summary_text();
    print!("{summary}");
    run.write("clinical_summary.txt", &summary)?;
    run.finish()
}

// --------------------------------------------------------- extract-latents

#[derive(Debug, Clone, Args)]
pub struct LatentArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
}

pub fn extract_latents_cmd(ctx: Context, args: LatentArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("latents"), "extract-latents", &ctx.config)?;
    let ckpt = load_checkpoint(&mut run, "model", &args.checkpoint)?;
    let entries = args.selection.entries()?;
    let latents = extract_latents_from_manifest(&entries, &ckpt, ckpt.direction)?;
    run.write(&format!("latents_{}.csv", ckpt.direction), &latents.to_csv())?;
    println!("{} latents of dimension {}", latents.len(), latents.dim());
    run.finish()
}

// ------------------------------------------------------- classify/survival

#[derive(Debug, Clone, Args)]
pub struct OutcomeArgs {
    /// Model inputs, one output row each.
    #[arg(long = "input", value_enum, value_delimiter = ',', required = true)]
    pub inputs: Vec<Arm>,
    /// Contraction checkpoint for latent-ed2es.
    #[arg(long)]
    pub ed2es: Option<PathBuf>,
    /// Relaxation checkpoint for latent-es2ed.
    #[arg(long)]
    pub es2ed: Option<PathBuf>,
    #[command(flatten)]
    pub selection: Selection,
    /// Keep at most this many normal subjects (manifest order).
    #[arg(long)]
    pub max_normals: Option<usize>,
    /// Cross-validation folds, stratified by outcome.
    #[arg(long, default_value_t = pcdforge_core::analytics::DEFAULT_FOLDS)]
    pub folds: usize,
    /// L2 penalty of the logistic models.
    #[arg(long, default_value_t = pcdforge_core::analytics::DEFAULT_L2)]
    pub l2: f64,
    /// Slabs for disc-summation volumes.
    #[arg(long, default_value_t = DEFAULT_SLABS)]
    pub n_slabs: usize,
}

impl OutcomeArgs {
    /// Normal subjects plus the positive group, in manifest order.
    fn cases(&self, positive: Group) -> Result<Vec<ManifestEntry>, CliError> {
        let mut normals = 0usize;
        let cap = self.max_normals.unwrap_or(usize::MAX);
        let out: Vec<ManifestEntry> = self
            .selection
            .entries()?
            .into_iter()
            .filter(|e| {
                if e.group == Group::Normal {
                    normals += 1;
                    normals <= cap
                } else {
                    e.group == positive
                }
            })
            .collect();
        Ok(out)
    }

    /// Feature rows per requested arm.
    fn features(&self, run: &mut RunDir, entries: &[ManifestEntry]) -> Result<Vec<(Arm, Vec<Vec<f64>>)>, CliError> {
        let mut ef: Option<Vec<FunctionMetrics>> = None;
        let mut out = Vec::new();
        for &arm in &self.inputs {
            let rows = match arm.latent_direction() {
                Some(d) => {
                    let path = match d {
                        Direction::Ed2Es => &self.ed2es,
                        Direction::Es2Ed => &self.es2ed,
                    }
                    .as_ref()
                    .ok_or_else(|| CliError::Validation(format!("input {} needs --{d}", arm.name())))?;
                    let ckpt = load_checkpoint(run, d.as_str(), path)?;
                    extract_latents_from_manifest(entries, &ckpt, d)?.latents
                }
                None => {
                    if ef.is_none() {
                        let metrics = entries
                            .par_iter()
                            .map(|e| Ok(cloud_function_metrics(&e.load_ed()?, &e.load_es()?, self.n_slabs)?))
                            .collect::<Result<Vec<_>, CliError>>()?;
                        ef = Some(metrics);
                    }
                    let m = ef.as_ref().expect("computed above");
                    m.iter()
                        .map(|f| match arm {
                            Arm::LvEf => vec![f.lv_ef],
                            Arm::RvEf => vec![f.rv_ef],
                            _ => vec![f.lv_ef, f.rv_ef],
                        })
                        .collect()
                }
            };
            out.push((arm, rows));
        }
        Ok(out)
    }
}

pub fn classify(ctx: Context, args: OutcomeArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("classify"), "classify", &ctx.config)?;
    let entries = args.cases(Group::PrevalentMi)?;
    let labels: Vec<bool> = entries.iter().map(|e| e.group == Group::PrevalentMi).collect();
    let features = args.features(&mut run, &entries)?;
    let seed = ctx.analysis_seed();
    let mut table = Vec::new();
    let mut folds = Vec::new();
    for (arm, x) in &features {
        let cv = kfold_cv(x, &labels, args.folds, args.l2, seed)?;
        table.push(cv.mean.csv_row(&arm.name()));
        for (k, m) in cv.per_fold.iter().enumerate() {
            folds.push(format!("{},{k},{},{},{},{},{}", arm.name(), m.accuracy, m.auroc, m.f1, m.precision, m.recall));
        }
    }
    let text = csv_rows(ClassificationMetrics::CSV_HEADER, table);
    print!("{text}");
    run.write("classification.csv", &text)?;
    run.write("classification_folds.csv", &csv_rows("input,fold,accuracy,auroc,f1,precision,recall", folds))?;
    let cases = entries.iter().zip(&labels).map(|(e, l)| format!("{},{},{}", e.subject_id, e.group, u8::from(*l)));
    run.write("cases.csv", &csv_rows("subject_id,group,label", cases))?;
    run.finish()
}

pub fn survival(ctx: Context, args: OutcomeArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("survival"), "survival", &ctx.config)?;
    let entries = args.cases(Group::IncidentMi)?;
    let events: Vec<bool> = entries.iter().map(|e| e.event).collect();
    let months: Vec<f64> = entries.iter().map(|e| e.months).collect();
    let features = args.features(&mut run, &entries)?;
    let seed = ctx.analysis_seed();
    let mut table = Vec::new();
    let mut folds = Vec::new();
    for (arm, x) in &features {
        let cv = survival_cv(x, &events, &months, args.folds, seed)?;
        table.push(format!("{},{}", arm.name(), cv.mean_c));
        folds.extend(cv.per_fold.iter().enumerate().map(|(k, c)| format!("{},{k},{c}", arm.name())));
    }
    let text = csv_rows(SURVIVAL_CSV_HEADER, table);
    print!("{text}");
    run.write("survival.csv", &text)?;
    run.write("survival_folds.csv", &csv_rows("input,fold,c_index", folds))?;
    let cases = entries.iter().map(|e| format!("{},{},{},{}", e.subject_id, e.group, u8::from(e.event), e.months));
    run.write("cases.csv", &csv_rows("subject_id,group,event,months", cases))?;
    run.finish()
}

// -------------------------------------------------------------- ks-compare

#[derive(Debug, Clone, Args)]
pub struct KsArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, value_enum, default_value_t = GroupSel::Normal)]
    pub group_a: GroupSel,
    #[arg(long, value_enum, default_value_t = GroupSel::Mi)]
    pub group_b: GroupSel,
}

pub fn ks_compare(ctx: Context, args: KsArgs) -> Result<(), CliError> {
    let mut run = RunDir::open(&ctx.out_dir("ks-compare"), "ks-compare", &ctx.config)?;
    let ckpt = load_checkpoint(&mut run, "model", &args.checkpoint)?;
    let entries: Vec<ManifestEntry> = args
        .selection
        .entries()?
        .into_iter()
        .filter(|e| args.group_a.matches(e.group) || args.group_b.matches(e.group))
        .collect();
    let subjects = load_all(entries)?;
    let scores = subjects
        .par_iter()
        .map(|s| {
            let (input, gold) = s.phases(ckpt.direction);
            let pred = ckpt.model.predict_mm(input)?;
            Ok(per_class_chamfer(&pred.dense_cloud(), gold)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mean = |pc: &[f64; 3]| pc.iter().sum::<f64>() / 3.0;
    let pick = |g: GroupSel| -> Vec<f64> {
        subjects
            .iter()
            .zip(&scores)
            .filter(|(s, _)| g.matches(s.entry.group))
            .map(|(_, pc)| mean(pc))
            .collect()
    };
    let (a, b) = (pick(args.group_a), pick(args.group_b));
    let ks = ks_two_sample(&a, &b)?;
    let mut report = ks.report(&args.group_a.name(), &args.group_b.name());
    report.push_str(&format!(
        "statistic: per-case mean dense Chamfer (mm)\nmean_a: {}\nmean_b: {}\n",
        MeanSd::of(&a).mean,
        MeanSd::of(&b).mean
    ));
    print!("{report}");
    run.write("ks_report.txt", &report)?;
    let rows = subjects.iter().zip(&scores).map(|(s, pc)| {
        format!("{},{},{},{},{},{}", s.entry.subject_id, s.entry.group, pc[0], pc[1], pc[2], mean(pc))
    });
    run.write(
        "ks_cases.csv",
        &csv_rows("subject_id,group,chamfer_lvendo_mm,chamfer_lvepi_mm,chamfer_rvendo_mm,chamfer_mean_mm", rows),
    )?;
    run.finish()
}
