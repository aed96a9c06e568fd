mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, EvalArgs, GenerateArgs, KsArgs, LatentArgs, OutcomeArgs, PredictArgs, TrainArgs};
use config::RunConfig;
use error::CliError;

/// Synthetic biventricular cohorts, ED/ES deformation networks and their
/// clinical and outcome evaluation.
#[derive(Debug, Parser)]
#[command(name = "pcdforge", version)]
struct Cli {
    /// TOML run configuration (sections: model, train, data, paths).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the command's stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: <paths.workspace>/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 gives single-worker mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic ED/ES cohort (PLY clouds + manifest.csv).
    Generate(GenerateArgs),
    /// Train one directional network on a cohort.
    Train(TrainArgs),
    /// Predict the opposite phase of one PLY cloud.
    Predict(PredictArgs),
    /// Per-class dense Chamfer of predictions against gold clouds.
    EvalGeometry(EvalArgs),
    /// Volumes, mass and ejection fraction of predictions against gold clouds.
    EvalClinical(EvalArgs),
    /// Encoder latents of the checkpoint's input phase.
    ExtractLatents(LatentArgs),
    /// Cross-validated logistic regression, prevalent MI vs normal.
    Classify(OutcomeArgs),
    /// Cross-validated Cox regression on incident MI.
    Survival(OutcomeArgs),
    /// Two-sample KS test of per-case Chamfer between subject groups.
    KsCompare(KsArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let ctx = Context {
        config: RunConfig::load(cli.config.as_deref())?,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Generate(a) => commands::generate(ctx, a),
        Command::Train(a) => commands::train_cmd(ctx, a),
        Command::Predict(a) => commands::predict(ctx, a),
        Command::EvalGeometry(a) => commands::eval_geometry(ctx, a),
        Command::EvalClinical(a) => commands::eval_clinical(ctx, a),
        Command::ExtractLatents(a) => commands::extract_latents_cmd(ctx, a),
        Command::Classify(a) => commands::classify(ctx, a),
        Command::Survival(a) => commands::survival(ctx, a),
        Command::KsCompare(a) => commands::ks_compare(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
