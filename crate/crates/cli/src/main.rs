mod commands;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Streaming one-class boundary learning with a Gaussian kernel.
#[derive(Parser)]
#[command(name = "fisvdd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a CSV stream of normal data.
    Train {
        input: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
        /// Where to write the model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every row of a CSV file against a saved model.
    Score {
        #[arg(long)]
        model: PathBuf,
        input: PathBuf,
        /// Write `q,label` rows here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ignore the last column (a 0/1 label).
        #[arg(long)]
        labeled: bool,
    },
    /// Report precision, recall and F1 on a labeled CSV (last column 0/1).
    Eval {
        /// Saved model to evaluate.
        #[arg(long, conflicts_with = "train", required_unless_present = "train")]
        model: Option<PathBuf>,
        /// Train on this CSV first; the report then includes train_seconds.
        #[arg(long, requires = "sigma")]
        train: Option<PathBuf>,
        #[command(flatten)]
        training: OptionalTrainingArgs,
        labeled: PathBuf,
    },
    /// Print model metadata and consistency checks.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
    /// Write a synthetic Gaussian-cluster-plus-ring data set.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        normals: usize,
        #[arg(long, default_value_t = 50)]
        outliers: usize,
        #[arg(long, default_value_t = 6.0)]
        radius: f64,
        /// Unlabeled training rows: 4/5 of the normals.
        #[arg(long)]
        train_out: PathBuf,
        /// Labeled test rows: the remaining normals and all outliers.
        #[arg(long)]
        test_out: PathBuf,
    },
}

#[derive(Args)]
struct TrainingArgs {
    /// Gaussian kernel bandwidth.
    #[arg(long)]
    sigma: f64,
    #[command(flatten)]
    rest: TuningArgs,
}

#[derive(Args)]
struct OptionalTrainingArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[command(flatten)]
    rest: TuningArgs,
}

#[derive(Args, Clone, Copy)]
struct TuningArgs {
    /// Rows used for the initial batch solution.
    #[arg(long, default_value_t = 10)]
    burn_in: usize,
    /// Support vector cap.
    #[arg(long, default_value_t = fisvdd::params::DEFAULT_MAX_SV)]
    max_sv: usize,
    /// Points with every similarity below this are far outliers.
    #[arg(long, default_value_t = fisvdd::params::DEFAULT_EPS_FAR)]
    eps_far: f64,
    /// Points with some similarity above 1 - this are near duplicates.
    #[arg(long, default_value_t = fisvdd::params::DEFAULT_EPS_NEAR)]
    eps_near: f64,
    /// Recompute the inverse directly after this many model changes.
    #[arg(long)]
    refresh_every: Option<usize>,
}

impl TuningArgs {
    fn settings(self, sigma: f64) -> commands::TrainSettings {
        commands::TrainSettings {
            sigma,
            burn_in: self.burn_in,
            max_sv: self.max_sv,
            eps_far: self.eps_far,
            eps_near: self.eps_near,
            refresh_every: self.refresh_every,
        }
    }
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Train {
            input,
            training,
            out,
        } => commands::train(
            &input,
            &training.rest.settings(training.sigma),
            &out,
            &mut stdout,
        ),
        Command::Score {
            model,
            input,
            out,
            labeled,
        } => commands::score(&model, &input, out.as_deref(), labeled, &mut stdout),
        Command::Eval {
            model,
            train,
            training,
            labeled,
        } => {
            let source = match (model, train) {
                (Some(m), _) => commands::ModelSource::File(m),
                (None, Some(t)) => commands::ModelSource::Train(
                    t,
                    training
                        .rest
                        .settings(training.sigma.expect("clap requires sigma")),
                ),
                (None, None) => unreachable!("clap requires --model or --train"),
            };
            commands::eval(&source, &labeled, &mut stdout)
        }
        Command::Inspect { model } => commands::inspect(&model, &mut stdout),
        Command::Synth {
            seed,
            normals,
            outliers,
            radius,
            train_out,
            test_out,
        } => commands::synth(
            &commands::SynthSpec {
                seed,
                normals,
                outliers,
                radius,
            },
            &train_out,
            &test_out,
            &mut stdout,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
