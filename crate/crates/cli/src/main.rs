use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mvl2e::eval::{GammaRow, SweepRow};
use mvl2e::experiment::{self, Overrides, RunSummary};
use mvl2e::{save_dataset, synth_multiview, SynthSpec};

#[derive(Parser)]
#[command(name = "mvl2e", version, about = "Locality low-rank embedding for single- and multi-view data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Everything the config enables: methods, dimension sweep, gamma sweep.
    Run(RunArgs),
    /// Fit MvL²E and write the centroid and view embeddings.
    Embed(RunArgs),
    /// Evaluate all enabled methods at the configured dimension.
    Eval(RunArgs),
    /// Evaluate all enabled methods over the `dims` list.
    Sweep(RunArgs),
    /// Centroid accuracy for each value in the `gammas` list.
    GammaSweep(RunArgs),
    /// Evaluate only the enabled baselines.
    Baselines(RunArgs),
    /// Generate a synthetic multi-view dataset from a TOML spec.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Dataset manifest, overriding the config's `dataset`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for splits and restarts, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dataset: self.dataset.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic data spec (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the manifest, view tables and labels.
    #[arg(long)]
    out: PathBuf,
    /// Generator seed, overriding the spec.
    #[arg(long)]
    seed: Option<u64>,
}

fn format_outcome(outcome: &std::result::Result<mvl2e::EvalReport, String>) -> String {
    match outcome {
        Ok(rep) => format!("{:.4}\t{:.4}", rep.mean_accuracy, rep.max_accuracy),
        Err(e) => format!("failed: {e}"),
    }
}

fn print_rows(rows: &[SweepRow]) {
    if rows.is_empty() {
        return;
    }
    println!("method\tdimension\tmean\tmax");
    for row in rows {
        println!("{}\t{}\t{}", row.method, row.dimension, format_outcome(&row.outcome));
    }
}

fn print_gamma_rows(rows: &[GammaRow]) {
    if rows.is_empty() {
        return;
    }
    println!("gamma\tdimension\tmean\tmax");
    for row in rows {
        println!("{}\t{}\t{}", row.gamma, row.dimension, format_outcome(&row.outcome));
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}

fn report(summary: RunSummary) {
    print_rows(&summary.table.rows);
    print_gamma_rows(&summary.gamma_rows);
    print_files(&summary.files);
}

type Runner = fn(&Path, &Overrides, &Path) -> mvl2e::Result<RunSummary>;

fn run_with(runner: Runner, what: &str, args: &RunArgs) -> Result<()> {
    let summary = runner(&args.config, &args.overrides(), &args.out)
        .with_context(|| format!("{what} with {}", args.config.display()))?;
    report(summary);
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut spec = SynthSpec::load(&args.config).with_context(|| format!("synth with {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let ds = synth_multiview(&spec).context("generating dataset")?;
    let manifest = save_dataset(&ds, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => run_with(experiment::run_experiment, "run", a),
        Command::Eval(a) => run_with(experiment::run_eval, "eval", a),
        Command::Sweep(a) => run_with(experiment::run_sweep, "sweep", a),
        Command::GammaSweep(a) => run_with(experiment::run_gamma_sweep, "gamma-sweep", a),
        Command::Baselines(a) => run_with(experiment::run_baselines, "baselines", a),
        Command::Embed(a) => {
            let files = experiment::run_embed(&a.config, &a.overrides(), &a.out)
                .with_context(|| format!("embed with {}", a.config.display()))?;
            print_files(&files);
            Ok(())
        }
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already spell out their own causes
            let msg: Vec<String> = e.chain().take(2).map(ToString::to_string).collect();
            eprintln!("error: {}", msg.join(": "));
            ExitCode::FAILURE
        }
    }
}
