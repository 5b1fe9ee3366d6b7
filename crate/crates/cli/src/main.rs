use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qelm::harness::with_threads;
use qelm::io::{emit_results, execute, parse_config, Format, Overrides, Preset, OUT_DIR_ENV};

const PRESET_HELP: &str = "\
Presets:
  fig1-scatter         predictions vs targets, noise-free, N=5
  fig2-h-sweep         test MSE over the transverse field, eps in {0, 0.2, 0.5}
  fig3-dt-sweep        test MSE over the evolution time, eps in {0, 0.5, 0.9}
  fig4-shots           finite measurement budgets at eps=0.2
  fig5-generalization  train on 2-qubit, test on 3-qubit states, N=7
  figA1-extended       local-z vs local+zz features over the field grid";

#[derive(Parser)]
#[command(name = "qelm", version, about = "Quantum extreme learning machine experiments", after_help = PRESET_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a TOML/JSON experiment file.
    #[command(after_help = PRESET_HELP)]
    Run(RunArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Preset name or path to a config file (.toml or .json).
    source: String,
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file. Defaults to <name>.<format> in $QELM_OUT_DIR, or the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Scale down to 3 realizations and 40 train/test states.
    #[arg(long)]
    quick: bool,
    /// Override a config field, e.g. --set epsilon_list=[0.1] or --set reservoir.field_strength=0.5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Worker threads (0 picks one per core). Output does not depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

fn default_output(source: &str, format: Format) -> PathBuf {
    let stem = Path::new(source).file_stem().and_then(|s| s.to_str()).unwrap_or("qelm");
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_default();
    dir.join(format!("{stem}.{}", format.extension()))
}

fn run(args: RunArgs) -> Result<()> {
    let overrides = Overrides { seed: args.seed, quick: args.quick, sets: args.sets };
    let config = parse_config(&args.source, &overrides).with_context(|| format!("resolving {:?}", args.source))?;
    let format = Format::from(args.format);
    let record = with_threads(args.threads, || execute(&config))?;
    let path = args.out.unwrap_or_else(|| default_output(&args.source, format));
    let written = emit_results(&record, format, &path).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", written.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Presets => {
            for preset in Preset::ALL {
                println!("{}", preset.name());
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
