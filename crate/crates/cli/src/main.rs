//! affectstream: streaming facial-expression analytics over frame
//! observation streams.

use std::path::PathBuf;
use std::process::ExitCode;

use affectstream::evaluation::SessionAggregator;
use affectstream::stream::StreamFormat;
use clap::{Parser, Subcommand, ValueEnum};

use affectstream_cli::analyze::{self, AnalyzeArgs};
use affectstream_cli::bench::{self, BenchArgs};
use affectstream_cli::error::CliError;
use affectstream_cli::evaluate::{self, EvaluateArgs, Kpi};
use affectstream_cli::simulate::{self, SimulateArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for StreamFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => StreamFormat::Csv,
            FormatArg::Jsonl => StreamFormat::JsonLines,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregatorArg {
    Max,
    Mean,
    ActiveFraction,
}

impl From<AggregatorArg> for SessionAggregator {
    fn from(a: AggregatorArg) -> Self {
        match a {
            AggregatorArg::Max => SessionAggregator::Max,
            AggregatorArg::Mean => SessionAggregator::Mean,
            AggregatorArg::ActiveFraction => SessionAggregator::ActiveFraction,
        }
    }
}

#[derive(Parser)]
#[command(name = "affectstream", version, about = "Facial-expression analytics over frame observation streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a frame observation stream into per-frame metric records.
    Analyze {
        /// Input stream (.csv or .jsonl).
        #[arg(long)]
        input: PathBuf,
        /// Output records file (.csv or .jsonl).
        #[arg(long)]
        output: PathBuf,
        /// Engine configuration (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the format inferred from file extensions.
        #[arg(long)]
        format: Option<FormatArg>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Blink event sidecar path (default: <output>.blinks.csv).
        #[arg(long)]
        blinks: Option<PathBuf>,
    },
    /// Analyze a labeled corpus and compute KPIs with slice tables.
    Evaluate {
        /// Corpus manifest (JSON).
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Composite state to evaluate.
        #[arg(long, default_value = "sentimentality")]
        state: String,
        /// KPIs to compute (repeatable).
        #[arg(long = "kpi", value_enum, default_values_t = vec![Kpi::RocAd])]
        kpis: Vec<Kpi>,
        /// How a session's frame scores collapse to one value.
        #[arg(long, value_enum, default_value = "max")]
        aggregator: AggregatorArg,
        /// Time bin for roc-sent, in milliseconds.
        #[arg(long, default_value_t = 1_000)]
        bin_ms: u64,
        /// Decision threshold for the ad-level F1.
        #[arg(long, default_value_t = 50.0)]
        f1_threshold: f64,
        /// Sessions below this count flag a slice as low-support.
        #[arg(long, default_value_t = 5)]
        min_support: usize,
        /// Report directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Generate synthetic streams or corpora with ground truth.
    Simulate {
        /// Scenario spec (JSON) for a single stream.
        #[arg(long, conflicts_with = "corpus")]
        scenario: Option<PathBuf>,
        /// Corpus spec (JSON) for a labeled ad corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Override the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Measure pipeline throughput on a deterministic synthetic workload.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        faces: usize,
        /// Video frames per face.
        #[arg(long, default_value_t = 10_000)]
        frames: usize,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze {
            input,
            output,
            config,
            format,
            workers,
            blinks,
        } => analyze::run(&AnalyzeArgs {
            input,
            output,
            config,
            format: format.map(Into::into),
            workers,
            blinks,
        }),
        Command::Evaluate {
            manifest,
            config,
            state,
            kpis,
            aggregator,
            bin_ms,
            f1_threshold,
            min_support,
            out,
            workers,
        } => evaluate::run(&EvaluateArgs {
            manifest,
            config,
            state,
            kpis,
            aggregator: aggregator.into(),
            bin_ms,
            f1_threshold,
            min_support,
            out_dir: out,
            workers,
        }),
        Command::Simulate {
            scenario,
            corpus,
            seed,
            out,
            format,
        } => simulate::run(&SimulateArgs {
            scenario,
            corpus,
            seed,
            out_dir: out,
            format: format.into(),
        }),
        Command::Bench {
            config,
            faces,
            frames,
            fps,
            seed,
            out,
        } => bench::run(&BenchArgs {
            config,
            faces,
            frames,
            fps,
            seed,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code() as u8)
        }
    }
}
