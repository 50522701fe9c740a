//! `gforce`: train force-directed node embeddings and run the grid, energy
//! and label-prediction experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use gforce_cli::commands::{self, EvaluateArgs, GraphSource};
use gforce_cli::config::TrainArgs;

#[derive(Parser)]
#[command(name = "gforce", version, about = "Force-directed node embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an embedding for an edge list.
    Embed {
        edges: PathBuf,
        /// Embedding file; trace, mapping and manifest are written beside it.
        #[arg(long, short, default_value = "embedding.txt")]
        output: PathBuf,
        /// Start from this embedding instead of a random one.
        #[arg(long)]
        load_embedding: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Train on a synthetic grid and report how grid-like the layout is.
    GridVerify {
        #[arg(long, default_value_t = 15)]
        rows: usize,
        #[arg(long, default_value_t = 15)]
        cols: usize,
        /// Record a snapshot every this many iterations.
        #[arg(long, default_value_t = 10)]
        snapshot_every: usize,
        /// Output directory.
        #[arg(long, short, default_value = "grid_verify")]
        output: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Train once per dimension and compare the final energy per dimension.
    EnergySweep {
        /// Edge list; omit when using --grid.
        #[arg(required_unless_present = "grid", conflicts_with = "grid")]
        edges: Option<PathBuf>,
        /// Use a synthetic ROWSxCOLS grid instead of a file.
        #[arg(long)]
        grid: Option<String>,
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
        dims: Vec<usize>,
        /// Output directory.
        #[arg(long, short, default_value = "energy_sweep")]
        output: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score an embedding on label prediction over 40-80% training splits.
    Evaluate {
        edges: PathBuf,
        labels: PathBuf,
        /// Score this embedding instead of training one.
        #[arg(long)]
        load_embedding: Option<PathBuf>,
        /// Name written in the dataset column [default: edge file stem]
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long, short, default_value = "evaluation.csv")]
        output: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Project an embedding to two dimensions with PCA.
    Project {
        embedding: PathBuf,
        #[arg(long, short, default_value = "projection.csv")]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Embed {
            edges,
            output,
            load_embedding,
            train,
        } => commands::embed(&edges, load_embedding.as_deref(), &output, &train),
        Command::GridVerify {
            rows,
            cols,
            snapshot_every,
            output,
            train,
        } => commands::grid_verify(rows, cols, snapshot_every, &output, &train),
        Command::EnergySweep {
            edges,
            grid,
            dims,
            output,
            train,
        } => {
            let source = match (edges, grid) {
                (Some(p), None) => GraphSource::File(p),
                (None, Some(spec)) => {
                    let (r, c) = GraphSource::parse_grid(&spec)?;
                    GraphSource::Grid(r, c)
                }
                _ => bail!("give either an edge list or --grid"),
            };
            commands::energy_sweep(&source, &dims, &output, &train)
        }
        Command::Evaluate {
            edges,
            labels,
            load_embedding,
            dataset,
            repeats,
            split_seed,
            output,
            train,
        } => commands::evaluate(
            &EvaluateArgs {
                edges: &edges,
                labels: &labels,
                load_embedding: load_embedding.as_deref(),
                dataset: dataset.as_deref(),
                repeats,
                split_seed,
                output: &output,
            },
            &train,
        ),
        Command::Project { embedding, output } => commands::project(&embedding, &output),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
