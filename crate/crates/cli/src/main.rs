use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mrgagents::SelectionMode;
use mrgagents_cli::commands::{self, GENERATED_FILE};
use mrgagents_cli::{CliError, Overrides, PipelineConfig};
use tracing_subscriber::EnvFilter;

/// Multi-agent radiology report generation: curate per-disease subsets,
/// generate reports through disease agents, and score them.
#[derive(Parser)]
#[command(name = "mrgagents", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Sentences kept per report.
    #[arg(long)]
    k: Option<usize>,
    /// Report construction for evaluation: end_to_end or oracle.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SelectionMode>,
    /// Studies generated concurrently.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Label corpus sentences, write per-disease subsets and the distribution table.
    Curate {
        #[command(flatten)]
        common: Common,
        /// Only compute and print the distribution table.
        #[arg(long)]
        stats_only: bool,
    },
    /// Generate a report for every test-split study.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Score generated reports against reference reports.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Generated reports (default: <output_dir>/generated.jsonl).
        #[arg(long)]
        generated: Option<PathBuf>,
        /// Reference corpus files (default: the configured corpus).
        #[arg(long, num_args = 1..)]
        references: Vec<PathBuf>,
    },
    /// Serve 13 mock agents and print matching `[[agents]]` entries.
    MockAgents {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_mode(raw: &str) -> Result<SelectionMode, String> {
    match raw.replace('-', "_").as_str() {
        "end_to_end" => Ok(SelectionMode::EndToEnd),
        "oracle" => Ok(SelectionMode::Oracle),
        _ => Err(format!("unknown mode {raw:?}; expected end_to_end or oracle")),
    }
}

fn load(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut config = PipelineConfig::load(&common.config)?;
    config.apply(&Overrides {
        k: common.k,
        mode: common.mode,
        parallel: common.parallel,
    });
    config.validate()?;
    Ok(config)
}

async fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Curate { common, stats_only } => {
            let config = load(&common)?;
            let outcome = commands::curate(&config, stats_only).await?;
            print!("{}", outcome.table);
            eprintln!(
                "labeled {} sentences; wrote {} subset files",
                outcome.sentences,
                outcome.subset_files.len()
            );
        }
        Command::Generate { common } => {
            let config = load(&common)?;
            let outcome = commands::generate(&config).await?;
            eprintln!(
                "wrote {} reports to {} ({} without candidates)",
                outcome.reports,
                outcome.path.display(),
                outcome.without_candidates
            );
        }
        Command::Evaluate {
            common,
            generated,
            references,
        } => {
            let config = load(&common)?;
            let generated = generated.unwrap_or_else(|| config.output_dir.join(GENERATED_FILE));
            let references = if references.is_empty() {
                config.corpus.paths.clone()
            } else {
                references
            };
            let report = commands::evaluate(&config, &generated, &references).await?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::MockAgents { common } => {
            let config = PipelineConfig::load(&common.config)?;
            let handles = commands::start_mock_agents(&config).await?;
            let mut stdout = std::io::stdout();
            writeln!(stdout, "{}", commands::agents_toml(&handles)).map_err(|e| CliError::Io(e.to_string()))?;
            stdout.flush().map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("serving {} mock agents; press Ctrl-C to stop", handles.len());
            tokio::signal::ctrl_c().await.map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_env("MRGAGENTS_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .init();
    let cli = Cli::parse();
    match run(cli.command).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}
