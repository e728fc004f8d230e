use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use incite_cli::config::PipelineConfig;
use incite_cli::error::RunError;
use incite_cli::pipeline::Stage;
use incite_cli::{run, Overrides};

#[derive(Debug, Parser)]
#[command(name = "incite", version, about = "Quantify dangerous speech propagation in retweet networks")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, env = "INCITE_CONFIG")]
    config: Option<PathBuf>,
    /// Restrict the run to one event.
    #[arg(long, global = true)]
    event: Option<String>,
    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Bootstrap seed, overriding the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Parse tweets, users and lexica and summarize what was read.
    Ingest,
    /// Expand seed keywords and label tweets with events.
    ClassifyEvents,
    /// Select dangerous speech candidates with the lexica.
    Filter,
    /// Inter-annotator agreement and resolved danger counts.
    Kappa,
    /// Per-event retweet graphs and adjacency dumps.
    BuildGraph,
    /// Diffuse danger beliefs (DAB scores).
    Dab,
    /// Danger categories by natural breaks, per event and averaged.
    Classify,
    /// Retweet and follower polarity per user.
    Polarity,
    /// Indegree, harmonic closeness and eigenvector centrality.
    Centrality,
    /// Regressions, ANOVA, Tukey HSD and median summaries.
    Stats,
    /// Term frequency ratios over dangerous tweets.
    Terms,
    /// GEXF and DOT exports of the event graphs.
    ExportGexf,
    /// JSON summary of the run.
    Report,
    /// Every stage in pipeline order.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self.stages().as_slice() {
            [one] => one.name(),
            _ => "all",
        }
    }

    fn stages(self) -> Vec<Stage> {
        let one = match self {
            Command::Ingest => Stage::Ingest,
            Command::ClassifyEvents => Stage::ClassifyEvents,
            Command::Filter => Stage::Filter,
            Command::Kappa => Stage::Kappa,
            Command::BuildGraph => Stage::BuildGraph,
            Command::Dab => Stage::Dab,
            Command::Classify => Stage::Classify,
            Command::Polarity => Stage::Polarity,
            Command::Centrality => Stage::Centrality,
            Command::Stats => Stage::Stats,
            Command::Terms => Stage::Terms,
            Command::ExportGexf => Stage::ExportGexf,
            Command::Report => Stage::Report,
            Command::All => return Stage::ALL.to_vec(),
        };
        vec![one]
    }
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::Config("no config given (use --config or INCITE_CONFIG)".into()))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(RunError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = PipelineConfig::load(path)?;
    let overrides = Overrides {
        event: cli.event.clone(),
        out: cli.out.clone(),
        seed: cli.seed,
    };
    run(cli.command.name(), &cli.command.stages(), cfg, &overrides)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("incite: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
