use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod analyze;
mod bench;
mod link;
mod output;

#[derive(Parser)]
#[command(name = "rca", version, about = "Root-cause analysis over event traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Mine, rank and deduplicate patterns that separate a test group from a control group.
    Analyze(analyze::AnalyzeArgs),
    /// Mine frequent patterns in a single group.
    Mine(analyze::MineArgs),
    /// Cluster analysis reports by cosine distance of their pattern statistics.
    Link(link::LinkArgs),
    /// Time the pipeline on synthetic corpora and emit CSV.
    Bench(bench::BenchArgs),
    /// Run the HTTP job service.
    Serve(ServeArgs),
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Directory for job records and results.
    #[arg(long, default_value = "rca-data")]
    data_dir: PathBuf,
    /// Jobs executing at once.
    #[arg(long, default_value_t = 2)]
    workers: usize,
    /// Queued plus running jobs before submissions are refused with 429.
    #[arg(long, default_value_t = 64)]
    max_pending: usize,
    /// Request body limit in MiB.
    #[arg(long, default_value_t = 64)]
    body_limit_mb: usize,
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let mut config = rca_service::ServiceConfig::new(args.data_dir);
    config.workers = args.workers.max(1);
    config.max_pending = args.max_pending.max(1);
    config.body_limit = args.body_limit_mb << 20;
    let app = rca_service::App::open(config)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.addr).await?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        rca_service::serve(listener, app).await?;
        Ok(())
    })
}

/// Exit status for a failed command: 2 when the test group is empty, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<rca_core::Error>() {
        Some(rca_core::Error::EmptyTestGroup) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Mine(a) => analyze::mine(a),
        Command::Link(a) => link::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
