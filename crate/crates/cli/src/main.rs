//! `hapticmap` command line.
//!
//! `fetch`, `render` and `replay` run in-process by default, so they work
//! offline on fixtures. `--server URL` sends `fetch` and `replay` through a
//! running service instead.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hapticmap_core::agent::ProviderKind;
use hapticmap_core::ingest::DEFAULT_RADIUS_M;

#[derive(Debug, Parser)]
#[command(name = "hapticmap", version, about = "Audio-haptic map engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch OSM features around a place and write the zone dataset.
    Fetch(FetchArgs),
    /// Rasterize a dataset to a JPEG.
    Render(RenderArgs),
    /// Replay a cursor/ask trace and print the transcript.
    Replay(ReplayArgs),
    /// Run the HTTP/WebSocket service.
    Serve(ServeArgs),
}

#[derive(Debug, clap::Args)]
pub struct FetchArgs {
    /// Place name, or `lat,lon`. Optional with `--offline-fixture`.
    pub place: Option<String>,
    #[arg(long, default_value_t = DEFAULT_RADIUS_M)]
    pub radius: f64,
    /// Output directory for the dataset file.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Raw Overpass JSON to use instead of the network.
    #[arg(long, conflicts_with_all = ["fixture", "server"])]
    pub offline_fixture: Option<PathBuf>,
    /// Bundled raw fixture, e.g. `seattle_center`.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Ignore cached Overpass responses.
    #[arg(long)]
    pub refresh: bool,
    /// Where Overpass responses are cached.
    #[arg(long, env = "CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Fetch through a running service.
    #[arg(long)]
    pub server: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct RenderArgs {
    /// Dataset JSON file.
    pub dataset: PathBuf,
    /// Draw the cursor marker at `x,y` (canvas pixels).
    #[arg(long)]
    pub cursor: Option<String>,
    /// Draw zone names.
    #[arg(long)]
    pub labels: bool,
    #[arg(long, default_value_t = hapticmap_core::render::DEFAULT_JPEG_QUALITY)]
    pub quality: u8,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ReplayArgs {
    /// Dataset JSON file.
    pub dataset: PathBuf,
    /// JSON-Lines trace of `{"t_ms","x","y"}` moves and `{"ask"}` questions.
    pub trace: PathBuf,
    /// Provider for in-process replay (default: mock_grounded).
    #[arg(long)]
    pub provider: Option<ProviderKind>,
    /// Compare against this transcript, writing it if absent.
    #[arg(long)]
    pub golden: Option<PathBuf>,
    /// Overwrite the golden file instead of comparing.
    #[arg(long, requires = "golden")]
    pub bless: bool,
    /// Replay through a running service.
    #[arg(long, conflicts_with = "provider")]
    pub server: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub host: Option<String>,
    /// TOML file using the environment variable names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn init_tracing(default: &str) {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_tracing(if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" });
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: starting runtime: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = runtime.block_on(async {
        match cli.command {
            Command::Fetch(a) => commands::fetch(a).await,
            Command::Render(a) => commands::render(a),
            Command::Replay(a) => commands::replay(a).await,
            Command::Serve(a) => commands::serve(a).await,
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
