mod config;
mod node_cmd;
mod output;
mod repo_cmd;
mod serve_cmd;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use protobooth_analytics::CumulativeMode;
use protobooth_backend::FigureKind;

use crate::config::FileConfig;
use crate::output::{CliError, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "protobooth", version, about = "Prototype capture booths, repository and figures")]
struct Cli {
    /// Settings file; `./protobooth.toml` is read when present.
    #[arg(long, global = true, env = "PROTOBOOTH_CONFIG")]
    config: Option<PathBuf>,

    /// Log filter, e.g. `info` or `protobooth_node=debug`.
    #[arg(long, global = true, env = "PROTOBOOTH_LOG", default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RepoArgs {
    /// Repository directory.
    #[arg(long, env = "PROTOBOOTH_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct BoothArgs {
    /// Booth settings file (booth_id, server, spool_dir, ...).
    #[arg(long)]
    booth_config: Option<PathBuf>,
    #[arg(long)]
    booth_id: Option<String>,
    /// Backend base URL.
    #[arg(long, env = "PROTOBOOTH_SERVER")]
    server: Option<String>,
    #[arg(long)]
    spool_dir: Option<PathBuf>,
    /// Simulated per-camera acquisition time.
    #[arg(long)]
    frame_latency_ms: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        repo: RepoArgs,
        #[arg(long, env = "PROTOBOOTH_BIND")]
        bind: Option<String>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Run a booth: as a daemon reading card ids from stdin, on a swipe
    /// script with simulated time, or just to flush its spool.
    Node {
        #[command(flatten)]
        booth: BoothArgs,
        /// Replay `--swipes` on a simulated clock.
        #[arg(long, requires = "swipes")]
        simulate: bool,
        /// CSV with header `offset_seconds,card_id`.
        #[arg(long)]
        swipes: Option<PathBuf>,
        /// Simulation start, UNIX seconds. Defaults to now.
        #[arg(long)]
        start: Option<i64>,
        /// Only deliver what is already spooled.
        #[arg(long, conflicts_with = "simulate")]
        flush: bool,
        /// Daemon mode: seconds between delivery attempts.
        #[arg(long, default_value_t = 10)]
        flush_interval: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Capture once per card, right now, and deliver.
    Swipe {
        #[command(flatten)]
        booth: BoothArgs,
        #[arg(required = true)]
        cards: Vec<String>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Load the synthetic 82-prototype case project into the repository.
    Fixture {
        #[command(flatten)]
        repo: RepoArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Compute a figure and write it as SVG, CSV or JSON.
    Analyze {
        figure: FigureKind,
        #[command(flatten)]
        repo: RepoArgs,
        /// Read from a running server instead of the data directory.
        #[arg(long, env = "PROTOBOOTH_SERVER")]
        server: Option<String>,
        #[arg(long)]
        project: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// IANA time zone for the weekday plot.
        #[arg(long, default_value = "UTC")]
        tz: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Distinct)]
        mode: ModeArg,
        /// Bulk detection: largest gap inside a session, seconds.
        #[arg(long, default_value_t = protobooth_analytics::DEFAULT_WINDOW_SECONDS)]
        window: i64,
        /// Bulk detection: sessions must be larger than this.
        #[arg(long, default_value_t = protobooth_analytics::DEFAULT_THRESHOLD)]
        threshold: usize,
        #[arg(long, value_enum, default_value_t = FigureFormat::Svg)]
        format: FigureFormat,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write an archive of the repository or one project.
    Export {
        #[command(flatten)]
        repo: RepoArgs,
        #[arg(long, env = "PROTOBOOTH_SERVER")]
        server: Option<String>,
        #[arg(long)]
        project: Option<String>,
        /// Tar file, or a directory with `--dir`.
        #[arg(long, short)]
        out: PathBuf,
        /// Write an unpacked directory tree instead of a tar file.
        #[arg(long)]
        dir: bool,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Import an archive (tar file or directory).
    Import {
        archive: PathBuf,
        #[command(flatten)]
        repo: RepoArgs,
        #[arg(long, env = "PROTOBOOTH_SERVER")]
        server: Option<String>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Check blobs, references and invariants. Exits 1 on any violation.
    Verify {
        #[command(flatten)]
        repo: RepoArgs,
        #[arg(long, env = "PROTOBOOTH_SERVER")]
        server: Option<String>,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Distinct,
    Summed,
}

impl From<ModeArg> for CumulativeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Distinct => CumulativeMode::Distinct,
            ModeArg::Summed => CumulativeMode::Summed,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FigureFormat {
    Svg,
    Csv,
    Json,
}

impl From<FigureFormat> for protobooth_analytics::Format {
    fn from(f: FigureFormat) -> Self {
        match f {
            FigureFormat::Svg => Self::Svg,
            FigureFormat::Csv => Self::Csv,
            FigureFormat::Json => Self::Json,
        }
    }
}

impl Command {
    fn report_format(&self) -> ReportFormat {
        match self {
            Command::Serve { report, .. }
            | Command::Node { report, .. }
            | Command::Swipe { report, .. }
            | Command::Fixture { report, .. }
            | Command::Export { report, .. }
            | Command::Import { report, .. }
            | Command::Verify { report, .. } => report.format,
            Command::Analyze { format: FigureFormat::Json, .. } => ReportFormat::Json,
            Command::Analyze { .. } => ReportFormat::Text,
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let ok = Ok(ExitCode::SUCCESS);
    match cli.command {
        Command::Serve { repo, bind, report } => {
            serve_cmd::serve(file.data_dir(repo.data_dir), file.bind(bind)?, report.format)?;
            ok
        }
        Command::Node { booth, simulate, swipes, start, flush, flush_interval, report } => {
            let booth = node_cmd::resolve(&booth, &file)?;
            if simulate {
                let script = swipes.expect("clap requires --swipes");
                node_cmd::simulate(&booth, &script, start, report.format)?;
            } else if flush {
                node_cmd::flush(&booth, report.format)?;
            } else {
                node_cmd::daemon(&booth, flush_interval, report.format)?;
            }
            ok
        }
        Command::Swipe { booth, cards, report } => {
            let booth = node_cmd::resolve(&booth, &file)?;
            node_cmd::swipe(&booth, &cards, report.format)?;
            ok
        }
        Command::Fixture { repo, seed, report } => {
            repo_cmd::fixture(&file.data_dir(repo.data_dir), seed, report.format)?;
            ok
        }
        Command::Analyze {
            figure,
            repo,
            server,
            project,
            scheme,
            seed,
            tz,
            mode,
            window,
            threshold,
            format,
            out,
        } => {
            let req = protobooth_backend::FigureRequest {
                project: project.map(Into::into),
                scheme: scheme.map(Into::into),
                seed,
                tz,
                mode: mode.into(),
                window,
                threshold,
            };
            let source = repo_cmd::Source::pick(file.server(server), file.data_dir(repo.data_dir));
            repo_cmd::analyze(&source, figure, &req, format.into(), out.as_deref())?;
            ok
        }
        Command::Export { repo, server, project, out, dir, report } => {
            let source = repo_cmd::Source::pick(file.server(server), file.data_dir(repo.data_dir));
            repo_cmd::export(&source, project.map(Into::into), &out, dir, report.format)?;
            ok
        }
        Command::Import { archive, repo, server, report } => {
            let source = repo_cmd::Source::pick(file.server(server), file.data_dir(repo.data_dir));
            repo_cmd::import(&source, &archive, report.format)?;
            ok
        }
        Command::Verify { repo, server, report } => {
            let source = repo_cmd::Source::pick(file.server(server), file.data_dir(repo.data_dir));
            let clean = repo_cmd::verify(&source, report.format)?;
            Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(tracing_subscriber::EnvFilter::new(&cli.log))
        .init();
    let format = cli.command.report_format();
    match run(cli) {
        Ok(code) => code,
        Err(e) => e.exit(format),
    }
}
