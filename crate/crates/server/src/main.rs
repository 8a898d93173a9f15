use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use covermine::session::SessionConfig;
use covermine_server::commands::{self, MineArgs};
use covermine_server::config::ServeConfig;

#[derive(Parser)]
#[command(name = "covermine", version, about = "Anytime multi-objective rule mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service (and the web UI, if built).
    Serve {
        /// TOML config; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long)]
        addr: Option<std::net::SocketAddr>,
        /// Write a snapshot here on shutdown.
        #[arg(long)]
        save_snapshot: Option<PathBuf>,
    },
    /// Mine without a UI and write the resulting front.
    Mine {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, default_value_t = 1)]
        agents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Re-execute a log and compare front digests.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Evaluate one ruleset on a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        ruleset: String,
    },
    /// Export the front of a snapshot.
    Export {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Serve {
            config,
            data,
            schema,
            snapshot,
            log,
            ui,
            addr,
            save_snapshot,
        } => {
            let mut c = match config {
                Some(p) => ServeConfig::load(&p)?,
                None => ServeConfig::default(),
            };
            c.data = data.or(c.data);
            c.schema = schema.or(c.schema);
            c.snapshot = snapshot.or(c.snapshot);
            c.log = log.or(c.log);
            c.ui = ui.or(c.ui);
            c.addr = addr.unwrap_or(c.addr);
            tokio::runtime::Runtime::new()?.block_on(commands::serve(c, save_snapshot))?;
        }
        Command::Mine {
            data,
            schema,
            seconds,
            iterations,
            agents,
            seed,
            out,
            log,
        } => {
            let export = commands::mine(MineArgs {
                data,
                schema,
                seconds,
                iterations,
                agents,
                seed,
                out: out.clone(),
                log,
                config: SessionConfig::default(),
            })?;
            eprintln!("{} entries, digest {}, written to {}", export.entries.len(), export.digest, out.display());
        }
        Command::Replay { log, data, schema } => {
            let report = commands::replay(&log, &data, schema.as_deref())?;
            commands::print(&report, None)?;
            return Ok(report.matches());
        }
        Command::Eval { data, schema, ruleset } => {
            commands::print(&commands::eval(&data, schema.as_deref(), &ruleset)?, None)?;
        }
        Command::Export { snapshot, out } => {
            commands::print(&commands::export(&snapshot)?, out.as_deref())?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
