//! The CLI verbs, callable without a terminal so tests and scripts can use
//! them directly.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use covermine::blackboard::Blackboard;
use covermine::eval::Evaluation;
use covermine::explore::format_ruleset;
use covermine::feedback::UserAction;
use covermine::model::RuleSet;
use covermine::persist::{self, FrontExport, ReplayReport, Snapshot};
use covermine::session::{Session, SessionConfig};
use serde::Serialize;

use crate::api;
use crate::config::ServeConfig;

fn write_json(path: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                // a closed pipe (`| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

pub fn open_session(config: &ServeConfig) -> anyhow::Result<Session> {
    config.validate()?;
    let session_config = SessionConfig {
        board: config.board.clone(),
        agent: config.agent.clone(),
        base_seed: config.base_seed,
        log_path: config.log.clone(),
    };
    Ok(match (&config.snapshot, &config.data) {
        (Some(snap), _) => Session::from_snapshot(&Snapshot::load(snap)?, session_config)?,
        (None, Some(data)) => {
            let data = persist::load_dataset(data, config.schema.as_deref())?;
            Session::new(data, session_config)?
        }
        (None, None) => bail!("give a dataset or a snapshot"),
    })
}

/// Runs the HTTP service until Ctrl-C, then stops the agents and, if asked,
/// saves a snapshot.
pub async fn serve(config: ServeConfig, save_snapshot: Option<PathBuf>) -> anyhow::Result<()> {
    let session = Arc::new(open_session(&config)?);
    let app = api::router(session.clone(), config.ui.clone());
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .with_context(|| format!("binding {}", config.addr))?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    let s = session.clone();
    tokio::task::spawn_blocking(move || -> anyhow::Result<()> {
        s.apply(UserAction::StopAgents)?;
        if let Some(p) = save_snapshot {
            s.save_snapshot(&p)?;
            tracing::info!(path = %p.display(), "snapshot saved");
        }
        Ok(())
    })
    .await??;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MineArgs {
    pub data: PathBuf,
    pub schema: Option<PathBuf>,
    /// Wall-clock budget; agents are stopped when it runs out.
    pub seconds: f64,
    /// Per-agent iteration budget; with one agent this makes the run
    /// reproducible.
    pub iterations: Option<u64>,
    pub agents: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Defaults to `out` with the extension `log`.
    pub log: Option<PathBuf>,
    pub config: SessionConfig,
}

/// Headless mining: runs agents for the budget, then writes the front
/// export and leaves the log next to it.
pub fn mine(args: MineArgs) -> anyhow::Result<FrontExport> {
    let data = persist::load_dataset(&args.data, args.schema.as_deref())?;
    let mut config = args.config.clone();
    config.log_path = Some(args.log.clone().unwrap_or_else(|| args.out.with_extension("log")));
    if let Some(n) = args.iterations {
        config.agent.max_iterations = Some(n);
    }
    let session = Session::new(data, config)?;
    if args.agents > 0 && (args.seconds > 0.0 || args.iterations.is_some()) {
        session.apply(UserAction::StartAgents {
            n: args.agents as i64,
            seed: Some(args.seed),
        })?;
        let deadline = (args.seconds > 0.0).then(|| Instant::now() + Duration::from_secs_f64(args.seconds));
        while session.running_agents() > 0 && deadline.is_none_or(|d| Instant::now() < d) {
            std::thread::sleep(Duration::from_millis(20));
        }
        session.apply(UserAction::StopAgents)?;
    }
    let export = session.export_front();
    write_json(Some(&args.out), &export)?;
    Ok(export)
}

/// Re-executes a log; the report says whether the front digest matched.
pub fn replay(log: &Path, data: &Path, schema: Option<&Path>) -> anyhow::Result<ReplayReport> {
    let (header, entries) = persist::read_log(log)?;
    let data = persist::load_dataset(data, schema)?;
    Ok(persist::replay(&header, &entries, data)?)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub ruleset: String,
    pub display: String,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

pub fn eval(data: &Path, schema: Option<&Path>, ruleset: &str) -> anyhow::Result<EvalReport> {
    let data = persist::load_dataset(data, schema)?;
    let rs = RuleSet::parse(ruleset, data.features())?;
    let board = Blackboard::new(data);
    let evaluation = board.evaluate(&rs)?;
    Ok(EvalReport {
        ruleset: rs.to_string(),
        display: format_ruleset(&board.data(), &rs),
        evaluation,
    })
}

/// The front stored in a snapshot, validated on load.
pub fn export(snapshot: &Path) -> anyhow::Result<FrontExport> {
    let board = Snapshot::load(snapshot)?.restore()?;
    Ok(persist::export_front(&board))
}

pub fn print(value: &impl Serialize, out: Option<&Path>) -> anyhow::Result<()> {
    write_json(out, value)
}
