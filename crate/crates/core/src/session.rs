//! A mining session: one blackboard, its action log and a pool of agent
//! threads. Every user action goes through [`Session::apply`], which logs it
//! before it takes effect.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentConfig, AgentStatus, RunState, StatusReport};
use crate::blackboard::{Blackboard, BoardConfig, Bounds, InsertListener};
use crate::eval::TargetFunction;
use crate::expr::ComputedFeature;
use crate::feedback::{self, ActionOutput, FeedbackError, UserAction};
use crate::model::Dataset;
use crate::persist::{
    export_front, FrontExport, LogBody, LogHeader, PersistError, ReplayLog, Snapshot,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SessionConfig {
    pub board: BoardConfig,
    /// Template for started agents; `id` and `seed` are set per agent.
    pub agent: AgentConfig,
    /// Seed of agent `i` is `base_seed + i` unless a start request names one.
    pub base_seed: u64,
    pub log_path: Option<PathBuf>,
}

/// An applied action: its log sequence number and what it returned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applied {
    pub seq: u64,
    #[serde(flatten)]
    pub output: ActionOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionStatus {
    pub data_version: u64,
    pub records: usize,
    pub front_size: usize,
    pub digest: String,
    pub target: TargetFunction,
    pub bounds: Bounds,
    pub log_position: u64,
    pub clock: u64,
    pub running_agents: usize,
    pub agents: Vec<StatusReport>,
}

struct Running {
    status: Arc<AgentStatus>,
    handle: JoinHandle<u64>,
}

#[derive(Default)]
struct Pool {
    running: Vec<Running>,
    last: Vec<Arc<AgentStatus>>,
}

pub struct Session {
    board: Arc<Blackboard>,
    log: Arc<ReplayLog>,
    computed: Mutex<Vec<ComputedFeature>>,
    pool: Mutex<Pool>,
    config: SessionConfig,
}

impl Session {
    pub fn new(data: Dataset, config: SessionConfig) -> Result<Session, SessionError> {
        let header = LogHeader::new(&data, &config.board);
        let board = Blackboard::with_config(data, config.board.clone());
        Self::assemble(board, Vec::new(), header, config)
    }

    /// Resumes from a snapshot. The log starts afresh, with the restored
    /// dataset as its base.
    pub fn from_snapshot(snapshot: &Snapshot, mut config: SessionConfig) -> Result<Session, SessionError> {
        let board = snapshot.restore()?;
        config.board = board.config().clone();
        let header = LogHeader::new(&board.data(), &config.board);
        Self::assemble(board, snapshot.computed_features.clone(), header, config)
    }

    fn assemble(
        board: Blackboard,
        computed: Vec<ComputedFeature>,
        header: LogHeader,
        config: SessionConfig,
    ) -> Result<Session, SessionError> {
        let log = match &config.log_path {
            Some(p) => ReplayLog::create(p, header)?,
            None => ReplayLog::in_memory(header),
        };
        Ok(Session {
            board: Arc::new(board),
            log: Arc::new(log),
            computed: Mutex::new(computed),
            pool: Mutex::new(Pool::default()),
            config,
        })
    }

    pub fn board(&self) -> &Arc<Blackboard> {
        &self.board
    }

    pub fn log(&self) -> &Arc<ReplayLog> {
        &self.log
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn computed_features(&self) -> Vec<ComputedFeature> {
        self.computed.lock().clone()
    }

    /// Logs and applies one action. Failed actions are logged too, with
    /// their error, so that replay sees the same sequence.
    pub fn apply(&self, action: UserAction) -> Result<Applied, SessionError> {
        match action {
            UserAction::StartAgents { n, seed } => self.start_agents(n, seed),
            UserAction::StopAgents => self.stop_agents(),
            action => self.apply_board(action),
        }
    }

    fn apply_board(&self, action: UserAction) -> Result<Applied, SessionError> {
        let mut computed = self.computed.lock();
        let log = &self.log;
        self.board.transact(|t| {
            let clock = t.clock();
            let seq = log.append(
                "user",
                clock,
                LogBody::Action {
                    action: action.clone(),
                },
                true,
            )?;
            let out = feedback::apply(t, &action, &mut computed);
            log.append(
                "user",
                clock,
                LogBody::Result {
                    of: seq,
                    ok: out.is_ok(),
                    digest: t.digest(),
                    error: out.as_ref().err().map(|e| e.to_string()),
                    output: out.as_ref().ok().and_then(|o| serde_json::to_value(o).ok()),
                },
                false,
            )?;
            Ok(Applied { seq, output: out? })
        })
    }

    fn start_agents(&self, n: i64, seed: Option<u64>) -> Result<Applied, SessionError> {
        if n <= 0 {
            return Err(FeedbackError::Invalid("agent count must be positive".into()).into());
        }
        let n = n as usize;
        let mut pool = self.pool.lock();
        self.reap(&mut pool)?;
        if !pool.running.is_empty() {
            return Err(FeedbackError::AgentsRunning.into());
        }
        let base = seed.unwrap_or(self.config.base_seed);
        let action = UserAction::StartAgents {
            n: n as i64,
            seed: Some(base),
        };
        let seq = self
            .log
            .append("user", self.board.clock(), LogBody::Action { action }, true)?;

        let listener: Option<InsertListener> = (n > 1).then(|| {
            let log = self.log.clone();
            let board = Arc::downgrade(&self.board);
            Arc::new(move |rs: &crate::model::RuleSet, _: &crate::eval::Evaluation| {
                let clock = board.upgrade().map_or(0, |b| b.clock());
                let _ = log.append(
                    "agents",
                    clock,
                    LogBody::Insert {
                        ruleset: rs.to_string(),
                    },
                    false,
                );
            }) as InsertListener
        });
        self.board.set_insert_listener(listener);

        let mut agents = Vec::with_capacity(n);
        for i in 0..n {
            let config = AgentConfig {
                id: i,
                seed: base.wrapping_add(i as u64),
                ..self.config.agent.clone()
            };
            self.log.append(
                &format!("agent-{i}"),
                self.board.clock(),
                LogBody::AgentStart {
                    agent: i,
                    agents: n,
                    seed: config.seed,
                    config: config.clone(),
                },
                false,
            )?;
            agents.push(Agent::new(config));
        }
        pool.last.clear();
        for mut agent in agents {
            let status = agent.status();
            status.set_state(RunState::Running);
            let board = self.board.clone();
            let handle = std::thread::Builder::new()
                .name(format!("agent-{}", status.id))
                .spawn(move || {
                    agent.run(&board);
                    agent.iterations()
                })
                .map_err(|e| FeedbackError::Invalid(format!("cannot spawn agent: {e}")))?;
            pool.last.push(status.clone());
            pool.running.push(Running { status, handle });
        }
        self.log.append(
            "user",
            self.board.clock(),
            LogBody::Result {
                of: seq,
                ok: true,
                digest: self.board.digest(),
                error: None,
                output: None,
            },
            false,
        )?;
        Ok(Applied {
            seq,
            output: ActionOutput::Agents { agents: n },
        })
    }

    /// Joins agents that have stopped on their own and logs their stop.
    fn reap(&self, pool: &mut Pool) -> Result<(), SessionError> {
        if pool.running.iter().all(|r| r.handle.is_finished()) {
            self.join_all(pool)?;
        }
        Ok(())
    }

    fn join_all(&self, pool: &mut Pool) -> Result<usize, SessionError> {
        let n = pool.running.len();
        for r in std::mem::take(&mut pool.running) {
            let iterations = r.handle.join().unwrap_or_else(|_| r.status.iterations());
            self.log.append(
                &format!("agent-{}", r.status.id),
                self.board.clock(),
                LogBody::AgentStop {
                    agent: r.status.id,
                    iterations,
                    digest: self.board.digest(),
                },
                true,
            )?;
        }
        if n > 0 {
            self.board.set_insert_listener(None);
        }
        Ok(n)
    }

    /// Stops and joins all agents. Stopping when none run is a no-op apart
    /// from the log entry.
    fn stop_agents(&self) -> Result<Applied, SessionError> {
        let mut pool = self.pool.lock();
        let seq = self.log.append(
            "user",
            self.board.clock(),
            LogBody::Action {
                action: UserAction::StopAgents,
            },
            true,
        )?;
        for r in &pool.running {
            r.status.request_stop();
        }
        let n = self.join_all(&mut pool)?;
        self.log.append(
            "user",
            self.board.clock(),
            LogBody::Result {
                of: seq,
                ok: true,
                digest: self.board.digest(),
                error: None,
                output: None,
            },
            false,
        )?;
        Ok(Applied {
            seq,
            output: ActionOutput::Agents { agents: n },
        })
    }

    /// Blocks until all agents have stopped by themselves (for runs with an
    /// iteration limit), then logs their stop.
    pub fn wait_agents(&self) -> Result<(), SessionError> {
        let mut pool = self.pool.lock();
        self.join_all(&mut pool)?;
        Ok(())
    }

    pub fn running_agents(&self) -> usize {
        self.pool
            .lock()
            .running
            .iter()
            .filter(|r| !r.handle.is_finished())
            .count()
    }

    pub fn status(&self) -> SessionStatus {
        let pool = self.pool.lock();
        let agents: Vec<StatusReport> = pool.last.iter().map(|s| s.report()).collect();
        let (state, data) = self.board.export_with_data();
        SessionStatus {
            data_version: state.data_version,
            records: data.len(),
            front_size: state.front.len(),
            digest: crate::blackboard::digest_of(self.board.rulesets().iter()),
            target: state.target,
            bounds: state.bounds,
            log_position: self.log.position(),
            clock: state.clock,
            running_agents: agents
                .iter()
                .filter(|a| a.state == RunState::Running)
                .count(),
            agents,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        // holding the computed list keeps data-changing actions out
        let computed = self.computed.lock();
        Snapshot::capture(&self.board, &computed, self.log.position())
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<(), SessionError> {
        Ok(self.snapshot().save(path)?)
    }

    pub fn export_front(&self) -> FrontExport {
        export_front(&self.board)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let mut pool = self.pool.lock();
        for r in &pool.running {
            r.status.request_stop();
        }
        let _ = self.join_all(&mut pool);
    }
}
