//! Reproducibility layer: dataset ingestion, the append-only action log,
//! snapshots, front exports and replay.
//!
//! Logs are JSON lines. The first line is a [`LogHeader`]; every further line
//! is a [`LogEntry`]. User actions are logged from inside the board
//! transaction that applies them, together with the agent clock at that
//! moment, and followed by a result entry carrying the front digest. That is
//! enough to re-run a single-agent session step for step.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::{Agent, AgentConfig};
use crate::blackboard::{
    digest_of, AddOutcome, Blackboard, BoardConfig, BoardError, BoardState, FrontEntry,
};
use crate::eval::Objectives;
use crate::expr::{ComputedFeature, ExprError};
use crate::feedback::{self, UserAction};
use crate::model::{Dataset, Feature, FeatureKind, ModelError, Record, RuleSet, Value};
use crate::FORMAT_MAGIC;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("data error: {0}")]
    Data(String),
    #[error("unsupported format `{0}`, expected `{FORMAT_MAGIC}`")]
    Version(String),
    #[error("corrupt log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("the dataset does not match the one the log was recorded on")]
    DataMismatch,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// datasets

/// Sidecar schema: feature name to kind, e.g. `{"size": "numeric"}`.
pub type Schema = BTreeMap<String, FeatureKind>;

fn is_decimal(s: &str) -> bool {
    let t = s.trim();
    !t.is_empty()
        && t.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && t.parse::<f64>().is_ok_and(f64::is_finite)
}

/// Reads CSV with a header row. `id` is required; `causes` holds
/// `;`-separated cause ids; without `causes`, a `label` column of `T`/`F`
/// gives every `T` record the cause `c:<id>`. All other columns are
/// features, typed by `schema` or inferred (numeric iff every value is a
/// decimal number).
pub fn read_dataset<R: Read>(reader: R, schema: Option<&Schema>) -> Result<Dataset, PersistError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or_else(|| PersistError::Data("missing `id` column".into()))?;
    let causes_col = col("causes");
    let label_col = if causes_col.is_none() { col("label") } else { None };
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != id_col && Some(i) != causes_col && headers[i] != "label")
        .collect();
    if let Some(schema) = schema {
        if let Some(unknown) = schema.keys().find(|k| !feature_cols.iter().any(|&i| &headers[i] == *k)) {
            return Err(PersistError::Data(format!("schema names unknown column `{unknown}`")));
        }
    }

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        for (i, v) in row.iter().enumerate() {
            if v.is_empty() && Some(i) != causes_col {
                let line = row.position().map_or(0, |p| p.line());
                return Err(PersistError::Data(format!(
                    "line {line}: missing value for `{}`",
                    headers[i]
                )));
            }
        }
        rows.push(row);
    }

    let features: Vec<Feature> = feature_cols
        .iter()
        .map(|&i| {
            let name = &headers[i];
            let kind = match schema.and_then(|s| s.get(name)) {
                Some(k) => *k,
                None if rows.iter().all(|r| is_decimal(&r[i])) => FeatureKind::Numeric,
                None => FeatureKind::Nominal,
            };
            Feature::new(name.clone(), kind)
        })
        .collect();

    let mut records = Vec::with_capacity(rows.len());
    let mut seen = BTreeSet::new();
    for row in &rows {
        let id = row[id_col].to_string();
        if !seen.insert(id.clone()) {
            return Err(PersistError::Data(format!("duplicate record id `{id}`")));
        }
        let mut values = BTreeMap::new();
        for (f, &i) in features.iter().zip(&feature_cols) {
            let raw = &row[i];
            let v = match f.kind {
                FeatureKind::Nominal => Value::nominal(raw),
                FeatureKind::Numeric => Value::numeric(
                    raw.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            PersistError::Data(format!(
                                "record `{id}`: `{raw}` is not a number for `{}`",
                                f.name
                            ))
                        })?,
                ),
            };
            values.insert(f.name.clone(), v);
        }
        let causes: BTreeSet<String> = match (causes_col, label_col) {
            (Some(c), _) => row[c]
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
            (None, Some(l)) => match &row[l] {
                "T" => BTreeSet::from([format!("c:{id}")]),
                "F" => BTreeSet::new(),
                other => {
                    return Err(PersistError::Data(format!(
                        "record `{id}`: label must be T or F, got `{other}`"
                    )))
                }
            },
            (None, None) => BTreeSet::new(),
        };
        records.push(Record {
            id,
            values,
            causes,
        });
    }
    Ok(Dataset::new(features, records)?)
}

pub fn load_schema(path: &Path) -> Result<Schema, PersistError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads a CSV file, with an optional JSON schema sidecar.
pub fn load_dataset(data: &Path, schema: Option<&Path>) -> Result<Dataset, PersistError> {
    let schema = schema.map(load_schema).transpose()?;
    let file = File::open(data).map_err(io_err(data))?;
    read_dataset(file, schema.as_ref())
}

/// SHA-256 over the base features, records and cause links.
pub fn dataset_digest(data: &Dataset) -> String {
    let (features, records) = data.base_parts();
    let text = serde_json::to_string(&(features, records, data.declared_causes()))
        .expect("dataset serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

// ---------------------------------------------------------------------------
// log

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogHeader {
    pub magic: String,
    pub data_digest: String,
    pub board: BoardConfig,
    pub created_ms: u64,
}

impl LogHeader {
    pub fn new(data: &Dataset, board: &BoardConfig) -> Self {
        LogHeader {
            magic: FORMAT_MAGIC.to_string(),
            data_digest: dataset_digest(data),
            board: board.clone(),
            created_ms: now_ms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum LogBody {
    Action {
        action: UserAction,
    },
    #[serde(rename_all = "camelCase")]
    Result {
        of: u64,
        ok: bool,
        digest: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output: Option<serde_json::Value>,
    },
    #[serde(rename_all = "camelCase")]
    AgentStart {
        agent: usize,
        /// Agents started together with this one.
        agents: usize,
        seed: u64,
        config: AgentConfig,
    },
    #[serde(rename_all = "camelCase")]
    AgentStop {
        agent: usize,
        iterations: u64,
        digest: String,
    },
    /// A front insertion by an agent, logged only while several agents run.
    Insert {
        ruleset: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub seq: u64,
    pub timestamp_ms: u64,
    /// `user`, `agent-<k>` or `agents`.
    pub actor: String,
    /// Agent clock when the entry was written.
    pub clock: u64,
    #[serde(flatten)]
    pub body: LogBody,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

struct LogInner {
    file: Option<(PathBuf, BufWriter<File>)>,
    entries: Vec<LogEntry>,
}

/// Append-only log with a single writer and an in-memory copy for readers.
pub struct ReplayLog {
    header: LogHeader,
    inner: Mutex<LogInner>,
    appended: Condvar,
}

impl ReplayLog {
    pub fn in_memory(header: LogHeader) -> Self {
        ReplayLog {
            header,
            inner: Mutex::new(LogInner {
                file: None,
                entries: Vec::new(),
            }),
            appended: Condvar::new(),
        }
    }

    /// Creates (truncates) `path` and writes the header line.
    pub fn create(path: &Path, header: LogHeader) -> Result<Self, PersistError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
        let log = Self::in_memory(header);
        log.inner.lock().file = Some((path.to_path_buf(), w));
        Ok(log)
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    /// Sequence number of the last entry (0 when empty).
    pub fn position(&self) -> u64 {
        self.inner.lock().entries.len() as u64
    }

    /// Appends and flushes one entry; returns its sequence number. `durable`
    /// additionally syncs the file to disk.
    pub fn append(
        &self,
        actor: &str,
        clock: u64,
        body: LogBody,
        durable: bool,
    ) -> Result<u64, PersistError> {
        let mut inner = self.inner.lock();
        let entry = LogEntry {
            seq: inner.entries.len() as u64 + 1,
            timestamp_ms: now_ms(),
            actor: actor.to_string(),
            clock,
            body,
        };
        if let Some((path, w)) = inner.file.as_mut() {
            serde_json::to_writer(&mut *w, &entry)?;
            w.write_all(b"\n").map_err(io_err(path))?;
            w.flush().map_err(io_err(path))?;
            if durable {
                w.get_ref().sync_data().map_err(io_err(path))?;
            }
        }
        let seq = entry.seq;
        inner.entries.push(entry);
        self.appended.notify_all();
        Ok(seq)
    }

    pub fn entries(&self) -> Vec<LogEntry> {
        self.inner.lock().entries.clone()
    }

    /// Entries with a sequence number greater than `since`.
    pub fn since(&self, since: u64) -> Vec<LogEntry> {
        let inner = self.inner.lock();
        inner.entries[(since as usize).min(inner.entries.len())..].to_vec()
    }

    /// Like [`ReplayLog::since`], but waits up to `timeout` for new entries.
    pub fn wait_since(&self, since: u64, timeout: Duration) -> Vec<LogEntry> {
        let deadline = Instant::now() + timeout;
        let mut inner = self.inner.lock();
        while inner.entries.len() as u64 <= since {
            if self.appended.wait_until(&mut inner, deadline).timed_out() {
                break;
            }
        }
        inner.entries[(since as usize).min(inner.entries.len())..].to_vec()
    }
}

pub fn parse_log<R: BufRead>(reader: R) -> Result<(LogHeader, Vec<LogEntry>), PersistError> {
    let mut lines = reader.lines().enumerate();
    let corrupt = |line: usize, message: String| PersistError::Corrupt { line, message };
    let header: LogHeader = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| corrupt(1, e.to_string()))?;
            serde_json::from_str(&line).map_err(|e| corrupt(1, e.to_string()))?
        }
        None => return Err(corrupt(1, "empty log".into())),
    };
    if header.magic != FORMAT_MAGIC {
        return Err(PersistError::Version(header.magic));
    }
    let mut entries: Vec<LogEntry> = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| corrupt(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: LogEntry =
            serde_json::from_str(&line).map_err(|e| corrupt(i + 1, e.to_string()))?;
        if e.seq != entries.len() as u64 + 1 {
            return Err(corrupt(i + 1, format!("sequence number {} out of order", e.seq)));
        }
        entries.push(e);
    }
    Ok((header, entries))
}

pub fn read_log(path: &Path) -> Result<(LogHeader, Vec<LogEntry>), PersistError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_log(BufReader::new(file))
}

// ---------------------------------------------------------------------------
// snapshots and exports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub magic: String,
    pub features: Vec<Feature>,
    pub records: Vec<Record>,
    pub declared_causes: BTreeSet<String>,
    /// Re-materialized in order on load.
    pub computed_features: Vec<ComputedFeature>,
    pub board_config: BoardConfig,
    pub board: BoardState,
    pub log_position: u64,
}

impl Snapshot {
    pub fn capture(board: &Blackboard, computed: &[ComputedFeature], log_position: u64) -> Self {
        let (state, data) = board.export_with_data();
        let (features, records) = data.base_parts();
        Snapshot {
            magic: FORMAT_MAGIC.to_string(),
            features,
            records,
            declared_causes: data.declared_causes().clone(),
            computed_features: computed.to_vec(),
            board_config: board.config().clone(),
            board: state,
            log_position,
        }
    }

    /// Rebuilds the dataset and the board, validating every entry.
    pub fn restore(&self) -> Result<Blackboard, PersistError> {
        if self.magic != FORMAT_MAGIC {
            return Err(PersistError::Version(self.magic.clone()));
        }
        let mut data = Dataset::with_declared_causes(
            self.features.clone(),
            self.records.clone(),
            self.declared_causes.iter().cloned(),
        )?;
        for cf in &self.computed_features {
            let (feature, values) = cf.materialize(&data)?;
            data = data.with_computed_column(feature, values)?;
        }
        Ok(Blackboard::from_state(
            data,
            self.board_config.clone(),
            &self.board,
        )?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        w.flush().map_err(io_err(path))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let probe: serde_json::Value = serde_json::from_str(&text)?;
        match probe.get("magic").and_then(|m| m.as_str()) {
            Some(FORMAT_MAGIC) => Ok(serde_json::from_value(probe)?),
            Some(other) => Err(PersistError::Version(other.to_string())),
            None => Err(PersistError::Version(String::new())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FrontExport {
    pub magic: String,
    pub objectives: Vec<&'static str>,
    pub digest: String,
    pub entries: Vec<FrontEntry>,
}

pub fn export_front(board: &Blackboard) -> FrontExport {
    let mut entries = board.entries();
    entries.sort_by_key(|e| e.ruleset.to_string());
    FrontExport {
        magic: FORMAT_MAGIC.to_string(),
        objectives: objective_names(board.objectives()),
        digest: digest_of(entries.iter().map(|e| &e.ruleset)),
        entries,
    }
}

pub fn objective_names(o: &Objectives) -> Vec<&'static str> {
    o.0.iter().map(|d| d.name()).collect()
}

// ---------------------------------------------------------------------------
// replay

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ReplayMode {
    /// Single-agent log, re-executed step for step.
    Exact,
    /// Multi-agent log: user actions and logged insertions are re-applied
    /// in log order and every insertion must be accepted again.
    SupersetCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Divergence {
    pub seq: u64,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayReport {
    pub mode: ReplayMode,
    pub recorded_digest: String,
    pub replayed_digest: String,
    pub divergences: Vec<Divergence>,
    /// Actions without a result entry (the session ended mid-action).
    pub incomplete: Vec<u64>,
}

impl ReplayReport {
    pub fn matches(&self) -> bool {
        self.divergences.is_empty() && self.recorded_digest == self.replayed_digest
    }
}

struct Replayer {
    board: Arc<Blackboard>,
    computed: Vec<ComputedFeature>,
    results: HashMap<u64, LogEntry>,
    divergences: Vec<Divergence>,
    incomplete: Vec<u64>,
}

impl Replayer {
    fn check(&mut self, seq: u64, expected: &str, actual: String) {
        if expected != actual {
            self.divergences.push(Divergence {
                seq,
                expected: expected.to_string(),
                actual,
            });
        }
    }

    fn action(&mut self, entry: &LogEntry) {
        let LogBody::Action { action } = &entry.body else {
            return;
        };
        if !action.is_board_action() {
            return;
        }
        let Some(result) = self.results.get(&entry.seq).cloned() else {
            self.incomplete.push(entry.seq);
            return;
        };
        let computed = &mut self.computed;
        let (ok, digest) = self.board.transact(|t| {
            let ok = feedback::apply(t, action, computed).is_ok();
            (ok, t.digest())
        });
        if let LogBody::Result {
            ok: was_ok,
            digest: expected,
            ..
        } = &result.body
        {
            if *was_ok != ok {
                self.check(entry.seq, &format!("ok={was_ok}"), format!("ok={ok}"));
            }
            self.check(result.seq, expected, digest);
        }
    }

    fn insert(&mut self, entry: &LogEntry, ruleset: &str) {
        let out = RuleSet::parse(ruleset, self.board.data().features())
            .map_err(BoardError::from)
            .and_then(|rs| self.board.transact(|t| t.offer(&rs)));
        if !matches!(out, Ok(AddOutcome::Added)) {
            self.divergences.push(Divergence {
                seq: entry.seq,
                expected: "added".into(),
                actual: match out {
                    Ok(o) => format!("{o:?}").to_lowercase(),
                    Err(err) => err.to_string(),
                },
            });
        }
    }
}

/// Re-executes a log against `data`.
pub fn replay(
    header: &LogHeader,
    entries: &[LogEntry],
    data: Dataset,
) -> Result<ReplayReport, PersistError> {
    if header.magic != FORMAT_MAGIC {
        return Err(PersistError::Version(header.magic.clone()));
    }
    if dataset_digest(&data) != header.data_digest {
        return Err(PersistError::DataMismatch);
    }
    let mode = if entries
        .iter()
        .any(|e| matches!(e.body, LogBody::AgentStart { agents, .. } if agents > 1))
    {
        ReplayMode::SupersetCheck
    } else {
        ReplayMode::Exact
    };
    let board = Arc::new(Blackboard::with_config(data, header.board.clone()));
    let r = Arc::new(Mutex::new(Replayer {
        board: board.clone(),
        computed: Vec::new(),
        results: entries
            .iter()
            .filter_map(|e| match e.body {
                LogBody::Result { of, .. } => Some((of, e.clone())),
                _ => None,
            })
            .collect(),
        divergences: Vec::new(),
        incomplete: Vec::new(),
    }));

    let mut i = 0;
    while i < entries.len() {
        let e = &entries[i];
        match (&e.body, mode) {
            (LogBody::Action { .. }, _) => r.lock().action(e),
            (LogBody::Insert { ruleset }, ReplayMode::SupersetCheck) => r.lock().insert(e, ruleset),
            (LogBody::AgentStop { digest, .. }, ReplayMode::SupersetCheck) => {
                r.lock().check(e.seq, digest, board.digest());
            }
            (
                LogBody::AgentStart {
                    agent, seed, config, ..
                },
                ReplayMode::Exact,
            ) => {
                let stop = entries[i + 1..]
                    .iter()
                    .position(|s| matches!(s.body, LogBody::AgentStop { agent: a, .. } if a == *agent))
                    .map(|p| p + i + 1)
                    .ok_or_else(|| PersistError::Corrupt {
                        line: i + 2,
                        message: format!("agent {agent} never stopped"),
                    })?;
                let LogBody::AgentStop {
                    iterations, digest, ..
                } = &entries[stop].body
                else {
                    unreachable!("position matched an agent stop")
                };
                let pending: VecDeque<LogEntry> = entries[i + 1..stop]
                    .iter()
                    .filter(|x| matches!(&x.body, LogBody::Action { .. }))
                    .cloned()
                    .collect();
                run_segment(&r, config, *seed, *iterations, pending);
                r.lock().check(entries[stop].seq, digest, board.digest());
                // skip to the stop entry; the actions in between were applied
                i = stop;
            }
            _ => {}
        }
        i += 1;
    }

    let recorded_digest = entries
        .iter()
        .rev()
        .find_map(|e| match &e.body {
            LogBody::Result { digest, .. } | LogBody::AgentStop { digest, .. } => {
                Some(digest.clone())
            }
            _ => None,
        })
        .unwrap_or_else(|| digest_of([]));
    let r = r.lock();
    Ok(ReplayReport {
        mode,
        recorded_digest,
        replayed_digest: board.digest(),
        divergences: r.divergences.clone(),
        incomplete: r.incomplete.clone(),
    })
}

/// Runs one agent for `iterations` steps, applying each pending user action
/// right before the first agent lock acquisition after its logged clock.
fn run_segment(
    r: &Arc<Mutex<Replayer>>,
    config: &AgentConfig,
    seed: u64,
    iterations: u64,
    pending: VecDeque<LogEntry>,
) {
    let queue = Arc::new(Mutex::new(pending));
    let board = r.lock().board.clone();
    let (q, rr) = (queue.clone(), r.clone());
    board.set_tick_hook(Some(Arc::new(move |clock: u64| loop {
        let next = {
            let mut q = q.lock();
            match q.front() {
                Some(e) if e.clock <= clock => q.pop_front(),
                _ => None,
            }
        };
        match next {
            Some(e) => rr.lock().action(&e),
            None => break,
        }
    })));
    let mut agent = Agent::new(AgentConfig {
        seed,
        max_iterations: None,
        ..config.clone()
    });
    for _ in 0..iterations {
        agent.step(&board, None);
    }
    board.set_tick_hook(None);
    let rest: Vec<LogEntry> = queue.lock().drain(..).collect();
    for e in rest {
        r.lock().action(&e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_causes() {
        let text = "id,lang,size,causes\nI1,java,10,C1\nI2,java,3,C1;C2\nI3,c,3,C2\nI4,python,6,C2\nI5,java,9,\n";
        let d = read_dataset(text.as_bytes(), None).unwrap();
        assert_eq!(d.cause_count(), 2);
        assert_eq!(d.features()[1].kind, FeatureKind::Numeric);
        assert!(!d.is_positive(4));
    }

    #[test]
    fn csv_label_and_inference() {
        let text = "id,x,label\na,1,T\nb,2,T\nc,x,T\nd,2,F\n";
        let d = read_dataset(text.as_bytes(), None).unwrap();
        assert_eq!(d.cause_count(), 3);
        assert_eq!(d.causes()[0], "c:a");
        assert_eq!(d.features()[0].kind, FeatureKind::Nominal);
        let schema = Schema::from([("x".to_string(), FeatureKind::Nominal)]);
        let d = read_dataset("id,x\na,1\n".as_bytes(), Some(&schema)).unwrap();
        assert_eq!(d.features()[0].kind, FeatureKind::Nominal);
    }

    #[test]
    fn csv_errors() {
        assert!(read_dataset("x\n1\n".as_bytes(), None).is_err());
        assert!(read_dataset("id,x\na,1\na,2\n".as_bytes(), None).is_err());
        assert!(read_dataset("id,x\na,\n".as_bytes(), None).is_err());
        let schema = Schema::from([("x".to_string(), FeatureKind::Numeric)]);
        assert!(read_dataset("id,x\na,q\n".as_bytes(), Some(&schema)).is_err());
    }

    #[test]
    fn empty_log_replays_to_empty_front() {
        let d = crate::fixtures::fig1();
        let header = LogHeader::new(&d, &BoardConfig::default());
        let rep = replay(&header, &[], d).unwrap();
        assert!(rep.matches());
        assert_eq!(rep.replayed_digest, digest_of([]));
    }
}
