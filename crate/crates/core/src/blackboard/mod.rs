//! Shared state between agents and the user: the Pareto front, the local
//! search and path relinking queues, restrictions, the target function and
//! the current dataset.
//!
//! Agents go through [`Blackboard::agent`], which ticks a logical clock on
//! every lock acquisition. User actions run through [`Blackboard::transact`]
//! under a single write lock and can read the clock to log when they happened.

mod restrictions;
mod snapshot;
mod trim;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{evaluate, EvalError, Evaluation, ObjectiveVector, Objectives, TargetFunction};
use crate::model::{Dataset, ModelError, Rule, RuleList, RuleSet};

pub use restrictions::{
    Pattern, PatternElement, Restriction, RestrictionKind, RestrictionSpec, RestrictionStore,
    RuleSpaceLimits,
};
pub use snapshot::{BoardState, SavedEntry, SavedRestriction, SavedUndo, SavedUndoKind};
pub use trim::{fingerprints, hamming, k_medoids, sample_rows};

pub type TickHook = Arc<dyn Fn(u64) + Send + Sync>;
pub type InsertListener = Arc<dyn Fn(&RuleSet, &Evaluation) + Send + Sync>;

const EVAL_CACHE_LIMIT: usize = 200_000;

#[derive(Debug, Error)]
pub enum BoardError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("unknown action {0}")]
    UnknownAction(u64),
    #[error("rule `{0}` is not part of any front entry")]
    UnknownRule(String),
    #[error("unknown front entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AddOutcome {
    Added,
    Dominated,
    /// Already on the front.
    Present,
    Forbidden,
    /// The dataset or restrictions changed while the candidate was evaluated.
    Stale,
    Invalid,
}

/// Optional upper bound per objective dimension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<Option<f64>>);

impl Bounds {
    pub fn none() -> Self {
        Bounds(Vec::new())
    }

    pub fn contains(&self, v: &ObjectiveVector) -> bool {
        self.0
            .iter()
            .zip(v.dims())
            .all(|(b, x)| b.is_none_or(|u| *x <= u))
    }

    pub fn validate(&self, dims: usize) -> Result<(), BoardError> {
        if self.0.len() > dims {
            return Err(BoardError::InvalidArgument(format!(
                "{} bounds for {dims} objectives",
                self.0.len()
            )));
        }
        if self.0.iter().flatten().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(BoardError::InvalidArgument(
                "bounds must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Short stable id of a ruleset: the first 16 hex digits of the SHA-256 of
/// its canonical text.
pub fn entry_id(rs: &RuleSet) -> String {
    let h = Sha256::digest(rs.canonicalize().to_string().as_bytes());
    hex::encode(h)[..16].to_string()
}

/// SHA-256 over the sorted canonical texts joined by newlines.
pub fn digest_of<'a>(rulesets: impl IntoIterator<Item = &'a RuleSet>) -> String {
    let mut texts: Vec<String> = rulesets.into_iter().map(|r| r.to_string()).collect();
    texts.sort();
    hex::encode(Sha256::digest(texts.join("\n").as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontEntry {
    pub id: String,
    pub ruleset: RuleSet,
    pub evaluation: Evaluation,
}

impl FrontEntry {
    fn new(rs: &RuleSet, ev: &Evaluation) -> Self {
        FrontEntry {
            id: entry_id(rs),
            ruleset: rs.clone(),
            evaluation: ev.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QueueKind {
    LocalSearch,
    PathRelink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RestrictOutcome {
    pub id: u64,
    pub affected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UndoOutcome {
    pub id: u64,
    pub restored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrimOutcome {
    pub id: Option<u64>,
    pub removed: usize,
}

#[derive(Debug, Clone)]
enum UndoKind {
    Restriction,
    Trim,
}

#[derive(Debug, Clone)]
struct UndoRecord {
    id: u64,
    kind: UndoKind,
    /// Entries removed (or replaced) by the action, re-offered on undo.
    removed: Vec<RuleSet>,
}

/// Immutable configuration of a board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BoardConfig {
    pub objectives: Objectives,
    pub queue_capacity: usize,
    pub limits: RuleSpaceLimits,
}

impl Default for BoardConfig {
    fn default() -> Self {
        BoardConfig {
            objectives: Objectives::default(),
            queue_capacity: 1024,
            limits: RuleSpaceLimits::default(),
        }
    }
}

/// A consistent copy of what agents need to work without holding a lock.
#[derive(Clone)]
pub struct BoardView {
    pub data: Arc<Dataset>,
    pub data_version: u64,
    pub restrictions: Arc<RestrictionStore>,
    pub restrictions_version: u64,
    pub target: TargetFunction,
    pub bounds: Bounds,
}

struct State {
    data: Arc<Dataset>,
    data_version: u64,
    front: BTreeMap<RuleSet, Evaluation>,
    ls_queue: VecDeque<RuleSet>,
    pr_queue: VecDeque<RuleSet>,
    restrictions: Arc<RestrictionStore>,
    restrictions_version: u64,
    target: TargetFunction,
    bounds: Bounds,
    undo: Vec<UndoRecord>,
    next_id: u64,
    visited: BTreeSet<Rule>,
}

pub(crate) fn insert_front(
    front: &mut BTreeMap<RuleSet, Evaluation>,
    rs: RuleSet,
    ev: Evaluation,
) -> AddOutcome {
    if front.contains_key(&rs) {
        return AddOutcome::Present;
    }
    if front.values().any(|e| e.objectives.dominates(&ev.objectives)) {
        return AddOutcome::Dominated;
    }
    front.retain(|_, e| !ev.objectives.dominates(&e.objectives));
    front.insert(rs, ev);
    AddOutcome::Added
}

fn purge(queue: &mut VecDeque<RuleSet>, restrictions: &RestrictionStore) {
    queue.retain(|rs| restrictions.first_forbidden(rs).is_none());
}

fn push_bounded(queue: &mut VecDeque<RuleSet>, cap: usize, rs: RuleSet, urgent: bool) {
    if urgent {
        queue.push_front(rs);
        if queue.len() > cap {
            // the oldest item other than the one just pushed
            queue.remove(1);
        }
    } else {
        queue.push_back(rs);
        if queue.len() > cap {
            queue.pop_front();
        }
    }
}

impl State {
    fn view(&self) -> BoardView {
        BoardView {
            data: self.data.clone(),
            data_version: self.data_version,
            restrictions: self.restrictions.clone(),
            restrictions_version: self.restrictions_version,
            target: self.target.clone(),
            bounds: self.bounds.clone(),
        }
    }

    fn sort_key(&self, tf: &TargetFunction, rs: &RuleSet, ev: &Evaluation) -> (f64, usize, String) {
        (tf.apply(ev), ev.result.complexity(), rs.to_string())
    }

    fn best(&self, tf: &TargetFunction, bounds: &Bounds) -> Option<(&RuleSet, &Evaluation)> {
        let pick = |within: bool| {
            self.front
                .iter()
                .filter(|(_, ev)| !within || bounds.contains(&ev.objectives))
                .map(|(rs, ev)| (self.sort_key(tf, rs, ev), rs, ev))
                .min_by(|a, b| {
                    a.0 .0
                        .total_cmp(&b.0 .0)
                        .then(a.0 .1.cmp(&b.0 .1))
                        .then_with(|| a.0 .2.cmp(&b.0 .2))
                })
                .map(|(_, rs, ev)| (rs, ev))
        };
        pick(true)
    }

    fn in_bounds(&self) -> Vec<(&RuleSet, &Evaluation)> {
        let inside: Vec<_> = self
            .front
            .iter()
            .filter(|(_, ev)| self.bounds.contains(&ev.objectives))
            .collect();
        if inside.is_empty() {
            self.front.iter().collect()
        } else {
            inside
        }
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> RuleSet {
        let pool = self.in_bounds();
        if pool.is_empty() {
            return RuleSet::empty();
        }
        pool[rng.random_range(0..pool.len())].0.clone()
    }

    /// Entry minimizing one dimension; ties by target value then canonical text.
    fn best_in_dim(&self, dim: usize) -> Option<(&RuleSet, &Evaluation)> {
        self.front.iter().min_by(|a, b| {
            a.1.objectives.0[dim]
                .total_cmp(&b.1.objectives.0[dim])
                .then(self.target.apply(a.1).total_cmp(&self.target.apply(b.1)))
                .then_with(|| a.0.to_string().cmp(&b.0.to_string()))
        })
    }

    fn entries(&self) -> Vec<FrontEntry> {
        self.front.iter().map(|(rs, ev)| FrontEntry::new(rs, ev)).collect()
    }

    fn find_id(&self, id: &str) -> Option<(&RuleSet, &Evaluation)> {
        self.front.iter().find(|(rs, _)| entry_id(rs) == id)
    }
}

#[derive(Default)]
struct EvalCache {
    version: u64,
    map: HashMap<RuleSet, Evaluation>,
}

pub struct Blackboard {
    state: RwLock<State>,
    cache: Mutex<EvalCache>,
    clock: AtomicU64,
    hook: RwLock<Option<TickHook>>,
    listener: RwLock<Option<InsertListener>>,
    config: BoardConfig,
}

impl Blackboard {
    pub fn new(data: Dataset) -> Self {
        Self::with_config(data, BoardConfig::default())
    }

    pub fn with_config(data: Dataset, config: BoardConfig) -> Self {
        Blackboard {
            state: RwLock::new(State {
                data: Arc::new(data),
                data_version: 0,
                front: BTreeMap::new(),
                ls_queue: VecDeque::new(),
                pr_queue: VecDeque::new(),
                restrictions: Arc::new(RestrictionStore::with_limits(config.limits)),
                restrictions_version: 0,
                target: TargetFunction::default(),
                bounds: Bounds::none(),
                undo: Vec::new(),
                next_id: 1,
                visited: BTreeSet::new(),
            }),
            cache: Mutex::new(EvalCache::default()),
            clock: AtomicU64::new(0),
            hook: RwLock::new(None),
            listener: RwLock::new(None),
            config,
        }
    }

    pub fn objectives(&self) -> &Objectives {
        &self.config.objectives
    }

    pub fn config(&self) -> &BoardConfig {
        &self.config
    }

    /// Number of agent lock acquisitions so far.
    pub fn clock(&self) -> u64 {
        self.clock.load(Ordering::SeqCst)
    }

    /// Called with the current clock before every agent lock acquisition.
    pub fn set_tick_hook(&self, hook: Option<TickHook>) {
        *self.hook.write() = hook;
    }

    /// Called under the write lock whenever an agent adds a front entry.
    pub fn set_insert_listener(&self, listener: Option<InsertListener>) {
        *self.listener.write() = listener;
    }

    fn before_tick(&self) {
        let hook = self.hook.read().clone();
        if let Some(h) = hook {
            h(self.clock());
        }
    }

    fn agent_read(&self) -> RwLockReadGuard<'_, State> {
        self.before_tick();
        let g = self.state.read();
        self.clock.fetch_add(1, Ordering::SeqCst);
        g
    }

    fn agent_write(&self) -> RwLockWriteGuard<'_, State> {
        self.before_tick();
        let g = self.state.write();
        self.clock.fetch_add(1, Ordering::SeqCst);
        g
    }

    /// Evaluates against a view's dataset, memoized per dataset version.
    pub fn evaluate_in(&self, view: &BoardView, rs: &RuleSet) -> Result<Evaluation, ModelError> {
        self.evaluate_with(&view.data, view.data_version, rs)
    }

    fn evaluate_with(
        &self,
        data: &Dataset,
        version: u64,
        rs: &RuleSet,
    ) -> Result<Evaluation, ModelError> {
        let key = rs.canonicalize();
        {
            let cache = self.cache.lock();
            if cache.version == version {
                if let Some(ev) = cache.map.get(&key) {
                    return Ok(ev.clone());
                }
            }
        }
        let ev = Evaluation::new(evaluate(&key, data)?, &self.config.objectives);
        let mut cache = self.cache.lock();
        if cache.version != version {
            if version < cache.version {
                return Ok(ev);
            }
            cache.version = version;
            cache.map.clear();
        }
        if cache.map.len() >= EVAL_CACHE_LIMIT {
            cache.map.clear();
        }
        cache.map.insert(key, ev.clone());
        Ok(ev)
    }

    fn agent_offer(&self, view: &BoardView, rs: &RuleSet) -> AddOutcome {
        let completed = view.restrictions.complete(rs);
        if !view.restrictions.allows(&completed) {
            return AddOutcome::Forbidden;
        }
        let ev = match self.evaluate_in(view, &completed) {
            Ok(ev) => ev,
            Err(_) => return AddOutcome::Invalid,
        };
        let mut st = self.agent_write();
        if st.data_version != view.data_version
            || st.restrictions_version != view.restrictions_version
        {
            return AddOutcome::Stale;
        }
        let out = insert_front(&mut st.front, completed.clone(), ev.clone());
        if out == AddOutcome::Added {
            if let Some(l) = self.listener.read().clone() {
                l(&completed, &ev);
            }
        }
        out
    }

    /// The agent-facing handle; every lock it takes ticks the clock.
    pub fn agent(&self) -> AgentPort<'_> {
        AgentPort { board: self }
    }

    /// Runs `f` under the write lock. User actions go through here.
    pub fn transact<R>(&self, f: impl FnOnce(&mut Txn<'_>) -> R) -> R {
        let mut st = self.state.write();
        let mut txn = Txn {
            board: self,
            st: &mut st,
        };
        f(&mut txn)
    }

    // --- read-only queries (no clock tick) ---

    pub fn view(&self) -> BoardView {
        self.state.read().view()
    }

    pub fn data(&self) -> Arc<Dataset> {
        self.state.read().data.clone()
    }

    pub fn data_version(&self) -> u64 {
        self.state.read().data_version
    }

    pub fn entries(&self) -> Vec<FrontEntry> {
        self.state.read().entries()
    }

    pub fn rulesets(&self) -> Vec<RuleSet> {
        self.state.read().front.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.state.read().front.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn digest(&self) -> String {
        digest_of(self.state.read().front.keys())
    }

    pub fn target(&self) -> TargetFunction {
        self.state.read().target.clone()
    }

    pub fn bounds(&self) -> Bounds {
        self.state.read().bounds.clone()
    }

    pub fn restrictions(&self) -> Arc<RestrictionStore> {
        self.state.read().restrictions.clone()
    }

    pub fn visited(&self) -> BTreeSet<Rule> {
        self.state.read().visited.clone()
    }

    pub fn queue(&self, which: QueueKind) -> Vec<RuleSet> {
        let st = self.state.read();
        match which {
            QueueKind::LocalSearch => st.ls_queue.iter().cloned().collect(),
            QueueKind::PathRelink => st.pr_queue.iter().cloned().collect(),
        }
    }

    pub fn entry(&self, id: &str) -> Option<FrontEntry> {
        let st = self.state.read();
        st.find_id(id).map(|(rs, ev)| FrontEntry::new(rs, ev))
    }

    /// Best entry under a target function within bounds (ties: lower
    /// complexity, then canonical text). `None` if nothing is within bounds.
    pub fn best(&self, tf: &TargetFunction, bounds: &Bounds) -> Option<FrontEntry> {
        let st = self.state.read();
        st.best(tf, bounds).map(|(rs, ev)| FrontEntry::new(rs, ev))
    }

    pub fn best_in_dim(&self, dim: usize) -> Result<Option<FrontEntry>, BoardError> {
        if dim >= self.config.objectives.len() {
            return Err(BoardError::InvalidArgument(format!("no dimension {dim}")));
        }
        let st = self.state.read();
        Ok(st.best_in_dim(dim).map(|(rs, ev)| FrontEntry::new(rs, ev)))
    }

    /// Neighbor of entry `from` along `dim` among in-bounds entries. The flag
    /// is true when `from` is already at the boundary (the entry itself is
    /// returned).
    pub fn navigate(
        &self,
        from: &str,
        dim: usize,
        dir: Direction,
    ) -> Result<(FrontEntry, bool), BoardError> {
        if dim >= self.config.objectives.len() {
            return Err(BoardError::InvalidArgument(format!("no dimension {dim}")));
        }
        let st = self.state.read();
        let (start, _) = st
            .find_id(from)
            .ok_or_else(|| BoardError::UnknownEntry(from.to_string()))?;
        let mut pool: Vec<(&RuleSet, &Evaluation)> = st
            .front
            .iter()
            .filter(|(rs, ev)| *rs == start || st.bounds.contains(&ev.objectives))
            .collect();
        pool.sort_by(|a, b| {
            a.1.objectives.0[dim]
                .total_cmp(&b.1.objectives.0[dim])
                .then(st.target.apply(a.1).total_cmp(&st.target.apply(b.1)))
                .then_with(|| a.0.to_string().cmp(&b.0.to_string()))
        });
        let pos = pool.iter().position(|(rs, _)| *rs == start).expect("present");
        let next = match dir {
            Direction::Up => pos.checked_add(1).filter(|&p| p < pool.len()),
            Direction::Down => pos.checked_sub(1),
        };
        Ok(match next {
            Some(p) => (FrontEntry::new(pool[p].0, pool[p].1), false),
            None => (FrontEntry::new(pool[pos].0, pool[pos].1), true),
        })
    }

    // --- user conveniences, each one transaction ---

    pub fn offer(&self, rs: &RuleSet) -> Result<AddOutcome, BoardError> {
        self.transact(|t| t.offer(rs))
    }

    pub fn evaluate(&self, rs: &RuleSet) -> Result<Evaluation, ModelError> {
        let v = self.view();
        self.evaluate_in(&v, rs)
    }
}

/// Agent-side operations. Each call acquires the lock once, except `offer`
/// which reads once and writes once.
pub struct AgentPort<'a> {
    board: &'a Blackboard,
}

impl<'a> AgentPort<'a> {
    pub fn board(&self) -> &'a Blackboard {
        self.board
    }

    pub fn view(&self) -> BoardView {
        self.board.agent_read().view()
    }

    pub fn offer(&self, rs: &RuleSet) -> AddOutcome {
        let view = self.view();
        self.board.agent_offer(&view, rs)
    }

    /// Offer reusing a view taken earlier; a single lock acquisition.
    pub fn offer_in(&self, view: &BoardView, rs: &RuleSet) -> AddOutcome {
        self.board.agent_offer(view, rs)
    }

    /// Best entry under the board's current target and bounds (falling back
    /// to the unbounded best, then to the empty ruleset).
    pub fn best(&self) -> RuleSet {
        let st = self.board.agent_read();
        st.best(&st.target, &st.bounds)
            .or_else(|| st.best(&st.target, &Bounds::none()))
            .map(|(rs, _)| rs.clone())
            .unwrap_or_default()
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> RuleSet {
        self.board.agent_read().random(rng)
    }

    pub fn pop(&self, which: QueueKind) -> Option<RuleSet> {
        let mut st = self.board.agent_write();
        match which {
            QueueKind::LocalSearch => st.ls_queue.pop_front(),
            QueueKind::PathRelink => st.pr_queue.pop_front(),
        }
    }

    pub fn push(&self, which: QueueKind, rs: RuleSet) {
        let cap = self.board.config.queue_capacity;
        let mut st = self.board.agent_write();
        match which {
            QueueKind::LocalSearch => push_bounded(&mut st.ls_queue, cap, rs, false),
            QueueKind::PathRelink => push_bounded(&mut st.pr_queue, cap, rs, false),
        }
    }
}

/// What local search and path relinking need from their surroundings.
pub trait SearchContext {
    fn data(&self) -> &Dataset;
    fn restrictions(&self) -> &RestrictionStore;
    fn evaluate(&self, rs: &RuleSet) -> Option<Evaluation>;
    /// Offers a candidate to the global front.
    fn offer(&self, rs: &RuleSet) -> AddOutcome;
}

/// Agent context: a view snapshot plus the ticking port for offers.
pub struct BoardContext<'a> {
    port: AgentPort<'a>,
    view: BoardView,
}

impl<'a> BoardContext<'a> {
    pub fn new(port: AgentPort<'a>, view: BoardView) -> Self {
        BoardContext { port, view }
    }

    pub fn view(&self) -> &BoardView {
        &self.view
    }
}

impl SearchContext for BoardContext<'_> {
    fn data(&self) -> &Dataset {
        &self.view.data
    }

    fn restrictions(&self) -> &RestrictionStore {
        &self.view.restrictions
    }

    fn evaluate(&self, rs: &RuleSet) -> Option<Evaluation> {
        self.port.board.evaluate_in(&self.view, rs).ok()
    }

    fn offer(&self, rs: &RuleSet) -> AddOutcome {
        self.port.offer_in(&self.view, rs)
    }
}

/// A user transaction holding the write lock.
pub struct Txn<'a> {
    board: &'a Blackboard,
    st: &'a mut State,
}

impl Txn<'_> {
    pub fn clock(&self) -> u64 {
        self.board.clock()
    }

    pub fn data(&self) -> Arc<Dataset> {
        self.st.data.clone()
    }

    pub fn restrictions(&self) -> Arc<RestrictionStore> {
        self.st.restrictions.clone()
    }

    pub fn digest(&self) -> String {
        digest_of(self.st.front.keys())
    }

    pub fn rulesets(&self) -> Vec<RuleSet> {
        self.st.front.keys().cloned().collect()
    }

    pub fn entries(&self) -> Vec<FrontEntry> {
        self.st.entries()
    }

    pub fn target(&self) -> TargetFunction {
        self.st.target.clone()
    }

    pub fn bounds(&self) -> Bounds {
        self.st.bounds.clone()
    }

    fn eval(&self, rs: &RuleSet) -> Result<Evaluation, ModelError> {
        self.board
            .evaluate_with(&self.st.data, self.st.data_version, rs)
    }

    pub fn evaluate(&self, rs: &RuleSet) -> Result<Evaluation, ModelError> {
        self.eval(rs)
    }

    /// Validates, completes with accepted rules and offers to the front.
    pub fn offer(&mut self, rs: &RuleSet) -> Result<AddOutcome, BoardError> {
        self.st.data.validate_ruleset(rs)?;
        let completed = self.st.restrictions.complete(rs);
        if self.st.restrictions.first_forbidden(&completed).is_some()
            || !self.st.restrictions.allows(&completed)
        {
            return Ok(AddOutcome::Forbidden);
        }
        let ev = self.eval(&completed)?;
        Ok(insert_front(&mut self.st.front, completed, ev))
    }

    /// Offer a user ruleset and put it at the head of the local search queue.
    pub fn submit(&mut self, rs: &RuleSet) -> Result<AddOutcome, BoardError> {
        self.st.data.validate_ruleset(rs)?;
        if let Some((rule, id)) = self.st.restrictions.first_forbidden(rs) {
            return Err(BoardError::Conflict(format!(
                "rule {rule} is forbidden by restriction {id}"
            )));
        }
        let out = self.offer(rs)?;
        let completed = self.st.restrictions.complete(rs);
        let cap = self.board.config.queue_capacity;
        push_bounded(&mut self.st.ls_queue, cap, completed, true);
        Ok(out)
    }

    pub fn push(&mut self, which: QueueKind, rs: RuleSet, urgent: bool) {
        let cap = self.board.config.queue_capacity;
        let q = match which {
            QueueKind::LocalSearch => &mut self.st.ls_queue,
            QueueKind::PathRelink => &mut self.st.pr_queue,
        };
        push_bounded(q, cap, rs, urgent);
    }

    pub fn set_target(&mut self, tf: TargetFunction) -> Result<(), BoardError> {
        tf.validate(self.board.config.objectives.len())?;
        self.st.target = tf;
        Ok(())
    }

    pub fn set_bounds(&mut self, bounds: Bounds) -> Result<(), BoardError> {
        bounds.validate(self.board.config.objectives.len())?;
        self.st.bounds = bounds;
        Ok(())
    }

    pub fn set_visited(&mut self, rule: &Rule, visited: bool) -> Result<(), BoardError> {
        if !self
            .st
            .front
            .keys()
            .any(|rs| rs.rules().any(|(_, r)| r == rule))
        {
            return Err(BoardError::UnknownRule(rule.to_string()));
        }
        if visited {
            self.st.visited.insert(rule.clone());
        } else {
            self.st.visited.remove(rule);
        }
        Ok(())
    }

    fn next_id(&mut self) -> u64 {
        let id = self.st.next_id;
        self.st.next_id += 1;
        id
    }

    /// Rebuilds the front from `(ruleset)` candidates under the current data.
    fn rebuild(&mut self, rulesets: Vec<RuleSet>) -> Result<(), BoardError> {
        let mut front = BTreeMap::new();
        for rs in rulesets {
            let ev = self.eval(&rs)?;
            insert_front(&mut front, rs, ev);
        }
        self.st.front = front;
        Ok(())
    }

    pub fn restrict(&mut self, kind: RestrictionKind) -> Result<RestrictOutcome, BoardError> {
        let schema = self.st.data.features().to_vec();
        match &kind {
            RestrictionKind::RejectRule(r) | RestrictionKind::AcceptRule(r) => r.validate(&schema)?,
            RestrictionKind::RejectPattern(_) => {}
        }
        match &kind {
            RestrictionKind::RejectRule(r) if self.st.restrictions.is_accepted(r) => {
                return Err(BoardError::Conflict(format!("rule {r} is accepted")));
            }
            RestrictionKind::AcceptRule(r) => {
                if let Some(id) = self.st.restrictions.forbidding(r) {
                    return Err(BoardError::Conflict(format!(
                        "rule {r} is forbidden by restriction {id}"
                    )));
                }
            }
            _ => {}
        }
        let id = self.next_id();
        let accept = match &kind {
            RestrictionKind::AcceptRule(r) => Some(r.clone()),
            _ => None,
        };
        Arc::make_mut(&mut self.st.restrictions).items.push(Restriction {
            id,
            kind,
            active: true,
        });
        self.st.restrictions_version += 1;
        let (removed, affected) = match accept {
            None => {
                let store = self.st.restrictions.clone();
                let removed: Vec<RuleSet> = self
                    .st
                    .front
                    .keys()
                    .filter(|rs| store.first_forbidden(rs).is_some())
                    .cloned()
                    .collect();
                for rs in &removed {
                    self.st.front.remove(rs);
                }
                purge(&mut self.st.ls_queue, &store);
                purge(&mut self.st.pr_queue, &store);
                let n = removed.len();
                (removed, n)
            }
            Some(rule) => {
                let before: Vec<RuleSet> = self.st.front.keys().cloned().collect();
                let affected = before
                    .iter()
                    .filter(|rs| !rs.contains(RuleList::Inclusion, &rule))
                    .count();
                let updated = before
                    .iter()
                    .map(|rs| rs.with_rule(RuleList::Inclusion, rule.clone()))
                    .collect();
                self.rebuild(updated)?;
                (before, affected)
            }
        };
        self.st.undo.push(UndoRecord {
            id,
            kind: UndoKind::Restriction,
            removed,
        });
        Ok(RestrictOutcome { id, affected })
    }

    /// Undoes the last undoable action, or the one with the given id.
    pub fn undo(&mut self, id: Option<u64>) -> Result<UndoOutcome, BoardError> {
        let idx = match id {
            None => self
                .st
                .undo
                .len()
                .checked_sub(1)
                .ok_or(BoardError::NothingToUndo)?,
            Some(id) => self
                .st
                .undo
                .iter()
                .position(|u| u.id == id)
                .ok_or(BoardError::UnknownAction(id))?,
        };
        let record = self.st.undo.remove(idx);
        if let UndoKind::Restriction = record.kind {
            let store = Arc::make_mut(&mut self.st.restrictions);
            if let Some(r) = store.items.iter_mut().find(|r| r.id == record.id) {
                r.active = false;
            }
            self.st.restrictions_version += 1;
        }
        let mut restored = 0;
        for rs in &record.removed {
            if self.st.data.validate_ruleset(rs).is_err() {
                continue;
            }
            if self.offer(rs)? == AddOutcome::Added {
                restored += 1;
            }
        }
        Ok(UndoOutcome {
            id: record.id,
            restored,
        })
    }

    /// Shrinks the front to `keep` entries by k-medoids over match
    /// fingerprints. The target optimum and per-dimension minima are kept.
    pub fn trim(&mut self, keep: usize, sample: usize, seed: u64) -> Result<TrimOutcome, BoardError> {
        if keep == 0 {
            return Err(BoardError::InvalidArgument("keep must be positive".into()));
        }
        if sample == 0 {
            return Err(BoardError::InvalidArgument("sample must be positive".into()));
        }
        if keep >= self.st.front.len() {
            return Ok(TrimOutcome {
                id: None,
                removed: 0,
            });
        }
        let all: Vec<RuleSet> = self.st.front.keys().cloned().collect();
        let mut protected: Vec<RuleSet> = Vec::new();
        let tf = self.st.target.clone();
        let best = self
            .st
            .best(&tf, &self.st.bounds)
            .or_else(|| self.st.best(&tf, &Bounds::none()))
            .map(|(rs, _)| rs.clone());
        protected.extend(best);
        for d in 0..self.board.config.objectives.len() {
            if let Some((rs, _)) = self.st.best_in_dim(d) {
                if !protected.contains(rs) {
                    protected.push(rs.clone());
                }
            }
        }
        let fixed: Vec<usize> = protected
            .iter()
            .filter_map(|p| all.iter().position(|rs| rs == p))
            .collect();
        let rows = sample_rows(self.st.data.len(), sample, seed);
        let fps = fingerprints(&self.st.data, &all, &rows)?;
        let dist: Vec<Vec<u32>> = fps
            .iter()
            .map(|a| fps.iter().map(|b| hamming(a, b)).collect())
            .collect();
        let medoids = k_medoids(&dist, keep, &fixed);
        let removed: Vec<RuleSet> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| !medoids.contains(i))
            .map(|(_, rs)| rs.clone())
            .collect();
        for rs in &removed {
            self.st.front.remove(rs);
        }
        let id = self.next_id();
        let n = removed.len();
        self.st.undo.push(UndoRecord {
            id,
            kind: UndoKind::Trim,
            removed,
        });
        Ok(TrimOutcome {
            id: Some(id),
            removed: n,
        })
    }

    /// Swaps in a new dataset (same or extended schema) and re-evaluates the
    /// front. Entries that become dominated are dropped.
    pub fn replace_data(&mut self, data: Dataset) -> Result<(), BoardError> {
        for rs in self.st.front.keys() {
            data.validate_ruleset(rs)?;
        }
        self.st.data = Arc::new(data);
        self.st.data_version += 1;
        let all: Vec<RuleSet> = self.st.front.keys().cloned().collect();
        self.rebuild(all)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> RuleSet {
        self.st.random(rng)
    }
}
