//! The mining agent loop: work off the queues, otherwise perfect existing
//! results or generate new material.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blackboard::{Blackboard, BoardContext, QueueKind};
use crate::generate::{generate_ruleset, GenerationConfig};
use crate::localsearch::{combine_rulesets, local_search, LocalSearchConfig};
use crate::model::RuleSet;
use crate::pathrelink::path_relink;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AgentConfig {
    pub id: usize,
    pub seed: u64,
    /// Probabilities of relinking best/random, local search on a random
    /// entry, and generation when both queues are empty.
    pub pick_probabilities: [f64; 3],
    pub iteration_cap: usize,
    pub max_iterations: Option<u64>,
    pub generation: GenerationConfig,
    pub local_search: LocalSearchConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            id: 0,
            seed: 0,
            pick_probabilities: [0.3, 0.3, 0.4],
            iteration_cap: 30,
            max_iterations: None,
            generation: GenerationConfig::default(),
            local_search: LocalSearchConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let p = self.pick_probabilities;
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err("pick probabilities must be in [0,1] and sum to 1".into());
        }
        self.generation.validate()
    }
}

/// Which part of the loop an iteration ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Step {
    LocalSearchQueue,
    PathRelinkQueue,
    PerfectByRelinking,
    PerfectByLocalSearch,
    Generate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RunState {
    Running,
    Stopping,
    Stopped,
}

/// Live counters of one agent, shared with whoever started it.
#[derive(Debug)]
pub struct AgentStatus {
    pub id: usize,
    pub seed: u64,
    iterations: AtomicU64,
    evaluations: AtomicU64,
    state: AtomicU8,
    last: Mutex<Option<Step>>,
    stop: AtomicBool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct StatusReport {
    pub id: usize,
    pub seed: u64,
    pub iterations: u64,
    pub evaluations_done: u64,
    pub state: RunState,
    pub last_action: Option<Step>,
}

impl AgentStatus {
    pub fn new(id: usize, seed: u64) -> Self {
        AgentStatus {
            id,
            seed,
            iterations: AtomicU64::new(0),
            evaluations: AtomicU64::new(0),
            state: AtomicU8::new(2),
            last: Mutex::new(None),
            stop: AtomicBool::new(false),
        }
    }

    pub fn request_stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self
            .state
            .compare_exchange(0, 1, Ordering::SeqCst, Ordering::SeqCst);
    }

    pub fn stop_requested(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    pub fn iterations(&self) -> u64 {
        self.iterations.load(Ordering::SeqCst)
    }

    pub fn state(&self) -> RunState {
        match self.state.load(Ordering::SeqCst) {
            0 => RunState::Running,
            1 => RunState::Stopping,
            _ => RunState::Stopped,
        }
    }

    pub(crate) fn set_state(&self, s: RunState) {
        let v = match s {
            RunState::Running => 0,
            RunState::Stopping => 1,
            RunState::Stopped => 2,
        };
        self.state.store(v, Ordering::SeqCst);
    }

    pub fn report(&self) -> StatusReport {
        StatusReport {
            id: self.id,
            seed: self.seed,
            iterations: self.iterations(),
            evaluations_done: self.evaluations.load(Ordering::SeqCst),
            state: self.state(),
            last_action: *self.last.lock(),
        }
    }
}

pub struct Agent {
    config: AgentConfig,
    rng: ChaCha8Rng,
    iterations: u64,
    status: Arc<AgentStatus>,
}

impl Agent {
    pub fn new(config: AgentConfig) -> Self {
        let status = Arc::new(AgentStatus::new(config.id, config.seed));
        Agent {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            iterations: 0,
            status,
        }
    }

    pub fn status(&self) -> Arc<AgentStatus> {
        self.status.clone()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// One loop iteration. `force` picks the branch used when the queues are
    /// empty instead of drawing it.
    pub fn step(&mut self, board: &Blackboard, force: Option<Step>) -> Step {
        let port = board.agent();
        let view = port.view();
        let tf = view.target.clone();
        let ls = self.config.local_search;
        let mut evals = 0usize;
        let step = if let Some(item) = port.pop(QueueKind::LocalSearch) {
            let best = port.best();
            let ctx = BoardContext::new(board.agent(), view);
            let combined = combine_rulesets(&item, &best);
            evals += local_search(&ctx, &combined, &tf, &ls, &mut self.rng).evaluations;
            let out = local_search(&ctx, &item, &tf, &ls, &mut self.rng);
            evals += out.evaluations;
            if let Some(b) = out.pareto.best(&tf) {
                port.push(QueueKind::PathRelink, b.clone());
            }
            if let Some(r) = out.pareto.random(&mut self.rng) {
                port.push(QueueKind::PathRelink, r.clone());
            }
            Step::LocalSearchQueue
        } else if let Some(item) = port.pop(QueueKind::PathRelink) {
            let best = port.best();
            let ctx = BoardContext::new(board.agent(), view);
            evals += path_relink(&ctx, &item, &best, &tf, &mut self.rng).evaluations;
            let random = port.random(&mut self.rng);
            evals += path_relink(&ctx, &item, &random, &tf, &mut self.rng).evaluations;
            Step::PathRelinkQueue
        } else {
            let choice = force.unwrap_or_else(|| {
                let u: f64 = self.rng.random();
                let [a, b, _] = self.config.pick_probabilities;
                if u < a {
                    Step::PerfectByRelinking
                } else if u < a + b {
                    Step::PerfectByLocalSearch
                } else {
                    Step::Generate
                }
            });
            match choice {
                Step::PerfectByRelinking => {
                    let best = port.best();
                    let random = port.random(&mut self.rng);
                    let ctx = BoardContext::new(board.agent(), view);
                    evals += path_relink(&ctx, &best, &random, &tf, &mut self.rng).evaluations;
                    Step::PerfectByRelinking
                }
                Step::PerfectByLocalSearch => {
                    let random = port.random(&mut self.rng);
                    let ctx = BoardContext::new(board.agent(), view);
                    evals += local_search(&ctx, &random, &tf, &ls, &mut self.rng).evaluations;
                    Step::PerfectByLocalSearch
                }
                _ => {
                    let limit = (self.iterations as usize + 1).min(self.config.iteration_cap);
                    let rs: RuleSet = generate_ruleset(
                        &view.data,
                        &self.config.generation,
                        limit,
                        &view.restrictions,
                        &mut self.rng,
                    );
                    port.offer_in(&view, &rs);
                    evals += 1;
                    port.push(QueueKind::LocalSearch, rs);
                    Step::Generate
                }
            }
        };
        self.iterations += 1;
        self.status.iterations.store(self.iterations, Ordering::SeqCst);
        self.status
            .evaluations
            .fetch_add(evals as u64, Ordering::SeqCst);
        *self.status.last.lock() = Some(step);
        step
    }

    /// Loops until a stop is requested or `max_iterations` is reached.
    pub fn run(&mut self, board: &Blackboard) {
        self.status.set_state(RunState::Running);
        while !self.status.stop_requested()
            && self.config.max_iterations.is_none_or(|m| self.iterations < m)
        {
            self.step(board, None);
        }
        self.status.set_state(RunState::Stopped);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn generate_branch_enqueues() {
        let b = Blackboard::new(fixtures::fig1());
        let mut a = Agent::new(AgentConfig::default());
        assert_eq!(a.step(&b, Some(Step::Generate)), Step::Generate);
        assert_eq!(b.queue(QueueKind::LocalSearch).len(), 1);
        assert_eq!(a.step(&b, None), Step::LocalSearchQueue);
        assert!(!b.is_empty());
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let run = || {
            let b = Blackboard::new(fixtures::fig1());
            let mut a = Agent::new(AgentConfig {
                seed: 11,
                max_iterations: Some(200),
                ..AgentConfig::default()
            });
            a.run(&b);
            (b.digest(), b.clock())
        };
        assert_eq!(run(), run());
    }
}
