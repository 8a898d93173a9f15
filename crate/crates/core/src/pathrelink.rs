//! Path relinking: walk from one ruleset to another one rule change at a
//! time, offering every intermediate ruleset to the front.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::blackboard::{RestrictionStore, SearchContext};
use crate::eval::{Evaluation, TargetFunction};
use crate::model::{Rule, RuleList, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ActionKind {
    AddInclusion,
    RemoveInclusion,
    AddExclusion,
    RemoveExclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelinkAction {
    pub kind: ActionKind,
    pub rule: Rule,
}

impl RelinkAction {
    pub fn apply(&self, rs: &RuleSet) -> RuleSet {
        match self.kind {
            ActionKind::AddInclusion => rs.with_rule(RuleList::Inclusion, self.rule.clone()),
            ActionKind::RemoveInclusion => rs.without_rule(RuleList::Inclusion, &self.rule),
            ActionKind::AddExclusion => rs.with_rule(RuleList::Exclusion, self.rule.clone()),
            ActionKind::RemoveExclusion => rs.without_rule(RuleList::Exclusion, &self.rule),
        }
    }
}

impl fmt::Display for RelinkAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = match self.kind {
            ActionKind::AddInclusion => "add inclusion",
            ActionKind::RemoveInclusion => "remove inclusion",
            ActionKind::AddExclusion => "add exclusion",
            ActionKind::RemoveExclusion => "remove exclusion",
        };
        write!(f, "{verb} {}", self.rule)
    }
}

/// Per-list set difference, in a fixed order.
pub fn diff_actions(start: &RuleSet, end: &RuleSet) -> Vec<RelinkAction> {
    let (start, end) = (start.canonicalize(), end.canonicalize());
    let mut out = Vec::new();
    let mut diff = |list: RuleList, add: ActionKind, remove: ActionKind| {
        for r in start.list(list) {
            if !end.contains(list, r) {
                out.push(RelinkAction {
                    kind: remove,
                    rule: r.clone(),
                });
            }
        }
        for r in end.list(list) {
            if !start.contains(list, r) {
                out.push(RelinkAction {
                    kind: add,
                    rule: r.clone(),
                });
            }
        }
    };
    diff(
        RuleList::Inclusion,
        ActionKind::AddInclusion,
        ActionKind::RemoveInclusion,
    );
    diff(
        RuleList::Exclusion,
        ActionKind::AddExclusion,
        ActionKind::RemoveExclusion,
    );
    out
}

/// [`diff_actions`] without removals of accepted rules and additions of
/// forbidden ones.
pub fn allowed_actions(
    start: &RuleSet,
    end: &RuleSet,
    restrictions: &RestrictionStore,
) -> Vec<RelinkAction> {
    diff_actions(start, end)
        .into_iter()
        .filter(|a| match a.kind {
            ActionKind::RemoveInclusion => !restrictions.is_accepted(&a.rule),
            ActionKind::AddInclusion | ActionKind::AddExclusion => {
                !restrictions.is_forbidden(&a.rule)
            }
            ActionKind::RemoveExclusion => true,
        })
        .collect()
}

/// The chosen action's index and the resulting ruleset.
#[derive(Debug, Clone)]
pub struct Choice {
    pub index: usize,
    pub ruleset: RuleSet,
    pub evaluations: usize,
}

/// First action that strictly improves on `current_cost`; otherwise the one
/// with the lowest cost, ties broken by dominance and then canonical text.
/// Every candidate is offered to the front.
pub fn determine_good_action<C: SearchContext>(
    ctx: &C,
    current: &RuleSet,
    current_cost: f64,
    actions: &[RelinkAction],
    tf: &TargetFunction,
) -> Choice {
    assert!(!actions.is_empty(), "no actions to choose from");
    let mut best: Option<(usize, RuleSet, f64, Option<Evaluation>, String)> = None;
    let mut evaluations = 0;
    for (i, a) in actions.iter().enumerate() {
        let candidate = a.apply(current);
        let ev = ctx.evaluate(&candidate);
        evaluations += 1;
        ctx.offer(&candidate);
        let v = ev.as_ref().map_or(f64::INFINITY, |e| tf.apply(e));
        if v < current_cost {
            return Choice {
                index: i,
                ruleset: candidate,
                evaluations,
            };
        }
        let text = candidate.to_string();
        let better = match &best {
            None => true,
            Some((_, _, bv, bev, btext)) => {
                if v != *bv {
                    v < *bv
                } else {
                    match (&ev, bev) {
                        (Some(e), Some(b)) if e.objectives.dominates(&b.objectives) => true,
                        (Some(e), Some(b)) if b.objectives.dominates(&e.objectives) => false,
                        _ => text < *btext,
                    }
                }
            }
        };
        if better {
            best = Some((i, candidate, v, ev, text));
        }
    }
    let (index, ruleset, ..) = best.expect("nonempty");
    Choice {
        index,
        ruleset,
        evaluations,
    }
}

#[derive(Debug, Clone)]
pub struct RelinkOutcome {
    /// Rulesets after each applied action; the last one is the end point.
    pub visited: Vec<RuleSet>,
    pub evaluations: usize,
}

impl RelinkOutcome {
    pub fn steps(&self) -> usize {
        self.visited.len()
    }
}

/// Walks from `start` towards `end` until no allowed action is left.
pub fn path_relink<C: SearchContext, R: Rng + ?Sized>(
    ctx: &C,
    start: &RuleSet,
    end: &RuleSet,
    tf: &TargetFunction,
    rng: &mut R,
) -> RelinkOutcome {
    let mut actions = allowed_actions(start, end, ctx.restrictions());
    actions.shuffle(rng);
    let mut current = start.canonicalize();
    let mut visited = Vec::with_capacity(actions.len());
    let mut evaluations = 0;
    let mut cost = if actions.is_empty() {
        0.0
    } else {
        evaluations += 1;
        ctx.evaluate(&current).map_or(f64::INFINITY, |e| tf.apply(&e))
    };
    while !actions.is_empty() {
        let choice = determine_good_action(ctx, &current, cost, &actions, tf);
        evaluations += choice.evaluations;
        actions.remove(choice.index);
        current = choice.ruleset;
        cost = ctx
            .evaluate(&current)
            .map_or(f64::INFINITY, |e| tf.apply(&e));
        visited.push(current.clone());
    }
    RelinkOutcome {
        visited,
        evaluations,
    }
}
