//! Multi-objective hill climbing that alternates between a rule adding and a
//! rule adjusting neighborhood, keeping a local Pareto set of visited rulesets.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blackboard::{insert_front, AddOutcome, RestrictionStore, SearchContext};
use crate::eval::{Evaluation, TargetFunction};
use crate::generate::random_proposition;
use crate::model::{Dataset, Rule, RuleList, RuleSet, Value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LocalSearchConfig {
    /// Consecutive equal-cost moves allowed before leaving a neighborhood.
    pub plateau_limit: usize,
    /// Random proposition additions per adjusting step.
    pub random_additions: usize,
    /// Hard cap on moves, a safety net only.
    pub max_steps: usize,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            plateau_limit: 8,
            random_additions: 3,
            max_steps: 10_000,
        }
    }
}

/// Non-dominated set of visited rulesets.
#[derive(Debug, Clone, Default)]
pub struct LocalParetoSet {
    entries: BTreeMap<RuleSet, Evaluation>,
}

impl LocalParetoSet {
    /// Adds if not present and not dominated; returns whether it was added.
    pub fn add(&mut self, rs: RuleSet, ev: Evaluation) -> bool {
        insert_front(&mut self.entries, rs, ev) == AddOutcome::Added
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, rs: &RuleSet) -> bool {
        self.entries.contains_key(rs)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RuleSet, &Evaluation)> {
        self.entries.iter()
    }

    /// Lowest target value; ties by complexity then canonical text.
    pub fn best(&self, tf: &TargetFunction) -> Option<&RuleSet> {
        self.entries
            .iter()
            .map(|(rs, ev)| ((tf.apply(ev), ev.result.complexity(), rs.to_string()), rs))
            .min_by(|a, b| {
                a.0 .0
                    .total_cmp(&b.0 .0)
                    .then(a.0 .1.cmp(&b.0 .1))
                    .then_with(|| a.0 .2.cmp(&b.0 .2))
            })
            .map(|(_, rs)| rs)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&RuleSet> {
        let all: Vec<&RuleSet> = self.entries.keys().collect();
        all.choose(rng).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    RuleAdding,
    RuleAdjusting,
}

/// A neighbor and the rule that was last added or adjusted to reach it.
pub type Move = (RuleSet, Option<(RuleList, Rule)>);

fn admissible(rs: &RuleSet, restrictions: &RestrictionStore) -> bool {
    restrictions.allows(rs)
}

/// `current` plus one pool rule it does not contain yet, in the rule's own list.
pub fn neighbors_adding(
    current: &RuleSet,
    pool: &[(RuleList, Rule)],
    restrictions: &RestrictionStore,
) -> Vec<Move> {
    pool.iter()
        .filter(|(list, r)| !current.contains(*list, r) && !restrictions.is_forbidden(r))
        .map(|(list, r)| (current.with_rule(*list, r.clone()), Some((*list, r.clone()))))
        .filter(|(rs, _)| admissible(rs, restrictions))
        .collect()
}

/// Distinct data values of a numeric feature directly below and above `t`.
pub fn adjacent_values(sorted: &[f64], t: f64) -> (Option<f64>, Option<f64>) {
    let below = sorted.iter().rev().find(|v| **v < t).copied();
    let above = sorted.iter().find(|v| **v > t).copied();
    (below, above)
}

/// Variations of the last added rule: each proposition removed, numeric
/// thresholds moved to the neighbouring data values, and `k` random
/// propositions added. Accepted rules are left alone.
pub fn neighbors_adjusting<R: Rng + ?Sized>(
    current: &RuleSet,
    last: &(RuleList, Rule),
    data: &Dataset,
    restrictions: &RestrictionStore,
    k: usize,
    rng: &mut R,
) -> Vec<Move> {
    let (list, rule) = last;
    if !current.contains(*list, rule)
        || (*list == RuleList::Inclusion && restrictions.is_accepted(rule))
    {
        return Vec::new();
    }
    let base = current.without_rule(*list, rule);
    let mut variants: Vec<Option<Rule>> = Vec::new();
    for i in 0..rule.len() {
        variants.push(rule.without(i));
    }
    for (i, p) in rule.propositions().iter().enumerate() {
        if let Value::Numeric(t) = p.value() {
            let Some(fi) = data.feature_index(p.feature()) else {
                continue;
            };
            let (below, above) = adjacent_values(data.sorted_values(fi), *t);
            for v in [below, above].into_iter().flatten() {
                if let Ok(q) = p.with_value(Value::numeric(v)) {
                    if let Ok(r) = rule.replacing(i, q) {
                        variants.push(Some(r));
                    }
                }
            }
        }
    }
    if !data.is_empty() && !data.features().is_empty() {
        let matching: Vec<usize> = data
            .rule_bits(rule)
            .map(|b| b.ones().collect())
            .unwrap_or_default();
        for _ in 0..k {
            let row = match matching.choose(rng) {
                Some(&r) => r,
                None => rng.random_range(0..data.len()),
            };
            let f = rng.random_range(0..data.features().len());
            if let Some(p) = random_proposition(data, f, row, rng) {
                if let Ok(r) = rule.with(p) {
                    variants.push(Some(r));
                }
            }
        }
    }
    let mut out: Vec<Move> = Vec::new();
    for v in variants {
        let (rs, last) = match v {
            Some(r) => {
                if restrictions.is_forbidden(&r) {
                    continue;
                }
                (base.with_rule(*list, r.clone()), Some((*list, r)))
            }
            None => (base.clone(), None),
        };
        if rs != *current && admissible(&rs, restrictions) && !out.iter().any(|(x, _)| *x == rs) {
            out.push((rs, last));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LocalSearchOutcome {
    pub pareto: LocalParetoSet,
    pub steps: usize,
    pub plateau_moves: usize,
    pub evaluations: usize,
    pub last: RuleSet,
}

/// Hill climbing from the empty ruleset (plus accepted rules), using the
/// rules of `initial` as the candidate pool. Every evaluated neighbor is also
/// offered to the global front through `ctx`.
pub fn local_search<C: SearchContext, R: Rng + ?Sized>(
    ctx: &C,
    initial: &RuleSet,
    tf: &TargetFunction,
    config: &LocalSearchConfig,
    rng: &mut R,
) -> LocalSearchOutcome {
    let restrictions = ctx.restrictions();
    let initial = initial.canonicalize();
    let pool: Vec<(RuleList, Rule)> = initial.rules().map(|(l, r)| (l, r.clone())).collect();
    let mut pareto = LocalParetoSet::default();
    let mut evaluations = 0;
    if let Some(ev) = ctx.evaluate(&initial) {
        evaluations += 1;
        pareto.add(initial.clone(), ev);
    }
    let mut current = restrictions.complete(&RuleSet::empty());
    let Some(mut current_ev) = ctx.evaluate(&current) else {
        return LocalSearchOutcome {
            pareto,
            steps: 0,
            plateau_moves: 0,
            evaluations,
            last: current,
        };
    };
    evaluations += 1;
    pareto.add(current.clone(), current_ev.clone());

    let mut kind = Neighborhood::RuleAdding;
    let mut last: Option<(RuleList, Rule)> = None;
    let (mut steps, mut plateau_moves, mut plateau_run) = (0, 0, 0);
    while steps < config.max_steps {
        let mut moves = match (kind, &last) {
            (Neighborhood::RuleAdding, _) => neighbors_adding(&current, &pool, restrictions),
            (Neighborhood::RuleAdjusting, Some(l)) => neighbors_adjusting(
                &current,
                l,
                ctx.data(),
                restrictions,
                config.random_additions,
                rng,
            ),
            (Neighborhood::RuleAdjusting, None) => Vec::new(),
        };
        moves.shuffle(rng);
        let current_tf = tf.apply(&current_ev);
        let mut best: Option<(Move, Evaluation)> = None;
        let mut best_tf = current_tf;
        for mv in moves {
            let Some(ev) = ctx.evaluate(&mv.0) else {
                continue;
            };
            evaluations += 1;
            let added = pareto.add(mv.0.clone(), ev.clone());
            ctx.offer(&mv.0);
            let v = tf.apply(&ev);
            if v < best_tf || (v == best_tf && added) {
                best_tf = v;
                best = Some((mv, ev));
            }
        }
        let on_plateau = best_tf >= current_tf;
        match best {
            Some(b) if !(on_plateau && plateau_run >= config.plateau_limit) => {
                if on_plateau {
                    plateau_run += 1;
                    plateau_moves += 1;
                } else {
                    plateau_run = 0;
                }
                let ((rs, l), ev) = b;
                current = rs;
                current_ev = ev;
                last = l;
                kind = Neighborhood::RuleAdjusting;
                steps += 1;
            }
            _ => {
                if kind == Neighborhood::RuleAdjusting {
                    kind = Neighborhood::RuleAdding;
                } else {
                    break;
                }
            }
        }
    }
    LocalSearchOutcome {
        pareto,
        steps,
        plateau_moves,
        evaluations,
        last: current,
    }
}

/// Canonical union of two rulesets' lists.
pub fn combine_rulesets(a: &RuleSet, b: &RuleSet) -> RuleSet {
    a.union(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn adjacent_distinct_values() {
        assert_eq!(adjacent_values(&[3.0, 5.0, 8.0], 5.0), (Some(3.0), Some(8.0)));
        assert_eq!(adjacent_values(&[3.0, 5.0, 8.0], 3.0), (None, Some(5.0)));
    }

    #[test]
    fn adding_skips_present_and_forbidden() {
        let d = fixtures::fig1();
        let r = |t: &str| Rule::parse(t, d.features()).unwrap();
        let pool = vec![
            (RuleList::Inclusion, r("lang = c")),
            (RuleList::Inclusion, r("lang = java")),
            (RuleList::Exclusion, r("size <= 3")),
        ];
        let store = RestrictionStore::default();
        assert_eq!(neighbors_adding(&RuleSet::empty(), &pool, &store).len(), 3);
        let full = RuleSet::new(vec![r("lang = c"), r("lang = java")], vec![r("size <= 3")]);
        assert!(neighbors_adding(&full, &pool, &store).is_empty());
    }
}
