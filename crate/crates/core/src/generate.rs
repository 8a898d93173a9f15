//! Randomized greedy generation of new rulesets.
//!
//! Records are first labelled T/F by a randomized greedy set cover over the
//! causes, then a separate-and-conquer learner builds exclusion and inclusion
//! rules on a random feature subspace and record sample.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blackboard::RestrictionStore;
use crate::model::{Column, Dataset, Operator, Proposition, Rule, RuleList, RuleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GenerationConfig {
    pub feature_keep_probability: f64,
    pub max_sample_size: usize,
    pub majority_ratio_range: (f64, f64),
    pub random_rule_probability: f64,
    pub count_limit_cap: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            feature_keep_probability: 0.5,
            max_sample_size: 10_000,
            majority_ratio_range: (1.0, 3.0),
            random_rule_probability: 0.05,
            count_limit_cap: 30,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        let p = |x: f64| x > 0.0 && x <= 1.0;
        if !p(self.feature_keep_probability) {
            return Err("featureKeepProbability must be in (0,1]".into());
        }
        if !(0.0..=1.0).contains(&self.random_rule_probability) {
            return Err("randomRuleProbability must be in [0,1]".into());
        }
        let (lo, hi) = self.majority_ratio_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err("majorityRatioRange must be an ordered positive range".into());
        }
        if self.max_sample_size == 0 {
            return Err("maxSampleSize must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchBias {
    Precision,
    Laplace,
    MEstimate(f64),
    RelativeCost(f64),
    RandomRule,
}

impl SearchBias {
    /// Draws a bias: a random rule with probability `p_random`, otherwise one
    /// of the four heuristics with freshly drawn parameters.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, p_random: f64) -> SearchBias {
        if rng.random_bool(p_random) {
            return SearchBias::RandomRule;
        }
        match rng.random_range(0..4) {
            0 => SearchBias::Precision,
            1 => SearchBias::Laplace,
            2 => SearchBias::MEstimate((rng.random_range(0.0..=64f64.ln())).exp()),
            _ => SearchBias::RelativeCost(rng.random_range(0.05..=0.95)),
        }
    }

    /// Heuristic value of a rule covering `tp` of `p` targets and `fp` of `n`
    /// others. Higher is better.
    pub fn score(self, tp: usize, fp: usize, p: usize, n: usize) -> f64 {
        let (tp, fp, pf, nf) = (tp as f64, fp as f64, p as f64, n as f64);
        match self {
            SearchBias::Precision | SearchBias::RandomRule => {
                if tp + fp == 0.0 {
                    0.0
                } else {
                    tp / (tp + fp)
                }
            }
            SearchBias::Laplace => (tp + 1.0) / (tp + fp + 2.0),
            SearchBias::MEstimate(m) => {
                let prior = if pf + nf == 0.0 { 0.0 } else { pf / (pf + nf) };
                (tp + m * prior) / (tp + fp + m)
            }
            SearchBias::RelativeCost(c) => {
                let a = if p == 0 { 0.0 } else { tp / pf };
                let b = if n == 0 { 0.0 } else { fp / nf };
                c * a - (1.0 - c) * b
            }
        }
    }
}

/// Randomized greedy set cover: returns the T flag per row. The candidate
/// list holds the three rows covering the most not-yet-covered causes.
pub fn greedy_set_cover_label<R: Rng + ?Sized>(data: &Dataset, rng: &mut R) -> Vec<bool> {
    let n = data.len();
    let mut label = vec![false; n];
    let mut gain: Vec<usize> = (0..n).map(|r| data.record_causes(r).len()).collect();
    let mut order: BTreeSet<(Reverse<usize>, usize)> = (0..n)
        .filter(|&r| gain[r] > 0)
        .map(|r| (Reverse(gain[r]), r))
        .collect();
    let mut covered = vec![false; data.cause_count()];
    while !order.is_empty() {
        let rcl: Vec<usize> = order.iter().take(3).map(|&(_, r)| r).collect();
        let pick = *rcl.choose(rng).expect("nonempty");
        label[pick] = true;
        order.remove(&(Reverse(gain[pick]), pick));
        gain[pick] = 0;
        for &c in data.record_causes(pick) {
            let c = c as usize;
            if covered[c] {
                continue;
            }
            covered[c] = true;
            for &r in data.cause_records(c) {
                let r = r as usize;
                if gain[r] == 0 {
                    continue;
                }
                order.remove(&(Reverse(gain[r]), r));
                gain[r] -= 1;
                if gain[r] > 0 {
                    order.insert((Reverse(gain[r]), r));
                }
            }
        }
    }
    label
}

/// Rows and labels the learner works on, plus the usable features.
#[derive(Debug, Clone)]
pub struct Sample {
    pub rows: Vec<usize>,
    pub labels: Vec<bool>,
    pub features: Vec<usize>,
}

impl Sample {
    /// All rows and features.
    pub fn full(data: &Dataset, labels: &[bool]) -> Sample {
        Sample {
            rows: (0..data.len()).collect(),
            labels: labels.to_vec(),
            features: (0..data.features().len()).collect(),
        }
    }

    /// Random feature subspace and a record sample with the majority class
    /// downsampled.
    pub fn draw<R: Rng + ?Sized>(
        data: &Dataset,
        labels: &[bool],
        config: &GenerationConfig,
        rng: &mut R,
    ) -> Sample {
        let nf = data.features().len();
        let mut features: Vec<usize> = (0..nf)
            .filter(|_| rng.random_bool(config.feature_keep_probability))
            .collect();
        if features.is_empty() && nf > 0 {
            features.push(rng.random_range(0..nf));
        }
        let pos: Vec<usize> = (0..data.len()).filter(|&r| labels[r]).collect();
        let neg: Vec<usize> = (0..data.len()).filter(|&r| !labels[r]).collect();
        let (minority, majority) = if pos.len() <= neg.len() {
            (pos, neg)
        } else {
            (neg, pos)
        };
        let (lo, hi) = config.majority_ratio_range;
        let ratio = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let keep = if minority.is_empty() {
            majority.len()
        } else {
            ((minority.len() as f64 * ratio).ceil() as usize).min(majority.len())
        };
        let mut rows = minority;
        rows.extend(pick(&majority, keep, rng));
        if rows.len() > config.max_sample_size {
            rows = pick(&rows, config.max_sample_size, rng);
        }
        rows.sort_unstable();
        let labels = rows.iter().map(|&r| labels[r]).collect();
        Sample {
            rows,
            labels,
            features,
        }
    }
}

fn pick<R: Rng + ?Sized>(from: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    if k >= from.len() {
        return from.to_vec();
    }
    sample(rng, from.len(), k).into_iter().map(|i| from[i]).collect()
}

/// A proposition considered during the greedy search, with its cover.
struct Candidate {
    prop: Proposition,
    tp: usize,
    fp: usize,
}

fn candidates(
    data: &Dataset,
    feature: usize,
    covered: &[usize],
    rows: &[usize],
    target: &[bool],
) -> Vec<Candidate> {
    let name = data.features()[feature].name.clone();
    let total_tp = covered.iter().filter(|&&i| target[i]).count();
    let total_fp = covered.len() - total_tp;
    let mut out = Vec::new();
    match data.column(feature) {
        Column::Nominal { codes, dict } => {
            let mut counts: HashMap<u32, (usize, usize)> = HashMap::new();
            for &i in covered {
                let e = counts.entry(codes[rows[i]]).or_default();
                if target[i] {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
            let mut codes_seen: Vec<_> = counts.into_iter().collect();
            codes_seen.sort_unstable_by_key(|(c, _)| *c);
            for (code, (tp, fp)) in codes_seen {
                let v = dict[code as usize].clone();
                out.push(Candidate {
                    prop: Proposition::nominal(name.clone(), Operator::Equals, v.clone()),
                    tp,
                    fp,
                });
                out.push(Candidate {
                    prop: Proposition::nominal(name.clone(), Operator::NotEquals, v),
                    tp: total_tp - tp,
                    fp: total_fp - fp,
                });
            }
        }
        Column::Numeric(col) => {
            let mut vals: Vec<(f64, bool)> = covered
                .iter()
                .map(|&i| (col[rows[i]], target[i]))
                .filter(|(x, _)| !x.is_nan())
                .collect();
            vals.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let (mut tp, mut fp) = (0, 0);
            for w in 0..vals.len() {
                if vals[w].1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                if w + 1 < vals.len() && vals[w + 1].0 > vals[w].0 {
                    let mid = vals[w].0 + (vals[w + 1].0 - vals[w].0) / 2.0;
                    let all_tp = vals.iter().filter(|v| v.1).count();
                    let all_fp = vals.len() - all_tp;
                    out.push(Candidate {
                        prop: Proposition::numeric(name.clone(), Operator::LessOrEqual, mid),
                        tp,
                        fp,
                    });
                    out.push(Candidate {
                        prop: Proposition::numeric(name.clone(), Operator::GreaterOrEqual, mid),
                        tp: all_tp - tp,
                        fp: all_fp - fp,
                    });
                }
            }
        }
    }
    out
}

/// Greedy top-down search for one rule over the sample rows listed in
/// `active` (indices into `sample.rows`), targeting rows whose label equals
/// `target_label`.
pub fn find_rule<R: Rng + ?Sized>(
    data: &Dataset,
    sample: &Sample,
    active: &[usize],
    target_label: bool,
    bias: SearchBias,
    restrictions: &RestrictionStore,
    rng: &mut R,
) -> Option<Rule> {
    let target: Vec<bool> = sample.labels.iter().map(|&l| l == target_label).collect();
    let max_props = restrictions.limits.max_propositions.unwrap_or(usize::MAX);
    if max_props == 0 {
        return None;
    }
    if bias == SearchBias::RandomRule {
        return random_rule(data, sample, active, &target, restrictions, rng);
    }
    let p = active.iter().filter(|&&i| target[i]).count();
    let n = active.len() - p;
    if p == 0 {
        return None;
    }
    let mut covered: Vec<usize> = active.to_vec();
    let mut props: Vec<Proposition> = Vec::new();
    let mut current = bias.score(p, n, p, n);
    loop {
        let mut best: Option<(f64, Proposition)> = None;
        let mut ties = 0u32;
        for &f in &sample.features {
            for c in candidates(data, f, &covered, &sample.rows, &target) {
                if c.tp == 0 || c.tp + c.fp == covered.len() {
                    continue;
                }
                if !can_add(&props, &c.prop) || restrictions.proposition_forbidden(&c.prop) {
                    continue;
                }
                let s = bias.score(c.tp, c.fp, p, n);
                match &best {
                    Some((b, _)) if s < *b => {}
                    Some((b, _)) if s == *b => {
                        ties += 1;
                        if rng.random_range(0..=ties) == 0 {
                            best = Some((s, c.prop));
                        }
                    }
                    _ => {
                        ties = 0;
                        best = Some((s, c.prop));
                    }
                }
            }
        }
        let Some((score, prop)) = best.filter(|(s, _)| *s > current) else {
            break;
        };
        let fi = data.feature_index(prop.feature()).expect("sampled feature");
        covered.retain(|&i| data.holds(&prop, fi, sample.rows[i]));
        props.push(prop);
        current = score;
        let fp = covered.iter().filter(|&&i| !target[i]).count();
        if fp == 0 || props.len() >= max_props {
            break;
        }
    }
    if props.is_empty() {
        return None;
    }
    Rule::new(props).ok()
}

/// Rules allow at most one `=`, `<=` and `>=` per feature.
fn can_add(props: &[Proposition], p: &Proposition) -> bool {
    !props.iter().any(|q| {
        q == p || (q.feature() == p.feature() && q.op() == p.op() && p.op() != Operator::NotEquals)
    })
}

/// One to three random propositions that all hold on some uncovered target
/// row, built from that row's values and the data's value range.
fn random_rule<R: Rng + ?Sized>(
    data: &Dataset,
    sample: &Sample,
    active: &[usize],
    target: &[bool],
    restrictions: &RestrictionStore,
    rng: &mut R,
) -> Option<Rule> {
    let targets: Vec<usize> = active.iter().copied().filter(|&i| target[i]).collect();
    if targets.is_empty() || sample.features.is_empty() {
        return None;
    }
    let max_props = restrictions.limits.max_propositions.unwrap_or(usize::MAX);
    for _ in 0..20 {
        let row = sample.rows[*targets.choose(rng).expect("nonempty")];
        let count = rng.random_range(1..=3usize).min(max_props);
        let mut props = Vec::new();
        for _ in 0..count {
            let f = *sample.features.choose(rng).expect("nonempty");
            if let Some(p) = random_proposition(data, f, row, rng) {
                if can_add(&props, &p) && !restrictions.proposition_forbidden(&p) {
                    props.push(p);
                }
            }
        }
        if props.is_empty() {
            continue;
        }
        if let Ok(rule) = Rule::new(props) {
            if !restrictions.is_forbidden(&rule) {
                return Some(rule);
            }
        }
    }
    None
}

/// A random proposition over feature `f` that holds on `row`.
pub fn random_proposition<R: Rng + ?Sized>(
    data: &Dataset,
    f: usize,
    row: usize,
    rng: &mut R,
) -> Option<Proposition> {
    let name = data.features()[f].name.clone();
    match data.column(f) {
        Column::Nominal { codes, dict } => {
            let own = codes[row] as usize;
            if dict.len() > 1 && rng.random_bool(0.5) {
                let other = loop {
                    let c = rng.random_range(0..dict.len());
                    if c != own {
                        break c;
                    }
                };
                Some(Proposition::nominal(name, Operator::NotEquals, dict[other].clone()))
            } else {
                Some(Proposition::nominal(name, Operator::Equals, dict[own].clone()))
            }
        }
        Column::Numeric(col) => {
            let x = col[row];
            if x.is_nan() {
                return None;
            }
            let values = data.sorted_values(f);
            if rng.random_bool(0.5) {
                let above: Vec<f64> = values.iter().copied().filter(|v| *v >= x).collect();
                let t = *above.choose(rng)?;
                Some(Proposition::numeric(name, Operator::LessOrEqual, t))
            } else {
                let below: Vec<f64> = values.iter().copied().filter(|v| *v <= x).collect();
                let t = *below.choose(rng)?;
                Some(Proposition::numeric(name, Operator::GreaterOrEqual, t))
            }
        }
    }
}

/// Learns up to `max_rules` rules for `target_label` by separate-and-conquer.
fn learn_rules<R: Rng + ?Sized>(
    data: &Dataset,
    sample: &Sample,
    target_label: bool,
    max_rules: usize,
    config: &GenerationConfig,
    restrictions: &RestrictionStore,
    rng: &mut R,
) -> Vec<Rule> {
    let mut uncovered: Vec<usize> = (0..sample.rows.len()).collect();
    let mut rules: Vec<Rule> = Vec::new();
    while rules.len() < max_rules {
        let mut found = None;
        for _ in 0..10 {
            let bias = SearchBias::draw(rng, config.random_rule_probability);
            match find_rule(data, sample, &uncovered, target_label, bias, restrictions, rng) {
                Some(rule) if restrictions.is_forbidden(&rule) || rules.contains(&rule) => {}
                other => {
                    found = other;
                    break;
                }
            }
        }
        let Some(rule) = found else { break };
        uncovered.retain(|&i| {
            !rule.propositions().iter().all(|p| {
                let fi = data.feature_index(p.feature()).expect("known feature");
                data.holds(p, fi, sample.rows[i])
            })
        });
        rules.push(rule);
    }
    rules
}

/// Generates one ruleset. Exclusions (target F) and inclusions (target T)
/// are learned independently on the full sample; accepted rules are added.
pub fn generate_ruleset<R: Rng + ?Sized>(
    data: &Dataset,
    config: &GenerationConfig,
    count_limit: usize,
    restrictions: &RestrictionStore,
    rng: &mut R,
) -> RuleSet {
    let count_limit = count_limit.min(config.count_limit_cap);
    let labels = greedy_set_cover_label(data, rng);
    let sample = Sample::draw(data, &labels, config, rng);
    let limits = restrictions.limits;

    let max_excl = rng
        .random_range(0..=count_limit)
        .min(limits.max_exclusions.unwrap_or(usize::MAX));
    let exclusions = learn_rules(data, &sample, false, max_excl, config, restrictions, rng);

    let max_incl = rng
        .random_range(0..=count_limit)
        .min(limits.max_inclusions.unwrap_or(usize::MAX));
    let inclusions = learn_rules(data, &sample, true, max_incl, config, restrictions, rng);

    let mut rs = RuleSet::new(inclusions, exclusions);
    for rule in restrictions.accepted() {
        rs = rs.with_rule(RuleList::Inclusion, rule);
    }
    rs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bias_scores() {
        assert_eq!(SearchBias::Precision.score(5, 0, 10, 10), 1.0);
        assert!((SearchBias::Laplace.score(5, 0, 10, 10) - 6.0 / 7.0).abs() < 1e-12);
        assert!((SearchBias::MEstimate(2.0).score(5, 0, 10, 10) - 6.0 / 7.0).abs() < 1e-12);
        assert!((SearchBias::RelativeCost(0.5).score(5, 5, 10, 10) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn labeling_covers_all_causes() {
        let d = fixtures::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let l = greedy_set_cover_label(&d, &mut rng);
            let mut covered = BTreeSet::new();
            for (r, &t) in l.iter().enumerate() {
                if t {
                    covered.extend(d.record_causes(r).iter().copied());
                }
            }
            assert_eq!(covered.len(), 2);
            assert!(!l[4]);
        }
    }

    #[test]
    fn perfect_split() {
        let d = fixtures::fig1();
        let labels = vec![true, true, false, false, false];
        let mut s = Sample::full(&d, &labels);
        s.features = vec![0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let store = RestrictionStore::default();
        let active: Vec<usize> = (0..5).collect();
        // I5 is java too, but nothing on this subspace separates it
        let r = find_rule(&d, &s, &active, true, SearchBias::Precision, &store, &mut rng).unwrap();
        assert_eq!(r.to_string(), "(lang = java)");
        let all_f = vec![false; 5];
        let s = Sample::full(&d, &all_f);
        assert!(find_rule(&d, &s, &active, true, SearchBias::Precision, &store, &mut rng).is_none());
    }

    #[test]
    fn count_limit_zero_gives_accepted_only() {
        let d = fixtures::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rs = generate_ruleset(&d, &GenerationConfig::default(), 0, &RestrictionStore::default(), &mut rng);
        assert!(rs.is_empty());
    }
}
