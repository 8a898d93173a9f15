//! Read-only views over the data and rulesets: aggregate statistics, record
//! samples, misclassifications, the default branch, and display formatting
//! with rounded split points.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    Column, Dataset, ModelError, Operator, Proposition, Record, Rule, RuleList, RuleSet, Value,
};

#[derive(Debug, Error, PartialEq)]
pub enum ExploreError {
    #[error("empty interval [{0}, {1})")]
    EmptyInterval(f64, f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum FeatureStats {
    #[serde(rename_all = "camelCase")]
    Nominal {
        feature: String,
        count: usize,
        top: Vec<(String, usize)>,
    },
    #[serde(rename_all = "camelCase")]
    Numeric {
        feature: String,
        count: usize,
        /// Rows whose value is undefined (computed-feature faults).
        undefined: usize,
        min: Option<f64>,
        max: Option<f64>,
        mean: Option<f64>,
        mean_defined: bool,
    },
}

/// Per-feature aggregates over the rows in `subset`.
pub fn stats(data: &Dataset, subset: &FixedBitSet) -> Vec<FeatureStats> {
    let rows: Vec<usize> = subset.ones().filter(|&r| r < data.len()).collect();
    data.features()
        .iter()
        .enumerate()
        .map(|(fi, f)| match data.column(fi) {
            Column::Nominal { codes, dict } => {
                let mut counts: HashMap<u32, usize> = HashMap::new();
                for &r in &rows {
                    *counts.entry(codes[r]).or_default() += 1;
                }
                let mut top: Vec<(String, usize)> = counts
                    .into_iter()
                    .map(|(c, n)| (dict[c as usize].clone(), n))
                    .collect();
                top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                top.truncate(10);
                FeatureStats::Nominal {
                    feature: f.name.clone(),
                    count: rows.len(),
                    top,
                }
            }
            Column::Numeric(col) => {
                let vals: Vec<f64> = rows.iter().map(|&r| col[r]).filter(|x| !x.is_nan()).collect();
                let n = vals.len();
                let mean = (n > 0).then(|| vals.iter().sum::<f64>() / n as f64);
                FeatureStats::Numeric {
                    feature: f.name.clone(),
                    count: rows.len(),
                    undefined: rows.len() - n,
                    min: vals.iter().copied().reduce(f64::min),
                    max: vals.iter().copied().reduce(f64::max),
                    mean,
                    mean_defined: mean.is_some(),
                }
            }
        })
        .collect()
}

fn sampled_rows(rows: &[usize], n: usize, seed: u64) -> Vec<usize> {
    if n >= rows.len() {
        return rows.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, rows.len(), n)
        .into_iter()
        .map(|i| rows[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Up to `n` records of `subset`, uniformly without replacement, in row order.
pub fn sample_records(data: &Dataset, subset: &FixedBitSet, n: usize, seed: u64) -> Vec<Record> {
    let rows: Vec<usize> = subset.ones().filter(|&r| r < data.len()).collect();
    sampled_rows(&rows, n, seed)
        .into_iter()
        .map(|r| data.record_at(r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Misclassified {
    /// Selected records without any cause.
    pub false_positives: Vec<Record>,
    /// Causes no selected record links to, each with all its records.
    pub missed_causes: BTreeMap<String, Vec<String>>,
}

pub fn misclassified(data: &Dataset, rs: &RuleSet) -> Result<Misclassified, ModelError> {
    let bits = data.match_bits(rs)?;
    let false_positives = bits
        .ones()
        .filter(|&r| !data.is_positive(r))
        .map(|r| data.record_at(r))
        .collect();
    let mut missed_causes = BTreeMap::new();
    for (c, name) in data.causes().iter().enumerate() {
        let records = data.cause_records(c);
        if !records.iter().any(|&r| bits.contains(r as usize)) {
            missed_causes.insert(
                name.clone(),
                records.iter().map(|&r| data.ids()[r as usize].clone()).collect(),
            );
        }
    }
    Ok(Misclassified {
        false_positives,
        missed_causes,
    })
}

/// Records matched by no inclusion rule, sampled like [`sample_records`].
pub fn default_branch(
    data: &Dataset,
    rs: &RuleSet,
    n: usize,
    seed: u64,
) -> Result<Vec<Record>, ModelError> {
    rs.validate(data.features())?;
    let mut bits = data.inclusion_bits(rs)?;
    bits.toggle_range(..);
    Ok(sample_records(data, &bits, n, seed))
}

/// Rows selected by a ruleset, or every row for `None`.
pub fn subset(data: &Dataset, rs: Option<&RuleSet>) -> Result<FixedBitSet, ModelError> {
    match rs {
        Some(rs) => data.match_bits(rs),
        None => {
            let mut all = FixedBitSet::with_capacity(data.len());
            all.insert_range(..);
            Ok(all)
        }
    }
}

/// The value in `[lo, hi)` with the fewest significant decimal digits; ties
/// go to the value closest to the midpoint, then to the lower value.
pub fn round_split_point(lo: f64, hi: f64) -> Result<f64, ExploreError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ExploreError::EmptyInterval(lo, hi));
    }
    if lo <= 0.0 && 0.0 < hi {
        return Ok(0.0);
    }
    let mid = lo + (hi - lo) / 2.0;
    let mag = lo.abs().max(hi.abs());
    let top = mag.log10().floor() as i32 + 1;
    for digits in 1..=17u32 {
        let limit = 10i128.pow(digits);
        let floor = 10i128.pow(digits - 1);
        let mut found: Vec<f64> = Vec::new();
        for e in ((top - 20 - digits as i32)..=top).rev() {
            let scale = 10f64.powi(e);
            let (a, b) = (lo / scale, hi / scale);
            if !a.is_finite() || !b.is_finite() {
                continue;
            }
            let kmin = (a.floor() as i128 - 1).max(-limit);
            let kmax = (b.ceil() as i128 + 1).min(limit);
            if kmin > kmax || kmax - kmin > 1_000_000 {
                continue;
            }
            for k in kmin..=kmax {
                let ka = k.abs();
                if ka < floor || ka >= limit || (digits > 1 && ka % 10 == 0) {
                    continue;
                }
                let v: f64 = format!("{k}e{e}").parse().expect("valid float literal");
                if lo <= v && v < hi && !found.contains(&v) {
                    found.push(v);
                }
            }
        }
        if !found.is_empty() {
            found.sort_by(|x, y| {
                (x - mid)
                    .abs()
                    .total_cmp(&(y - mid).abs())
                    .then(x.total_cmp(y))
            });
            return Ok(found[0]);
        }
    }
    Ok(lo)
}

/// A proposition with its threshold rounded within the gap between data
/// values, so it selects exactly the same records.
pub fn round_proposition(data: &Dataset, p: &Proposition) -> Proposition {
    let Value::Numeric(t) = p.value() else {
        return p.clone();
    };
    let Some(fi) = data.feature_index(p.feature()) else {
        return p.clone();
    };
    let values = data.sorted_values(fi);
    let t = *t;
    let rounded = match p.op() {
        Operator::LessOrEqual => {
            let lo = values.iter().rev().find(|v| **v <= t).copied();
            let hi = values.iter().find(|v| **v > t).copied();
            match (lo, hi) {
                (Some(lo), Some(hi)) => round_split_point(lo, hi).ok(),
                _ => None,
            }
        }
        _ => {
            let lo = values.iter().rev().find(|v| **v < t).copied();
            let hi = values.iter().find(|v| **v >= t).copied();
            match (lo, hi) {
                (Some(lo), Some(hi)) => round_split_point(-hi, -lo).ok().map(|x| -x),
                _ => None,
            }
        }
    };
    match rounded {
        Some(x) => p.with_value(Value::numeric(x)).unwrap_or_else(|_| p.clone()),
        None => p.clone(),
    }
}

pub fn round_rule(data: &Dataset, rule: &Rule) -> Rule {
    Rule::new(rule.propositions().iter().map(|p| round_proposition(data, p)))
        .unwrap_or_else(|_| rule.clone())
}

/// The ruleset with every numeric threshold rounded.
pub fn round_ruleset(data: &Dataset, rs: &RuleSet) -> RuleSet {
    let round = |rules: &[Rule]| rules.iter().map(|r| round_rule(data, r)).collect();
    RuleSet::new(round(&rs.inclusions), round(&rs.exclusions))
}

fn grouped(rules: &[Rule]) -> Vec<&Rule> {
    let mut v: Vec<&Rule> = rules.iter().collect();
    v.sort_by_cached_key(|r| {
        let mut names: Vec<&str> = r.features();
        names.sort_unstable();
        names.dedup();
        (names.join("\u{0}"), r.to_string())
    });
    v
}

/// Display text: rounded thresholds, rules with the same feature set next to
/// each other, one rule per line. The text parses back to an equivalent
/// ruleset.
pub fn format_ruleset(data: &Dataset, rs: &RuleSet) -> String {
    let rounded = round_ruleset(data, rs);
    let mut out = String::new();
    for list in [RuleList::Inclusion, RuleList::Exclusion] {
        let rules = grouped(rounded.list(list));
        if list == RuleList::Exclusion && rules.is_empty() {
            continue;
        }
        if list == RuleList::Inclusion && rules.is_empty() {
            out.push_str("(false)");
        }
        for (i, r) in rules.into_iter().enumerate() {
            match (list, i) {
                (RuleList::Inclusion, 0) => {}
                (RuleList::Exclusion, 0) => out.push_str("\nexcept "),
                _ => out.push_str("\nor "),
            }
            let _ = write!(out, "{r}");
        }
    }
    out
}
